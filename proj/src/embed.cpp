#include "sgp/embed.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <future>
#include <map>
#include <mutex>

#include "sgp/png.hpp"
#include "sgp/service_client.hpp"

namespace sgp {

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

EmbeddingVector normalize(const EmbeddingVector& v) {
  for (double x : v.values)
    if (!std::isfinite(x)) throw std::domain_error("cannot normalize a non-finite vector");
  double n = v.norm();
  if (n == 0.0) throw std::domain_error("cannot normalize a zero vector");
  std::vector<double> out(v.values.size());
  std::transform(v.values.begin(), v.values.end(), out.begin(), [n](double x) { return x / n; });
  return EmbeddingVector(std::move(out));
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("cosine: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += a.values[i] * b.values[i];
  return std::clamp(sum, -1.0, 1.0);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

// Integer histogram to unit vector with a single final normalization.
EmbeddingVector from_counts(const std::array<std::uint64_t, kReferenceDim>& counts) {
  std::uint64_t sum_sq = 0;
  for (std::uint64_t c : counts) sum_sq += c * c;
  std::vector<double> values(kReferenceDim, 0.0);
  if (sum_sq == 0) {
    values[0] = 1.0;
    return EmbeddingVector(std::move(values));
  }
  double n = std::sqrt(static_cast<double>(sum_sq));
  for (std::size_t i = 0; i < kReferenceDim; ++i) values[i] = static_cast<double>(counts[i]) / n;
  return EmbeddingVector(std::move(values));
}

}  // namespace

EmbeddingVector reference_embed_text(std::string_view caption) {
  std::array<std::uint64_t, kReferenceDim> counts{};
  std::string token;
  auto flush = [&] {
    if (!token.empty()) ++counts[fnv1a64(token) % kReferenceDim];
    token.clear();
  };
  for (unsigned char ch : caption) {
    if (ch < 0x80 && std::isalnum(ch))
      token += static_cast<char>(std::tolower(ch));
    else
      flush();
  }
  flush();
  return from_counts(counts);
}

EmbeddingVector reference_embed_image(const RasterImage& image) {
  std::array<std::uint64_t, kReferenceDim> counts{};
  for (std::size_t i = 0; i + 2 < image.data.size(); i += 3)
    ++counts[16 * (image.data[i] / 64) + 4 * (image.data[i + 1] / 64) + image.data[i + 2] / 64];
  return from_counts(counts);
}

EmbeddingVector Embedder::embed_text(const std::string& text) {
  return embed_texts(std::span<const std::string>(&text, 1)).at(0);
}

EmbeddingVector Embedder::embed_image(const RasterImage& image) {
  return embed_images(std::span<const RasterImage>(&image, 1)).at(0);
}

std::vector<EmbeddingVector> ReferenceEmbedder::embed_texts(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(reference_embed_text(t));
  return out;
}

std::vector<EmbeddingVector> ReferenceEmbedder::embed_images(std::span<const RasterImage> images) {
  std::vector<EmbeddingVector> out;
  out.reserve(images.size());
  for (const RasterImage& img : images) out.push_back(reference_embed_image(img));
  return out;
}

struct RemoteEmbedder::Memo {
  std::mutex mutex;
  std::map<std::string, EmbeddingVector> entries;
};

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::string model_tag, RemoteOptions options)
    : endpoint_(std::move(endpoint)), model_tag_(std::move(model_tag)), options_(options),
      memo_(std::make_unique<Memo>()) {
  options_.max_batch = std::max<std::size_t>(1, options_.max_batch);
  options_.max_in_flight = std::max<std::size_t>(1, options_.max_in_flight);
}

RemoteEmbedder::~RemoteEmbedder() = default;

std::vector<EmbeddingVector> RemoteEmbedder::embed_payloads(const std::string& route,
                                                            const std::string& field,
                                                            const std::vector<std::string>& payloads,
                                                            char memo_prefix) {
  std::vector<std::optional<EmbeddingVector>> results(payloads.size());
  std::vector<std::size_t> missing;
  {
    std::lock_guard lock(memo_->mutex);
    for (std::size_t i = 0; i < payloads.size(); ++i) {
      auto it = memo_->entries.find(memo_prefix + payloads[i]);
      if (it != memo_->entries.end())
        results[i] = it->second;
      else
        missing.push_back(i);
    }
  }

  struct Chunk {
    std::size_t first;  // offset into `missing`
    std::size_t count;
  };
  std::vector<Chunk> chunks;
  for (std::size_t off = 0; off < missing.size(); off += options_.max_batch)
    chunks.push_back({off, std::min(options_.max_batch, missing.size() - off)});

  ServiceClient client(endpoint_, options_.timeout_seconds, options_.auth_token);
  auto send = [&](std::size_t chunk_id) {
    const Chunk& chunk = chunks[chunk_id];
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t k = 0; k < chunk.count; ++k) items.push_back(payloads[missing[chunk.first + k]]);
    nlohmann::json reply = client.post(
        route, {{"model_tag", model_tag_}, {field, items}, {"request_id", chunk_id}});
    if (reply.contains("request_id") && reply["request_id"] != chunk_id)
      throw ServiceError(route + ": reply request_id does not match request");
    if (!reply.contains("vectors") || !reply["vectors"].is_array())
      throw ServiceError(route + ": reply lacks a vectors array");
    const auto& vectors = reply["vectors"];
    if (vectors.size() != chunk.count)
      throw ServiceError(route + ": expected " + std::to_string(chunk.count) + " vectors, got " +
                         std::to_string(vectors.size()));
    std::optional<std::size_t> dim;
    if (reply.contains("dim") && reply["dim"].is_number_integer()) dim = reply["dim"].get<std::size_t>();
    std::vector<EmbeddingVector> out;
    for (const auto& row : vectors) {
      if (!row.is_array()) throw ServiceError(route + ": vector is not an array");
      std::vector<double> values;
      values.reserve(row.size());
      for (const auto& x : row) {
        if (!x.is_number()) throw ServiceError(route + ": non-numeric vector entry");
        double v = x.get<double>();
        if (!std::isfinite(v)) throw ServiceError(route + ": non-finite vector entry");
        values.push_back(v);
      }
      if (!dim) dim = values.size();
      if (values.size() != *dim || values.empty())
        throw ServiceError(route + ": dimension disagreement within batch");
      try {
        out.push_back(normalize(EmbeddingVector(std::move(values))));
      } catch (const std::domain_error& e) {
        throw ServiceError(route + ": " + e.what());
      }
    }
    return out;
  };

  // Null JSON numbers arrive for NaN on the wire; they are rejected above as non-numeric.
  std::vector<std::vector<EmbeddingVector>> chunk_results(chunks.size());
  for (std::size_t wave = 0; wave < chunks.size(); wave += options_.max_in_flight) {
    std::size_t end = std::min(chunks.size(), wave + options_.max_in_flight);
    std::vector<std::future<std::vector<EmbeddingVector>>> futures;
    for (std::size_t c = wave; c < end; ++c) futures.push_back(std::async(std::launch::async, send, c));
    for (std::size_t c = wave; c < end; ++c) chunk_results[c] = futures[c - wave].get();
  }

  std::optional<std::size_t> batch_dim;
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    for (std::size_t k = 0; k < chunks[c].count; ++k) {
      EmbeddingVector& v = chunk_results[c][k];
      if (batch_dim && v.dim() != *batch_dim) throw ServiceError("dimension disagreement across batch");
      batch_dim = v.dim();
      results[missing[chunks[c].first + k]] = v;
    }
  }
  {
    std::lock_guard lock(memo_->mutex);
    for (std::size_t i : missing) memo_->entries.emplace(memo_prefix + payloads[i], *results[i]);
  }

  std::vector<EmbeddingVector> out;
  out.reserve(results.size());
  for (auto& r : results) {
    if (batch_dim && r->dim() != *batch_dim) throw ServiceError("dimension disagreement across batch");
    out.push_back(std::move(*r));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_texts(std::span<const std::string> texts) {
  std::vector<std::string> payloads(texts.begin(), texts.end());
  return embed_payloads("/v1/embed_text", "texts", payloads, 't');
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_images(std::span<const RasterImage> images) {
  std::vector<std::string> payloads;
  payloads.reserve(images.size());
  for (const RasterImage& img : images) {
    std::vector<std::uint8_t> png = encode_png(img);
    payloads.push_back(base64_encode(std::string(png.begin(), png.end())));
  }
  return embed_payloads("/v1/embed_image", "images_png_b64", payloads, 'i');
}

std::unique_ptr<Embedder> make_embedder(const EmbedderHandle& handle, RemoteOptions options) {
  if (handle.kind == EmbedderKind::kReference) return std::make_unique<ReferenceEmbedder>();
  if (!handle.endpoint || handle.endpoint->empty())
    throw std::invalid_argument("remote embedder handle requires an endpoint");
  return std::make_unique<RemoteEmbedder>(*handle.endpoint, handle.model_tag, options);
}

}  // namespace sgp
