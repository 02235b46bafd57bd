#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sgp/image.hpp"

namespace sgp {

struct EmbeddingVector {
  std::vector<double> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  double norm() const;
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

// Throws std::domain_error for zero or non-finite input.
EmbeddingVector normalize(const EmbeddingVector& v);

// Dot product clamped to [-1, 1]. Throws std::invalid_argument on dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

inline constexpr std::size_t kReferenceDim = 64;

std::uint64_t fnv1a64(std::string_view bytes);

// Token histogram: lowercase, split on non-alphanumeric runs, bin = FNV-1a-64 mod 64.
// The empty histogram maps to e0.
EmbeddingVector reference_embed_text(std::string_view caption);

// 4x4x4 color histogram, bin = 16*(r/64) + 4*(g/64) + b/64.
EmbeddingVector reference_embed_image(const RasterImage& image);

// Failures of the scoring service: transport, protocol, or invalid vectors.
class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) = 0;
  virtual std::vector<EmbeddingVector> embed_images(std::span<const RasterImage> images) = 0;
  virtual std::string model_tag() const = 0;

  EmbeddingVector embed_text(const std::string& text);
  EmbeddingVector embed_image(const RasterImage& image);
};

class ReferenceEmbedder final : public Embedder {
 public:
  std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) override;
  std::vector<EmbeddingVector> embed_images(std::span<const RasterImage> images) override;
  std::string model_tag() const override { return "reference-hist64"; }
};

enum class EmbedderKind { kReference, kRemote };

struct EmbedderHandle {
  EmbedderKind kind = EmbedderKind::kReference;
  std::optional<std::string> endpoint;  // required for kRemote, e.g. "http://127.0.0.1:8000"
  std::string model_tag = "reference-hist64";
};

struct RemoteOptions {
  std::size_t max_batch = 32;
  std::size_t max_in_flight = 4;
  int timeout_seconds = 60;
  std::optional<std::string> auth_token;  // sent as X-Service-Token
};

// Client for POST /v1/embed_text and /v1/embed_image. Batches are split into
// chunks sent concurrently (bounded by max_in_flight); every chunk carries a
// request_id and replies are placed by that id. Vectors are re-normalized
// client-side. Results are memoized per exact input bytes.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::string endpoint, std::string model_tag, RemoteOptions options = {});
  ~RemoteEmbedder() override;

  std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) override;
  std::vector<EmbeddingVector> embed_images(std::span<const RasterImage> images) override;
  std::string model_tag() const override { return model_tag_; }

 private:
  struct Memo;
  std::vector<EmbeddingVector> embed_payloads(const std::string& route, const std::string& field,
                                              const std::vector<std::string>& payloads,
                                              char memo_prefix);

  std::string endpoint_;
  std::string model_tag_;
  RemoteOptions options_;
  std::unique_ptr<Memo> memo_;
};

// Throws std::invalid_argument for a remote handle without endpoint.
std::unique_ptr<Embedder> make_embedder(const EmbedderHandle& handle, RemoteOptions options = {});

}  // namespace sgp
