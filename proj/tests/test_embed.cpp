#include <doctest.h>

#include <cmath>

#include "sgp/embed.hpp"
#include "sgp/rng.hpp"

using namespace sgp;

namespace {

EmbeddingVector basis(std::size_t dim, std::size_t i) {
  std::vector<double> v(dim, 0.0);
  v[i] = 1.0;
  return EmbeddingVector(v);
}

EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = uniform01(rng) * 2 - 1;
  return normalize(EmbeddingVector(v));
}

}  // namespace

TEST_CASE("cosine examples") {
  const auto e1 = basis(3, 0), e2 = basis(3, 1);
  CHECK(cosine(e1, e1) == 1.0);
  CHECK(cosine(e1, e2) == 0.0);
  const auto diag = normalize(EmbeddingVector({1, 1, 0}));
  CHECK(std::abs(cosine(e1, diag) - 1 / std::sqrt(2.0)) < 1e-7);
  CHECK(std::abs(cosine(e1, diag) - 0.70710678) < 1e-7);
  CHECK_THROWS_AS(cosine(e1, basis(4, 0)), std::invalid_argument);
}

TEST_CASE("cosine is clamped against rounding drift") {
  EmbeddingVector a({1.0000001, 0});
  CHECK(cosine(a, a) == 1.0);
  EmbeddingVector b({-1.0000001, 0});
  CHECK(cosine(a, b) == -1.0);
}

TEST_CASE("normalize is idempotent and unit-norm") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + uniform_index(rng, 64));
    for (double& x : v) x = (uniform01(rng) - 0.5) * std::pow(10.0, static_cast<int>(uniform_index(rng, 12)) - 6);
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0; })) continue;
    const auto n = normalize(EmbeddingVector(v));
    CHECK(std::abs(n.norm() - 1.0) <= 1e-6);
    const auto nn = normalize(n);
    for (std::size_t k = 0; k < n.dim(); ++k) CHECK(std::abs(nn.values[k] - n.values[k]) <= 1e-15);
  }
  CHECK_THROWS_AS(normalize(EmbeddingVector({0.0, 0.0})), std::domain_error);
  CHECK_THROWS_AS(normalize(EmbeddingVector({1.0, NAN})), std::domain_error);
  CHECK_THROWS_AS(normalize(EmbeddingVector()), std::domain_error);
}

TEST_CASE("cosine symmetry and bounds on 10^4 random pairs") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t dim = 1 + uniform_index(rng, 16);
    const auto a = random_unit(rng, dim), b = random_unit(rng, dim);
    const double ab = cosine(a, b);
    REQUIRE(ab == cosine(b, a));
    REQUIRE(ab >= -1.0);
    REQUIRE(ab <= 1.0);
  }
}

TEST_CASE("FNV-1a 64 matches the independent oracle") {
  // Values from tests/oracles/embed_oracle.py.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("red") == 0x89e9be1960f4c21cULL);
  CHECK(fnv1a64("circle") == 0x2c5c798f62d3d8c9ULL);
}

TEST_CASE("reference text embedder") {
  CHECK(reference_embed_text("") == basis(kReferenceDim, 0));
  CHECK(reference_embed_text("  ,;! ") == basis(kReferenceDim, 0));
  CHECK(reference_embed_text("red red") == reference_embed_text("red"));

  // Oracle: 'a' -> bin 12, 'red' -> bin 28, 'circle' -> bin 9.
  const auto v = reference_embed_text("a red circle");
  REQUIRE(v.dim() == 64);
  for (std::size_t i = 0; i < 64; ++i) {
    CAPTURE(i);
    if (i == 9 || i == 12 || i == 28)
      CHECK(v.values[i] == 0.5773502691896258);
    else
      CHECK(v.values[i] == 0.0);
  }
  const auto w = reference_embed_text("A Red-Circle, a!");
  CHECK(w.values[12] == 0.8164965809277261);
  CHECK(w.values[9] == 0.4082482904638631);
  CHECK(w.values[28] == 0.4082482904638631);
  const auto u = reference_embed_text("blue square");
  CHECK(u.values[6] == 0.7071067811865475);
  CHECK(u.values[13] == 0.7071067811865475);
}

TEST_CASE("reference image embedder") {
  CHECK(reference_embed_image(RasterImage(5, 4, {255, 0, 0})) == basis(kReferenceDim, 48));
  CHECK(reference_embed_image(RasterImage(3, 3, kWhite)) == basis(kReferenceDim, 63));
  CHECK(reference_embed_image(RasterImage(2, 2, {63, 64, 128})) == basis(kReferenceDim, 0 * 16 + 1 * 4 + 2));

  std::mt19937_64 rng(8);
  RasterImage img(9, 7);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(uniform_index(rng, 256));
  RasterImage shuffled = img;
  std::vector<std::size_t> order(63);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (int c = 0; c < 3; ++c) shuffled.data[i * 3 + c] = img.data[order[i] * 3 + c];
  CHECK(reference_embed_image(shuffled) == reference_embed_image(img));
  CHECK(std::abs(reference_embed_image(img).norm() - 1.0) < 1e-12);
}

TEST_CASE("reference embedders are pure") {
  ReferenceEmbedder e;
  std::vector<std::string> texts{"a red circle", "a red circle", "blue"};
  auto v = e.embed_texts(texts);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == v[1]);
  CHECK(v[0] == reference_embed_text("a red circle"));
  CHECK(e.embed_text("blue") == v[2]);
}

TEST_CASE("make_embedder") {
  CHECK(dynamic_cast<ReferenceEmbedder*>(make_embedder({}).get()) != nullptr);
  EmbedderHandle remote{EmbedderKind::kRemote, std::nullopt, "m"};
  CHECK_THROWS_AS(make_embedder(remote), std::invalid_argument);
  remote.endpoint = "http://127.0.0.1:1";
  auto e = make_embedder(remote);
  CHECK(e->model_tag() == "m");
}
