#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace sgp::test {

std::filesystem::path fixture_dir();
std::filesystem::path golden_dir();

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct GateCase {
  std::string name;
  std::string response;
  bool structure_ok = false;
  bool parse_ok = false;
  std::optional<std::string> banned;
  bool render_ok = false;
  int fmt = 0;
};
std::vector<GateCase> load_gate_cases();

// Random documents in the supported subset. Every element stays away from
// degenerate transforms so rendering never fails.
struct RandomDoc {
  double width = 0, height = 0;  // viewBox is "0 0 width height"
  std::vector<std::string> elements;

  std::string source() const;
  // Source with `extra` spliced in before top-level element `pos` (pos == size appends).
  std::string source_with(const std::string& extra, std::size_t pos) const;
};
RandomDoc random_document(std::mt19937_64& rng);

// A primitive whose painted area, stroke included, lies entirely outside the viewBox.
std::string random_outside_element(std::mt19937_64& rng, const RandomDoc& doc);

std::string random_color(std::mt19937_64& rng);

// In-process stand-in for the scoring service on 127.0.0.1 with an ephemeral port.
class MockService {
 public:
  struct Request {
    std::string path;
    nlohmann::json body;
    std::map<std::string, std::string> headers;
  };
  using Handler = std::function<nlohmann::json(const nlohmann::json& body, int& status)>;

  MockService();
  ~MockService();

  std::string url() const;
  void on(const std::string& path, Handler handler);
  std::vector<Request> requests() const;
  std::size_t request_count(const std::string& path) const;

  // Unit vectors from the reference embedders, so replies are checkable offline.
  static nlohmann::json reference_text_reply(const nlohmann::json& body);
  static nlohmann::json reference_image_reply(const nlohmann::json& body);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sgp::test
