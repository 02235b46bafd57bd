#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <functional>
#include <istream>
#include <vector>

#include <json.hpp>

namespace sgp {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Calls `fn(value, line_number)` for every non-blank line. Malformed JSON
// throws IoError naming the 1-based line.
void for_each_jsonl(std::istream& in, const std::function<void(nlohmann::json&&, std::size_t)>& fn);
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(nlohmann::json&&, std::size_t)>& fn);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

// One compact JSON document per line.
std::string to_jsonl(const std::vector<nlohmann::json>& values);

}  // namespace sgp
