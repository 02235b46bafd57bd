#include "sgp/io.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

namespace sgp {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

void for_each_jsonl(std::istream& in, const std::function<void(nlohmann::json&&, std::size_t)>& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError("line " + std::to_string(number) + ": malformed JSON: " + e.what());
    }
    try {
      fn(std::move(value), number);
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      throw IoError("line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(nlohmann::json&&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    for_each_jsonl(in, fn);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  for_each_jsonl(path, [&](nlohmann::json&& v, std::size_t) { out.push_back(std::move(v)); });
  return out;
}

std::string to_jsonl(const std::vector<nlohmann::json>& values) {
  std::string out;
  for (const auto& v : values) {
    out += v.dump();
    out += '\n';
  }
  return out;
}

}  // namespace sgp
