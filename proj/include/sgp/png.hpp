#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgp/image.hpp"

namespace sgp {

class PngError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 8-bit RGB, no alpha, no interlace.
std::vector<std::uint8_t> encode_png(const RasterImage& image);

// Accepts any libpng-readable PNG; alpha is composited over white, output is RGB8.
RasterImage decode_png(std::span<const std::uint8_t> bytes);

RasterImage read_png_file(const std::filesystem::path& path);

}  // namespace sgp
