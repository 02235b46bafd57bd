#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sgp/color.hpp"

namespace sgp {

// Row-major RGB8 buffer; data.size() == width * height * 3.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RasterImage() = default;
  RasterImage(int w, int h, Color fill = kWhite);

  Color pixel(int x, int y) const {
    std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set_pixel(int x, int y, Color c) {
    std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    data[i] = c.r, data[i + 1] = c.g, data[i + 2] = c.b;
  }
  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

}  // namespace sgp
