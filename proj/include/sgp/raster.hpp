#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgp/geometry.hpp"
#include "sgp/image.hpp"
#include "sgp/response.hpp"
#include "sgp/svg.hpp"

namespace sgp {

class RenderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RenderConfig {
  int out_width = 384;
  int out_height = 384;
  Color background = kWhite;
  double curve_flatten_tolerance = 0.25;  // user units
};

// Total line segments one render (or one flatten_path call) may produce.
inline constexpr std::size_t kMaxFlattenSegments = 1'000'000;

// Counts emitted segments and throws RenderError past the limit.
class SegmentBudget {
 public:
  explicit SegmentBudget(std::size_t limit = kMaxFlattenSegments) : remaining_(limit) {}
  void spend(std::size_t n);

 private:
  std::size_t remaining_;
};

// Subdivides curves until the chordal deviation is at most `tolerance`.
std::vector<Contour> flatten_path(const std::vector<PathCommand>& commands, double tolerance);
std::vector<Contour> flatten_path(const std::vector<PathCommand>& commands, double tolerance,
                                  SegmentBudget& budget);

// Device-space sampling frame: pixel (x, y) is eligible when its center
// (x + .5, y + .5) lies in [clip_x0, clip_x1) × [clip_y0, clip_y1).
struct Frame {
  int width = 0;
  int height = 0;
  double clip_x0 = 0, clip_y0 = 0, clip_x1 = 0, clip_y1 = 0;

  static Frame full(int w, int h) { return {w, h, 0, 0, double(w), double(h)}; }
};

struct CoverageMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 1 = inside

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
  friend bool operator==(const CoverageMask&, const CoverageMask&) = default;
};

// Pixel-center sampling, no anti-aliasing. Each polygon is implicitly closed.
CoverageMask fill_scanline(std::span<const Polyline> polygons, FillRule rule, const Frame& frame);

// Stroke outline as consistently oriented polygons whose nonzero union is the
// stroked area. Butt caps, miter joins with limit 4 falling back to bevel.
std::vector<Polyline> stroke_outline(std::span<const Contour> contours, double width);

inline constexpr double kMiterLimit = 4.0;

// User-to-device transform (uniform scale, centered) and the viewBox clip.
Affine viewport_transform(const ViewBox& vb, int out_width, int out_height);
Frame viewport_frame(const ViewBox& vb, int out_width, int out_height);

// Source-over blend of one channel, rounded to nearest.
inline std::uint8_t blend_channel(double alpha, std::uint8_t src, std::uint8_t dst) {
  double v = alpha * src + (1.0 - alpha) * dst;
  return static_cast<std::uint8_t>(std::lround(v));
}

// Throws RenderError on degenerate transforms or flattening overflow.
RasterImage render(const SvgDocument& doc, const RenderConfig& cfg = {});

// Adapts render() to the format gate's renderability oracle.
Renderer make_renderer(const RenderConfig& cfg = {});

}  // namespace sgp
