#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sgp/color.hpp"
#include "sgp/geometry.hpp"

namespace sgp {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FillRule { kNonZero, kEvenOdd };

enum class ElementKind { kRect, kCircle, kEllipse, kLine, kPolyline, kPolygon, kPath, kGroup };

std::string_view to_string(ElementKind kind);

// Path commands after parsing. Coordinates are absolute; shorthand S/T forms are
// expanded to C/Q, and H/V keep a single coordinate.
enum class PathOp : char {
  kMove = 'M',
  kLine = 'L',
  kHorizontal = 'H',
  kVertical = 'V',
  kCubic = 'C',
  kQuad = 'Q',
  kArc = 'A',
  kClose = 'Z',
};

struct PathCommand {
  PathOp op = PathOp::kMove;
  // M/L: x y.  H: x.  V: y.  C: x1 y1 x2 y2 x y.  Q: x1 y1 x y.
  // A: rx ry x_axis_rotation large_arc sweep x y.  Z: none.
  std::vector<double> args;
  friend bool operator==(const PathCommand&, const PathCommand&) = default;
};

std::vector<PathCommand> parse_path_data(std::string_view d);
std::string serialize_path_data(const std::vector<PathCommand>& commands);

// Presentation attributes as written on one element; unset fields inherit.
struct StyleAttrs {
  std::optional<Paint> fill;
  std::optional<Paint> stroke;
  std::optional<double> stroke_width;
  std::optional<double> opacity;
  std::optional<double> fill_opacity;
  std::optional<double> stroke_opacity;
  std::optional<FillRule> fill_rule;
  friend bool operator==(const StyleAttrs&, const StyleAttrs&) = default;
};

// Style after inheritance; opacity is the product of the element and its ancestors.
struct ResolvedStyle {
  Paint fill = Paint::Solid(kBlack);
  Paint stroke = Paint::None();
  double stroke_width = 1.0;
  double opacity = 1.0;
  double fill_opacity = 1.0;
  double stroke_opacity = 1.0;
  FillRule fill_rule = FillRule::kNonZero;
};

ResolvedStyle resolve_style(const ResolvedStyle& parent, const StyleAttrs& own);

struct RectGeom {
  double x = 0, y = 0, width = 0, height = 0, rx = 0, ry = 0;
  friend bool operator==(const RectGeom&, const RectGeom&) = default;
};
struct CircleGeom {
  double cx = 0, cy = 0, r = 0;
  friend bool operator==(const CircleGeom&, const CircleGeom&) = default;
};
struct EllipseGeom {
  double cx = 0, cy = 0, rx = 0, ry = 0;
  friend bool operator==(const EllipseGeom&, const EllipseGeom&) = default;
};
struct LineGeom {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  friend bool operator==(const LineGeom&, const LineGeom&) = default;
};
struct PointsGeom {
  std::vector<Point> points;
  friend bool operator==(const PointsGeom&, const PointsGeom&) = default;
};
struct PathGeom {
  std::vector<PathCommand> commands;
  friend bool operator==(const PathGeom&, const PathGeom&) = default;
};
struct GroupGeom {
  friend bool operator==(const GroupGeom&, const GroupGeom&) = default;
};

using Geometry =
    std::variant<RectGeom, CircleGeom, EllipseGeom, LineGeom, PointsGeom, PathGeom, GroupGeom>;

struct SvgElement {
  ElementKind kind = ElementKind::kGroup;
  Geometry geometry = GroupGeom{};
  StyleAttrs style;
  Affine transform;
  std::vector<SvgElement> children;  // groups only
  friend bool operator==(const SvgElement&, const SvgElement&) = default;
};

struct ViewBox {
  double min_x = 0, min_y = 0, width = 0, height = 0;
  friend bool operator==(const ViewBox&, const ViewBox&) = default;
};

struct SvgComment {
  std::size_t index = 0;  // number of drawing primitives emitted before the comment
  std::string text;
  friend bool operator==(const SvgComment&, const SvgComment&) = default;
};

struct SvgDocument {
  ViewBox view_box;
  std::optional<double> width_attr;
  std::optional<double> height_attr;
  StyleAttrs root_style;
  Affine root_transform;
  std::vector<SvgElement> elements;
  std::vector<SvgComment> comments;
  std::vector<std::string> warnings;
  friend bool operator==(const SvgDocument& a, const SvgDocument& b) {
    // Warnings are diagnostics, not structure.
    return a.view_box == b.view_box && a.width_attr == b.width_attr &&
           a.height_attr == b.height_attr && a.root_style == b.root_style &&
           a.root_transform == b.root_transform && a.elements == b.elements &&
           a.comments == b.comments;
  }
};

// Parses the supported SVG subset. Throws ParseError.
SvgDocument parse_svg(std::string_view source);

// Comments of a parseable document, in document order. Throws ParseError.
std::vector<SvgComment> extract_comments(std::string_view source);

std::string serialize_svg(const SvgDocument& doc);

// Depth-first visit of drawing primitives (groups are descended, not reported).
template <typename Fn>
void for_each_primitive(const std::vector<SvgElement>& elements, Fn&& fn) {
  for (const SvgElement& element : elements) {
    if (element.kind == ElementKind::kGroup)
      for_each_primitive(element.children, fn);
    else
      fn(element);
  }
}

std::size_t count_primitives(const SvgDocument& doc);

}  // namespace sgp
