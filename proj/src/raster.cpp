#include "sgp/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sgp {

RasterImage::RasterImage(int w, int h, Color fill) : width(w), height(h) {
  data.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = fill.r;
    data[i + 1] = fill.g;
    data[i + 2] = fill.b;
  }
}

void SegmentBudget::spend(std::size_t n) {
  if (n > remaining_)
    throw RenderError("path flattening exceeds " + std::to_string(kMaxFlattenSegments) + " segments");
  remaining_ -= n;
}

std::size_t CoverageMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double distance_to_segment(Point p, Point a, Point b) {
  Point ab = b - a;
  double len2 = dot(ab, ab);
  if (len2 == 0.0) return length(p - a);
  double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return length(p - (a + ab * t));
}

class Flattener {
 public:
  Flattener(double tolerance, SegmentBudget& budget) : tol_(tolerance), budget_(budget) {
    if (!(tolerance > 0) || !std::isfinite(tolerance))
      throw RenderError("curve flatten tolerance must be positive");
  }

  void move_to(Point p) {
    finish(false);
    current_.points.push_back(p);
    start_ = p;
  }

  void line_to(Point p) {
    ensure_open();
    budget_.spend(1);
    current_.points.push_back(p);
  }

  // Adaptive de Casteljau subdivision. The curve lies in the hull of its control
  // points, so control points within tolerance of the chord bound the deviation.
  void cubic_to(Point c1, Point c2, Point end) {
    ensure_open();
    cubic(last(), c1, c2, end, 0);
  }

  void quad_to(Point c, Point end) {
    Point p0 = last();
    cubic_to(p0 + (c - p0) * (2.0 / 3.0), end + (c - end) * (2.0 / 3.0), end);
  }

  void arc_to(double rx, double ry, double rotation_deg, bool large_arc, bool sweep, Point end) {
    ensure_open();
    Point p0 = last();
    if (p0 == end) return;
    if (rx == 0.0 || ry == 0.0) {
      line_to(end);
      return;
    }
    double phi = rotation_deg * std::numbers::pi / 180.0;
    double cs = std::cos(phi), sn = std::sin(phi);
    double dx = (p0.x - end.x) / 2.0, dy = (p0.y - end.y) / 2.0;
    double x1p = cs * dx + sn * dy;
    double y1p = -sn * dx + cs * dy;
    double lambda = (x1p * x1p) / (rx * rx) + (y1p * y1p) / (ry * ry);
    if (lambda > 1.0) {
      double s = std::sqrt(lambda);
      rx *= s;
      ry *= s;
    }
    double num = rx * rx * ry * ry - rx * rx * y1p * y1p - ry * ry * x1p * x1p;
    double den = rx * rx * y1p * y1p + ry * ry * x1p * x1p;
    double coef = std::sqrt(std::max(0.0, num / den));
    if (large_arc == sweep) coef = -coef;
    double cxp = coef * rx * y1p / ry;
    double cyp = -coef * ry * x1p / rx;
    double cx = cs * cxp - sn * cyp + (p0.x + end.x) / 2.0;
    double cy = sn * cxp + cs * cyp + (p0.y + end.y) / 2.0;

    auto angle = [](double ux, double uy, double vx, double vy) {
      return std::atan2(ux * vy - uy * vx, ux * vx + uy * vy);
    };
    double ux = (x1p - cxp) / rx, uy = (y1p - cyp) / ry;
    double vx = (-x1p - cxp) / rx, vy = (-y1p - cyp) / ry;
    double theta1 = angle(1.0, 0.0, ux, uy);
    double delta = angle(ux, uy, vx, vy);
    if (!sweep && delta > 0) delta -= kTwoPi;
    if (sweep && delta < 0) delta += kTwoPi;

    std::size_t n = arc_segments(std::fabs(delta), std::max(rx, ry));
    budget_.spend(n);
    for (std::size_t k = 1; k < n; ++k) {
      double t = theta1 + delta * static_cast<double>(k) / static_cast<double>(n);
      current_.points.push_back({cx + rx * cs * std::cos(t) - ry * sn * std::sin(t),
                                 cy + rx * sn * std::cos(t) + ry * cs * std::sin(t)});
    }
    current_.points.push_back(end);
  }

  // Full ellipse as a closed contour starting at angle 0.
  void ellipse(Point center, double rx, double ry) {
    finish(false);
    std::size_t n = std::max<std::size_t>(4, arc_segments(kTwoPi, std::max(rx, ry)));
    budget_.spend(n);
    for (std::size_t k = 0; k < n; ++k) {
      double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
      current_.points.push_back({center.x + rx * std::cos(t), center.y + ry * std::sin(t)});
    }
    finish(true);
  }

  void close() {
    if (current_.points.empty()) return;
    Point s = start_;
    finish(true);
    // A drawing command after Z continues from the subpath start.
    pending_start_ = s;
  }

  std::vector<Contour> take() {
    finish(false);
    return std::move(contours_);
  }

 private:
  // Parametric chord error for step h is at most h^2/8 * max|P''| <= h^2/8 * r.
  std::size_t arc_segments(double sweep_angle, double radius) const {
    double n = std::ceil(sweep_angle * std::sqrt(radius / (8.0 * tol_)));
    if (!std::isfinite(n) || n > static_cast<double>(kMaxFlattenSegments))
      throw RenderError("arc flattening exceeds segment limit");
    return std::max<std::size_t>(1, static_cast<std::size_t>(n));
  }

  Point last() const { return current_.points.back(); }

  void ensure_open() {
    if (current_.points.empty()) {
      Point s = pending_start_.value_or(start_);
      current_.points.push_back(s);
      start_ = s;
    }
  }

  void cubic(Point p0, Point p1, Point p2, Point p3, int depth) {
    bool flat = distance_to_segment(p1, p0, p3) <= tol_ && distance_to_segment(p2, p0, p3) <= tol_;
    if (flat || depth >= 48) {
      budget_.spend(1);
      current_.points.push_back(p3);
      return;
    }
    Point p01 = (p0 + p1) * 0.5, p12 = (p1 + p2) * 0.5, p23 = (p2 + p3) * 0.5;
    Point p012 = (p01 + p12) * 0.5, p123 = (p12 + p23) * 0.5;
    Point mid = (p012 + p123) * 0.5;
    cubic(p0, p01, p012, mid, depth + 1);
    cubic(mid, p123, p23, p3, depth + 1);
  }

  void finish(bool closed) {
    if (!current_.points.empty()) {
      current_.closed = closed;
      if (closed && current_.points.size() > 1 && current_.points.front() == current_.points.back())
        current_.points.pop_back();
      contours_.push_back(std::move(current_));
    }
    current_ = {};
    pending_start_.reset();
  }

  double tol_;
  SegmentBudget& budget_;
  std::vector<Contour> contours_;
  Contour current_;
  Point start_{};
  std::optional<Point> pending_start_;
};

void flatten_into(Flattener& f, const std::vector<PathCommand>& commands) {
  Point current{};
  for (const PathCommand& c : commands) {
    const auto& a = c.args;
    switch (c.op) {
      case PathOp::kMove: f.move_to(current = {a[0], a[1]}); break;
      case PathOp::kLine: f.line_to(current = {a[0], a[1]}); break;
      case PathOp::kHorizontal: f.line_to(current = {a[0], current.y}); break;
      case PathOp::kVertical: f.line_to(current = {current.x, a[0]}); break;
      case PathOp::kCubic: f.cubic_to({a[0], a[1]}, {a[2], a[3]}, current = {a[4], a[5]}); break;
      case PathOp::kQuad: f.quad_to({a[0], a[1]}, current = {a[2], a[3]}); break;
      case PathOp::kArc:
        f.arc_to(a[0], a[1], a[2], a[3] != 0.0, a[4] != 0.0, {a[5], a[6]});
        current = {a[5], a[6]};
        break;
      case PathOp::kClose: f.close(); break;
    }
  }
}

double signed_area(const Polyline& poly) {
  double area = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) area += cross(poly[i], poly[(i + 1) % n]);
  return area / 2.0;
}

void push_oriented(std::vector<Polyline>& out, Polyline poly) {
  double area = signed_area(poly);
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0) std::reverse(poly.begin(), poly.end());
  out.push_back(std::move(poly));
}

struct Edge {
  double x0, y0, x1, y1;
  int dir;
};

}  // namespace

std::vector<Contour> flatten_path(const std::vector<PathCommand>& commands, double tolerance,
                                  SegmentBudget& budget) {
  Flattener f(tolerance, budget);
  flatten_into(f, commands);
  return f.take();
}

std::vector<Contour> flatten_path(const std::vector<PathCommand>& commands, double tolerance) {
  SegmentBudget budget;
  return flatten_path(commands, tolerance, budget);
}

std::vector<Polyline> stroke_outline(std::span<const Contour> contours, double width) {
  std::vector<Polyline> out;
  if (!(width > 0)) return out;
  const double hw = width / 2.0;
  for (const Contour& contour : contours) {
    Polyline pts;
    for (const Point& p : contour.points)
      if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
    if (contour.closed && pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
    if (pts.size() < 2) continue;

    const std::size_t n = pts.size();
    const std::size_t segments = contour.closed ? n : n - 1;
    auto direction = [&](std::size_t i) {
      Point d = pts[(i + 1) % n] - pts[i];
      return d * (1.0 / length(d));
    };
    auto normal = [&](Point d) { return Point{-d.y * hw, d.x * hw}; };

    for (std::size_t i = 0; i < segments; ++i) {
      Point a = pts[i], b = pts[(i + 1) % n];
      Point nrm = normal(direction(i));
      push_oriented(out, {a + nrm, b + nrm, b - nrm, a - nrm});
    }

    // Joins at vertex i connect segment i-1 to segment i.
    std::size_t first_join = contour.closed ? 0 : 1;
    std::size_t last_join = contour.closed ? n : n - 1;
    for (std::size_t i = first_join; i < last_join; ++i) {
      Point d0 = direction((i + n - 1) % n), d1 = direction(i);
      double turn = cross(d0, d1);
      double cos_turn = std::clamp(dot(d0, d1), -1.0, 1.0);
      if (std::fabs(turn) < 1e-12 && cos_turn > 0) continue;
      Point v = pts[i];
      double side = turn > 0 ? -1.0 : 1.0;  // outer side of the turn
      Point a = v + normal(d0) * side, b = v + normal(d1) * side;
      double cos_half = std::sqrt((1.0 + cos_turn) / 2.0);
      if (cos_half > 0 && 1.0 / cos_half <= kMiterLimit) {
        Point bisector = normal(d0) + normal(d1);
        Point m = v + bisector * (side * hw / (length(bisector) * cos_half));
        push_oriented(out, {v, a, m, b});
      } else {
        push_oriented(out, {v, a, b});
      }
    }
  }
  return out;
}

CoverageMask fill_scanline(std::span<const Polyline> polygons, FillRule rule, const Frame& frame) {
  CoverageMask mask{frame.width, frame.height,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(frame.width) * frame.height, 0)};
  std::vector<Edge> edges;
  for (const Polyline& poly : polygons) {
    for (std::size_t i = 0, n = poly.size(); i < n && n >= 2; ++i) {
      Point a = poly[i], b = poly[(i + 1) % n];
      if (a.y == b.y) continue;
      edges.push_back({a.x, a.y, b.x, b.y, b.y > a.y ? 1 : -1});
    }
  }
  if (edges.empty()) return mask;

  // Pixel index range whose centers fall in [lo, hi), clamped to [0, limit).
  auto center_range = [](double lo, double hi, int limit) {
    double first = std::ceil(lo - 0.5), end = std::ceil(hi - 0.5);
    first = std::clamp(first, 0.0, static_cast<double>(limit));
    end = std::clamp(end, 0.0, static_cast<double>(limit));
    return std::pair<int, int>{static_cast<int>(first), static_cast<int>(end)};
  };
  auto [row_begin, row_end] = center_range(frame.clip_y0, frame.clip_y1, frame.height);
  auto [col_begin, col_end] = center_range(frame.clip_x0, frame.clip_x1, frame.width);

  std::sort(edges.begin(), edges.end(),
            [](const Edge& l, const Edge& r) { return std::min(l.y0, l.y1) < std::min(r.y0, r.y1); });
  std::vector<const Edge*> active;
  std::vector<std::pair<double, int>> crossings;
  std::size_t next_edge = 0;
  for (int y = row_begin; y < row_end; ++y) {
    const double yc = y + 0.5;
    while (next_edge < edges.size() && std::min(edges[next_edge].y0, edges[next_edge].y1) <= yc)
      active.push_back(&edges[next_edge++]);
    std::erase_if(active, [yc](const Edge* e) { return std::max(e->y0, e->y1) <= yc; });

    crossings.clear();
    for (const Edge* e : active) {
      double t = (yc - e->y0) / (e->y1 - e->y0);
      crossings.emplace_back(e->x0 + t * (e->x1 - e->x0), e->dir);
    }
    std::sort(crossings.begin(), crossings.end());

    int winding = 0;
    std::uint8_t* row = mask.bits.data() + static_cast<std::size_t>(y) * frame.width;
    for (std::size_t k = 0; k + 1 < crossings.size(); ++k) {
      winding += crossings[k].second;
      bool inside = rule == FillRule::kNonZero ? winding != 0 : (winding & 1) != 0;
      if (!inside) continue;
      auto [x_begin, x_end] = center_range(crossings[k].first, crossings[k + 1].first, frame.width);
      x_begin = std::max(x_begin, col_begin);
      x_end = std::min(x_end, col_end);
      for (int x = x_begin; x < x_end; ++x) row[x] = 1;
    }
  }
  return mask;
}

Affine viewport_transform(const ViewBox& vb, int out_width, int out_height) {
  double s = std::min(out_width / vb.width, out_height / vb.height);
  double ox = (out_width - vb.width * s) / 2.0;
  double oy = (out_height - vb.height * s) / 2.0;
  return {s, 0, 0, s, ox - vb.min_x * s, oy - vb.min_y * s};
}

Frame viewport_frame(const ViewBox& vb, int out_width, int out_height) {
  double s = std::min(out_width / vb.width, out_height / vb.height);
  double ox = (out_width - vb.width * s) / 2.0;
  double oy = (out_height - vb.height * s) / 2.0;
  return {out_width, out_height, ox, oy, ox + vb.width * s, oy + vb.height * s};
}

namespace {

class DocumentRenderer {
 public:
  DocumentRenderer(const SvgDocument& doc, const RenderConfig& cfg)
      : doc_(doc), cfg_(cfg), image_(cfg.out_width, cfg.out_height, cfg.background),
        frame_(viewport_frame(doc.view_box, cfg.out_width, cfg.out_height)) {}

  RasterImage run() {
    Affine base = viewport_transform(doc_.view_box, cfg_.out_width, cfg_.out_height);
    ResolvedStyle root_style = resolve_style(ResolvedStyle{}, doc_.root_style);
    Affine root = checked(base * doc_.root_transform);
    draw_all(doc_.elements, root, root_style);
    return std::move(image_);
  }

 private:
  static Affine checked(const Affine& m) {
    double scale2 = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
    double det = m.determinant();
    if (!std::isfinite(det) || !std::isfinite(m.e) || !std::isfinite(m.f) || !std::isfinite(scale2) ||
        std::fabs(det) <= 1e-12 * scale2 || scale2 == 0.0)
      throw RenderError("non-invertible transform");
    return m;
  }

  void draw_all(const std::vector<SvgElement>& elements, const Affine& parent,
                const ResolvedStyle& parent_style) {
    for (const SvgElement& element : elements) {
      Affine m = checked(parent * element.transform);
      ResolvedStyle style = resolve_style(parent_style, element.style);
      if (element.kind == ElementKind::kGroup)
        draw_all(element.children, m, style);
      else
        draw_primitive(element, m, style);
    }
  }

  std::vector<Contour> outline(const SvgElement& e) {
    Flattener f(cfg_.curve_flatten_tolerance, budget_);
    std::visit(
        [&](const auto& g) {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, RectGeom>) {
            if (g.width <= 0 || g.height <= 0) return;
            if (g.rx > 0 && g.ry > 0) {
              double x0 = g.x, y0 = g.y, x1 = g.x + g.width, y1 = g.y + g.height;
              f.move_to({x0 + g.rx, y0});
              f.line_to({x1 - g.rx, y0});
              f.arc_to(g.rx, g.ry, 0, false, true, {x1, y0 + g.ry});
              f.line_to({x1, y1 - g.ry});
              f.arc_to(g.rx, g.ry, 0, false, true, {x1 - g.rx, y1});
              f.line_to({x0 + g.rx, y1});
              f.arc_to(g.rx, g.ry, 0, false, true, {x0, y1 - g.ry});
              f.line_to({x0, y0 + g.ry});
              f.arc_to(g.rx, g.ry, 0, false, true, {x0 + g.rx, y0});
              f.close();
            } else {
              f.move_to({g.x, g.y});
              f.line_to({g.x + g.width, g.y});
              f.line_to({g.x + g.width, g.y + g.height});
              f.line_to({g.x, g.y + g.height});
              f.close();
            }
          } else if constexpr (std::is_same_v<G, CircleGeom>) {
            if (g.r > 0) f.ellipse({g.cx, g.cy}, g.r, g.r);
          } else if constexpr (std::is_same_v<G, EllipseGeom>) {
            if (g.rx > 0 && g.ry > 0) f.ellipse({g.cx, g.cy}, g.rx, g.ry);
          } else if constexpr (std::is_same_v<G, LineGeom>) {
            f.move_to({g.x1, g.y1});
            f.line_to({g.x2, g.y2});
          } else if constexpr (std::is_same_v<G, PointsGeom>) {
            if (g.points.empty()) return;
            f.move_to(g.points.front());
            for (std::size_t i = 1; i < g.points.size(); ++i) f.line_to(g.points[i]);
            if (e.kind == ElementKind::kPolygon) f.close();
          } else if constexpr (std::is_same_v<G, PathGeom>) {
            flatten_into(f, g.commands);
          }
        },
        e.geometry);
    return f.take();
  }

  void draw_primitive(const SvgElement& e, const Affine& m, const ResolvedStyle& style) {
    std::vector<Contour> contours = outline(e);
    if (contours.empty()) return;

    bool fills = e.kind != ElementKind::kLine && !style.fill.none;
    double fill_alpha = style.opacity * style.fill_opacity;
    if (fills && fill_alpha > 0) {
      std::vector<Polyline> polys;
      for (const Contour& c : contours) polys.push_back(to_device(c.points, m));
      paint(fill_scanline(polys, style.fill_rule, frame_), style.fill.color, fill_alpha);
    }

    double stroke_alpha = style.opacity * style.stroke_opacity;
    if (!style.stroke.none && style.stroke_width > 0 && stroke_alpha > 0) {
      std::vector<Polyline> polys = stroke_outline(contours, style.stroke_width);
      for (Polyline& p : polys) p = to_device(p, m);
      paint(fill_scanline(polys, FillRule::kNonZero, frame_), style.stroke.color, stroke_alpha);
    }
  }

  static Polyline to_device(const Polyline& pts, const Affine& m) {
    Polyline out;
    out.reserve(pts.size());
    for (const Point& p : pts) out.push_back(m.apply(p));
    return out;
  }

  void paint(const CoverageMask& mask, Color c, double alpha) {
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x) {
        if (!mask.at(x, y)) continue;
        Color dst = image_.pixel(x, y);
        image_.set_pixel(x, y,
                         {blend_channel(alpha, c.r, dst.r), blend_channel(alpha, c.g, dst.g),
                          blend_channel(alpha, c.b, dst.b)});
      }
    }
  }

  const SvgDocument& doc_;
  const RenderConfig& cfg_;
  RasterImage image_;
  Frame frame_;
  SegmentBudget budget_;
};

}  // namespace

RasterImage render(const SvgDocument& doc, const RenderConfig& cfg) {
  if (cfg.out_width < 1 || cfg.out_height < 1) throw RenderError("output size must be positive");
  if (!(cfg.curve_flatten_tolerance > 0)) throw RenderError("tolerance must be positive");
  return DocumentRenderer(doc, cfg).run();
}

Renderer make_renderer(const RenderConfig& cfg) {
  return [cfg](const SvgDocument& doc) -> std::optional<RasterImage> {
    try {
      return render(doc, cfg);
    } catch (const RenderError&) {
      return std::nullopt;
    }
  };
}

}  // namespace sgp
