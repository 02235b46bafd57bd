#pragma once

#include <cmath>
#include <vector>

namespace sgp {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
  friend Point operator*(double s, Point a) { return {a.x * s, a.y * s}; }
  friend bool operator==(Point, Point) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double length(Point a) { return std::hypot(a.x, a.y); }

// Affine map  x' = a*x + c*y + e,  y' = b*x + d*y + f  (SVG matrix(a b c d e f) order).
struct Affine {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0, e = 0.0, f = 0.0;

  static Affine translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
  static Affine scale(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }
  static Affine rotate_degrees(double deg);
  static Affine skew_x_degrees(double deg);
  static Affine skew_y_degrees(double deg);

  Point apply(Point p) const { return {a * p.x + c * p.y + e, b * p.x + d * p.y + f}; }
  double determinant() const { return a * d - b * c; }
  bool is_identity() const { return a == 1 && b == 0 && c == 0 && d == 1 && e == 0 && f == 0; }

  // this ∘ rhs: applies rhs first, then this.
  Affine operator*(const Affine& rhs) const;
  friend bool operator==(const Affine&, const Affine&) = default;
};

using Polyline = std::vector<Point>;

// A flattened subpath. Closed subpaths do not repeat their first vertex.
struct Contour {
  Polyline points;
  bool closed = false;
};

}  // namespace sgp
