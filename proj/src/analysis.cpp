#include "sgp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sgp/svg.hpp"
#include "text_util.hpp"

namespace sgp {

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char ch : s)
    if ((ch & 0xC0) != 0x80) ++n;
  return n;
}

CodeStats code_stats(std::string_view doc_source) {
  CodeStats stats;
  if (trim(doc_source).empty()) return stats;
  SvgDocument doc = parse_svg(doc_source);
  stats.code_length = utf8_length(doc_source);
  for_each_primitive(doc.elements, [&](const SvgElement& e) {
    ++stats.element_count;
    ++stats.element_histogram[std::string(to_string(e.kind))];
  });
  stats.comment_count = doc.comments.size();
  for (const SvgComment& c : doc.comments)
    if (to_lower(c.text).find("(optional)") != std::string::npos) ++stats.optional_comment_count;
  return stats;
}

double bon_estimate(std::span<const double> scores, std::size_t n) {
  const std::size_t k = scores.size();
  if (n < 1 || n > k) throw std::invalid_argument("bon_estimate requires 1 <= n <= k");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  // E[max] = s_(k) - sum_j (s_(j+1) - s_(j)) * P(max <= s_(j)), P = C(j,n)/C(k,n).
  // P is built as a product of factors <= 1 in a fixed order, so it can only
  // shrink as n grows and the estimate is monotone in n even after rounding;
  // at n == k every P is 0 and the result is exactly the maximum.
  double deficit = 0.0;
  for (std::size_t j = k - 1; j >= n; --j) {
    const double step = sorted[j] - sorted[j - 1];
    if (step != 0.0) {
      double p = 1.0;
      for (std::size_t t = 0; t < n && p != 0.0; ++t)
        p *= static_cast<double>(j - t) / static_cast<double>(k - t);
      deficit += step * p;
    }
  }
  return sorted[k - 1] - deficit;
}

BonCurve bon_curve(std::span<const std::vector<double>> per_prompt_scores, std::span<const std::size_t> n_values) {
  if (per_prompt_scores.empty()) throw std::invalid_argument("bon_curve needs at least one prompt");
  BonCurve curve;
  for (std::size_t n : n_values) {
    double sum = 0.0;
    for (const auto& scores : per_prompt_scores) sum += bon_estimate(scores, n);
    curve.n_values.push_back(n);
    curve.scores.push_back(sum / static_cast<double>(per_prompt_scores.size()));
  }
  return curve;
}

std::string_view to_string(GapFitStatus s) {
  switch (s) {
    case GapFitStatus::kIntersection:
      return "intersection";
    case GapFitStatus::kNoIntersection:
      return "no_intersection";
    case GapFitStatus::kDegenerate:
      return "degenerate";
  }
  return "?";
}

GapFit bon_gap_fit(const BonCurve& curve, const BonCurve& baseline) {
  if (curve.n_values != baseline.n_values) throw std::invalid_argument("curves must share n values");
  const std::size_t m = curve.n_values.size();
  if (m < 2 || curve.scores.size() != m || baseline.scores.size() != m)
    throw std::invalid_argument("gap fit needs at least two points per curve");

  std::vector<double> x(m), y(m);
  bool all_zero = true;
  for (std::size_t i = 0; i < m; ++i) {
    if (curve.n_values[i] < 1) throw std::invalid_argument("n values must be positive");
    x[i] = std::log10(static_cast<double>(curve.n_values[i]));
    y[i] = curve.scores[i] - baseline.scores[i];
    all_zero = all_zero && y[i] == 0.0;
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) mx += x[i], my += y[i];
  mx /= m, my /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("gap fit needs at least two distinct n values");

  GapFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (all_zero) {
    fit.status = GapFitStatus::kDegenerate;
    fit.n_star = static_cast<double>(curve.n_values.front());
  } else if (fit.slope >= 0.0) {
    fit.status = GapFitStatus::kNoIntersection;
  } else {
    fit.status = GapFitStatus::kIntersection;
    fit.n_star = std::pow(10.0, -fit.intercept / fit.slope);
  }
  return fit;
}

namespace {

// "--" may not appear inside an XML comment.
std::string comment_safe(std::string text) {
  for (std::size_t p; (p = text.find("--")) != std::string::npos;) text.replace(p, 2, "- -");
  if (!text.empty() && text.back() == '-') text += ' ';
  return text;
}

}  // namespace

std::string bon_plot_svg(std::span<const PlotSeries> series, int width, int height) {
  if (width < 64 || height < 64) throw std::invalid_argument("plot is too small");
  const double left = 40, right = width - 16.0, top = 16, bottom = height - 32.0;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const PlotSeries& s : series)
    for (std::size_t i = 0; i < s.curve.n_values.size(); ++i) {
      const double lx = std::log10(static_cast<double>(std::max<std::size_t>(1, s.curve.n_values[i])));
      x0 = std::min(x0, lx), x1 = std::max(x1, lx);
      y0 = std::min(y0, s.curve.scores[i]), y1 = std::max(y1, s.curve.scores[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double lx) { return left + (lx - x0) / (x1 - x0) * (right - left); };
  auto py = [&](double v) { return bottom - (v - y0) / (y1 - y0) * (bottom - top); };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + std::to_string(width) + " " +
                    std::to_string(height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" fill=\"white\"/>\n";
  out += "<!-- x: log10 N from " + format_number(x0) + " to " + format_number(x1) + "; y: score from " +
         format_number(y0) + " to " + format_number(y1) + " -->\n";
  out += "<line x1=\"" + format_number(left) + "\" y1=\"" + format_number(bottom) + "\" x2=\"" +
         format_number(right) + "\" y2=\"" + format_number(bottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + format_number(left) + "\" y1=\"" + format_number(top) + "\" x2=\"" + format_number(left) +
         "\" y2=\"" + format_number(bottom) + "\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(std::ceil(x0)); d <= static_cast<int>(std::floor(x1)); ++d) {
    const double tx = px(d);
    out += "<line x1=\"" + format_number(tx) + "\" y1=\"" + format_number(bottom) + "\" x2=\"" + format_number(tx) +
           "\" y2=\"" + format_number(bottom + 5) + "\" stroke=\"black\"/>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const PlotSeries& ser = series[s];
    out += "<!-- " + comment_safe(ser.label) + " -->\n<polyline fill=\"none\" stroke=\"" + ser.color +
           "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < ser.curve.n_values.size(); ++i) {
      if (i) out += ' ';
      const double lx = std::log10(static_cast<double>(std::max<std::size_t>(1, ser.curve.n_values[i])));
      out += format_number(px(lx)) + "," + format_number(py(ser.curve.scores[i]));
    }
    out += "\"/>\n";
    // Legend swatch.
    out += "<rect x=\"" + format_number(left + 8 + 20.0 * s) + "\" y=\"" + format_number(top) +
           "\" width=\"12\" height=\"12\" fill=\"" + ser.color + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace sgp
