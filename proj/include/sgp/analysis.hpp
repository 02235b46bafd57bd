#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sgp {

struct CodeStats {
  std::size_t element_count = 0;  // leaf primitives; groups are not counted
  std::size_t code_length = 0;    // Unicode code points of the source
  std::size_t comment_count = 0;
  std::size_t optional_comment_count = 0;
  std::map<std::string, std::size_t> element_histogram;

  double comment_ratio() const { return element_count ? double(comment_count) / double(element_count) : 0.0; }
  double optional_ratio() const {
    return comment_count ? double(optional_comment_count) / double(comment_count) : 0.0;
  }
  friend bool operator==(const CodeStats&, const CodeStats&) = default;
};

// Throws ParseError when the source does not parse. Empty input yields all zeros.
CodeStats code_stats(std::string_view doc_source);

std::size_t utf8_length(std::string_view s);

// Unbiased estimate of E[max of n draws without replacement] from k >= n scores:
// sum_i C(i-1, n-1) / C(k, n) * s_(i) over ascending order statistics.
// Throws std::invalid_argument when n < 1 or n > k.
double bon_estimate(std::span<const double> scores, std::size_t n);

struct BonCurve {
  std::vector<std::size_t> n_values;
  std::vector<double> scores;
};

// Mean over prompts of bon_estimate at each n. Every prompt needs >= max(n) scores.
BonCurve bon_curve(std::span<const std::vector<double>> per_prompt_scores, std::span<const std::size_t> n_values);

enum class GapFitStatus { kIntersection, kNoIntersection, kDegenerate };
std::string_view to_string(GapFitStatus s);

struct GapFit {
  double slope = 0.0;      // a in  delta = a * log10(N) + b
  double intercept = 0.0;  // b
  GapFitStatus status = GapFitStatus::kNoIntersection;
  std::optional<double> n_star;  // 10^(-b/a); the first N when degenerate
};

// Least-squares fit of (curve - baseline) against log10 N. Throws
// std::invalid_argument for fewer than two points, mismatched n values, or a
// single distinct N.
GapFit bon_gap_fit(const BonCurve& curve, const BonCurve& baseline);

struct PlotSeries {
  std::string label;
  std::string color;  // any color the parser accepts
  BonCurve curve;
};

// Line chart of score against log10 N using only the supported SVG subset.
// Labels are emitted as comments since text elements are excluded.
std::string bon_plot_svg(std::span<const PlotSeries> series, int width = 480, int height = 320);

}  // namespace sgp
