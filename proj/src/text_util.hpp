#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

#include "sgp/svg.hpp"

namespace sgp {

inline bool is_xml_space(char ch) { return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

// Length of the SVG number token at the start of `s` (sign, digits, fraction,
// exponent), or 0 when none. Stops where a second '.' or a sign begins a new number.
inline std::size_t scan_number_length(std::string_view s) {
  std::size_t i = 0;
  auto digit = [&](std::size_t k) { return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k])); };
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t mantissa_start = i;
  while (digit(i)) ++i;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (digit(i)) ++i;
  }
  if (i == mantissa_start || (i == mantissa_start + 1 && s[mantissa_start] == '.')) return 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    if (digit(j)) {
      while (digit(j)) ++j;
      i = j;
    }
  }
  return i;
}

// Parses a complete number token; throws ParseError when malformed or non-finite.
inline double parse_finite(std::string_view token, std::string_view what) {
  std::string_view body = token;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc() || ptr != body.data() + body.size() || body.empty())
    throw ParseError(std::string(what) + ": invalid number '" + std::string(token) + "'");
  if (!std::isfinite(value))
    throw ParseError(std::string(what) + ": non-finite number '" + std::string(token) + "'");
  return value;
}

// Shortest round-trip decimal.
inline std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace sgp
