#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sgp {

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(Color, Color) = default;
};

inline constexpr Color kWhite{255, 255, 255};
inline constexpr Color kBlack{0, 0, 0};

// Paint value as written in a document: a concrete color or the keyword "none".
struct Paint {
  bool none = false;
  Color color{};

  static Paint None() { return {true, {}}; }
  static Paint Solid(Color c) { return {false, c}; }
  friend bool operator==(Paint, Paint) = default;
};

// Parses CSS named colors (full extended keyword set), #RGB, #RRGGBB,
// rgb(r, g, b) with integer or percent components, "none" and "transparent".
// Returns nullopt for anything else.
std::optional<Paint> parse_paint(std::string_view text);

// Lowercase #rrggbb.
std::string to_hex(Color c);

}  // namespace sgp
