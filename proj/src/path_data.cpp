#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "sgp/svg.hpp"
#include "text_util.hpp"

namespace sgp {
namespace {

class PathLexer {
 public:
  explicit PathLexer(std::string_view d) : d_(d) {}

  void skip_separators() {
    while (pos_ < d_.size() && (is_xml_space(d_[pos_]) || d_[pos_] == ',')) ++pos_;
  }

  bool at_end() {
    skip_separators();
    return pos_ >= d_.size();
  }

  bool at_number() {
    skip_separators();
    if (pos_ >= d_.size()) return false;
    char ch = d_[pos_];
    return std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '+' || ch == '.';
  }

  char command() {
    skip_separators();
    char ch = d_[pos_];
    if (!std::isalpha(static_cast<unsigned char>(ch)))
      throw ParseError("path data: expected command at offset " + std::to_string(pos_));
    ++pos_;
    return ch;
  }

  double number() {
    skip_separators();
    if (pos_ >= d_.size()) throw ParseError("path data: unexpected end, number expected");
    std::size_t len = scan_number_length(d_.substr(pos_));
    if (len == 0)
      throw ParseError("path data: malformed number at offset " + std::to_string(pos_));
    double value = parse_finite(d_.substr(pos_, len), "path data");
    pos_ += len;
    return value;
  }

  double flag() {
    skip_separators();
    if (pos_ < d_.size() && (d_[pos_] == '0' || d_[pos_] == '1')) return d_[pos_++] == '1' ? 1.0 : 0.0;
    throw ParseError("path data: arc flag must be 0 or 1 at offset " + std::to_string(pos_));
  }

 private:
  std::string_view d_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<PathCommand> parse_path_data(std::string_view d) {
  PathLexer lex(d);
  std::vector<PathCommand> out;
  Point current{}, subpath_start{};
  Point last_cubic_ctrl{}, last_quad_ctrl{};
  char prev = 0;
  bool first = true;

  while (!lex.at_end()) {
    char cmd = lex.command();
    char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(cmd)));
    bool rel = cmd != upper;
    if (first && upper != 'M') throw ParseError("path data must begin with a moveto");
    first = false;

    auto coord = [&](double base) { return [&lex, rel, base] { return lex.number() + (rel ? base : 0.0); }; };
    bool repeat = true;
    bool implicit = false;
    while (repeat) {
      switch (upper) {
        case 'M':
        case 'L': {
          double x = coord(current.x)();
          double y = coord(current.y)();
          PathOp op = (upper == 'M' && !implicit) ? PathOp::kMove : PathOp::kLine;
          out.push_back({op, {x, y}});
          current = {x, y};
          if (op == PathOp::kMove) subpath_start = current;
          break;
        }
        case 'H': {
          double x = coord(current.x)();
          out.push_back({PathOp::kHorizontal, {x}});
          current.x = x;
          break;
        }
        case 'V': {
          double y = coord(current.y)();
          out.push_back({PathOp::kVertical, {y}});
          current.y = y;
          break;
        }
        case 'C':
        case 'S': {
          Point c1;
          if (upper == 'C') {
            c1.x = coord(current.x)();
            c1.y = coord(current.y)();
          } else {
            bool smooth = prev == 'C' || prev == 'S';
            c1 = smooth ? current * 2.0 - last_cubic_ctrl : current;
          }
          Point c2{coord(current.x)(), 0};
          c2.y = coord(current.y)();
          Point end{coord(current.x)(), 0};
          end.y = coord(current.y)();
          out.push_back({PathOp::kCubic, {c1.x, c1.y, c2.x, c2.y, end.x, end.y}});
          last_cubic_ctrl = c2;
          current = end;
          break;
        }
        case 'Q':
        case 'T': {
          Point c;
          if (upper == 'Q') {
            c.x = coord(current.x)();
            c.y = coord(current.y)();
          } else {
            bool smooth = prev == 'Q' || prev == 'T';
            c = smooth ? current * 2.0 - last_quad_ctrl : current;
          }
          Point end{coord(current.x)(), 0};
          end.y = coord(current.y)();
          out.push_back({PathOp::kQuad, {c.x, c.y, end.x, end.y}});
          last_quad_ctrl = c;
          current = end;
          break;
        }
        case 'A': {
          double rx = std::fabs(lex.number());
          double ry = std::fabs(lex.number());
          double rotation = lex.number();
          double large = lex.flag();
          double sweep = lex.flag();
          double x = coord(current.x)();
          double y = coord(current.y)();
          out.push_back({PathOp::kArc, {rx, ry, rotation, large, sweep, x, y}});
          current = {x, y};
          break;
        }
        case 'Z':
          out.push_back({PathOp::kClose, {}});
          current = subpath_start;
          break;
        default:
          throw ParseError(std::string("path data: unsupported command '") + cmd + "'");
      }
      prev = upper;
      implicit = true;
      repeat = upper != 'Z' && lex.at_number();
    }
  }
  return out;
}

std::string serialize_path_data(const std::vector<PathCommand>& commands) {
  std::string out;
  for (const PathCommand& command : commands) {
    if (!out.empty()) out += ' ';
    out += static_cast<char>(command.op);
    for (std::size_t i = 0; i < command.args.size(); ++i) {
      out += ' ';
      bool is_flag = command.op == PathOp::kArc && (i == 3 || i == 4);
      out += is_flag ? (command.args[i] != 0.0 ? "1" : "0") : format_number(command.args[i]);
    }
  }
  return out;
}

}  // namespace sgp
