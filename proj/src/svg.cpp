#include "sgp/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "text_util.hpp"

namespace sgp {

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::kRect: return "rect";
    case ElementKind::kCircle: return "circle";
    case ElementKind::kEllipse: return "ellipse";
    case ElementKind::kLine: return "line";
    case ElementKind::kPolyline: return "polyline";
    case ElementKind::kPolygon: return "polygon";
    case ElementKind::kPath: return "path";
    case ElementKind::kGroup: return "g";
  }
  return "?";
}

Affine Affine::operator*(const Affine& r) const {
  return {a * r.a + c * r.b,     b * r.a + d * r.b,     a * r.c + c * r.d,
          b * r.c + d * r.d,     a * r.e + c * r.f + e, b * r.e + d * r.f + f};
}

Affine Affine::rotate_degrees(double deg) {
  double rad = deg * std::numbers::pi / 180.0;
  double cs = std::cos(rad), sn = std::sin(rad);
  return {cs, sn, -sn, cs, 0, 0};
}

Affine Affine::skew_x_degrees(double deg) {
  return {1, 0, std::tan(deg * std::numbers::pi / 180.0), 1, 0, 0};
}

Affine Affine::skew_y_degrees(double deg) {
  return {1, std::tan(deg * std::numbers::pi / 180.0), 0, 1, 0, 0};
}

ResolvedStyle resolve_style(const ResolvedStyle& parent, const StyleAttrs& own) {
  ResolvedStyle out = parent;
  if (own.fill) out.fill = *own.fill;
  if (own.stroke) out.stroke = *own.stroke;
  if (own.stroke_width) out.stroke_width = *own.stroke_width;
  if (own.fill_opacity) out.fill_opacity = *own.fill_opacity;
  if (own.stroke_opacity) out.stroke_opacity = *own.stroke_opacity;
  if (own.fill_rule) out.fill_rule = *own.fill_rule;
  out.opacity = parent.opacity * own.opacity.value_or(1.0);
  return out;
}

namespace {

struct Attribute {
  std::string name;
  std::string value;
};

// Minimal XML reader for the subset: elements, attributes, comments, prolog,
// DOCTYPE and character data.
class XmlReader {
 public:
  explicit XmlReader(std::string_view src) : src_(src) {
    if (src_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
  }

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= src_.size(); }
  bool starts_with(std::string_view s) const { return src_.substr(pos_).starts_with(s); }
  char peek() const { return src_[pos_]; }

  void skip_space() {
    while (!at_end() && is_xml_space(src_[pos_])) ++pos_;
  }

  // Returns text up to the next '<' (or end).
  std::string_view char_data() {
    std::size_t start = pos_;
    while (!at_end() && src_[pos_] != '<') ++pos_;
    return src_.substr(start, pos_ - start);
  }

  std::string comment() {
    pos_ += 4;  // "<!--"
    std::size_t end = src_.find("-->", pos_);
    if (end == std::string_view::npos) fail("unterminated comment");
    std::string text(trim(src_.substr(pos_, end - pos_)));
    pos_ = end + 3;
    return text;
  }

  void skip_processing_instruction() {
    std::size_t end = src_.find("?>", pos_);
    if (end == std::string_view::npos) fail("unterminated processing instruction");
    pos_ = end + 2;
  }

  void skip_doctype() {
    int depth = 0;
    while (!at_end()) {
      char ch = src_[pos_++];
      if (ch == '[') ++depth;
      if (ch == ']') --depth;
      if (ch == '>' && depth <= 0) return;
    }
    fail("unterminated DOCTYPE");
  }

  void skip_cdata() {
    std::size_t end = src_.find("]]>", pos_);
    if (end == std::string_view::npos) fail("unterminated CDATA section");
    pos_ = end + 3;
  }

  std::string name() {
    std::size_t start = pos_;
    while (!at_end()) {
      char ch = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == ':' ||
          ch == '.')
        ++pos_;
      else
        break;
    }
    if (start == pos_) fail("expected a name");
    return std::string(src_.substr(start, pos_ - start));
  }

  void expect(char ch) {
    if (at_end() || src_[pos_] != ch) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }

  // After "<name": reads attributes up to '>' or '/>'. Returns true when self-closing.
  bool attributes(std::vector<Attribute>& out) {
    while (true) {
      bool had_space = !at_end() && is_xml_space(src_[pos_]);
      skip_space();
      if (at_end()) fail("unterminated start tag");
      if (starts_with("/>")) {
        pos_ += 2;
        return true;
      }
      if (peek() == '>') {
        ++pos_;
        return false;
      }
      if (!had_space) fail("attributes must be separated by whitespace");
      std::string attr_name = name();
      skip_space();
      expect('=');
      skip_space();
      if (at_end() || (peek() != '"' && peek() != '\'')) fail("attribute value must be quoted");
      char quote = src_[pos_++];
      std::size_t end = src_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      std::string_view raw = src_.substr(pos_, end - pos_);
      if (raw.find('<') != std::string_view::npos) fail("'<' in attribute value");
      pos_ = end + 1;
      for (const Attribute& a : out)
        if (a.name == attr_name) fail("duplicate attribute '" + attr_name + "'");
      out.push_back({attr_name, decode_entities(raw)});
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("svg: " + what + " at offset " + std::to_string(pos_));
  }

 private:
  std::string decode_entities(std::string_view raw) const {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out += raw[i];
        continue;
      }
      std::size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity reference");
      std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else if (ent.starts_with("#")) {
        unsigned long code = 0;
        bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
        std::string_view digits = ent.substr(hex ? 2 : 1);
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), code, hex ? 16 : 10);
        if (ec != std::errc() || p != digits.data() + digits.size() || digits.empty())
          fail("bad character reference");
        append_utf8(out, code);
      } else {
        fail("unknown entity '&" + std::string(ent) + ";'");
      }
      i = semi;
    }
    return out;
  }

  static void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::vector<double> parse_number_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  std::size_t i = 0;
  while (true) {
    while (i < text.size() && (is_xml_space(text[i]) || text[i] == ',')) ++i;
    if (i >= text.size()) break;
    std::size_t len = scan_number_length(text.substr(i));
    if (len == 0) throw ParseError(std::string(what) + ": malformed number list");
    out.push_back(parse_finite(text.substr(i, len), what));
    i += len;
  }
  return out;
}

Affine parse_transform(std::string_view text) {
  Affine total;
  std::size_t i = 0;
  while (true) {
    while (i < text.size() && (is_xml_space(text[i]) || text[i] == ',')) ++i;
    if (i >= text.size()) break;
    std::size_t name_start = i;
    while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
    std::string_view fn = text.substr(name_start, i - name_start);
    while (i < text.size() && is_xml_space(text[i])) ++i;
    if (i >= text.size() || text[i] != '(') throw ParseError("transform: expected '('");
    std::size_t close = text.find(')', i);
    if (close == std::string_view::npos) throw ParseError("transform: missing ')'");
    std::vector<double> v = parse_number_list(text.substr(i + 1, close - i - 1), "transform");
    i = close + 1;

    Affine m;
    auto arity = [&](std::initializer_list<std::size_t> allowed) {
      if (std::find(allowed.begin(), allowed.end(), v.size()) == allowed.end())
        throw ParseError("transform: wrong argument count for " + std::string(fn));
    };
    if (fn == "matrix") {
      arity({6});
      m = {v[0], v[1], v[2], v[3], v[4], v[5]};
    } else if (fn == "translate") {
      arity({1, 2});
      m = Affine::translate(v[0], v.size() > 1 ? v[1] : 0.0);
    } else if (fn == "scale") {
      arity({1, 2});
      m = Affine::scale(v[0], v.size() > 1 ? v[1] : v[0]);
    } else if (fn == "rotate") {
      arity({1, 3});
      m = Affine::rotate_degrees(v[0]);
      if (v.size() == 3)
        m = Affine::translate(v[1], v[2]) * m * Affine::translate(-v[1], -v[2]);
    } else if (fn == "skewX") {
      arity({1});
      m = Affine::skew_x_degrees(v[0]);
    } else if (fn == "skewY") {
      arity({1});
      m = Affine::skew_y_degrees(v[0]);
    } else {
      throw ParseError("transform: unsupported function '" + std::string(fn) + "'");
    }
    total = total * m;
  }
  return total;
}

struct Length {
  double value = 0;
  bool percent = false;
};

std::optional<Length> parse_length(std::string_view text) {
  text = trim(text);
  std::size_t len = scan_number_length(text);
  if (len == 0) return std::nullopt;
  double value = parse_finite(text.substr(0, len), "length");
  std::string unit = to_lower(trim(text.substr(len)));
  static const std::map<std::string, double, std::less<>> kUnits = {
      {"", 1.0},         {"px", 1.0},          {"pt", 4.0 / 3.0}, {"pc", 16.0},
      {"mm", 96 / 25.4}, {"cm", 96 / 2.54},    {"in", 96.0},      {"em", 16.0},
      {"ex", 8.0}};
  if (unit == "%") return Length{value, true};
  auto it = kUnits.find(unit);
  if (it == kUnits.end()) return std::nullopt;
  return Length{value * it->second, false};
}

class SvgParser {
 public:
  explicit SvgParser(std::string_view src) : reader_(src) {}

  SvgDocument run() {
    skip_misc();
    if (reader_.at_end() || reader_.peek() != '<') reader_.fail("expected <svg> root element");
    reader_.expect('<');
    std::string root = reader_.name();
    if (root != "svg") reader_.fail("root element must be <svg>, found <" + root + ">");
    std::vector<Attribute> attrs;
    bool self_closing = reader_.attributes(attrs);
    parse_root_attributes(attrs);
    if (!self_closing) parse_children(doc_.elements, "svg");
    skip_misc();
    if (!reader_.at_end()) reader_.fail("content after the root element");
    return std::move(doc_);
  }

 private:
  void warn(std::string message) {
    if (std::find(doc_.warnings.begin(), doc_.warnings.end(), message) == doc_.warnings.end())
      doc_.warnings.push_back(std::move(message));
  }

  // Whitespace, comments, processing instructions and DOCTYPE outside the root.
  void skip_misc() {
    while (true) {
      reader_.skip_space();
      if (reader_.starts_with("<!--")) {
        doc_.comments.push_back({primitive_count_, reader_.comment()});
      } else if (reader_.starts_with("<?")) {
        reader_.skip_processing_instruction();
      } else if (reader_.starts_with("<!DOCTYPE") || reader_.starts_with("<!doctype")) {
        reader_.skip_doctype();
      } else {
        return;
      }
    }
  }

  static bool silently_ignored(const std::string& name) {
    return name == "id" || name == "class" || name == "version" || name == "xmlns" ||
           name.starts_with("xmlns:") || name.starts_with("xml:");
  }

  void parse_root_attributes(const std::vector<Attribute>& attrs) {
    std::optional<std::string> view_box_text;
    std::vector<Attribute> rest;
    for (const Attribute& a : attrs) {
      if (a.name == "viewBox") {
        view_box_text = a.value;
      } else if (a.name == "width" || a.name == "height") {
        auto len = parse_length(a.value);
        if (!len) {
          warn("ignored unparseable " + a.name + " on <svg>");
          continue;
        }
        if (len->percent) {
          warn("percentage " + a.name + " on <svg> ignored");
          continue;
        }
        (a.name == "width" ? doc_.width_attr : doc_.height_attr) = len->value;
      } else if (a.name == "x" || a.name == "y" || a.name == "preserveAspectRatio" ||
                 a.name == "baseProfile") {
        warn("ignored attribute '" + a.name + "' on <svg>");
      } else {
        rest.push_back(a);
      }
    }

    bool have_view_box = false;
    if (view_box_text) {
      std::vector<double> v;
      try {
        v = parse_number_list(*view_box_text, "viewBox");
      } catch (const ParseError&) {
        v.clear();
      }
      if (v.size() == 4 && v[2] > 0 && v[3] > 0) {
        doc_.view_box = {v[0], v[1], v[2], v[3]};
        have_view_box = true;
      } else {
        warn("invalid viewBox");
      }
    }
    if (!have_view_box) {
      if (doc_.width_attr && doc_.height_attr && *doc_.width_attr > 0 && *doc_.height_attr > 0)
        doc_.view_box = {0, 0, *doc_.width_attr, *doc_.height_attr};
      else
        throw ParseError("svg: no usable viewBox and no positive width/height fallback");
    }

    SvgElement scratch;
    scratch.kind = ElementKind::kGroup;
    apply_common_attributes(scratch, rest, "svg");
    doc_.root_style = scratch.style;
    doc_.root_transform = scratch.transform;
  }

  void parse_children(std::vector<SvgElement>& out, const std::string& parent) {
    while (true) {
      std::string_view text = reader_.char_data();
      if (!trim(text).empty()) warn("ignored character data inside <" + parent + ">");
      if (reader_.at_end()) reader_.fail("missing </" + parent + ">");
      if (reader_.starts_with("<!--")) {
        doc_.comments.push_back({primitive_count_, reader_.comment()});
        continue;
      }
      if (reader_.starts_with("<![CDATA[")) {
        reader_.skip_cdata();
        warn("ignored CDATA section");
        continue;
      }
      if (reader_.starts_with("<?")) {
        reader_.skip_processing_instruction();
        continue;
      }
      if (reader_.starts_with("</")) {
        reader_.expect('<');
        reader_.expect('/');
        std::string closing = reader_.name();
        reader_.skip_space();
        reader_.expect('>');
        if (closing != parent)
          reader_.fail("mismatched end tag </" + closing + "> for <" + parent + ">");
        return;
      }
      reader_.expect('<');
      std::string name = reader_.name();
      std::vector<Attribute> attrs;
      bool self_closing = reader_.attributes(attrs);
      out.push_back(build_element(name, attrs));
      SvgElement& element = out.back();
      if (element.kind != ElementKind::kGroup) ++primitive_count_;
      if (!self_closing) {
        if (element.kind == ElementKind::kGroup) {
          parse_children(element.children, name);
        } else {
          std::vector<SvgElement> ignored;
          std::size_t before = primitive_count_;
          parse_children(ignored, name);
          if (!ignored.empty() || primitive_count_ != before)
            reader_.fail("<" + name + "> cannot contain child elements");
        }
      }
    }
  }

  SvgElement build_element(const std::string& name, const std::vector<Attribute>& attrs) {
    static const std::map<std::string, ElementKind, std::less<>> kKinds = {
        {"rect", ElementKind::kRect},         {"circle", ElementKind::kCircle},
        {"ellipse", ElementKind::kEllipse},   {"line", ElementKind::kLine},
        {"polyline", ElementKind::kPolyline}, {"polygon", ElementKind::kPolygon},
        {"path", ElementKind::kPath},         {"g", ElementKind::kGroup}};
    auto it = kKinds.find(name);
    if (it == kKinds.end()) throw ParseError("svg: unsupported element <" + name + ">");

    SvgElement element;
    element.kind = it->second;
    std::map<std::string, std::string, std::less<>> geometry_attrs;
    std::vector<Attribute> rest;
    for (const Attribute& a : attrs) {
      if (is_geometry_attribute(element.kind, a.name))
        geometry_attrs[a.name] = a.value;
      else
        rest.push_back(a);
    }
    element.geometry = build_geometry(element.kind, geometry_attrs);
    apply_common_attributes(element, rest, name);
    return element;
  }

  static bool is_geometry_attribute(ElementKind kind, std::string_view attr) {
    switch (kind) {
      case ElementKind::kRect:
        return attr == "x" || attr == "y" || attr == "width" || attr == "height" || attr == "rx" ||
               attr == "ry";
      case ElementKind::kCircle: return attr == "cx" || attr == "cy" || attr == "r";
      case ElementKind::kEllipse: return attr == "cx" || attr == "cy" || attr == "rx" || attr == "ry";
      case ElementKind::kLine: return attr == "x1" || attr == "y1" || attr == "x2" || attr == "y2";
      case ElementKind::kPolyline:
      case ElementKind::kPolygon: return attr == "points";
      case ElementKind::kPath: return attr == "d";
      case ElementKind::kGroup: return false;
    }
    return false;
  }

  enum class Axis { kX, kY, kDiagonal };

  double length_attr(const std::map<std::string, std::string, std::less<>>& attrs,
                     std::string_view key, Axis axis, double fallback) {
    auto it = attrs.find(key);
    if (it == attrs.end()) return fallback;
    auto len = parse_length(it->second);
    if (!len) throw ParseError("svg: invalid length for '" + std::string(key) + "': " + it->second);
    if (!len->percent) return len->value;
    const ViewBox& vb = doc_.view_box;
    double ref = axis == Axis::kX   ? vb.width
                 : axis == Axis::kY ? vb.height
                                    : std::sqrt((vb.width * vb.width + vb.height * vb.height) / 2.0);
    return len->value / 100.0 * ref;
  }

  static void require_non_negative(double v, std::string_view what) {
    if (v < 0) throw ParseError("svg: negative " + std::string(what));
  }

  Geometry build_geometry(ElementKind kind, const std::map<std::string, std::string, std::less<>>& a) {
    switch (kind) {
      case ElementKind::kRect: {
        RectGeom g{length_attr(a, "x", Axis::kX, 0),         length_attr(a, "y", Axis::kY, 0),
                   length_attr(a, "width", Axis::kX, 0),     length_attr(a, "height", Axis::kY, 0),
                   length_attr(a, "rx", Axis::kX, -1),       length_attr(a, "ry", Axis::kY, -1)};
        require_non_negative(g.width, "rect width");
        require_non_negative(g.height, "rect height");
        bool has_rx = a.contains("rx"), has_ry = a.contains("ry");
        if ((has_rx && g.rx < 0) || (has_ry && g.ry < 0)) throw ParseError("svg: negative rect radius");
        if (!has_rx) g.rx = has_ry ? g.ry : 0;
        if (!has_ry) g.ry = g.rx;
        g.rx = std::min(g.rx, g.width / 2);
        g.ry = std::min(g.ry, g.height / 2);
        return g;
      }
      case ElementKind::kCircle: {
        CircleGeom g{length_attr(a, "cx", Axis::kX, 0), length_attr(a, "cy", Axis::kY, 0),
                     length_attr(a, "r", Axis::kDiagonal, 0)};
        require_non_negative(g.r, "circle radius");
        return g;
      }
      case ElementKind::kEllipse: {
        EllipseGeom g{length_attr(a, "cx", Axis::kX, 0), length_attr(a, "cy", Axis::kY, 0),
                      length_attr(a, "rx", Axis::kX, 0), length_attr(a, "ry", Axis::kY, 0)};
        require_non_negative(g.rx, "ellipse radius");
        require_non_negative(g.ry, "ellipse radius");
        return g;
      }
      case ElementKind::kLine:
        return LineGeom{length_attr(a, "x1", Axis::kX, 0), length_attr(a, "y1", Axis::kY, 0),
                        length_attr(a, "x2", Axis::kX, 0), length_attr(a, "y2", Axis::kY, 0)};
      case ElementKind::kPolyline:
      case ElementKind::kPolygon: {
        PointsGeom g;
        auto it = a.find("points");
        if (it != a.end()) {
          std::vector<double> v = parse_number_list(it->second, "points");
          if (v.size() % 2 != 0) {
            warn("odd coordinate count in points; last value dropped");
            v.pop_back();
          }
          for (std::size_t i = 0; i + 1 < v.size(); i += 2) g.points.push_back({v[i], v[i + 1]});
        }
        return g;
      }
      case ElementKind::kPath: {
        PathGeom g;
        auto it = a.find("d");
        if (it != a.end()) g.commands = parse_path_data(it->second);
        return g;
      }
      case ElementKind::kGroup:
        return GroupGeom{};
    }
    return GroupGeom{};
  }

  static std::optional<double> parse_unit_interval(std::string_view text) {
    text = trim(text);
    bool percent = !text.empty() && text.back() == '%';
    if (percent) text.remove_suffix(1);
    if (scan_number_length(text) != text.size() || text.empty()) return std::nullopt;
    double v = parse_finite(text, "opacity");
    if (percent) v /= 100.0;
    return std::clamp(v, 0.0, 1.0);
  }

  void apply_property(SvgElement& element, const std::string& prop, std::string_view value,
                      const std::string& tag) {
    value = trim(value);
    if (value == "inherit") return;
    if (prop == "fill" || prop == "stroke") {
      auto paint = parse_paint(value);
      if (!paint) {
        if (value.starts_with("url(")) {
          warn("unsupported paint server on <" + tag + ">; treated as none");
          paint = Paint::None();
        } else if (to_lower(value) == "currentcolor") {
          warn("currentColor resolved to black");
          paint = Paint::Solid(kBlack);
        } else {
          warn("ignored invalid " + prop + " value '" + std::string(value) + "'");
          return;
        }
      }
      (prop == "fill" ? element.style.fill : element.style.stroke) = *paint;
    } else if (prop == "stroke-width") {
      auto len = parse_length(value);
      if (!len || len->value < 0) {
        warn("ignored invalid stroke-width");
        return;
      }
      double w = len->percent ? len->value / 100.0 *
                                    std::sqrt((doc_.view_box.width * doc_.view_box.width +
                                               doc_.view_box.height * doc_.view_box.height) / 2.0)
                              : len->value;
      element.style.stroke_width = w;
    } else if (prop == "opacity" || prop == "fill-opacity" || prop == "stroke-opacity") {
      auto v = parse_unit_interval(value);
      if (!v) {
        warn("ignored invalid " + prop);
        return;
      }
      (prop == "opacity"        ? element.style.opacity
       : prop == "fill-opacity" ? element.style.fill_opacity
                                : element.style.stroke_opacity) = *v;
    } else if (prop == "fill-rule") {
      if (value == "nonzero")
        element.style.fill_rule = FillRule::kNonZero;
      else if (value == "evenodd")
        element.style.fill_rule = FillRule::kEvenOdd;
      else
        warn("ignored invalid fill-rule");
    } else if (prop == "display" && value == "none") {
      // Rendered as fully transparent; structure is kept.
      element.style.opacity = 0.0;
    } else {
      warn("ignored attribute '" + prop + "' on <" + tag + ">");
    }
  }

  void apply_common_attributes(SvgElement& element, const std::vector<Attribute>& attrs,
                               const std::string& tag) {
    const Attribute* style = nullptr;
    for (const Attribute& a : attrs) {
      if (silently_ignored(a.name)) continue;
      if (a.name == "transform") {
        element.transform = parse_transform(a.value);
      } else if (a.name == "style") {
        style = &a;
      } else {
        apply_property(element, a.name, a.value, tag);
      }
    }
    if (style) {
      std::string_view decls = style->value;
      std::size_t pos = 0;
      while (pos < decls.size()) {
        std::size_t end = decls.find(';', pos);
        if (end == std::string_view::npos) end = decls.size();
        std::string_view decl = trim(decls.substr(pos, end - pos));
        pos = end + 1;
        if (decl.empty()) continue;
        std::size_t colon = decl.find(':');
        if (colon == std::string_view::npos) {
          warn("ignored malformed style declaration");
          continue;
        }
        std::string prop = to_lower(trim(decl.substr(0, colon)));
        apply_property(element, prop, decl.substr(colon + 1), tag);
      }
    }
  }

  XmlReader reader_;
  SvgDocument doc_;
  std::size_t primitive_count_ = 0;
};

// --- serialization -------------------------------------------------------

std::string escape_attr(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string paint_text(const Paint& p) { return p.none ? "none" : to_hex(p.color); }

void append_attr(std::string& out, std::string_view name, const std::string& value) {
  out += ' ';
  out += name;
  out += "=\"";
  out += escape_attr(value);
  out += '"';
}

void append_style(std::string& out, const StyleAttrs& s) {
  if (s.fill) append_attr(out, "fill", paint_text(*s.fill));
  if (s.stroke) append_attr(out, "stroke", paint_text(*s.stroke));
  if (s.stroke_width) append_attr(out, "stroke-width", format_number(*s.stroke_width));
  if (s.opacity) append_attr(out, "opacity", format_number(*s.opacity));
  if (s.fill_opacity) append_attr(out, "fill-opacity", format_number(*s.fill_opacity));
  if (s.stroke_opacity) append_attr(out, "stroke-opacity", format_number(*s.stroke_opacity));
  if (s.fill_rule)
    append_attr(out, "fill-rule", *s.fill_rule == FillRule::kEvenOdd ? "evenodd" : "nonzero");
}

void append_transform(std::string& out, const Affine& m) {
  if (m.is_identity()) return;
  append_attr(out, "transform",
              "matrix(" + format_number(m.a) + ' ' + format_number(m.b) + ' ' + format_number(m.c) +
                  ' ' + format_number(m.d) + ' ' + format_number(m.e) + ' ' + format_number(m.f) + ')');
}

class Serializer {
 public:
  explicit Serializer(const SvgDocument& doc) : doc_(doc) {}

  std::string run() {
    const ViewBox& vb = doc_.view_box;
    out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\"";
    append_attr(out_, "viewBox", format_number(vb.min_x) + ' ' + format_number(vb.min_y) + ' ' +
                                     format_number(vb.width) + ' ' + format_number(vb.height));
    if (doc_.width_attr) append_attr(out_, "width", format_number(*doc_.width_attr));
    if (doc_.height_attr) append_attr(out_, "height", format_number(*doc_.height_attr));
    append_style(out_, doc_.root_style);
    append_transform(out_, doc_.root_transform);
    out_ += ">\n";
    emit(doc_.elements, 1);
    flush_comments(SIZE_MAX, 1);
    out_ += "</svg>\n";
    return out_;
  }

 private:
  void flush_comments(std::size_t up_to, int depth) {
    while (next_comment_ < doc_.comments.size() && doc_.comments[next_comment_].index <= up_to) {
      out_.append(static_cast<std::size_t>(depth) * 2, ' ');
      out_ += "<!-- " + doc_.comments[next_comment_].text + " -->\n";
      ++next_comment_;
    }
  }

  void emit(const std::vector<SvgElement>& elements, int depth) {
    for (const SvgElement& e : elements) {
      if (e.kind != ElementKind::kGroup) flush_comments(primitive_count_, depth);
      out_.append(static_cast<std::size_t>(depth) * 2, ' ');
      out_ += '<';
      out_ += to_string(e.kind);
      append_geometry(e);
      append_style(out_, e.style);
      append_transform(out_, e.transform);
      if (e.kind == ElementKind::kGroup) {
        out_ += ">\n";
        emit(e.children, depth + 1);
        out_.append(static_cast<std::size_t>(depth) * 2, ' ');
        out_ += "</g>\n";
      } else {
        out_ += "/>\n";
        ++primitive_count_;
      }
    }
  }

  void append_geometry(const SvgElement& e) {
    auto num = [&](std::string_view name, double v) { append_attr(out_, name, format_number(v)); };
    std::visit(
        [&](const auto& g) {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, RectGeom>) {
            num("x", g.x), num("y", g.y), num("width", g.width), num("height", g.height);
            if (g.rx != 0 || g.ry != 0) num("rx", g.rx), num("ry", g.ry);
          } else if constexpr (std::is_same_v<G, CircleGeom>) {
            num("cx", g.cx), num("cy", g.cy), num("r", g.r);
          } else if constexpr (std::is_same_v<G, EllipseGeom>) {
            num("cx", g.cx), num("cy", g.cy), num("rx", g.rx), num("ry", g.ry);
          } else if constexpr (std::is_same_v<G, LineGeom>) {
            num("x1", g.x1), num("y1", g.y1), num("x2", g.x2), num("y2", g.y2);
          } else if constexpr (std::is_same_v<G, PointsGeom>) {
            std::string pts;
            for (const Point& p : g.points) {
              if (!pts.empty()) pts += ' ';
              pts += format_number(p.x) + ',' + format_number(p.y);
            }
            append_attr(out_, "points", pts);
          } else if constexpr (std::is_same_v<G, PathGeom>) {
            append_attr(out_, "d", serialize_path_data(g.commands));
          }
        },
        e.geometry);
  }

  const SvgDocument& doc_;
  std::string out_;
  std::size_t next_comment_ = 0;
  std::size_t primitive_count_ = 0;
};

}  // namespace

SvgDocument parse_svg(std::string_view source) { return SvgParser(source).run(); }

std::vector<SvgComment> extract_comments(std::string_view source) {
  return parse_svg(source).comments;
}

std::string serialize_svg(const SvgDocument& doc) { return Serializer(doc).run(); }

std::size_t count_primitives(const SvgDocument& doc) {
  std::size_t n = 0;
  for_each_primitive(doc.elements, [&](const SvgElement&) { ++n; });
  return n;
}

}  // namespace sgp
