#include <doctest.h>

#include <chrono>
#include <regex>

#include "sgp/io.hpp"
#include "sgp/raster.hpp"
#include "sgp/response.hpp"
#include "sgp/svg.hpp"
#include "support.hpp"

using namespace sgp;

TEST_CASE("extract_response examples") {
  auto ok = extract_response("<THINK>plan</THINK><ANSWER><svg viewBox=\"0 0 10 10\"/></ANSWER>");
  CHECK(ok.structure_ok);
  CHECK(ok.think == "plan");
  CHECK(ok.answer == "<svg viewBox=\"0 0 10 10\"/>");

  auto swapped = extract_response("<ANSWER>x</ANSWER><THINK>y</THINK>");
  CHECK_FALSE(swapped.structure_ok);
  CHECK_FALSE(swapped.answer.has_value());
  CHECK_FALSE(swapped.think.has_value());

  CHECK_FALSE(extract_response("").structure_ok);
}

TEST_CASE("answer is whitespace-trimmed") {
  auto r = extract_response("<THINK>a</THINK>\n<ANSWER>\n  <svg viewBox=\"0 0 1 1\"/>  \n</ANSWER>\n");
  REQUIRE(r.structure_ok);
  CHECK(r.answer == "<svg viewBox=\"0 0 1 1\"/>");
}

TEST_CASE("parse_svg examples") {
  auto doc = parse_svg("<svg viewBox=\"0 0 100 100\"><rect x=\"0\" y=\"0\" width=\"50\" height=\"50\" fill=\"red\"/></svg>");
  REQUIRE(doc.elements.size() == 1);
  CHECK(doc.elements[0].kind == ElementKind::kRect);
  CHECK(doc.view_box == ViewBox{0, 0, 100, 100});

  CHECK_THROWS_AS(parse_svg("<svg viewBox=\"0 0 1 1\"><blink/></svg>"), ParseError);

  auto path = parse_svg("<svg viewBox=\"0 0 10 10\"><path d=\"M 0 0 L 10 10 Z\"/></svg>");
  const auto& cmds = std::get<PathGeom>(path.elements.at(0).geometry).commands;
  REQUIRE(cmds.size() == 3);
  CHECK(cmds[0] == PathCommand{PathOp::kMove, {0, 0}});
  CHECK(cmds[1] == PathCommand{PathOp::kLine, {10, 10}});
  CHECK(cmds[2] == PathCommand{PathOp::kClose, {}});
}

TEST_CASE("relative path commands become absolute") {
  auto cmds = parse_path_data("m 1 2 l 3 4 h 5 v -6 z");
  REQUIRE(cmds.size() == 5);
  CHECK(cmds[1].args == std::vector<double>{4, 6});
  CHECK(cmds[2].args == std::vector<double>{9});
  CHECK(cmds[3].args == std::vector<double>{0});
}

TEST_CASE("parse failures") {
  CHECK_THROWS_AS(parse_svg("<svg><rect/></svg>"), ParseError);                      // no viewBox or size
  CHECK_THROWS_AS(parse_svg("<svg viewBox=\"0 0 0 10\"/>"), ParseError);             // zero width
  CHECK_THROWS_AS(parse_svg("<svg viewBox=\"0 0 10 10\"><rect width=\"inf\"/></svg>"), ParseError);
  CHECK_THROWS_AS(parse_svg("<svg viewBox=\"0 0 10 10\"><rect"), ParseError);
  CHECK_THROWS_AS(parse_svg("<svg viewBox=\"0 0 10 10\"><path d=\"M 0 0 X 3\"/></svg>"), ParseError);
  CHECK_THROWS_AS(parse_svg(""), ParseError);
}

TEST_CASE("width/height fallback and unknown attributes") {
  auto doc = parse_svg("<svg width=\"40\" height=\"20\"><rect foo=\"bar\" width=\"1\" height=\"1\"/></svg>");
  CHECK(doc.view_box == ViewBox{0, 0, 40, 20});
  CHECK_FALSE(doc.warnings.empty());
}

TEST_CASE("check_banned_tags examples") {
  CHECK(check_banned_tags("<svg><text>hi</text></svg>") == "text");
  CHECK(check_banned_tags("<svg><tspan/></svg>") == "tspan");
  CHECK_FALSE(check_banned_tags("<svg><rect/></svg>").has_value());
}

TEST_CASE("check_banned_tags is case-insensitive and ignores attribute text") {
  CHECK(check_banned_tags("<svg><TeXt/></svg>") == "text");
  CHECK(check_banned_tags("<svg><TEXTPATH/></svg>") == "textPath");
  CHECK(check_banned_tags("<svg><ns:tspan/></svg>") == "tspan");
  CHECK(check_banned_tags("</text>") == "text");
  CHECK_FALSE(check_banned_tags("<rect class=\"text\" data-x=\"text tspan\"/>").has_value());
  CHECK_FALSE(check_banned_tags("<texture/><textual/>").has_value());
  CHECK_FALSE(check_banned_tags("the word text alone").has_value());
}

TEST_CASE("validate examples") {
  const Renderer r = make_renderer();
  auto good = validate("<THINK>p</THINK><ANSWER><svg viewBox=\"0 0 4 4\"><rect width=\"2\" height=\"2\"/></svg></ANSWER>", r);
  CHECK(good.fmt_reward == 1);

  auto banned = validate("<THINK>p</THINK><ANSWER><svg viewBox=\"0 0 4 4\"><text>x</text></svg></ANSWER>", r);
  CHECK(banned.fmt_reward == 0);
  CHECK(banned.banned_tag_found == "text");

  auto open = validate("<THINK>p</THINK><ANSWER><svg viewBox=\"0 0 4 4\"/>", r);
  CHECK(open.fmt_reward == 0);
  CHECK_FALSE(open.structure_ok);
}

TEST_CASE("validate uses the supplied renderer as the renderability oracle") {
  int calls = 0;
  Renderer refuse = [&](const SvgDocument&) -> std::optional<RasterImage> {
    ++calls;
    return std::nullopt;
  };
  auto rep = validate("<THINK>p</THINK><ANSWER><svg viewBox=\"0 0 4 4\"/></ANSWER>", refuse);
  CHECK(calls == 1);
  CHECK(rep.parse_ok);
  CHECK_FALSE(rep.render_ok);
  CHECK(rep.fmt_reward == 0);
}

TEST_CASE("format gate fixtures: 50 hand-labelled cases") {
  const auto cases = test::load_gate_cases();
  REQUIRE(cases.size() == 50);
  const Renderer r = make_renderer();
  const auto start = std::chrono::steady_clock::now();
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const ValidationReport rep = validate(c.response, r);
    CHECK(rep.structure_ok == c.structure_ok);
    CHECK(rep.parse_ok == c.parse_ok);
    CHECK(rep.banned_tag_found == c.banned);
    CHECK(rep.render_ok == c.render_ok);
    CHECK(rep.fmt_reward == c.fmt);
    CHECK(rep.fmt_reward ==
          int(rep.structure_ok && rep.parse_ok && !rep.banned_tag_found && rep.render_ok));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 1.0);
}

TEST_CASE("ValidationReport JSON has exactly the report fields") {
  ValidationReport rep;
  rep.structure_ok = true;
  rep.banned_tag_found = "tspan";
  nlohmann::json j = rep;
  CHECK(j.size() == 5);
  CHECK(j.dump() ==
        R"({"banned_tag_found":"tspan","fmt_reward":0,"parse_ok":false,"render_ok":false,"structure_ok":true})");
  CHECK(j.get<ValidationReport>() == rep);
}

TEST_CASE("extract_comments examples") {
  auto c = extract_comments("<svg viewBox=\"0 0 1 1\"><!-- sky --><rect/><!-- sun (optional) --><circle/></svg>");
  REQUIRE(c.size() == 2);
  CHECK(c[0] == SvgComment{0, "sky"});
  CHECK(c[1] == SvgComment{1, "sun (optional)"});

  CHECK(extract_comments("<svg viewBox=\"0 0 1 1\"><rect/></svg>").empty());

  // Walk in document order: rect(0) g{ circle(1) <inner> rect(2) } <tail> -> inner at 2, tail at 3.
  auto nested = extract_comments(
      "<svg viewBox=\"0 0 1 1\"><rect/><g><circle/><!-- inner --><g><rect/></g></g><!-- tail --><line/></svg>");
  REQUIRE(nested.size() == 2);
  CHECK(nested[0] == SvgComment{2, "inner"});
  CHECK(nested[1] == SvgComment{3, "tail"});
}

namespace {

// Independent linear scan of primitive start tags in source order.
std::vector<std::string> scan_primitive_tags(const std::string& source) {
  static const std::regex tag(R"(<(rect|circle|ellipse|line|polyline|polygon|path)[\s/>])");
  std::string no_comments = std::regex_replace(source, std::regex("<!--[\\s\\S]*?-->"), "");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(no_comments.begin(), no_comments.end(), tag); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1]);
  return out;
}

}  // namespace

TEST_CASE("flattened element order equals source order") {
  std::mt19937_64 rng(404);
  for (int i = 0; i < 200; ++i) {
    const std::string src = test::random_document(rng).source();
    std::vector<std::string> walked;
    for_each_primitive(parse_svg(src).elements, [&](const SvgElement& e) { walked.emplace_back(to_string(e.kind)); });
    CHECK(walked == scan_primitive_tags(src));
  }
}

TEST_CASE("serialize then reparse is structurally equal") {
  std::vector<std::string> sources;
  for (const auto& entry : std::filesystem::directory_iterator(test::fixture_dir() / "render"))
    sources.push_back(read_file(entry.path()));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) sources.push_back(test::random_document(rng).source());
  for (const auto& src : sources) {
    const SvgDocument doc = parse_svg(src);
    const std::string out = serialize_svg(doc);
    CAPTURE(out);
    CHECK(parse_svg(out) == doc);
  }
}
