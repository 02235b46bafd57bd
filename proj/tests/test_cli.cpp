#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "sgp/io.hpp"
#include "sgp/png.hpp"
#include "sgp/toy.hpp"
#include "support.hpp"

using namespace sgp;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

// Runs the CLI with `args`, capturing stdout and stderr into the temp dir.
Run sgp_cli(const test::TempDir& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = env + " \"" SGP_CLI_PATH "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

void write_lines(const std::filesystem::path& p, const std::vector<json>& lines) {
  write_file_atomic(p, to_jsonl(lines));
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

const std::string kGood =
    "<THINK>p</THINK><ANSWER><svg viewBox=\"0 0 4 4\"><rect width=\"4\" height=\"4\" fill=\"red\"/></svg></ANSWER>";
const std::string kBanned =
    "<THINK>p</THINK><ANSWER><svg viewBox=\"0 0 4 4\"><text>red</text></svg></ANSWER>";

}  // namespace

TEST_CASE("validate writes one report per line") {
  test::TempDir dir;
  write_lines(dir / "in.jsonl", {{{"response", kGood}}, {{"response", kBanned}}, {{"raw_text", "nope"}}});
  const auto r = sgp_cli(dir, "validate --in " + q(dir / "in.jsonl") + " --out " + q(dir / "out.jsonl") + " --size 32");
  REQUIRE(r.code == 0);
  const auto out = read_jsonl(dir / "out.jsonl");
  REQUIRE(out.size() == 3);
  CHECK(out[0]["fmt_reward"] == 1);
  CHECK(out[1]["banned_tag_found"] == "text");
  CHECK(out[2]["structure_ok"] == false);
}

TEST_CASE("render produces a 384x384 PNG by default") {
  test::TempDir dir;
  write_file_atomic(dir / "a.svg", "<svg viewBox=\"0 0 10 10\"><circle cx=\"5\" cy=\"5\" r=\"4\" fill=\"red\"/></svg>");
  const auto r = sgp_cli(dir, "render --in " + q(dir / "a.svg") + " --out " + q(dir / "a.png"));
  REQUIRE(r.code == 0);
  const auto img = read_png_file(dir / "a.png");
  CHECK(img.width == 384);
  CHECK(img.height == 384);

  write_file_atomic(dir / "bad.svg", "<svg><rect/></svg>");
  CHECK(sgp_cli(dir, "render --in " + q(dir / "bad.svg") + " --out " + q(dir / "b.png")).code == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "b.png"));
}

TEST_CASE("score with the mock embedder gates out banned tags") {
  test::TempDir dir;
  write_lines(dir / "in.jsonl", {{{"id", "a"}, {"response", kGood}, {"caption", "a red square"}},
                                 {{"id", "b"}, {"response", kBanned}, {"caption", "a red square"}}});
  const auto r = sgp_cli(dir, "score --mock-embedder --size 32 --in " + q(dir / "in.jsonl") + " --out " +
                                  q(dir / "out.jsonl"));
  REQUIRE(r.code == 0);
  const auto out = read_jsonl(dir / "out.jsonl");
  REQUIRE(out.size() == 2);
  CHECK(out[0]["id"] == "a");
  CHECK(out[0]["fmt"] == 1);
  CHECK(out[0]["fused"].get<double>() > 0.0);
  CHECK(out[1]["fmt"] == 0);
  CHECK(out[1]["fused"] == 0.0);
  CHECK(out[1]["r_text"].is_null());
}

TEST_CASE("usage errors exit 1") {
  test::TempDir dir;
  const auto unknown = sgp_cli(dir, "validate --bogus");
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("--in") != std::string::npos);

  write_lines(dir / "in.jsonl", {{{"response", kGood}, {"caption", "x"}}});
  const auto both = sgp_cli(dir, "score --mock-embedder --service-url http://127.0.0.1:1 --in " +
                                     q(dir / "in.jsonl") + " --out " + q(dir / "o.jsonl"));
  CHECK(both.code == 1);
  const auto neither =
      sgp_cli(dir, "score --in " + q(dir / "in.jsonl") + " --out " + q(dir / "o.jsonl"), "env -u SGP_SERVICE_URL");
  CHECK(neither.code == 1);
  CHECK(sgp_cli(dir, "").code == 1);
  CHECK(sgp_cli(dir, "validate --in " + q(dir / "missing.jsonl") + " --out " + q(dir / "o.jsonl")).code == 1);
}

TEST_CASE("an unreachable service exits 2") {
  test::TempDir dir;
  write_lines(dir / "in.jsonl", {{{"response", kGood}, {"caption", "x"}}});
  const auto r = sgp_cli(dir, "score --service-url http://127.0.0.1:1 --timeout 2 --in " + q(dir / "in.jsonl") +
                                  " --out " + q(dir / "o.jsonl"));
  CHECK(r.code == 2);
}

TEST_CASE("service errors mark records and exit 2 with the full output written") {
  test::MockService svc;
  svc.on("/v1/embed_text", [](const json&, int& status) {
    status = 503;
    return json("model not loaded");
  });
  test::TempDir dir;
  write_lines(dir / "in.jsonl", {{{"response", kGood}, {"caption", "x"}}, {{"response", kBanned}, {"caption", "y"}}});
  const auto r = sgp_cli(dir, "score --size 32 --service-url " + svc.url() + " --in " + q(dir / "in.jsonl") +
                                  " --out " + q(dir / "o.jsonl"));
  CHECK(r.code == 2);
  const auto out = read_jsonl(dir / "o.jsonl");
  REQUIRE(out.size() == 2);
  CHECK(out[0]["error"].is_string());
  CHECK_FALSE(out[1].contains("error"));
}

TEST_CASE("score sends the service token from the environment") {
  test::MockService svc;
  svc.on("/v1/embed_text", [](const json& b, int&) { return test::MockService::reference_text_reply(b); });
  svc.on("/v1/embed_image", [](const json& b, int&) { return test::MockService::reference_image_reply(b); });
  test::TempDir dir;
  write_lines(dir / "in.jsonl", {{{"response", kGood}, {"caption", "x"}}});
  const auto r = sgp_cli(dir, "score --size 32 --in " + q(dir / "in.jsonl") + " --out " + q(dir / "o.jsonl"),
                         "SGP_SERVICE_URL=" + svc.url() + " SGP_SERVICE_TOKEN=abc");
  REQUIRE(r.code == 0);
  bool saw = false;
  for (const auto& req : svc.requests())
    if (req.path == "/v1/embed_text") saw = req.headers.count("X-Service-Token") && req.headers.at("X-Service-Token") == "abc";
  CHECK(saw);
}

TEST_CASE("train-toy writes a trace and a snapshot") {
  test::TempDir dir;
  const auto r = sgp_cli(dir, "train-toy --iters 5 --trace " + q(dir / "t.jsonl") + " --snapshot " + q(dir / "p.bin"));
  REQUIRE(r.code == 0);
  const auto trace = read_jsonl(dir / "t.jsonl");
  REQUIRE(trace.size() == 6);
  for (const char* k : {"iter", "mean_reward", "fmt_rate", "entropy"}) CHECK(trace[0].contains(k));
  const auto policy = load_policy(dir / "p.bin");
  CHECK(policy.vocab_size() == int(ToyGrammar::color_shape().vocab.size()));
  CHECK(r.out.find("iter 5") != std::string::npos);
  CHECK(sgp_cli(dir, "train-toy --iters -1 --trace " + q(dir / "t.jsonl") + " --snapshot " + q(dir / "p.bin")).code == 1);
  CHECK(sgp_cli(dir, "train-toy --group-size 1 --trace " + q(dir / "t.jsonl") + " --snapshot " + q(dir / "p.bin")).code == 1);
}

TEST_CASE("bench gen, judge and report") {
  test::TempDir dir;
  REQUIRE(sgp_cli(dir, "bench gen --seed 1 --per-subcategory 2 --numeracy-per-count 1 --out " + q(dir / "p.jsonl")).code == 0);
  const auto prompts = read_jsonl(dir / "p.jsonl");
  CHECK(prompts.size() == 6 * 2 + 8);

  std::vector<json> responses;
  for (std::size_t i = 0; i < prompts.size(); ++i)
    if (i != 0) responses.push_back({{"prompt_id", prompts[i]["id"]}, {"response", i == 1 ? kBanned : kGood}});
  write_lines(dir / "r.jsonl", responses);

  test::MockService svc;
  svc.on("/v1/judge", [](const json&, int&) { return json{{"reasoning", "fine"}, {"score", 50}}; });
  const auto j = sgp_cli(dir, "bench judge --size 32 --service-url " + svc.url() + " --prompts " + q(dir / "p.jsonl") +
                                  " --responses " + q(dir / "r.jsonl") + " --out " + q(dir / "v.jsonl"));
  CHECK(j.code == 0);  // a missing response is unjudged, not a service failure
  const auto verdicts = read_jsonl(dir / "v.jsonl");
  REQUIRE_FALSE(verdicts.empty());
  CHECK(verdicts[0]["score"].is_null());
  CHECK(verdicts[0]["error"] == "no response for prompt");
  bool gated = false;
  for (const auto& v : verdicts)
    if (v["prompt_id"] == prompts[1]["id"]) gated = v["score"] == 0.0;
  CHECK(gated);

  const auto rep = sgp_cli(dir, "bench report --model toy --verdicts " + q(dir / "v.jsonl") + " --tsv " + q(dir / "t.tsv"));
  REQUIRE(rep.code == 0);
  const auto tsv = read_file(dir / "t.tsv");
  CHECK(tsv.rfind("Model\tColor", 0) == 0);
  CHECK(tsv.find("toy\t") != std::string::npos);
  CHECK(rep.out.find("toy") != std::string::npos);
}

TEST_CASE("analyze stats and bon") {
  test::TempDir dir;
  write_lines(dir / "s.jsonl",
              {{{"id", "a"}, {"step", 10}, {"svg", "<svg viewBox=\"0 0 4 4\"><!-- x (optional) --><rect/><circle/></svg>"}},
               {{"id", "b"}, {"response", kGood}}});
  REQUIRE(sgp_cli(dir, "analyze stats --in " + q(dir / "s.jsonl") + " --out " + q(dir / "s.tsv")).code == 0);
  const auto stats = read_file(dir / "s.tsv");
  CHECK(stats.rfind("id\tstep\tparse_ok\telement_count", 0) == 0);
  CHECK(stats.find("a\t10\t1\t2\t") != std::string::npos);

  std::vector<json> model, base;
  for (int p = 0; p < 3; ++p)
    for (int i = 0; i < 8; ++i) {
      model.push_back({{"prompt_id", "p" + std::to_string(p)}, {"fused", 0.1 * i}});
      base.push_back({{"prompt_id", "p" + std::to_string(p)}, {"fused", 0.05 * i}});
    }
  model.push_back({{"prompt_id", "p0"}, {"fused", nullptr}, {"error", "transport"}});
  write_lines(dir / "m.jsonl", model);
  write_lines(dir / "b.jsonl", base);
  const auto r = sgp_cli(dir, "analyze bon --in " + q(dir / "m.jsonl") + " --baseline " + q(dir / "b.jsonl") +
                                  " --out " + q(dir / "bon.tsv") + " --plot " + q(dir / "bon.svg"));
  REQUIRE(r.code == 0);
  const auto tsv = read_file(dir / "bon.tsv");
  CHECK(tsv.rfind("n\tscore\tbaseline\tdelta\n1\t", 0) == 0);
  CHECK(tsv.find("\n8\t0.7") != std::string::npos);
  CHECK(r.out.find("gap fit") != std::string::npos);
  CHECK(read_file(dir / "bon.svg").find("<svg") != std::string::npos);

  CHECK(sgp_cli(dir, "analyze bon --n 1,16 --in " + q(dir / "m.jsonl") + " --out " + q(dir / "x.tsv")).code == 1);
}

TEST_CASE("corpus filter and mix") {
  test::TempDir dir;
  const auto fixture = test::fixture_dir() / "corpus_filter.jsonl";
  const auto f = sgp_cli(dir, "corpus filter --in " + q(fixture) + " --out " + q(dir / "kept.jsonl") + " --dropped " +
                                  q(dir / "dropped.jsonl"));
  REQUIRE(f.code == 0);
  CHECK(f.out.find("kept 20 dropped 20") != std::string::npos);
  const auto dropped = read_jsonl(dir / "dropped.jsonl");
  REQUIRE(dropped.size() == 20);
  for (const auto& d : dropped) CHECK(d["drop_reason"] == d["reason"]);
  const auto kept = read_jsonl(dir / "kept.jsonl");
  for (const auto& k : kept) CHECK(k["expect"] == "keep");

  write_file_atomic(dir / "kw.txt", "# custom\ncircle\n");
  REQUIRE(sgp_cli(dir, "corpus filter --keywords " + q(dir / "kw.txt") + " --in " + q(fixture) + " --out " +
                           q(dir / "k2.jsonl")).code == 0);
  std::set<std::string> ids2;
  for (const auto& k : read_jsonl(dir / "k2.jsonl")) ids2.insert(k["id"].get<std::string>());
  CHECK_FALSE(ids2.count("k00"));
  CHECK(ids2.count("k16"));  // "circles" is a different word
  CHECK_FALSE(ids2.count("d07"));

  const auto m = sgp_cli(dir, "corpus mix --in " + q(dir / "kept.jsonl") + " --in " + q(dir / "dropped.jsonl") +
                                  " --weights 0.5,0.5 --target 10 --seed 4 --out " + q(dir / "mix.jsonl"));
  REQUIRE(m.code == 0);
  CHECK(read_jsonl(dir / "mix.jsonl").size() == 10);
  CHECK(sgp_cli(dir, "corpus mix --in " + q(dir / "kept.jsonl") + " --weights 0.5,0.5 --target 10 --seed 4 --out " +
                         q(dir / "mix.jsonl")).code == 1);
}
