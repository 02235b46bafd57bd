#include "support.hpp"

#include <cstdio>
#include <sstream>

#include <httplib.h>
#include <unistd.h>

#include "sgp/embed.hpp"
#include "sgp/io.hpp"
#include "sgp/png.hpp"
#include "sgp/rng.hpp"

namespace sgp::test {

std::filesystem::path fixture_dir() { return SGP_FIXTURE_DIR; }
std::filesystem::path golden_dir() { return SGP_GOLDEN_DIR; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("sgp-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<GateCase> load_gate_cases() {
  std::vector<GateCase> out;
  for (const auto& j : read_jsonl(fixture_dir() / "format_gate.jsonl")) {
    GateCase c;
    c.name = j.at("name");
    c.response = j.at("response");
    c.structure_ok = j.at("structure_ok");
    c.parse_ok = j.at("parse_ok");
    if (!j.at("banned").is_null()) c.banned = j.at("banned").get<std::string>();
    c.render_ok = j.at("render_ok");
    c.fmt = j.at("fmt");
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

bool chance(std::mt19937_64& rng, double p) { return uniform01(rng) < p; }

std::string random_style(std::mt19937_64& rng, bool allow_fill = true) {
  std::string s;
  if (!allow_fill || chance(rng, 0.1))
    s += " fill=\"none\"";
  else
    s += " fill=\"" + random_color(rng) + "\"";
  if (chance(rng, 0.3))
    s += " stroke=\"" + random_color(rng) + "\" stroke-width=\"" + fmt(uniform(rng, 0.5, 3.0)) + "\"";
  if (chance(rng, 0.2)) s += " opacity=\"" + fmt(uniform(rng, 0.2, 1.0)) + "\"";
  if (chance(rng, 0.2)) s += " fill-opacity=\"" + fmt(uniform(rng, 0.2, 1.0)) + "\"";
  if (chance(rng, 0.2)) s += " fill-rule=\"evenodd\"";
  return s;
}

std::string points(std::mt19937_64& rng, int n, double x0, double y0, double x1, double y1) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + fmt(uniform(rng, x0, x1)) + "," + fmt(uniform(rng, y0, y1));
  return s;
}

std::string random_path(std::mt19937_64& rng, double x0, double y0, double x1, double y1) {
  auto X = [&] { return fmt(uniform(rng, x0, x1)); };
  auto Y = [&] { return fmt(uniform(rng, y0, y1)); };
  std::string d = "M " + X() + " " + Y();
  const int segments = 2 + static_cast<int>(uniform_index(rng, 4));
  for (int i = 0; i < segments; ++i) {
    switch (uniform_index(rng, 4)) {
      case 0: d += " L " + X() + " " + Y(); break;
      case 1: d += " C " + X() + " " + Y() + " " + X() + " " + Y() + " " + X() + " " + Y(); break;
      case 2: d += " Q " + X() + " " + Y() + " " + X() + " " + Y(); break;
      default: {
        const double span = std::min(x1 - x0, y1 - y0);
        d += " A " + fmt(uniform(rng, 0.2, 0.5) * span) + " " + fmt(uniform(rng, 0.2, 0.5) * span) + " " +
             fmt(uniform(rng, 0, 90)) + " " + std::to_string(uniform_index(rng, 2)) + " " +
             std::to_string(uniform_index(rng, 2)) + " " + X() + " " + Y();
      }
    }
  }
  if (chance(rng, 0.6)) d += " Z";
  return d;
}

std::string random_primitive(std::mt19937_64& rng, double w, double h) {
  const double x0 = -0.2 * w, y0 = -0.2 * h, x1 = 1.2 * w, y1 = 1.2 * h;
  auto X = [&] { return fmt(uniform(rng, x0, x1)); };
  auto Y = [&] { return fmt(uniform(rng, y0, y1)); };
  const double m = std::min(w, h);
  switch (uniform_index(rng, 7)) {
    case 0: {
      std::string s = "<rect x=\"" + X() + "\" y=\"" + Y() + "\" width=\"" + fmt(uniform(rng, 1, w * 0.6)) +
                      "\" height=\"" + fmt(uniform(rng, 1, h * 0.6)) + "\"";
      if (chance(rng, 0.3)) s += " rx=\"" + fmt(uniform(rng, 0.5, 3)) + "\"";
      return s + random_style(rng) + "/>";
    }
    case 1:
      return "<circle cx=\"" + X() + "\" cy=\"" + Y() + "\" r=\"" + fmt(uniform(rng, 1, m * 0.4)) + "\"" +
             random_style(rng) + "/>";
    case 2:
      return "<ellipse cx=\"" + X() + "\" cy=\"" + Y() + "\" rx=\"" + fmt(uniform(rng, 1, w * 0.4)) + "\" ry=\"" +
             fmt(uniform(rng, 1, h * 0.4)) + "\"" + random_style(rng) + "/>";
    case 3:
      return "<line x1=\"" + X() + "\" y1=\"" + Y() + "\" x2=\"" + X() + "\" y2=\"" + Y() + "\" stroke=\"" +
             random_color(rng) + "\" stroke-width=\"" + fmt(uniform(rng, 0.5, 3)) + "\"/>";
    case 4:
      return "<polyline points=\"" + points(rng, 3 + static_cast<int>(uniform_index(rng, 4)), x0, y0, x1, y1) +
             "\"" + random_style(rng) + "/>";
    case 5:
      return "<polygon points=\"" + points(rng, 3 + static_cast<int>(uniform_index(rng, 4)), x0, y0, x1, y1) +
             "\"" + random_style(rng) + "/>";
    default:
      return "<path d=\"" + random_path(rng, x0, y0, x1, y1) + "\"" + random_style(rng) + "/>";
  }
}

std::string random_transform(std::mt19937_64& rng, double w, double h) {
  switch (uniform_index(rng, 4)) {
    case 0: return "translate(" + fmt(uniform(rng, -w / 4, w / 4)) + " " + fmt(uniform(rng, -h / 4, h / 4)) + ")";
    case 1: return "rotate(" + fmt(uniform(rng, -180, 180)) + " " + fmt(w / 2) + " " + fmt(h / 2) + ")";
    case 2: return "scale(" + fmt(uniform(rng, 0.5, 1.5)) + ")";
    default: return "skewX(" + fmt(uniform(rng, -30, 30)) + ")";
  }
}

}  // namespace

std::string random_color(std::mt19937_64& rng) {
  static const char* const kNamed[] = {"red", "green", "blue", "yellow", "purple", "orange", "black", "white",
                                       "teal", "navy", "gold", "pink"};
  if (chance(rng, 0.4)) return kNamed[uniform_index(rng, std::size(kNamed))];
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<unsigned>(uniform_index(rng, 256)),
                static_cast<unsigned>(uniform_index(rng, 256)), static_cast<unsigned>(uniform_index(rng, 256)));
  return buf;
}

std::string RandomDoc::source() const { return source_with("", elements.size()); }

std::string RandomDoc::source_with(const std::string& extra, std::size_t pos) const {
  std::string s = "<svg viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">";
  for (std::size_t i = 0; i <= elements.size(); ++i) {
    if (i == pos) s += extra;
    if (i < elements.size()) s += elements[i];
  }
  return s + "</svg>";
}

RandomDoc random_document(std::mt19937_64& rng) {
  RandomDoc doc;
  doc.width = std::round(uniform(rng, 20, 100));
  doc.height = std::round(uniform(rng, 20, 100));
  const int n = 1 + static_cast<int>(uniform_index(rng, 8));
  for (int i = 0; i < n; ++i) {
    if (chance(rng, 0.2)) {
      std::string g = "<g transform=\"" + random_transform(rng, doc.width, doc.height) + "\"";
      if (chance(rng, 0.5)) g += " fill=\"" + random_color(rng) + "\"";
      if (chance(rng, 0.3)) g += " opacity=\"" + fmt(uniform(rng, 0.3, 1.0)) + "\"";
      g += ">";
      const int kids = 1 + static_cast<int>(uniform_index(rng, 3));
      for (int k = 0; k < kids; ++k) {
        if (chance(rng, 0.3)) g += "<!-- part " + std::to_string(k) + " -->";
        g += random_primitive(rng, doc.width, doc.height);
      }
      doc.elements.push_back(g + "</g>");
    } else {
      doc.elements.push_back(random_primitive(rng, doc.width, doc.height));
    }
  }
  return doc;
}

std::string random_outside_element(std::mt19937_64& rng, const RandomDoc& doc) {
  const double w = doc.width, h = doc.height;
  const double sw = uniform(rng, 0.5, 3.0);
  const double margin = 4.0 * sw + 1.0;  // covers miter spikes (limit 4)
  const double size = uniform(rng, 2, 30);
  // Box [x0,x1]x[y0,y1] that holds the geometry, on a random side of the viewBox.
  double x0, y0;
  switch (uniform_index(rng, 4)) {
    case 0: x0 = w + margin + uniform(rng, 0, 20), y0 = uniform(rng, -h, 2 * h); break;
    case 1: x0 = -margin - size - uniform(rng, 0, 20), y0 = uniform(rng, -h, 2 * h); break;
    case 2: x0 = uniform(rng, -w, 2 * w), y0 = h + margin + uniform(rng, 0, 20); break;
    default: x0 = uniform(rng, -w, 2 * w), y0 = -margin - size - uniform(rng, 0, 20); break;
  }
  const double x1 = x0 + size, y1 = y0 + size;
  std::string stroke = chance(rng, 0.5) ? " stroke=\"" + random_color(rng) + "\" stroke-width=\"" + fmt(sw) + "\"" : "";
  std::string fill = " fill=\"" + random_color(rng) + "\"";
  switch (uniform_index(rng, 4)) {
    case 0:
      return "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(size) + "\" height=\"" +
             fmt(size) + "\"" + fill + stroke + "/>";
    case 1:
      return "<circle cx=\"" + fmt(x0 + size / 2) + "\" cy=\"" + fmt(y0 + size / 2) + "\" r=\"" +
             fmt(size / 2 - 0.01) + "\"" + fill + stroke + "/>";
    case 2:
      return "<polygon points=\"" + points(rng, 5, x0, y0, x1, y1) + "\"" + fill + stroke + "/>";
    default: {
      // Control points stay in the box, so the curve does too.
      auto X = [&] { return fmt(uniform(rng, x0, x1)); };
      auto Y = [&] { return fmt(uniform(rng, y0, y1)); };
      return "<path d=\"M " + X() + " " + Y() + " C " + X() + " " + Y() + " " + X() + " " + Y() + " " + X() + " " +
             Y() + " Q " + X() + " " + Y() + " " + X() + " " + Y() + " Z\"" + fill + stroke + "/>";
    }
  }
}

namespace {

std::string base64_decode(const std::string& in) {
  static const std::string kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  unsigned buffer = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const auto v = kAlphabet.find(c);
    if (v == std::string::npos) throw std::invalid_argument("bad base64");
    buffer = (buffer << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buffer >> bits) & 0xFF));
    }
  }
  return out;
}

nlohmann::json vectors_json(const std::vector<EmbeddingVector>& vs) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& v : vs) rows.push_back(v.values);
  return rows;
}

}  // namespace

struct MockService::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  mutable std::mutex mutex;
  std::map<std::string, Handler> handlers;
  std::vector<Request> log;

  void route(const std::string& path, const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.path = path;
    for (const auto& [k, v] : req.headers) r.headers[k] = v;
    try {
      r.body = req.body.empty() ? nlohmann::json() : nlohmann::json::parse(req.body);
    } catch (...) {
      r.body = req.body;
    }
    Handler h;
    {
      std::lock_guard lock(mutex);
      log.push_back(r);
      auto it = handlers.find(path);
      if (it != handlers.end()) h = it->second;
    }
    if (!h) {
      res.status = 404;
      return;
    }
    int status = 200;
    nlohmann::json reply = h(r.body, status);
    res.status = status;
    if (reply.is_string() && status != 200)
      res.set_content(reply.get<std::string>(), "text/plain");
    else if (reply.is_string() && reply.get<std::string>().rfind("RAW:", 0) == 0)
      res.set_content(reply.get<std::string>().substr(4), "application/json");
    else
      res.set_content(reply.dump(), "application/json");
  }
};

MockService::MockService() : impl_(std::make_unique<Impl>()) {
  for (const char* path : {"/v1/embed_text", "/v1/embed_image", "/v1/judge"})
    impl_->server.Post(path, [this, p = std::string(path)](const httplib::Request& req, httplib::Response& res) {
      impl_->route(p, req, res);
    });
  impl_->server.Get("/v1/health", [this](const httplib::Request& req, httplib::Response& res) {
    impl_->route("/v1/health", req, res);
  });
  on("/v1/health", [](const nlohmann::json&, int&) { return nlohmann::json{{"status", "ok"}}; });
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockService::~MockService() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockService::url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

void MockService::on(const std::string& path, Handler handler) {
  std::lock_guard lock(impl_->mutex);
  impl_->handlers[path] = std::move(handler);
}

std::vector<MockService::Request> MockService::requests() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->log;
}

std::size_t MockService::request_count(const std::string& path) const {
  std::lock_guard lock(impl_->mutex);
  std::size_t n = 0;
  for (const auto& r : impl_->log) n += r.path == path;
  return n;
}

nlohmann::json MockService::reference_text_reply(const nlohmann::json& body) {
  std::vector<EmbeddingVector> vs;
  for (const auto& t : body.at("texts")) vs.push_back(reference_embed_text(t.get<std::string>()));
  nlohmann::json reply{{"dim", kReferenceDim}, {"vectors", vectors_json(vs)}};
  if (body.contains("request_id")) reply["request_id"] = body["request_id"];
  return reply;
}

nlohmann::json MockService::reference_image_reply(const nlohmann::json& body) {
  std::vector<EmbeddingVector> vs;
  for (const auto& b64 : body.at("images_png_b64")) {
    const std::string png = base64_decode(b64.get<std::string>());
    vs.push_back(reference_embed_image(
        decode_png(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()))));
  }
  nlohmann::json reply{{"dim", kReferenceDim}, {"vectors", vectors_json(vs)}};
  if (body.contains("request_id")) reply["request_id"] = body["request_id"];
  return reply;
}

}  // namespace sgp::test
