#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <doctest.h>
#include <json.hpp>

#include "evoplace/llm.hpp"
#include "evoplace/prompts.hpp"
#include "evoplace/strategy.hpp"
#include "helpers.hpp"

using namespace evoplace;
using namespace evoplace::testing;
using dsl::Kind;
using nlohmann::json;

namespace {

// Replays scripted responses and records what was sent.
class ScriptedTransport : public llm::Transport {
 public:
  explicit ScriptedTransport(std::vector<llm::HttpResponse> script) : script_(std::move(script)) {}
  llm::HttpResponse post(const std::string& endpoint, const std::string& path, const std::string& body,
                         const std::map<std::string, std::string>& headers, double) override {
    endpoints.push_back(endpoint);
    paths.push_back(path);
    bodies.push_back(body);
    auth.push_back(headers.count("Authorization") ? headers.at("Authorization") : "");
    const auto r = script_[std::min(calls, script_.size() - 1)];
    ++calls;
    return r;
  }
  std::size_t calls = 0;
  std::vector<std::string> endpoints, paths, bodies, auth;

 private:
  std::vector<llm::HttpResponse> script_;
};

llm::HttpResponse reply(int status, std::string body = "", bool timed_out = false) {
  llm::HttpResponse r;
  r.status = status;
  r.body = std::move(body);
  r.timed_out = timed_out;
  return r;
}

std::string chat_body(const std::string& content) {
  return json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

llm::BackendConfig remote_cfg(const std::string& env = "EVOPLACE_TEST_KEY") {
  llm::BackendConfig cfg;
  cfg.mode = llm::Mode::Remote;
  cfg.endpoint = "https://example.invalid/v1";
  cfg.model = "test-model";
  cfg.api_key_env = env;
  return cfg;
}

json fixture() {
  std::ifstream in(data_dir() / "fixtures" / "chat_exchange.json");
  return json::parse(in);
}

// Paths (statement index, then child indices) of the maximal differing subtrees.
void diff_paths(const dsl::Expr& a, const dsl::Expr& b, std::vector<int>& path, std::vector<std::vector<int>>& out) {
  const bool same_node = a.op == b.op && a.name == b.name && a.args.size() == b.args.size() &&
                         (a.op != dsl::Op::Num || a.number == b.number);
  if (!same_node) {
    out.push_back(path);
    return;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    path.push_back(static_cast<int>(i));
    diff_paths(a.args[i], b.args[i], path, out);
    path.pop_back();
  }
}

struct Diff {
  std::size_t nodes = 0;    // maximal differing subtrees
  bool one_region = false;  // all of them under one node inside one statement
};

Diff diff(const dsl::Program& a, const dsl::Program& b) {
  Diff d;
  if (a.stmts.size() != b.stmts.size()) return d;
  std::vector<std::vector<int>> paths;
  for (std::size_t i = 0; i < a.stmts.size(); ++i) {
    if (a.stmts[i].name != b.stmts[i].name || a.stmts[i].is_let != b.stmts[i].is_let) return d;
    std::vector<int> path{static_cast<int>(i)};
    diff_paths(a.stmts[i].value, b.stmts[i].value, path, paths);
  }
  d.nodes = paths.size();
  if (paths.empty()) return d;
  d.one_region = true;
  for (const auto& p : paths) d.one_region = d.one_region && p.front() == paths.front().front();
  return d;
}

std::vector<std::pair<std::string, Kind>> corpus() {
  std::vector<std::pair<std::string, Kind>> out;
  for (const auto& e : std::filesystem::directory_iterator(data_dir() / "strategies")) {
    const auto p = dsl::load_strategy(e.path());
    out.emplace_back(p.source, p.kind);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("hash embedding basics") {
  const auto empty = llm::hash_embed("");
  CHECK(empty.zero);
  for (double v : empty.values) CHECK(v == 0.0);
  CHECK(code_of([&] { llm::cosine(empty, empty); }) == ErrorCode::ZeroNorm);

  const std::string s = "x_init = center_x + 0.01 * span * rand_n(0)";
  const auto a = llm::hash_embed(s);
  const auto b = llm::hash_embed(s);
  CHECK(a.values == b.values);
  CHECK(a.dim == 256);
  double norm = 0;
  for (double v : a.values) norm += v * v;
  CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-9);
  CHECK(llm::cosine(a, b) == doctest::Approx(1.0).epsilon(1e-12));

  const auto edit = llm::hash_embed("x_init = center_x + 0.02 * span * rand_n(0)");
  const auto other = llm::hash_embed("diag_scale = sqrt(area / median_area)");
  CHECK(llm::cosine(a, edit) > llm::cosine(a, other));
}

TEST_CASE("disjoint alphabets embed nearly orthogonally") {
  Rng rng(5);
  auto word = [&](const std::string& alphabet) {
    std::string w;
    const std::size_t len = 20 + rng.below(40);
    for (std::size_t i = 0; i < len; ++i) w += alphabet[rng.below(alphabet.size())];
    return w;
  };
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto a = llm::hash_embed(word("abcdefghijklm"));
    const auto b = llm::hash_embed(word("nopqrstuvwxyz"));
    worst = std::max(worst, std::abs(llm::cosine(a, b)));
  }
  CHECK(worst < 0.2);
}

TEST_CASE("mock generation always parses") {
  for (Kind kind : {Kind::Init, Kind::Precond, Kind::OptPolicy}) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      try {
        dsl::parse_strategy(llm::mock_generate(seed, kind), kind);
        ++ok;
      } catch (const Error&) {
      }
    }
    CHECK(ok == 1000);
  }
  CHECK(llm::mock_generate(0, Kind::Init) == llm::mock_generate(0, Kind::Init));
  CHECK(llm::mock_generate(0, Kind::Init) != llm::mock_generate(1, Kind::Init));
}

TEST_CASE("mutation touches exactly one region") {
  const std::string center = dsl::identity_source(Kind::Init);
  const auto parent = dsl::parse_program(center);
  std::map<llm::MutationOp, int> ops;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    llm::MutationOp op;
    const auto child = llm::mock_mutate(seed, center, Kind::Init, &op);
    ++ops[op];
    const auto d = diff(parent, dsl::parse_program(child));
    CHECK(d.one_region);
    if (op != llm::MutationOp::SubtreeRegeneration) CHECK(d.nodes == 1);
  }
  CHECK(ops.size() >= 3);
  CHECK(llm::mock_mutate(9, center, Kind::Init) == llm::mock_mutate(9, center, Kind::Init));
}

TEST_CASE("mutations of the corpus parse and differ in one region") {
  const auto files = corpus();
  int ok = 0, one_region = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto& [src, kind] = files[i % files.size()];
    llm::MutationOp op;
    const auto child = llm::mock_mutate(i, src, kind, &op);
    try {
      dsl::parse_strategy(child, kind);
      ++ok;
    } catch (const Error&) {
    }
    const auto d = diff(dsl::parse_program(src), dsl::parse_program(child));
    one_region += d.one_region && (op == llm::MutationOp::SubtreeRegeneration || d.nodes == 1);
  }
  CHECK(ok == 1000);
  CHECK(one_region == 1000);
}

TEST_CASE("mock chat is deterministic and offline") {
  llm::BackendConfig cfg;
  auto forbidden = std::make_shared<llm::ForbiddenTransport>();
  llm::Gateway gw(cfg, forbidden);
  const std::vector<llm::Message> msgs = {{"system", "x"},
                                          {"user", llm::step_marker("final", Kind::Init) + "\nwrite it"}};
  const auto a = gw.chat(msgs, 11);
  const auto b = gw.chat(msgs, 11);
  CHECK(a == b);
  CHECK(a.find("```") != std::string::npos);
  CHECK(gw.chat(msgs, 12) != a);
  CHECK(gw.embed("abc").values == llm::hash_embed("abc").values);
  CHECK(forbidden->attempts() == 0);
}

TEST_CASE("missing key fails before any network call") {
  ::unsetenv("EVOPLACE_TEST_KEY");
  auto forbidden = std::make_shared<llm::ForbiddenTransport>();
  llm::Gateway gw(remote_cfg(), forbidden);
  CHECK(code_of([&] { gw.chat({{"user", "hi"}}, 0); }) == ErrorCode::AuthError);
  CHECK(forbidden->attempts() == 0);
}

TEST_CASE("remote config needs endpoint and model") {
  auto cfg = remote_cfg();
  cfg.endpoint.clear();
  CHECK(code_of([&] { llm::Gateway gw(cfg, std::make_shared<llm::ForbiddenTransport>()); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("retry and error mapping") {
  ::setenv("EVOPLACE_TEST_KEY", "sk-test", 1);
  std::vector<double> sleeps;
  auto sleeper = [&](double s) { sleeps.push_back(s); };

  auto t = std::make_shared<ScriptedTransport>(std::vector{reply(429), reply(503), reply(200, chat_body("ok"))});
  llm::Gateway gw(remote_cfg(), t, sleeper);
  llm::CallRecord rec;
  CHECK(gw.chat({{"user", "hi"}}, 0, std::nullopt, &rec) == "ok");
  CHECK(t->calls == 3);
  CHECK(sleeps == std::vector<double>{1.0, 2.0});
  CHECK(rec.attempts == 3);
  CHECK(t->paths[0] == "/chat/completions");
  CHECK(t->auth[0] == "Bearer sk-test");
  CHECK(rec.request.find("sk-test") == std::string::npos);

  sleeps.clear();
  auto always429 = std::make_shared<ScriptedTransport>(std::vector{reply(429)});
  llm::Gateway g2(remote_cfg(), always429, sleeper);
  CHECK(code_of([&] { g2.chat({{"user", "hi"}}, 0); }) == ErrorCode::RateLimited);
  CHECK(always429->calls == 5);
  CHECK(sleeps == std::vector<double>{1.0, 2.0, 4.0, 8.0});

  auto denied = std::make_shared<ScriptedTransport>(std::vector{reply(401)});
  llm::Gateway g3(remote_cfg(), denied, sleeper);
  CHECK(code_of([&] { g3.chat({{"user", "hi"}}, 0); }) == ErrorCode::AuthError);
  CHECK(denied->calls == 1);

  auto slow = std::make_shared<ScriptedTransport>(std::vector{reply(0, "", true)});
  llm::Gateway g4(remote_cfg(), slow, sleeper);
  CHECK(code_of([&] { g4.chat({{"user", "hi"}}, 0); }) == ErrorCode::Timeout);

  auto bad = std::make_shared<ScriptedTransport>(std::vector{reply(400, "nope")});
  llm::Gateway g5(remote_cfg(), bad, sleeper);
  CHECK(code_of([&] { g5.chat({{"user", "hi"}}, 0); }) == ErrorCode::TransportError);
  CHECK(bad->calls == 1);

  auto garbled = std::make_shared<ScriptedTransport>(std::vector{reply(200, "{\"choices\": []}")});
  llm::Gateway g6(remote_cfg(), garbled, sleeper);
  CHECK(code_of([&] { g6.chat({{"user", "hi"}}, 0); }) == ErrorCode::MalformedResponse);
}

TEST_CASE("recorded exchange replays into a valid candidate") {
  ::setenv("EVOPLACE_TEST_KEY", "sk-test", 1);
  const json fx = fixture();
  const json& chat = fx.at("chat");
  auto t = std::make_shared<ScriptedTransport>(std::vector{reply(chat.at("status"), chat.at("response").dump())});
  auto cfg = remote_cfg();
  cfg.model = chat.at("request").at("model");
  llm::Gateway gw(cfg, t);
  std::vector<llm::Message> msgs;
  for (const auto& m : chat.at("request").at("messages")) msgs.push_back({m.at("role"), m.at("content")});
  const auto text = gw.chat(msgs, 0);
  CHECK(text == chat.at("expected_content").get<std::string>());
  CHECK(json::parse(t->bodies[0]) == chat.at("request"));

  const auto code = prompt::extract_code_block(text);
  CHECK(code == chat.at("expected_program").get<std::string>());
  const auto p = dsl::parse_strategy(code, dsl::parse_kind(fx.at("kind").get<std::string>()));
  CHECK(p.kind == Kind::Init);

  const json& emb = fx.at("embedding");
  auto te = std::make_shared<ScriptedTransport>(std::vector{reply(emb.at("status"), emb.at("response").dump())});
  auto ecfg = remote_cfg();
  ecfg.embedding_model = emb.at("request").at("model");
  llm::Gateway ge(ecfg, te);
  const auto v = ge.embed(emb.at("request").at("input"));
  CHECK(v.values == emb.at("expected").get<std::vector<double>>());
  CHECK(v.source == llm::EmbeddingSource::Remote);
  CHECK(te->paths[0] == "/embeddings");
}

TEST_CASE("in-flight requests are capped") {
  ::setenv("EVOPLACE_TEST_KEY", "sk-test", 1);
  class SlowTransport : public llm::Transport {
   public:
    llm::HttpResponse post(const std::string&, const std::string&, const std::string&,
                           const std::map<std::string, std::string>&, double) override {
      const int now = ++active;
      int seen = peak.load();
      while (now > seen && !peak.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      --active;
      return reply(200, chat_body("ok"));
    }
    std::atomic<int> active{0}, peak{0};
  };
  auto t = std::make_shared<SlowTransport>();
  auto cfg = remote_cfg();
  cfg.max_in_flight = 2;
  llm::Gateway gw(cfg, t);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { gw.chat({{"user", "hi"}}, 0); });
  for (auto& th : threads) th.join();
  CHECK(t->peak.load() <= 2);
  CHECK(gw.peak_in_flight() <= 2);
}

TEST_CASE("chat response parsing") {
  CHECK(llm::parse_chat_response(chat_body("hello")) == "hello");
  CHECK(code_of([] { llm::parse_chat_response("not json"); }) == ErrorCode::MalformedResponse);
  CHECK(code_of([] { llm::parse_embedding_response("{\"data\": [{}]}"); }) == ErrorCode::MalformedResponse);
}
