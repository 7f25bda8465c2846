#include <cmath>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "evoplace/engine.hpp"
#include "evoplace/optimizer.hpp"
#include "evoplace/strategy.hpp"
#include "helpers.hpp"

using namespace evoplace;
using namespace evoplace::testing;
using dsl::Kind;

namespace {

const char* kCenter = "x_init = center_x + 0.0 * area; y_init = center_y + 0.0 * area";

io::BenchmarkCase three_cells() {
  // c0 on nets n0 (w 2) and n1 (w 0.5); c1 on n0; c2 on n1 and n2 (w 3)
  return make_case({{"a"}, {"b"}, {"c"}},
                   {{{0, 0.0, 0.0}, {1, 0.0, 0.0}}, {{0, 0.0, 0.0}, {2, 0.0, 0.0}}, {{2, 0.0, 0.0}, {1, 0.0, 0.0}}},
                   {0, 0, 10, 10}, {2.0, 0.5, 3.0});
}

}  // namespace

TEST_CASE("center init parses") {
  const auto p = dsl::parse_strategy(kCenter, Kind::Init);
  CHECK(p.kind == Kind::Init);
  CHECK(p.ast.stmts.size() == 2);
  CHECK(dsl::infer_kind(kCenter) == Kind::Init);
}

TEST_CASE("parse errors") {
  CHECK(code_of([] { dsl::parse_strategy("x_init = center_x", Kind::Init); }) == ErrorCode::MissingOutput);
  try {
    dsl::parse_strategy("x_init = center_x\ny_init = (center_y +", Kind::Init);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(e.line() == 2);
    CHECK(e.column() > 0);
  }
  CHECK(code_of([] { dsl::parse_strategy("x_init = bogus; y_init = 1", Kind::Init); }) == ErrorCode::TypeError);
  // vector into a scalar output
  CHECK(code_of([] { dsl::parse_strategy("step_scale = area; noise_level = 0; momentum_scale = 1", Kind::OptPolicy); }) ==
        ErrorCode::TypeError);
  // stats of another kind are not visible
  CHECK(code_of([] { dsl::parse_strategy("diag_scale = bb_step", Kind::Precond); }) == ErrorCode::TypeError);
  CHECK(code_of([] { dsl::parse_strategy("x_init = 1; x_init = 2; y_init = 1", Kind::Init); }) == ErrorCode::TypeError);
  CHECK(code_of([] { dsl::parse_strategy("x_init = kmeans1d(area, 17); y_init = 1", Kind::Init); }) != ErrorCode::ParseError);
}

TEST_CASE("budget limits") {
  std::string deep = "x_init = ";
  for (int i = 0; i < 200; ++i) deep += "(";
  deep += "1";
  for (int i = 0; i < 200; ++i) deep += ")";
  deep += "; y_init = 1";
  CHECK(code_of([&] { dsl::parse_strategy(deep, Kind::Init); }) == ErrorCode::BudgetError);
  std::string many;
  for (int i = 0; i < 300; ++i) many += "let v" + std::to_string(i) + " = 1\n";
  many += "x_init = 1\ny_init = 1\n";
  CHECK(code_of([&] { dsl::parse_strategy(many, Kind::Init); }) == ErrorCode::BudgetError);
}

TEST_CASE("canonical printing roundtrips") {
  for (const auto& entry : std::filesystem::directory_iterator(data_dir() / "strategies")) {
    std::ifstream in(entry.path());
    std::stringstream ss;
    ss << in.rdbuf();
    const auto ast = dsl::parse_program(ss.str());
    const auto text = dsl::print_program(ast);
    CHECK(dsl::parse_program(text) == ast);
    CHECK(dsl::print_program(dsl::parse_program(text)) == text);
  }
}

TEST_CASE("shipped corpus parses and type-checks") {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir() / "strategies")) {
    const auto p = dsl::load_strategy(entry.path());
    CHECK_FALSE(p.id.empty());
    ++n;
  }
  CHECK(n >= 20);
  const auto sample = dsl::load_strategy(data_dir() / "strategies" / "init_clustered_macros.strat", Kind::Init);
  CHECK(sample.kind == Kind::Init);
}

TEST_CASE("center-init program equals noiseless default init") {
  const auto c = io::parse_case(case_path("random100"));
  const auto f = dsl::extract_features(c);
  const auto p = dsl::parse_strategy(kCenter, Kind::Init);
  const auto a = dsl::eval_init(p, c, f, 3);
  const auto b = place::default_init(c, 3, 0.0);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max({diff, std::abs(a.x[i] - b.x[i]), std::abs(a.y[i] - b.y[i])});
  CHECK(diff == 0.0);
}

TEST_CASE("identity init source equals default init") {
  const auto c = io::parse_case(case_path("random100"));
  const auto f = dsl::extract_features(c);
  const auto p = dsl::parse_strategy(dsl::identity_source(Kind::Init), Kind::Init);
  const auto a = dsl::eval_init(p, c, f, 9);
  const auto b = place::default_init(c, 9);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}

TEST_CASE("init outputs are clamped and fixed cells stay") {
  const auto c = io::parse_case(case_path("toy2"));
  const auto f = dsl::extract_features(c);
  const auto p = dsl::parse_strategy("x_init = 2 * xmax + 0 * area; y_init = center_y + 0 * area", Kind::Init);
  const auto s = dsl::eval_init(p, c, f, 0);
  for (const auto& cell : c.cells) {
    if (cell.movable()) CHECK(s.x[cell.id] == c.region.xmax);
    else CHECK(s.x[cell.id] == cell.pl_x);
  }
}

TEST_CASE("rand_n is reproducible") {
  const auto c = io::parse_case(case_path("random100"));
  const auto f = dsl::extract_features(c);
  const auto p = dsl::parse_strategy("x_init = center_x + rand_n(4); y_init = center_y + rand_n(5) * rand_n(4)", Kind::Init);
  const auto first = dsl::eval_init(p, c, f, 77);
  for (int run = 0; run < 10; ++run) {
    const auto again = dsl::eval_init(p, c, f, 77);
    CHECK(again.x == first.x);
    CHECK(again.y == first.y);
  }
  CHECK(dsl::eval_init(p, c, f, 78).x != first.x);
}

TEST_CASE("preconditioner programs") {
  const auto c = three_cells();
  const auto f = dsl::extract_features(c);
  dsl::PrecondStats st;
  st.lambda = 0.25;
  const auto unit = dsl::parse_strategy("diag_scale = 1 + 0 * area", Kind::Precond);
  CHECK(dsl::eval_precond(unit, c, f, st) == place::default_precondition(c, st.lambda));

  const auto zero = dsl::parse_strategy("diag_scale = 0", Kind::Precond);
  for (double d : dsl::eval_precond(zero, c, f, st)) CHECK(d == place::kPrecondFloor);

  // net weight sums by hand: a 2.5, b 5, c 3.5; area 1, lambda 0.25
  const auto weighted = dsl::parse_strategy("diag_scale = sum_net_weight / 2", Kind::Precond);
  const auto d = dsl::eval_precond(weighted, c, f, st);
  CHECK(d[0] == doctest::Approx(2.5 / 2 * (2.5 + 0.25)));
  CHECK(d[1] == doctest::Approx(5.0 / 2 * (5.0 + 0.25)));
  CHECK(d[2] == doctest::Approx(3.5 / 2 * (3.5 + 0.25)));
}

TEST_CASE("constant policy reproduces the default engine bit for bit") {
  const auto c = io::parse_case(case_path("two_clique"));
  place::EngineConfig cfg;
  cfg.max_iters = 300;
  dsl::StrategyBundle b;
  b.opt_policy = dsl::parse_strategy("step_scale = 1; noise_level = 0; momentum_scale = 1", Kind::OptPolicy);
  const auto with = place::place(c, b, cfg, 4);
  const auto without = place::place(c, {}, cfg, 4);
  CHECK(with.result.hpwl == without.result.hpwl);
  CHECK(with.placement.x == without.placement.x);
  CHECK(with.placement.overflow_history == without.placement.overflow_history);
  CHECK(with.placement.wl_history == without.placement.wl_history);
}

TEST_CASE("policy outputs") {
  const auto c = io::parse_case(case_path("toy2"));
  const auto f = dsl::extract_features(c);
  const auto p = dsl::parse_strategy("step_scale = 1; noise_level = overflow * 0.01 * span; momentum_scale = 1",
                                     Kind::OptPolicy);
  dsl::RunStats st;
  st.overflow = 0.0;
  CHECK(dsl::eval_opt_policy(p, c, f, st).noise_level == 0.0);
  st.overflow = 0.5;
  CHECK(dsl::eval_opt_policy(p, c, f, st).noise_level > 0.0);

  const auto wild = dsl::parse_strategy("step_scale = 1000; noise_level = -1; momentum_scale = 5", Kind::OptPolicy);
  const auto out = dsl::eval_opt_policy(wild, c, f, st);
  CHECK(out.step_scale == 100.0);
  CHECK(out.noise_level == 0.0);
  CHECK(out.momentum_scale == 2.0);
}

TEST_CASE("plateau program agrees with the built-in plateau rule") {
  const auto c = io::parse_case(case_path("toy2"));
  const auto f = dsl::extract_features(c);
  const auto p = dsl::parse_strategy(
      "step_scale = 1\nnoise_level = select(abs(overflow_delta) < 0.001, 0.005 * span, 0)\nmomentum_scale = 1",
      Kind::OptPolicy);
  // falling, then flat, then a drop, then flat again
  std::vector<double> script;
  for (int i = 0; i < 30; ++i) script.push_back(0.9 - 0.01 * i);
  for (int i = 0; i < 30; ++i) script.push_back(0.6);
  for (int i = 0; i < 10; ++i) script.push_back(0.6 - 0.02 * i);
  for (int i = 0; i < 30; ++i) script.push_back(0.4 + 0.0001 * (i % 3));
  std::vector<double> h;
  int fired = 0;
  for (double v : script) {
    h.push_back(v);
    dsl::RunStats st;
    st.overflow = v;
    st.overflow_delta = h.size() >= 21 ? h.back() - h[h.size() - 21] : 1.0;
    const bool program = dsl::eval_opt_policy(p, c, f, st).noise_level > 0.0;
    const bool rule = place::overflow_plateau(h, 20, 1e-3);
    CHECK(program == rule);
    fired += rule;
  }
  CHECK(fired > 0);
}

TEST_CASE("features") {
  auto pair = make_case({{"a"}, {"b"}}, {{{0, 0.0, 0.0}, {1, 0.0, 0.0}}}, {0, 0, 4, 4});
  auto f = dsl::extract_features(pair);
  CHECK(f.column("degree") == std::vector<double>{1, 1});

  std::vector<CellSpec> cells(5, CellSpec{});
  NetSpec clique;
  for (std::size_t i = 0; i < 5; ++i) clique.emplace_back(i, 0.0, 0.0);
  f = dsl::extract_features(make_case(cells, {clique}, {0, 0, 5, 5}));
  for (double d : f.column("degree")) CHECK(d == 1.0);
  for (double d : f.column("pin_count")) CHECK(d == 1.0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = random_case(seed, 25, 30, 15);
    const auto g = dsl::extract_features(c);
    for (std::size_t i = 0; i < c.cells.size(); ++i) {
      double deg = 0, pins = 0, w = 0;
      for (const auto& net : c.nets) {
        bool on = false;
        for (const auto& pin : net.pins)
          if (pin.cell == i) {
            ++pins;
            on = true;
          }
        deg += on;
        if (on) w += net.weight;
      }
      CHECK(g.column("degree")[i] == deg);
      CHECK(g.column("pin_count")[i] == pins);
      CHECK(g.column("sum_net_weight")[i] == doctest::Approx(w));
    }
  }
}

TEST_CASE("builtins") {
  const auto c = io::parse_case(case_path("random100"));
  const auto f = dsl::extract_features(c);
  auto run = [&](const std::string& expr) {
    const auto p = dsl::parse_strategy("x_init = " + expr + "\ny_init = 0 * area\n", Kind::Init);
    return dsl::run_program(p, f, {}, 0)[0];
  };
  const auto k = run("kmeans1d(area, 3)");
  for (double v : k) CHECK((v == 0 || v == 1 || v == 2));
  // ranks order by cluster centre
  const auto& area = f.column("area");
  for (std::size_t i = 0; i < area.size(); ++i)
    for (std::size_t j = 0; j < area.size(); ++j)
      if (area[i] < area[j]) CHECK(k[i] <= k[j]);
  CHECK(run("quantile(area, 0.5) + 0 * area")[0] == doctest::Approx(f.scalar("median_area")));
  CHECK(run("clamp(area, 1, 2)")[0] >= 1.0);
  CHECK(run("select(is_fixed, 7, 3)")[105] == 7.0);
  CHECK(run("pow(2, 10) + 0 * area")[0] == 1024.0);
  CHECK(code_of([&] { dsl::eval_init(dsl::parse_strategy("x_init = log(0 - area); y_init = 1", Kind::Init), c, f, 0); }) ==
        ErrorCode::StrategyRuntimeError);
}
