// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "evoplace/dse.hpp"
#include "evoplace/engine.hpp"
#include "evoplace/evolver.hpp"
#include "evoplace/harness.hpp"
#include "evoplace/objective.hpp"
#include "evoplace/optimizer.hpp"
#include "evoplace/selector.hpp"
#include "helpers.hpp"
#include "planted.hpp"

using namespace evoplace;
using namespace evoplace::testing;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- 1 -----------------------------------------------------------------------

// Max abs error over coordinates relative to the largest gradient entry.
double wl_fd_error(std::uint64_t seed) {
  const double side = 25.0;
  const auto c = random_case(seed, 50, 60, side);
  auto s = random_placement(c, seed + 1000);
  const double gamma = 0.05 * side, h = 1e-4 * side;
  const auto g = place::smooth_wl(c, s, gamma);
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int axis = 0; axis < 2; ++axis) {
      auto& v = axis == 0 ? s.x : s.y;
      const double keep = v[i];
      v[i] = keep + h;
      const double up = place::smooth_wl(c, s, gamma).value;
      v[i] = keep - h;
      const double down = place::smooth_wl(c, s, gamma).value;
      v[i] = keep;
      const double fd = (up - down) / (2 * h);
      err = std::max(err, std::abs(fd - (axis == 0 ? g.grad_x[i] : g.grad_y[i])));
      scale = std::max(scale, std::abs(fd));
    }
  return err / scale;
}

// Same measure for the density penalty on a crowded 50-cell layout, skipping
// coordinates sitting on a bin-boundary kink. `used` counts the rest.
double density_fd_error(std::uint64_t seed, int& used) {
  const double side = 10.0;
  Rng rng(seed);
  std::vector<CellSpec> cells;
  for (int i = 0; i < 50; ++i) cells.push_back({"", 0.6 + 0.8 * rng.uniform(), 0.6 + 0.8 * rng.uniform()});
  const auto c = make_case(cells, {{{0, 0.0, 0.0}, {1, 0.0, 0.0}}}, {0, 0, side, side});
  place::PlacementState s;
  for (int i = 0; i < 50; ++i) {
    s.x.push_back(rng.uniform(2.5, 7.5));
    s.y.push_back(rng.uniform(2.5, 7.5));
  }
  auto grid = place::make_bin_grid(c.region, 10, 10, 1.0, 1.25);
  const auto g = place::density_penalty(c, s, grid);
  const double h = 1e-6;
  auto value = [&] { return place::density_penalty(c, s, grid).value; };
  double err = 0.0, scale = 0.0;
  used = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int axis = 0; axis < 2; ++axis) {
      auto& v = axis == 0 ? s.x : s.y;
      const double keep = v[i];
      const double f0 = value();
      v[i] = keep + h;
      const double up = value();
      v[i] = keep - h;
      const double down = value();
      v[i] = keep;
      const double fwd = (up - f0) / h, bwd = (f0 - down) / h;
      if (std::abs(fwd - bwd) > 1e-4 * std::max(1.0, std::abs(fwd))) continue;
      ++used;
      const double an = axis == 0 ? g.grad_x[i] : g.grad_y[i];
      err = std::max(err, std::abs((up - down) / (2 * h) - an));
      scale = std::max(scale, std::abs(an));
    }
  return err / scale;
}

Verdict criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  double wl = 0.0, den = 0.0;
  int min_used = std::numeric_limits<int>::max();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    wl = std::max(wl, wl_fd_error(100 + seed));
    int used = 0;
    den = std::max(den, density_fd_error(200 + seed, used));
    min_used = std::min(min_used, used);
  }
  const double secs = seconds_since(t0);
  return {wl <= 1e-5 && den <= 1e-4 && min_used >= 50 && secs < 60.0,
          "20 cases: smooth_wl rel err " + fmt(wl) + " (<= 1e-5), density rel err " + fmt(den) +
              " (<= 1e-4, >= " + std::to_string(min_used) + " coords/case off kinks), " + fmt(secs) + " s (< 60 s)"};
}

// ---- 2 -----------------------------------------------------------------------

Verdict criterion_2() {
  auto c = make_case({{"a"}}, {{{0, 0.0, 0.0}}}, {-1e6, -1e6, 1e6, 1e6});
  const auto bounds = place::MoveBounds::of(c);
  double bb_err = 0.0;
  bool bb_ok = true;
  for (double k : {0.25, 0.5, 1.0, 2.0, 7.0, 40.0}) {
    auto opt = place::OptimizerState::start({10.0}, {0.0}, 0.01);
    for (int it = 0; it < 3; ++it) opt = place::nesterov_bb_step(opt, {k * opt.vx[0]}, {0.0}, {1.0}, bounds);
    const double e = std::abs(opt.bb_step - 1.0 / k) * k;
    bb_err = std::max(bb_err, e);
    bb_ok = bb_ok && e <= 4 * std::numeric_limits<double>::epsilon();
  }

  const auto two = io::parse_case(case_path("two_clique"));
  place::EngineConfig cfg;
  cfg.max_iters = 500;
  double worst = 1.0;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto out = place::place(two, {}, cfg, seed);
    const double red = out.result.status == place::Status::Success
                           ? (out.initial_hpwl - out.result.hpwl) / out.initial_hpwl
                           : 0.0;
    worst = std::min(worst, red);
    ok += red >= 0.30 && out.result.iterations <= 500;
  }
  return {bb_ok && ok == 10, "BB relative error " + fmt(bb_err) + " (<= 4 eps); two_clique reduction >= 30% in " +
                                 std::to_string(ok) + "/10 seeds, worst " + fmt(100 * worst) + "%"};
}

// ---- 3 -----------------------------------------------------------------------

select::CandidatePool random_pool(std::uint64_t seed, std::size_t n, std::size_t dim) {
  Rng rng(seed);
  select::CandidatePool pool;
  for (std::size_t i = 0; i < n; ++i) {
    llm::EmbeddingVector e;
    e.dim = static_cast<int>(dim);
    double norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      e.values.push_back(rng.normal());
      norm += e.values.back() * e.values.back();
    }
    for (double& v : e.values) v /= std::sqrt(norm);
    pool.push_back({"c" + std::to_string(i), place::Status::Success, 100 + 50 * rng.uniform(), e});
  }
  return pool;
}

Verdict criterion_3() {
  double worst_ratio = 1e9;
  int with_star = 0, top_m = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto pool = random_pool(5000 + seed, 12, 8);
    const auto s = select::normalized_scores(pool);
    const auto g = select::select_diverse(pool, {4, 12, 0.5, 0.5});
    const auto b = select::brute_force_select(pool, 4, 0.5);
    worst_ratio = std::min(worst_ratio, select::subset_objective(pool, s, g, 0.5) / select::subset_objective(pool, s, b, 0.5));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t c) { return pool[a].hpwl < pool[c].hpwl; });
    with_star += std::find(g.begin(), g.end(), idx[0]) != g.end();
    const auto plain = select::select_diverse(pool, {4, 12, 0.0, 0.0});
    top_m += plain == std::vector<std::size_t>(idx.begin(), idx.begin() + 4);
  }
  return {worst_ratio >= 0.9 && with_star == 100 && top_m == 100,
          "worst greedy/exhaustive ratio " + fmt(worst_ratio, 4) + " (>= 0.9) over 100 pools; argmax-f included " +
              std::to_string(with_star) + "/100; alpha=beta=0 equals top-m " + std::to_string(top_m) + "/100"};
}

// ---- 4 -----------------------------------------------------------------------

evolve::Member arm(const std::string& id, double hpwl) {
  evolve::Member m;
  m.candidate.id = id;
  m.eval.status = place::Status::Success;
  m.eval.hpwl = hpwl;
  return m;
}

Verdict criterion_4() {
  const int T = 1000, seeds = 20;
  int good_seeds = 0;
  double regret100 = 0.0, regret1000 = 0.0;
  for (int seed = 0; seed < seeds; ++seed) {
    std::vector<evolve::Member> pop = {arm("good", 100), arm("bad", 110)};
    const auto norm = evolve::Normalizer::of(pop);
    Rng rng(static_cast<std::uint64_t>(seed));
    int good = 0;
    double regret = 0.0;
    for (int t = 1; t <= T; ++t) {
      auto& m = pop[evolve::choose_candidate(pop, t, 1.0, norm)];
      const double p = m.candidate.id == "good" ? 0.8 : 0.2;
      const double r = rng.uniform() < p ? 1.0 : 0.0;
      m.ucb.N += 1;
      m.ucb.Q += (r - m.ucb.Q) / m.ucb.N;
      good += m.candidate.id == "good";
      regret += 0.8 - p;
      if (t == 100) regret100 += regret / 100.0 / seeds;
      if (t == T) regret1000 += regret / T / seeds;
    }
    good_seeds += good >= 0.7 * T;
  }
  return {good_seeds >= 18 && regret1000 < 0.5 * regret100,
          "better arm >= 70% in " + std::to_string(good_seeds) + "/20 seeds (>= 18); regret/step " + fmt(regret1000) +
              " at t=1000 vs " + fmt(regret100) + " at t=100 (ratio " + fmt(regret1000 / regret100) + " < 0.5)"};
}

// ---- 5 -----------------------------------------------------------------------

double gp_oracle_error(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < n; ++i) {
    X.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    y.push_back(rng.normal());
  }
  const dse::KernelParams k{0.4 + rng.uniform(), 0.5 + rng.uniform(), 1e-3};
  const double prior = rng.normal();
  const auto m = dse::gp_fit(X, y, k, prior);
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K(i, j) = dse::se_kernel(Eigen::Map<Eigen::VectorXd>(X[i].data(), 3), Eigen::Map<Eigen::VectorXd>(X[j].data(), 3), k) +
                (i == j ? k.noise_var + m.jitter : 0.0);
  const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) r(i) = y[i] - prior;
  double err = 0.0;
  for (int q = 0; q < 20; ++q) {
    std::vector<double> x = {rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)};
    Eigen::VectorXd ks(n);
    for (int i = 0; i < n; ++i)
      ks(i) = dse::se_kernel(Eigen::Map<Eigen::VectorXd>(X[i].data(), 3), Eigen::Map<Eigen::VectorXd>(x.data(), 3), k);
    const double mu = prior + ks.dot(Kinv * r);
    const double var = k.signal_var - ks.dot(Kinv * ks);
    const auto p = dse::gp_predict(m, x);
    err = std::max({err, std::abs(p.mu - mu), std::abs(p.sigma * p.sigma - std::max(0.0, var))});
  }
  return err;
}

Verdict criterion_5() {
  double gp_err = 0.0;
  for (int n : {1, 5, 12, 25, 50}) gp_err = std::max(gp_err, gp_oracle_error(static_cast<std::uint64_t>(n), n));

  const bool ei_ok = dse::expected_improvement(0.3, 0.0, 0.5, 0.01) == 0.5 - 0.3 - 0.01 &&
                     dse::expected_improvement(0.6, 0.0, 0.5, 0.01) == 0.0 &&
                     dse::expected_improvement(0.495, 0.0, 0.5, 0.01) == 0.0 &&
                     std::abs(dse::expected_improvement(0.5, 1.0, 0.5, 0.0) - 0.3989422804014327) <= 1e-15;

  dse::SurrogateConfig cfg;
  cfg.seed = 3;
  dse::SurrogateNet net(4, 8, cfg);
  Rng rng(8);
  std::vector<dse::DesignPoint> batch;
  for (int i = 0; i < 12; ++i) {
    dse::DesignPoint p;
    for (int k = 0; k < 4; ++k) p.embedding.push_back(rng.uniform(-1, 1));
    for (int k = 0; k < 8; ++k) p.digest.push_back(rng.uniform(-1, 1));
    p.y = rng.uniform();
    batch.push_back(p);
  }
  std::vector<double> g;
  net.loss_and_gradient(batch, &g);
  double nn_err = 0.0;
  int checked = 0;
  while (checked < 10) {
    const std::size_t i = rng.below(g.size());
    if (std::abs(g[i]) < 1e-6) continue;
    const double w0 = net.params()[i], h = 1e-5;
    net.params()[i] = w0 + h;
    const double up = net.loss_and_gradient(batch, nullptr);
    net.params()[i] = w0 - h;
    const double down = net.loss_and_gradient(batch, nullptr);
    net.params()[i] = w0;
    nn_err = std::max(nn_err, std::abs((up - down) / (2 * h) - g[i]) / std::abs(g[i]));
    ++checked;
  }
  return {gp_err <= 1e-8 && ei_ok && nn_err <= 1e-4,
          "GP vs dense solve max err " + fmt(gp_err) + " (<= 1e-8, n <= 50); EI degenerate cases " +
              (ei_ok ? "exact" : "WRONG") + "; surrogate grad rel err " + fmt(nn_err) + " (<= 1e-4, 10 weights)"};
}

// ---- 6 -----------------------------------------------------------------------

Verdict criterion_6() {
  const std::size_t pool_size = 200, N = 60;
  std::vector<double> dse_hits, random_hits;
  int found = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = planted_pool(9000 + seed, pool_size);
    const auto r = dse::run_dse(p.points, N, seed, [&](std::size_t i) { return std::optional<double>(p.y[i]); });
    found += r.best == p.best;
    dse_hits.push_back(static_cast<double>(evals_to_top(r.order, p.y, 0.03)));
    std::vector<std::size_t> perm(pool_size);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, {fnv1a("random-baseline")}));
    for (std::size_t i = pool_size; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    random_hits.push_back(static_cast<double>(evals_to_top(perm, p.y, 0.03)));
  }
  const double md = median(dse_hits), mr = median(random_hits);
  return {md < mr && found >= 40, "median evaluations to top 3%: dse " + fmt(md) + " vs random " + fmt(mr) +
                                      " over 50 paired seeds; best found with N=60 in " + std::to_string(found) +
                                      "/50 (>= 40)"};
}

// ---- 7 and 8 ----------------------------------------------------------------

harness::ExperimentConfig mock_config() {
  auto cfg = harness::load_config(data_dir() / "configs" / "mock_two_clique.ini");
  cfg.backend.mode = llm::Mode::Mock;
  return cfg;
}

harness::Workload two_clique_workload(const harness::ExperimentConfig& cfg) {
  harness::Workload w;
  w.bench = io::parse_case(case_path("two_clique"));
  w.features = dsl::extract_features(w.bench);
  w.kind = dsl::Kind::Init;
  w.eval_seed = harness::evaluation_seed(cfg.seed);
  w.engine = cfg.engine;
  return w;
}

Verdict criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto templates = prompt::TemplateSet::load();
  std::vector<double> imp;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cfg = mock_config();
    cfg.seed = seed;
    cfg.evolve.m = 6;
    cfg.evolve.trials = 200;
    const auto w = two_clique_workload(cfg);
    llm::Gateway gw(cfg.backend, std::make_shared<llm::ForbiddenTransport>());
    const auto out = harness::run_evolve_experiment(gw, templates, w, cfg);
    imp.push_back(100.0 * out.improvement);
  }
  const double secs = seconds_since(t0);
  std::string list;
  for (double v : imp) list += (list.empty() ? "" : " ") + fmt(v, 3);
  const double med = median(imp);
  return {med >= 3.0 && secs <= 600.0, "median improvement " + fmt(med) + "% (>= 3%) over 10 seeds [" + list + "], " +
                                           fmt(secs) + " s (<= 600 s)"};
}

std::size_t count_lines(const fs::path& p) {
  const std::string s = read_file(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Runs the CLI; when kill_after_records > 0 the process is SIGKILLed once
// history.jsonl holds that many trial records. Returns the exit status, or
// the record count at kill time.
int run_cli(const std::vector<std::string>& args, std::size_t kill_after_records, const fs::path& history,
            std::size_t* at_kill) {
  const pid_t pid = fork();
  if (pid == 0) {
    if (!std::freopen("/dev/null", "w", stdout)) _exit(127);
    std::vector<char*> argv;
    std::string bin = EVOPLACE_BIN;
    argv.push_back(bin.data());
    std::vector<std::string> copy = args;
    for (auto& a : copy) argv.push_back(a.data());
    argv.push_back(nullptr);
    execv(bin.c_str(), argv.data());
    _exit(127);
  }
  int status = 0;
  if (kill_after_records > 0) {
    while (true) {
      if (waitpid(pid, &status, WNOHANG) == pid) return -1;  // finished before the kill
      if (fs::exists(history) && count_lines(history) >= kill_after_records + 1) {
        kill(pid, SIGKILL);
        waitpid(pid, &status, 0);
        if (at_kill) *at_kill = count_lines(history) - 1;
        return 0;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict criterion_8() {
  const auto templates = prompt::TemplateSet::load();
  auto run_store = [&](const std::string& name, int workers) {
    auto cfg = mock_config();
    cfg.seed = 17;
    cfg.workers = workers;
    const auto w = two_clique_workload(cfg);
    const auto dir = scratch("acceptance_" + name);
    store::RunStore st(dir);
    llm::Gateway gw(cfg.backend, std::make_shared<llm::ForbiddenTransport>());
    harness::run_evolve_experiment(gw, templates, w, cfg, &st);
    return std::make_pair(read_file(dir / "history.jsonl"), read_file(dir / "candidates.jsonl"));
  };
  const auto a = run_store("w1_a", 1);
  const auto b = run_store("w1_b", 1);
  const auto c = run_store("w4", 4);
  const bool same_runs = a == b;
  const bool same_workers = a == c;

  // the CLI killed mid-run and restarted with the same command
  const std::vector<std::string> args = {"--config", (data_dir() / "configs" / "mock_two_clique.ini").string(),
                                         "--backend", "mock", "--seed", "17", "--workers", "2", "--out"};
  auto cli_args = [&](const fs::path& out) {
    auto v = args;
    v.push_back(out.string());
    v.insert(v.end(), {"evolve", "--case", case_path("two_clique").string()});
    return v;
  };
  const auto full = scratch("acceptance_cli_full");
  const int rc_full = run_cli(cli_args(full), 0, {}, nullptr);
  const auto cut = scratch("acceptance_cli_killed");
  std::size_t at_kill = 0;
  const int killed = run_cli(cli_args(cut), 100, cut / "history.jsonl", &at_kill);
  const int rc_resume = run_cli(cli_args(cut), 0, {}, nullptr);
  const bool resumed = rc_full == 0 && killed == 0 && rc_resume == 0 &&
                       read_file(full / "history.jsonl") == read_file(cut / "history.jsonl") &&
                       read_file(full / "history.jsonl") == a.first;
  return {same_runs && same_workers && resumed,
          std::string("history.jsonl identical across two runs: ") + (same_runs ? "yes" : "no") +
              ", across workers {1,4}: " + (same_workers ? "yes" : "no") + "; CLI SIGKILL at " +
              std::to_string(at_kill) + "/200 trials then resume matches uninterrupted run: " + (resumed ? "yes" : "no")};
}

// ---- 9 -----------------------------------------------------------------------

bool same_case(const io::BenchmarkCase& a, const io::BenchmarkCase& b) {
  if (a.cells.size() != b.cells.size() || a.nets.size() != b.nets.size()) return false;
  if (a.region.xmin != b.region.xmin || a.region.xmax != b.region.xmax || a.region.ymin != b.region.ymin ||
      a.region.ymax != b.region.ymax)
    return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const auto &x = a.cells[i], &y = b.cells[i];
    if (x.name != y.name || x.width != y.width || x.height != y.height || x.kind != y.kind || x.pl_x != y.pl_x ||
        x.pl_y != y.pl_y || x.has_position != y.has_position)
      return false;
  }
  for (std::size_t n = 0; n < a.nets.size(); ++n) {
    const auto &x = a.nets[n], &y = b.nets[n];
    if (x.name != y.name || x.weight != y.weight || x.pins.size() != y.pins.size()) return false;
    for (std::size_t k = 0; k < x.pins.size(); ++k)
      if (x.pins[k].cell != y.pins[k].cell || x.pins[k].dx != y.pins[k].dx || x.pins[k].dy != y.pins[k].dy) return false;
  }
  return true;
}

Verdict criterion_9() {
  int exact = 0, cases = 0;
  for (const auto& e : fs::directory_iterator(data_dir() / "cases")) {
    if (!e.is_directory() || e.path().filename() == "specs") continue;
    const std::string name = e.path().filename().string();
    ++cases;
    const auto a = io::parse_case(case_path(name));
    const auto b = io::parse_case(io::write_case(a, scratch("acceptance_rt_" + name)));
    exact += same_case(a, b);
  }

  const auto templates = prompt::TemplateSet::load();
  llm::Gateway gw(llm::BackendConfig{}, std::make_shared<llm::ForbiddenTransport>());
  double worst = 1.0;
  std::string rates;
  for (dsl::Kind kind : {dsl::Kind::Init, dsl::Kind::Precond, dsl::Kind::OptPolicy}) {
    prompt::GenerationContext ctx;
    ctx.kind = kind;
    ctx.current_source = dsl::identity_source(kind);
    ctx.grammar = templates.grammar;
    ctx.feature_summary = "32 cells, 8 fixed pads";
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) ok += prompt::cot_generate(gw, templates, ctx, seed).feasible;
    worst = std::min(worst, ok / 1000.0);
    rates += (rates.empty() ? "" : " ") + std::string(dsl::to_string(kind)) + "=" + fmt(ok / 10.0) + "%";
  }
  return {cases >= 3 && exact == cases && worst >= 0.95,
          "parse-write-parse exact on " + std::to_string(exact) + "/" + std::to_string(cases) +
              " committed cases; mock feasibility over 1000 seeds " + rates + " (>= 95%)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evoplace acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "run just these criteria")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Verdict()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                                          criterion_6, criterion_7, criterion_8, criterion_9};
  int failed = 0;
  for (int i = 1; i <= 9; ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), i) == only.end()) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("criterion %d: %s  %s  [%.1f s]\n", i, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
