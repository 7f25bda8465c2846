// evoplace command-line front end.
#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "evoplace/bookshelf.hpp"
#include "evoplace/dse.hpp"
#include "evoplace/engine.hpp"
#include "evoplace/error.hpp"
#include "evoplace/harness.hpp"
#include "evoplace/prompts.hpp"
#include "evoplace/rng.hpp"
#include "evoplace/run_store.hpp"

namespace fs = std::filesystem;
using namespace evoplace;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string backend;
  std::optional<int> workers;
};

struct Common {
  std::string case_path;
  std::vector<std::string> base;  // .strat files
  std::string component = "init";
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

harness::ExperimentConfig make_config(const Globals& g) {
  harness::ExperimentConfig cfg = g.config.empty() ? harness::ExperimentConfig{} : harness::load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  if (!g.backend.empty()) {
    if (g.backend == "mock") cfg.backend.mode = llm::Mode::Mock;
    else if (g.backend == "remote") cfg.backend.mode = llm::Mode::Remote;
    else throw CLI::ValidationError("--backend", "must be remote or mock");
  }
  return cfg;
}

dsl::StrategyBundle load_bundle(const std::vector<std::string>& files) {
  dsl::StrategyBundle b;
  for (const auto& f : files) {
    dsl::StrategyProgram p = dsl::load_strategy(f);
    if (b.slot(p.kind)) throw Error(ErrorCode::InvalidArgument, "two " + std::string(dsl::to_string(p.kind)) + " strategies given");
    b.slot(p.kind) = std::move(p);
  }
  return b;
}

harness::Workload make_workload(const Common& c, const harness::ExperimentConfig& cfg) {
  harness::Workload w;
  w.bench = io::parse_case(c.case_path);
  w.features = dsl::extract_features(w.bench);
  w.base = load_bundle(c.base);
  w.kind = dsl::parse_kind(c.component);
  w.eval_seed = harness::evaluation_seed(cfg.seed);
  w.engine = cfg.engine;
  return w;
}

fs::path out_dir(const Globals& g, const std::string& fallback) { return g.out.empty() ? fs::path(fallback) : fs::path(g.out); }

std::unique_ptr<llm::Gateway> make_gateway(const harness::ExperimentConfig& cfg, store::RunStore* st) {
  auto gw = std::make_unique<llm::Gateway>(cfg.backend);
  if (st && cfg.backend.mode == llm::Mode::Remote)
    gw->set_recorder([st](const llm::CallRecord& r) {
      st->append("calls.jsonl", {{"kind", r.kind}, {"request_hash", r.request_hash}, {"request", r.request},
                                 {"response", r.response}, {"latency", r.latency}, {"attempts", r.attempts},
                                 {"error", r.error}});
    });
  return gw;
}

// Loads evaluated, feasible candidates written by `gen` or `evolve`.
struct StoredCandidate {
  std::string id;
  std::string source;
  place::EvalResult eval;
};

std::vector<StoredCandidate> read_candidates(const fs::path& dir) {
  store::RunStore st(dir);
  std::map<std::string, StoredCandidate> by_id;
  std::vector<std::string> order;
  for (const json& r : st.read("candidates.jsonl")) {
    const std::string kind = r.value("record", "");
    const std::string id = r.value("id", "");
    if (kind == "generation" && r.value("feasible", false)) {
      if (!by_id.count(id)) order.push_back(id);
      by_id[id].id = id;
      by_id[id].source = r.at("source");
    } else if (kind == "evaluation" && by_id.count(id)) {
      by_id[id].eval = evolve::eval_from_json(r.at("eval"));
    }
  }
  std::vector<StoredCandidate> out;
  for (const auto& id : order) out.push_back(by_id[id]);
  return out;
}

int cmd_place(const Globals& g, const Common& c, const std::string& pl_out) {
  const auto cfg = make_config(g);
  const auto bench = io::parse_case(c.case_path);
  const auto bundle = load_bundle(c.base);
  const auto outcome = place::place(bench, bundle, cfg.engine, harness::evaluation_seed(cfg.seed));
  const auto& r = outcome.result;
  std::cout << "case=" << bench.name << " status=" << place::to_string(r.status) << " hpwl=" << fmt(r.hpwl)
            << " iterations=" << r.iterations << " overflow=" << fmt(r.overflow_final) << "\n";
  if (!r.message.empty()) std::cout << "message=" << r.message << "\n";
  if (!pl_out.empty() && r.status != place::Status::Error) io::write_placement(bench, outcome.placement, pl_out);
  return r.status == place::Status::Error ? 2 : 0;
}

int cmd_gen(const Globals& g, const Common& c, std::size_t n) {
  const auto cfg = make_config(g);
  const auto w = make_workload(c, cfg);
  const fs::path dir = out_dir(g, "runs/gen");
  store::RunStore st(dir);
  const auto templates = prompt::TemplateSet::load(cfg.templates_dir);
  auto gw = make_gateway(cfg, &st);
  const auto baseline = w.baseline();
  st.write_json("run.json", {{"command", "gen"}, {"seed", cfg.seed}, {"kind", c.component}, {"case", w.bench.name},
                             {"baseline", harness::eval_json_with_runtime(baseline)},
                             {"baseline_hpwl", baseline.status == place::Status::Success ? json(baseline.hpwl) : json(nullptr)}});
  st.open_log("candidates.jsonl", {{"kind", c.component}, {"seed", cfg.seed}});
  const auto cands = harness::generate_candidates(*gw, templates, w, n, cfg.seed, cfg.effective_workers(), &st,
                                                  st.read("candidates.jsonl").size() / 2);
  std::size_t feasible = 0, success = 0;
  for (const auto& x : cands) {
    feasible += x.candidate.feasible;
    success += x.eval.status == place::Status::Success;
  }
  std::cout << "generated=" << n << " feasible=" << feasible << " success=" << success << " dir=" << dir.string() << "\n";
  return 0;
}

int cmd_select(const Globals& g, const std::string& pool_dir, const select::SelectParams& sp_in, bool have_k) {
  const auto cfg = make_config(g);
  select::SelectParams sp = sp_in;
  if (!have_k) sp.k = 5 * sp.m;
  llm::Gateway gw(cfg.backend);
  const auto cands = read_candidates(pool_dir);
  select::CandidatePool pool;
  for (const auto& c : cands) pool.push_back({c.id, c.eval.status, c.eval.hpwl, gw.embed(c.source)});
  const auto chosen = select::select_diverse(pool, sp);
  const auto scores = select::normalized_scores(pool);
  json out = json::array();
  for (std::size_t i : chosen) {
    std::cout << pool[i].id << " hpwl=" << fmt(pool[i].hpwl) << " f=" << fmt(scores.f[i]) << "\n";
    out.push_back({{"id", pool[i].id}, {"hpwl", pool[i].hpwl}, {"f", scores.f[i]}, {"source", cands[i].source}});
  }
  store::RunStore(out_dir(g, pool_dir)).write_json("selected.json", {{"m", sp.m}, {"k", sp.k}, {"alpha", sp.alpha},
                                                                     {"beta", sp.beta}, {"selected", out}});
  return 0;
}

int cmd_evolve(const Globals& g, const Common& c, std::optional<int> trials, std::optional<std::size_t> m) {
  auto cfg = make_config(g);
  if (trials) cfg.evolve.trials = *trials;
  if (m) cfg.evolve.m = *m;
  const auto w = make_workload(c, cfg);
  const fs::path dir = out_dir(g, "runs/evolve");
  store::RunStore st(dir);
  const auto templates = prompt::TemplateSet::load(cfg.templates_dir);
  auto gw = make_gateway(cfg, &st);
  const auto res = harness::run_evolve_experiment(*gw, templates, w, cfg, &st);
  const auto& best = res.evolution.best;
  std::cout << "baseline_hpwl=" << fmt(res.baseline.hpwl) << " best_hpwl=" << fmt(best.eval.hpwl)
            << " improvement_pct=" << fmt(100.0 * res.improvement) << " trials=" << res.evolution.history.size()
            << " best_id=" << best.candidate.id << "\n";
  std::ofstream(dir / ("best." + c.component + ".strat")) << best.candidate.source;
  return 0;
}

std::vector<dse::DesignPoint> design_points(const std::vector<StoredCandidate>& cands, llm::Gateway& gw,
                                            const dsl::FeatureTable& f, std::optional<double> baseline) {
  const auto digest = dse::placement_digest(f);
  std::vector<dse::DesignPoint> pts;
  for (const auto& c : cands) {
    dse::DesignPoint p;
    p.id = c.id;
    p.embedding = gw.embed(c.source).values;
    p.digest = digest;
    if (baseline) p.y = dse::normalized_loss(c.eval.hpwl, *baseline, c.eval.status == place::Status::Success);
    pts.push_back(std::move(p));
  }
  return pts;
}

int cmd_dse(const Globals& g, const Common& c, const std::string& pool_dir, std::optional<std::size_t> budget,
            const std::string& surrogate) {
  auto cfg = make_config(g);
  if (budget) cfg.dse_budget = *budget;
  if (!surrogate.empty()) cfg.surrogate_path = surrogate;
  const auto w = make_workload(c, cfg);
  llm::Gateway gw(cfg.backend);
  const auto cands = read_candidates(pool_dir);
  const auto baseline = w.baseline();
  auto pool = design_points(cands, gw, w.features, std::nullopt);
  std::optional<dse::SurrogateNet> net;
  if (!cfg.surrogate_path.empty()) net = dse::SurrogateNet::load(cfg.surrogate_path);
  dse::DseOptions opts = cfg.dse;
  opts.surrogate = net ? &*net : nullptr;
  const fs::path dir = out_dir(g, "runs/dse");
  store::RunStore st(dir);
  st.write_json("run.json", {{"command", "dse"}, {"seed", cfg.seed}, {"kind", c.component}, {"case", w.bench.name},
                             {"baseline", harness::eval_json_with_runtime(baseline)}, {"baseline_hpwl", baseline.hpwl}});
  st.open_log("dse.jsonl", {{"seed", cfg.seed}, {"budget", cfg.dse_budget}, {"pool", pool_dir}});
  if (!st.read("dse.jsonl").empty()) throw Error(ErrorCode::InvalidArgument, dir.string() + " already holds a DSE run");
  std::vector<place::EvalResult> evals(pool.size());
  auto evaluate = [&](std::size_t i) -> std::optional<double> {
    const auto prog = dsl::parse_strategy(cands[i].source, w.kind);
    evals[i] = w.evaluate(prog);
    st.append("timings.jsonl", {{"id", cands[i].id}, {"runtime", evals[i].runtime}});
    if (evals[i].status != place::Status::Success) return std::nullopt;
    return dse::normalized_loss(evals[i].hpwl, baseline.hpwl, true);
  };
  const auto res = dse::run_dse(pool, std::min(cfg.dse_budget, pool.size()), cfg.seed, evaluate, opts);
  for (std::size_t k = 0; k < res.history.size(); ++k) {
    json rec = res.history[k];
    rec["eval"] = evolve::eval_to_json(evals[res.order[k]]);
    st.append("dse.jsonl", rec);
  }
  const auto& best = cands[res.best];
  std::ofstream(dir / ("best." + c.component + ".strat")) << best.source;
  std::cout << "evaluated=" << res.order.size() << " of " << pool.size() << " best_id=" << best.id
            << " best_hpwl=" << fmt(evals[res.best].hpwl) << " baseline_hpwl=" << fmt(baseline.hpwl) << "\n";
  return 0;
}

int cmd_pretrain(const Globals& g, const Common& c, const std::vector<std::string>& pools, const std::string& model) {
  const auto cfg = make_config(g);
  llm::Gateway gw(cfg.backend);
  const auto w = make_workload(c, cfg);
  const double baseline = w.baseline().hpwl;
  std::vector<dse::DesignPoint> corpus;
  for (const auto& dir : pools)
    for (auto& p : design_points(read_candidates(dir), gw, w.features, baseline)) corpus.push_back(std::move(p));
  dse::SurrogateConfig sc = cfg.surrogate;
  sc.seed = cfg.seed;
  dse::TrainingReport rep;
  const auto net = dse::pretrain_surrogate(corpus, sc, &rep);
  net.save(model);
  std::cout << "points=" << corpus.size() << " final_loss=" << fmt(rep.loss_curve.empty() ? 0.0 : rep.loss_curve.back())
            << " learning_rate=" << fmt(rep.learning_rate) << " model=" << model << "\n";
  return 0;
}

int cmd_synth(const Globals& g, const std::string& spec_path) {
  const auto spec = io::load_synthetic_spec(spec_path);
  const auto cfg = make_config(g);
  const auto bench = io::generate_synthetic(spec, cfg.seed);
  const fs::path dir = out_dir(g, "cases/" + spec.name);
  const auto aux = io::write_case(bench, dir);
  io::write_manifest(io::manifest_of(bench), dir / (spec.name + ".manifest.json"));
  std::cout << "wrote " << aux.string() << " cells=" << bench.cells.size() << " nets=" << bench.nets.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evoplace: analytical placer with evolvable strategy programs"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "run seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--backend", g.backend, "remote or mock")->check(CLI::IsMember({"remote", "mock"}));
  app.add_option("--workers", g.workers, "evaluation threads")->check(CLI::PositiveNumber);

  Common c;
  auto add_case = [&](CLI::App* sub, bool component) {
    sub->add_option("--case", c.case_path, "Bookshelf .aux file")->required()->check(CLI::ExistingFile);
    sub->add_option("--base", c.base, "strategy files for the other components")->check(CLI::ExistingFile);
    if (component)
      sub->add_option("--component", c.component, "init, precond or optpolicy")
          ->check(CLI::IsMember({"init", "precond", "optpolicy"}));
  };

  auto* place = app.add_subcommand("place", "run the placer on a case");
  std::string pl_out;
  add_case(place, false);
  place->add_option("--strategy", c.base, "strategy files (any kinds)")->check(CLI::ExistingFile);
  place->add_option("--write-pl", pl_out, "write the final placement here");

  auto* gen = app.add_subcommand("gen", "generate and evaluate candidates");
  std::size_t n = 20;
  add_case(gen, true);
  gen->add_option("-n,--count", n, "number of candidates")->check(CLI::PositiveNumber);

  auto* sel = app.add_subcommand("select", "diverse top-m selection over a generated pool");
  std::string pool_dir;
  select::SelectParams sp{10, 50, 0.5, 0.5};
  sel->add_option("--pool", pool_dir, "run directory written by gen")->required()->check(CLI::ExistingDirectory);
  sel->add_option("-m", sp.m, "selection size")->check(CLI::PositiveNumber);
  auto* kopt = sel->add_option("-k", sp.k, "top-k prefilter (default 5m)");
  sel->add_option("--alpha", sp.alpha, "pairwise diversity weight");
  sel->add_option("--beta", sp.beta, "diversity weight against the best");

  auto* evo = app.add_subcommand("evolve", "UCB-driven evolution of one component");
  std::optional<int> trials;
  std::optional<std::size_t> m;
  add_case(evo, true);
  evo->add_option("--trials", trials, "trial budget")->check(CLI::NonNegativeNumber);
  evo->add_option("-m", m, "population size")->check(CLI::PositiveNumber);

  auto* dsec = app.add_subcommand("dse", "Bayesian search over a generated pool");
  std::optional<std::size_t> budget;
  std::string surrogate;
  add_case(dsec, true);
  dsec->add_option("--pool", pool_dir, "run directory written by gen")->required()->check(CLI::ExistingDirectory);
  dsec->add_option("--budget", budget, "evaluation budget")->check(CLI::PositiveNumber);
  dsec->add_option("--surrogate", surrogate, "pretrained surrogate file")->check(CLI::ExistingFile);

  auto* pre = app.add_subcommand("pretrain", "fit the surrogate network on evaluated pools");
  std::vector<std::string> pools;
  std::string model = "surrogate.bin";
  add_case(pre, true);
  pre->add_option("--pool", pools, "run directories written by gen")->required()->check(CLI::ExistingDirectory);
  pre->add_option("--model", model, "output file");

  auto* rep = app.add_subcommand("report", "CSV tables or SVG charts for a run");
  std::string run_dir, format = "csv";
  rep->add_option("--run", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--format", format, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));

  auto* syn = app.add_subcommand("synth", "write a synthetic Bookshelf case");
  std::string spec_path;
  syn->add_option("--spec", spec_path, "synthetic spec INI")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "evoplace: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*place) return cmd_place(g, c, pl_out);
    if (*gen) return cmd_gen(g, c, n);
    if (*sel) return cmd_select(g, pool_dir, sp, kopt->count() > 0);
    if (*evo) return cmd_evolve(g, c, trials, m);
    if (*dsec) return cmd_dse(g, c, pool_dir, budget, surrogate);
    if (*pre) return cmd_pretrain(g, c, pools, model);
    if (*rep) {
      for (const auto& f : harness::write_report(run_dir, format)) std::cout << f.string() << "\n";
      return 0;
    }
    if (*syn) return cmd_synth(g, spec_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "evoplace: " << e.what() << "\n" << app.help();
    return 1;
  } catch (const Error& e) {
    std::cerr << "evoplace: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "evoplace: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
