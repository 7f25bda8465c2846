#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "evoplace/error.hpp"
#include "evoplace/harness.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::harness {

int default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<place::EvalResult> evaluate_batch(const std::vector<dsl::StrategyBundle>& bundles,
                                              const io::BenchmarkCase& c, const place::EngineConfig& cfg,
                                              std::uint64_t seed, int workers, const dsl::FeatureTable* features) {
  if (workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  std::vector<place::EvalResult> out(bundles.size());
  if (bundles.empty()) return out;
  std::optional<dsl::FeatureTable> own;
  if (!features) {
    own = dsl::extract_features(c);
    features = &*own;
  }
  parallel_for(bundles.size(), workers, [&](std::size_t i) {
    try {
      out[i] = place::run_global_place(c, bundles[i], cfg, seed, features);
    } catch (const std::exception& e) {
      out[i] = place::EvalResult{};
      out[i].status = place::Status::Error;
      out[i].hpwl = std::nan("");
      out[i].message = e.what();
    }
  });
  return out;
}

std::uint64_t evaluation_seed(std::uint64_t run_seed) { return derive_seed(run_seed, {fnv1a("evaluation")}); }

place::EvalResult Workload::evaluate(const dsl::StrategyProgram& p) const {
  dsl::StrategyBundle b = base;
  b.slot(p.kind) = p;
  return place::run_global_place(bench, b, engine, eval_seed, &features);
}

place::EvalResult Workload::baseline() const { return place::run_global_place(bench, base, engine, eval_seed, &features); }

json eval_json_with_runtime(const place::EvalResult& r) {
  json j = evolve::eval_to_json(r);
  j["runtime"] = r.runtime;
  return j;
}

std::vector<GeneratedCandidate> generate_candidates(llm::Gateway& gw, const prompt::TemplateSet& templates,
                                                    const Workload& w, std::size_t n, std::uint64_t seed,
                                                    int workers, store::RunStore* store, std::size_t first_index) {
  std::vector<GeneratedCandidate> out(n);
  prompt::GenerationContext ctx;
  ctx.kind = w.kind;
  ctx.grammar = templates.grammar;
  ctx.feature_summary = dsl::feature_summary(w.features);
  if (const auto& cur = w.base.slot(w.kind)) ctx.current_source = cur->source;

  parallel_for(n, workers, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, {fnv1a("generate"), first_index + i});
    out[i].candidate = prompt::cot_generate(gw, templates, ctx, s);
  });
  std::vector<dsl::StrategyBundle> bundles;
  std::vector<std::size_t> which;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out[i].candidate.feasible) {
      out[i].eval.status = place::Status::Error;
      out[i].eval.hpwl = std::nan("");
      out[i].eval.message = out[i].candidate.failure_message;
      continue;
    }
    dsl::StrategyBundle b = w.base;
    b.slot(w.kind) = *out[i].candidate.program;
    bundles.push_back(std::move(b));
    which.push_back(i);
  }
  const auto results = evaluate_batch(bundles, w.bench, w.engine, w.eval_seed, workers, &w.features);
  for (std::size_t k = 0; k < which.size(); ++k) out[which[k]].eval = results[k];
  for (auto& g : out) {
    const std::string& text = g.candidate.source.empty() ? std::string("(empty)") : g.candidate.source;
    g.embedding = gw.embed(text);
  }
  if (store) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& g = out[i];
      const std::string id = g.candidate.program ? g.candidate.program->id : hash_hex(g.candidate.source);
      json prov = json::array();
      for (const auto& p : g.candidate.provenance)
        prov.push_back({{"step", p.step}, {"template", p.template_id}, {"prompt_hash", p.prompt_hash},
                        {"request_hash", p.request_hash}, {"response", p.response}});
      json rec = {{"record", "generation"}, {"index", first_index + i},  {"id", id},
                  {"kind", std::string(dsl::to_string(w.kind))},      {"seed", g.candidate.seed},
                  {"feasible", g.candidate.feasible},                  {"source", g.candidate.source},
                  {"provenance", prov}};
      if (g.candidate.failure) {
        rec["failure"] = std::string(to_string(*g.candidate.failure));
        rec["failure_message"] = g.candidate.failure_message;
      }
      store->append("candidates.jsonl", rec);
      store->append("candidates.jsonl", {{"record", "evaluation"}, {"index", first_index + i}, {"id", id},
                                         {"eval", evolve::eval_to_json(g.eval)}});
      store->append("timings.jsonl", {{"id", id}, {"runtime", g.eval.runtime}});
    }
  }
  return out;
}

select::CandidatePool to_pool(const std::vector<GeneratedCandidate>& cands) {
  select::CandidatePool pool;
  for (const auto& g : cands) {
    select::PoolEntry e;
    e.id = g.candidate.program ? g.candidate.program->id : hash_hex(g.candidate.source);
    e.status = g.eval.status;
    e.hpwl = g.eval.hpwl;
    e.embedding = g.embedding;
    pool.push_back(std::move(e));
  }
  return pool;
}

EvolveOutcome run_evolve_experiment(llm::Gateway& gw, const prompt::TemplateSet& templates, const Workload& w,
                                    const ExperimentConfig& cfg, store::RunStore* store) {
  EvolveOutcome out;
  out.baseline = w.baseline();
  if (out.baseline.status != place::Status::Success)
    throw Error(ErrorCode::InvalidArgument, "baseline strategy does not converge on this case: " +
                                                std::string(place::to_string(out.baseline.status)));
  const int workers = cfg.effective_workers();
  std::vector<evolve::Member> initial;

  std::optional<json> stored = store ? store->header("history.jsonl") : std::nullopt;
  if (stored) {
    for (const json& j : stored->at("initial")) initial.push_back(evolve::member_from_json(j, w.kind));
  } else {
    if (store) {
      store->open_log("candidates.jsonl", {{"kind", std::string(dsl::to_string(w.kind))}, {"seed", cfg.seed}});
      store->write_json("run.json", {{"command", "evolve"},
                                     {"seed", cfg.seed},
                                     {"kind", std::string(dsl::to_string(w.kind))},
                                     {"case", w.bench.name},
                                     {"baseline", eval_json_with_runtime(out.baseline)},
                                     {"baseline_hpwl", out.baseline.hpwl}});
    }
    // keep generating until m members succeed
    std::size_t produced = 0;
    for (int round = 0; round < 4; ++round) {
      const std::size_t n = round == 0 ? cfg.pool_size : cfg.pool_size / 2 + 1;
      auto more = generate_candidates(gw, templates, w, n, cfg.seed, workers, store, produced);
      produced += n;
      out.pool.insert(out.pool.end(), more.begin(), more.end());
      const auto ok = std::count_if(out.pool.begin(), out.pool.end(),
                                    [](const GeneratedCandidate& g) { return g.eval.status == place::Status::Success; });
      if (static_cast<std::size_t>(ok) >= cfg.evolve.m) break;
    }
    select::SelectParams sp = cfg.select;
    sp.m = cfg.evolve.m;
    sp.k = std::max(sp.k, sp.m);
    out.selected = select::select_diverse(to_pool(out.pool), sp);
    for (std::size_t i : out.selected) {
      evolve::Member m;
      m.candidate = *out.pool[i].candidate.program;
      m.eval = out.pool[i].eval;
      initial.push_back(std::move(m));
    }
  }
  evolve::EvolveContext ctx;
  ctx.kind = w.kind;
  ctx.templates = &templates;
  ctx.grammar = templates.grammar;
  ctx.feature_summary = dsl::feature_summary(w.features);
  ctx.evaluate = [&w](const dsl::StrategyProgram& p) { return w.evaluate(p); };
  out.evolution = evolve::run_evolution(gw, ctx, std::move(initial), cfg.evolve, cfg.seed, store);
  out.improvement = (out.baseline.hpwl - out.evolution.best.eval.hpwl) / out.baseline.hpwl;
  return out;
}

}  // namespace evoplace::harness
