#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoplace/bookshelf.hpp"
#include "evoplace/dse.hpp"
#include "evoplace/engine.hpp"
#include "evoplace/evolver.hpp"
#include "evoplace/llm.hpp"
#include "evoplace/prompts.hpp"
#include "evoplace/run_store.hpp"
#include "evoplace/selector.hpp"
#include "evoplace/strategy.hpp"

namespace evoplace::harness {

using nlohmann::json;

int default_workers();

/// Runs every bundle on `c` with the same seed. Results follow input order
/// and do not depend on `workers`; strategy faults become Error results.
std::vector<place::EvalResult> evaluate_batch(const std::vector<dsl::StrategyBundle>& bundles,
                                              const io::BenchmarkCase& c, const place::EngineConfig& cfg,
                                              std::uint64_t seed, int workers,
                                              const dsl::FeatureTable* features = nullptr);

/// Everything an experiment needs; loaded from an INI file (see config.cpp).
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int workers = 0;  // 0 means default_workers()
  llm::BackendConfig backend;
  std::filesystem::path templates_dir;
  place::EngineConfig engine;
  select::SelectParams select{6, 30, 0.5, 0.5};
  evolve::EvolveConfig evolve;
  std::size_t pool_size = 30;  // candidates generated before selection
  std::size_t dse_budget = 20;
  dse::DseOptions dse;
  std::filesystem::path surrogate_path;
  dse::SurrogateConfig surrogate;

  int effective_workers() const { return workers > 0 ? workers : default_workers(); }
};

/// Unknown sections or keys are InvalidConfig.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_text(ExperimentConfig& cfg, const std::string& ini_text);

/// Case, its features and the base bundle for the component under study.
struct Workload {
  io::BenchmarkCase bench;
  dsl::FeatureTable features;
  dsl::StrategyBundle base;
  dsl::Kind kind = dsl::Kind::Init;
  std::uint64_t eval_seed = 0;
  place::EngineConfig engine;

  place::EvalResult evaluate(const dsl::StrategyProgram& p) const;
  place::EvalResult baseline() const;
};

std::uint64_t evaluation_seed(std::uint64_t run_seed);

struct GeneratedCandidate {
  prompt::Candidate candidate;
  place::EvalResult eval;  // Error when infeasible
  llm::EmbeddingVector embedding;
};

/// N chains of the generation pipeline plus evaluation. Records go to
/// candidates.jsonl when a store is given.
std::vector<GeneratedCandidate> generate_candidates(llm::Gateway& gw, const prompt::TemplateSet& templates,
                                                    const Workload& w, std::size_t n, std::uint64_t seed,
                                                    int workers, store::RunStore* store = nullptr,
                                                    std::size_t first_index = 0);

select::CandidatePool to_pool(const std::vector<GeneratedCandidate>& cands);

struct EvolveOutcome {
  place::EvalResult baseline;
  std::vector<GeneratedCandidate> pool;
  std::vector<std::size_t> selected;
  evolve::EvolutionResult evolution;
  double improvement = 0.0;  // (baseline - best) / baseline
};

/// Generate a pool, select m diverse members, evolve. Resumes when the
/// store already holds a run with the same settings.
EvolveOutcome run_evolve_experiment(llm::Gateway& gw, const prompt::TemplateSet& templates, const Workload& w,
                                    const ExperimentConfig& cfg, store::RunStore* store = nullptr);

json eval_json_with_runtime(const place::EvalResult& r);

/// (baseline - hpwl) / baseline * 100.
double improvement_pct(double baseline, double hpwl);

/// Writes CSV tables or SVG charts for a run directory and returns the paths.
/// Throws CorruptStore(record index) on unreadable logs.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& run_dir, const std::string& format);

}  // namespace evoplace::harness
