#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoplace/engine.hpp"
#include "evoplace/llm.hpp"
#include "evoplace/prompts.hpp"
#include "evoplace/run_store.hpp"
#include "evoplace/strategy.hpp"

namespace evoplace::evolve {

using nlohmann::json;

struct UcbState {
  double Q = 0.0;  // running mean of child rewards
  int N = 0;       // trials spent on this member
};

struct Member {
  dsl::StrategyProgram candidate;
  place::EvalResult eval;
  UcbState ucb;
  std::string parent_id;
  int generation = 0;
};

/// Q + lambda * sqrt(ln t / N); +inf when N = 0. Requires t >= 1.
double ucb_score(const UcbState& s, int t, double lambda);

/// Reward normalization frozen from the initial pool; values clamp to [0, 1].
struct Normalizer {
  double hpwl_min = 0.0;
  double hpwl_max = 1.0;

  static Normalizer of(const std::vector<Member>& population);
  double score(const place::EvalResult& r) const;  // 0 unless Success
};

/// Index of the argmax UCB member; ties go to the better score, then the
/// lower id.
std::size_t choose_candidate(const std::vector<Member>& population, int t, double lambda, const Normalizer& norm);

/// Inserts a Success child (unless an identical program is already
/// resident), keeps the population sorted by HPWL then id, and trims to m.
void update_population(std::vector<Member>& population, const Member& child, std::size_t m);

using Evaluator = std::function<place::EvalResult(const dsl::StrategyProgram&)>;

struct EvolveContext {
  dsl::Kind kind = dsl::Kind::Init;
  const prompt::TemplateSet* templates = nullptr;
  std::string grammar;
  std::string feature_summary;
  Evaluator evaluate;
};

/// One chain: E1, evaluate, reflect, E2, evaluate. The returned child has
/// an Error eval when the model output could not be used.
struct StepResult {
  Member child;
  json record;  // stage-by-stage log with provenance
  double reward = 0.0;
};

StepResult evolve_step(llm::Gateway& gateway, const EvolveContext& ctx, const Member& parent,
                       std::optional<double> best_hpwl, const Normalizer& norm, std::uint64_t seed);

struct EvolveConfig {
  std::size_t m = 6;
  int trials = 200;
  double lambda = 1.0;
  int fanout = 1;
};

struct EvolutionResult {
  Member best;
  std::vector<Member> population;
  std::vector<json> history;  // one record per trial
};

json member_to_json(const Member& m);
Member member_from_json(const json& j, dsl::Kind kind);
json eval_to_json(const place::EvalResult& r);  // no wall-clock fields
place::EvalResult eval_from_json(const json& j);

/// Algorithm loop. With a store, appends one "evolution-trial" record per
/// trial to history.jsonl (wall-clock times go to timings.jsonl) and
/// resumes from whatever trials are already there.
EvolutionResult run_evolution(llm::Gateway& gateway, const EvolveContext& ctx, std::vector<Member> initial,
                              const EvolveConfig& cfg, std::uint64_t seed, store::RunStore* store = nullptr);

}  // namespace evoplace::evolve
