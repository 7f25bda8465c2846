#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "evoplace/error.hpp"
#include "evoplace/evolver.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::evolve {

double ucb_score(const UcbState& s, int t, double lambda) {
  if (t < 1) throw Error(ErrorCode::InvalidArgument, "ucb_score needs t >= 1");
  if (s.N == 0) return std::numeric_limits<double>::infinity();
  return s.Q + lambda * std::sqrt(std::log(static_cast<double>(t)) / s.N);
}

Normalizer Normalizer::of(const std::vector<Member>& population) {
  Normalizer n;
  n.hpwl_min = std::numeric_limits<double>::infinity();
  n.hpwl_max = -std::numeric_limits<double>::infinity();
  for (const Member& m : population) {
    if (m.eval.status != place::Status::Success) continue;
    n.hpwl_min = std::min(n.hpwl_min, m.eval.hpwl);
    n.hpwl_max = std::max(n.hpwl_max, m.eval.hpwl);
  }
  if (!std::isfinite(n.hpwl_min)) throw Error(ErrorCode::InsufficientPool, "population has no Success member");
  return n;
}

double Normalizer::score(const place::EvalResult& r) const {
  if (r.status != place::Status::Success || !std::isfinite(r.hpwl)) return 0.0;
  const double f = (hpwl_max - r.hpwl) / (hpwl_max - hpwl_min + 1e-12);
  return std::clamp(f, 0.0, 1.0);
}

std::size_t choose_candidate(const std::vector<Member>& pop, int t, double lambda, const Normalizer& norm) {
  if (pop.empty()) throw Error(ErrorCode::InvalidArgument, "empty population");
  std::size_t best = 0;
  double best_u = ucb_score(pop[0].ucb, t, lambda);
  for (std::size_t i = 1; i < pop.size(); ++i) {
    const double u = ucb_score(pop[i].ucb, t, lambda);
    bool take = u > best_u;
    if (u == best_u) {
      const double fi = norm.score(pop[i].eval), fb = norm.score(pop[best].eval);
      take = fi > fb || (fi == fb && pop[i].candidate.id < pop[best].candidate.id);
    }
    if (take) {
      best = i;
      best_u = u;
    }
  }
  return best;
}

namespace {

bool member_less(const Member& a, const Member& b) {
  if (a.eval.hpwl != b.eval.hpwl) return a.eval.hpwl < b.eval.hpwl;
  return a.candidate.id < b.candidate.id;
}

}  // namespace

void update_population(std::vector<Member>& pop, const Member& child, std::size_t m) {
  if (child.eval.status == place::Status::Success && std::isfinite(child.eval.hpwl)) {
    const bool resident = std::any_of(pop.begin(), pop.end(), [&](const Member& x) { return x.candidate.id == child.candidate.id; });
    if (!resident) pop.push_back(child);
  }
  std::sort(pop.begin(), pop.end(), member_less);
  if (pop.size() > m) pop.resize(m);
}

json eval_to_json(const place::EvalResult& r) {
  json j = {{"status", std::string(place::to_string(r.status))},
            {"iterations", r.iterations},
            {"overflow_final", std::isfinite(r.overflow_final) ? json(r.overflow_final) : json(nullptr)}};
  j["hpwl"] = std::isfinite(r.hpwl) ? json(r.hpwl) : json(nullptr);
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

place::EvalResult eval_from_json(const json& j) {
  place::EvalResult r;
  r.status = place::parse_status(j.at("status").get<std::string>());
  r.hpwl = j.at("hpwl").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("hpwl").get<double>();
  r.iterations = j.value("iterations", 0);
  r.overflow_final = j.contains("overflow_final") && !j["overflow_final"].is_null() ? j["overflow_final"].get<double>()
                                                                                     : std::numeric_limits<double>::quiet_NaN();
  r.message = j.value("message", "");
  return r;
}

json member_to_json(const Member& m) {
  return {{"id", m.candidate.id},     {"source", m.candidate.source}, {"eval", eval_to_json(m.eval)},
          {"Q", m.ucb.Q},             {"N", m.ucb.N},                 {"parent", m.parent_id},
          {"generation", m.generation}};
}

Member member_from_json(const json& j, dsl::Kind kind) {
  Member m;
  m.candidate = dsl::parse_strategy(j.at("source").get<std::string>(), kind);
  if (m.candidate.id != j.at("id").get<std::string>())
    throw Error(ErrorCode::CorruptStore, "member id does not match its source");
  m.eval = eval_from_json(j.at("eval"));
  m.ucb.Q = j.at("Q").get<double>();
  m.ucb.N = j.at("N").get<int>();
  m.parent_id = j.value("parent", "");
  m.generation = j.value("generation", 0);
  return m;
}

namespace {

struct Stage {
  std::string name;
  std::string reply;
  llm::CallRecord call;
  std::string prompt_hash;
};

json stage_json(const Stage& s) {
  return {{"stage", s.name}, {"prompt_hash", s.prompt_hash}, {"request_hash", s.call.request_hash}, {"response", s.reply}};
}

// Extracts and checks a program. On failure the candidate carries the raw
// text and the eval explains why.
Member make_child(const std::string& reply, const Member& parent, dsl::Kind kind, const Evaluator& evaluate,
                  json& log) {
  Member child;
  child.parent_id = parent.candidate.id;
  child.generation = parent.generation + 1;
  child.candidate.kind = kind;
  std::string source;
  try {
    source = prompt::extract_code_block(reply);
  } catch (const Error& e) {
    child.candidate.source = reply;
    child.candidate.id = hash_hex(reply);
    child.eval.status = place::Status::Error;
    child.eval.hpwl = std::numeric_limits<double>::quiet_NaN();
    child.eval.message = std::string(to_string(e.code())) + ": " + e.what();
    log["feasible"] = false;
    log["failure"] = std::string(to_string(e.code()));
    log["eval"] = eval_to_json(child.eval);
    return child;
  }
  try {
    child.candidate = dsl::parse_strategy(source, kind);
  } catch (const Error& e) {
    child.candidate.source = source;
    child.candidate.id = hash_hex(source);
    child.eval.status = place::Status::Error;
    child.eval.hpwl = std::numeric_limits<double>::quiet_NaN();
    child.eval.message = std::string(to_string(e.code())) + ": " + e.what();
    log["source"] = source;
    log["feasible"] = false;
    log["failure"] = "ValidationError";
    log["eval"] = eval_to_json(child.eval);
    return child;
  }
  child.eval = evaluate(child.candidate);
  log["source"] = child.candidate.source;
  log["id"] = child.candidate.id;
  log["feasible"] = true;
  log["eval"] = eval_to_json(child.eval);
  return child;
}

Stage ask(llm::Gateway& gw, const std::string& name, std::vector<llm::Message> msgs, std::uint64_t seed,
          std::optional<double> temperature) {
  Stage s;
  s.name = name;
  s.prompt_hash = prompt::hash_messages(msgs);
  s.reply = gw.chat(msgs, seed, temperature, &s.call);
  return s;
}

}  // namespace

StepResult evolve_step(llm::Gateway& gateway, const EvolveContext& ctx, const Member& parent,
                       std::optional<double> best_hpwl, const Normalizer& norm, std::uint64_t seed) {
  if (!ctx.templates) throw Error(ErrorCode::InvalidArgument, "evolve_step needs templates");
  StepResult out;
  json& rec = out.record;
  rec["parent"] = parent.candidate.id;
  rec["parent_ucb"] = {{"Q", parent.ucb.Q}, {"N", parent.ucb.N}};
  rec["stages"] = json::array();

  prompt::EvolutionInput in;
  in.kind = ctx.kind;
  in.grammar = ctx.grammar;
  in.feature_summary = ctx.feature_summary;
  in.parent_source = parent.candidate.source;
  in.parent_hpwl = parent.eval.hpwl;
  in.best_hpwl = best_hpwl;

  Member child;
  try {
    Stage e1 = ask(gateway, "e1", prompt::build_evolution_prompt(prompt::Stage::E1, in, *ctx.templates),
                   derive_seed(seed, {1}), std::nullopt);
    json e1_log = stage_json(e1);
    Member first = make_child(e1.reply, parent, ctx.kind, ctx.evaluate, e1_log);
    rec["stages"].push_back(e1_log);

    in.child_source = first.candidate.source;
    in.child_eval = first.eval;
    Stage r = ask(gateway, "reflect", prompt::build_evolution_prompt(prompt::Stage::Reflect, in, *ctx.templates),
                  derive_seed(seed, {2}), gateway.config().reflection_temperature);
    json r_log = stage_json(r);
    const prompt::Outcome outcome = prompt::classify_outcome(parent.eval.hpwl, first.eval);
    r_log["outcome"] = std::string(prompt::to_string(outcome));
    rec["stages"].push_back(r_log);
    rec["reflection"] = {{"parent_id", parent.candidate.id},
                         {"child_id", first.candidate.id},
                         {"outcome", std::string(prompt::to_string(outcome))},
                         {"hpwl_parent", parent.eval.hpwl},
                         {"hpwl_child", std::isfinite(first.eval.hpwl) ? json(first.eval.hpwl) : json(nullptr)},
                         {"text", r.reply}};

    in.reflection = r.reply;
    Stage e2 = ask(gateway, "e2", prompt::build_evolution_prompt(prompt::Stage::E2, in, *ctx.templates),
                   derive_seed(seed, {3}), std::nullopt);
    json e2_log = stage_json(e2);
    child = make_child(e2.reply, parent, ctx.kind, ctx.evaluate, e2_log);
    rec["stages"].push_back(e2_log);
  } catch (const Error& e) {
    // gateway trouble costs the trial, nothing more
    child = Member{};
    child.parent_id = parent.candidate.id;
    child.generation = parent.generation + 1;
    child.candidate.kind = ctx.kind;
    child.eval.status = place::Status::Error;
    child.eval.hpwl = std::numeric_limits<double>::quiet_NaN();
    child.eval.message = std::string(to_string(e.code())) + ": " + e.what();
    rec["error"] = child.eval.message;
  }
  out.reward = norm.score(child.eval);
  rec["child"] = child.candidate.id;
  rec["child_eval"] = eval_to_json(child.eval);
  rec["reward"] = out.reward;
  out.child = std::move(child);
  return out;
}

namespace {

// Top `count` members by UCB under the choose_candidate order.
std::vector<std::size_t> choose_many(const std::vector<Member>& pop, int t, double lambda, const Normalizer& norm,
                                     std::size_t count) {
  std::vector<std::size_t> out;
  std::vector<Member> rest = pop;
  std::vector<std::size_t> map(pop.size());
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = i;
  while (out.size() < count && !rest.empty()) {
    const std::size_t k = choose_candidate(rest, t, lambda, norm);
    out.push_back(map[k]);
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
    map.erase(map.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

}  // namespace

EvolutionResult run_evolution(llm::Gateway& gateway, const EvolveContext& ctx, std::vector<Member> population,
                              const EvolveConfig& cfg, std::uint64_t seed, store::RunStore* store) {
  if (population.size() != cfg.m)
    throw Error(ErrorCode::InvalidArgument, "initial population has " + std::to_string(population.size()) +
                                                " members, expected m = " + std::to_string(cfg.m));
  if (cfg.fanout < 1) throw Error(ErrorCode::InvalidArgument, "fanout must be >= 1");
  std::sort(population.begin(), population.end(), member_less);
  const Normalizer norm = Normalizer::of(population);

  EvolutionResult res;
  int t0 = 0;
  if (store) {
    json meta = {{"kind", std::string(dsl::to_string(ctx.kind))},
                 {"m", cfg.m},
                 {"lambda", cfg.lambda},
                 {"fanout", cfg.fanout},
                 {"seed", seed},
                 {"normalizer", {norm.hpwl_min, norm.hpwl_max}},
                 {"initial", json::array()}};
    for (const Member& m : population) meta["initial"].push_back(member_to_json(m));
    store->open_log("history.jsonl", meta);
    res.history = store->read("history.jsonl", true);
    for (std::size_t i = 0; i < res.history.size(); ++i)
      if (res.history[i].value("trial", -1) != static_cast<int>(i) + 1)
        throw Error(ErrorCode::CorruptStore, "history.jsonl: trial numbering broken at record " + std::to_string(i + 1));
    if (!res.history.empty()) {
      population.clear();
      for (const json& j : res.history.back().at("population")) population.push_back(member_from_json(j, ctx.kind));
      t0 = static_cast<int>(res.history.size());
    }
  }

  for (int t = t0 + 1; t <= cfg.trials; ++t) {
    const auto t_start = std::chrono::steady_clock::now();
    const auto parents = choose_many(population, t, cfg.lambda, norm, static_cast<std::size_t>(cfg.fanout));
    const std::optional<double> best = population.front().eval.hpwl;
    std::vector<StepResult> steps(parents.size());
    auto run_chain = [&](std::size_t c) {
      steps[c] = evolve_step(gateway, ctx, population[parents[c]], best, norm,
                             derive_seed(seed, {fnv1a("trial"), static_cast<std::uint64_t>(t), c}));
    };
    if (parents.size() == 1) {
      run_chain(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t c = 0; c < parents.size(); ++c) threads.emplace_back(run_chain, c);
      for (auto& th : threads) th.join();
    }

    json rec = {{"record", "evolution-trial"}, {"trial", t}, {"seed", seed}, {"chains", json::array()}};
    for (std::size_t c = 0; c < parents.size(); ++c) {
      UcbState& u = population[parents[c]].ucb;
      u.N += 1;
      u.Q += (steps[c].reward - u.Q) / u.N;
      steps[c].record["child_source"] = steps[c].child.candidate.source;
      rec["chains"].push_back(steps[c].record);
    }
    for (const StepResult& s : steps) update_population(population, s.child, cfg.m);
    rec["population"] = json::array();
    for (const Member& m : population) rec["population"].push_back(member_to_json(m));
    rec["best_id"] = population.front().candidate.id;
    rec["best_hpwl"] = population.front().eval.hpwl;
    res.history.push_back(rec);
    if (store) {
      store->append("history.jsonl", rec);
      json pop = {{"trial", t}, {"members", rec["population"]}};
      store->write_json("population.json", pop);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      json timing = {{"trial", t}, {"seconds", secs}, {"eval_runtime", json::array()}};
      for (const StepResult& s : steps) timing["eval_runtime"].push_back(s.child.eval.runtime);
      store->append("timings.jsonl", timing);
    }
  }
  res.population = population;
  res.best = population.front();
  return res;
}

}  // namespace evoplace::evolve
