#include <cmath>
#include <fstream>
#include <sstream>

#include "evoplace/assets.hpp"
#include "evoplace/prompts.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::prompt {

namespace {

const std::vector<std::string> kStepTemplates = {"analysis", "idea", "reference", "final",
                                                 "evolve_e1", "reflect", "evolve_e2"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_hpwl(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const std::vector<std::string>& section_titles() {
  static const std::vector<std::string> t = {"Task Description",      "Context", "Algorithm Code", "Related Analysis",
                                             "Specific Instructions", "Output Format"};
  return t;
}

PromptTemplate PromptTemplate::parse(std::string id, std::string_view markdown) {
  PromptTemplate t;
  t.id = std::move(id);
  std::istringstream in{std::string(markdown)};
  std::string line;
  int current = -1;
  std::vector<std::string> body(section_titles().size());
  std::vector<bool> seen(section_titles().size(), false);
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0 && current < 0) {
      t.title = trim(line.substr(2));
      continue;
    }
    if (line.rfind("## ", 0) == 0) {
      const std::string name = trim(line.substr(3));
      const auto& titles = section_titles();
      const auto it = std::find(titles.begin(), titles.end(), name);
      if (it != titles.end()) {
        const int idx = static_cast<int>(it - titles.begin());
        if (idx != current + 1)
          throw Error(ErrorCode::InvalidConfig, "template " + t.id + ": section '" + name + "' out of order");
        current = idx;
        seen[static_cast<std::size_t>(idx)] = true;
        continue;
      }
    }
    if (current >= 0) body[static_cast<std::size_t>(current)] += line + "\n";
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw Error(ErrorCode::InvalidConfig, "template " + t.id + ": missing section '" + section_titles()[i] + "'");
  for (auto& b : body) t.sections.push_back(trim(b));
  return t;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  auto text_of = [&](const std::string& file) {
    if (!dir.empty())
      if (auto disk = read_file(dir / file)) return *disk;
    const auto& table = assets::all();
    const auto it = table.find(file);
    if (it == table.end()) throw Error(ErrorCode::InvalidConfig, "no template named " + file);
    return it->second;
  };
  TemplateSet set;
  for (const auto& id : kStepTemplates) set.templates.emplace(id, PromptTemplate::parse(id, text_of(id + ".md")));
  set.system = trim(text_of("system.md"));
  set.grammar = trim(text_of("grammar.md"));
  return set;
}

const PromptTemplate& TemplateSet::get(const std::string& id) const {
  const auto it = templates.find(id);
  if (it == templates.end()) throw Error(ErrorCode::InvalidConfig, "unknown template " + id);
  return it->second;
}

std::string render_slots(std::string_view text, const Slots& slots) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const std::string name = trim(text.substr(open + 2, close - open - 2));
    const auto it = slots.find(name);
    if (it == slots.end()) throw Error(ErrorCode::MissingSlot, "missing prompt slot: " + name);
    out += it->second;
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

std::string render_prompt(const PromptTemplate& t, const Slots& slots, std::string_view marker) {
  std::string out = "# " + render_slots(t.title, slots) + "\n" + std::string(marker) + "\n";
  for (std::size_t i = 0; i < t.sections.size(); ++i)
    out += "\n## " + section_titles()[i] + "\n\n" + render_slots(t.sections[i], slots) + "\n";
  return out;
}

Slots GenerationContext::slots() const {
  Slots s;
  s["kind"] = std::string(dsl::to_string(kind));
  s["current_code"] = current_source.empty() ? dsl::identity_source(kind) : current_source;
  if (!grammar.empty()) s["grammar"] = grammar;
  if (!feature_summary.empty()) s["features"] = feature_summary;
  if (prior_analysis) s["analysis"] = *prior_analysis;
  if (idea) s["idea"] = *idea;
  if (reference) s["reference_code"] = *reference;
  s["best"] = best_hpwl ? "The best candidate so far reaches HPWL " + fmt_hpwl(*best_hpwl) + "."
                        : "No candidate has been evaluated yet.";
  return s;
}

std::string extract_code_block(std::string_view text) {
  // Fences are lines starting with ```; pair them in order.
  std::vector<std::pair<std::size_t, std::size_t>> fences;  // (line start, line end)
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    const auto lead = line.find_first_not_of(" \t");
    if (lead != std::string_view::npos && line.substr(lead, 3) == "```") fences.emplace_back(pos, end);
    if (end == text.size()) break;
    pos = end + 1;
  }
  if (fences.size() < 2) throw Error(ErrorCode::ExtractionError, "no fenced code block in model output");
  const std::size_t pairs = fences.size() / 2;
  const auto open = fences[2 * (pairs - 1)];
  const auto close = fences[2 * (pairs - 1) + 1];
  const std::size_t body = std::min(open.second + 1, close.first);
  return trim(text.substr(body, close.first - body));
}

std::string hash_messages(const std::vector<llm::Message>& messages) {
  std::string key;
  for (const auto& m : messages) key += m.role + "\x1f" + m.content + "\x1e";
  return hash_hex(key);
}

namespace {

struct Chain {
  llm::Gateway& gw;
  const TemplateSet& templates;
  Candidate& cand;

  std::string ask(const std::string& step, const std::string& template_id, const Slots& slots, std::uint64_t seed,
                  dsl::Kind kind, std::string_view outcome = {}, std::optional<double> temperature = std::nullopt) {
    const std::string user = render_prompt(templates.get(template_id), slots, llm::step_marker(step, kind, outcome));
    std::vector<llm::Message> msgs = {{"system", templates.system}, {"user", user}};
    ProvenanceStep p;
    p.step = step;
    p.template_id = template_id;
    p.prompt_hash = hash_messages(msgs);
    llm::CallRecord rec;
    try {
      p.response = gw.chat(msgs, seed, temperature, &rec);
    } catch (...) {
      p.request_hash = rec.request_hash;
      cand.provenance.push_back(p);
      throw;
    }
    p.request_hash = rec.request_hash;
    cand.provenance.push_back(p);
    return p.response;
  }
};

void finish(Candidate& c, const std::string& reply) {
  try {
    c.source = extract_code_block(reply);
  } catch (const Error& e) {
    c.failure = e.code();
    c.failure_message = e.what();
    return;
  }
  try {
    c.program = dsl::parse_strategy(c.source, c.kind);
    c.feasible = true;
  } catch (const Error& e) {
    c.failure = ErrorCode::ValidationError;
    c.failure_message = std::string(to_string(e.code())) + ": " + e.what();
  }
}

}  // namespace

Candidate cot_generate(llm::Gateway& gateway, const TemplateSet& templates, const GenerationContext& ctx,
                       std::uint64_t seed) {
  Candidate c;
  c.kind = ctx.kind;
  c.seed = seed;
  Chain chain{gateway, templates, c};
  try {
    Slots slots = ctx.slots();
    auto sub = [&](std::uint64_t step) { return derive_seed(seed, {fnv1a("cot"), step}); };
    slots["analysis"] = chain.ask("analysis", "analysis", slots, sub(0), ctx.kind);
    slots["idea"] = chain.ask("idea", "idea", slots, sub(1), ctx.kind);
    const std::string ref = chain.ask("reference", "reference", slots, sub(2), ctx.kind);
    try {
      slots["reference_code"] = extract_code_block(ref);
    } catch (const Error&) {
      slots["reference_code"] = trim(ref);
    }
    finish(c, chain.ask("final", "final", slots, sub(3), ctx.kind));
  } catch (const Error& e) {
    c.failure = e.code();
    c.failure_message = e.what();
  } catch (const std::exception& e) {
    c.failure = ErrorCode::TransportError;
    c.failure_message = e.what();
  }
  return c;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::ExecFailure: return "ExecFailure";
    case Outcome::Improved: return "Improved";
    case Outcome::Degraded: return "Degraded";
  }
  return "Degraded";
}

Outcome parse_outcome(std::string_view text) {
  if (text == "ExecFailure") return Outcome::ExecFailure;
  if (text == "Improved") return Outcome::Improved;
  if (text == "Degraded") return Outcome::Degraded;
  throw Error(ErrorCode::InvalidArgument, "unknown outcome: " + std::string(text));
}

Outcome classify_outcome(double hpwl_parent, const place::EvalResult& child) {
  if (child.status == place::Status::Error) return Outcome::ExecFailure;
  if (child.status == place::Status::Success && child.hpwl < hpwl_parent * (1.0 - 1e-4)) return Outcome::Improved;
  return Outcome::Degraded;
}

std::vector<llm::Message> build_evolution_prompt(Stage stage, const EvolutionInput& in, const TemplateSet& templates) {
  Slots s;
  s["kind"] = std::string(dsl::to_string(in.kind));
  if (!in.grammar.empty()) s["grammar"] = in.grammar;
  if (!in.feature_summary.empty()) s["features"] = in.feature_summary;
  s["parent_code"] = in.parent_source;
  s["parent_hpwl"] = fmt_hpwl(in.parent_hpwl);
  s["best"] = in.best_hpwl ? "The best candidate so far reaches HPWL " + fmt_hpwl(*in.best_hpwl) + "."
                           : "No candidate has been evaluated yet.";
  if (in.child_source) s["child_code"] = *in.child_source;
  if (in.reflection) s["reflection"] = *in.reflection;

  std::string outcome;
  if (in.child_eval) {
    const Outcome o = classify_outcome(in.parent_hpwl, *in.child_eval);
    outcome = std::string(to_string(o));
    s["outcome"] = outcome;
    std::string fb;
    switch (o) {
      case Outcome::ExecFailure:
        fb = "The evolved algorithm failed to execute: " + in.child_eval->message;
        break;
      case Outcome::Improved:
        fb = "The evolved algorithm improved HPWL from " + fmt_hpwl(in.parent_hpwl) + " to " +
             fmt_hpwl(in.child_eval->hpwl) + ".";
        break;
      case Outcome::Degraded:
        fb = "The evolved algorithm did not improve HPWL (parent " + fmt_hpwl(in.parent_hpwl) + ", child " +
             fmt_hpwl(in.child_eval->hpwl) + ", status " + std::string(place::to_string(in.child_eval->status)) + ").";
        break;
    }
    s["feedback"] = fb;
  }

  std::string id, step;
  switch (stage) {
    case Stage::E1: id = "evolve_e1"; step = "e1"; break;
    case Stage::Reflect:
      id = "reflect";
      step = "reflect";
      if (!in.child_source) throw Error(ErrorCode::MissingSlot, "missing prompt slot: child_code");
      if (!in.child_eval) throw Error(ErrorCode::MissingSlot, "missing prompt slot: feedback");
      break;
    case Stage::E2:
      id = "evolve_e2";
      step = "e2";
      if (!in.child_source) throw Error(ErrorCode::MissingSlot, "missing prompt slot: child_code");
      if (!in.reflection) throw Error(ErrorCode::MissingSlot, "missing prompt slot: reflection");
      break;
  }
  const std::string user = render_prompt(templates.get(id), s, llm::step_marker(step, in.kind, outcome));
  return {{"system", templates.system}, {"user", user}};
}

}  // namespace evoplace::prompt
