#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evoplace/engine.hpp"
#include "evoplace/error.hpp"
#include "evoplace/llm.hpp"
#include "evoplace/strategy.hpp"

namespace evoplace::prompt {

/// Section headers, in the order every rendered prompt carries them.
const std::vector<std::string>& section_titles();

/// A markdown file with a title line and the six sections; `{{name}}`
/// marks a slot.
struct PromptTemplate {
  std::string id;
  std::string title;
  std::vector<std::string> sections;  // parallel to section_titles()

  /// Throws InvalidConfig when a section is missing or out of order.
  static PromptTemplate parse(std::string id, std::string_view markdown);
};

/// Loads the seven step templates plus system.md and grammar.md. An empty
/// directory path means the compiled-in copies; files present in `dir`
/// override them one by one.
struct TemplateSet {
  std::map<std::string, PromptTemplate> templates;
  std::string system;
  std::string grammar;

  static TemplateSet load(const std::filesystem::path& dir = {});
  const PromptTemplate& get(const std::string& id) const;
};

using Slots = std::map<std::string, std::string>;

/// Substitutes every slot; MissingSlot(name) if one has no value.
std::string render_slots(std::string_view text, const Slots& slots);
/// Full prompt: title, step marker, six sections.
std::string render_prompt(const PromptTemplate& t, const Slots& slots, std::string_view marker);

struct GenerationContext {
  dsl::Kind kind = dsl::Kind::Init;
  std::string current_source;
  std::string grammar;
  std::string feature_summary;
  std::optional<std::string> prior_analysis;
  std::optional<std::string> idea;
  std::optional<std::string> reference;
  std::optional<double> best_hpwl;

  Slots slots() const;
};

/// Content of the last fenced block; ExtractionError when there is none.
std::string extract_code_block(std::string_view text);

struct ProvenanceStep {
  std::string step;         // analysis | idea | reference | final | e1 | reflect | e2
  std::string template_id;
  std::string prompt_hash;  // hash of the rendered messages
  std::string request_hash; // gateway request hash
  std::string response;
};

struct Candidate {
  dsl::Kind kind = dsl::Kind::Init;
  std::optional<dsl::StrategyProgram> program;  // set iff feasible
  std::string source;                           // extracted text, even when infeasible
  bool feasible = false;
  std::optional<ErrorCode> failure;
  std::string failure_message;
  std::uint64_t seed = 0;
  std::vector<ProvenanceStep> provenance;
};

/// Four chained calls: analysis, idea, reference implementation, final
/// program. Never throws for model or gateway faults.
Candidate cot_generate(llm::Gateway& gateway, const TemplateSet& templates, const GenerationContext& ctx,
                       std::uint64_t seed);

enum class Outcome { ExecFailure, Improved, Degraded };
std::string_view to_string(Outcome o);
Outcome parse_outcome(std::string_view text);

/// Improved iff the child succeeded with hpwl < parent * (1 - 1e-4).
/// Error is an execution failure; a diverged run counts as Degraded.
Outcome classify_outcome(double hpwl_parent, const place::EvalResult& child);

struct ReflectionRecord {
  std::string parent_id;
  std::string child_id;
  Outcome outcome = Outcome::Degraded;
  double hpwl_parent = 0.0;
  std::optional<double> hpwl_child;
  std::string text;
};

enum class Stage { E1, Reflect, E2 };

struct EvolutionInput {
  dsl::Kind kind = dsl::Kind::Init;
  std::string grammar;
  std::string feature_summary;
  std::string parent_source;
  double parent_hpwl = 0.0;
  std::optional<double> best_hpwl;
  std::optional<std::string> child_source;
  std::optional<place::EvalResult> child_eval;
  std::optional<std::string> reflection;
};

/// Messages for one evolution stage. MissingSlot when the stage's inputs
/// are absent (Reflect needs child + eval, E2 needs child + reflection).
std::vector<llm::Message> build_evolution_prompt(Stage stage, const EvolutionInput& in, const TemplateSet& templates);

std::string hash_messages(const std::vector<llm::Message>& messages);

}  // namespace evoplace::prompt
