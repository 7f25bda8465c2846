#include <fstream>
#include <sstream>

#include "evoplace/error.hpp"
#include "evoplace/rng.hpp"
#include "evoplace/strategy.hpp"

namespace evoplace::dsl {

StrategyProgram parse_strategy(std::string_view source, Kind kind) {
  StrategyProgram p;
  p.kind = kind;
  p.source = std::string(source);
  p.ast = parse_program(source);
  check_program(p.ast, kind);
  p.id = hash_hex(p.source);
  return p;
}

StrategyProgram load_strategy(const std::filesystem::path& path, Kind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_strategy(ss.str(), kind);
}

Kind infer_kind(std::string_view source) {
  const Program prog = parse_program(source);
  std::vector<Kind> hits;
  for (Kind k : {Kind::Init, Kind::Precond, Kind::OptPolicy}) {
    bool assigns = false;
    for (const Stmt& st : prog.stmts)
      for (const Symbol& o : outputs(k))
        if (!st.is_let && st.name == o.name) assigns = true;
    if (assigns) hits.push_back(k);
  }
  if (hits.size() != 1) throw Error(ErrorCode::TypeError, "cannot tell the strategy kind from its outputs");
  return hits.front();
}

StrategyProgram load_strategy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_strategy(ss.str(), infer_kind(ss.str()));
}

std::optional<StrategyProgram>& StrategyBundle::slot(Kind kind) {
  switch (kind) {
    case Kind::Init: return init;
    case Kind::Precond: return precond;
    case Kind::OptPolicy: return opt_policy;
  }
  return init;
}

const std::optional<StrategyProgram>& StrategyBundle::slot(Kind kind) const {
  return const_cast<StrategyBundle*>(this)->slot(kind);
}

void StrategyBundle::validate() const {
  for (Kind k : {Kind::Init, Kind::Precond, Kind::OptPolicy}) {
    const auto& p = slot(k);
    if (p && p->kind != k)
      throw Error(ErrorCode::InvalidArgument, "a " + std::string(to_string(p->kind)) + " program sits in the " +
                                                  std::string(to_string(k)) + " slot");
  }
}

std::string identity_source(Kind kind) {
  switch (kind) {
    case Kind::Init:
      return "x_init = center_x + 0.001 * min(region_w, region_h) * rand_n(0)\n"
             "y_init = center_y + 0.001 * min(region_w, region_h) * rand_n(1)\n";
    case Kind::Precond:
      return "diag_scale = 1\n";
    case Kind::OptPolicy:
      return "step_scale = 1\nnoise_level = 0\nmomentum_scale = 1\n";
  }
  return {};
}

}  // namespace evoplace::dsl
