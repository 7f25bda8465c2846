#include <cmath>
#include <cstdio>
#include <functional>
#include <regex>

#include "evoplace/error.hpp"
#include "evoplace/llm.hpp"
#include "evoplace/rng.hpp"
#include "evoplace/strategy.hpp"

namespace evoplace::llm {

using dsl::Expr;
using dsl::Kind;
using dsl::Op;
using dsl::Type;

namespace {

// Three significant digits keep generated programs readable.
double tidy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return std::strtod(buf, nullptr);
}

std::string num(double v) { return dsl::format_number(tidy(v)); }

std::string pick(Rng& rng, const std::vector<std::string>& options) { return options[rng.below(options.size())]; }

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) s.replace(pos, from.size(), to);
  return s;
}

// ---- random expressions -----------------------------------------------------

Expr leaf_num(double v) {
  Expr e;
  e.op = Op::Num;
  e.number = tidy(v);
  return e;
}

Expr leaf_var(const std::string& name) {
  Expr e;
  e.op = Op::Var;
  e.name = name;
  return e;
}

Expr node(Op op, std::vector<Expr> args) {
  Expr e;
  e.op = op;
  e.args = std::move(args);
  return e;
}

Expr call(const std::string& f, std::vector<Expr> args) {
  Expr e = node(Op::Call, std::move(args));
  e.name = f;
  return e;
}

const std::vector<std::string>& per_cell_features() {
  static const std::vector<std::string> f = {"area",       "width",       "height",  "degree", "pin_count",
                                             "sum_net_weight", "is_macro", "fixed_nbr_x", "fixed_nbr_y",
                                             "hint_x",     "hint_y"};
  return f;
}

double random_constant(Rng& rng) {
  switch (rng.below(4)) {
    case 0: return rng.uniform(0.0, 1.0);
    case 1: return rng.uniform(0.5, 2.0);
    case 2: return static_cast<double>(1 + rng.below(4));
    default: return rng.uniform(0.001, 0.1);
  }
}

/// Random expression of at most `depth` levels. Vector-valued subtrees only
/// when `vector_ok`; every function is applied inside its domain.
Expr random_expr(Rng& rng, int depth, bool vector_ok, Kind kind) {
  const auto& stats = dsl::stat_names(kind);
  if (depth <= 1 || rng.uniform() < 0.3) {
    const double r = rng.uniform();
    if (vector_ok && r < 0.5) return leaf_var(pick(rng, per_cell_features()));
    if (r < 0.7 && !stats.empty()) return leaf_var(pick(rng, stats));
    if (r < 0.85) return leaf_var(pick(rng, dsl::scalar_names()));
    return leaf_num(random_constant(rng));
  }
  const int d = depth - 1;
  switch (rng.below(vector_ok ? 8 : 7)) {
    case 0: return node(Op::Add, {random_expr(rng, d, vector_ok, kind), random_expr(rng, d, vector_ok, kind)});
    case 1: return node(Op::Sub, {random_expr(rng, d, vector_ok, kind), random_expr(rng, d, vector_ok, kind)});
    case 2: return node(Op::Mul, {leaf_num(random_constant(rng)), random_expr(rng, d, vector_ok, kind)});
    case 3: {
      // x / (c + |y|)
      Expr den = node(Op::Add, {leaf_num(0.5 + random_constant(rng)),
                                call("abs", {random_expr(rng, d - 1, vector_ok, kind)})});
      return node(Op::Div, {random_expr(rng, d, vector_ok, kind), std::move(den)});
    }
    case 4: {
      Expr inner = call("abs", {random_expr(rng, d - 1, vector_ok, kind)});
      if (rng.below(2) == 0) return call("sqrt", {std::move(inner)});
      return call("log", {node(Op::Add, {leaf_num(1.0), std::move(inner)})});
    }
    case 5: {
      // Reductions turn any per-cell feature into a scalar.
      const std::vector<std::string> red = {"mean", "max", "min", "std"};
      return call(pick(rng, red), {random_expr(rng, d, true, kind)});
    }
    case 6: {
      const Op cmp = rng.below(2) ? Op::Gt : Op::Lt;
      Expr cond = node(cmp, {random_expr(rng, d - 1, vector_ok, kind), random_expr(rng, d - 1, vector_ok, kind)});
      return call("select", {std::move(cond), random_expr(rng, d, vector_ok, kind), random_expr(rng, d, vector_ok, kind)});
    }
    default: return call("clamp", {random_expr(rng, d, true, kind), leaf_num(0.0), leaf_num(1.0 + random_constant(rng))});
  }
}

// ---- templates ------------------------------------------------------------------

// "@" is the axis letter, "%" the axis rand stream, "!" the other axis stream.
std::string init_axis_template(Rng& rng, int choice) {
  const std::string c1 = num(rng.uniform(0.0005, 0.02));
  const std::string t = num(rng.uniform(0.2, 0.95));
  switch (choice) {
    case 0: return "@_init = center_@ + " + c1 + " * min(region_w, region_h) * rand_n(%)\n";
    case 1: return "@_init = fixed_nbr_@ + " + num(rng.uniform(0.05, 1.5)) + " * sqrt(area) * rand_n(%)\n";
    case 2: return "@_init = " + t + " * fixed_nbr_@ + (1 - " + t + ") * center_@ + " + c1 + " * span * rand_n(%)\n";
    case 3: return "@_init = hint_@ + " + c1 + " * span * rand_n(%)\n";
    case 4: {
      const std::string k = std::to_string(2 + rng.below(4));
      return "let g_@ = kmeans1d(fixed_nbr_@, " + k + ")\n@_init = center_@ + " + num(rng.uniform(0.05, 0.3)) +
             " * region_w * (g_@ - mean(g_@)) / " + k + " + " + c1 + " * span * rand_n(%)\n";
    }
    case 5: {
      const std::string w = num(rng.uniform(0.5, 4.0));
      return "let pull_@ = sum_net_weight / (sum_net_weight + " + w + ")\n@_init = pull_@ * fixed_nbr_@ + (1 - pull_@) * center_@ + " +
             c1 + " * span * rand_n(%)\n";
    }
    case 6:
      return "@_init = select(is_macro > 0, center_@, fixed_nbr_@) + " + num(rng.uniform(0.05, 1.0)) +
             " * sqrt(area) * rand_n(%)\n";
    default: return {};
  }
}

std::string generate_init(Rng& rng) {
  const int choice = static_cast<int>(rng.below(8));
  std::string out;
  if (choice == 7) {
    // free-form: anchor plus a random offset field
    Expr dx = random_expr(rng, 3, true, Kind::Init);
    Expr dy = random_expr(rng, 3, true, Kind::Init);
    const std::string s = num(rng.uniform(0.001, 0.02));
    const std::string anchor = pick(rng, {"center", "fixed_nbr", "hint"});
    out += "let off_x = " + dsl::print_expr(dx) + "\n";
    out += "x_init = " + anchor + "_x + " + s + " * span * (rand_n(0) + clamp(off_x - mean(off_x), -1, 1))\n";
    out += "let off_y = " + dsl::print_expr(dy) + "\n";
    out += "y_init = " + anchor + "_y + " + s + " * span * (rand_n(1) + clamp(off_y - mean(off_y), -1, 1))\n";
    return out;
  }
  const std::string axis = init_axis_template(rng, choice);
  out += replace_all(replace_all(axis, "@", "x"), "%", "0");
  out += replace_all(replace_all(axis, "@", "y"), "%", "1");
  return out;
}

std::string generate_precond(Rng& rng) {
  const std::string lo = num(rng.uniform(0.2, 0.8));
  const std::string hi = num(rng.uniform(1.5, 5.0));
  switch (rng.below(7)) {
    case 0: return "diag_scale = 1 + " + num(rng.uniform(0.1, 3.0)) + " * is_macro\n";
    case 1: return "diag_scale = clamp(pow(degree / mean(degree), " + num(rng.uniform(0.2, 1.0)) + "), " + lo + ", " + hi + ")\n";
    case 2: return "diag_scale = clamp(sum_net_weight / mean(sum_net_weight), " + lo + ", " + hi + ")\n";
    case 3:
      return "diag_scale = select(overflow > " + num(rng.uniform(0.2, 0.8)) + ", " + num(rng.uniform(0.5, 2.0)) + ", " +
             num(rng.uniform(0.5, 2.0)) + ")\n";
    case 4: return "diag_scale = 1 + " + num(rng.uniform(0.05, 1.0)) + " * log(1 + area / median_area)\n";
    case 5:
      return "let r = density_grad_norm / (wl_grad_norm + 1e-9)\ndiag_scale = clamp(1 + " + num(rng.uniform(0.05, 0.5)) +
             " * r * area / mean(area), " + lo + ", " + hi + ")\n";
    default: {
      Expr e = random_expr(rng, 4, true, Kind::Precond);
      return "diag_scale = clamp(1 + " + num(rng.uniform(0.05, 0.5)) + " * (" + dsl::print_expr(e) + "), " + lo + ", " + hi + ")\n";
    }
  }
}

std::string generate_policy(Rng& rng) {
  std::string out;
  switch (rng.below(5)) {
    case 0: out += "step_scale = " + num(rng.uniform(0.6, 1.6)) + "\n"; break;
    case 1:
      out += "step_scale = select(overflow > " + num(rng.uniform(0.2, 0.7)) + ", " + num(rng.uniform(0.8, 2.0)) + ", " +
             num(rng.uniform(0.5, 1.2)) + ")\n";
      break;
    case 2: out += "step_scale = clamp(" + num(rng.uniform(0.5, 1.0)) + " + " + num(rng.uniform(0.1, 1.0)) + " * overflow, 0.5, 2)\n"; break;
    case 3: out += "step_scale = clamp(1 - " + num(rng.uniform(1.0, 10.0)) + " * wl_trend, 0.5, 1.5)\n"; break;
    default: {
      Expr e = random_expr(rng, 3, false, Kind::OptPolicy);
      out += "step_scale = clamp(1 + 0.1 * (" + dsl::print_expr(e) + "), 0.5, 2)\n";
    }
  }
  switch (rng.below(4)) {
    case 0: out += "noise_level = 0\n"; break;
    case 1:
      out += "noise_level = select(abs(overflow_delta) < " + num(rng.uniform(0.0005, 0.005)) + ", " +
             num(rng.uniform(0.001, 0.01)) + " * span, 0)\n";
      break;
    case 2: out += "noise_level = " + num(rng.uniform(0.0002, 0.003)) + " * span * overflow\n"; break;
    default: out += "noise_level = select(iteration < " + std::to_string(20 + rng.below(100)) + ", 0, " + num(rng.uniform(0.0001, 0.002)) + " * span)\n";
  }
  switch (rng.below(3)) {
    case 0: out += "momentum_scale = 1\n"; break;
    case 1: out += "momentum_scale = " + num(rng.uniform(0.7, 1.2)) + "\n"; break;
    default:
      out += "momentum_scale = select(iteration < " + std::to_string(10 + rng.below(90)) + ", " + num(rng.uniform(0.3, 1.0)) + ", 1)\n";
  }
  return out;
}

bool checks(const std::string& src, Kind kind) {
  try {
    dsl::parse_strategy(src, kind);
    return true;
  } catch (const Error&) {
    return false;
  }
}

// ---- mutation -------------------------------------------------------------------

using Path = std::vector<std::size_t>;

struct Site {
  std::size_t stmt;
  Path path;
};

Expr& at(dsl::Program& p, const Site& s) {
  Expr* e = &p.stmts[s.stmt].value;
  for (std::size_t i : s.path) e = &e->args[i];
  return *e;
}

// literal arguments that the checker requires to stay integral
bool frozen_literal(const Expr& parent, std::size_t child) {
  if (parent.op != Op::Call) return false;
  return (parent.name == "rand_n" && child == 0) || (parent.name == "kmeans1d" && child == 1);
}

void collect(const Expr& e, std::size_t stmt, Path& path, std::vector<Site>& out,
             const std::function<bool(const Expr&)>& want) {
  if (want(e)) out.push_back({stmt, path});
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (frozen_literal(e, i)) continue;
    path.push_back(i);
    collect(e.args[i], stmt, path, out, want);
    path.pop_back();
  }
}

std::vector<Site> sites(const dsl::Program& p, const std::function<bool(const Expr&)>& want) {
  std::vector<Site> out;
  for (std::size_t s = 0; s < p.stmts.size(); ++s) {
    Path path;
    collect(p.stmts[s].value, s, path, out, want);
  }
  return out;
}

bool in_list(const std::string& name, const std::vector<std::string>& list) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

std::vector<std::string> builtin_alternatives(const Expr& e) {
  const std::size_t n = e.args.size();
  const std::vector<std::vector<std::string>> unary = {{"abs", "sign"}, {"log", "sqrt"}, {"mean", "min", "max", "std"}};
  if (n == 2 && (e.name == "min" || e.name == "max")) return {e.name == "min" ? "max" : "min"};
  if (n == 1)
    for (const auto& g : unary)
      if (in_list(e.name, g)) {
        std::vector<std::string> out;
        for (const auto& f : g)
          if (f != e.name) out.push_back(f);
        return out;
      }
  return {};
}

std::vector<Op> op_alternatives(Op op) {
  switch (op) {
    case Op::Add: return {Op::Sub};
    case Op::Sub: return {Op::Add};
    case Op::Mul: return {Op::Div};
    case Op::Div: return {Op::Mul};
    case Op::Lt: return {Op::Gt, Op::Le};
    case Op::Gt: return {Op::Lt, Op::Ge};
    case Op::Le: return {Op::Ge, Op::Lt};
    case Op::Ge: return {Op::Le, Op::Gt};
    default: return {};
  }
}

std::vector<std::string> swap_options(const std::string& name, Kind kind) {
  auto others = [&](const std::vector<std::string>& pool) {
    std::vector<std::string> out;
    for (const auto& n : pool)
      if (n != name) out.push_back(n);
    return out;
  };
  if (in_list(name, per_cell_features())) return others(per_cell_features());
  if (in_list(name, dsl::scalar_names())) return others(dsl::scalar_names());
  if (in_list(name, dsl::stat_names(kind))) return others(dsl::stat_names(kind));
  return {};
}

bool try_mutation(dsl::Program& p, MutationOp op, Rng& rng, Kind kind) {
  switch (op) {
    case MutationOp::ConstantPerturbation: {
      auto s = sites(p, [](const Expr& e) { return e.op == Op::Num; });
      if (s.empty()) return false;
      Expr& e = at(p, s[rng.below(s.size())]);
      const double v = e.number;
      e.number = v == 0.0 ? tidy(0.1 * rng.normal()) : tidy(v * std::exp(0.4 * rng.normal()));
      return e.number != v;
    }
    case MutationOp::BuiltinSubstitution: {
      auto s = sites(p, [](const Expr& e) {
        return (e.op == Op::Call && !builtin_alternatives(e).empty()) || !op_alternatives(e.op).empty();
      });
      if (s.empty()) return false;
      Expr& e = at(p, s[rng.below(s.size())]);
      if (e.op == Op::Call) {
        e.name = pick(rng, builtin_alternatives(e));
      } else {
        const auto alt = op_alternatives(e.op);
        e.op = alt[rng.below(alt.size())];
      }
      return true;
    }
    case MutationOp::SubtreeRegeneration: {
      auto s = sites(p, [](const Expr&) { return true; });
      if (s.empty()) return false;
      Expr& e = at(p, s[rng.below(s.size())]);
      e = random_expr(rng, 3, e.type == Type::Vector, kind);
      return true;
    }
    case MutationOp::FeatureSwap: {
      auto s = sites(p, [kind](const Expr& e) { return e.op == Op::Var && !swap_options(e.name, kind).empty(); });
      if (s.empty()) return false;
      Expr& e = at(p, s[rng.below(s.size())]);
      e.name = pick(rng, swap_options(e.name, kind));
      return true;
    }
  }
  return false;
}

// ---- chat stand-in ------------------------------------------------------------

struct Marker {
  std::string step;
  Kind kind = Kind::Init;
  std::string outcome;
  bool found = false;
};

Marker read_marker(const std::string& text) {
  static const std::regex re(R"(<!-- evoplace-step: ([a-z0-9]+); kind: ([a-z]+)(?:; outcome: ([A-Za-z]+))? -->)");
  Marker m;
  std::smatch match;
  if (std::regex_search(text, match, re)) {
    m.step = match[1];
    m.kind = dsl::parse_kind(match[2].str());
    m.outcome = match[3];
    m.found = true;
  }
  return m;
}

// Body of the fenced block whose info string is "dsl <tag>".
std::string tagged_block(const std::string& text, const std::string& tag) {
  const std::string open = "```dsl " + tag + "\n";
  const auto start = text.rfind(open);
  if (start == std::string::npos) return {};
  const auto body = start + open.size();
  const auto end = text.find("```", body);
  if (end == std::string::npos) return {};
  return text.substr(body, end - body);
}

std::string fenced(const std::string& src) { return "```\n" + src + (src.empty() || src.back() == '\n' ? "" : "\n") + "```\n"; }

std::string mutate_or_generate(std::uint64_t seed, const std::string& src, Kind kind) {
  try {
    return mock_mutate(seed, src, kind);
  } catch (const Error&) {
    return mock_generate(seed, kind);
  }
}

const std::vector<std::string>& observations() {
  static const std::vector<std::string> o = {
      "cells that share nets with fixed pads tend to end far from the center",
      "the center start ignores where the fixed terminals sit",
      "macros dominate the density gradient early on",
      "high-degree cells move slowly once density pressure builds",
      "overflow plateaus before the stop threshold on clustered netlists",
      "the step size overshoots while the density weight is still small",
      "clusters of strongly connected cells could be placed as groups",
      "net weights are uneven, so uniform preconditioning misjudges curvature"};
  return o;
}

}  // namespace

std::string mock_generate(std::uint64_t seed, Kind kind) {
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(derive_seed(seed, {fnv1a("mock-generate"), static_cast<std::uint64_t>(kind), attempt}));
    std::string src;
    switch (kind) {
      case Kind::Init: src = generate_init(rng); break;
      case Kind::Precond: src = generate_precond(rng); break;
      case Kind::OptPolicy: src = generate_policy(rng); break;
    }
    if (checks(src, kind)) return dsl::print_program(dsl::parse_program(src));
  }
  return dsl::identity_source(kind);
}

std::string mock_mutate(std::uint64_t seed, std::string_view source, Kind kind, MutationOp* applied) {
  const dsl::StrategyProgram parent = dsl::parse_strategy(source, kind);
  const std::string parent_text = dsl::print_program(parent.ast);
  for (std::uint64_t attempt = 0; attempt < 256; ++attempt) {
    Rng rng(derive_seed(seed, {fnv1a("mock-mutate"), attempt}));
    const int first = static_cast<int>(rng.below(4));
    for (int k = 0; k < 4; ++k) {
      const auto op = static_cast<MutationOp>((first + k) % 4);
      dsl::Program child = parent.ast;
      if (!try_mutation(child, op, rng, kind)) continue;
      std::string text;
      try {
        text = dsl::print_program(child);
      } catch (const Error&) {
        break;
      }
      if (text == parent_text || !checks(text, kind)) break;
      if (applied) *applied = op;
      return text;
    }
  }
  // Unreachable for any program with a literal; keep a valid answer anyway.
  dsl::Program child = parent.ast;
  Expr& v = child.stmts.back().value;
  v = node(Op::Mul, {v, leaf_num(1.01)});
  if (applied) *applied = MutationOp::SubtreeRegeneration;
  return dsl::print_program(child);
}

std::string mock_reply(std::uint64_t seed, const std::vector<Message>& messages, double unfenced_rate) {
  std::string prompt;
  for (const Message& m : messages) prompt += m.content + "\n";
  const Marker marker = read_marker(prompt);
  Rng rng(derive_seed(seed, {fnv1a("mock-reply")}));
  const Kind kind = marker.kind;
  const bool code_step = marker.step == "final" || marker.step == "e1" || marker.step == "e2";
  if (code_step && rng.uniform() < unfenced_rate)
    return "The strategy should lean on the fixed-terminal neighborhood and keep early steps conservative.\n";

  const std::string& obs = observations()[rng.below(observations().size())];
  const std::string& obs2 = observations()[rng.below(observations().size())];
  const std::string feature = per_cell_features()[rng.below(per_cell_features().size())];

  if (!marker.found || marker.step == "analysis")
    return "Analysis: the current " + std::string(dsl::to_string(kind)) + " strategy leaves room for improvement; " + obs +
           ". The feature `" + feature + "` looks informative.\n";
  if (marker.step == "idea")
    return "Idea: exploit `" + feature + "` so that " + obs2 + " is handled explicitly, while keeping the rest of the " +
           "pipeline unchanged.\n";
  if (marker.step == "reference")
    return "Reference implementation:\n" + fenced(mock_generate(rng.next_u64(), kind));
  if (marker.step == "final") {
    const std::string ref = tagged_block(prompt, "reference");
    if (!ref.empty() && checks(ref, kind) && rng.uniform() < 0.5) return fenced(mutate_or_generate(rng.next_u64(), ref, kind));
    return fenced(mock_generate(rng.next_u64(), kind));
  }
  if (marker.step == "e1") {
    const std::string parent = tagged_block(prompt, "parent");
    return "Evolved version:\n" + fenced(mutate_or_generate(rng.next_u64(), parent, kind));
  }
  if (marker.step == "reflect") {
    if (marker.outcome == "ExecFailure")
      return "Reflection: the child failed to run; the edit likely pushed an expression out of its domain. Revert toward the parent.\n";
    if (marker.outcome == "Improved")
      return "Reflection: the change helped; " + obs + ". Push further in the same direction.\n";
    return "Reflection: the change hurt wirelength; " + obs + ". Try a different edit of the parent.\n";
  }
  if (marker.step == "e2") {
    const std::string base = tagged_block(prompt, marker.outcome == "Improved" ? "child" : "parent");
    return "Refined version:\n" + fenced(mutate_or_generate(rng.next_u64(), base, kind));
  }
  return "Noted.\n";
}

std::string step_marker(std::string_view step, Kind kind, std::string_view outcome) {
  std::string m = "<!-- evoplace-step: " + std::string(step) + "; kind: " + std::string(dsl::to_string(kind));
  if (!outcome.empty()) m += "; outcome: " + std::string(outcome);
  return m + " -->";
}

}  // namespace evoplace::llm
