#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "evoplace/dsl.hpp"
#include "evoplace/error.hpp"

namespace evoplace::dsl {

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::Init: return "init";
    case Kind::Precond: return "precond";
    case Kind::OptPolicy: return "optpolicy";
  }
  return "?";
}

Kind parse_kind(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "init") return Kind::Init;
  if (t == "precond") return Kind::Precond;
  if (t == "optpolicy" || t == "opt_policy") return Kind::OptPolicy;
  throw Error(ErrorCode::InvalidArgument, "unknown strategy kind '" + std::string(text) + "'");
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "area",   "width",    "height",      "degree",      "pin_count", "sum_net_weight",
      "is_macro", "is_fixed", "fixed_nbr_x", "fixed_nbr_y", "hint_x",    "hint_y"};
  return names;
}

const std::vector<std::string>& scalar_names() {
  static const std::vector<std::string> names = {
      "xmin",       "ymin",        "xmax",      "ymax",        "center_x",    "center_y",
      "region_w",   "region_h",    "span",      "total_area",  "movable_area", "utilization",
      "num_cells",  "num_movable", "num_nets",  "median_area", "num_macros"};
  return names;
}

const std::vector<std::string>& stat_names(Kind kind) {
  static const std::vector<std::string> none;
  static const std::vector<std::string> precond = {"lambda", "wl_grad_norm", "density_grad_norm", "iteration",
                                                   "overflow"};
  static const std::vector<std::string> policy = {"iteration", "max_iters", "overflow", "overflow_delta", "hpwl",
                                                  "wl_trend",  "lambda",    "gamma",    "bb_step"};
  switch (kind) {
    case Kind::Init: return none;
    case Kind::Precond: return precond;
    case Kind::OptPolicy: return policy;
  }
  return none;
}

const std::vector<Symbol>& outputs(Kind kind) {
  static const std::vector<Symbol> init = {{"x_init", Type::Vector}, {"y_init", Type::Vector}};
  static const std::vector<Symbol> precond = {{"diag_scale", Type::Vector}};
  static const std::vector<Symbol> policy = {
      {"step_scale", Type::Scalar}, {"noise_level", Type::Scalar}, {"momentum_scale", Type::Scalar}};
  switch (kind) {
    case Kind::Init: return init;
    case Kind::Precond: return precond;
    case Kind::OptPolicy: return policy;
  }
  return init;
}

const std::vector<BuiltinInfo>& builtins() {
  static const std::vector<BuiltinInfo> table = {
      {"mean", 1, 1},  {"std", 1, 1},   {"sum", 1, 1},  {"min", 1, 2},    {"max", 1, 2},
      {"quantile", 2, 2}, {"clamp", 3, 3}, {"abs", 1, 1}, {"log", 1, 1},  {"exp", 1, 1},
      {"sqrt", 1, 1},  {"sign", 1, 1},  {"pow", 2, 2},  {"rand_n", 1, 1}, {"kmeans1d", 2, 2},
      {"select", 3, 3}};
  return table;
}

int find_builtin(std::string_view name) {
  const auto& t = builtins();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].name == name) return static_cast<int>(i);
  return -1;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const Expr& a : e.args) n += node_count(a);
  return n;
}

int depth(const Expr& e) {
  int d = 0;
  for (const Expr& a : e.args) d = std::max(d, depth(a));
  return d + 1;
}

namespace {

double node_cost(const Expr& e) {
  double c = 1.0;
  if (e.op == Op::Call) {
    if (e.name == "quantile") c = 32.0;
    else if (e.name == "kmeans1d" && e.args.size() == 2 && e.args[1].op == Op::Num)
      c = 32.0 + kKmeansIterations * std::max(1.0, e.args[1].number);
  }
  for (const Expr& a : e.args) c += node_cost(a);
  return c;
}

struct Binding {
  int slot;
  Type type;
};

class Checker {
 public:
  explicit Checker(Kind kind) : kind_(kind) {
    int slot = 0;
    for (const auto& n : feature_names()) env_[n] = {slot++, Type::Vector};
    for (const auto& n : scalar_names()) env_[n] = {slot++, Type::Scalar};
    for (const auto& n : stat_names(kind)) env_[n] = {slot++, Type::Scalar};
    next_slot_ = slot;
  }

  void run(Program& p) {
    std::size_t nodes = 0;
    for (Stmt& s : p.stmts) {
      nodes += node_count(s.value);
      if (nodes > kMaxNodes) throw Error(ErrorCode::BudgetError, "program exceeds the node limit", s.line, s.col);
      if (depth(s.value) > kMaxDepth) throw Error(ErrorCode::BudgetError, "expression too deep", s.line, s.col);
      check(s.value);
      bind(s);
    }
    for (const Symbol& out : outputs(kind_)) {
      if (!assigned_.count(out.name)) throw Error(ErrorCode::MissingOutput, out.name);
    }
    p.slot_count = next_slot_;
    if (static_cost(p) > kMaxCostPerCell)
      throw Error(ErrorCode::BudgetError, "static cost exceeds 1e6 node evaluations per cell");
  }

 private:
  [[noreturn]] static void type_error(const Expr& e, const std::string& why) {
    throw Error(ErrorCode::TypeError, why + " in '" + print_expr(e) + "'", e.line, e.col);
  }

  static bool is_int_literal(const Expr& e, double lo, double hi) {
    return e.op == Op::Num && e.number == std::floor(e.number) && e.number >= lo && e.number <= hi;
  }

  void bind(Stmt& s) {
    const Type t = s.value.type;
    if (s.is_let) {
      if (env_.count(s.name) || find_builtin(s.name) >= 0 || is_output(s.name))
        throw Error(ErrorCode::TypeError, "'" + s.name + "' is already defined", s.line, s.col);
      s.slot = next_slot_++;
      env_[s.name] = {s.slot, t};
      return;
    }
    const Symbol* out = output(s.name);
    if (!out) throw Error(ErrorCode::TypeError, "cannot assign to '" + s.name + "' (use let for locals)", s.line, s.col);
    if (assigned_.count(s.name))
      throw Error(ErrorCode::TypeError, "'" + s.name + "' assigned twice", s.line, s.col);
    if (out->type == Type::Scalar && t == Type::Vector)
      throw Error(ErrorCode::TypeError, "'" + s.name + "' must be a scalar", s.line, s.col);
    s.slot = next_slot_++;
    env_[s.name] = {s.slot, t};
    assigned_.insert({s.name, true});
  }

  bool is_output(const std::string& name) const { return output(name) != nullptr; }

  const Symbol* output(const std::string& name) const {
    for (const Symbol& o : outputs(kind_))
      if (o.name == name) return &o;
    return nullptr;
  }

  void check(Expr& e) {
    for (Expr& a : e.args) check(a);
    auto any_vector = [&] {
      return std::any_of(e.args.begin(), e.args.end(), [](const Expr& a) { return a.type == Type::Vector; });
    };
    switch (e.op) {
      case Op::Num:
        e.type = Type::Scalar;
        return;
      case Op::Var: {
        auto it = env_.find(e.name);
        if (it == env_.end()) {
          if (is_output(e.name)) type_error(e, "'" + e.name + "' read before assignment");
          type_error(e, "unknown identifier '" + e.name + "'");
        }
        e.slot = it->second.slot;
        e.type = it->second.type;
        return;
      }
      case Op::Call: {
        const int b = find_builtin(e.name);
        if (b < 0) type_error(e, "unknown function '" + e.name + "'");
        const BuiltinInfo& info = builtins()[static_cast<std::size_t>(b)];
        const int n = static_cast<int>(e.args.size());
        if (n < info.min_args || n > info.max_args) type_error(e, "wrong number of arguments to " + e.name);
        e.builtin = b;
        const std::string& f = e.name;
        if (f == "mean" || f == "std" || f == "sum") {
          e.type = Type::Scalar;
        } else if ((f == "min" || f == "max") && n == 1) {
          e.type = Type::Scalar;
        } else if (f == "quantile") {
          if (e.args[1].type != Type::Scalar) type_error(e, "quantile level must be a scalar");
          e.type = Type::Scalar;
        } else if (f == "rand_n") {
          if (!is_int_literal(e.args[0], 0, kMaxRandStream)) type_error(e, "rand_n takes an integer literal stream id");
          e.type = Type::Vector;
        } else if (f == "kmeans1d") {
          if (!is_int_literal(e.args[1], 1, kMaxClusters)) type_error(e, "kmeans1d needs an integer literal k in [1, 16]");
          e.type = Type::Vector;
        } else {
          e.type = any_vector() ? Type::Vector : Type::Scalar;
        }
        return;
      }
      default:
        e.type = any_vector() ? Type::Vector : Type::Scalar;
        return;
    }
  }

  Kind kind_;
  std::unordered_map<std::string, Binding> env_;
  std::unordered_map<std::string, bool> assigned_;
  int next_slot_ = 0;
};

}  // namespace

double static_cost(const Program& p) {
  double c = 0.0;
  for (const Stmt& s : p.stmts) c += node_cost(s.value);
  return c;
}

void check_program(Program& p, Kind kind) { Checker(kind).run(p); }

}  // namespace evoplace::dsl
