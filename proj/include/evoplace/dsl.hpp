#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace evoplace::dsl {

enum class Kind { Init, Precond, OptPolicy };

std::string_view to_string(Kind kind);
/// Accepts "init", "precond", "optpolicy" (case-insensitive); throws InvalidArgument.
Kind parse_kind(std::string_view text);

enum class Type { Scalar, Vector };

enum class Op { Num, Var, Neg, Not, Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or, Call };

bool is_binary(Op op);

/// Value-semantic expression tree. `type`, `slot` and `builtin` are filled in
/// by check_program.
struct Expr {
  Op op = Op::Num;
  double number = 0.0;
  std::string name;  // Var and Call
  std::vector<Expr> args;
  int line = 0;
  int col = 0;
  Type type = Type::Scalar;
  int slot = -1;
  int builtin = -1;

  bool operator==(const Expr& o) const {
    return op == o.op && name == o.name && args == o.args && (op != Op::Num || number == o.number);
  }
};

struct Stmt {
  bool is_let = false;
  std::string name;
  Expr value;
  int line = 0;
  int col = 0;
  int slot = -1;

  bool operator==(const Stmt& o) const { return is_let == o.is_let && name == o.name && value == o.value; }
};

struct Program {
  std::vector<Stmt> stmts;
  int slot_count = 0;

  bool operator==(const Program& o) const { return stmts == o.stmts; }
};

// Static limits; exceeding any of them is a BudgetError.
constexpr std::size_t kMaxSourceBytes = 64 * 1024;
constexpr std::size_t kMaxStatements = 256;
constexpr std::size_t kMaxNodes = 8192;
constexpr int kMaxDepth = 64;
constexpr double kMaxCostPerCell = 1e6;
constexpr int kMaxClusters = 16;
constexpr int kKmeansIterations = 50;
constexpr int kMaxRandStream = 1 << 20;

/// Throws ParseError(line, col).
Program parse_program(std::string_view source);

/// Canonical text: one statement per line, minimal parentheses, numbers in
/// shortest round-trip form. parse_program(print_program(p)) == p.
std::string print_program(const Program& p);
std::string print_expr(const Expr& e);
std::string format_number(double v);

/// Resolves names, types and slots for `kind`. Throws TypeError,
/// MissingOutput or BudgetError.
void check_program(Program& p, Kind kind);

/// Static per-cell evaluation cost (node evaluations).
double static_cost(const Program& p);
std::size_t node_count(const Expr& e);
int depth(const Expr& e);

// ---- environment schema ---------------------------------------------------

struct Symbol {
  std::string name;
  Type type;
};

/// Per-cell feature vectors, in slot order.
const std::vector<std::string>& feature_names();
/// Case-level scalars, in slot order after the features.
const std::vector<std::string>& scalar_names();
/// Run statistics visible to a kind, in slot order after the scalars.
const std::vector<std::string>& stat_names(Kind kind);
/// Required outputs with their declared types.
const std::vector<Symbol>& outputs(Kind kind);

struct BuiltinInfo {
  std::string name;
  int min_args;
  int max_args;
};
const std::vector<BuiltinInfo>& builtins();
int find_builtin(std::string_view name);

}  // namespace evoplace::dsl
