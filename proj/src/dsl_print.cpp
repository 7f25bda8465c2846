#include <charconv>
#include <cmath>

#include "evoplace/dsl.hpp"
#include "evoplace/error.hpp"

namespace evoplace::dsl {

std::string format_number(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "cannot print a non-finite literal");
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s == "-0") s = "0";
  return v < 0 ? "(" + s + ")" : s;
}

namespace {

int precedence(Op op) {
  switch (op) {
    case Op::Or: return 0;
    case Op::And: return 1;
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: case Op::Eq: case Op::Ne: return 2;
    case Op::Add: case Op::Sub: return 3;
    case Op::Mul: case Op::Div: return 4;
    case Op::Neg: case Op::Not: return 5;
    default: return 6;
  }
}

const char* symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::And: return "&&";
    case Op::Or: return "||";
    case Op::Neg: return "-";
    case Op::Not: return "!";
    default: return "?";
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.op) {
    case Op::Num:
      out += format_number(e.number);
      return;
    case Op::Var:
      out += e.name;
      return;
    case Op::Call:
      out += e.name;
      out += '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        print(e.args[i], out);
      }
      out += ')';
      return;
    case Op::Neg:
    case Op::Not: {
      out += symbol(e.op);
      const Expr& a = e.args[0];
      // "-2" would re-parse as a literal, so a negated literal keeps parens.
      const bool wrap = is_binary(a.op) || (e.op == Op::Neg && a.op == Op::Num && a.number >= 0);
      if (wrap) out += '(';
      print(a, out);
      if (wrap) out += ')';
      return;
    }
    default: {
      const int p = precedence(e.op);
      const bool wrap_l = precedence(e.args[0].op) < p;
      const bool wrap_r = precedence(e.args[1].op) <= p;
      if (wrap_l) out += '(';
      print(e.args[0], out);
      if (wrap_l) out += ')';
      out += ' ';
      out += symbol(e.op);
      out += ' ';
      if (wrap_r) out += '(';
      print(e.args[1], out);
      if (wrap_r) out += ')';
      return;
    }
  }
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

std::string print_program(const Program& p) {
  std::string out;
  for (const Stmt& s : p.stmts) {
    if (s.is_let) out += "let ";
    out += s.name;
    out += " = ";
    print(s.value, out);
    out += '\n';
  }
  return out;
}

}  // namespace evoplace::dsl
