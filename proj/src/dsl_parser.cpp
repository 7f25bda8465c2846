#include <cctype>
#include <charconv>
#include <cmath>

#include "evoplace/dsl.hpp"
#include "evoplace/error.hpp"

namespace evoplace::dsl {

bool is_binary(Op op) {
  switch (op) {
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Lt: case Op::Le:
    case Op::Gt: case Op::Ge: case Op::Eq: case Op::Ne: case Op::And: case Op::Or:
      return true;
    default:
      return false;
  }
}

namespace {

enum class Tok { Number, Ident, Let, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int col = 1;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char ch = src[i];
    if (ch == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isdigit(static_cast<unsigned char>(ch)) ||
        (ch == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size() || !std::isfinite(t.number))
        throw Error(ErrorCode::ParseError, "bad number '" + t.text + "'", line, col);
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.text = std::string(src.substr(i, j - i));
      t.kind = t.text == "let" ? Tok::Let : Tok::Ident;
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    static constexpr std::string_view kTwo[] = {"==", "!=", "<=", ">=", "&&", "||"};
    bool matched = false;
    for (std::string_view op : kTwo) {
      if (src.substr(i, 2) == op) {
        t.kind = Tok::Punct;
        t.text = std::string(op);
        advance(2);
        matched = true;
        break;
      }
    }
    if (!matched) {
      if (std::string_view("+-*/(),;=<>!").find(ch) == std::string_view::npos)
        throw Error(ErrorCode::ParseError, std::string("unexpected character '") + ch + "'", line, col);
      t.kind = Tok::Punct;
      t.text = std::string(1, ch);
      advance(1);
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    while (peek().kind != Tok::End) {
      if (is_punct(";")) {
        ++pos_;
        continue;
      }
      if (p.stmts.size() >= kMaxStatements)
        throw Error(ErrorCode::BudgetError, "more than " + std::to_string(kMaxStatements) + " statements",
                    peek().line, peek().col);
      p.stmts.push_back(statement());
    }
    return p;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  bool is_punct(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    const std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw Error(ErrorCode::ParseError, what + ", got " + got, t.line, t.col);
  }

  [[noreturn]] void too_deep() const {
    const Token& t = peek();
    throw Error(ErrorCode::BudgetError, "expression nested deeper than " + std::to_string(kMaxDepth), t.line, t.col);
  }

  void expect(std::string_view p) {
    if (!is_punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }

  Stmt statement() {
    Stmt s;
    s.line = peek().line;
    s.col = peek().col;
    if (peek().kind == Tok::Let) {
      s.is_let = true;
      ++pos_;
    }
    if (peek().kind != Tok::Ident) fail("expected an identifier");
    s.name = peek().text;
    ++pos_;
    expect("=");
    s.value = expr(0);
    return s;
  }

  Expr expr(int depth) {
    if (depth > kMaxDepth) too_deep();
    return binary(0, depth);
  }

  // Precedence levels, lowest first.
  static int level_of(const Token& t, Op& op) {
    if (t.kind != Tok::Punct) return -1;
    const std::string& s = t.text;
    if (s == "||") { op = Op::Or; return 0; }
    if (s == "&&") { op = Op::And; return 1; }
    if (s == "==") { op = Op::Eq; return 2; }
    if (s == "!=") { op = Op::Ne; return 2; }
    if (s == "<") { op = Op::Lt; return 2; }
    if (s == "<=") { op = Op::Le; return 2; }
    if (s == ">") { op = Op::Gt; return 2; }
    if (s == ">=") { op = Op::Ge; return 2; }
    if (s == "+") { op = Op::Add; return 3; }
    if (s == "-") { op = Op::Sub; return 3; }
    if (s == "*") { op = Op::Mul; return 4; }
    if (s == "/") { op = Op::Div; return 4; }
    return -1;
  }

  Expr binary(int min_level, int depth) {
    if (min_level > 4) return unary(depth);
    Expr lhs = binary(min_level + 1, depth);
    for (;;) {
      Op op{};
      const int lvl = level_of(peek(), op);
      if (lvl != min_level) return lhs;
      Expr node;
      node.op = op;
      node.line = peek().line;
      node.col = peek().col;
      ++pos_;
      node.args.push_back(std::move(lhs));
      node.args.push_back(binary(min_level + 1, depth + 1));
      lhs = std::move(node);
    }
  }

  Expr unary(int depth) {
    if (depth > kMaxDepth) too_deep();
    if (is_punct("-") || is_punct("!")) {
      Expr node;
      node.line = peek().line;
      node.col = peek().col;
      const bool neg = peek().text == "-";
      ++pos_;
      if (neg && peek().kind == Tok::Number) {
        node.op = Op::Num;
        node.number = -peek().number;
        ++pos_;
        return node;
      }
      node.op = neg ? Op::Neg : Op::Not;
      node.args.push_back(unary(depth + 1));
      return node;
    }
    return primary(depth);
  }

  Expr primary(int depth) {
    const Token& t = peek();
    Expr node;
    node.line = t.line;
    node.col = t.col;
    if (t.kind == Tok::Number) {
      node.op = Op::Num;
      node.number = t.number;
      ++pos_;
      return node;
    }
    if (t.kind == Tok::Ident) {
      node.name = t.text;
      ++pos_;
      if (!is_punct("(")) {
        node.op = Op::Var;
        return node;
      }
      node.op = Op::Call;
      ++pos_;
      if (!is_punct(")")) {
        node.args.push_back(expr(depth + 1));
        while (is_punct(",")) {
          ++pos_;
          node.args.push_back(expr(depth + 1));
        }
      }
      expect(")");
      return node;
    }
    if (is_punct("(")) {
      ++pos_;
      Expr inner = expr(depth + 1);
      expect(")");
      return inner;
    }
    fail("expected an expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Program parse_program(std::string_view source) {
  if (source.size() > kMaxSourceBytes) throw Error(ErrorCode::BudgetError, "source larger than 64 KiB");
  return Parser(lex(source)).program();
}

}  // namespace evoplace::dsl
