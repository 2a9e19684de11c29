#pragma once

// Expression language shared by model labels, declarations and queries.
//
// Grammar (lowest precedence first):
//   imply  (right assoc)
//   || or
//   && and
//   == !=
//   < <= > >=
//   + -
//   * / %
//   ! not -   (unary)
//   literal | true | false | ident | ident.ident | ( expr )

#include <cctype>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pspta/errors.hpp"

namespace pspta::ta {

enum class Op {
  Not, Neg,
  Imply, Or, And,
  Eq, Ne, Lt, Le, Gt, Ge,
  Add, Sub, Mul, Div, Mod,
};

struct Expr {
  enum class Kind { Int, Bool, Ident, Member, Unary, Binary };

  Kind kind = Kind::Int;
  Op op = Op::Not;
  long long value = 0;
  std::string name;    // Ident, or the owner part of Member
  std::string member;  // Member only
  std::vector<Expr> args;

  bool operator==(const Expr&) const = default;

  static Expr integer(long long v) {
    Expr e;
    e.kind = Kind::Int;
    e.value = v;
    return e;
  }
  static Expr boolean(bool b) {
    Expr e;
    e.kind = Kind::Bool;
    e.value = b ? 1 : 0;
    return e;
  }
  static Expr ident(std::string n) {
    Expr e;
    e.kind = Kind::Ident;
    e.name = std::move(n);
    return e;
  }
  static Expr dotted(std::string owner, std::string m) {
    Expr e;
    e.kind = Kind::Member;
    e.name = std::move(owner);
    e.member = std::move(m);
    return e;
  }
  static Expr unary(Op o, Expr a) {
    Expr e;
    e.kind = Kind::Unary;
    e.op = o;
    e.args.push_back(std::move(a));
    return e;
  }
  static Expr binary(Op o, Expr a, Expr b) {
    Expr e;
    e.kind = Kind::Binary;
    e.op = o;
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
  }
};

/// `a && b`, collapsing a missing side.
inline Expr conjoin(std::optional<Expr> a, Expr b) {
  if (!a) return b;
  return Expr::binary(Op::And, std::move(*a), std::move(b));
}

/// Flattens a conjunction tree into its conjuncts (left to right).
inline void conjuncts(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == Expr::Kind::Binary && e.op == Op::And) {
    conjuncts(e.args[0], out);
    conjuncts(e.args[1], out);
  } else {
    out.push_back(&e);
  }
}

/// Visits every identifier-like leaf (Ident and Member).
inline void for_each_leaf(const Expr& e, const std::function<void(const Expr&)>& fn) {
  if (e.kind == Expr::Kind::Ident || e.kind == Expr::Kind::Member) fn(e);
  for (const auto& a : e.args) for_each_leaf(a, fn);
}

/// Rewrites identifiers in place.
inline void rename_idents(Expr& e, const std::function<std::optional<Expr>(const std::string&)>& fn) {
  if (e.kind == Expr::Kind::Ident) {
    if (auto r = fn(e.name)) e = std::move(*r);
    return;
  }
  for (auto& a : e.args) rename_idents(a, fn);
}

inline bool mentions(const Expr& e, const std::string& ident) {
  bool found = false;
  for_each_leaf(e, [&](const Expr& leaf) {
    if (leaf.kind == Expr::Kind::Ident && leaf.name == ident) found = true;
  });
  return found;
}

struct Assignment {
  std::string target;
  Expr value;
  bool operator==(const Assignment&) const = default;
};

struct SyncLabel {
  std::string channel;
  bool send = true;  // `!` when true, `?` otherwise
  bool operator==(const SyncLabel&) const = default;
};

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

struct Token {
  enum class Kind { End, Ident, Int, Punct };
  Kind kind = Kind::End;
  std::string text;
  long long value = 0;
  std::size_t pos = 0;
};

inline std::vector<Token> lex(std::string_view src) {
  static constexpr std::string_view two[] = {"&&", "||", "==", "!=", "<=", ">=", ":=", "[]", "<>"};
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    char ch = src[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    if (ch == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (ch == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos) throw ExprError("unterminated comment");
      i = end + 2;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Token::Kind::Ident;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Token::Kind::Int;
      t.text = std::string(src.substr(i, j - i));
      try {
        t.value = std::stoll(t.text);
      } catch (const std::exception&) {
        throw ExprError("integer literal out of range: " + t.text);
      }
      i = j;
    } else {
      t.kind = Token::Kind::Punct;
      bool matched = false;
      if (src.substr(i, 3) == "-->") {
        t.text = "-->";
        i += 3;
        matched = true;
      }
      for (auto op : two) {
        if (!matched && src.substr(i, 2) == op) {
          t.text = std::string(op);
          i += 2;
          matched = true;
        }
      }
      if (!matched) {
        if (std::string_view("()[],;.!?<>=+-*/%{}").find(ch) == std::string_view::npos)
          throw ExprError(std::string("unexpected character '") + ch + "' at offset " + std::to_string(i));
        t.text = std::string(1, ch);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = src.size();
  out.push_back(end);
  return out;
}

class Parser {
public:
  explicit Parser(std::string_view src) : src_(src), toks_(lex(src)) {}

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(idx_ + k, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is(std::string_view punct) const {
    return peek().kind == Token::Kind::Punct && peek().text == punct;
  }
  bool is_word(std::string_view w) const {
    return peek().kind == Token::Kind::Ident && peek().text == w;
  }
  Token take() { return toks_[idx_ < toks_.size() - 1 ? idx_++ : idx_]; }
  void expect(std::string_view punct) {
    if (!is(punct)) fail("expected '" + std::string(punct) + "'");
    take();
  }
  std::string ident() {
    if (peek().kind != Token::Kind::Ident) fail("expected identifier");
    return take().text;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    std::string near = at_end() ? "end of input" : "'" + peek().text + "'";
    throw ExprError(msg + " near " + near + " at offset " + std::to_string(peek().pos) + " in \"" +
                    std::string(src_) + "\"");
  }

  Expr expr() { return imply(); }

  std::size_t index() const { return idx_; }
  void rewind(std::size_t i) { idx_ = i; }

private:
  // Keyword forms bind looser than their symbolic forms: imply < or < and < not < || < &&.
  Expr imply() {
    Expr lhs = kw_or();
    if (is_word("imply")) {
      take();
      Expr rhs = imply();
      return Expr::binary(Op::Imply, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }
  Expr kw_or() {
    Expr lhs = kw_and();
    while (is_word("or")) {
      take();
      lhs = Expr::binary(Op::Or, std::move(lhs), kw_and());
    }
    return lhs;
  }
  Expr kw_and() {
    Expr lhs = kw_not();
    while (is_word("and")) {
      take();
      lhs = Expr::binary(Op::And, std::move(lhs), kw_not());
    }
    return lhs;
  }
  Expr kw_not() {
    if (is_word("not")) {
      take();
      return Expr::unary(Op::Not, kw_not());
    }
    return disj();
  }
  Expr disj() {
    Expr lhs = conj();
    while (is("||")) {
      take();
      lhs = Expr::binary(Op::Or, std::move(lhs), conj());
    }
    return lhs;
  }
  Expr conj() {
    Expr lhs = equality();
    while (is("&&")) {
      take();
      lhs = Expr::binary(Op::And, std::move(lhs), equality());
    }
    return lhs;
  }
  Expr equality() {
    Expr lhs = relational();
    while (is("==") || is("!=")) {
      Op o = take().text == "==" ? Op::Eq : Op::Ne;
      lhs = Expr::binary(o, std::move(lhs), relational());
    }
    return lhs;
  }
  Expr relational() {
    Expr lhs = additive();
    while (is("<") || is("<=") || is(">") || is(">=")) {
      auto t = take().text;
      Op o = t == "<" ? Op::Lt : t == "<=" ? Op::Le : t == ">" ? Op::Gt : Op::Ge;
      lhs = Expr::binary(o, std::move(lhs), additive());
    }
    return lhs;
  }
  Expr additive() {
    Expr lhs = multiplicative();
    while (is("+") || is("-")) {
      Op o = take().text == "+" ? Op::Add : Op::Sub;
      lhs = Expr::binary(o, std::move(lhs), multiplicative());
    }
    return lhs;
  }
  Expr multiplicative() {
    Expr lhs = unary();
    while (is("*") || is("/") || is("%")) {
      auto t = take().text;
      Op o = t == "*" ? Op::Mul : t == "/" ? Op::Div : Op::Mod;
      lhs = Expr::binary(o, std::move(lhs), unary());
    }
    return lhs;
  }
  Expr unary() {
    if (is("!")) {
      take();
      return Expr::unary(Op::Not, unary());
    }
    if (is("-")) {
      take();
      Expr inner = unary();
      if (inner.kind == Expr::Kind::Int) {
        inner.value = -inner.value;
        return inner;
      }
      return Expr::unary(Op::Neg, std::move(inner));
    }
    return primary();
  }
  Expr primary() {
    if (is("(")) {
      take();
      Expr e = expr();
      expect(")");
      return e;
    }
    if (peek().kind == Token::Kind::Int) return Expr::integer(take().value);
    if (peek().kind == Token::Kind::Ident) {
      const auto& w = peek().text;
      if (w == "true" || w == "false") return Expr::boolean(take().text == "true");
      if (w == "imply" || w == "and" || w == "or" || w == "not") fail("unexpected keyword");
      std::string name = take().text;
      if (is(".")) {
        take();
        return Expr::dotted(std::move(name), ident());
      }
      if (is("(")) fail("function calls are not supported");
      if (is("[")) fail("arrays are not supported");
      return Expr::ident(std::move(name));
    }
    fail("expected expression");
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t idx_ = 0;
};

inline int precedence(Op o) {
  switch (o) {
    case Op::Imply: return 1;
    case Op::Or: return 2;
    case Op::And: return 3;
    case Op::Eq: case Op::Ne: return 4;
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: return 5;
    case Op::Add: case Op::Sub: return 6;
    case Op::Mul: case Op::Div: case Op::Mod: return 7;
    case Op::Not: case Op::Neg: return 8;
  }
  return 9;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Parsing entry points

inline Expr parse_expr(std::string_view text) {
  detail::Parser p(text);
  Expr e = p.expr();
  if (!p.at_end()) p.fail("trailing input");
  return e;
}

inline std::vector<Assignment> parse_assignments(std::string_view text) {
  detail::Parser p(text);
  std::vector<Assignment> out;
  if (p.at_end()) return out;
  for (;;) {
    Assignment a;
    a.target = p.ident();
    if (p.is("=") || p.is(":=")) {
      p.take();
    } else {
      p.fail("expected '=' or ':='");
    }
    a.value = p.expr();
    out.push_back(std::move(a));
    if (p.at_end()) break;
    p.expect(",");
  }
  return out;
}

inline SyncLabel parse_sync(std::string_view text) {
  detail::Parser p(text);
  SyncLabel s;
  s.channel = p.ident();
  if (p.is("!")) {
    s.send = true;
  } else if (p.is("?")) {
    s.send = false;
  } else {
    p.fail("expected '!' or '?' after channel name");
  }
  p.take();
  if (!p.at_end()) p.fail("trailing input in synchronisation");
  return s;
}

// ---------------------------------------------------------------------------
// Printing

enum class Style { Model, Query };

inline std::string to_string(const Expr& e, Style style = Style::Model);

namespace detail {

inline const char* op_text(Op o, Style style) {
  switch (o) {
    case Op::Not: return style == Style::Query ? "not " : "!";
    case Op::Neg: return "-";
    case Op::Imply: return " imply ";
    case Op::Or: return " || ";
    case Op::And: return " && ";
    case Op::Eq: return " == ";
    case Op::Ne: return " != ";
    case Op::Lt: return " < ";
    case Op::Le: return " <= ";
    case Op::Gt: return " > ";
    case Op::Ge: return " >= ";
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::Mul: return " * ";
    case Op::Div: return " / ";
    case Op::Mod: return " % ";
  }
  return "?";
}

// keyword `not` sits just above `imply`
inline int expr_precedence(const Expr& e, Style style) {
  if (style == Style::Query && e.kind == Expr::Kind::Unary && e.op == Op::Not) return 1;
  if (e.kind == Expr::Kind::Binary || e.kind == Expr::Kind::Unary) return precedence(e.op);
  if (e.kind == Expr::Kind::Int && e.value < 0) return precedence(Op::Neg);
  return 9;
}

inline void print(const Expr& e, Style style, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Int: out += std::to_string(e.value); return;
    case Expr::Kind::Bool: out += e.value ? "true" : "false"; return;
    case Expr::Kind::Ident: out += e.name; return;
    case Expr::Kind::Member: out += e.name + "." + e.member; return;
    case Expr::Kind::Unary: {
      out += op_text(e.op, style);
      const int self = style == Style::Query && e.op == Op::Not ? 2 : precedence(e.op);
      bool paren = expr_precedence(e.args[0], style) < self ||
                   (e.op == Op::Neg && e.args[0].kind == Expr::Kind::Int);
      if (paren) out += "(";
      print(e.args[0], style, out);
      if (paren) out += ")";
      return;
    }
    case Expr::Kind::Binary: {
      int p = precedence(e.op);
      bool right_assoc = e.op == Op::Imply;
      int lp = expr_precedence(e.args[0], style);
      int rp = expr_precedence(e.args[1], style);
      bool lparen = right_assoc ? lp <= p : lp < p;
      bool rparen = right_assoc ? rp < p : rp <= p;
      if (lparen) out += "(";
      print(e.args[0], style, out);
      if (lparen) out += ")";
      out += op_text(e.op, style);
      if (rparen) out += "(";
      print(e.args[1], style, out);
      if (rparen) out += ")";
      return;
    }
  }
}

} // namespace detail

inline std::string to_string(const Expr& e, Style style) {
  std::string out;
  detail::print(e, style, out);
  return out;
}

inline std::string to_string(const std::vector<Assignment>& as) {
  std::string out;
  for (std::size_t i = 0; i < as.size(); ++i) {
    if (i) out += ", ";
    out += as[i].target + " = " + to_string(as[i].value);
  }
  return out;
}

inline std::string to_string(const SyncLabel& s) { return s.channel + (s.send ? "!" : "?"); }

/// Evaluates an expression that contains only literals and the given constants.
inline std::optional<long long> eval_const(const Expr& e,
                                           const std::function<std::optional<long long>(const std::string&)>& lookup) {
  switch (e.kind) {
    case Expr::Kind::Int:
    case Expr::Kind::Bool: return e.value;
    case Expr::Kind::Ident: return lookup(e.name);
    case Expr::Kind::Member: return std::nullopt;
    case Expr::Kind::Unary: {
      auto a = eval_const(e.args[0], lookup);
      if (!a) return std::nullopt;
      return e.op == Op::Not ? static_cast<long long>(*a == 0) : -*a;
    }
    case Expr::Kind::Binary: {
      auto a = eval_const(e.args[0], lookup);
      auto b = eval_const(e.args[1], lookup);
      if (!a || !b) return std::nullopt;
      switch (e.op) {
        case Op::Imply: return static_cast<long long>(!*a || *b);
        case Op::Or: return static_cast<long long>(*a || *b);
        case Op::And: return static_cast<long long>(*a && *b);
        case Op::Eq: return static_cast<long long>(*a == *b);
        case Op::Ne: return static_cast<long long>(*a != *b);
        case Op::Lt: return static_cast<long long>(*a < *b);
        case Op::Le: return static_cast<long long>(*a <= *b);
        case Op::Gt: return static_cast<long long>(*a > *b);
        case Op::Ge: return static_cast<long long>(*a >= *b);
        case Op::Add: return *a + *b;
        case Op::Sub: return *a - *b;
        case Op::Mul: return *a * *b;
        case Op::Div: if (*b == 0) return std::nullopt; return *a / *b;
        case Op::Mod: if (*b == 0) return std::nullopt; return *a % *b;
        default: return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

} // namespace pspta::ta
