#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "impdde/errors.hpp"
#include "impdde/history.hpp"
#include "impdde/linalg.hpp"

// Arithmetic expression language for defining system components from text.
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = "-" unary | power ;
//   power   = atom [ "^" unary ] ;              (right-associative)
//   atom    = number | "(" expr ")"
//           | func "(" expr ")"                 (sin cos exp log abs sqrt)
//           | "z"  "(" expr ")"                 (state component)
//           | "zd" "(" expr "," expr ")"        (delayed state: component, lag)
//           | "yq" "(" expr "," expr ")"        (non-local input: argument, component)
//           | "t" | "x" | "u" | "v"
//           | identifier ;                      (named parameter)
//   number  = digits [ "." digits ] [ ("e"|"E") [sign] digits ] ;
//
// Which variables are legal depends on the slot an expression is bound to;
// see validate_slot. Angles are radians. -a^b parses as -(a^b).

namespace impdde::expr {

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  TokKind kind;
  double num = 0;
  std::string text;
  std::size_t pos = 0;
};

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  const auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    const std::size_t pos = i;
    if (is_digit(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j < text.size() && text[j] == '.') {
        ++j;
        while (j < text.size() && is_digit(text[j])) ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && is_digit(text[k])) {
          ++k;
          while (k < text.size() && is_digit(text[k])) ++k;
          j = k;
        }
      }
      double value = 0;
      const auto res = std::from_chars(text.data() + i, text.data() + j, value);
      if (res.ec != std::errc{}) throw ParseError("malformed number", pos);
      out.push_back({TokKind::Number, value, std::string(text.substr(i, j - i)), pos});
      i = j;
      continue;
    }
    if (is_alpha(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && (is_alpha(text[j]) || is_digit(text[j]))) ++j;
      out.push_back({TokKind::Ident, 0, std::string(text.substr(i, j - i)), pos});
      i = j;
      continue;
    }
    TokKind k;
    switch (c) {
      case '+': k = TokKind::Plus; break;
      case '-': k = TokKind::Minus; break;
      case '*': k = TokKind::Star; break;
      case '/': k = TokKind::Slash; break;
      case '^': k = TokKind::Caret; break;
      case '(': k = TokKind::LParen; break;
      case ')': k = TokKind::RParen; break;
      case ',': k = TokKind::Comma; break;
      default: throw ParseError(std::string("illegal character '") + c + "'", pos);
    }
    out.push_back({k, 0, std::string(1, c), pos});
    ++i;
  }
  out.push_back({TokKind::End, 0, "", text.size()});
  return out;
}

enum class NodeKind { Number, Param, VarT, VarX, VarU, VarV, Neg, Add, Sub, Mul, Div, Pow, Call, State, Delayed, Tuple };

struct Node;
using Ast = std::unique_ptr<Node>;

struct Node {
  NodeKind kind;
  std::size_t pos = 0;
  double num = 0;     // Number
  std::string name;   // Param / Call
  Ast lhs, rhs;       // children; State uses lhs; Delayed/Tuple use lhs,rhs
};

inline bool is_builtin_call(const std::string& s) {
  return s == "sin" || s == "cos" || s == "exp" || s == "log" || s == "abs" || s == "sqrt";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Ast parse() {
    Ast e = expr();
    if (peek().kind != TokKind::End) throw ParseError("unexpected token '" + peek().text + "'", peek().pos);
    return e;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  Token take() { return toks_[i_++]; }
  bool accept(TokKind k) {
    if (peek().kind == k) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(TokKind k, const char* what) {
    if (!accept(k)) throw ParseError(std::string("expected ") + what, peek().pos);
  }

  Ast make(NodeKind k, std::size_t pos) {
    Ast n = std::make_unique<Node>();
    n->kind = k;
    n->pos = pos;
    return n;
  }

  Ast expr() {
    Ast l = term();
    for (;;) {
      const Token& t = peek();
      if (t.kind != TokKind::Plus && t.kind != TokKind::Minus) return l;
      take();
      Ast n = make(t.kind == TokKind::Plus ? NodeKind::Add : NodeKind::Sub, t.pos);
      n->lhs = std::move(l);
      n->rhs = term();
      l = std::move(n);
    }
  }

  Ast term() {
    Ast l = unary();
    for (;;) {
      const Token& t = peek();
      if (t.kind != TokKind::Star && t.kind != TokKind::Slash) return l;
      take();
      Ast n = make(t.kind == TokKind::Star ? NodeKind::Mul : NodeKind::Div, t.pos);
      n->lhs = std::move(l);
      n->rhs = unary();
      l = std::move(n);
    }
  }

  Ast unary() {
    if (peek().kind == TokKind::Minus) {
      const Token t = take();
      Ast n = make(NodeKind::Neg, t.pos);
      n->lhs = unary();
      return n;
    }
    return power();
  }

  Ast power() {
    Ast base = atom();
    if (peek().kind == TokKind::Caret) {
      const Token t = take();
      Ast n = make(NodeKind::Pow, t.pos);
      n->lhs = std::move(base);
      n->rhs = unary();  // right-associative, signed exponents allowed
      return n;
    }
    return base;
  }

  Ast atom() {
    const Token t = take();
    switch (t.kind) {
      case TokKind::Number: {
        Ast n = make(NodeKind::Number, t.pos);
        n->num = t.num;
        return n;
      }
      case TokKind::LParen: {
        Ast e = expr();
        expect(TokKind::RParen, "')'");
        return e;
      }
      case TokKind::Ident: {
        if (t.text == "t") return make(NodeKind::VarT, t.pos);
        if (t.text == "x") return make(NodeKind::VarX, t.pos);
        if (t.text == "u") return make(NodeKind::VarU, t.pos);
        if (t.text == "v") return make(NodeKind::VarV, t.pos);
        if (is_builtin_call(t.text)) {
          expect(TokKind::LParen, "'(' after function name");
          Ast n = make(NodeKind::Call, t.pos);
          n->name = t.text;
          n->lhs = expr();
          expect(TokKind::RParen, "')'");
          return n;
        }
        if (t.text == "z" || t.text == "zd" || t.text == "yq") {
          const int arity = t.text == "z" ? 1 : 2;
          expect(TokKind::LParen, "'(' after accessor");
          Ast n = make(t.text == "z" ? NodeKind::State : (t.text == "zd" ? NodeKind::Delayed : NodeKind::Tuple),
                       t.pos);
          n->lhs = expr();
          if (arity == 2) {
            if (!accept(TokKind::Comma))
              throw ParseError("'" + t.text + "' requires 2 arguments", peek().pos);
            n->rhs = expr();
          } else if (peek().kind == TokKind::Comma) {
            throw ParseError("'z' requires 1 argument", peek().pos);
          }
          expect(TokKind::RParen, "')'");
          return n;
        }
        // any other identifier is a named parameter
        Ast n = make(NodeKind::Param, t.pos);
        n->name = t.text;
        return n;
      }
      default: throw ParseError("expected value, variable, or '('", t.pos);
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

inline Ast parse(std::string_view text) { return Parser(tokenize(text)).parse(); }

/// Evaluation context. Exactly one of `state` / `history` backs z(i);
/// zd(i, d) needs `history`; yq(j, i) needs `tuple`.
struct EvalEnv {
  double t = 0, x = 0, u = 0, v = 0;
  const std::map<std::string, double>* params = nullptr;
  const Vec* state = nullptr;
  const HistorySegment* history = nullptr;
  std::span<const HistorySegment> tuple = {};
};

inline double eval(const Node& n, const EvalEnv& env);

namespace detail {

inline std::size_t component_index(const Node& idx_expr, const EvalEnv& env, std::size_t count, const char* what) {
  const double raw = eval(idx_expr, env);
  const double rounded = std::nearbyint(raw);
  if (std::abs(raw - rounded) > 1e-9 || rounded < 1 || rounded > static_cast<double>(count))
    throw DomainError(std::string(what) + " index out of range");
  return static_cast<std::size_t>(rounded);
}

}  // namespace detail

inline double eval(const Node& n, const EvalEnv& env) {
  switch (n.kind) {
    case NodeKind::Number: return n.num;
    case NodeKind::Param: {
      if (env.params) {
        const auto it = env.params->find(n.name);
        if (it != env.params->end()) return it->second;
      }
      throw DomainError("unbound parameter '" + n.name + "'");
    }
    case NodeKind::VarT: return env.t;
    case NodeKind::VarX: return env.x;
    case NodeKind::VarU: return env.u;
    case NodeKind::VarV: return env.v;
    case NodeKind::Neg: return -eval(*n.lhs, env);
    case NodeKind::Add: return eval(*n.lhs, env) + eval(*n.rhs, env);
    case NodeKind::Sub: return eval(*n.lhs, env) - eval(*n.rhs, env);
    case NodeKind::Mul: return eval(*n.lhs, env) * eval(*n.rhs, env);
    case NodeKind::Div: {
      const double a = eval(*n.lhs, env), b = eval(*n.rhs, env);
      if (b == 0.0) throw NumericError("division by zero");
      return a / b;
    }
    case NodeKind::Pow: {
      const double a = eval(*n.lhs, env), b = eval(*n.rhs, env);
      const double r = std::pow(a, b);
      if (!std::isfinite(r)) throw NumericError("non-finite power result");
      return r;
    }
    case NodeKind::Call: {
      const double a = eval(*n.lhs, env);
      if (n.name == "sin") return std::sin(a);
      if (n.name == "cos") return std::cos(a);
      if (n.name == "exp") {
        const double r = std::exp(a);
        if (!std::isfinite(r)) throw NumericError("exp overflow");
        return r;
      }
      if (n.name == "log") {
        if (a <= 0) throw NumericError("log of non-positive value");
        return std::log(a);
      }
      if (n.name == "abs") return std::abs(a);
      if (n.name == "sqrt") {
        if (a < 0) throw NumericError("sqrt of negative value");
        return std::sqrt(a);
      }
      throw DomainError("unknown function '" + n.name + "'");
    }
    case NodeKind::State: {
      if (env.state) {
        const std::size_t i = detail::component_index(*n.lhs, env, env.state->size(), "state");
        return (*env.state)[i - 1];
      }
      if (env.history) {
        const Vec cur = (*env.history)(0.0);
        const std::size_t i = detail::component_index(*n.lhs, env, cur.size(), "state");
        return cur[i - 1];
      }
      throw DomainError("z(i) not available in this context");
    }
    case NodeKind::Delayed: {
      if (!env.history) throw DomainError("zd(i, d) not available in this context");
      const double lag = eval(*n.rhs, env);
      const Vec past = (*env.history)(-lag);
      const std::size_t i = detail::component_index(*n.lhs, env, past.size(), "state");
      return past[i - 1];
    }
    case NodeKind::Tuple: {
      if (env.tuple.empty()) throw DomainError("yq(j, i) not available in this context");
      const std::size_t j = detail::component_index(*n.lhs, env, env.tuple.size(), "non-local argument");
      const Vec val = env.tuple[j - 1](env.t);
      const std::size_t i = detail::component_index(*n.rhs, env, val.size(), "state");
      return val[i - 1];
    }
  }
  throw DomainError("corrupt expression tree");
}

/// Which expression slot an AST is bound to; governs variable legality.
enum class Slot { Matrix, Rhs, Impulse, Nonlocal, Initial, PsiEnv, KEnv, Growth };

struct VarDescriptor {
  enum class Kind { Param, T, X, U, V, State, Delayed, Tuple } kind;
  std::string name;  // Param
  int a = -1, b = -1;

  friend bool operator<(const VarDescriptor& l, const VarDescriptor& r) {
    return std::tie(l.kind, l.name, l.a, l.b) < std::tie(r.kind, r.name, r.a, r.b);
  }
  friend bool operator==(const VarDescriptor& l, const VarDescriptor& r) {
    return !(l < r) && !(r < l);
  }
};

namespace detail {

inline int literal_int(const Node& n) {
  if (n.kind != NodeKind::Number) return -1;
  const double rounded = std::nearbyint(n.num);
  if (std::abs(n.num - rounded) > 1e-9) return -1;
  return static_cast<int>(rounded);
}

inline void collect_vars(const Node& n, std::set<VarDescriptor>& out) {
  using K = VarDescriptor::Kind;
  switch (n.kind) {
    case NodeKind::Param: out.insert({K::Param, n.name}); return;
    case NodeKind::VarT: out.insert({K::T, ""}); return;
    case NodeKind::VarX: out.insert({K::X, ""}); return;
    case NodeKind::VarU: out.insert({K::U, ""}); return;
    case NodeKind::VarV: out.insert({K::V, ""}); return;
    case NodeKind::State: {
      out.insert({K::State, "", literal_int(*n.lhs)});
      collect_vars(*n.lhs, out);
      return;
    }
    case NodeKind::Delayed: {
      out.insert({K::Delayed, "", literal_int(*n.lhs)});
      collect_vars(*n.lhs, out);
      collect_vars(*n.rhs, out);
      return;
    }
    case NodeKind::Tuple: {
      out.insert({K::Tuple, "", literal_int(*n.lhs), literal_int(*n.rhs)});
      collect_vars(*n.lhs, out);
      collect_vars(*n.rhs, out);
      return;
    }
    default: break;
  }
  if (n.lhs) collect_vars(*n.lhs, out);
  if (n.rhs) collect_vars(*n.rhs, out);
}

}  // namespace detail

/// All variables and parameters appearing in the tree, with their kinds.
inline std::set<VarDescriptor> free_vars(const Node& ast) {
  std::set<VarDescriptor> out;
  detail::collect_vars(ast, out);
  return out;
}

/// Context for binding-time validation of an expression against its slot.
struct SlotContext {
  std::size_t n = 1;                              // state dimension
  std::size_t q = 0;                              // non-local argument count
  double r = 0;                                   // delay length (lag range check)
  const std::map<std::string, double>* params = nullptr;
};

namespace detail {

inline bool const_expr(const Node& n) {
  switch (n.kind) {
    case NodeKind::Number:
    case NodeKind::Param: return true;
    case NodeKind::VarT:
    case NodeKind::VarX:
    case NodeKind::VarU:
    case NodeKind::VarV:
    case NodeKind::State:
    case NodeKind::Delayed:
    case NodeKind::Tuple: return false;
    default: break;
  }
  const bool l = !n.lhs || const_expr(*n.lhs);
  const bool r = !n.rhs || const_expr(*n.rhs);
  return l && r;
}

inline double const_value(const Node& n, const SlotContext& ctx, const char* what) {
  if (!const_expr(n)) throw ParseError(std::string(what) + " must be a constant expression", n.pos);
  EvalEnv env;
  env.params = ctx.params;
  return eval(n, env);
}

inline void check_index(const Node& idx, const SlotContext& ctx, std::size_t count, const char* what) {
  const double v = const_value(idx, ctx, what);
  const double rounded = std::nearbyint(v);
  if (std::abs(v - rounded) > 1e-9 || rounded < 1 || rounded > static_cast<double>(count))
    throw ParseError(std::string(what) + " index out of range [1, " + std::to_string(count) + "]", idx.pos);
}

}  // namespace detail

/// Validate variable legality (and index/lag ranges) for the given slot.
/// Throws ParseError at the offending position.
inline void validate_slot(const Node& n, Slot slot, const SlotContext& ctx) {
  switch (n.kind) {
    case NodeKind::VarT:
      if (slot == Slot::PsiEnv || slot == Slot::KEnv) throw ParseError("'t' is not legal in this slot", n.pos);
      break;
    case NodeKind::VarX:
      if (slot != Slot::PsiEnv) throw ParseError("'x' is only legal in the Psi envelope", n.pos);
      break;
    case NodeKind::VarU:
    case NodeKind::VarV:
      if (slot != Slot::KEnv) throw ParseError("'u'/'v' are only legal in the K envelope", n.pos);
      break;
    case NodeKind::State:
      if (slot != Slot::Rhs && slot != Slot::Impulse)
        throw ParseError("z(i) is only legal in f and impulse expressions", n.pos);
      detail::check_index(*n.lhs, ctx, ctx.n, "state");
      return;  // index subtree validated as a constant, skip generic recursion
    case NodeKind::Delayed: {
      if (slot != Slot::Rhs) throw ParseError("zd(i, d) is only legal in f expressions", n.pos);
      detail::check_index(*n.lhs, ctx, ctx.n, "state");
      const double lag = detail::const_value(*n.rhs, ctx, "delay lag");
      if (lag < 0 || lag > ctx.r + 1e-12)
        throw ParseError("delay lag must lie in [0, r]", n.rhs->pos);
      return;
    }
    case NodeKind::Tuple:
      if (slot != Slot::Nonlocal) throw ParseError("yq(j, i) is only legal in g expressions", n.pos);
      detail::check_index(*n.lhs, ctx, ctx.q, "non-local argument");
      detail::check_index(*n.rhs, ctx, ctx.n, "state");
      return;
    default: break;
  }
  if (n.lhs) validate_slot(*n.lhs, slot, ctx);
  if (n.rhs) validate_slot(*n.rhs, slot, ctx);
}

namespace detail {

inline int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
  }
}

inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void print_node(const Node& n, std::string& out);

inline void print_child(const Node& child, int parent_prec, bool needs_paren_on_tie, std::string& out) {
  const int p = precedence(child.kind);
  const bool paren = p < parent_prec || (p == parent_prec && needs_paren_on_tie);
  if (paren) out += '(';
  print_node(child, out);
  if (paren) out += ')';
}

inline void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Number: out += format_number(n.num); return;
    case NodeKind::Param: out += n.name; return;
    case NodeKind::VarT: out += 't'; return;
    case NodeKind::VarX: out += 'x'; return;
    case NodeKind::VarU: out += 'u'; return;
    case NodeKind::VarV: out += 'v'; return;
    case NodeKind::Neg:
      out += '-';
      print_child(*n.lhs, precedence(NodeKind::Neg), false, out);
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      const int p = precedence(n.kind);
      print_child(*n.lhs, p, false, out);
      out += n.kind == NodeKind::Add ? " + " : n.kind == NodeKind::Sub ? " - " : n.kind == NodeKind::Mul ? "*" : "/";
      print_child(*n.rhs, p, true, out);
      return;
    }
    case NodeKind::Pow:
      print_child(*n.lhs, precedence(NodeKind::Pow), true, out);
      out += '^';
      print_child(*n.rhs, precedence(NodeKind::Pow), false, out);
      return;
    case NodeKind::Call:
      out += n.name;
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::State:
      out += "z(";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::Delayed:
      out += "zd(";
      print_node(*n.lhs, out);
      out += ", ";
      print_node(*n.rhs, out);
      out += ')';
      return;
    case NodeKind::Tuple:
      out += "yq(";
      print_node(*n.lhs, out);
      out += ", ";
      print_node(*n.rhs, out);
      out += ')';
      return;
  }
}

}  // namespace detail

/// Render back to text; re-parsing yields a structurally identical tree.
inline std::string pretty_print(const Node& ast) {
  std::string out;
  detail::print_node(ast, out);
  return out;
}

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.name != b.name) return false;
  if (a.kind == NodeKind::Number && a.num != b.num) return false;
  if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
  if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
  if (a.lhs && !structurally_equal(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !structurally_equal(*a.rhs, *b.rhs)) return false;
  return true;
}

}  // namespace impdde::expr
