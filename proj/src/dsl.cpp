#include "adtgen/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>
#include <sstream>

namespace adtgen {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

struct Token {
  enum class Kind { Ident, Int, Sym, End };
  Kind kind = Kind::End;
  std::string text;
  std::int64_t value = 0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_ws_and_comments();
      Token t;
      t.line = line_;
      t.col = col_;
      if (eof()) {
        t.kind = Token::Kind::End;
        out.push_back(t);
        return out;
      }
      const char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::Ident;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
          t.text.push_back(take());
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Token::Kind::Int;
        std::string digits;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek())))
          digits.push_back(take());
        t.value = std::stoll(digits);
        t.text = digits;
      } else {
        t.kind = Token::Kind::Sym;
        t.text = take_symbol();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  bool eof() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  char take() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws_and_comments() {
    for (;;) {
      while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) take();
      if (peek() == '(' && peek(1) == '*') {
        const int open_line = line_, open_col = col_;
        take();
        take();
        int depth = 1;
        while (depth > 0) {
          if (eof()) throw ParseError("unterminated comment", open_line, open_col);
          if (peek() == '(' && peek(1) == '*') {
            take();
            take();
            ++depth;
          } else if (peek() == '*' && peek(1) == ')') {
            take();
            take();
            --depth;
          } else {
            take();
          }
        }
        continue;
      }
      return;
    }
  }

  std::string take_symbol() {
    static const char* two_char[] = {"->", "&&", "<=", ">=", "<>"};
    if (peek() == '[' && peek(1) == '@' && peek(2) == '@') {
      take();
      take();
      take();
      return "[@@";
    }
    if (peek() == '[' && peek(1) == '@') {
      take();
      take();
      return "[@";
    }
    for (const char* s : two_char) {
      if (peek() == s[0] && peek(1) == s[1]) {
        take();
        take();
        return s;
      }
    }
    static const std::string singles = "]()|*=+-<>";
    const char c = peek();
    if (singles.find(c) != std::string::npos) {
      take();
      return std::string(1, c);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

bool is_upper_ident(const std::string& s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

const std::set<std::string>& constraint_keywords() {
  static const std::set<std::string> kws = {"alldiff", "increasing", "increasing_strict",
                                            "decreasing", "decreasing_strict"};
  return kws;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  TypeSystem parse_system() {
    TypeSystem ts;
    while (!at_end()) {
      expect_keyword("type");
      parse_binding(ts);
      while (peek_is_ident("and")) {
        advance();
        parse_binding(ts);
      }
    }
    return ts;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n = 1) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }
  void advance() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }
  bool at_end() const { return cur().kind == Token::Kind::End; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur().line, cur().col);
  }

  bool peek_is_sym(std::string_view s, std::size_t n = 0) const {
    const Token& t = ahead(n);
    return t.kind == Token::Kind::Sym && t.text == s;
  }
  bool peek_is_ident(std::string_view s) const {
    return cur().kind == Token::Kind::Ident && cur().text == s;
  }

  void expect_sym(std::string_view s) {
    if (!peek_is_sym(s)) fail("expected '" + std::string(s) + "'");
    advance();
  }
  void expect_keyword(std::string_view s) {
    if (!peek_is_ident(s)) fail("expected '" + std::string(s) + "'");
    advance();
  }
  std::string expect_ident(const char* what) {
    if (cur().kind != Token::Kind::Ident) fail(std::string("expected ") + what);
    std::string s = cur().text;
    advance();
    return s;
  }

  void parse_binding(TypeSystem& ts) {
    TypeDecl decl;
    decl.name = expect_ident("type name");
    if (is_upper_ident(decl.name)) fail("type names must start with a lowercase letter");
    if (ts.index.count(decl.name)) fail("duplicate type name '" + decl.name + "'");
    expect_sym("=");
    parse_body(decl);
    if (peek_is_sym("[@@")) {
      advance();
      expect_keyword("satisfying");
      decl.constraint = parse_constraints();
      expect_sym("]");
    }
    ts.index.emplace(decl.name, ts.decls.size());
    ts.decls.push_back(std::move(decl));
  }

  void parse_body(TypeDecl& decl) {
    const bool leading_bar = peek_is_sym("|");
    if (leading_bar) advance();
    if (leading_bar || (cur().kind == Token::Kind::Ident && is_upper_ident(cur().text))) {
      decl.is_sum = true;
      std::set<std::string> seen;
      for (;;) {
        Constructor con;
        con.name = expect_ident("constructor name");
        if (!is_upper_ident(con.name))
          fail("constructor names must start with an uppercase letter");
        if (!seen.insert(con.name).second)
          fail("duplicate constructor name '" + con.name + "'");
        if (peek_is_ident("of")) {
          advance();
          CoreType arg = parse_coretype();
          if (arg.kind == CoreType::Kind::Product)
            con.args = std::move(arg.factors);
          else
            con.args.push_back(std::move(arg));
        }
        decl.constructors.push_back(std::move(con));
        if (!peek_is_sym("|")) break;
        advance();
      }
    } else {
      decl.core = parse_coretype();
    }
  }

  CoreType parse_coretype() {
    CoreType first = parse_factor();
    if (!peek_is_sym("*")) return first;
    CoreType prod;
    prod.kind = CoreType::Kind::Product;
    prod.factors.push_back(std::move(first));
    while (peek_is_sym("*")) {
      advance();
      prod.factors.push_back(parse_factor());
    }
    return prod;
  }

  CoreType parse_factor() {
    CoreType t;
    if (peek_is_sym("(")) {
      advance();
      t = parse_coretype();
      // attribute attached inside the parentheses: (int [@collect])
      maybe_collect_attr(t);
      expect_sym(")");
    } else {
      const std::string name = expect_ident("type");
      if (name == "int") {
        t = CoreType::int_atom();
      } else if (name == "float") {
        t = CoreType::float_atom();
      } else if (is_upper_ident(name)) {
        fail("unexpected constructor name '" + name + "' in a type expression");
      } else {
        t = CoreType::ref_to(name);
      }
    }
    // attribute following the factor: (int)[@collect]
    maybe_collect_attr(t);
    return t;
  }

  void maybe_collect_attr(CoreType& t) {
    while (peek_is_sym("[@")) {
      advance();
      expect_keyword("collect");
      int group = 1;
      if (cur().kind == Token::Kind::Int) {
        group = static_cast<int>(cur().value);
        if (group <= 0) fail("collect group must be positive");
        advance();
      }
      expect_sym("]");
      if (t.kind != CoreType::Kind::Int)
        fail("[@collect] applies to int atoms only");
      if (t.collect_group != 0) fail("duplicate [@collect] annotation");
      t.collect_group = group;
    }
  }

  // constraints := "fun" x "->" conj | conj
  ConstraintExpr parse_constraints() {
    ConstraintExpr expr;
    std::string bound;  // empty in the bare keyword form
    if (peek_is_ident("fun")) {
      advance();
      bound = expect_ident("bound variable");
      expect_sym("->");
    }
    for (;;) {
      expr.atoms.push_back(parse_constraint_atom(bound));
      if (!peek_is_sym("&&")) break;
      advance();
    }
    return expr;
  }

  ConstraintAtom parse_constraint_atom(const std::string& bound) {
    if (cur().kind == Token::Kind::Ident && constraint_keywords().count(cur().text)) {
      ConstraintAtom atom;
      const std::string kw = cur().text;
      advance();
      if (kw == "alldiff") {
        atom.kind = ConstraintAtom::Kind::AllDiff;
      } else {
        atom.kind = kw.starts_with("increasing") ? ConstraintAtom::Kind::Increasing
                                                 : ConstraintAtom::Kind::Decreasing;
        atom.strict = kw.ends_with("_strict");
      }
      if (!bound.empty() && peek_is_ident(bound)) {
        advance();
        if (cur().kind == Token::Kind::Int) {
          atom.group = static_cast<int>(cur().value);
          if (atom.group <= 0) fail("collect group must be positive");
          advance();
        }
      }
      return atom;
    }
    if (bound.empty()) {
      if (cur().kind == Token::Kind::Ident)
        fail("unknown constraint keyword '" + cur().text + "'");
      fail("expected a constraint");
    }
    return parse_arith(bound);
  }

  // Linear expression over the bound variable, as (coeff, constant).
  struct Lin {
    std::int64_t coeff = 0;
    std::int64_t cst = 0;
  };

  Lin parse_lin_term(const std::string& bound) {
    bool neg = false;
    while (peek_is_sym("-") || peek_is_sym("+")) {
      if (peek_is_sym("-")) neg = !neg;
      advance();
    }
    Lin t;
    if (cur().kind == Token::Kind::Int) {
      const std::int64_t n = cur().value;
      advance();
      if (peek_is_sym("*")) {
        advance();
        if (!peek_is_ident(bound)) fail("expected '" + bound + "' after '*'");
        advance();
        t.coeff = n;
      } else {
        t.cst = n;
      }
    } else if (peek_is_ident(bound)) {
      advance();
      t.coeff = 1;
      if (peek_is_sym("*")) {
        advance();
        if (cur().kind != Token::Kind::Int) fail("expected an integer after '*'");
        t.coeff = cur().value;
        advance();
      }
    } else if (cur().kind == Token::Kind::Ident) {
      fail("unknown constraint keyword '" + cur().text + "'");
    } else {
      fail("expected a linear term");
    }
    if (neg) {
      t.coeff = -t.coeff;
      t.cst = -t.cst;
    }
    return t;
  }

  Lin parse_lin_expr(const std::string& bound) {
    Lin acc = parse_lin_term(bound);
    while (peek_is_sym("+") || peek_is_sym("-")) {
      const bool minus = peek_is_sym("-");
      advance();
      Lin t = parse_lin_term(bound);
      acc.coeff += minus ? -t.coeff : t.coeff;
      acc.cst += minus ? -t.cst : t.cst;
    }
    return acc;
  }

  ConstraintAtom parse_arith(const std::string& bound) {
    const Lin lhs = parse_lin_expr(bound);
    RelOp op;
    if (peek_is_sym("=")) {
      op = RelOp::Eq;
    } else if (peek_is_sym("<=")) {
      op = RelOp::Le;
    } else if (peek_is_sym(">=")) {
      op = RelOp::Ge;
    } else if (peek_is_sym("<")) {
      op = RelOp::Lt;
    } else if (peek_is_sym(">")) {
      op = RelOp::Gt;
    } else {
      fail("expected a comparison operator");
    }
    advance();
    const Lin rhs = parse_lin_expr(bound);
    ConstraintAtom atom;
    atom.kind = ConstraintAtom::Kind::ScalarArith;
    atom.group = 0;
    atom.coeff = lhs.coeff - rhs.coeff;
    atom.rhs = rhs.cst - lhs.cst;
    atom.op = op;
    return atom;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Flattening and reachability
// ---------------------------------------------------------------------------

void flatten_into(const CoreType& t, std::vector<Slot>& out) {
  switch (t.kind) {
    case CoreType::Kind::Int:
      out.push_back({Slot::Kind::Int, t.collect_group, {}});
      break;
    case CoreType::Kind::Float:
      out.push_back({Slot::Kind::Float, 0, {}});
      break;
    case CoreType::Kind::Ref:
      out.push_back({Slot::Kind::Ref, 0, t.ref});
      break;
    case CoreType::Kind::Product:
      for (const CoreType& f : t.factors) flatten_into(f, out);
      break;
  }
}

template <typename Fn>
void for_each_slot(const TypeDecl& decl, Fn&& fn) {
  if (decl.is_sum) {
    for (const Constructor& con : decl.constructors)
      for (const Slot& s : flatten_args(con.args)) fn(s);
  } else {
    for (const Slot& s : flatten_core(decl.core)) fn(s);
  }
}

}  // namespace

std::vector<Slot> flatten_args(const std::vector<CoreType>& args) {
  std::vector<Slot> out;
  for (const CoreType& a : args) flatten_into(a, out);
  return out;
}

std::vector<Slot> flatten_core(const CoreType& core) {
  std::vector<Slot> out;
  flatten_into(core, out);
  return out;
}

TypeSystem parse_decls(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.parse_system();
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

std::string print_core(const CoreType& t, bool parenthesize_product) {
  switch (t.kind) {
    case CoreType::Kind::Int:
      if (t.collect_group == 0) return "int";
      if (t.collect_group == 1) return "(int[@collect])";
      return "(int[@collect " + std::to_string(t.collect_group) + "])";
    case CoreType::Kind::Float:
      return "float";
    case CoreType::Kind::Ref:
      return t.ref;
    case CoreType::Kind::Product: {
      std::string s;
      for (std::size_t i = 0; i < t.factors.size(); ++i) {
        if (i > 0) s += " * ";
        s += print_core(t.factors[i], true);
      }
      return parenthesize_product ? "(" + s + ")" : s;
    }
  }
  return {};
}

std::string op_text(RelOp op) {
  switch (op) {
    case RelOp::Eq: return "=";
    case RelOp::Le: return "<=";
    case RelOp::Ge: return ">=";
    case RelOp::Lt: return "<";
    case RelOp::Gt: return ">";
  }
  return {};
}

std::string atom_keyword(const ConstraintAtom& a) {
  switch (a.kind) {
    case ConstraintAtom::Kind::AllDiff: return "alldiff";
    case ConstraintAtom::Kind::Increasing: return a.strict ? "increasing_strict" : "increasing";
    case ConstraintAtom::Kind::Decreasing: return a.strict ? "decreasing_strict" : "decreasing";
    case ConstraintAtom::Kind::ScalarArith: return {};
  }
  return {};
}

}  // namespace

std::string print_constraint(const ConstraintExpr& c) {
  bool bare = true;
  for (const ConstraintAtom& a : c.atoms)
    if (a.kind == ConstraintAtom::Kind::ScalarArith || a.group > 1) bare = false;
  std::string s;
  if (!bare) s += "fun x -> ";
  for (std::size_t i = 0; i < c.atoms.size(); ++i) {
    const ConstraintAtom& a = c.atoms[i];
    if (i > 0) s += " && ";
    if (a.kind == ConstraintAtom::Kind::ScalarArith) {
      if (a.coeff == 1)
        s += "x";
      else
        s += std::to_string(a.coeff) + " * x";
      s += " " + op_text(a.op) + " " + std::to_string(a.rhs);
    } else {
      s += atom_keyword(a);
      if (!bare) s += " x " + std::to_string(a.group);
    }
  }
  return s;
}

std::string print_decls(const TypeSystem& ts) {
  std::ostringstream out;
  for (std::size_t d = 0; d < ts.decls.size(); ++d) {
    const TypeDecl& decl = ts.decls[d];
    if (d > 0) out << "\n";
    out << "type " << decl.name << " =";
    if (decl.is_sum) {
      for (std::size_t i = 0; i < decl.constructors.size(); ++i) {
        const Constructor& con = decl.constructors[i];
        out << (i == 0 ? " " : " | ") << con.name;
        if (!con.args.empty()) {
          out << " of ";
          for (std::size_t j = 0; j < con.args.size(); ++j) {
            if (j > 0) out << " * ";
            out << print_core(con.args[j], true);
          }
        }
      }
    } else {
      out << " " << print_core(decl.core, false);
    }
    if (decl.constraint) out << "\n[@@satisfying " << print_constraint(*decl.constraint) << "]";
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Validation and reachability queries
// ---------------------------------------------------------------------------

std::vector<std::string> reachable_types(const TypeSystem& ts, const std::string& root) {
  std::vector<std::string> order;
  std::set<std::string> seen;
  std::deque<std::string> queue{root};
  while (!queue.empty()) {
    const std::string name = queue.front();
    queue.pop_front();
    if (!seen.insert(name).second) continue;
    const TypeDecl* decl = ts.find(name);
    if (!decl) continue;
    order.push_back(name);
    for_each_slot(*decl, [&](const Slot& s) {
      if (s.kind == Slot::Kind::Ref && !seen.count(s.ref)) queue.push_back(s.ref);
    });
  }
  return order;
}

bool is_recursive(const TypeSystem& ts, const std::string& root) {
  // A type is recursive when a cycle is reachable from it.
  const auto reach = reachable_types(ts, root);
  const std::set<std::string> in_scope(reach.begin(), reach.end());
  std::unordered_map<std::string, int> color;  // 0 = new, 1 = on stack, 2 = done
  struct Frame {
    std::string name;
    std::vector<std::string> children;
    std::size_t next = 0;
  };
  for (const std::string& start : reach) {
    if (color[start] != 0) continue;
    std::vector<Frame> stack;
    auto push = [&](const std::string& n) {
      Frame f;
      f.name = n;
      const TypeDecl* decl = ts.find(n);
      if (decl)
        for_each_slot(*decl, [&](const Slot& s) {
          if (s.kind == Slot::Kind::Ref && in_scope.count(s.ref)) f.children.push_back(s.ref);
        });
      color[n] = 1;
      stack.push_back(std::move(f));
    };
    push(start);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < f.children.size()) {
        const std::string child = f.children[f.next++];
        if (color[child] == 1) return true;
        if (color[child] == 0) push(child);
      } else {
        color[f.name] = 2;
        stack.pop_back();
      }
    }
  }
  return false;
}

bool has_reachable_collect(const TypeSystem& ts, const std::string& root) {
  return !reachable_groups(ts, root).empty();
}

std::vector<int> reachable_groups(const TypeSystem& ts, const std::string& root) {
  std::set<int> groups;
  for (const std::string& name : reachable_types(ts, root)) {
    const TypeDecl* decl = ts.find(name);
    if (!decl) continue;
    for_each_slot(*decl, [&](const Slot& s) {
      if (s.collect_group > 0) groups.insert(s.collect_group);
    });
  }
  return {groups.begin(), groups.end()};
}

std::vector<ConstraintAtom> effective_constraints(const TypeSystem& ts,
                                                  const std::string& root) {
  std::vector<ConstraintAtom> atoms;
  for (const std::string& name : reachable_types(ts, root)) {
    const TypeDecl* decl = ts.find(name);
    if (!decl || !decl->constraint) continue;
    for (const ConstraintAtom& a : decl->constraint->atoms) {
      if (a.kind == ConstraintAtom::Kind::ScalarArith && name != root) continue;
      if (std::find(atoms.begin(), atoms.end(), a) == atoms.end()) atoms.push_back(a);
    }
  }
  return atoms;
}

bool is_scalar_decl(const TypeDecl& decl) {
  return !decl.is_sum && decl.core.kind == CoreType::Kind::Int && decl.core.collect_group == 0;
}

bool eval_arith(const ConstraintAtom& atom, std::int64_t value) {
  const auto lhs = static_cast<__int128>(atom.coeff) * static_cast<__int128>(value);
  const auto rhs = static_cast<__int128>(atom.rhs);
  switch (atom.op) {
    case RelOp::Eq: return lhs == rhs;
    case RelOp::Le: return lhs <= rhs;
    case RelOp::Ge: return lhs >= rhs;
    case RelOp::Lt: return lhs < rhs;
    case RelOp::Gt: return lhs > rhs;
  }
  return false;
}

std::vector<Diagnostic> validate(const TypeSystem& ts) {
  std::vector<Diagnostic> diags;
  auto report = [&](const std::string& decl, std::string msg) {
    diags.push_back({decl, std::move(msg)});
  };

  // Every referenced name must be declared.
  for (const TypeDecl& decl : ts.decls) {
    for_each_slot(decl, [&](const Slot& s) {
      if (s.kind == Slot::Kind::Ref && !ts.find(s.ref))
        report(decl.name, "unknown type '" + s.ref + "'");
    });
  }

  // Well-foundedness: grounded types can produce a finite value.
  std::set<std::string> grounded;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const TypeDecl& decl : ts.decls) {
      if (grounded.count(decl.name)) continue;
      auto slots_grounded = [&](const std::vector<Slot>& slots) {
        return std::all_of(slots.begin(), slots.end(), [&](const Slot& s) {
          return s.kind != Slot::Kind::Ref || grounded.count(s.ref) || !ts.find(s.ref);
        });
      };
      bool ok;
      if (decl.is_sum) {
        ok = std::any_of(decl.constructors.begin(), decl.constructors.end(),
                         [&](const Constructor& c) { return slots_grounded(flatten_args(c.args)); });
      } else {
        ok = slots_grounded(flatten_core(decl.core));
      }
      if (ok) {
        grounded.insert(decl.name);
        changed = true;
      }
    }
  }
  for (const TypeDecl& decl : ts.decls)
    if (!grounded.count(decl.name))
      report(decl.name, "no base constructor: every value of '" + decl.name +
                            "' would be infinite");

  for (const TypeDecl& decl : ts.decls) {
    if (!decl.constraint) continue;
    const auto groups = reachable_groups(ts, decl.name);
    for (const ConstraintAtom& a : decl.constraint->atoms) {
      if (a.kind == ConstraintAtom::Kind::ScalarArith) {
        if (!is_scalar_decl(decl))
          report(decl.name, "arithmetic constraint requires a plain int declaration");
        else if (is_recursive(ts, decl.name))
          report(decl.name, "arithmetic constraint on a recursive declaration");
        continue;
      }
      if (!std::binary_search(groups.begin(), groups.end(), a.group))
        report(decl.name, "unknown collect group " + std::to_string(a.group));
    }
  }

  // Arithmetic-constrained scalars may not be referenced from other types;
  // their constraint would not survive the group-collection machinery.
  for (const TypeDecl& decl : ts.decls) {
    for_each_slot(decl, [&](const Slot& s) {
      if (s.kind != Slot::Kind::Ref) return;
      const TypeDecl* target = ts.find(s.ref);
      if (!target || !target->constraint) return;
      for (const ConstraintAtom& a : target->constraint->atoms)
        if (a.kind == ConstraintAtom::Kind::ScalarArith) {
          report(decl.name,
                 "reference to arithmetic-constrained type '" + s.ref + "' is not supported");
          return;
        }
    });
  }

  return diags;
}

}  // namespace adtgen
