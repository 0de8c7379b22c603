#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "findef/sexpr.hpp"
#include "findef/term.hpp"

namespace findef {

enum class FormulaKind { Eq, Rel, Not, And, Or, Implies, Exists, Forall };

class Formula {
 public:
  Formula() : Formula(eq(Term::var(0), Term::var(0))) {}

  static Formula eq(Term a, Term b) {
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::Eq;
    n->terms = {std::move(a), std::move(b)};
    return Formula(std::move(n));
  }
  static Formula rel(std::string name, std::vector<Term> args) {
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::Rel;
    n->name = std::move(name);
    n->terms = std::move(args);
    return Formula(std::move(n));
  }
  static Formula negate(Formula f) { return make(FormulaKind::Not, {std::move(f)}); }
  static Formula conj(std::vector<Formula> fs) {
    if (fs.empty()) throw Error("empty conjunction");
    if (fs.size() == 1) return fs[0];
    return make(FormulaKind::And, std::move(fs));
  }
  static Formula disj(std::vector<Formula> fs) {
    if (fs.empty()) throw Error("empty disjunction");
    if (fs.size() == 1) return fs[0];
    return make(FormulaKind::Or, std::move(fs));
  }
  // Builds And/Or even for a single child; used by the parser.
  static Formula nary(FormulaKind k, std::vector<Formula> fs) {
    if (fs.empty()) throw Error("empty conjunction or disjunction");
    return make(k, std::move(fs));
  }
  static Formula implies(Formula a, Formula b) { return make(FormulaKind::Implies, {std::move(a), std::move(b)}); }
  static Formula exists(std::vector<std::string> vars, Formula body) {
    if (vars.empty()) return body;
    return quant(FormulaKind::Exists, std::move(vars), std::move(body));
  }
  static Formula forall(std::vector<std::string> vars, Formula body) {
    if (vars.empty()) return body;
    return quant(FormulaKind::Forall, std::move(vars), std::move(body));
  }
  static Formula truth() { return eq(Term::var(0), Term::var(0)); }
  static Formula falsity() { return negate(truth()); }

  FormulaKind kind() const { return node_->kind; }
  bool is_atomic() const { return node_->kind == FormulaKind::Eq || node_->kind == FormulaKind::Rel; }
  const std::vector<Term>& terms() const { return node_->terms; }
  const std::string& relation() const { return node_->name; }
  const std::vector<Formula>& children() const { return node_->children; }
  const std::vector<std::string>& bound() const { return node_->vars; }

  std::string to_string() const {
    std::string out;
    print(out);
    return out;
  }

  void print(std::string& out) const {
    switch (node_->kind) {
      case FormulaKind::Eq:
        out += "(= ";
        node_->terms[0].print(out);
        out += ' ';
        node_->terms[1].print(out);
        out += ')';
        return;
      case FormulaKind::Rel:
        out += "(rel " + node_->name;
        for (const auto& t : node_->terms) {
          out += ' ';
          t.print(out);
        }
        out += ')';
        return;
      case FormulaKind::Exists:
      case FormulaKind::Forall:
        out += node_->kind == FormulaKind::Exists ? "(exists (" : "(forall (";
        out += join_strings(node_->vars, " ");
        out += ") ";
        node_->children[0].print(out);
        out += ')';
        return;
      default:
        break;
    }
    static const char* names[] = {"", "", "not", "and", "or", "implies"};
    out += '(';
    out += names[static_cast<int>(node_->kind)];
    for (const auto& c : node_->children) {
      out += ' ';
      c.print(out);
    }
    out += ')';
  }

  // Free variables in order of first occurrence.
  std::vector<std::string> free_variables() const {
    std::vector<std::string> out;
    std::vector<std::string> scope;
    collect_free(out, scope);
    return out;
  }

  std::vector<Formula> atoms() const {
    std::vector<Formula> out;
    collect_atoms(out);
    return out;
  }

  Formula substitute(const std::unordered_map<std::string, Term>& s) const {
    if (is_atomic()) {
      auto n = std::make_shared<Node>(*node_);
      for (auto& t : n->terms) t = t.substitute(s);
      return Formula(std::move(n));
    }
    auto inner = s;
    for (const auto& v : node_->vars) inner.erase(v);
    auto n = std::make_shared<Node>(*node_);
    for (auto& c : n->children) c = c.substitute(inner);
    return Formula(std::move(n));
  }

  Formula with_children(std::vector<Formula> kids) const {
    auto n = std::make_shared<Node>(*node_);
    n->children = std::move(kids);
    return Formula(std::move(n));
  }

  friend bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    const Node& x = *a.node_;
    const Node& y = *b.node_;
    if (x.kind != y.kind || x.name != y.name || x.vars != y.vars || x.terms.size() != y.terms.size() ||
        x.children.size() != y.children.size())
      return false;
    for (std::size_t i = 0; i < x.terms.size(); ++i)
      if (!(x.terms[i] == y.terms[i])) return false;
    for (std::size_t i = 0; i < x.children.size(); ++i)
      if (!(x.children[i] == y.children[i])) return false;
    return true;
  }

 private:
  struct Node {
    FormulaKind kind = FormulaKind::Eq;
    std::string name;
    std::vector<Term> terms;
    std::vector<Formula> children;
    std::vector<std::string> vars;
  };
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Formula make(FormulaKind k, std::vector<Formula> kids) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->children = std::move(kids);
    return Formula(std::move(n));
  }
  static Formula quant(FormulaKind k, std::vector<std::string> vars, Formula body) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->vars = std::move(vars);
    n->children = {std::move(body)};
    return Formula(std::move(n));
  }

  void collect_free(std::vector<std::string>& out, std::vector<std::string>& scope) const {
    if (is_atomic()) {
      std::vector<std::string> vs;
      for (const auto& t : node_->terms) t.collect_variables(vs);
      for (const auto& v : vs)
        if (std::find(scope.begin(), scope.end(), v) == scope.end() &&
            std::find(out.begin(), out.end(), v) == out.end())
          out.push_back(v);
      return;
    }
    std::size_t mark = scope.size();
    scope.insert(scope.end(), node_->vars.begin(), node_->vars.end());
    for (const auto& c : node_->children) c.collect_free(out, scope);
    scope.resize(mark);
  }

  void collect_atoms(std::vector<Formula>& out) const {
    if (is_atomic()) {
      out.push_back(*this);
      return;
    }
    for (const auto& c : node_->children) c.collect_atoms(out);
  }

  std::shared_ptr<const Node> node_;
};

inline bool is_generated_variable(std::string_view v, char family) {
  if (v.size() < 2 || v[0] != family) return false;
  return std::all_of(v.begin() + 1, v.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class FormulaParser {
 public:
  explicit FormulaParser(const Signature& sig) : sig_(sig) {}

  Formula parse(const SExpr& e) {
    Formula raw = formula(e);
    std::vector<std::string> all;
    collect_all_names(raw, all);
    used_.insert(all.begin(), all.end());
    auto free = raw.free_variables();
    free_.insert(free.begin(), free.end());
    std::map<std::string, std::string> env;
    std::set<std::string> bound;
    return rename(raw, env, bound);
  }

 private:
  [[noreturn]] static void fail(const SExpr& e, const std::string& msg) { throw ParseError(e.pos.str(), msg); }

  static bool keyword(const std::string& s) {
    return s == "=" || s == "rel" || s == "not" || s == "and" || s == "or" || s == "implies" || s == "exists" ||
           s == "forall";
  }

  Term term(const SExpr& e) {
    if (!e.is_list) {
      if (e.atom.empty() || keyword(e.atom)) fail(e, "expected a term");
      if (auto op = sig_.find_operation(e.atom)) {
        if (sig_.operations()[*op].arity != 0)
          fail(e, "operation '" + e.atom + "' needs " + std::to_string(sig_.operations()[*op].arity) + " arguments");
        return Term::apply(e.atom);
      }
      if (sig_.find_relation(e.atom)) fail(e, "relation symbol '" + e.atom + "' used as a term");
      return Term::variable(e.atom);
    }
    if (e.items.empty() || e.items[0].is_list) fail(e, "expected an operation symbol");
    const std::string& f = e.items[0].atom;
    auto op = sig_.find_operation(f);
    if (!op) fail(e.items[0], "unknown operation symbol '" + f + "'");
    std::size_t ar = sig_.operations()[*op].arity;
    if (e.items.size() - 1 != ar)
      fail(e, "operation '" + f + "' expects " + std::to_string(ar) + " arguments, got " +
                  std::to_string(e.items.size() - 1));
    std::vector<Term> args;
    for (std::size_t i = 1; i < e.items.size(); ++i) args.push_back(term(e.items[i]));
    return Term::apply(f, std::move(args));
  }

  Formula formula(const SExpr& e) {
    if (!e.is_list) fail(e, "expected a formula, got atom '" + e.atom + "'");
    if (e.items.empty() || e.items[0].is_list) fail(e, "expected a connective");
    const std::string& head = e.items[0].atom;
    std::size_t nargs = e.items.size() - 1;
    if (head == "=") {
      if (nargs != 2) fail(e, "'=' takes two terms");
      return Formula::eq(term(e.items[1]), term(e.items[2]));
    }
    if (head == "rel") {
      if (nargs < 1 || e.items[1].is_list) fail(e, "'rel' needs a relation symbol");
      const std::string& r = e.items[1].atom;
      auto idx = sig_.find_relation(r);
      if (!idx) fail(e.items[1], "unknown relation symbol '" + r + "'");
      if (sig_.relations()[*idx].arity != nargs - 1)
        fail(e, "relation '" + r + "' expects " + std::to_string(sig_.relations()[*idx].arity) + " arguments");
      std::vector<Term> args;
      for (std::size_t i = 2; i < e.items.size(); ++i) args.push_back(term(e.items[i]));
      return Formula::rel(r, std::move(args));
    }
    if (head == "not") {
      if (nargs != 1) fail(e, "'not' takes one formula");
      return Formula::negate(formula(e.items[1]));
    }
    if (head == "and" || head == "or") {
      if (nargs == 0) fail(e, "empty '" + head + "'");
      std::vector<Formula> kids;
      for (std::size_t i = 1; i < e.items.size(); ++i) kids.push_back(formula(e.items[i]));
      return Formula::nary(head == "and" ? FormulaKind::And : FormulaKind::Or, std::move(kids));
    }
    if (head == "implies") {
      if (nargs != 2) fail(e, "'implies' takes two formulas");
      return Formula::implies(formula(e.items[1]), formula(e.items[2]));
    }
    if (head == "exists" || head == "forall") {
      if (nargs != 2 || !e.items[1].is_list) fail(e, "'" + head + "' expects (vars) body");
      std::vector<std::string> vars;
      for (const auto& v : e.items[1].items) {
        if (v.is_list || keyword(v.atom) || sig_.has_symbol(v.atom)) fail(v, "bad bound variable");
        vars.push_back(v.atom);
      }
      if (vars.empty()) fail(e.items[1], "empty variable list");
      Formula body = formula(e.items[2]);
      return head == "exists" ? Formula::exists(vars, body) : Formula::forall(vars, body);
    }
    fail(e.items[0], "unknown connective '" + head + "'");
  }

  static void collect_all_names(const Formula& f, std::vector<std::string>& out) {
    for (const auto& v : f.bound()) out.push_back(v);
    if (f.is_atomic()) {
      for (const auto& t : f.terms()) t.collect_variables(out);
      return;
    }
    for (const auto& c : f.children()) collect_all_names(c, out);
  }

  std::string fresh() {
    while (true) {
      std::string v = "w" + std::to_string(++counter_);
      if (!used_.count(v)) {
        used_.insert(v);
        return v;
      }
    }
  }

  Formula rename(const Formula& f, std::map<std::string, std::string>& env, std::set<std::string>& bound) {
    if (f.is_atomic()) {
      std::unordered_map<std::string, Term> s;
      for (const auto& [from, to] : env)
        if (from != to) s.emplace(from, Term::variable(to));
      return s.empty() ? f : f.substitute(s);
    }
    if (f.kind() == FormulaKind::Exists || f.kind() == FormulaKind::Forall) {
      auto saved = env;
      std::vector<std::string> names;
      std::vector<std::string> newly;
      for (const auto& v : f.bound()) {
        std::string n = v;
        if (free_.count(v) || bound.count(v) || std::find(names.begin(), names.end(), v) != names.end())
          n = fresh();
        env[v] = n;
        names.push_back(n);
        if (bound.insert(n).second) newly.push_back(n);
      }
      Formula body = rename(f.children()[0], env, bound);
      env = saved;
      for (const auto& n : newly) bound.erase(n);
      return f.kind() == FormulaKind::Exists ? Formula::exists(names, body) : Formula::forall(names, body);
    }
    std::vector<Formula> kids;
    for (const auto& c : f.children()) kids.push_back(rename(c, env, bound));
    return f.with_children(std::move(kids));
  }

  const Signature& sig_;
  std::set<std::string> used_;
  std::set<std::string> free_;
  std::size_t counter_ = 0;
};

}  // namespace detail

inline Formula parse_formula(std::string_view text, const Signature& sig) {
  SExpr e = SExprReader(text).read_one();
  return detail::FormulaParser(sig).parse(e);
}

inline Term parse_term(std::string_view text, const Signature& sig) {
  // A term is parsed as the left side of a trivial equation.
  std::string wrapped = "(= " + std::string(text) + " " + std::string(text) + ")";
  try {
    return parse_formula(wrapped, sig).terms()[0];
  } catch (const ParseError& e) {
    throw ParseError("term", e.what());
  }
}

// ---------------------------------------------------------------------------
// Syntactic classes

enum class SyntacticClass {
  AtomicConj,
  PositiveOpen,
  OpenHorn,
  OpenStrictHorn,
  Open,
  PP,
  ExistPositive,
  ExistHorn,
  Existential
};

inline const std::vector<SyntacticClass>& all_classes() {
  static const std::vector<SyntacticClass> v = {
      SyntacticClass::AtomicConj, SyntacticClass::PositiveOpen, SyntacticClass::OpenHorn,
      SyntacticClass::OpenStrictHorn, SyntacticClass::Open, SyntacticClass::PP,
      SyntacticClass::ExistPositive, SyntacticClass::ExistHorn, SyntacticClass::Existential};
  return v;
}

inline std::string class_name(SyntacticClass c) {
  switch (c) {
    case SyntacticClass::AtomicConj: return "atomic-conj";
    case SyntacticClass::PositiveOpen: return "pos-open";
    case SyntacticClass::OpenHorn: return "open-horn";
    case SyntacticClass::OpenStrictHorn: return "open-strict-horn";
    case SyntacticClass::Open: return "open";
    case SyntacticClass::PP: return "pp";
    case SyntacticClass::ExistPositive: return "exist-pos";
    case SyntacticClass::ExistHorn: return "exist-horn";
    case SyntacticClass::Existential: return "exist";
  }
  return "?";
}

inline SyntacticClass parse_class(std::string_view s) {
  for (auto c : all_classes())
    if (class_name(c) == s) return c;
  throw Error("unknown formula class '" + std::string(s) + "'");
}

inline bool is_existential_class(SyntacticClass c) {
  return c == SyntacticClass::PP || c == SyntacticClass::ExistPositive || c == SyntacticClass::ExistHorn ||
         c == SyntacticClass::Existential;
}

// Open class whose existential closure is `c`; identity on open classes.
inline SyntacticClass open_part(SyntacticClass c) {
  switch (c) {
    case SyntacticClass::PP: return SyntacticClass::AtomicConj;
    case SyntacticClass::ExistPositive: return SyntacticClass::PositiveOpen;
    case SyntacticClass::ExistHorn: return SyntacticClass::OpenHorn;
    case SyntacticClass::Existential: return SyntacticClass::Open;
    default: return c;
  }
}

// Pairs (smaller, larger) of the inclusion order between the classes.
inline bool class_included(SyntacticClass a, SyntacticClass b) {
  using C = SyntacticClass;
  auto open_le = [](C x, C y) {
    if (x == y) return true;
    switch (x) {
      case C::AtomicConj: return true;
      case C::PositiveOpen: return y == C::Open;
      case C::OpenStrictHorn: return y == C::OpenHorn || y == C::Open;
      case C::OpenHorn: return y == C::Open;
      default: return false;
    }
  };
  bool ea = is_existential_class(a), eb = is_existential_class(b);
  if (ea && !eb) return false;
  C oa = open_part(a), ob = open_part(b);
  if (oa == C::OpenStrictHorn && eb) return ob == C::OpenHorn || ob == C::Open;
  return open_le(oa, ob);
}

namespace detail {

inline void flatten_into(const Formula& f, FormulaKind k, std::vector<Formula>& out) {
  if (f.kind() == k) {
    for (const auto& c : f.children()) flatten_into(c, k, out);
  } else {
    out.push_back(f);
  }
}

inline std::vector<Formula> flatten(const Formula& f, FormulaKind k) {
  std::vector<Formula> out;
  flatten_into(f, k, out);
  return out;
}

inline bool is_literal(const Formula& f) {
  return f.is_atomic() || (f.kind() == FormulaKind::Not && f.children()[0].is_atomic());
}

inline bool is_atomic_conj(const Formula& f) {
  for (const auto& c : flatten(f, FormulaKind::And))
    if (!c.is_atomic()) return false;
  return true;
}

inline bool is_positive_open(const Formula& f) {
  for (const auto& d : flatten(f, FormulaKind::Or))
    if (!is_atomic_conj(d)) return false;
  return true;
}

// Number of positive literals of a Horn clause, or -1 if not a clause.
inline int horn_clause_positives(const Formula& f) {
  if (f.kind() == FormulaKind::Implies) {
    if (!is_atomic_conj(f.children()[0])) return -1;
    return f.children()[1].is_atomic() ? 1 : -1;
  }
  int pos = 0;
  for (const auto& l : flatten(f, FormulaKind::Or)) {
    if (!is_literal(l)) return -1;
    if (l.is_atomic()) ++pos;
  }
  return pos <= 1 ? pos : -1;
}

inline bool is_open_horn(const Formula& f, bool strict) {
  for (const auto& c : flatten(f, FormulaKind::And)) {
    int p = horn_clause_positives(c);
    if (p < 0 || (strict && p != 1)) return false;
  }
  return true;
}

inline bool is_open(const Formula& f) {
  if (f.is_atomic()) return true;
  if (f.kind() == FormulaKind::Exists || f.kind() == FormulaKind::Forall) return false;
  for (const auto& c : f.children())
    if (!is_open(c)) return false;
  return true;
}

inline const Formula& strip_exists(const Formula& f) {
  const Formula* p = &f;
  while (p->kind() == FormulaKind::Exists) p = &p->children()[0];
  return *p;
}

inline bool open_member(const Formula& f, SyntacticClass c) {
  switch (c) {
    case SyntacticClass::AtomicConj: return is_atomic_conj(f);
    case SyntacticClass::PositiveOpen: return is_positive_open(f);
    case SyntacticClass::OpenHorn: return is_open_horn(f, false);
    case SyntacticClass::OpenStrictHorn: return is_open_horn(f, true);
    case SyntacticClass::Open: return is_open(f);
    default: return false;
  }
}

}  // namespace detail

inline bool in_class(const Formula& f, SyntacticClass c) {
  if (is_existential_class(c)) return detail::open_member(detail::strip_exists(f), open_part(c));
  return detail::open_member(f, c);
}

inline std::vector<SyntacticClass> classify(const Formula& f) {
  std::vector<SyntacticClass> out;
  for (auto c : all_classes())
    if (in_class(f, c)) out.push_back(c);
  return out;
}

// ---------------------------------------------------------------------------
// Model checking

class CompiledFormula {
 public:
  // `free` lists the variables read from the assignment, in order.
  CompiledFormula(const FiniteStructure& a, const Formula& f, std::vector<std::string> free)
      : a_(a), slots_(std::move(free)) {
    for (const auto& v : f.free_variables())
      if (std::find(slots_.begin(), slots_.end(), v) == slots_.end())
        throw Error("free variable '" + v + "' is not covered by the assignment");
    nfree_ = slots_.size();
    add_bound(f);
    root_ = build(f);
  }

  bool eval(std::span<const Element> assignment) const {
    if (assignment.size() != nfree_) throw Error("assignment has the wrong length");
    env_.assign(slots_.size(), 0);
    std::copy(assignment.begin(), assignment.end(), env_.begin());
    return run(root_);
  }

 private:
  struct CNode {
    FormulaKind kind;
    std::vector<CompiledTerm> terms;
    std::size_t rel = 0;
    std::vector<std::size_t> kids;
    std::vector<std::size_t> slots;
  };

  void add_bound(const Formula& f) {
    for (const auto& v : f.bound())
      if (std::find(slots_.begin(), slots_.end(), v) == slots_.end()) slots_.push_back(v);
    for (const auto& c : f.children()) add_bound(c);
  }

  std::size_t build(const Formula& f) {
    CNode n{f.kind(), {}, 0, {}, {}};
    if (f.is_atomic()) {
      for (const auto& t : f.terms()) n.terms.emplace_back(a_.signature(), t, slots_);
      if (f.kind() == FormulaKind::Rel) {
        auto r = a_.signature().find_relation(f.relation());
        if (!r) throw Error("unknown relation symbol '" + f.relation() + "'");
        if (a_.signature().relations()[*r].arity != f.terms().size())
          throw Error("relation '" + f.relation() + "' applied with the wrong arity");
        n.rel = *r;
      }
    } else {
      for (const auto& v : f.bound())
        n.slots.push_back(static_cast<std::size_t>(std::find(slots_.begin(), slots_.end(), v) - slots_.begin()));
      for (const auto& c : f.children()) n.kids.push_back(build(c));
    }
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  bool quantify(const CNode& n, std::size_t i, bool exists) const {
    if (i == n.slots.size()) return run(n.kids[0]);
    std::size_t slot = n.slots[i];
    Element saved = env_[slot];
    bool result = !exists;
    for (Element e = 0; e < a_.size(); ++e) {
      env_[slot] = e;
      bool r = quantify(n, i + 1, exists);
      if (r == exists) {
        result = exists;
        break;
      }
    }
    env_[slot] = saved;
    return result;
  }

  bool run(std::size_t idx) const {
    const CNode& n = nodes_[idx];
    switch (n.kind) {
      case FormulaKind::Eq:
        return n.terms[0].eval(a_, env_, scratch_) == n.terms[1].eval(a_, env_, scratch_);
      case FormulaKind::Rel: {
        Tuple t;
        for (const auto& ct : n.terms) t.push_back(ct.eval(a_, env_, scratch_));
        return a_.holds(n.rel, t);
      }
      case FormulaKind::Not: return !run(n.kids[0]);
      case FormulaKind::And:
        for (auto k : n.kids)
          if (!run(k)) return false;
        return true;
      case FormulaKind::Or:
        for (auto k : n.kids)
          if (run(k)) return true;
        return false;
      case FormulaKind::Implies: return !run(n.kids[0]) || run(n.kids[1]);
      case FormulaKind::Exists: return quantify(n, 0, true);
      case FormulaKind::Forall: return quantify(n, 0, false);
    }
    return false;
  }

  const FiniteStructure& a_;
  std::vector<std::string> slots_;
  std::size_t nfree_ = 0;
  std::vector<CNode> nodes_;
  std::size_t root_ = 0;
  mutable std::vector<Element> env_;
  mutable std::vector<Element> scratch_;
};

inline bool evaluate(const FiniteStructure& a, const Formula& f, const std::vector<std::string>& vars,
                     std::span<const Element> values) {
  for (Element v : values)
    if (v >= a.size()) throw Error("assignment value out of range");
  return CompiledFormula(a, f, vars).eval(values);
}

inline bool evaluate(const FiniteStructure& a, const Formula& f, const std::map<std::string, Element>& assignment) {
  std::vector<std::string> vars;
  Tuple vals;
  for (const auto& [k, v] : assignment) {
    vars.push_back(k);
    vals.push_back(v);
  }
  return evaluate(a, f, vars, vals);
}

// ---------------------------------------------------------------------------
// Targets and definability by a given formula

struct Target {
  enum class Kind { Relation, Functions };
  Kind kind = Kind::Relation;
  std::vector<std::string> symbols;

  static Target relation(std::string r) { return {Kind::Relation, {std::move(r)}}; }
  static Target functions(std::vector<std::string> fs) { return {Kind::Functions, std::move(fs)}; }

  bool operator==(const Target&) const = default;
};

// Arity n of the target: the relation arity, or the common function arity.
inline std::size_t target_input_arity(const Signature& sig, const Target& t) {
  if (t.symbols.empty()) throw Error("empty target");
  if (t.kind == Target::Kind::Relation) {
    auto r = sig.find_relation(t.symbols[0]);
    if (!r) throw Error("target relation '" + t.symbols[0] + "' is not interpreted");
    return sig.relations()[*r].arity;
  }
  std::optional<std::size_t> n;
  for (const auto& f : t.symbols) {
    auto op = sig.find_operation(f);
    if (!op) throw Error("target function '" + f + "' is not interpreted");
    std::size_t ar = sig.operations()[*op].arity;
    if (n && *n != ar) throw Error("target functions must share one arity");
    n = ar;
  }
  return *n;
}

// Variable names of the target's free positions: x1..xn, then z1..zm.
inline std::vector<std::string> target_variables(const Signature& sig, const Target& t) {
  std::size_t n = target_input_arity(sig, t);
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("x" + std::to_string(i + 1));
  if (t.kind == Target::Kind::Functions)
    for (std::size_t i = 0; i < t.symbols.size(); ++i) v.push_back("z" + std::to_string(i + 1));
  return v;
}

// Membership bitmap of the target (graph) relation over A^r in lexicographic order.
inline std::vector<bool> target_membership(const FiniteStructure& a, const Target& t) {
  std::size_t n = target_input_arity(a.signature(), t);
  if (t.kind == Target::Kind::Relation) {
    auto r = *a.signature().find_relation(t.symbols[0]);
    std::size_t cells = checked_pow(a.size(), n, std::size_t{1} << 26);
    std::vector<bool> out(cells, false);
    for (const auto& tup : a.relation(r).tuples()) {
      std::size_t i = 0;
      for (Element e : tup) i = i * a.size() + e;
      out[i] = true;
    }
    return out;
  }
  std::size_t m = t.symbols.size();
  std::size_t cells = checked_pow(a.size(), n + m, std::size_t{1} << 26);
  std::vector<bool> out(cells, false);
  std::vector<std::size_t> ops;
  for (const auto& f : t.symbols) ops.push_back(*a.signature().find_operation(f));
  Tuple x(n, 0);
  do {
    std::size_t i = 0;
    for (Element e : x) i = i * a.size() + e;
    for (auto op : ops) i = i * a.size() + a.apply(op, x);
    out[i] = true;
  } while (next_tuple(x, a.size()));
  return out;
}

struct DefinesReport {
  bool holds = true;
  std::size_t member = 0;
  Tuple tuple;
  bool in_target = false;
  explicit operator bool() const { return holds; }
};

inline void check_target_arity(const Formula& f, const std::vector<std::string>& vars) {
  for (const auto& v : f.free_variables())
    if (std::find(vars.begin(), vars.end(), v) == vars.end())
      throw Error("free variable '" + v + "' does not match the target's arity (allowed: " +
                  join_strings(vars, ",") + ")");
}

inline DefinesReport defines(const std::vector<FiniteStructure>& k, const Formula& f, const Target& t) {
  DefinesReport rep;
  for (std::size_t m = 0; m < k.size(); ++m) {
    const auto& a = k[m];
    auto vars = target_variables(a.signature(), t);
    check_target_arity(f, vars);
    auto member = target_membership(a, t);
    CompiledFormula cf(a, f, vars);
    Tuple x(vars.size(), 0);
    std::size_t i = 0;
    do {
      if (cf.eval(x) != member[i]) {
        rep.holds = false;
        rep.member = m;
        rep.tuple = x;
        rep.in_target = member[i];
        return rep;
      }
      ++i;
    } while (next_tuple(x, a.size()));
  }
  return rep;
}

}  // namespace findef
