#pragma once

#include <algorithm>
#include <cctype>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "findef/structure.hpp"

namespace findef {

// Immutable term tree; subterms may be shared.
class Term {
 public:
  Term() : Term(variable("x1")) {}

  static Term variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->symbol = std::move(name);
    n->is_var = true;
    return Term(std::move(n));
  }
  static Term var(std::size_t index) { return variable("x" + std::to_string(index + 1)); }
  static Term apply(std::string symbol, std::vector<Term> args = {}) {
    auto n = std::make_shared<Node>();
    n->symbol = std::move(symbol);
    n->args = std::move(args);
    std::size_t d = 0;
    for (const auto& a : n->args) d = std::max(d, a.depth() + 1);
    n->depth = d;
    return Term(std::move(n));
  }

  bool is_variable() const { return node_->is_var; }
  const std::string& symbol() const { return node_->symbol; }
  const std::vector<Term>& args() const { return node_->args; }
  std::size_t depth() const { return node_->depth; }
  const void* id() const { return node_.get(); }

  // Tree size, saturating at `cap`.
  std::size_t size(std::size_t cap = SIZE_MAX) const {
    std::size_t s = 1;
    for (const auto& a : node_->args) {
      s += a.size(cap);
      if (s >= cap) return cap;
    }
    return s;
  }
  // Distinct nodes of the shared DAG.
  std::size_t dag_size() const {
    std::unordered_map<const void*, bool> seen;
    std::vector<const Term*> stack{this};
    while (!stack.empty()) {
      const Term* t = stack.back();
      stack.pop_back();
      if (!seen.emplace(t->id(), true).second) continue;
      for (const auto& a : t->args()) stack.push_back(&a);
    }
    return seen.size();
  }

  std::string to_string() const {
    std::string out;
    print(out);
    return out;
  }
  void print(std::string& out) const {
    if (node_->is_var || node_->args.empty()) {
      out += node_->symbol;
      return;
    }
    out += '(';
    out += node_->symbol;
    for (const auto& a : node_->args) {
      out += ' ';
      a.print(out);
    }
    out += ')';
  }

  void collect_variables(std::vector<std::string>& out) const {
    if (node_->is_var) {
      if (std::find(out.begin(), out.end(), node_->symbol) == out.end()) out.push_back(node_->symbol);
      return;
    }
    for (const auto& a : node_->args) a.collect_variables(out);
  }

  Term substitute(const std::unordered_map<std::string, Term>& s) const {
    if (node_->is_var) {
      auto it = s.find(node_->symbol);
      return it == s.end() ? *this : it->second;
    }
    if (node_->args.empty()) return *this;
    std::vector<Term> a;
    for (const auto& x : node_->args) a.push_back(x.substitute(s));
    return apply(node_->symbol, std::move(a));
  }

  friend bool operator==(const Term& a, const Term& b) {
    if (a.node_ == b.node_) return true;
    if (a.node_->is_var != b.node_->is_var || a.node_->symbol != b.node_->symbol ||
        a.node_->args.size() != b.node_->args.size())
      return false;
    for (std::size_t i = 0; i < a.node_->args.size(); ++i)
      if (!(a.node_->args[i] == b.node_->args[i])) return false;
    return true;
  }

 private:
  struct Node {
    std::string symbol;
    bool is_var = false;
    std::vector<Term> args;
    std::size_t depth = 0;
  };
  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Flat post-order program for a term DAG against one signature.
class CompiledTerm {
 public:
  // `slots` names the variables; variable i of the program reads slot index.
  CompiledTerm(const Signature& sig, const Term& t, const std::vector<std::string>& slots) {
    std::unordered_map<const void*, std::size_t> done;
    root_ = build(sig, t, slots, done);
  }

  Element eval(const FiniteStructure& a, std::span<const Element> env, std::vector<Element>& scratch) const {
    scratch.resize(code_.size());
    Element buf[16];
    std::vector<Element> big;
    for (std::size_t i = 0; i < code_.size(); ++i) {
      const Instr& in = code_[i];
      if (in.op < 0) {
        scratch[i] = env[in.slot];
        continue;
      }
      std::span<const Element> args;
      if (in.args.size() <= 16) {
        for (std::size_t j = 0; j < in.args.size(); ++j) buf[j] = scratch[in.args[j]];
        args = std::span<const Element>(buf, in.args.size());
      } else {
        big.resize(in.args.size());
        for (std::size_t j = 0; j < in.args.size(); ++j) big[j] = scratch[in.args[j]];
        args = big;
      }
      scratch[i] = a.apply(static_cast<std::size_t>(in.op), args);
    }
    return scratch[root_];
  }

 private:
  struct Instr {
    int op = -1;
    std::size_t slot = 0;
    std::vector<std::size_t> args;
  };

  std::size_t build(const Signature& sig, const Term& t, const std::vector<std::string>& slots,
                    std::unordered_map<const void*, std::size_t>& done) {
    auto it = done.find(t.id());
    if (it != done.end()) return it->second;
    Instr in;
    if (t.is_variable()) {
      auto p = std::find(slots.begin(), slots.end(), t.symbol());
      if (p == slots.end()) throw Error("variable '" + t.symbol() + "' is not assigned");
      in.slot = static_cast<std::size_t>(p - slots.begin());
    } else {
      auto op = sig.find_operation(t.symbol());
      if (!op) throw Error("unknown operation symbol '" + t.symbol() + "'");
      if (sig.operations()[*op].arity != t.args().size())
        throw Error("operation '" + t.symbol() + "' applied to " + std::to_string(t.args().size()) +
                    " arguments, arity is " + std::to_string(sig.operations()[*op].arity));
      in.op = static_cast<int>(*op);
      for (const auto& a : t.args()) in.args.push_back(build(sig, a, slots, done));
    }
    code_.push_back(std::move(in));
    done[t.id()] = code_.size() - 1;
    return code_.size() - 1;
  }

  std::vector<Instr> code_;
  std::size_t root_ = 0;
};

inline Element evaluate_term(const FiniteStructure& a, const Term& t, const std::vector<std::string>& names,
                             std::span<const Element> values) {
  for (Element v : values)
    if (v >= a.size()) throw Error("assignment value out of range");
  CompiledTerm c(a.signature(), t, names);
  std::vector<Element> scratch;
  return c.eval(a, values, scratch);
}

// Variables x1..xk read assignment[0..k-1].
inline Element evaluate_term(const FiniteStructure& a, const Term& t, std::span<const Element> assignment) {
  std::vector<std::string> vars;
  t.collect_variables(vars);
  for (const auto& v : vars) {
    std::size_t idx = 0;
    bool ok = v.size() > 1 && v[0] == 'x';
    for (std::size_t i = 1; ok && i < v.size(); ++i) ok = std::isdigit(static_cast<unsigned char>(v[i]));
    if (ok) idx = std::stoul(v.substr(1));
    if (!ok || idx == 0) throw Error("variable '" + v + "' is not of the form x<i>");
    if (idx > assignment.size())
      throw Error("variable '" + v + "' out of range for an assignment of length " +
                  std::to_string(assignment.size()));
  }
  std::vector<std::string> names;
  for (std::size_t i = 0; i < assignment.size(); ++i) names.push_back("x" + std::to_string(i + 1));
  return evaluate_term(a, t, names, assignment);
}

inline Element evaluate_term(const FiniteStructure& a, const Term& t, std::initializer_list<Element> assignment) {
  return evaluate_term(a, t, std::span<const Element>(assignment.begin(), assignment.size()));
}

// Values of t over all of A^n in lexicographic order, variables x1..xn.
inline std::vector<Element> term_table(const FiniteStructure& a, const Term& t, std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
  CompiledTerm c(a.signature(), t, names);
  std::vector<Element> scratch, out;
  Tuple tup(n, 0);
  do {
    out.push_back(c.eval(a, tup, scratch));
  } while (next_tuple(tup, a.size()));
  return out;
}

}  // namespace findef
