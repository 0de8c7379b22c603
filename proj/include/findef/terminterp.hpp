#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "findef/clone.hpp"
#include "findef/definability.hpp"

namespace findef {

enum class CaseMode { Open, Positive };

inline std::string case_mode_name(CaseMode m) { return m == CaseMode::Open ? "open" : "pos"; }

inline CaseMode parse_case_mode(std::string_view s) {
  if (s == "open") return CaseMode::Open;
  if (s == "pos" || s == "positive") return CaseMode::Positive;
  throw Error("unknown case class '" + std::string(s) + "' (expected open|pos)");
}

struct InterpolationProblem {
  std::vector<FiniteStructure> k;
  std::string f;
  std::optional<Signature> l;  // defaults to every symbol except f
  CaseMode mode = CaseMode::Open;
  SearchOptions search;
  Bounds bounds;
};

struct Case {
  Term term;
  Formula condition;
};

struct CaseDefinition {
  std::size_t arity = 0;
  std::vector<Case> cases;
  std::optional<Formula> graph;  // the formula phi(x, z) the conditions come from
};

// Condition (a) fails: Sg(x) in a member is not closed under f. Condition (b)
// fails: a map between substructures does not preserve f.
struct CaseFailure {
  enum class Condition { Subuniverse, Maps } condition = Condition::Subuniverse;
  std::size_t member = 0;
  Tuple generators;
  std::vector<Element> subuniverse;
  Element value = 0;
  std::optional<Counterexample> map;
};

struct CasesResult {
  VerdictKind kind = VerdictKind::ResourceExceeded;
  std::optional<CaseDefinition> cases;
  std::optional<CaseFailure> failure;
  std::string reason;
};

namespace detail {

inline Signature problem_language(const InterpolationProblem& p) {
  if (p.k.empty()) throw Error("empty class");
  if (!p.k[0].signature().find_operation(p.f)) throw Error("target function '" + p.f + "' is not interpreted");
  Signature l = p.l ? *p.l : p.k[0].signature().without({p.f});
  if (l.has_symbol(p.f)) throw Error("target '" + p.f + "' must not belong to the sublanguage");
  return l;
}

inline std::size_t problem_arity(const InterpolationProblem& p) {
  std::optional<std::size_t> n;
  for (const auto& a : p.k) {
    auto op = a.signature().find_operation(p.f);
    if (!op) throw Error("target function '" + p.f + "' is not interpreted in " + a.name());
    std::size_t ar = a.signature().operations()[*op].arity;
    if (n && *n != ar) throw Error("target function arity differs between members");
    n = ar;
  }
  return *n;
}

inline std::vector<FiniteStructure> reducts(const std::vector<FiniteStructure>& k, const Signature& l) {
  std::vector<FiniteStructure> out;
  for (const auto& a : k) out.push_back(reduct(a, l));
  return out;
}

}  // namespace detail

// Value of the case definition at x: the term of the first case that holds.
inline std::optional<Element> case_value(const FiniteStructure& a, const CaseDefinition& cd, const Tuple& x) {
  auto vars = variable_names(cd.arity);
  for (const auto& c : cd.cases)
    if (evaluate(a, c.condition, vars, x)) return evaluate_term(a, c.term, vars, x);
  return std::nullopt;
}

// Coverage and per-case agreement with f, over every tuple of every member.
inline std::string case_definition_problem(const std::vector<FiniteStructure>& k, const std::string& f,
                                           const CaseDefinition& cd) {
  auto vars = variable_names(cd.arity);
  for (std::size_t m = 0; m < k.size(); ++m) {
    const auto& a = k[m];
    Tuple x(cd.arity, 0);
    do {
      Element want = a.apply(f, x);
      bool covered = false;
      for (std::size_t i = 0; i < cd.cases.size(); ++i) {
        if (!evaluate(a, cd.cases[i].condition, vars, x)) continue;
        covered = true;
        if (evaluate_term(a, cd.cases[i].term, vars, x) != want)
          return "case " + std::to_string(i + 1) + " disagrees with " + f + " in " + a.name();
      }
      if (!covered) return "no case covers a tuple of " + a.name();
    } while (next_tuple(x, a.size()));
  }
  return "";
}

inline CasesResult find_term_by_cases(const InterpolationProblem& p) {
  Signature l = detail::problem_language(p);
  std::size_t n = detail::problem_arity(p);
  auto kl = detail::reducts(p.k, l);
  CasesResult out;

  for (std::size_t m = 0; m < p.k.size(); ++m) {
    const auto& a = p.k[m];
    Tuple x(n, 0);
    do {
      Element v = a.apply(p.f, x);
      auto s = generated_subuniverse(kl[m], x);
      if (!s.contains(v)) {
        out.kind = VerdictKind::NotDefinable;
        out.reason = "a subuniverse is not closed under " + p.f;
        out.failure = CaseFailure{CaseFailure::Condition::Subuniverse, m, x, s.elements(), v, std::nullopt};
        return out;
      }
    } while (next_tuple(x, a.size()));
  }

  DefinabilityQuery q;
  q.k = p.k;
  q.l = l;
  q.target = Target::functions({p.f});
  q.cls = p.mode == CaseMode::Open ? SyntacticClass::Open : SyntacticClass::PositiveOpen;
  q.bounds = p.bounds;
  auto v = check(q);
  if (v.kind == VerdictKind::ResourceExceeded) {
    out.reason = v.reason;
    return out;
  }
  if (v.kind == VerdictKind::NotDefinable) {
    out.kind = VerdictKind::NotDefinable;
    out.reason = v.reason;
    CaseFailure cf;
    cf.condition = CaseFailure::Condition::Maps;
    cf.map = v.counterexample;
    out.failure = cf;
    return out;
  }

  TermOpTable tab(kl, n, p.search.depth_budget, p.search.max_rows);
  Tuple want = tab.row_of([&](std::size_t m, const Tuple& x) { return p.k[m].apply(p.f, x); });
  std::vector<bool> covered(want.size(), false);
  std::size_t left = want.size();
  std::vector<std::size_t> chosen;
  while (left > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      auto row = tab.row(r);
      std::size_t gain = 0;
      for (std::size_t c = 0; c < want.size(); ++c) gain += !covered[c] && row[c] == want[c];
      if (gain > best_gain) {
        best = r;
        best_gain = gain;
      }
    }
    if (best_gain == 0) {
      if (tab.fixpoint()) throw Error("term rows do not cover " + p.f + " although its subuniverses are closed");
      out.reason = "term operation table exceeded its budget before covering " + p.f;
      return out;
    }
    chosen.push_back(best);
    auto row = tab.row(best);
    for (std::size_t c = 0; c < want.size(); ++c)
      if (!covered[c] && row[c] == want[c]) {
        covered[c] = true;
        --left;
      }
  }

  CaseDefinition cd;
  cd.arity = n;
  cd.graph = *v.witness;
  for (auto r : chosen) {
    Term t = tab.witness(r);
    cd.cases.push_back({t, v.witness->substitute({{"z1", t}})});
  }
  if (auto bad = case_definition_problem(p.k, p.f, cd); !bad.empty()) throw Error("case definition failed: " + bad);
  out.kind = VerdictKind::Definable;
  out.cases = std::move(cd);
  return out;
}

// ---------------------------------------------------------------------------
// Merging cases with a discriminator term

struct MergeOptions {
  std::size_t depth_budget = 4;
  std::size_t max_rows = 4096;
  std::size_t max_pair_checks = 1u << 24;
};

// p = q (equal) or p != q (!equal) is equivalent to a condition over K.
struct Equation {
  Term p, q;
  bool equal = true;
};

namespace detail {

inline std::vector<bool> condition_vector(const TermOpTable& tab, const Formula& phi) {
  auto vars = variable_names(tab.arity());
  std::vector<bool> out;
  for (const auto& c : tab.columns()) out.push_back(evaluate(tab.members()[c.member], phi, vars, c.point));
  return out;
}

inline std::optional<Equation> find_equation(const TermOpTable& tab, const std::vector<bool>& cond,
                                             std::size_t& budget) {
  std::size_t w = cond.size();
  for (int equal = 1; equal >= 0; --equal) {
    // Rows that can pair up agree on every coordinate where p = q is wanted.
    std::map<std::vector<Element>, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      auto row = tab.row(r);
      std::vector<Element> key;
      for (std::size_t c = 0; c < w; ++c)
        if (cond[c] == bool(equal)) key.push_back(row[c]);
      groups[key].push_back(r);
    }
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (const auto& [key, rs] : groups)
      for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = i; j < rs.size(); ++j) {
          if (budget == 0) return std::nullopt;
          --budget;
          auto a = tab.row(rs[i]), b = tab.row(rs[j]);
          bool ok = true;
          for (std::size_t c = 0; c < w && ok; ++c)
            if (cond[c] != bool(equal)) ok = a[c] != b[c];
          if (ok && (!best || std::make_pair(rs[i], rs[j]) < *best)) best = {rs[i], rs[j]};
        }
    if (best) return Equation{tab.witness(best->first), tab.witness(best->second), bool(equal)};
  }
  return std::nullopt;
}

}  // namespace detail

// Equation equivalent over K to phi(x1..xn), searched over pairs of term rows.
inline std::optional<Equation> equational_form(const std::vector<FiniteStructure>& k, std::size_t n,
                                               const Formula& phi, const MergeOptions& mo = {}) {
  TermOpTable tab(k, n, mo.depth_budget, mo.max_rows);
  std::size_t budget = mo.max_pair_checks;
  auto e = detail::find_equation(tab, detail::condition_vector(tab, phi), budget);
  if (!e && !tab.fixpoint()) throw ResourceExceeded("equation search", tab.rows());
  return e;
}

// Folds the cases left to right: (s | c) and (t_i | phi_i) become
// D(p, q, s, t_i) where p = q is equivalent to c, and the condition becomes c or phi_i.
inline Term merge_cases_discriminator(const std::vector<FiniteStructure>& k, const CaseDefinition& cd, const Term& t,
                                      const MergeOptions& mo = {}) {
  if (cd.cases.empty()) throw Error("no cases to merge");
  if (!is_discriminator_term(k, t)) throw Error("term " + t.to_string() + " is not a discriminator for the class");
  if (cd.cases.size() == 1) return cd.cases[0].term;
  Term d4 = quaternary_discriminator(t);
  auto quad = [&](const Term& a, const Term& b, const Term& c, const Term& e) {
    return d4.substitute({{"x1", a}, {"x2", b}, {"x3", c}, {"x4", e}});
  };
  TermOpTable tab(k, cd.arity, mo.depth_budget, mo.max_rows);
  std::size_t budget = mo.max_pair_checks;
  Term acc = cd.cases[0].term;
  auto cond = detail::condition_vector(tab, cd.cases[0].condition);
  for (std::size_t i = 1; i < cd.cases.size(); ++i) {
    auto e = detail::find_equation(tab, cond, budget);
    if (!e) {
      if (tab.fixpoint() && budget > 0) throw Error("case condition has no equational equivalent");
      throw ResourceExceeded("equation search", tab.rows());
    }
    const Term& ti = cd.cases[i].term;
    acc = e->equal ? quad(e->p, e->q, acc, ti) : quad(e->p, e->q, ti, acc);
    auto next = detail::condition_vector(tab, cd.cases[i].condition);
    for (std::size_t c = 0; c < cond.size(); ++c) cond[c] = cond[c] || next[c];
  }
  auto vars = variable_names(cd.arity);
  for (const auto& a : k) {
    CompiledTerm ct(a.signature(), acc, vars);
    std::vector<Element> scratch;
    Tuple x(cd.arity, 0);
    do {
      auto want = case_value(a, cd, x);
      if (want && ct.eval(a, x, scratch) != *want) throw Error("merged term disagrees with the cases");
    } while (next_tuple(x, a.size()));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Pixley

struct PixleyReport {
  TermSearch discriminator;
  bool quasiprimal = false;
  // The discriminator as a target: conditions (a) and (b) with homomorphisms.
  CasesResult witness;
};

inline FiniteStructure with_discriminator(const FiniteStructure& a, const std::string& name = "d") {
  if (a.signature().has_symbol(name)) throw Error("symbol '" + name + "' already in use");
  Tuple x(3, 0);
  std::vector<Element> tab;
  do tab.push_back(x[0] == x[1] ? x[2] : x[0]);
  while (next_tuple(x, a.size()));
  return with_operation(a, name, 3, std::move(tab));
}

inline PixleyReport pixley_check(const std::vector<FiniteStructure>& k, const SearchOptions& so = {}) {
  PixleyReport r;
  r.discriminator = find_discriminator_term(k, so);
  if (r.discriminator) r.quasiprimal = is_discriminator_term(k, *r.discriminator.term);
  InterpolationProblem p;
  for (const auto& a : k) p.k.push_back(with_discriminator(a));
  p.l = k[0].signature();
  p.mode = CaseMode::Positive;
  p.f = "d";
  p.search = so;
  r.witness = find_term_by_cases(p);
  return r;
}

// ---------------------------------------------------------------------------
// Baker-Pixley

struct BakerPixleyFailure {
  std::size_t left = 0, right = 0;
  Tuple a, b;  // generators (a_i, b_i) of S <= A x B
  std::vector<std::pair<Element, Element>> subuniverse;
  std::pair<Element, Element> value;  // (f(a), f(b)), outside S
};

struct BakerPixleyResult {
  std::optional<Term> majority;
  std::optional<Term> term;        // free-algebra row scan
  std::optional<Term> interpolant;  // majority induction over two-point interpolants
  std::optional<BakerPixleyFailure> failure;
  SearchStatus status = SearchStatus::NotFound;
};

struct BakerPixleyOptions {
  SearchOptions search;
  std::size_t max_induction_points = 10;
};

namespace detail {

inline Term majority_of(const Term& m, const Term& a, const Term& b, const Term& c) {
  return m.substitute({{"x1", a}, {"x2", b}, {"x3", c}});
}

struct Induction {
  const std::vector<FiniteStructure>& k;
  const std::vector<CloneColumn>& cols;
  const Tuple& want;
  const Term& m;
  std::size_t n;
  SearchOptions so;
  std::map<std::pair<std::size_t, std::size_t>, Term> pairs;
  std::map<std::vector<std::size_t>, Term> memo;

  Term two_point(std::size_t i, std::size_t j) {
    auto key = std::make_pair(i, j);
    if (auto it = pairs.find(key); it != pairs.end()) return it->second;
    auto s = interpolate(
        k, n,
        [&](std::size_t mem, const Tuple& x) -> std::optional<Element> {
          if (mem == cols[i].member && x == cols[i].point) return want[i];
          if (mem == cols[j].member && x == cols[j].point) return want[j];
          return std::nullopt;
        },
        so);
    if (!s) throw Error("no two-point interpolant although the product hypothesis holds");
    return pairs.emplace(key, *s.term).first->second;
  }

  // (I_m): t_j interpolates pts without its j-th entry; M(t_1, t_2, t_3) fits all of pts.
  Term run(const std::vector<std::size_t>& pts) {
    if (pts.size() == 1) return two_point(pts[0], pts[0]);
    if (pts.size() == 2) return two_point(pts[0], pts[1]);
    if (auto it = memo.find(pts); it != memo.end()) return it->second;
    std::vector<Term> t;
    for (std::size_t j = 0; j < 3; ++j) {
      auto rest = pts;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
      t.push_back(run(rest));
    }
    return memo.emplace(pts, majority_of(m, t[0], t[1], t[2])).first->second;
  }
};

}  // namespace detail

inline BakerPixleyResult baker_pixley_term(const InterpolationProblem& p, const BakerPixleyOptions& bo = {}) {
  Signature l = detail::problem_language(p);
  std::size_t n = detail::problem_arity(p);
  auto kl = detail::reducts(p.k, l);
  BakerPixleyResult out;
  auto maj = find_majority_term(kl, bo.search);
  if (!maj) throw Error("no majority term for the class over the sublanguage");
  out.majority = maj.term;

  auto ids = detail::distinct_members(kl);
  for (std::size_t ii = 0; ii < ids.size(); ++ii)
    for (std::size_t jj = ii; jj < ids.size(); ++jj) {
      std::size_t i = ids[ii], j = ids[jj];
      const auto &a = kl[i], &b = kl[j];
      Tuple x(n, 0);
      do {
        Tuple y(n, 0);
        do {
          ProductClosure pc({{&a, x}, {&b, y}});
          Element fx = p.k[i].apply(p.f, x), fy = p.k[j].apply(p.f, y);
          Element want[2] = {fx, fy};
          if (pc.find(std::span<const Element>(want, 2))) continue;
          BakerPixleyFailure f{i, j, x, y, {}, {fx, fy}};
          for (std::size_t r = 0; r < pc.size(); ++r) f.subuniverse.emplace_back(pc.value(r, 0), pc.value(r, 1));
          std::sort(f.subuniverse.begin(), f.subuniverse.end());
          out.failure = std::move(f);
          return out;
        } while (next_tuple(y, b.size()));
      } while (next_tuple(x, a.size()));
    }

  auto s = find_representing_term(p.k, p.f, l, bo.search);
  out.status = s.status;
  if (!s) return out;
  out.term = s.term;

  std::vector<CloneColumn> cols;
  Tuple want;
  for (auto m : ids) {
    Tuple x(n, 0);
    do {
      cols.push_back({m, x});
      want.push_back(p.k[m].apply(p.f, x));
    } while (next_tuple(x, kl[m].size()));
  }
  if (cols.size() <= bo.max_induction_points) {
    detail::Induction ind{kl, cols, want, *maj.term, n, bo.search, {}, {}};
    std::vector<std::size_t> pts(cols.size());
    for (std::size_t c = 0; c < pts.size(); ++c) pts[c] = c;
    out.interpolant = ind.run(pts);
  }
  auto vars = variable_names(n);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& a = kl[cols[c].member];
    if (evaluate_term(a, *out.term, vars, cols[c].point) != want[c])
      throw Error("row-scan term disagrees with " + p.f);
    if (out.interpolant && evaluate_term(a, *out.interpolant, vars, cols[c].point) != want[c])
      throw Error("majority interpolant disagrees with " + p.f);
  }
  return out;
}

}  // namespace findef
