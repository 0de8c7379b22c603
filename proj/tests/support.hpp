#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "findef/formula.hpp"

namespace test_support {

using namespace findef;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  bool coin(std::size_t num = 1, std::size_t den = 2) { return below(den) < num; }

 private:
  std::mt19937_64 gen_;
};

inline Term random_term(Rng& rng, const Signature& sig, std::size_t nvars, std::size_t depth,
                        const std::string& family = "x") {
  std::vector<std::size_t> leaves, inner;
  for (std::size_t i = 0; i < sig.operations().size(); ++i)
    (sig.operations()[i].arity == 0 ? leaves : inner).push_back(i);
  if (depth == 0 || inner.empty() || rng.coin(1, 3)) {
    if (!leaves.empty() && rng.coin(1, 4)) return Term::apply(sig.operations()[leaves[rng.below(leaves.size())]].name);
    return Term::variable(family + std::to_string(rng.below(nvars) + 1));
  }
  const auto& op = sig.operations()[inner[rng.below(inner.size())]];
  std::vector<Term> args;
  for (std::size_t i = 0; i < op.arity; ++i) args.push_back(random_term(rng, sig, nvars, depth - 1, family));
  return Term::apply(op.name, std::move(args));
}

inline Formula random_atom(Rng& rng, const Signature& sig, std::size_t nvars) {
  return Formula::eq(random_term(rng, sig, nvars, 2), random_term(rng, sig, nvars, 2));
}

inline Formula random_formula(Rng& rng, const Signature& sig, std::size_t nvars, std::size_t depth,
                              std::size_t& fresh) {
  if (depth == 0) return random_atom(rng, sig, nvars);
  switch (rng.below(7)) {
    case 0: return random_atom(rng, sig, nvars);
    case 1: return Formula::negate(random_formula(rng, sig, nvars, depth - 1, fresh));
    case 2:
    case 3: {
      std::vector<Formula> kids;
      std::size_t k = 1 + rng.below(3);
      for (std::size_t i = 0; i < k; ++i) kids.push_back(random_formula(rng, sig, nvars, depth - 1, fresh));
      return Formula::nary(rng.coin() ? FormulaKind::And : FormulaKind::Or, std::move(kids));
    }
    case 4:
      return Formula::implies(random_formula(rng, sig, nvars, depth - 1, fresh),
                              random_formula(rng, sig, nvars, depth - 1, fresh));
    default: {
      std::string v = "w" + std::to_string(++fresh);
      Formula body = random_formula(rng, sig, nvars, depth - 1, fresh);
      std::unordered_map<std::string, Term> s{{"x1", Term::variable(v)}};
      body = body.substitute(s);
      return rng.coin() ? Formula::exists({v}, body) : Formula::forall({v}, body);
    }
  }
}

inline FiniteStructure random_algebra(Rng& rng, std::size_t size, const std::vector<Symbol>& ops,
                                      const std::string& name = "R") {
  std::vector<std::vector<Element>> tables;
  for (const auto& s : ops) {
    std::size_t cells = 1;
    for (std::size_t i = 0; i < s.arity; ++i) cells *= size;
    std::vector<Element> t(cells);
    for (auto& e : t) e = static_cast<Element>(rng.below(size));
    tables.push_back(std::move(t));
  }
  return FiniteStructure(name, Signature(ops), size, std::move(tables));
}


// Atom profiles: for every (member, tuple over the target variables) the truth
// values of all equations between terms of depth <= `depth`, terms identified
// when they agree everywhere.
struct AtomProfiles {
  std::vector<std::vector<char>> rows;
  std::vector<bool> in;
};

inline AtomProfiles atom_profiles(const std::vector<FiniteStructure>& k, const Signature& l, const Target& t,
                                  std::size_t depth) {
  std::size_t r = target_variables(k[0].signature(), t).size();
  std::vector<std::pair<std::size_t, Tuple>> probes;
  AtomProfiles out;
  for (std::size_t m = 0; m < k.size(); ++m) {
    auto mem = target_membership(k[m], t);
    Tuple x(r, 0);
    std::size_t i = 0;
    do {
      probes.push_back({m, x});
      out.in.push_back(mem[i++]);
    } while (next_tuple(x, k[m].size()));
  }
  std::vector<FiniteStructure> kl;
  for (const auto& a : k) kl.push_back(reduct(a, l));
  std::set<std::vector<Element>> seen;
  std::vector<std::vector<Element>> level;
  auto add = [&](std::vector<Element> v, std::vector<std::vector<Element>>& into) {
    if (seen.insert(v).second) into.push_back(std::move(v));
  };
  for (std::size_t j = 0; j < r; ++j) {
    std::vector<Element> v;
    for (const auto& p : probes) v.push_back(p.second[j]);
    add(v, level);
  }
  const auto& ops = l.operations();
  for (std::size_t op = 0; op < ops.size(); ++op)
    if (ops[op].arity == 0) {
      std::vector<Element> v;
      for (const auto& p : probes) v.push_back(kl[p.first].table(op)[0]);
      add(v, level);
    }
  for (std::size_t d = 0; d < depth; ++d) {
    std::vector<std::vector<Element>> next = level;
    for (std::size_t op = 0; op < ops.size(); ++op) {
      std::size_t ar = ops[op].arity;
      if (ar == 0) continue;
      Tuple idx(ar, 0);
      do {
        std::vector<Element> v;
        Tuple args(ar);
        for (std::size_t p = 0; p < probes.size(); ++p) {
          for (std::size_t j = 0; j < ar; ++j) args[j] = level[idx[j]][p];
          v.push_back(kl[probes[p].first].apply(op, args));
        }
        add(v, next);
      } while (next_tuple(idx, level.size()));
    }
    level = std::move(next);
  }
  out.rows.assign(probes.size(), {});
  for (std::size_t a = 0; a < level.size(); ++a)
    for (std::size_t b = a + 1; b < level.size(); ++b)
      for (std::size_t p = 0; p < probes.size(); ++p) out.rows[p].push_back(level[a][p] == level[b][p]);
  return out;
}

inline bool profile_le(const std::vector<char>& u, const std::vector<char>& v) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] && !v[i]) return false;
  return true;
}

// Whether some formula of the open class over the profiled atoms defines the target.
inline bool profile_definable(const AtomProfiles& ap, SyntacticClass c) {
  if (c == SyntacticClass::PositiveOpen && std::find(ap.in.begin(), ap.in.end(), true) == ap.in.end())
    c = SyntacticClass::AtomicConj;
  std::size_t n = ap.rows.size();
  std::size_t w = n ? ap.rows[0].size() : 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (ap.in[v]) continue;
    const auto& pv = ap.rows[v];
    bool ok = true;
    switch (c) {
      case SyntacticClass::Open:
        for (std::size_t u = 0; u < n && ok; ++u) ok = !(ap.in[u] && ap.rows[u] == pv);
        break;
      case SyntacticClass::PositiveOpen:
        for (std::size_t u = 0; u < n && ok; ++u) ok = !(ap.in[u] && profile_le(ap.rows[u], pv));
        break;
      case SyntacticClass::AtomicConj: {
        std::vector<char> meet(w, 1);
        for (std::size_t u = 0; u < n; ++u)
          if (ap.in[u])
            for (std::size_t i = 0; i < w; ++i) meet[i] = meet[i] && ap.rows[u][i];
        ok = !profile_le(meet, pv);
        break;
      }
      case SyntacticClass::OpenHorn:
      case SyntacticClass::OpenStrictHorn: {
        std::vector<char> meet(w, 1);
        bool any = false;
        for (std::size_t u = 0; u < n; ++u)
          if (ap.in[u] && profile_le(pv, ap.rows[u])) {
            any = true;
            for (std::size_t i = 0; i < w; ++i) meet[i] = meet[i] && ap.rows[u][i];
          }
        if (!any && c == SyntacticClass::OpenHorn) break;
        ok = meet != pv;
        break;
      }
      default: throw Error("no profile oracle for this class");
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace test_support
