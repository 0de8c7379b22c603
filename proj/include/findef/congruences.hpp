#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "findef/definability.hpp"
#include "findef/subpowers.hpp"

namespace findef {

// An equivalence on the universe of `host`, stored as block labels numbered by
// first occurrence.
class Congruence {
 public:
  Congruence() = default;
  Congruence(const FiniteStructure* host, std::vector<Element> labels) : host_(host), block_(std::move(labels)) {
    if (block_.size() != host_->size()) throw Error("congruence labels do not cover the universe");
    canonicalize();
  }
  static Congruence identity(const FiniteStructure& a) {
    std::vector<Element> l(a.size());
    std::iota(l.begin(), l.end(), Element{0});
    return Congruence(&a, std::move(l));
  }
  static Congruence full(const FiniteStructure& a) { return Congruence(&a, std::vector<Element>(a.size(), 0)); }

  const FiniteStructure& host() const { return *host_; }
  std::size_t size() const { return block_.size(); }
  Element block(Element e) const { return block_[e]; }
  const std::vector<Element>& labels() const { return block_; }
  std::size_t block_count() const { return block_.empty() ? 0 : *std::max_element(block_.begin(), block_.end()) + 1; }
  bool related(Element a, Element b) const { return block_[a] == block_[b]; }
  bool is_identity() const { return block_count() == size(); }
  bool is_full() const { return block_count() <= 1; }

  std::vector<std::vector<Element>> blocks() const {
    std::vector<std::vector<Element>> out(block_count());
    for (Element e = 0; e < size(); ++e) out[block_[e]].push_back(e);
    return out;
  }
  std::vector<std::pair<Element, Element>> pairs() const {
    std::vector<std::pair<Element, Element>> out;
    for (Element a = 0; a < size(); ++a)
      for (Element b = 0; b < size(); ++b)
        if (related(a, b)) out.push_back({a, b});
    return out;
  }

  bool operator==(const Congruence& o) const { return block_ == o.block_; }
  bool operator<(const Congruence& o) const {
    if (block_count() != o.block_count()) return block_count() > o.block_count();
    return block_ < o.block_;
  }
  // Refinement order.
  bool leq(const Congruence& o) const {
    for (Element a = 0; a < size(); ++a)
      for (Element b = a + 1; b < size(); ++b)
        if (related(a, b) && !o.related(a, b)) return false;
    return true;
  }

  Congruence meet(const Congruence& o) const {
    std::map<std::pair<Element, Element>, Element> ids;
    std::vector<Element> l(size());
    for (Element e = 0; e < size(); ++e)
      l[e] = ids.emplace(std::make_pair(block_[e], o.block_[e]), static_cast<Element>(ids.size())).first->second;
    return Congruence(host_, std::move(l));
  }

  std::string to_string() const {
    std::string s = "{";
    auto bs = blocks();
    for (std::size_t i = 0; i < bs.size(); ++i) {
      if (i) s += ",";
      s += "{";
      for (std::size_t j = 0; j < bs[i].size(); ++j) {
        if (j) s += ",";
        s += host_->element_name(bs[i][j]);
      }
      s += "}";
    }
    return s + "}";
  }

 private:
  void canonicalize() {
    std::map<Element, Element> ren;
    for (auto& b : block_) b = ren.emplace(b, static_cast<Element>(ren.size())).first->second;
  }

  const FiniteStructure* host_ = nullptr;
  std::vector<Element> block_;
};

// Every operation maps related arguments to related values (one coordinate at a time).
inline bool is_compatible(const FiniteStructure& a, const std::vector<Element>& labels) {
  const auto& ops = a.signature().operations();
  Tuple args;
  for (std::size_t op = 0; op < ops.size(); ++op) {
    std::size_t ar = ops[op].arity;
    if (ar == 0) continue;
    Tuple idx(ar, 0);
    do {
      Element base = a.apply(op, idx);
      for (std::size_t i = 0; i < ar; ++i) {
        args = idx;
        for (Element y = 0; y < a.size(); ++y) {
          if (labels[y] != labels[idx[i]]) continue;
          args[i] = y;
          if (labels[a.apply(op, args)] != labels[base]) return false;
        }
      }
    } while (next_tuple(idx, a.size()));
  }
  return true;
}

namespace detail {

struct UnionFind {
  std::vector<Element> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), Element{0}); }
  Element find(Element x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(Element a, Element b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    return true;
  }
};

}  // namespace detail

// Least congruence containing `pairs`: every merge is pushed through all
// unary translates of the basic operations.
inline Congruence generated_congruence(const FiniteStructure& a, const std::vector<std::pair<Element, Element>>& pairs) {
  detail::UnionFind uf(a.size());
  std::vector<std::pair<Element, Element>> work;
  for (auto [x, y] : pairs) {
    if (x >= a.size() || y >= a.size()) throw Error("congruence generator out of range");
    if (uf.unite(x, y)) work.push_back({x, y});
  }
  const auto& ops = a.signature().operations();
  Tuple args;
  while (!work.empty()) {
    auto [x, y] = work.back();
    work.pop_back();
    for (std::size_t op = 0; op < ops.size(); ++op) {
      std::size_t ar = ops[op].arity;
      if (ar == 0) continue;
      Tuple rest(ar - 1, 0);
      do {
        for (std::size_t i = 0; i < ar; ++i) {
          args.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(i));
          args.push_back(x);
          args.insert(args.end(), rest.begin() + static_cast<std::ptrdiff_t>(i), rest.end());
          Element u = a.apply(op, args);
          args[i] = y;
          Element v = a.apply(op, args);
          if (uf.unite(u, v)) work.push_back({u, v});
        }
      } while (next_tuple(rest, a.size()));
    }
  }
  std::vector<Element> l(a.size());
  for (Element e = 0; e < a.size(); ++e) l[e] = uf.find(e);
  return Congruence(&a, std::move(l));
}

inline Congruence principal_congruence(const FiniteStructure& a, Element x, Element y) {
  return generated_congruence(a, {{x, y}});
}

inline Congruence join(const Congruence& p, const Congruence& q) {
  detail::UnionFind uf(p.size());
  for (Element e = 0; e < p.size(); ++e) {
    for (Element f = e + 1; f < p.size(); ++f)
      if (p.related(e, f) || q.related(e, f)) uf.unite(e, f);
  }
  std::vector<Element> l(p.size());
  for (Element e = 0; e < p.size(); ++e) l[e] = uf.find(e);
  return Congruence(&p.host(), std::move(l));
}

struct CongruenceBounds {
  std::size_t max_universe = 36;
  std::size_t max_congruences = 100000;
};

// Con(A) as the join closure of the principal congruences, sorted from Δ upwards.
inline std::vector<Congruence> congruence_lattice(const FiniteStructure& a, CongruenceBounds b = {}) {
  if (a.size() > b.max_universe) throw ResourceExceeded("universe exceeds the congruence lattice bound", a.size());
  std::vector<Congruence> principal;
  std::set<std::vector<Element>> seen;
  for (Element x = 0; x < a.size(); ++x)
    for (Element y = x + 1; y < a.size(); ++y) {
      auto t = principal_congruence(a, x, y);
      if (seen.insert(t.labels()).second) principal.push_back(std::move(t));
    }
  std::vector<Congruence> all{Congruence::identity(a)};
  std::set<std::vector<Element>> have{all[0].labels()};
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (const auto& p : principal) {
      auto j = join(all[i], p);
      if (have.insert(j.labels()).second) {
        all.push_back(std::move(j));
        if (all.size() > b.max_congruences) throw ResourceExceeded("congruence lattice exceeds its budget", all.size());
      }
    }
  }
  std::sort(all.begin(), all.end());
  return all;
}

inline FiniteStructure quotient(const Congruence& t) {
  const auto& a = t.host();
  std::size_t n = t.block_count();
  auto bs = t.blocks();
  std::vector<std::vector<Element>> tables;
  for (std::size_t op = 0; op < a.signature().operations().size(); ++op) {
    std::size_t ar = a.signature().operations()[op].arity;
    std::vector<Element> tab;
    Tuple idx(ar, 0), args(ar);
    do {
      for (std::size_t i = 0; i < ar; ++i) args[i] = bs[idx[i]][0];
      tab.push_back(t.block(a.apply(op, args)));
    } while (next_tuple(idx, n));
    tables.push_back(std::move(tab));
  }
  std::vector<std::vector<Tuple>> rels;
  for (std::size_t r = 0; r < a.signature().relations().size(); ++r) {
    std::set<Tuple> ts;
    for (const auto& tu : a.relation(r).tuples()) {
      Tuple q;
      for (Element e : tu) q.push_back(t.block(e));
      ts.insert(q);
    }
    rels.emplace_back(ts.begin(), ts.end());
  }
  std::vector<std::string> names;
  for (const auto& blk : bs) {
    std::string s;
    for (std::size_t i = 0; i < blk.size(); ++i) s += (i ? "|" : "") + a.element_name(blk[i]);
    names.push_back(s);
  }
  return FiniteStructure(a.name() + "/theta", a.signature(), n, std::move(tables), std::move(rels), std::move(names));
}

// ---------------------------------------------------------------------------
// Relative congruences of the quasivariety generated by a finite class

class RelCongruenceContext {
 public:
  explicit RelCongruenceContext(std::vector<FiniteStructure> k, CongruenceBounds b = {})
      : k_(std::move(k)), bounds_(b) {
    if (k_.empty()) throw Error("empty generating class");
    for (const auto& a : k_) require_same_signature(k_[0].signature(), a.signature());
  }

  const std::vector<FiniteStructure>& members() const { return k_; }
  const CongruenceBounds& bounds() const { return bounds_; }

  // A is in ISP(K) iff homomorphisms into members separate its points.
  bool member(const FiniteStructure& a) const {
    require_same_signature(k_[0].signature(), a.signature());
    auto key = canonical_form(a);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    std::vector<std::vector<bool>> sep(a.size(), std::vector<bool>(a.size(), false));
    for (const auto& b : k_)
      for (const auto& m : find_maps(Subuniverse::full(a), Subuniverse::full(b), MapKind::Hom))
        for (Element x = 0; x < a.size(); ++x)
          for (Element y = x + 1; y < a.size(); ++y)
            if (m.image[x] != m.image[y]) sep[x][y] = true;
    bool ok = true;
    for (Element x = 0; x < a.size() && ok; ++x)
      for (Element y = x + 1; y < a.size() && ok; ++y) ok = sep[x][y];
    cache_.emplace(std::move(key), ok);
    return ok;
  }

  std::vector<Congruence> relative_congruences(const FiniteStructure& a) const {
    std::vector<Congruence> out;
    for (auto& t : congruence_lattice(a, bounds_))
      if (member(quotient(t))) out.push_back(std::move(t));
    return out;
  }

  Congruence relative_principal(const FiniteStructure& a, Element x, Element y) const {
    if (!member(a)) throw Error("structure '" + a.name() + "' is not in the quasivariety generated by K");
    auto base = principal_congruence(a, x, y);
    if (member(quotient(base))) return base;
    std::optional<Congruence> acc;
    for (const auto& t : relative_congruences(a)) {
      if (!t.related(x, y)) continue;
      acc = acc ? acc->meet(t) : t;
    }
    return *acc;
  }

 private:
  std::vector<FiniteStructure> k_;
  CongruenceBounds bounds_;
  mutable std::map<std::vector<std::uint32_t>, bool> cache_;
};

inline bool quasivariety_membership(const RelCongruenceContext& ctx, const FiniteStructure& a) { return ctx.member(a); }

inline Congruence relative_principal_congruence(const RelCongruenceContext& ctx, const FiniteStructure& a, Element x,
                                                Element y) {
  return ctx.relative_principal(a, x, y);
}

// ---------------------------------------------------------------------------
// Congruence extension and Fraser-Horn

struct CepFailure {
  std::size_t member = 0;
  std::vector<Element> subuniverse;
  Element a = 0, b = 0;                // elements of the member
  std::vector<Element> in_sub;         // block labels on the subuniverse, by position
  std::vector<Element> restricted;     // theta in the member, restricted to the subuniverse
};

// theta_Q^A(a,b) = theta_Q^B(a,b) ∩ A² for every subalgebra A of a member B.
inline std::optional<CepFailure> check_cep(const RelCongruenceContext& ctx) {
  const auto& k = ctx.members();
  for (std::size_t m = 0; m < k.size(); ++m) {
    const auto& big = k[m];
    for (const auto& s : all_subuniverses(big)) {
      if (s.is_full()) continue;
      auto sub = substructure(s);
      const auto& els = s.elements();
      for (Element i = 0; i < els.size(); ++i)
        for (Element j = i + 1; j < els.size(); ++j) {
          auto small = ctx.relative_principal(sub, i, j);
          auto whole = ctx.relative_principal(big, els[i], els[j]);
          std::vector<Element> lab(els.size());
          for (std::size_t p = 0; p < els.size(); ++p) lab[p] = whole.block(els[p]);
          Congruence restricted(&small.host(), lab);
          if (!(restricted == small)) return CepFailure{m, els, els[i], els[j], small.labels(), restricted.labels()};
        }
    }
  }
  return std::nullopt;
}

struct FhpFailure {
  std::size_t left = 0, right = 0;
  Element p = 0, q = 0;  // elements of left × right, leftmost factor most significant
};

// theta^{A×B}(p,q) = theta^A(p1,q1) × theta^B(p2,q2) on binary products of members.
inline std::optional<FhpFailure> check_fraser_horn(const std::vector<FiniteStructure>& k) {
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = i; j < k.size(); ++j) {
      auto prod = product(std::vector<FiniteStructure>{k[i], k[j]});
      std::size_t nb = k[j].size();
      for (Element p = 0; p < prod.size(); ++p)
        for (Element q = p + 1; q < prod.size(); ++q) {
          auto whole = principal_congruence(prod, p, q);
          auto left = principal_congruence(k[i], p / nb, q / nb);
          auto right = principal_congruence(k[j], p % nb, q % nb);
          for (Element x = 0; x < prod.size(); ++x)
            for (Element y = 0; y < prod.size(); ++y) {
              bool expect = left.related(x / nb, y / nb) && right.related(x % nb, y % nb);
              if (whole.related(x, y) != expect) return FhpFailure{i, j, p, q};
            }
        }
    }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Formulas defining relative principal congruences

inline std::string dpc_relation_name() { return "theta"; }

// A with the 4-ary relation {(a,b,c,d) : (c,d) ∈ theta_Q^A(a,b)} added.
inline FiniteStructure with_principal_relation(const RelCongruenceContext& ctx, const FiniteStructure& a) {
  std::vector<Tuple> ts;
  for (Element x = 0; x < a.size(); ++x)
    for (Element y = 0; y < a.size(); ++y) {
      auto t = ctx.relative_principal(a, x, y);
      for (Element c = 0; c < a.size(); ++c)
        for (Element d = 0; d < a.size(); ++d)
          if (t.related(c, d)) ts.push_back({x, y, c, d});
    }
  return with_relation(a, dpc_relation_name(), 4, std::move(ts));
}

inline Formula synthesize_dpc_formula(const RelCongruenceContext& ctx, SyntacticClass cls = SyntacticClass::PositiveOpen,
                                      Bounds bounds = {}) {
  const auto& k = ctx.members();
  bool need_cep = cls == SyntacticClass::PositiveOpen || cls == SyntacticClass::AtomicConj;
  bool need_fhp = cls == SyntacticClass::AtomicConj || cls == SyntacticClass::PP;
  if (!need_cep && !need_fhp) throw Error("principal congruence formulas are synthesized for pos-open, atomic-conj or pp");
  if (need_cep && check_cep(ctx)) throw Error("precondition failed: K lacks the relative congruence extension property");
  if (need_fhp && check_fraser_horn(k)) throw Error("precondition failed: K lacks the Fraser-Horn property");
  DefinabilityQuery q;
  for (const auto& a : k) q.k.push_back(with_principal_relation(ctx, a));
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = i; j < k.size(); ++j)
      q.k.push_back(with_principal_relation(ctx, product(std::vector<FiniteStructure>{k[i], k[j]})));
  q.l = k[0].signature();
  q.target = Target::relation(dpc_relation_name());
  q.cls = cls;
  q.bounds = bounds;
  auto v = check(q);
  if (!v.definable())
    throw Error("relative principal congruences are not " + class_name(cls) + "-definable on K and its binary products: " +
                v.reason);
  Formula phi = *v.witness;
  if (phi.kind() == FormulaKind::Or) {
    auto parts = detail::flatten(phi, FormulaKind::Or);
    for (std::size_t i = parts.size(); i-- > 0 && parts.size() > 1;) {
      auto fewer = parts;
      fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
      Formula cand = fewer.size() == 1 ? fewer[0] : Formula::disj(fewer);
      if (defines(q.k, cand, q.target)) {
        parts = std::move(fewer);
        phi = cand;
      }
    }
  }
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = i; j < k.size(); ++j) {
      auto p = product(std::vector<FiniteStructure>{k[i], k[j]});
      if (!defines({with_principal_relation(ctx, p)}, phi, q.target))
        throw Error("synthesized formula fails on the product " + k[i].name() + " x " + k[j].name());
    }
  return phi;
}

}  // namespace findef
