#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "findef/closure.hpp"

namespace findef {

class Subuniverse {
 public:
  Subuniverse() = default;
  Subuniverse(const FiniteStructure* host, std::vector<Element> elements, std::optional<Tuple> gens = std::nullopt)
      : host_(host), elements_(std::move(elements)), gens_(std::move(gens)) {
    std::sort(elements_.begin(), elements_.end());
    elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
    mask_.assign(host_->size(), false);
    for (Element e : elements_) {
      if (e >= host_->size()) throw Error("subuniverse element out of range");
      mask_[e] = true;
    }
  }
  static Subuniverse full(const FiniteStructure& a) {
    std::vector<Element> all(a.size());
    for (Element e = 0; e < a.size(); ++e) all[e] = e;
    return Subuniverse(&a, std::move(all));
  }

  const FiniteStructure& host() const { return *host_; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<bool>& mask() const { return mask_; }
  const std::optional<Tuple>& generators() const { return gens_; }
  bool contains(Element e) const { return e < mask_.size() && mask_[e]; }
  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }
  bool is_full() const { return elements_.size() == host_->size(); }

  bool operator==(const Subuniverse& o) const { return elements_ == o.elements_; }
  bool operator<(const Subuniverse& o) const {
    if (size() != o.size()) return size() < o.size();
    return elements_ < o.elements_;
  }

 private:
  const FiniteStructure* host_ = nullptr;
  std::vector<Element> elements_;
  std::vector<bool> mask_;
  std::optional<Tuple> gens_;
};

inline bool is_closed(const FiniteStructure& a, const std::vector<bool>& mask) {
  std::vector<Element> els;
  for (Element e = 0; e < a.size(); ++e)
    if (mask[e]) els.push_back(e);
  const auto& ops = a.signature().operations();
  Tuple args;
  for (std::size_t op = 0; op < ops.size(); ++op) {
    std::size_t ar = ops[op].arity;
    if (ar == 0) {
      if (!mask[a.table(op)[0]]) return false;
      continue;
    }
    if (els.empty()) continue;
    Tuple idx(ar, 0);
    args.resize(ar);
    do {
      for (std::size_t i = 0; i < ar; ++i) args[i] = els[idx[i]];
      if (!mask[a.apply(op, args)]) return false;
    } while (next_tuple(idx, els.size()));
  }
  return true;
}

inline Subuniverse generated_subuniverse(const FiniteStructure& a, const Tuple& gens) {
  ProductClosure pc({{&a, gens}});
  std::vector<Element> els;
  for (std::size_t i = 0; i < pc.size(); ++i) els.push_back(pc.value(i, 0));
  return Subuniverse(&a, std::move(els), gens);
}

// Greedy generating tuple: repeatedly add the least element not yet generated.
inline Tuple small_generating_set(const Subuniverse& s) {
  Tuple gens;
  auto cur = generated_subuniverse(s.host(), gens);
  for (Element e : s.elements()) {
    if (cur.contains(e)) continue;
    gens.push_back(e);
    cur = generated_subuniverse(s.host(), gens);
  }
  return gens;
}

// Nonempty subuniverses, sorted by (size, element list).
inline std::vector<Subuniverse> all_subuniverses(const FiniteStructure& a, std::size_t budget = 100000) {
  std::set<std::vector<Element>> seen;
  std::vector<Subuniverse> found;
  std::vector<std::size_t> queue;
  auto add = [&](Subuniverse s) {
    if (s.empty() || !seen.insert(s.elements()).second) return;
    if (found.size() >= budget) throw ResourceExceeded("subuniverse enumeration budget exceeded", found.size());
    found.push_back(std::move(s));
    queue.push_back(found.size() - 1);
  };
  add(generated_subuniverse(a, {}));
  for (Element e = 0; e < a.size(); ++e) add(generated_subuniverse(a, {e}));
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    Subuniverse cur = found[queue[qi]];
    for (Element e = 0; e < a.size(); ++e) {
      if (cur.contains(e)) continue;
      Tuple gens = cur.elements();
      gens.push_back(e);
      auto next = generated_subuniverse(a, gens);
      add(Subuniverse(&a, next.elements()));
    }
  }
  std::vector<Subuniverse> out;
  for (const auto& s : found) out.push_back(Subuniverse(&a, s.elements()));
  std::sort(out.begin(), out.end());
  return out;
}

// The induced substructure on a subuniverse; element i is s.elements()[i].
inline FiniteStructure substructure(const Subuniverse& s) {
  const auto& a = s.host();
  if (s.empty()) throw Error("substructures are nonempty");
  std::vector<Element> pos(a.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) pos[s.elements()[i]] = static_cast<Element>(i);
  std::vector<std::vector<Element>> tables;
  const auto& ops = a.signature().operations();
  for (std::size_t op = 0; op < ops.size(); ++op)
    tables.push_back(tabulate(s.size(), ops[op].arity, [&](const Tuple& t) {
      Tuple args;
      for (Element e : t) args.push_back(s.elements()[e]);
      Element v = a.apply(op, args);
      if (!s.contains(v)) throw Error("substructure of a set that is not a subuniverse");
      return pos[v];
    }));
  std::vector<std::vector<Tuple>> rels;
  for (std::size_t r = 0; r < a.signature().relations().size(); ++r) {
    std::vector<Tuple> ts;
    for (const auto& t : a.relation(r).tuples()) {
      bool in = std::all_of(t.begin(), t.end(), [&](Element e) { return s.contains(e); });
      if (!in) continue;
      Tuple u;
      for (Element e : t) u.push_back(pos[e]);
      ts.push_back(std::move(u));
    }
    rels.push_back(std::move(ts));
  }
  std::vector<std::string> names;
  for (Element e : s.elements()) names.push_back(a.element_name(e));
  return FiniteStructure(a.name() + "|sub", a.signature(), s.size(), std::move(tables), std::move(rels),
                         std::move(names));
}

// ---------------------------------------------------------------------------
// Homomorphisms

enum class MapKind { Hom, Embedding, Iso };

inline std::string map_kind_name(MapKind k) {
  switch (k) {
    case MapKind::Hom: return "hom";
    case MapKind::Embedding: return "emb";
    case MapKind::Iso: return "iso";
  }
  return "hom";
}

inline MapKind parse_map_kind(std::string_view s) {
  if (s == "hom") return MapKind::Hom;
  if (s == "emb") return MapKind::Embedding;
  if (s == "iso") return MapKind::Iso;
  throw Error("unknown map kind '" + std::string(s) + "'");
}

struct HomMap {
  static constexpr Element unset = 0xffffffffu;
  Subuniverse source, target;
  std::vector<Element> image;  // indexed by source host element; `unset` outside the source
  MapKind kind = MapKind::Hom;

  Element operator()(Element e) const { return image.at(e); }
  bool operator==(const HomMap& o) const { return image == o.image && kind == o.kind; }
};

// Independent check of a claimed map, by sweeping every operation and relation.
inline bool verify_map(const HomMap& m, MapKind kind) {
  const auto& a = m.source.host();
  const auto& b = m.target.host();
  if (m.image.size() != a.size()) return false;
  for (Element e = 0; e < a.size(); ++e) {
    if (m.source.contains(e) != (m.image[e] != HomMap::unset)) return false;
    if (m.source.contains(e) && !m.target.contains(m.image[e])) return false;
  }
  if (!is_closed(a, m.source.mask()) || !is_closed(b, m.target.mask())) return false;
  const auto& els = m.source.elements();
  const auto& ops = a.signature().operations();
  if (ops.size() != b.signature().operations().size()) return false;
  Tuple args, imgs;
  for (std::size_t op = 0; op < ops.size(); ++op) {
    std::size_t ar = ops[op].arity;
    if (ar == 0) {
      if (m.image[a.table(op)[0]] != b.table(op)[0]) return false;
      continue;
    }
    Tuple idx(ar, 0);
    args.resize(ar);
    imgs.resize(ar);
    do {
      for (std::size_t i = 0; i < ar; ++i) {
        args[i] = els[idx[i]];
        imgs[i] = m.image[args[i]];
      }
      if (m.image[a.apply(op, args)] != b.apply(op, imgs)) return false;
    } while (next_tuple(idx, els.size()));
  }
  if (kind != MapKind::Hom) {
    std::set<Element> seen;
    for (Element e : els)
      if (!seen.insert(m.image[e]).second) return false;
    if (kind == MapKind::Iso && seen.size() != m.target.size()) return false;
  }
  for (std::size_t r = 0; r < a.signature().relations().size(); ++r) {
    std::size_t ar = a.signature().relations()[r].arity;
    Tuple idx(ar, 0);
    do {
      Tuple x, y;
      for (auto i : idx) {
        x.push_back(els[i]);
        y.push_back(m.image[els[i]]);
      }
      bool in_a = a.holds(r, x), in_b = b.holds(r, y);
      if (in_a && !in_b) return false;
      if (kind != MapKind::Hom && in_b && !in_a) return false;
    } while (next_tuple(idx, els.size()));
  }
  return true;
}

namespace detail {

inline bool relations_ok(const ProductClosure& pc, MapKind kind) {
  if (pc.column(0).structure->signature().relations().empty()) return true;
  return !relation_violation(pc, kind != MapKind::Hom);
}

}  // namespace detail

// All maps of `kind` from a0 to b0, in lexicographic order of generator images.
inline std::vector<HomMap> find_maps(const Subuniverse& a0, const Subuniverse& b0, MapKind kind,
                                     std::size_t limit = static_cast<std::size_t>(-1)) {
  std::vector<HomMap> out;
  require_same_signature(a0.host().signature(), b0.host().signature());
  if (a0.empty() || b0.empty()) return out;
  if (kind != MapKind::Hom && a0.size() > b0.size()) return out;
  if (kind == MapKind::Iso && a0.size() != b0.size()) return out;
  Tuple gens = a0.generators() ? *a0.generators() : small_generating_set(a0);
  if (generated_subuniverse(a0.host(), gens).elements() != a0.elements()) gens = small_generating_set(a0);
  Tuple imgs;
  ClosureOptions opt;
  opt.split = 1;
  opt.check_reverse = kind != MapKind::Hom;
  std::function<void()> rec = [&]() {
    if (out.size() >= limit) return;
    Tuple prefix(gens.begin(), gens.begin() + static_cast<std::ptrdiff_t>(imgs.size()));
    ProductClosure pc({{&a0.host(), prefix}, {&b0.host(), imgs}}, opt);
    if (!pc.complete()) return;
    if (imgs.size() == gens.size()) {
      if (pc.size() != a0.size()) return;
      if (kind == MapKind::Iso && pc.size() != b0.size()) return;
      if (!detail::relations_ok(pc, kind)) return;
      HomMap m{a0, b0, std::vector<Element>(a0.host().size(), HomMap::unset), kind};
      for (std::size_t i = 0; i < pc.size(); ++i) m.image[pc.value(i, 0)] = pc.value(i, 1);
      out.push_back(std::move(m));
      return;
    }
    for (Element t : b0.elements()) {
      imgs.push_back(t);
      rec();
      imgs.pop_back();
      if (out.size() >= limit) return;
    }
  };
  rec();
  return out;
}

inline bool isomorphic(const FiniteStructure& a, const FiniteStructure& b) {
  if (a.size() != b.size() || !(a.signature() == b.signature())) return false;
  return !find_maps(Subuniverse::full(a), Subuniverse::full(b), MapKind::Iso, 1).empty();
}

// ---------------------------------------------------------------------------
// Pointed types and canonical forms

// Exact invariant of (Sg(point), point) up to pointed isomorphism: the tables of
// the generated substructure re-indexed in closure discovery order.
inline std::vector<std::uint32_t> pointed_key(const FiniteStructure& a, const Tuple& point, std::size_t max_size = 200000) {
  ClosureOptions opt;
  opt.max_size = max_size;
  ProductClosure pc({{&a, point}}, opt);
  if (!pc.complete()) throw ResourceExceeded("generated substructure too large", pc.size());
  std::size_t s = pc.size();
  std::vector<Element> pos(a.size(), 0);
  std::vector<Element> els(s);
  for (std::size_t i = 0; i < s; ++i) {
    els[i] = pc.value(i, 0);
    pos[els[i]] = static_cast<Element>(i);
  }
  std::vector<std::uint32_t> key{static_cast<std::uint32_t>(s)};
  for (Element p : point) key.push_back(pos[p]);
  const auto& ops = a.signature().operations();
  Tuple args;
  for (std::size_t op = 0; op < ops.size(); ++op) {
    std::size_t ar = ops[op].arity;
    Tuple idx(ar, 0);
    args.resize(ar);
    do {
      for (std::size_t i = 0; i < ar; ++i) args[i] = els[idx[i]];
      key.push_back(pos[a.apply(op, args)]);
    } while (next_tuple(idx, s));
  }
  for (std::size_t r = 0; r < a.signature().relations().size(); ++r) {
    std::size_t ar = a.signature().relations()[r].arity;
    Tuple idx(ar, 0);
    args.resize(ar);
    do {
      for (std::size_t i = 0; i < ar; ++i) args[i] = els[idx[i]];
      key.push_back(a.holds(r, args) ? 1u : 0u);
    } while (next_tuple(idx, s));
  }
  return key;
}

struct PointedType {
  std::size_t member = 0;
  Tuple point;
  Subuniverse universe;
  std::vector<std::uint32_t> key;
  std::size_t multiplicity = 0;  // how many (member, tuple) pairs have this type
};

inline bool pointed_type_less(const PointedType& x, const PointedType& y) {
  if (x.universe.size() != y.universe.size()) return x.universe.size() < y.universe.size();
  return x.key < y.key;
}

// One representative per pointed-isomorphism type of (Sg(a), a), a in A^n, A in k.
inline std::vector<PointedType> pointed_substructure_types(const std::vector<FiniteStructure>& k, std::size_t n,
                                                           std::size_t max_tuples = 1u << 22) {
  std::map<std::vector<std::uint32_t>, std::size_t> index;
  std::vector<PointedType> out;
  for (std::size_t m = 0; m < k.size(); ++m) {
    const auto& a = k[m];
    checked_pow(a.size(), n, max_tuples);
    Tuple x(n, 0);
    do {
      auto key = pointed_key(a, x);
      auto [it, fresh] = index.emplace(key, out.size());
      if (fresh) {
        out.push_back({m, x, generated_subuniverse(a, x), std::move(key), 1});
      } else {
        ++out[it->second].multiplicity;
      }
    } while (next_tuple(x, a.size()));
  }
  std::stable_sort(out.begin(), out.end(), pointed_type_less);
  return out;
}

// Isomorphism-invariant bytes of a structure: exact minimum over universe
// permutations up to 8 elements, else minimum pointed key over generating
// tuples of least length.
inline std::vector<std::uint32_t> canonical_form(const FiniteStructure& a) {
  std::size_t n = a.size();
  if (n <= 8) {
    std::vector<Element> perm(n);
    for (Element i = 0; i < n; ++i) perm[i] = i;
    std::vector<std::uint32_t> best;
    std::vector<Element> inv(n);
    const auto& ops = a.signature().operations();
    Tuple args;
    do {
      for (Element i = 0; i < n; ++i) inv[perm[i]] = i;
      std::vector<std::uint32_t> cur{static_cast<std::uint32_t>(n)};
      bool worse = false;
      // perm[i] = host element placed at position i
      for (std::size_t op = 0; op < ops.size() && !worse; ++op) {
        std::size_t ar = ops[op].arity;
        Tuple idx(ar, 0);
        args.resize(ar);
        do {
          for (std::size_t i = 0; i < ar; ++i) args[i] = perm[idx[i]];
          cur.push_back(inv[a.apply(op, args)]);
          if (!best.empty() && cur.size() <= best.size()) {
            std::size_t j = cur.size() - 1;
            if (std::equal(cur.begin(), cur.end() - 1, best.begin()) && cur[j] > best[j]) {
              worse = true;
              break;
            }
          }
        } while (next_tuple(idx, n));
      }
      if (worse) continue;
      for (std::size_t r = 0; r < a.signature().relations().size(); ++r) {
        std::size_t ar = a.signature().relations()[r].arity;
        Tuple idx(ar, 0);
        args.resize(ar);
        do {
          for (std::size_t i = 0; i < ar; ++i) args[i] = perm[idx[i]];
          cur.push_back(a.holds(r, args) ? 1u : 0u);
        } while (next_tuple(idx, n));
      }
      if (best.empty() || cur < best) best = std::move(cur);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<std::uint32_t> best;
  for (std::size_t g = 0; best.empty(); ++g) {
    Tuple x(g, 0);
    do {
      if (generated_subuniverse(a, x).size() != n) continue;
      auto key = pointed_key(a, x);
      key.erase(key.begin() + 1, key.begin() + 1 + static_cast<std::ptrdiff_t>(g));
      if (best.empty() || key < best) best = std::move(key);
    } while (next_tuple(x, n));
  }
  return best;
}

}  // namespace findef
