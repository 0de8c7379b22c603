#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "findef/formula.hpp"
#include "findef/subpowers.hpp"

namespace findef {

struct Bounds {
  std::size_t max_product_coords = 64;
  std::size_t max_poly_arity = 2;
  std::size_t max_closure = 200000;
  std::size_t max_probes = 1u << 16;  // (tuple, extra-generator assignment) pairs in existential checks
  std::size_t max_extra_generators = 6;
  std::size_t threads = 1;
  bool assume_cd = false;
};

struct DefinabilityQuery {
  std::vector<FiniteStructure> k;
  Signature l;
  Target target;
  SyntacticClass cls = SyntacticClass::Open;
  Bounds bounds;
};

// A map sigma from A0 (a substructure of a product of members, possibly the
// whole product) to B0, with a tuple of A0 in the target on every factor whose
// image lies outside the target.
struct Counterexample {
  MapKind kind = MapKind::Hom;
  std::vector<std::size_t> source_factors;
  std::vector<Tuple> source;
  std::vector<std::size_t> target_factors;
  std::vector<Tuple> target;
  std::vector<std::size_t> sigma;
  std::vector<std::size_t> point;
  bool source_full = false;
  bool target_full = false;
  bool operator==(const Counterexample&) const = default;
};

enum class VerdictKind { Definable, NotDefinable, ResourceExceeded };

inline std::string verdict_kind_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::Definable: return "definable";
    case VerdictKind::NotDefinable: return "not-definable";
    case VerdictKind::ResourceExceeded: return "resource-exceeded";
  }
  return "?";
}

struct Verdict {
  VerdictKind kind = VerdictKind::ResourceExceeded;
  SyntacticClass cls = SyntacticClass::Open;
  std::optional<Formula> witness;
  bool verified = false;
  std::optional<Counterexample> counterexample;
  std::string reason;
  bool bounded = false;  // sound, but the search behind it was cut by a bound

  bool definable() const { return kind == VerdictKind::Definable; }
  bool operator==(const Verdict&) const = default;
};

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errs(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) f(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Independent re-verification of counterexamples

namespace detail {

inline std::size_t tuple_index(const Tuple& t, std::size_t size) {
  std::size_t i = 0;
  for (Element e : t) i = i * size + e;
  return i;
}

}  // namespace detail

// Empty string when the counterexample is valid, else what is wrong with it.
inline std::string counterexample_problem(const DefinabilityQuery& q, const Counterexample& ce,
                                          std::size_t max_work = 1u << 26) {
  std::vector<FiniteStructure> kl;
  std::vector<std::vector<bool>> member;
  for (const auto& a : q.k) {
    kl.push_back(reduct(a, q.l));
    member.push_back(target_membership(a, q.target));
  }
  auto in_range = [&](const std::vector<std::size_t>& fs) {
    for (auto f : fs)
      if (f >= kl.size()) return false;
    return true;
  };
  if (!in_range(ce.source_factors) || !in_range(ce.target_factors)) return "factor index out of range";
  if (ce.target_factors.empty()) return "empty target product";
  if (ce.sigma.size() != ce.source.size()) return "sigma is not total";
  if (ce.source.empty() || ce.target.empty()) return "empty structure";
  auto index_of = [](const std::vector<Tuple>& rows) {
    std::map<Tuple, std::size_t> m;
    for (std::size_t i = 0; i < rows.size(); ++i) m.emplace(rows[i], i);
    return m;
  };
  auto sidx = index_of(ce.source), tidx = index_of(ce.target);
  if (sidx.size() != ce.source.size() || tidx.size() != ce.target.size()) return "repeated elements";
  auto product_size = [&](const std::vector<std::size_t>& fs) {
    std::size_t s = 1;
    for (auto f : fs) s *= kl[f].size();
    return s;
  };
  if (ce.source_full && ce.source.size() != product_size(ce.source_factors)) return "source is not the full product";
  if (ce.target_full && ce.target.size() != product_size(ce.target_factors)) return "target is not the full product";
  for (const auto& r : ce.source)
    if (r.size() != ce.source_factors.size()) return "source row width";
  for (const auto& r : ce.target)
    if (r.size() != ce.target_factors.size()) return "target row width";
  for (auto s : ce.sigma)
    if (s >= ce.target.size()) return "sigma out of range";

  const auto& ops = q.l.operations();
  auto apply_rows = [&](const std::vector<std::size_t>& fs, std::size_t op, const std::vector<const Tuple*>& args) {
    Tuple out(fs.size());
    Tuple a(args.size());
    for (std::size_t c = 0; c < fs.size(); ++c) {
      for (std::size_t j = 0; j < args.size(); ++j) a[j] = (*args[j])[c];
      out[c] = kl[fs[c]].apply(op, a);
    }
    return out;
  };
  std::size_t work = 0;
  for (std::size_t op = 0; op < ops.size(); ++op) {
    std::size_t ar = ops[op].arity;
    work += checked_pow(ce.source.size(), ar, max_work);
    if (work > max_work) throw ResourceExceeded("counterexample verification", work);
    Tuple idx(ar, 0);
    std::vector<const Tuple*> sa(ar), ta(ar);
    do {
      for (std::size_t j = 0; j < ar; ++j) {
        sa[j] = &ce.source[idx[j]];
        ta[j] = &ce.target[ce.sigma[idx[j]]];
      }
      auto s = sidx.find(apply_rows(ce.source_factors, op, sa));
      if (s == sidx.end()) return "source is not closed under '" + ops[op].name + "'";
      auto t = tidx.find(apply_rows(ce.target_factors, op, ta));
      if (t == tidx.end()) return "target is not closed under '" + ops[op].name + "'";
      if (ce.sigma[s->second] != t->second) return "sigma does not commute with '" + ops[op].name + "'";
    } while (next_tuple(idx, ce.source.size()));
  }
  if (ce.kind != MapKind::Hom) {
    std::set<std::size_t> img(ce.sigma.begin(), ce.sigma.end());
    if (img.size() != ce.sigma.size()) return "sigma is not injective";
    if (ce.kind == MapKind::Iso && img.size() != ce.target.size()) return "sigma is not surjective";
  }
  auto holds = [&](const std::vector<std::size_t>& fs, std::size_t rel, const std::vector<const Tuple*>& args) {
    Tuple a(args.size());
    for (std::size_t c = 0; c < fs.size(); ++c) {
      for (std::size_t j = 0; j < args.size(); ++j) a[j] = (*args[j])[c];
      if (!kl[fs[c]].holds(rel, a)) return false;
    }
    return true;
  };
  for (std::size_t rel = 0; rel < q.l.relations().size(); ++rel) {
    std::size_t ar = q.l.relations()[rel].arity;
    work += checked_pow(ce.source.size(), ar, max_work);
    if (work > max_work) throw ResourceExceeded("counterexample verification", work);
    Tuple idx(ar, 0);
    std::vector<const Tuple*> sa(ar), ta(ar);
    do {
      for (std::size_t j = 0; j < ar; ++j) {
        sa[j] = &ce.source[idx[j]];
        ta[j] = &ce.target[ce.sigma[idx[j]]];
      }
      bool a = holds(ce.source_factors, rel, sa), b = holds(ce.target_factors, rel, ta);
      if (a && !b) return "sigma does not preserve '" + q.l.relations()[rel].name + "'";
      if (ce.kind != MapKind::Hom && b && !a) return "sigma does not reflect '" + q.l.relations()[rel].name + "'";
    } while (next_tuple(idx, ce.source.size()));
  }
  std::size_t r = target_variables(q.k[0].signature(), q.target).size();
  if (ce.point.size() != r) return "point has the wrong length";
  for (auto p : ce.point)
    if (p >= ce.source.size()) return "point out of range";
  for (std::size_t c = 0; c < ce.source_factors.size(); ++c) {
    Tuple t;
    for (auto p : ce.point) t.push_back(ce.source[p][c]);
    if (!member[ce.source_factors[c]][detail::tuple_index(t, kl[ce.source_factors[c]].size())])
      return "point is not in the target";
  }
  for (std::size_t c = 0; c < ce.target_factors.size(); ++c) {
    Tuple t;
    for (auto p : ce.point) t.push_back(ce.target[ce.sigma[p]][c]);
    if (!member[ce.target_factors[c]][detail::tuple_index(t, kl[ce.target_factors[c]].size())]) return "";
  }
  return "image of the point is in the target";
}

// ---------------------------------------------------------------------------
// Checks

namespace detail {

struct Item {
  std::size_t member = 0;
  Tuple point;
};

struct TypeInfo {
  std::vector<std::uint32_t> key;
  std::optional<Item> in, out;  // least tuple of the type inside / outside the target
};

struct Refuted {
  Counterexample ce;
  std::string reason;
};

struct Col {
  std::size_t member = 0;
  Tuple gens;
};

// Candidate formulas with their truth values at a fixed list of probes.
struct Pool {
  std::vector<Formula> lits;
  std::vector<std::vector<char>> truth;
};

inline std::string variable_family_w(std::size_t i) { return "w" + std::to_string(i + 1); }

class DefContext {
 public:
  explicit DefContext(const DefinabilityQuery& q) : q_(q) {
    if (q.k.empty()) throw Error("empty class K");
    for (const auto& s : q.target.symbols)
      if (q.l.has_symbol(s)) throw Error("target symbol '" + s + "' belongs to the sublanguage");
    vars_ = target_variables(q.k[0].signature(), q.target);
    for (const auto& a : q.k) {
      if (!q.l.is_sublanguage_of(a.signature()))
        throw Error("sublanguage is not contained in the signature of '" + a.name() + "'");
      if (target_variables(a.signature(), q.target) != vars_) throw Error("members disagree on the target arity");
      kl_.push_back(reduct(a, q.l));
      member_.push_back(target_membership(a, q.target));
    }
  }

  const DefinabilityQuery& query() const { return q_; }
  const std::vector<std::string>& vars() const { return vars_; }
  std::size_t arity() const { return vars_.size(); }
  const FiniteStructure& reduct_of(std::size_t m) const { return kl_[m]; }

  bool in_target(std::size_t m, const Tuple& t) const {
    return member_[m][tuple_index(Tuple(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(arity())), kl_[m].size())];
  }

  Formula tautology() const { return Formula::eq(Term::variable(vars_[0]), Term::variable(vars_[0])); }

  const std::vector<TypeInfo>& types() {
    if (types_) return *types_;
    std::vector<Item> items;
    for (std::size_t m = 0; m < kl_.size(); ++m) {
      checked_pow(kl_[m].size(), arity(), q_.bounds.max_probes);
      Tuple x(arity(), 0);
      do items.push_back({m, x});
      while (next_tuple(x, kl_[m].size()));
    }
    std::vector<std::vector<std::uint32_t>> keys(items.size());
    parallel_for(items.size(), q_.bounds.threads,
                 [&](std::size_t i) { keys[i] = pointed_key(kl_[items[i].member], items[i].point, q_.bounds.max_closure); });
    std::map<std::vector<std::uint32_t>, std::size_t> index;
    std::vector<TypeInfo> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto [it, fresh] = index.emplace(keys[i], out.size());
      if (fresh) out.push_back({keys[i], {}, {}});
      auto& t = out[it->second];
      auto& slot = in_target(items[i].member, items[i].point) ? t.in : t.out;
      if (!slot) slot = items[i];
    }
    std::stable_sort(out.begin(), out.end(), [](const TypeInfo& a, const TypeInfo& b) {
      if (a.key[0] != b.key[0]) return a.key[0] < b.key[0];
      return a.key < b.key;
    });
    types_ = std::move(out);
    return *types_;
  }

  std::unique_ptr<ProductClosure> close(const std::vector<Col>& src, const std::vector<Col>& dst, bool reverse) const {
    std::vector<ClosureColumn> cols;
    for (const auto& c : src) cols.push_back({&kl_[c.member], c.gens});
    for (const auto& c : dst) cols.push_back({&kl_[c.member], c.gens});
    ClosureOptions opt;
    opt.split = src.size();
    opt.check_reverse = reverse;
    opt.max_size = q_.bounds.max_closure;
    auto pc = std::make_unique<ProductClosure>(std::move(cols), opt);
    if (pc->status() == ClosureStatus::SizeExceeded || pc->status() == ClosureStatus::RoundsExceeded)
      throw ResourceExceeded("generated substructure of a product exceeds max_closure", pc->size());
    return pc;
  }

  struct Separation {
    bool found = false;
    bool reverse = false;  // the atom holds on the target block and fails on the source block
    std::optional<Formula> atom;
  };

  Separation separate(const ProductClosure& pc, bool reflect, const std::vector<std::string>& vars) const {
    if (pc.status() == ClosureStatus::Conflict) {
      const auto& c = pc.conflicts()[0];
      return {true, c.reverse, Formula::eq(pc.term(c.existing, vars), pc.derivation_term(c.fresh, vars))};
    }
    if (!q_.l.relations().empty())
      if (auto v = relation_violation(pc, reflect)) {
        std::vector<Term> args;
        for (auto e : v->elements) args.push_back(pc.term(e, vars));
        return {true, v->reverse, Formula::rel(q_.l.relations()[v->relation].name, std::move(args))};
      }
    return {};
  }

  // On a complete conflict-free closure: an atom true on the target block and
  // false on the source block, i.e. what the closure with the blocks swapped
  // would report.
  Separation separate_backward(const ProductClosure& pc, const std::vector<std::string>& vars) const {
    std::map<Tuple, std::uint32_t> seen;
    std::size_t s = pc.split();
    for (std::size_t i = 0; i < pc.size(); ++i) {
      auto e = pc.element(i);
      auto [it, fresh] = seen.emplace(Tuple(e.begin() + static_cast<std::ptrdiff_t>(s), e.end()), static_cast<std::uint32_t>(i));
      if (!fresh) return {true, true, Formula::eq(pc.term(it->second, vars), pc.term(i, vars))};
    }
    if (!q_.l.relations().empty())
      if (auto v = relation_violation(pc, true)) {
        std::vector<Term> args;
        for (auto e : v->elements) args.push_back(pc.term(e, vars));
        return {true, true, Formula::rel(q_.l.relations()[v->relation].name, std::move(args))};
      }
    return {};
  }

  Counterexample map_counterexample(const ProductClosure& pc, const std::vector<Col>& src, const std::vector<Col>& dst,
                                    MapKind kind) const {
    Counterexample ce;
    ce.kind = kind;
    for (const auto& c : src) ce.source_factors.push_back(c.member);
    for (const auto& c : dst) ce.target_factors.push_back(c.member);
    std::size_t s = pc.split();
    std::map<Tuple, std::size_t> tindex;
    for (std::size_t i = 0; i < pc.size(); ++i) {
      auto e = pc.element(i);
      ce.source.emplace_back(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(s));
      Tuple t(e.begin() + static_cast<std::ptrdiff_t>(s), e.end());
      auto [it, fresh] = tindex.emplace(t, ce.target.size());
      if (fresh) ce.target.push_back(std::move(t));
      ce.sigma.push_back(it->second);
    }
    for (std::size_t g = 0; g < arity(); ++g) {
      Tuple full;
      for (const auto& c : src) full.push_back(c.gens[g]);
      for (const auto& c : dst) full.push_back(c.gens[g]);
      ce.point.push_back(*pc.find(full));
    }
    return ce;
  }

  bool eval(const Formula& f, std::size_t m, const std::vector<std::string>& vars, const Tuple& values) const {
    return CompiledFormula(q_.k[m], f, vars).eval(values);
  }

  // Extra generators making (point, extras) generate the whole product of `factors`.
  Tuple extra_generators(const std::vector<std::size_t>& factors, const std::vector<Tuple>& points,
                         std::vector<Tuple>& extras) const {
    std::vector<std::size_t> radices;
    std::size_t total = 1;
    for (auto f : factors) {
      radices.push_back(kl_[f].size());
      total *= kl_[f].size();
      if (total > q_.bounds.max_closure) throw ResourceExceeded("product exceeds max_closure", total);
    }
    extras.clear();
    if (factors.empty()) return {};
    std::vector<ClosureColumn> cols;
    for (std::size_t c = 0; c < factors.size(); ++c) cols.push_back({&kl_[factors[c]], points[c]});
    ClosureOptions opt;
    opt.max_size = q_.bounds.max_closure;
    ProductClosure pc(std::move(cols), opt);
    while (true) {
      if (!pc.complete()) throw ResourceExceeded("product exceeds max_closure", pc.size());
      if (pc.size() == total) return {};
      if (extras.size() >= q_.bounds.max_extra_generators)
        throw ResourceExceeded("product needs more than max_extra_generators extra generators", extras.size());
      Tuple x(factors.size(), 0);
      while (true) {
        if (!pc.find(x)) break;
        for (std::size_t c = factors.size(); c-- > 0;) {
          if (++x[c] < radices[c]) break;
          x[c] = 0;
        }
      }
      extras.push_back(x);
      pc.add_generator(x);
    }
  }

 private:
  const DefinabilityQuery& q_;
  std::vector<std::string> vars_;
  std::vector<FiniteStructure> kl_;
  std::vector<std::vector<bool>> member_;
  std::optional<std::vector<TypeInfo>> types_;
};

inline std::size_t pool_add(Pool& pool, Formula f, const std::function<bool(const Formula&, std::size_t)>& eval,
                            std::size_t nprobes) {
  std::vector<char> t(nprobes);
  for (std::size_t p = 0; p < nprobes; ++p) t[p] = eval(f, p) ? 1 : 0;
  pool.lits.push_back(std::move(f));
  pool.truth.push_back(std::move(t));
  return pool.lits.size() - 1;
}

// Greedy set cover: literals allowed by `usable` that together fail at every probe in `need`.
// `make(d)` adds a usable literal failing at d and returns its index.
inline std::vector<std::size_t> greedy_cover(const Pool& pool, const std::function<bool(std::size_t)>& usable,
                                             std::vector<std::size_t> need,
                                             const std::function<std::size_t(std::size_t)>& make) {
  std::vector<std::size_t> chosen;
  while (!need.empty()) {
    std::size_t best = static_cast<std::size_t>(-1), best_n = 0;
    for (std::size_t l = 0; l < pool.lits.size(); ++l) {
      if (!usable(l)) continue;
      std::size_t n = 0;
      for (auto d : need) n += pool.truth[l][d] ? 0 : 1;
      if (n > best_n) {
        best = l;
        best_n = n;
      }
    }
    if (best_n == 0) best = make(need.front());
    chosen.push_back(best);
    std::vector<std::size_t> rest;
    for (auto d : need)
      if (pool.truth[best][d]) rest.push_back(d);
    if (rest.size() == need.size()) throw Error("internal: cover literal does not fail at its probe");
    need = std::move(rest);
  }
  return chosen;
}

// Removes conjuncts in order while the conjunction stays false at every probe in `need`.
inline void drop_redundant(const Pool& pool, std::vector<std::size_t>& conj, const std::vector<std::size_t>& need) {
  for (std::size_t i = 0; i < conj.size();) {
    bool ok = true;
    for (auto d : need) {
      bool fails = false;
      for (std::size_t j = 0; j < conj.size() && !fails; ++j) fails = j != i && !pool.truth[conj[j]][d];
      if (!fails) {
        ok = false;
        break;
      }
    }
    if (ok) {
      conj.erase(conj.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
}

inline Verdict definable(SyntacticClass c, Formula w) {
  Verdict v;
  v.kind = VerdictKind::Definable;
  v.cls = c;
  v.witness = std::move(w);
  return v;
}

inline Verdict refuted(SyntacticClass c, Refuted r) {
  Verdict v;
  v.kind = VerdictKind::NotDefinable;
  v.cls = c;
  v.counterexample = std::move(r.ce);
  v.reason = std::move(r.reason);
  return v;
}

inline Verdict exceeded(SyntacticClass c, const std::string& why, bool bounded = true) {
  Verdict v;
  v.kind = VerdictKind::ResourceExceeded;
  v.cls = c;
  v.reason = why;
  v.bounded = bounded;
  return v;
}

inline void verify_witness(const DefinabilityQuery& q, Verdict& v) {
  if (!v.definable()) return;
  if (!in_class(*v.witness, v.cls))
    throw Error("internal: synthesized witness " + v.witness->to_string() + " is outside class " + class_name(v.cls));
  auto rep = defines(q.k, *v.witness, q.target);
  if (!rep) throw Error("internal: synthesized witness " + v.witness->to_string() + " fails on member " +
                        std::to_string(rep.member));
  v.verified = true;
}

inline std::string map_failure_reason(MapKind k) {
  switch (k) {
    case MapKind::Hom: return "a homomorphism does not preserve the target";
    case MapKind::Embedding: return "an embedding does not preserve the target";
    case MapKind::Iso: return "an isomorphism does not preserve the target";
  }
  return "";
}

// --- open and positive open -------------------------------------------------

inline Verdict atomic_conj_impl(DefContext& cx, SyntacticClass cls);

inline Verdict open_impl(DefContext& cx, bool positive) {
  SyntacticClass cls = positive ? SyntacticClass::PositiveOpen : SyntacticClass::Open;
  const auto& types = cx.types();
  if (!positive)
    for (const auto& t : types)
      if (t.in && t.out) {
        std::vector<Col> s{{t.in->member, t.in->point}}, d{{t.out->member, t.out->point}};
        auto pc = cx.close(s, d, true);
        if (!pc->complete()) throw Error("internal: pointed-isomorphic tuples do not close to an isomorphism");
        return refuted(cls, {cx.map_counterexample(*pc, s, d, MapKind::Iso), map_failure_reason(MapKind::Iso)});
      }
  // Probes: the R-side representatives, then the other side.
  std::vector<Item> probes;
  std::vector<std::size_t> rside, nside;
  for (const auto& t : types)
    if (t.in) {
      rside.push_back(probes.size());
      probes.push_back(*t.in);
    }
  for (const auto& t : types)
    if (t.out) {
      nside.push_back(probes.size());
      probes.push_back(*t.out);
    }
  if (rside.empty()) {
    if (positive) return atomic_conj_impl(cx, cls);
    return definable(cls, Formula::negate(cx.tautology()));
  }
  if (nside.empty()) return definable(cls, cx.tautology());
  Pool pool;
  auto ev = [&](const Formula& f, std::size_t p) { return cx.eval(f, probes[p].member, cx.vars(), probes[p].point); };
  std::vector<std::vector<std::size_t>> disjuncts;
  std::vector<std::size_t> uncovered = rside;
  while (!uncovered.empty()) {
    std::size_t c = uncovered.front();
    auto make = [&](std::size_t d) -> std::size_t {
      std::vector<Col> s{{probes[c].member, probes[c].point}}, t{{probes[d].member, probes[d].point}};
      auto pc = cx.close(s, t, !positive);
      auto sep = cx.separate(*pc, !positive, cx.vars());
      if (!sep.found) {
        if (!positive) throw Error("internal: distinct pointed types close to an isomorphism");
        throw Refuted{cx.map_counterexample(*pc, s, t, MapKind::Hom), map_failure_reason(MapKind::Hom)};
      }
      Formula lit = sep.reverse ? Formula::negate(*sep.atom) : *sep.atom;
      return pool_add(pool, lit, ev, probes.size());
    };
    auto conj = greedy_cover(pool, [&](std::size_t l) { return pool.truth[l][c] != 0; }, nside, make);
    drop_redundant(pool, conj, nside);
    std::vector<std::size_t> rest;
    for (auto p : uncovered) {
      bool all = true;
      for (auto l : conj) all = all && pool.truth[l][p];
      if (!all) rest.push_back(p);
    }
    uncovered = std::move(rest);
    disjuncts.push_back(std::move(conj));
  }
  for (std::size_t i = 0; i < disjuncts.size();) {
    bool redundant = true;
    for (auto p : rside) {
      bool covered = false;
      for (std::size_t j = 0; j < disjuncts.size() && !covered; ++j) {
        if (j == i) continue;
        bool all = true;
        for (auto l : disjuncts[j]) all = all && pool.truth[l][p];
        covered = all;
      }
      if (!covered) {
        redundant = false;
        break;
      }
    }
    if (redundant) {
      disjuncts.erase(disjuncts.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  std::vector<Formula> ds;
  for (const auto& d : disjuncts) {
    std::vector<Formula> ls;
    for (auto l : d) ls.push_back(pool.lits[l]);
    ds.push_back(Formula::conj(std::move(ls)));
  }
  return definable(cls, Formula::disj(std::move(ds)));
}

// --- conjunctions of atomic formulas -----------------------------------------

inline Verdict atomic_conj_impl(DefContext& cx, SyntacticClass cls) {
  const auto& types = cx.types();
  std::vector<Col> src;
  std::vector<Item> probes;
  for (const auto& t : types)
    if (t.in) src.push_back({t.in->member, t.in->point});
  for (const auto& t : types)
    if (t.out) probes.push_back(*t.out);
  if (probes.empty()) return definable(cls, cx.tautology());
  if (src.size() > cx.query().bounds.max_product_coords)
    return exceeded(cls, "more pointed types in the target than max_product_coords");
  Pool pool;
  auto ev = [&](const Formula& f, std::size_t p) { return cx.eval(f, probes[p].member, cx.vars(), probes[p].point); };
  std::vector<std::size_t> need(probes.size());
  for (std::size_t i = 0; i < need.size(); ++i) need[i] = i;
  auto make = [&](std::size_t d) -> std::size_t {
    std::vector<Col> t{{probes[d].member, probes[d].point}};
    auto pc = cx.close(src, t, false);
    auto sep = cx.separate(*pc, false, cx.vars());
    if (!sep.found) {
      Refuted r{cx.map_counterexample(*pc, src, t, MapKind::Hom), map_failure_reason(MapKind::Hom)};
      if (src.empty()) r.reason = "positive classes define only nonempty-consistent relations";
      throw r;
    }
    return pool_add(pool, *sep.atom, ev, probes.size());
  };
  auto conj = greedy_cover(pool, [](std::size_t) { return true; }, need, make);
  drop_redundant(pool, conj, need);
  std::vector<Formula> ls;
  for (auto l : conj) ls.push_back(pool.lits[l]);
  return definable(cls, Formula::conj(std::move(ls)));
}

// --- open Horn ----------------------------------------------------------------

inline Verdict open_horn_impl(DefContext& cx, bool strict) {
  SyntacticClass cls = strict ? SyntacticClass::OpenStrictHorn : SyntacticClass::OpenHorn;
  const auto& types = cx.types();
  std::vector<Item> probes;
  std::vector<std::size_t> rside, nside;
  for (const auto& t : types)
    if (t.in) {
      rside.push_back(probes.size());
      probes.push_back(*t.in);
    }
  for (const auto& t : types)
    if (t.out) {
      nside.push_back(probes.size());
      probes.push_back(*t.out);
    }
  if (nside.empty()) return definable(cls, cx.tautology());
  if (rside.empty()) {
    if (strict) return atomic_conj_impl(cx, cls);
    return definable(cls, Formula::negate(cx.tautology()));
  }
  Pool pool;
  auto ev = [&](const Formula& f, std::size_t p) { return cx.eval(f, probes[p].member, cx.vars(), probes[p].point); };
  auto col = [&](std::size_t p) { return Col{probes[p].member, probes[p].point}; };
  struct Clause {
    std::vector<std::size_t> premises;
    std::optional<std::size_t> head;
  };
  auto clause_true = [&](const Clause& c, std::size_t p) {
    for (auto l : c.premises)
      if (!pool.truth[l][p]) return true;
    return c.head && pool.truth[*c.head][p];
  };
  std::vector<Clause> clauses;
  std::vector<std::size_t> uncovered = nside;
  while (!uncovered.empty()) {
    std::size_t d = uncovered.front();
    std::vector<std::size_t> xs, others;
    for (auto c : rside) {
      bool sep = false;
      for (std::size_t l = 0; l < pool.lits.size() && !sep; ++l) sep = pool.truth[l][d] && !pool.truth[l][c];
      if (!sep) {
        auto pc = cx.close({col(d)}, {col(c)}, false);
        auto s = cx.separate(*pc, false, cx.vars());
        if (s.found) {
          pool_add(pool, *s.atom, ev, probes.size());
          sep = true;
        }
      }
      (sep ? others : xs).push_back(c);
    }
    Clause cl;
    if (!xs.empty() || strict) {
      for (std::size_t l = 0; l < pool.lits.size() && !cl.head; ++l) {
        bool ok = !pool.truth[l][d];
        for (auto c : xs) ok = ok && pool.truth[l][c];
        if (ok) cl.head = l;
      }
      if (!cl.head) {
        std::vector<Col> src;
        for (auto c : xs) src.push_back(col(c));
        auto pc = cx.close(src, {col(d)}, false);
        auto s = cx.separate(*pc, false, cx.vars());
        if (!s.found) {
          auto iso = cx.close(src, {col(d)}, true);
          bool is_iso = iso->complete() && !cx.separate(*iso, true, cx.vars()).found;
          if (!is_iso) throw Error("internal: homomorphisms in both directions do not compose to an isomorphism");
          Refuted r{cx.map_counterexample(*iso, src, {col(d)}, MapKind::Iso), map_failure_reason(MapKind::Iso)};
          if (src.empty()) r.reason = "strict Horn formulas cannot exclude a trivial substructure";
          throw r;
        }
        cl.head = pool_add(pool, *s.atom, ev, probes.size());
      }
    }
    auto usable = [&](std::size_t l) { return pool.truth[l][d] != 0; };
    auto make = [&](std::size_t c) -> std::size_t {
      auto pc = cx.close({col(d)}, {col(c)}, false);
      auto s = cx.separate(*pc, false, cx.vars());
      if (!s.found) throw Error("internal: premise atom vanished");
      return pool_add(pool, *s.atom, ev, probes.size());
    };
    cl.premises = greedy_cover(pool, usable, others, make);
    for (std::size_t i = 0; i < cl.premises.size();) {
      Clause t = cl;
      t.premises.erase(t.premises.begin() + static_cast<std::ptrdiff_t>(i));
      bool ok = !t.premises.empty() || t.head;
      for (auto c : rside) ok = ok && clause_true(t, c);
      if (ok) {
        cl = std::move(t);
      } else {
        ++i;
      }
    }
    std::vector<std::size_t> rest;
    for (auto p : uncovered)
      if (clause_true(cl, p)) rest.push_back(p);
    if (rest.size() == uncovered.size()) throw Error("internal: Horn clause does not exclude its tuple");
    uncovered = std::move(rest);
    clauses.push_back(std::move(cl));
  }
  for (std::size_t i = 0; i < clauses.size();) {
    bool redundant = true;
    for (auto p : nside) {
      bool excluded = false;
      for (std::size_t j = 0; j < clauses.size() && !excluded; ++j) excluded = j != i && !clause_true(clauses[j], p);
      if (!excluded) {
        redundant = false;
        break;
      }
    }
    if (redundant) {
      clauses.erase(clauses.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  std::vector<Formula> fs;
  for (const auto& c : clauses) {
    std::vector<Formula> prem;
    for (auto l : c.premises) prem.push_back(pool.lits[l]);
    if (c.head && prem.empty()) {
      fs.push_back(pool.lits[*c.head]);
    } else if (c.head) {
      fs.push_back(Formula::implies(Formula::conj(std::move(prem)), pool.lits[*c.head]));
    } else {
      std::vector<Formula> neg;
      for (auto& p : prem) neg.push_back(Formula::negate(p));
      fs.push_back(Formula::disj(std::move(neg)));
    }
  }
  return definable(cls, Formula::conj(std::move(fs)));
}

// --- existential classes -----------------------------------------------------

// A probe of an existential check: member, then the target tuple followed by
// values of the existential variables.
struct WideProbe {
  std::size_t member = 0;
  Tuple values;
};

inline std::vector<std::string> wide_vars(const DefContext& cx, std::size_t extra, std::size_t offset = 0) {
  auto v = cx.vars();
  for (std::size_t i = 0; i < extra; ++i) v.push_back(variable_family_w(offset + i));
  return v;
}

// Probes (B, d, e') for every tuple d outside the target and every e' in B^extra.
inline std::vector<WideProbe> outside_probes(const DefContext& cx, std::size_t extra) {
  const auto& q = cx.query();
  std::vector<WideProbe> out;
  std::size_t r = cx.arity();
  for (std::size_t m = 0; m < q.k.size(); ++m) {
    std::size_t n = q.k[m].size();
    checked_pow(n, r + extra, q.bounds.max_probes);
    Tuple x(r + extra, 0);
    do {
      if (!cx.in_target(m, x)) {
        out.push_back({m, x});
        if (out.size() > q.bounds.max_probes) throw ResourceExceeded("existential probes exceed max_probes", out.size());
      }
    } while (next_tuple(x, n));
  }
  return out;
}

inline std::vector<Item> inside_items(const DefContext& cx) {
  std::vector<Item> out;
  for (std::size_t m = 0; m < cx.query().k.size(); ++m) {
    Tuple x(cx.arity(), 0);
    do
      if (cx.in_target(m, x)) out.push_back({m, x});
    while (next_tuple(x, cx.query().k[m].size()));
  }
  return out;
}

// ∃Op (reflect) and ∃⋁⋀At: one existential disjunct per target tuple of a member,
// binding extra variables to generators of the whole member.
inline Verdict exist_open_impl(DefContext& cx, bool positive) {
  SyntacticClass cls = positive ? SyntacticClass::ExistPositive : SyntacticClass::Existential;
  MapKind kind = positive ? MapKind::Hom : MapKind::Embedding;
  auto items = inside_items(cx);
  if (items.empty()) {
    if (!positive) return definable(cls, Formula::negate(cx.tautology()));
    return atomic_conj_impl(cx, cls);
  }
  std::vector<std::vector<std::size_t>> disjunct_lits;
  std::vector<Formula> disjuncts;
  std::vector<std::string> all_w;
  std::size_t next_w = 0;
  std::vector<bool> covered(items.size(), false);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (covered[i]) continue;
    const auto& c = items[i];
    std::vector<Tuple> extras;
    cx.extra_generators({c.member}, {c.point}, extras);
    Tuple gens = c.point;
    for (const auto& e : extras) gens.push_back(e[0]);
    auto vars = wide_vars(cx, extras.size(), next_w);
    next_w += extras.size();
    auto probes = outside_probes(cx, extras.size());
    Pool pool;
    auto ev = [&](const Formula& f, std::size_t p) { return cx.eval(f, probes[p].member, vars, probes[p].values); };
    std::vector<std::size_t> need(probes.size());
    for (std::size_t p = 0; p < need.size(); ++p) need[p] = p;
    std::vector<Col> src{{c.member, gens}};
    auto make = [&](std::size_t d) -> std::size_t {
      std::vector<Col> t{{probes[d].member, probes[d].values}};
      auto pc = cx.close(src, t, !positive);
      auto sep = cx.separate(*pc, !positive, vars);
      if (!sep.found) {
        auto ce = cx.map_counterexample(*pc, src, t, kind);
        ce.source_full = true;
        throw Refuted{std::move(ce), map_failure_reason(kind)};
      }
      return pool_add(pool, sep.reverse ? Formula::negate(*sep.atom) : *sep.atom, ev, probes.size());
    };
    auto conj = greedy_cover(pool, [](std::size_t) { return true; }, need, make);
    drop_redundant(pool, conj, need);
    std::vector<Formula> ls;
    for (auto l : conj) ls.push_back(pool.lits[l]);
    Formula body = ls.empty() ? cx.tautology() : Formula::conj(std::move(ls));
    std::vector<std::string> used;
    auto fv = body.free_variables();
    for (std::size_t j = cx.arity(); j < vars.size(); ++j)
      if (std::find(fv.begin(), fv.end(), vars[j]) != fv.end()) used.push_back(vars[j]);
    Formula closed = Formula::exists(used, body);
    for (std::size_t j = i; j < items.size(); ++j)
      if (!covered[j]) covered[j] = cx.eval(closed, items[j].member, cx.vars(), items[j].point);
    if (!covered[i]) throw Error("internal: existential disjunct fails at its own tuple");
    all_w.insert(all_w.end(), used.begin(), used.end());
    disjuncts.push_back(std::move(body));
  }
  // Renumber the existential variables densely in order of appearance.
  std::unordered_map<std::string, Term> ren;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < all_w.size(); ++i) {
    names.push_back(variable_family_w(i));
    ren.emplace(all_w[i], Term::variable(names.back()));
  }
  Formula body = Formula::disj(std::move(disjuncts)).substitute(ren);
  return definable(cls, Formula::exists(names, body));
}

// Homomorphisms between whole members that move a target tuple outside the target.
inline std::optional<Refuted> member_hom_failure(DefContext& cx, MapKind kind) {
  const auto& q = cx.query();
  for (std::size_t a = 0; a < q.k.size(); ++a)
    for (std::size_t b = 0; b < q.k.size(); ++b) {
      auto maps = find_maps(Subuniverse::full(cx.reduct_of(a)), Subuniverse::full(cx.reduct_of(b)), kind);
      for (const auto& m : maps) {
        Tuple x(cx.arity(), 0);
        do {
          if (!cx.in_target(a, x)) continue;
          Tuple y;
          for (Element e : x) y.push_back(m.image[e]);
          if (cx.in_target(b, y)) continue;
          Counterexample ce;
          ce.kind = kind;
          ce.source_factors = {a};
          ce.target_factors = {b};
          for (Element e = 0; e < cx.reduct_of(a).size(); ++e) {
            ce.source.push_back({e});
            ce.sigma.push_back(m.image[e]);
          }
          for (Element e = 0; e < cx.reduct_of(b).size(); ++e) ce.target.push_back({e});
          for (Element e : x) ce.point.push_back(e);
          ce.source_full = ce.target_full = true;
          return Refuted{std::move(ce), map_failure_reason(kind)};
        } while (next_tuple(x, cx.reduct_of(a).size()));
      }
    }
  return std::nullopt;
}

// The product P of all members over the target tuples, generated by its point
// and a few extra elements.
struct TargetProduct {
  std::vector<Col> cols;
  std::size_t extra = 0;
};

inline TargetProduct target_product(DefContext& cx) {
  auto items = inside_items(cx);
  if (items.size() > cx.query().bounds.max_product_coords)
    throw ResourceExceeded("target tuples exceed max_product_coords", items.size());
  std::vector<std::size_t> factors;
  std::vector<Tuple> points;
  for (const auto& it : items) {
    factors.push_back(it.member);
    points.push_back(it.point);
  }
  std::vector<Tuple> extras;
  cx.extra_generators(factors, points, extras);
  TargetProduct tp;
  tp.extra = extras.size();
  for (std::size_t c = 0; c < items.size(); ++c) {
    Tuple g = points[c];
    for (const auto& e : extras) g.push_back(e[c]);
    tp.cols.push_back({factors[c], g});
  }
  return tp;
}

inline Formula quantify_used(const DefContext& cx, const std::vector<std::string>& vars, const Formula& body) {
  auto fv = body.free_variables();
  std::vector<std::string> used;
  for (std::size_t j = cx.arity(); j < vars.size(); ++j)
    if (std::find(fv.begin(), fv.end(), vars[j]) != fv.end()) used.push_back(vars[j]);
  return Formula::exists(used, body);
}

// PP: a homomorphism from P to a member sending the point outside the target
// refutes; otherwise the conflict atoms form the matrix of the witness.
inline Verdict pp_product_impl(DefContext& cx) {
  SyntacticClass cls = SyntacticClass::PP;
  auto tp = target_product(cx);
  auto vars = wide_vars(cx, tp.extra);
  auto probes = outside_probes(cx, tp.extra);
  if (probes.empty()) return definable(cls, cx.tautology());
  Pool pool;
  auto ev = [&](const Formula& f, std::size_t p) { return cx.eval(f, probes[p].member, vars, probes[p].values); };
  std::vector<std::size_t> need(probes.size());
  for (std::size_t p = 0; p < need.size(); ++p) need[p] = p;
  auto make = [&](std::size_t d) -> std::size_t {
    std::vector<Col> t{{probes[d].member, probes[d].values}};
    auto pc = cx.close(tp.cols, t, false);
    auto sep = cx.separate(*pc, false, vars);
    if (!sep.found) {
      auto ce = cx.map_counterexample(*pc, tp.cols, t, MapKind::Hom);
      ce.source_full = true;
      Refuted r{std::move(ce), "a homomorphism from a product of members does not preserve the target"};
      if (tp.cols.empty()) r.reason = "positive classes define only nonempty-consistent relations";
      throw r;
    }
    return pool_add(pool, *sep.atom, ev, probes.size());
  };
  auto conj = greedy_cover(pool, [](std::size_t) { return true; }, need, make);
  drop_redundant(pool, conj, need);
  std::vector<Formula> ls;
  for (auto l : conj) ls.push_back(pool.lits[l]);
  return definable(cls, quantify_used(cx, vars, Formula::conj(std::move(ls))));
}

// ∃Horn diagram over P: atoms true at P's point and negated atoms false there.
inline std::optional<Formula> exist_horn_diagram(DefContext& cx) {
  auto tp = target_product(cx);
  auto vars = wide_vars(cx, tp.extra);
  auto probes = outside_probes(cx, tp.extra);
  if (probes.empty()) return cx.tautology();
  if (tp.cols.empty()) return std::nullopt;
  Pool pool;
  auto ev = [&](const Formula& f, std::size_t p) { return cx.eval(f, probes[p].member, vars, probes[p].values); };
  std::vector<std::size_t> need(probes.size());
  for (std::size_t p = 0; p < need.size(); ++p) need[p] = p;
  auto make = [&](std::size_t d) -> std::size_t {
    std::vector<Col> t{{probes[d].member, probes[d].values}};
    auto pc = cx.close(tp.cols, t, false);
    auto sep = cx.separate(*pc, false, vars);
    if (sep.found) return pool_add(pool, *sep.atom, ev, probes.size());
    auto s2 = cx.separate_backward(*pc, vars);
    if (s2.found) return pool_add(pool, Formula::negate(*s2.atom), ev, probes.size());
    auto ce = cx.map_counterexample(*pc, tp.cols, t, MapKind::Embedding);
    ce.source_full = true;
    throw Refuted{std::move(ce), "an embedding of a product of members does not preserve the target"};
  };
  auto conj = greedy_cover(pool, [](std::size_t) { return true; }, need, make);
  drop_redundant(pool, conj, need);
  std::vector<Formula> ls;
  for (auto l : conj) ls.push_back(pool.lits[l]);
  Formula f = quantify_used(cx, vars, Formula::conj(std::move(ls)));
  if (!defines(cx.query().k, f, cx.query().target)) return std::nullopt;
  return f;
}

// Embeddings from products of at most `j` members into members.
inline std::optional<Refuted> product_embedding_failure(DefContext& cx, std::size_t j) {
  const auto& q = cx.query();
  std::size_t max_b = 0;
  for (const auto& a : q.k) max_b = std::max(max_b, a.size());
  std::vector<std::size_t> fs;
  std::optional<Refuted> found;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t from, std::size_t size) {
    if (found) return;
    if (fs.size() >= 2) {
      std::vector<const FiniteStructure*> ptrs;
      for (auto f : fs) ptrs.push_back(&cx.reduct_of(f));
      auto p = product(ptrs);
      auto enc = product_encoding(ptrs);
      for (std::size_t b = 0; b < q.k.size() && !found; ++b) {
        if (p.size() > q.k[b].size()) continue;
        for (const auto& m : find_maps(Subuniverse::full(p), Subuniverse::full(cx.reduct_of(b)), MapKind::Embedding)) {
          Tuple x(cx.arity(), 0);
          do {
            bool in = true;
            std::vector<Tuple> rows;
            for (Element e : x) rows.push_back(enc.decode(e));
            for (std::size_t c = 0; c < fs.size() && in; ++c) {
              Tuple t;
              for (const auto& r : rows) t.push_back(r[c]);
              in = cx.in_target(fs[c], t);
            }
            if (!in) continue;
            Tuple y;
            for (Element e : x) y.push_back(m.image[e]);
            if (cx.in_target(b, y)) continue;
            Counterexample ce;
            ce.kind = MapKind::Embedding;
            ce.source_factors = fs;
            ce.target_factors = {b};
            for (Element e = 0; e < p.size(); ++e) {
              ce.source.push_back(enc.decode(e));
              ce.sigma.push_back(m.image[e]);
            }
            for (Element e = 0; e < q.k[b].size(); ++e) ce.target.push_back({e});
            for (Element e : x) ce.point.push_back(e);
            ce.source_full = ce.target_full = true;
            found = Refuted{std::move(ce), "an embedding of a product of members does not preserve the target"};
            break;
          } while (next_tuple(x, p.size()));
          if (found) break;
        }
      }
    }
    if (fs.size() >= j) return;
    for (std::size_t f = from; f < q.k.size(); ++f) {
      if (size * q.k[f].size() > max_b) continue;
      fs.push_back(f);
      rec(f, size * q.k[f].size());
      fs.pop_back();
      if (found) return;
    }
  };
  rec(0, 1);
  return found;
}

template <class F>
Verdict guarded(SyntacticClass cls, F&& f) {
  try {
    return f();
  } catch (Refuted& r) {
    return refuted(cls, std::move(r));
  } catch (ResourceExceeded& e) {
    return exceeded(cls, e.what());
  }
}

inline Verdict with_class(Verdict v, SyntacticClass cls) {
  v.cls = cls;
  return v;
}

inline Verdict check_impl(DefContext& cx, SyntacticClass cls) {
  using C = SyntacticClass;
  const auto& q = cx.query();
  switch (cls) {
    case C::Open: return guarded(cls, [&] { return open_impl(cx, false); });
    case C::PositiveOpen: return guarded(cls, [&] { return open_impl(cx, true); });
    case C::OpenHorn: return guarded(cls, [&] { return open_horn_impl(cx, false); });
    case C::OpenStrictHorn: return guarded(cls, [&] { return open_horn_impl(cx, true); });
    case C::AtomicConj: return guarded(cls, [&] { return atomic_conj_impl(cx, cls); });
    case C::Existential:
    case C::ExistPositive: {
      auto open = check_impl(cx, open_part(cls));
      if (open.definable()) return with_class(open, cls);
      return guarded(cls, [&] { return exist_open_impl(cx, cls == C::ExistPositive); });
    }
    case C::PP: {
      if (auto r = member_hom_failure(cx, MapKind::Hom)) return refuted(cls, std::move(*r));
      auto open = check_impl(cx, C::AtomicConj);
      if (open.definable()) return with_class(open, cls);
      return guarded(cls, [&] { return pp_product_impl(cx); });
    }
    case C::ExistHorn: {
      auto open = check_impl(cx, C::OpenHorn);
      if (open.definable()) return with_class(open, cls);
      auto eop = check_impl(cx, C::Existential);
      if (eop.kind == VerdictKind::NotDefinable) return with_class(eop, cls);
      auto pp = check_impl(cx, C::PP);
      if (pp.definable()) return with_class(pp, cls);
      Verdict v = guarded(cls, [&]() -> Verdict {
        if (auto r = product_embedding_failure(cx, q.bounds.max_poly_arity)) throw *r;
        if (auto f = exist_horn_diagram(cx)) return definable(cls, *f);
        return exceeded(cls, "no existential Horn witness found and no counterexample within the product bound");
      });
      return v;
    }
  }
  throw Error("unknown class");
}

}  // namespace detail

inline Verdict check(const DefinabilityQuery& q) {
  detail::DefContext cx(q);
  Verdict v = detail::check_impl(cx, q.cls);
  detail::verify_witness(q, v);
  return v;
}

inline Verdict check_class(DefinabilityQuery q, SyntacticClass c) {
  q.cls = c;
  return check(q);
}

inline Verdict check_open(const DefinabilityQuery& q) { return check_class(q, SyntacticClass::Open); }
inline Verdict check_positive_open(const DefinabilityQuery& q) { return check_class(q, SyntacticClass::PositiveOpen); }
inline Verdict check_open_horn(const DefinabilityQuery& q, bool strict = false) {
  return check_class(q, strict ? SyntacticClass::OpenStrictHorn : SyntacticClass::OpenHorn);
}
inline Verdict check_atomic_conj(const DefinabilityQuery& q) { return check_class(q, SyntacticClass::AtomicConj); }
inline Verdict check_existential(const DefinabilityQuery& q) {
  if (!is_existential_class(q.cls)) throw Error("check_existential needs an existential class");
  return check(q);
}

// Witness of the open or positive open check; throws when there is none.
inline Formula synthesize_diagram_formula(DefinabilityQuery q, SyntacticClass kind) {
  if (kind != SyntacticClass::Open && kind != SyntacticClass::PositiveOpen)
    throw Error("diagram formulas are open or positive open");
  q.cls = kind;
  auto v = check(q);
  if (!v.definable()) throw Error("target is not " + class_name(kind) + "-definable: " + v.reason);
  return *v.witness;
}

inline Formula existential_diagram_formula(DefinabilityQuery q, SyntacticClass kind) {
  if (!is_existential_class(kind)) throw Error("existential diagram formulas need an existential class");
  q.cls = kind;
  auto v = check(q);
  if (!v.definable()) throw Error("target is not " + class_name(kind) + "-definable: " + v.reason);
  return *v.witness;
}

// ---------------------------------------------------------------------------
// Horn extraction from an open definition

namespace detail {

using Clause = std::vector<Formula>;  // disjunction of literals

inline Formula nnf(const Formula& f, bool neg) {
  switch (f.kind()) {
    case FormulaKind::Eq:
    case FormulaKind::Rel: return neg ? Formula::negate(f) : f;
    case FormulaKind::Not: return nnf(f.children()[0], !neg);
    case FormulaKind::And:
    case FormulaKind::Or: {
      std::vector<Formula> kids;
      for (const auto& c : f.children()) kids.push_back(nnf(c, neg));
      bool conj = (f.kind() == FormulaKind::And) != neg;
      return Formula::nary(conj ? FormulaKind::And : FormulaKind::Or, std::move(kids));
    }
    case FormulaKind::Implies: {
      std::vector<Formula> kids{nnf(f.children()[0], !neg), nnf(f.children()[1], neg)};
      return Formula::nary(neg ? FormulaKind::And : FormulaKind::Or, std::move(kids));
    }
    default: throw Error("horn_extract needs an open formula");
  }
}

inline std::vector<Clause> cnf(const Formula& f, std::size_t cap) {
  if (f.kind() != FormulaKind::And && f.kind() != FormulaKind::Or) return {{f}};
  std::vector<Clause> out;
  if (f.kind() == FormulaKind::And) {
    for (const auto& c : f.children()) {
      auto part = cnf(c, cap);
      out.insert(out.end(), part.begin(), part.end());
      if (out.size() > cap) throw ResourceExceeded("CNF exceeds its clause budget", out.size());
    }
    return out;
  }
  out.push_back({});
  for (const auto& c : f.children()) {
    auto part = cnf(c, cap);
    std::vector<Clause> next;
    for (const auto& a : out)
      for (const auto& b : part) {
        Clause m = a;
        for (const auto& l : b) {
          bool dup = false;
          for (const auto& x : m) dup = dup || x.to_string() == l.to_string();
          if (!dup) m.push_back(l);
        }
        next.push_back(std::move(m));
        if (next.size() > cap) throw ResourceExceeded("CNF exceeds its clause budget", next.size());
      }
    out = std::move(next);
  }
  return out;
}

inline Formula clause_formula(const std::vector<Formula>& negs, const std::optional<Formula>& pos) {
  std::vector<Formula> prem;
  for (const auto& n : negs) prem.push_back(n.children()[0]);
  if (!pos) {
    std::vector<Formula> ls;
    for (const auto& n : negs) ls.push_back(n);
    return Formula::disj(std::move(ls));
  }
  if (prem.empty()) return *pos;
  return Formula::implies(Formula::conj(std::move(prem)), *pos);
}

}  // namespace detail

// Selects one positive literal per CNF clause of `phi` so that the resulting
// Horn formula still defines the target on K.
inline Formula horn_extract(const Formula& phi, const DefinabilityQuery& q, std::size_t max_selections = 1u << 14) {
  if (!detail::is_open(phi)) throw Error("horn_extract needs an open formula");
  if (detail::is_open_horn(phi, false)) return phi;
  auto clauses = detail::cnf(detail::nnf(phi, false), 4096);
  std::vector<std::vector<Formula>> negs(clauses.size()), poss(clauses.size());
  for (std::size_t i = 0; i < clauses.size(); ++i)
    for (const auto& l : clauses[i]) (l.kind() == FormulaKind::Not ? negs[i] : poss[i]).push_back(l);
  std::vector<std::size_t> sel(clauses.size(), 0);
  std::size_t tried = 0;
  while (true) {
    std::vector<Formula> cs;
    for (std::size_t i = 0; i < clauses.size(); ++i) {
      std::optional<Formula> p;
      if (!poss[i].empty()) p = poss[i][sel[i]];
      cs.push_back(detail::clause_formula(negs[i], p));
    }
    Formula f = Formula::conj(std::move(cs));
    if (defines(q.k, f, q.target)) return f;
    if (++tried >= max_selections) throw ResourceExceeded("Horn selection space exceeds its budget", tried);
    std::size_t i = clauses.size();
    while (i-- > 0) {
      if (poss[i].size() > 1 && ++sel[i] < poss[i].size()) break;
      sel[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1))
      throw Error("internal: no Horn selection of " + phi.to_string() + " defines the target");
  }
}

// First disjunct of a positive open formula that alone defines the target.
inline Formula select_defining_disjunct(const Formula& phi, const DefinabilityQuery& q) {
  for (const auto& d : detail::flatten(phi, FormulaKind::Or))
    if (defines(q.k, d, q.target)) return d;
  throw Error("internal: no disjunct of " + phi.to_string() + " defines the target");
}

}  // namespace findef
