#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "findef/closure.hpp"

namespace findef {

inline std::vector<std::string> variable_names(std::size_t n, const std::string& family = "x") {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(family + std::to_string(i + 1));
  return v;
}

// A coordinate of the product over all pointed members (A, a).
struct CloneColumn {
  std::size_t member = 0;
  Tuple point;
  bool operator==(const CloneColumn&) const = default;
};

namespace detail {

inline std::vector<std::size_t> distinct_members(const std::vector<FiniteStructure>& k) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k.size(); ++i) {
    bool dup = false;
    for (auto j : out) dup = dup || k[j] == k[i];
    if (!dup) out.push_back(i);
  }
  return out;
}

inline void require_common_signature(const std::vector<FiniteStructure>& k) {
  if (k.empty()) throw Error("empty class");
  for (const auto& a : k) require_same_signature(k[0].signature(), a.signature());
}

}  // namespace detail

// The n-ary term operations of K as rows over the de-duplicated coordinates (A, a).
class TermOpTable {
 public:
  TermOpTable(std::vector<FiniteStructure> k, std::size_t n, std::size_t depth_budget = 12,
              std::size_t max_rows = 1u << 20)
      : k_(std::make_shared<std::vector<FiniteStructure>>(std::move(k))), n_(n) {
    detail::require_common_signature(*k_);
    std::vector<ClosureColumn> cols;
    for (auto m : detail::distinct_members(*k_)) {
      const auto& a = (*k_)[m];
      checked_pow(a.size(), n, max_rows);
      Tuple x(n, 0);
      do {
        columns_.push_back({m, x});
        cols.push_back({&a, x});
      } while (next_tuple(x, a.size()));
    }
    ClosureOptions opt;
    opt.max_rounds = depth_budget;
    opt.max_size = max_rows;
    pc_ = std::make_unique<ProductClosure>(std::move(cols), opt);
  }

  const std::vector<FiniteStructure>& members() const { return *k_; }
  std::size_t arity() const { return n_; }
  bool fixpoint() const { return pc_->complete(); }
  ClosureStatus status() const { return pc_->status(); }
  std::size_t rows() const { return pc_->size(); }
  const std::vector<CloneColumn>& columns() const { return columns_; }
  std::span<const Element> row(std::size_t i) const { return pc_->element(i); }
  Term witness(std::size_t i) const { return pc_->term(i, variable_names(n_)); }
  std::size_t depth(std::size_t i) const { return pc_->depth(i); }
  std::optional<std::size_t> find(std::span<const Element> row) const { return pc_->find(row); }
  const ProductClosure& closure() const { return *pc_; }

  // Row of a function given per member as a table over A^n.
  Tuple row_of(const std::function<Element(std::size_t, const Tuple&)>& f) const {
    Tuple r;
    for (const auto& c : columns_) r.push_back(f(c.member, c.point));
    return r;
  }

 private:
  std::shared_ptr<std::vector<FiniteStructure>> k_;
  std::size_t n_;
  std::vector<CloneColumn> columns_;
  std::unique_ptr<ProductClosure> pc_;
};

inline TermOpTable term_operations(const std::vector<FiniteStructure>& k, std::size_t n,
                                   std::size_t depth_budget = 12, std::size_t max_rows = 1u << 20) {
  return TermOpTable(k, n, depth_budget, max_rows);
}

// ---------------------------------------------------------------------------
// Interpolation on a set of coordinates

enum class SearchStatus { Found, NotFound, Bounded };

inline std::string search_status_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::Found: return "found";
    case SearchStatus::NotFound: return "not-found";
    case SearchStatus::Bounded: return "bounded";
  }
  return "bounded";
}

// The subuniverse of the product over `columns` generated by the projection
// rows, which does not contain the target row.
struct ClosureCertificate {
  std::vector<CloneColumn> columns;
  std::vector<Tuple> generators;  // one row per variable
  Tuple target_row;
  std::vector<Tuple> subuniverse;  // rows of the generated subuniverse (possibly truncated)
  std::size_t subuniverse_size = 0;
};

struct TermSearch {
  SearchStatus status = SearchStatus::NotFound;
  std::optional<Term> term;
  std::optional<ClosureCertificate> certificate;
  std::size_t explored = 0;
  explicit operator bool() const { return status == SearchStatus::Found; }
};

struct SearchOptions {
  std::size_t depth_budget = 12;
  std::size_t max_rows = 1u << 20;
  std::size_t certificate_rows = 64;
  std::size_t certificate_closure_rows = 1u << 16;
};

namespace detail {

inline ClosureCertificate make_certificate(const ProductClosure& pc, const std::vector<CloneColumn>& where,
                                           const Tuple& target, std::size_t n, std::size_t rows) {
  ClosureCertificate cert;
  cert.columns = where;
  for (std::size_t v = 0; v < n; ++v) {
    Tuple g;
    for (const auto& c : where) g.push_back(c.point[v]);
    cert.generators.push_back(std::move(g));
  }
  cert.target_row = target;
  cert.subuniverse_size = pc.size();
  for (std::size_t i = 0; i < pc.size() && i < rows; ++i) {
    auto r = pc.element(i);
    cert.subuniverse.emplace_back(r.begin(), r.end());
  }
  return cert;
}

}  // namespace detail

// Finds an n-ary term t over K's signature with t(a) = value(member, a) on every
// coordinate where value is defined. The closure runs over a growing subset of
// coordinates: a candidate found there is checked on all coordinates and the
// first disagreeing one is added. Failure on a subset already proves that no
// term exists.
inline TermSearch interpolate(const std::vector<FiniteStructure>& k, std::size_t n,
                              const std::function<std::optional<Element>(std::size_t, const Tuple&)>& value,
                              const SearchOptions& so = {}) {
  detail::require_common_signature(k);
  std::vector<CloneColumn> where;
  Tuple target;
  for (auto m : detail::distinct_members(k)) {
    const auto& a = k[m];
    checked_pow(a.size(), n, so.max_rows);
    Tuple x(n, 0);
    do {
      if (auto v = value(m, x)) {
        where.push_back({m, x});
        target.push_back(*v);
      }
    } while (next_tuple(x, a.size()));
  }
  TermSearch out;
  auto vars = variable_names(n);
  auto closure_over = [&](const std::vector<std::size_t>& active, bool stop_at_target, std::size_t max_rows) {
    std::vector<ClosureColumn> cols;
    Tuple want;
    for (auto c : active) {
      cols.push_back({&k[where[c].member], where[c].point});
      want.push_back(target[c]);
    }
    ClosureOptions opt;
    opt.max_rounds = so.depth_budget;
    opt.max_size = max_rows;
    std::optional<std::size_t> hit;
    if (stop_at_target)
      opt.on_new = [want, &hit](std::size_t i, std::span<const Element> r) {
        if (!std::equal(r.begin(), r.end(), want.begin())) return false;
        hit = i;
        return true;
      };
    auto pc = std::make_unique<ProductClosure>(std::move(cols), opt);
    return std::make_pair(std::move(pc), hit);
  };
  if (where.empty()) {
    // Every term qualifies; prefer a projection, else a constant.
    if (n > 0) {
      out.status = SearchStatus::Found;
      out.term = Term::var(0);
      return out;
    }
    for (const auto& o : k[0].signature().operations())
      if (o.arity == 0) {
        out.status = SearchStatus::Found;
        out.term = Term::apply(o.name);
        return out;
      }
    out.status = SearchStatus::NotFound;
    return out;
  }
  std::vector<std::size_t> active{0};
  while (true) {
    auto [pc, hit] = closure_over(active, true, so.max_rows);
    out.explored += pc->size();
    if (!hit) {
      if (!pc->complete()) {
        out.status = SearchStatus::Bounded;
        return out;
      }
      out.status = SearchStatus::NotFound;
      std::vector<CloneColumn> sub;
      Tuple sub_target;
      for (auto c : active) {
        sub.push_back(where[c]);
        sub_target.push_back(target[c]);
      }
      out.certificate = detail::make_certificate(*pc, sub, sub_target, n, so.certificate_rows);
      if (active.size() < where.size()) {
        // Prefer the certificate over all coordinates when it is affordable.
        std::vector<std::size_t> all(where.size());
        for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
        auto full = closure_over(all, false, so.certificate_closure_rows).first;
        if (full->complete())
          out.certificate = detail::make_certificate(*full, where, target, n, so.certificate_rows);
      }
      return out;
    }
    Term t = pc->term(*hit, vars);
    std::optional<std::size_t> bad;
    CompiledTerm ct(k[0].signature(), t, vars);
    std::vector<Element> scratch;
    for (std::size_t c = 0; c < where.size() && !bad; ++c)
      if (ct.eval(k[where[c].member], where[c].point, scratch) != target[c]) bad = c;
    if (!bad) {
      out.status = SearchStatus::Found;
      out.term = t;
      return out;
    }
    active.push_back(*bad);
    std::sort(active.begin(), active.end());
  }
}

// Term representing f on K, where f is given per member as a function of A^n.
inline TermSearch find_representing_term(const std::vector<FiniteStructure>& k, std::size_t n,
                                         const std::function<Element(std::size_t, const Tuple&)>& f,
                                         const SearchOptions& so = {}) {
  return interpolate(k, n, [&](std::size_t m, const Tuple& x) -> std::optional<Element> { return f(m, x); }, so);
}

// Variant for a target function symbol of K's signature, represented over the
// sublanguage `l`.
inline TermSearch find_representing_term(const std::vector<FiniteStructure>& k, const std::string& f,
                                         const Signature& l, const SearchOptions& so = {}) {
  if (l.has_symbol(f)) throw Error("target '" + f + "' must not belong to the sublanguage");
  std::vector<FiniteStructure> kl;
  std::vector<std::size_t> ops;
  std::optional<std::size_t> n;
  for (const auto& a : k) {
    auto op = a.signature().find_operation(f);
    if (!op) throw Error("target function '" + f + "' is not interpreted in " + a.name());
    std::size_t ar = a.signature().operations()[*op].arity;
    if (n && *n != ar) throw Error("target function arity differs between members");
    n = ar;
    ops.push_back(*op);
    kl.push_back(reduct(a, l));
  }
  if (k.empty()) throw Error("empty class");
  return find_representing_term(kl, *n, [&](std::size_t m, const Tuple& x) { return k[m].apply(ops[m], x); }, so);
}

inline bool is_majority_term(const std::vector<FiniteStructure>& k, const Term& t) {
  for (const auto& a : k)
    for (Element x = 0; x < a.size(); ++x)
      for (Element y = 0; y < a.size(); ++y)
        if (evaluate_term(a, t, {x, x, y}) != x || evaluate_term(a, t, {x, y, x}) != x ||
            evaluate_term(a, t, {y, x, x}) != x)
          return false;
  return true;
}

inline bool is_discriminator_term(const std::vector<FiniteStructure>& k, const Term& t) {
  for (const auto& a : k) {
    Tuple x(3, 0);
    do {
      if (evaluate_term(a, t, x) != (x[0] == x[1] ? x[2] : x[0])) return false;
    } while (next_tuple(x, a.size()));
  }
  return true;
}

// Only the coordinates where the three identities speak are needed.
inline TermSearch find_majority_term(const std::vector<FiniteStructure>& k, const SearchOptions& so = {}) {
  return interpolate(
      k, 3,
      [](std::size_t, const Tuple& x) -> std::optional<Element> {
        if (x[0] == x[1]) return x[0];
        if (x[0] == x[2]) return x[0];
        if (x[1] == x[2]) return x[1];
        return std::nullopt;
      },
      so);
}

inline TermSearch find_discriminator_term(const std::vector<FiniteStructure>& k, const SearchOptions& so = {}) {
  return interpolate(
      k, 3, [](std::size_t, const Tuple& x) -> std::optional<Element> { return x[0] == x[1] ? x[2] : x[0]; }, so);
}

// D(x,y,z,w) = t(t(x,y,z), t(x,y,w), w): z if x = y, w otherwise.
inline Term quaternary_discriminator(const Term& t) {
  std::vector<std::string> vars;
  t.collect_variables(vars);
  for (const auto& v : vars)
    if (v != "x1" && v != "x2" && v != "x3") throw Error("discriminator term must be ternary in x1,x2,x3");
  auto inst = [&](Term a, Term b, Term c) {
    return t.substitute({{"x1", std::move(a)}, {"x2", std::move(b)}, {"x3", std::move(c)}});
  };
  Term x = Term::var(0), y = Term::var(1), z = Term::var(2), w = Term::var(3);
  return inst(inst(x, y, z), inst(x, y, w), w);
}

}  // namespace findef
