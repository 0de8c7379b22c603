#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "findef/term.hpp"

namespace findef {

// Sg of generator tuples inside a product of "columns" (structure, generator
// values). Each element is a tuple with one value per column. Optionally the
// columns are split into a source block and a target block; the closure then
// watches whether the source part functionally determines the target part
// (a homomorphism) and, optionally, the converse (injectivity).

struct ClosureColumn {
  const FiniteStructure* structure = nullptr;
  Tuple gens;
};

struct Derivation {
  int op = -1;  // -1: generator `var`
  std::size_t var = 0;
  std::vector<std::uint32_t> args;
};

struct ClosureOptions {
  static constexpr std::size_t no_split = static_cast<std::size_t>(-1);
  std::size_t split = no_split;
  bool check_reverse = false;
  std::size_t max_size = 200000;
  std::size_t max_rounds = static_cast<std::size_t>(-1);
  std::size_t conflicts_wanted = 1;
  // Called for each new element; returning true stops the closure.
  std::function<bool(std::size_t, std::span<const Element>)> on_new;
};

enum class ClosureStatus { Complete, Conflict, SizeExceeded, RoundsExceeded, Stopped };

struct ClosureConflict {
  bool reverse = false;  // target parts agree, source parts differ
  std::uint32_t existing = 0;
  Derivation fresh;
};

class ProductClosure {
 public:
  ProductClosure(std::vector<ClosureColumn> columns, ClosureOptions opt = {})
      : cols_(std::move(columns)), opt_(std::move(opt)) {
    if (cols_.empty()) throw Error("closure over no columns");
    k_ = cols_.size();
    ngens_ = cols_[0].gens.size();
    const auto& ops = cols_[0].structure->signature().operations();
    for (const auto& c : cols_) {
      if (c.gens.size() != ngens_) throw Error("closure columns disagree on generator count");
      const auto& o = c.structure->signature().operations();
      if (o.size() != ops.size()) throw Error("closure columns disagree on signature");
      for (std::size_t i = 0; i < o.size(); ++i)
        if (o[i].arity != ops[i].arity) throw Error("closure columns disagree on signature");
      for (Element g : c.gens)
        if (g >= c.structure->size()) throw Error("generator out of range");
    }
    for (const auto& o : ops) arities_.push_back(o.arity);
    split_ = opt_.split == ClosureOptions::no_split ? k_ : opt_.split;
    if (split_ > k_) throw Error("closure split out of range");
    primary_.init(0, split_, cols_);
    if (opt_.check_reverse && split_ < k_) reverse_.init(split_, k_ - split_, cols_);
    run();
  }

  // Adds a generator to a complete closure and closes again, reusing the
  // elements already found.
  void add_generator(const Tuple& g) {
    if (!complete()) throw Error("add_generator needs a complete closure");
    if (g.size() != k_) throw Error("generator has the wrong number of columns");
    for (std::size_t c = 0; c < k_; ++c) {
      if (g[c] >= cols_[c].structure->size()) throw Error("generator out of range");
      cols_[c].gens.push_back(g[c]);
    }
    std::size_t begin = derivs_.size();
    ++ngens_;
    if (!offer(g.data(), [&] { return Derivation{-1, ngens_ - 1, {}}; }, 0)) return;
    saturate(begin);
  }

  ClosureStatus status() const { return status_; }
  bool complete() const { return status_ == ClosureStatus::Complete; }
  std::size_t size() const { return derivs_.size(); }
  std::size_t columns() const { return k_; }
  std::size_t generator_count() const { return ngens_; }
  std::span<const Element> element(std::size_t i) const { return {data_.data() + i * k_, k_}; }
  Element value(std::size_t i, std::size_t col) const { return data_[i * k_ + col]; }
  const Derivation& derivation(std::size_t i) const { return derivs_[i]; }
  std::size_t depth(std::size_t i) const { return depth_[i]; }
  std::size_t rounds() const { return rounds_; }
  const std::vector<ClosureConflict>& conflicts() const { return conflicts_; }
  const ClosureColumn& column(std::size_t c) const { return cols_[c]; }
  std::size_t split() const { return split_; }

  // Index of the element whose primary key (source block, or whole tuple) matches.
  std::optional<std::size_t> find(std::span<const Element> tuple) const {
    if (tuple.size() < split_) return std::nullopt;
    for (std::size_t c = 0; c < split_; ++c)
      if (tuple[c] >= cols_[c].structure->size()) return std::nullopt;
    auto r = primary_.lookup(tuple.data(), primary_.hash(tuple.data()), data_, k_);
    if (r == Index::npos) return std::nullopt;
    return r;
  }

  Term term(std::size_t i, const std::vector<std::string>& vars) const {
    if (terms_.size() < derivs_.size()) terms_.resize(derivs_.size());
    if (!terms_[i]) terms_[i] = derivation_term(derivs_[i], vars);
    return *terms_[i];
  }
  Term derivation_term(const Derivation& d, const std::vector<std::string>& vars) const {
    if (d.op < 0) return Term::variable(vars.at(d.var));
    std::vector<Term> args;
    for (auto a : d.args) args.push_back(term(a, vars));
    return Term::apply(cols_[0].structure->signature().operations()[static_cast<std::size_t>(d.op)].name,
                       std::move(args));
  }

 private:
  // Open-addressing map from a key block of an element to its index. Blocks
  // whose values fit in 64 bits are compared as packed integers.
  struct Index {
    static constexpr std::uint32_t npos = 0xffffffffu;
    struct Key {
      std::uint64_t hash = 0;
      std::uint64_t packed = 0;
    };
    std::size_t off = 0, len = 0;
    std::vector<std::uint32_t> slots;
    std::size_t count = 0;
    bool packed = false;
    bool direct = false;
    std::vector<unsigned> shift;
    std::vector<std::uint64_t> radix;
    std::vector<std::uint64_t> keys;

    static constexpr std::uint64_t max_direct = std::uint64_t{1} << 21;

    void init(std::size_t o, std::size_t l, const std::vector<ClosureColumn>& cols) {
      off = o;
      len = l;
      unsigned total = 0;
      std::uint64_t product = 1;
      for (std::size_t c = o; c < o + l; ++c) {
        shift.push_back(total);
        std::size_t n = cols[c].structure->size();
        unsigned bits = 1;
        while ((std::size_t{1} << bits) < n) ++bits;
        total += bits;
        if (product <= max_direct) product *= n;
      }
      radix.assign(l, 1);
      for (std::size_t i = l; i-- > 1;) radix[i - 1] = radix[i] * cols[o + i].structure->size();
      packed = total <= 64;
      direct = product <= max_direct;
      slots.assign(direct ? product : 64, npos);
    }
    bool active() const { return !slots.empty(); }
    static std::uint64_t mix(std::uint64_t x) {
      x ^= x >> 33;
      x *= 0xff51afd7ed558ccdull;
      x ^= x >> 33;
      x *= 0xc4ceb9fe1a85ec53ull;
      x ^= x >> 33;
      return x;
    }
    Key hash(const Element* t) const {
      if (direct) {
        std::uint64_t code = 0;
        for (std::size_t i = 0; i < len; ++i) code += t[off + i] * radix[i];
        return {code, code};
      }
      if (packed) {
        std::uint64_t p = 0;
        for (std::size_t i = 0; i < len; ++i) p |= std::uint64_t{t[off + i]} << shift[i];
        return {mix(p), p};
      }
      std::uint64_t h = 1469598103934665603ull;
      for (std::size_t i = 0; i < len; ++i) {
        h ^= t[off + i];
        h *= 1099511628211ull;
        h ^= h >> 29;
      }
      return {h, 0};
    }
    std::uint32_t lookup(const Element* t, const Key& key, const std::vector<Element>& data, std::size_t k) const {
      if (direct) return slots[key.hash];
      std::size_t mask = slots.size() - 1;
      for (std::size_t p = key.hash & mask;; p = (p + 1) & mask) {
        std::uint32_t s = slots[p];
        if (s == npos) return npos;
        if (packed ? keys[s] == key.packed
                   : std::equal(t + off, t + off + len, data.data() + std::size_t{s} * k + off))
          return s;
      }
    }
    void insert(std::uint32_t idx, const Key& key, const std::vector<Element>& data, std::size_t k) {
      if (direct) {
        slots[key.hash] = idx;
        ++count;
        return;
      }
      if (packed) {
        if (keys.size() <= idx) keys.resize(std::size_t{idx} + 1);
        keys[idx] = key.packed;
      }
      if ((count + 1) * 2 > slots.size()) {
        std::vector<std::uint32_t> old = std::move(slots);
        slots.assign(old.size() * 2, npos);
        count = 0;
        for (auto s : old)
          if (s != npos) place(s, packed ? mix(keys[s]) : hash(data.data() + std::size_t{s} * k).hash);
      }
      place(idx, key.hash);
    }
    void place(std::uint32_t idx, std::uint64_t h) {
      std::size_t mask = slots.size() - 1;
      std::size_t p = h & mask;
      while (slots[p] != npos) p = (p + 1) & mask;
      slots[p] = idx;
      ++count;
    }
  };

  // Returns false when the closure must stop.
  template <class MakeDerivation>
  bool offer(const Element* tuple, MakeDerivation&& d, std::size_t round) {
    return offer_keyed(tuple, primary_.hash(tuple), d, round);
  }

  template <class MakeDerivation>
  bool offer_keyed(const Element* tuple, const Index::Key& h, MakeDerivation&& d, std::size_t round) {
    std::uint32_t hit = primary_.lookup(tuple, h, data_, k_);
    if (hit != Index::npos) {
      if (split_ < k_ &&
          !std::equal(tuple + split_, tuple + k_, data_.data() + std::size_t{hit} * k_ + split_)) {
        conflicts_.push_back({false, hit, d()});
        if (conflicts_.size() >= opt_.conflicts_wanted) {
          status_ = ClosureStatus::Conflict;
          return false;
        }
      }
      return true;
    }
    Index::Key rh;
    if (reverse_.active()) {
      rh = reverse_.hash(tuple);
      std::uint32_t rhit = reverse_.lookup(tuple, rh, data_, k_);
      if (rhit != Index::npos) {
        conflicts_.push_back({true, rhit, d()});
        if (conflicts_.size() >= opt_.conflicts_wanted) {
          status_ = ClosureStatus::Conflict;
          return false;
        }
        return true;
      }
    }
    if (derivs_.size() >= opt_.max_size) {
      status_ = ClosureStatus::SizeExceeded;
      return false;
    }
    auto idx = static_cast<std::uint32_t>(derivs_.size());
    data_.insert(data_.end(), tuple, tuple + k_);
    derivs_.push_back(d());
    depth_.push_back(round);
    primary_.insert(idx, h, data_, k_);
    if (reverse_.active()) reverse_.insert(idx, rh, data_, k_);
    if (opt_.on_new && opt_.on_new(idx, element(idx))) {
      status_ = ClosureStatus::Stopped;
      return false;
    }
    return true;
  }

  void run() {
    std::vector<Element> buf(k_);
    for (std::size_t g = 0; g < ngens_; ++g) {
      for (std::size_t c = 0; c < k_; ++c) buf[c] = cols_[c].gens[g];
      if (!offer(buf.data(), [&] { return Derivation{-1, g, {}}; }, 0)) return;
    }
    for (std::size_t op = 0; op < arities_.size(); ++op) {
      if (arities_[op] != 0) continue;
      for (std::size_t c = 0; c < k_; ++c) buf[c] = cols_[c].structure->table(op)[0];
      if (!offer(buf.data(), [&] { return Derivation{static_cast<int>(op), 0, {}}; }, 0)) return;
    }
    saturate(0);
  }

  // Unary and binary operations, in the same order as the general loop below.
  bool saturate_small(std::size_t op, std::size_t ar, std::size_t begin, std::size_t end, std::vector<Element>& buf) {
    std::vector<const Element*> tab(k_);
    std::vector<std::size_t> n(k_);
    for (std::size_t c = 0; c < k_; ++c) {
      tab[c] = cols_[c].structure->table(op).data();
      n[c] = cols_[c].structure->size();
    }
    // With a direct primary index the key is accumulated while the tuple is built.
    const bool direct = primary_.direct;
    const std::uint64_t* radix = primary_.radix.data();
    const std::size_t s = split_;
    auto submit = [&](std::uint64_t code, auto&& d) {
      return direct ? offer_keyed(buf.data(), Index::Key{code, code}, d, rounds_) : offer(buf.data(), d, rounds_);
    };
    if (ar == 1) {
      for (std::size_t i = begin; i < end; ++i) {
        const Element* x = data_.data() + i * k_;
        std::uint64_t code = 0;
        for (std::size_t c = 0; c < s; ++c) code += (buf[c] = tab[c][x[c]]) * radix[c];
        for (std::size_t c = s; c < k_; ++c) buf[c] = tab[c][x[c]];
        if (!submit(code, [&] { return Derivation{static_cast<int>(op), 0, {static_cast<std::uint32_t>(i)}}; }))
          return false;
      }
      return true;
    }
    for (std::size_t i = 0; i < end; ++i) {
      for (std::size_t j = i < begin ? begin : 0; j < end; ++j) {
        const Element* x = data_.data() + i * k_;
        const Element* y = data_.data() + j * k_;
        std::uint64_t code = 0;
        for (std::size_t c = 0; c < s; ++c) code += (buf[c] = tab[c][x[c] * n[c] + y[c]]) * radix[c];
        for (std::size_t c = s; c < k_; ++c) buf[c] = tab[c][x[c] * n[c] + y[c]];
        auto d = [&] {
          return Derivation{static_cast<int>(op), 0, {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}};
        };
        if (!submit(code, d)) return false;
      }
    }
    return true;
  }

  void saturate(std::size_t begin) {
    std::vector<Element> buf(k_);
    std::vector<Element> argv;
    while (true) {
      std::size_t end = derivs_.size();
      if (begin == end) break;
      if (rounds_ >= opt_.max_rounds) {
        status_ = ClosureStatus::RoundsExceeded;
        return;
      }
      ++rounds_;
      for (std::size_t op = 0; op < arities_.size(); ++op) {
        std::size_t ar = arities_[op];
        if (ar == 0) continue;
        if (ar <= 2) {
          if (!saturate_small(op, ar, begin, end, buf)) return;
          continue;
        }
        std::vector<std::uint32_t> idx(ar, 0);
        argv.resize(ar);
        while (true) {
          bool fresh = false;
          for (auto i : idx) fresh = fresh || i >= begin;
          if (fresh) {
            for (std::size_t c = 0; c < k_; ++c) {
              for (std::size_t j = 0; j < ar; ++j) argv[j] = data_[std::size_t{idx[j]} * k_ + c];
              buf[c] = cols_[c].structure->apply(op, argv);
            }
            if (!offer(buf.data(), [&] { return Derivation{static_cast<int>(op), 0, idx}; }, rounds_)) return;
          }
          std::size_t j = ar;
          while (j-- > 0) {
            if (++idx[j] < end) break;
            idx[j] = 0;
          }
          if (j == static_cast<std::size_t>(-1)) break;
          // Skip the block of tuples whose entries all lie below `begin`.
          if (begin > 0) {
            bool any = false;
            for (std::size_t t = 0; t < ar; ++t) any = any || idx[t] >= begin;
            if (!any && ar > 1) {
              bool prefix_fresh = false;
              for (std::size_t t = 0; t + 1 < ar; ++t) prefix_fresh = prefix_fresh || idx[t] >= begin;
              if (!prefix_fresh) idx[ar - 1] = static_cast<std::uint32_t>(begin);
            }
          }
        }
      }
      begin = end;
    }
    status_ = ClosureStatus::Complete;
  }

  std::vector<ClosureColumn> cols_;
  ClosureOptions opt_;
  std::size_t k_ = 0, ngens_ = 0, split_ = 0;
  std::vector<std::size_t> arities_;
  std::vector<Element> data_;
  std::vector<Derivation> derivs_;
  std::vector<std::size_t> depth_;
  std::vector<ClosureConflict> conflicts_;
  Index primary_, reverse_;
  std::size_t rounds_ = 0;
  ClosureStatus status_ = ClosureStatus::Complete;
  mutable std::vector<std::optional<Term>> terms_;
};

// A relational atom that holds on one block of a closure but fails on the other.
struct RelationViolation {
  std::size_t relation = 0;
  std::vector<std::uint32_t> elements;
  bool reverse = false;  // holds on the target block, fails on the source block
};

inline bool block_holds(const ProductClosure& pc, std::size_t rel, std::size_t from, std::size_t to,
                        const std::vector<std::uint32_t>& els, Tuple& scratch) {
  for (std::size_t c = from; c < to; ++c) {
    scratch.clear();
    for (auto e : els) scratch.push_back(pc.value(e, c));
    if (!pc.column(c).structure->holds(rel, scratch)) return false;
  }
  return true;
}

// Checks preservation (and reflection if `reflect`) of every relation by the
// source->target correspondence of a conflict-free split closure.
inline std::optional<RelationViolation> relation_violation(const ProductClosure& pc, bool reflect,
                                                           std::size_t max_tuples = 1u << 22) {
  const auto& rels = pc.column(0).structure->signature().relations();
  std::size_t s = pc.split();
  Tuple scratch;
  for (std::size_t r = 0; r < rels.size(); ++r) {
    std::size_t ar = rels[r].arity;
    checked_pow(pc.size(), ar, max_tuples);
    std::vector<std::uint32_t> els(ar, 0);
    while (true) {
      bool src = block_holds(pc, r, 0, s, els, scratch);
      bool dst = block_holds(pc, r, s, pc.columns(), els, scratch);
      if (src && !dst) return RelationViolation{r, els, false};
      if (reflect && dst && !src) return RelationViolation{r, els, true};
      std::size_t j = ar;
      while (j-- > 0) {
        if (++els[j] < pc.size()) break;
        els[j] = 0;
      }
      if (j == static_cast<std::size_t>(-1)) break;
    }
  }
  return std::nullopt;
}

}  // namespace findef
