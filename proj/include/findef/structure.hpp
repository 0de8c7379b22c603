#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "findef/common.hpp"

namespace findef {

struct Symbol {
  std::string name;
  std::size_t arity = 0;
  bool operator==(const Symbol&) const = default;
};

class Signature {
 public:
  Signature() = default;
  Signature(std::vector<Symbol> operations, std::vector<Symbol> relations = {})
      : ops_(std::move(operations)), rels_(std::move(relations)) {
    std::set<std::string> seen;
    for (const auto& s : ops_)
      if (!seen.insert(s.name).second) throw Error("duplicate symbol '" + s.name + "'");
    for (const auto& s : rels_)
      if (!seen.insert(s.name).second) throw Error("duplicate symbol '" + s.name + "'");
  }

  const std::vector<Symbol>& operations() const { return ops_; }
  const std::vector<Symbol>& relations() const { return rels_; }

  std::optional<std::size_t> find_operation(std::string_view name) const {
    for (std::size_t i = 0; i < ops_.size(); ++i)
      if (ops_[i].name == name) return i;
    return std::nullopt;
  }
  std::optional<std::size_t> find_relation(std::string_view name) const {
    for (std::size_t i = 0; i < rels_.size(); ++i)
      if (rels_[i].name == name) return i;
    return std::nullopt;
  }
  bool has_symbol(std::string_view name) const {
    return find_operation(name) || find_relation(name);
  }

  bool is_sublanguage_of(const Signature& parent) const {
    for (const auto& s : ops_) {
      auto i = parent.find_operation(s.name);
      if (!i || parent.ops_[*i].arity != s.arity) return false;
    }
    for (const auto& s : rels_) {
      auto i = parent.find_relation(s.name);
      if (!i || parent.rels_[*i].arity != s.arity) return false;
    }
    return true;
  }

  // The sublanguage made of the named symbols, in the parent's order.
  Signature restrict_to(const std::vector<std::string>& names) const {
    for (const auto& n : names)
      if (!has_symbol(n)) throw Error("unknown symbol '" + n + "' in sublanguage");
    auto wanted = [&](const std::string& n) {
      return std::find(names.begin(), names.end(), n) != names.end();
    };
    std::vector<Symbol> o, r;
    for (const auto& s : ops_)
      if (wanted(s.name)) o.push_back(s);
    for (const auto& s : rels_)
      if (wanted(s.name)) r.push_back(s);
    return Signature(std::move(o), std::move(r));
  }

  Signature without(const std::vector<std::string>& names) const {
    std::vector<std::string> keep;
    for (const auto& s : ops_)
      if (std::find(names.begin(), names.end(), s.name) == names.end()) keep.push_back(s.name);
    for (const auto& s : rels_)
      if (std::find(names.begin(), names.end(), s.name) == names.end()) keep.push_back(s.name);
    return restrict_to(keep);
  }

  bool operator==(const Signature&) const = default;

 private:
  std::vector<Symbol> ops_;
  std::vector<Symbol> rels_;
};

class Relation {
 public:
  Relation() = default;
  Relation(std::size_t universe, std::size_t arity, std::vector<Tuple> tuples)
      : arity_(arity), tuples_(std::move(tuples)) {
    for (const auto& t : tuples_) {
      if (t.size() != arity) throw Error("relation tuple of wrong arity");
      for (Element e : t)
        if (e >= universe) throw Error("relation tuple entry out of range");
    }
    std::sort(tuples_.begin(), tuples_.end());
    tuples_.erase(std::unique(tuples_.begin(), tuples_.end()), tuples_.end());
    std::size_t cells = 1;
    bool small = true;
    for (std::size_t i = 0; i < arity; ++i) {
      if (cells > (1u << 22) / std::max<std::size_t>(universe, 1)) {
        small = false;
        break;
      }
      cells *= universe;
    }
    if (small) {
      universe_ = universe;
      bits_.assign(cells, false);
      for (const auto& t : tuples_) bits_[index(t)] = true;
    }
  }

  std::size_t arity() const { return arity_; }
  const std::vector<Tuple>& tuples() const { return tuples_; }
  bool contains(std::span<const Element> t) const {
    if (!bits_.empty() || arity_ == 0) {
      if (arity_ == 0) return !tuples_.empty();
      return bits_[index(t)];
    }
    return std::binary_search(tuples_.begin(), tuples_.end(), Tuple(t.begin(), t.end()));
  }
  bool operator==(const Relation& o) const { return arity_ == o.arity_ && tuples_ == o.tuples_; }

 private:
  std::size_t index(std::span<const Element> t) const {
    std::size_t i = 0;
    for (Element e : t) i = i * universe_ + e;
    return i;
  }

  std::size_t arity_ = 0;
  std::size_t universe_ = 0;
  std::vector<Tuple> tuples_;
  std::vector<bool> bits_;
};

// Universe is 0..size-1. Operation tables are row-major with the first
// argument most significant.
class FiniteStructure {
 public:
  FiniteStructure() = default;
  FiniteStructure(std::string name, Signature sig, std::size_t size,
                  std::vector<std::vector<Element>> tables,
                  std::vector<std::vector<Tuple>> relation_tuples = {},
                  std::vector<std::string> element_names = {})
      : name_(std::move(name)), sig_(std::move(sig)), size_(size), tables_(std::move(tables)),
        names_(std::move(element_names)) {
    if (size_ == 0) throw Error("structure '" + name_ + "' has an empty universe");
    if (tables_.size() != sig_.operations().size())
      throw Error("structure '" + name_ + "': operation table count does not match signature");
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      const auto& s = sig_.operations()[i];
      std::size_t want = checked_pow(size_, s.arity, std::size_t{1} << 28);
      if (tables_[i].size() != want)
        throw Error("operation '" + s.name + "' has " + std::to_string(tables_[i].size()) +
                    " entries, expected " + std::to_string(want));
      for (Element e : tables_[i])
        if (e >= size_) throw Error("operation '" + s.name + "' has an entry out of range");
    }
    if (relation_tuples.empty()) relation_tuples.resize(sig_.relations().size());
    if (relation_tuples.size() != sig_.relations().size())
      throw Error("structure '" + name_ + "': relation count does not match signature");
    for (std::size_t i = 0; i < relation_tuples.size(); ++i)
      rels_.emplace_back(size_, sig_.relations()[i].arity, std::move(relation_tuples[i]));
    if (!names_.empty() && names_.size() != size_)
      throw Error("structure '" + name_ + "': element name count does not match size");
  }

  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }
  const Signature& signature() const { return sig_; }
  std::size_t size() const { return size_; }
  const std::vector<Element>& table(std::size_t op) const { return tables_[op]; }
  const Relation& relation(std::size_t rel) const { return rels_[rel]; }
  bool has_element_names() const { return !names_.empty(); }
  const std::vector<std::string>& element_names() const { return names_; }

  std::string element_name(Element e) const {
    return names_.empty() ? std::to_string(e) : names_[e];
  }
  std::optional<Element> element_by_name(std::string_view n) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == n) return static_cast<Element>(i);
    return std::nullopt;
  }

  Element apply(std::size_t op, std::span<const Element> args) const {
    std::size_t i = 0;
    for (Element a : args) i = i * size_ + a;
    return tables_[op][i];
  }
  Element apply(std::size_t op, std::initializer_list<Element> args) const {
    return apply(op, std::span<const Element>(args.begin(), args.size()));
  }
  Element apply(std::string_view op, std::span<const Element> args) const {
    auto i = sig_.find_operation(op);
    if (!i) throw Error("unknown operation '" + std::string(op) + "'");
    return apply(*i, args);
  }
  Element apply(std::string_view op, std::initializer_list<Element> args) const {
    return apply(op, std::span<const Element>(args.begin(), args.size()));
  }
  bool holds(std::size_t rel, std::span<const Element> args) const {
    return rels_[rel].contains(args);
  }

  // Mathematical equality: name and display names are ignored.
  bool operator==(const FiniteStructure& o) const {
    return sig_ == o.sig_ && size_ == o.size_ && tables_ == o.tables_ && rels_ == o.rels_;
  }
  bool same_presentation(const FiniteStructure& o) const {
    return *this == o && name_ == o.name_ && names_ == o.names_;
  }

 private:
  std::string name_;
  Signature sig_;
  std::size_t size_ = 0;
  std::vector<std::vector<Element>> tables_;
  std::vector<Relation> rels_;
  std::vector<std::string> names_;
};

struct PointedStructure {
  FiniteStructure structure;
  Tuple point;
};

// Mixed-radix encoding of a product universe, leftmost factor most significant.
class ProductEncoding {
 public:
  ProductEncoding() = default;
  explicit ProductEncoding(std::vector<std::size_t> radices) : radices_(std::move(radices)) {
    total_ = 1;
    for (auto r : radices_) {
      if (r == 0 || total_ > (std::size_t{1} << 31) / r) throw ResourceExceeded("product too large", total_);
      total_ *= r;
    }
  }
  std::size_t size() const { return total_; }
  const std::vector<std::size_t>& radices() const { return radices_; }

  Element encode(std::span<const Element> coords) const {
    if (coords.size() != radices_.size()) throw Error("wrong number of product coordinates");
    std::size_t v = 0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (coords[i] >= radices_[i]) throw Error("product coordinate out of range");
      v = v * radices_[i] + coords[i];
    }
    return static_cast<Element>(v);
  }
  Tuple decode(Element e) const {
    Tuple t(radices_.size());
    std::size_t v = e;
    for (std::size_t i = radices_.size(); i-- > 0;) {
      t[i] = static_cast<Element>(v % radices_[i]);
      v /= radices_[i];
    }
    return t;
  }

 private:
  std::vector<std::size_t> radices_;
  std::size_t total_ = 1;
};

inline void require_same_signature(const Signature& a, const Signature& b) {
  const auto& oa = a.operations();
  const auto& ob = b.operations();
  for (std::size_t i = 0; i < std::max(oa.size(), ob.size()); ++i) {
    if (i >= oa.size() || i >= ob.size() || !(oa[i] == ob[i]))
      throw Error("signature mismatch at operation '" + (i < oa.size() ? oa[i].name : ob[i].name) + "'");
  }
  const auto& ra = a.relations();
  const auto& rb = b.relations();
  for (std::size_t i = 0; i < std::max(ra.size(), rb.size()); ++i) {
    if (i >= ra.size() || i >= rb.size() || !(ra[i] == rb[i]))
      throw Error("signature mismatch at relation '" + (i < ra.size() ? ra[i].name : rb[i].name) + "'");
  }
}

inline ProductEncoding product_encoding(const std::vector<const FiniteStructure*>& factors) {
  std::vector<std::size_t> radices;
  for (auto* f : factors) radices.push_back(f->size());
  return ProductEncoding(std::move(radices));
}

inline FiniteStructure product(const std::vector<const FiniteStructure*>& factors,
                               std::size_t max_table_entries = std::size_t{1} << 24) {
  if (factors.empty()) throw Error("product of an empty list");
  const Signature& sig = factors[0]->signature();
  for (auto* f : factors) require_same_signature(sig, f->signature());
  ProductEncoding enc = product_encoding(factors);
  std::size_t n = enc.size();
  std::vector<std::vector<Element>> tables;
  for (std::size_t op = 0; op < sig.operations().size(); ++op) {
    std::size_t ar = sig.operations()[op].arity;
    std::size_t cells = checked_pow(n, ar, max_table_entries);
    std::vector<Element> table(cells);
    std::vector<Tuple> args(ar);
    Tuple idx(ar, 0);
    Tuple coord_args(ar), out(factors.size());
    std::vector<Tuple> decoded(n);
    for (std::size_t e = 0; e < n; ++e) decoded[e] = enc.decode(static_cast<Element>(e));
    for (std::size_t cell = 0; cell < cells; ++cell) {
      for (std::size_t c = 0; c < factors.size(); ++c) {
        for (std::size_t j = 0; j < ar; ++j) coord_args[j] = decoded[idx[j]][c];
        out[c] = factors[c]->apply(op, coord_args);
      }
      table[cell] = enc.encode(out);
      next_tuple(idx, n);
    }
    tables.push_back(std::move(table));
  }
  std::vector<std::vector<Tuple>> rels;
  for (std::size_t r = 0; r < sig.relations().size(); ++r) {
    std::size_t ar = sig.relations()[r].arity;
    std::vector<Tuple> tuples;
    // Cartesian product of the factor relations, zipped.
    std::vector<std::size_t> pick(factors.size(), 0);
    bool any_empty = false;
    for (auto* f : factors) any_empty = any_empty || f->relation(r).tuples().empty();
    if (!any_empty) {
      while (true) {
        Tuple t(ar);
        for (std::size_t j = 0; j < ar; ++j) {
          Tuple coords(factors.size());
          for (std::size_t c = 0; c < factors.size(); ++c)
            coords[c] = factors[c]->relation(r).tuples()[pick[c]][j];
          t[j] = enc.encode(coords);
        }
        tuples.push_back(std::move(t));
        std::size_t c = factors.size();
        while (c-- > 0) {
          if (++pick[c] < factors[c]->relation(r).tuples().size()) break;
          pick[c] = 0;
        }
        if (c == static_cast<std::size_t>(-1)) break;
        if (tuples.size() > max_table_entries) throw ResourceExceeded("product relation too large", tuples.size());
      }
    }
    rels.push_back(std::move(tuples));
  }
  std::vector<std::string> names;
  std::string name;
  for (std::size_t c = 0; c < factors.size(); ++c) name += (c ? "x" : "") + factors[c]->name();
  bool named = std::any_of(factors.begin(), factors.end(), [](auto* f) { return f->has_element_names(); });
  if (factors.size() == 1) {
    names = factors[0]->element_names();
  } else if (named) {
    for (std::size_t e = 0; e < n; ++e) {
      Tuple t = enc.decode(static_cast<Element>(e));
      std::string s = "(";
      for (std::size_t c = 0; c < t.size(); ++c) s += (c ? "," : "") + factors[c]->element_name(t[c]);
      names.push_back(s + ")");
    }
  }
  return FiniteStructure(name, sig, n, std::move(tables), std::move(rels), std::move(names));
}

inline FiniteStructure product(const std::vector<FiniteStructure>& factors) {
  std::vector<const FiniteStructure*> ptrs;
  for (const auto& f : factors) ptrs.push_back(&f);
  return product(ptrs);
}

inline FiniteStructure power(const FiniteStructure& a, std::size_t k) {
  std::vector<const FiniteStructure*> ptrs(k, &a);
  return product(ptrs);
}

// Index of an element of (A1x...xAk)x(B1x...xBm) inside A1x...xAkxB1x...xBm.
// With leftmost-most-significant encoding this is the identity; provided so the
// association law is stated and tested against an explicit bijection.
inline Element reassociate_product_index(const ProductEncoding& left, const ProductEncoding& right,
                                         Element nested) {
  std::size_t rs = right.size();
  Tuple a = left.decode(static_cast<Element>(nested / rs));
  Tuple b = right.decode(static_cast<Element>(nested % rs));
  std::vector<std::size_t> radices = left.radices();
  radices.insert(radices.end(), right.radices().begin(), right.radices().end());
  a.insert(a.end(), b.begin(), b.end());
  return ProductEncoding(radices).encode(a);
}

inline FiniteStructure reduct(const FiniteStructure& a, const Signature& l) {
  if (!l.is_sublanguage_of(a.signature())) throw Error("reduct: not a sublanguage of '" + a.name() + "'");
  std::vector<std::vector<Element>> tables;
  for (const auto& s : l.operations()) tables.push_back(a.table(*a.signature().find_operation(s.name)));
  std::vector<std::vector<Tuple>> rels;
  for (const auto& s : l.relations()) rels.push_back(a.relation(*a.signature().find_relation(s.name)).tuples());
  return FiniteStructure(a.name(), l, a.size(), std::move(tables), std::move(rels), a.element_names());
}

inline FiniteStructure with_operation(const FiniteStructure& a, const std::string& name, std::size_t arity,
                                      std::vector<Element> table) {
  std::vector<Symbol> ops = a.signature().operations();
  ops.push_back({name, arity});
  std::vector<std::vector<Element>> tables;
  for (std::size_t i = 0; i < a.signature().operations().size(); ++i) tables.push_back(a.table(i));
  tables.push_back(std::move(table));
  std::vector<std::vector<Tuple>> rels;
  for (std::size_t i = 0; i < a.signature().relations().size(); ++i) rels.push_back(a.relation(i).tuples());
  return FiniteStructure(a.name(), Signature(ops, a.signature().relations()), a.size(), std::move(tables),
                         std::move(rels), a.element_names());
}

inline FiniteStructure with_relation(const FiniteStructure& a, const std::string& name, std::size_t arity,
                                     std::vector<Tuple> tuples) {
  std::vector<Symbol> rs = a.signature().relations();
  rs.push_back({name, arity});
  std::vector<std::vector<Element>> tables;
  for (std::size_t i = 0; i < a.signature().operations().size(); ++i) tables.push_back(a.table(i));
  std::vector<std::vector<Tuple>> rels;
  for (std::size_t i = 0; i < a.signature().relations().size(); ++i) rels.push_back(a.relation(i).tuples());
  rels.push_back(std::move(tuples));
  return FiniteStructure(a.name(), Signature(a.signature().operations(), rs), a.size(), std::move(tables),
                         std::move(rels), a.element_names());
}

inline FiniteStructure renamed(FiniteStructure a, std::string name) {
  a.set_name(std::move(name));
  return a;
}

// Table of an n-ary function given as a callable over tuples.
template <class F>
std::vector<Element> tabulate(std::size_t size, std::size_t arity, F&& f) {
  std::vector<Element> out;
  Tuple t(arity, 0);
  do {
    out.push_back(static_cast<Element>(f(t)));
  } while (next_tuple(t, size));
  return out;
}

}  // namespace findef
