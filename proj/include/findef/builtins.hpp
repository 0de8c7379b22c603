#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "findef/structure.hpp"

namespace findef::builtins {

namespace detail {
inline std::vector<Element> binary(std::size_t n, Element (*f)(Element, Element)) {
  return tabulate(n, 2, [&](const Tuple& t) { return f(t[0], t[1]); });
}
}  // namespace detail

// Three-element Stone algebra, elements 0 < 1/2 < 1 encoded 0,1,2.
inline FiniteStructure stone3() {
  Signature sig({{"join", 2}, {"meet", 2}, {"star", 1}, {"zero", 0}, {"one", 0}});
  return FiniteStructure("stone3", sig, 3,
                         {detail::binary(3, [](Element a, Element b) { return std::max(a, b); }),
                          detail::binary(3, [](Element a, Element b) { return std::min(a, b); }),
                          {2, 0, 0}, {0}, {2}},
                         {}, {"0", "1/2", "1"});
}

// Stone 3 expanded with the Heyting implication.
inline FiniteStructure heyting3() {
  Signature sig({{"join", 2}, {"meet", 2}, {"star", 1}, {"imp", 2}, {"zero", 0}, {"one", 0}});
  return FiniteStructure(
      "heyting3", sig, 3,
      {detail::binary(3, [](Element a, Element b) { return std::max(a, b); }),
       detail::binary(3, [](Element a, Element b) { return std::min(a, b); }),
       {2, 0, 0},
       detail::binary(3, [](Element a, Element b) { return a <= b ? Element{2} : b; }),
       {0}, {2}},
      {}, {"0", "1/2", "1"});
}

inline FiniteStructure bool2() {
  Signature sig({{"join", 2}, {"meet", 2}, {"neg", 1}, {"zero", 0}, {"one", 0}});
  return FiniteStructure("bool2", sig, 2, {{0, 1, 1, 1}, {0, 0, 0, 1}, {1, 0}, {0}, {1}}, {},
                         {"0", "1"});
}

// De Morgan algebra on the four-element Boolean lattice 0 < a,b < 1 with
// complement-free involution: bar(0)=1, bar(1)=0, bar(a)=a, bar(b)=b.
inline FiniteStructure demorganM() {
  // 0=0, 1=a, 2=b, 3=1
  auto join = [](Element x, Element y) -> Element {
    if (x == y) return x;
    if (x == 0) return y;
    if (y == 0) return x;
    return 3;
  };
  auto meet = [](Element x, Element y) -> Element {
    if (x == y) return x;
    if (x == 3) return y;
    if (y == 3) return x;
    return 0;
  };
  Signature sig({{"join", 2}, {"meet", 2}, {"bar", 1}, {"zero", 0}, {"one", 0}});
  return FiniteStructure("demorganM", sig, 4, {detail::binary(4, join), detail::binary(4, meet), {3, 1, 2, 0}, {0}, {3}},
                         {}, {"0", "a", "b", "1"});
}

// The automorphism of M exchanging a and b.
inline std::vector<Element> demorgan_circ_table() { return {0, 2, 1, 3}; }

inline FiniteStructure demorganM_circ() {
  return renamed(with_operation(demorganM(), "circ", 1, demorgan_circ_table()), "demorganMcirc");
}

inline std::vector<Element> discriminator_table(std::size_t n) {
  return tabulate(n, 3, [](const Tuple& t) { return t[0] == t[1] ? t[2] : t[0]; });
}

inline FiniteStructure meet_semilattice2() {
  return FiniteStructure("meet2", Signature({{"meet", 2}}), 2, {{0, 0, 0, 1}}, {}, {"0", "1"});
}

inline FiniteStructure bare_set(std::size_t n) {
  return FiniteStructure("set" + std::to_string(n), Signature(), n, {});
}

inline FiniteStructure trivial_algebra(const Signature& sig) {
  std::vector<std::vector<Element>> tables;
  for (std::size_t i = 0; i < sig.operations().size(); ++i) tables.push_back({0});
  std::vector<std::vector<Tuple>> rels;
  for (const auto& r : sig.relations()) rels.push_back({Tuple(r.arity, 0)});
  return FiniteStructure("trivial", sig, 1, std::move(tables), std::move(rels));
}

inline std::optional<FiniteStructure> by_name(std::string_view name) {
  if (name == "stone3") return stone3();
  if (name == "bool2") return bool2();
  if (name == "demorganM") return demorganM();
  if (name == "heyting3") return heyting3();
  if (name == "demorganM_circ") return demorganM_circ();
  if (name == "meet_semilattice2") return meet_semilattice2();
  // setN: the N-element set with no operations.
  if (name.size() > 3 && name.substr(0, 3) == "set" &&
      std::all_of(name.begin() + 3, name.end(), [](char c) { return c >= '0' && c <= '9'; }) && name.size() <= 6) {
    std::size_t n = std::stoul(std::string(name.substr(3)));
    if (n >= 1 && n <= 64) return bare_set(n);
  }
  return std::nullopt;
}

}  // namespace findef::builtins
