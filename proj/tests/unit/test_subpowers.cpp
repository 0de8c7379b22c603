#include <catch_amalgamated.hpp>

#include <map>
#include <set>

#include "findef/builtins.hpp"
#include "findef/subpowers.hpp"
#include "support.hpp"

using namespace findef;

namespace {

std::vector<std::vector<Element>> brute_subuniverses(const FiniteStructure& a) {
  std::vector<std::vector<Element>> out;
  for (std::size_t bits = 1; bits < (std::size_t{1} << a.size()); ++bits) {
    std::vector<bool> mask(a.size());
    std::vector<Element> els;
    for (Element e = 0; e < a.size(); ++e)
      if (bits >> e & 1) {
        mask[e] = true;
        els.push_back(e);
      }
    if (is_closed(a, mask)) out.push_back(els);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.size() != y.size() ? x.size() < y.size() : x < y;
  });
  return out;
}

std::vector<std::vector<Element>> brute_maps(const Subuniverse& a0, const Subuniverse& b0, MapKind kind) {
  std::vector<std::vector<Element>> out;
  Tuple idx(a0.size(), 0);
  do {
    HomMap m{a0, b0, std::vector<Element>(a0.host().size(), HomMap::unset), kind};
    for (std::size_t i = 0; i < a0.size(); ++i) m.image[a0.elements()[i]] = b0.elements()[idx[i]];
    if (verify_map(m, kind)) out.push_back(m.image);
  } while (next_tuple(idx, b0.size()));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Element> encode_all(const ProductEncoding& enc, std::vector<Tuple> ts) {
  std::vector<Element> out;
  for (auto& t : ts) out.push_back(enc.encode(t));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("closure of the empty set in stone3", "[subpowers]") {
  auto s = builtins::stone3();
  CHECK(generated_subuniverse(s, {}).elements() == std::vector<Element>{0, 2});
  CHECK(generated_subuniverse(s, {1}).elements() == std::vector<Element>{0, 1, 2});
}

TEST_CASE("S1 in the square of the Heyting expansion", "[subpowers]") {
  auto h = builtins::heyting3();
  auto h2 = power(h, 2);
  ProductEncoding enc({3, 3});
  auto s1 = generated_subuniverse(h2, {enc.encode(Tuple{2, 1}), enc.encode(Tuple{1, 2})});
  CHECK(s1.elements() == encode_all(enc, {{0, 0}, {1, 1}, {2, 1}, {1, 2}, {2, 2}}));
  CHECK(generated_subuniverse(h2, s1.elements()) == s1);
}

TEST_CASE("closure engine reports depth and terms", "[closure]") {
  auto s = builtins::stone3();
  ProductClosure pc({{&s, {1}}});
  REQUIRE(pc.complete());
  auto idx = pc.find(Tuple{2});
  REQUIRE(idx);
  Term t = pc.term(*idx, {"x1"});
  CHECK(evaluate_term(s, t, {1}) == 2);
  CHECK(pc.depth(0) == 0);
}

TEST_CASE("split closure detects non-functional correspondences", "[closure]") {
  auto s = builtins::stone3();
  ClosureOptions opt;
  opt.split = 1;
  // 1/2 -> 1 extends to a homomorphism (the map x -> x**).
  ProductClosure ok({{&s, {1}}, {&s, {2}}}, opt);
  CHECK(ok.complete());
  // 1/2 -> 0 does not: 1/2* = 0 must go to 0* = 1, but 0 is already sent to 0.
  ProductClosure bad({{&s, {1}}, {&s, {0}}}, opt);
  REQUIRE(bad.status() == ClosureStatus::Conflict);
  const auto& c = bad.conflicts().front();
  Term fresh = bad.derivation_term(c.fresh, {"x1"});
  Term old = bad.term(c.existing, {"x1"});
  CHECK(evaluate_term(s, fresh, {1}) == evaluate_term(s, old, {1}));
  CHECK(evaluate_term(s, fresh, {0}) != evaluate_term(s, old, {0}));
}

TEST_CASE("reverse conflicts witness non-injectivity", "[closure]") {
  auto s = builtins::stone3();
  ClosureOptions opt;
  opt.split = 1;
  opt.check_reverse = true;
  ProductClosure pc({{&s, {1}}, {&s, {2}}}, opt);
  REQUIRE(pc.status() == ClosureStatus::Conflict);
  CHECK(pc.conflicts().front().reverse);
}

namespace {

std::set<Tuple> brute_closure(const std::vector<ClosureColumn>& cols) {
  std::set<Tuple> out;
  for (std::size_t g = 0; g < cols[0].gens.size(); ++g) {
    Tuple t;
    for (const auto& c : cols) t.push_back(c.gens[g]);
    out.insert(t);
  }
  const auto& ops = cols[0].structure->signature().operations();
  while (true) {
    std::vector<Tuple> els(out.begin(), out.end());
    std::size_t before = out.size();
    for (std::size_t op = 0; op < ops.size(); ++op) {
      std::vector<std::size_t> idx(ops[op].arity, 0);
      while (true) {
        Tuple t;
        for (std::size_t c = 0; c < cols.size(); ++c) {
          Tuple args;
          for (auto i : idx) args.push_back(els[i][c]);
          t.push_back(cols[c].structure->apply(op, args));
        }
        out.insert(t);
        std::size_t j = idx.size();
        while (j-- > 0) {
          if (++idx[j] < els.size()) break;
          idx[j] = 0;
        }
        if (j == static_cast<std::size_t>(-1)) break;
      }
    }
    if (out.size() == before) return out;
  }
}

bool block_function(const std::set<Tuple>& els, std::size_t from, std::size_t split, std::size_t to) {
  std::map<Tuple, Tuple> seen;
  for (const auto& t : els) {
    Tuple key(t.begin() + static_cast<std::ptrdiff_t>(from), t.begin() + static_cast<std::ptrdiff_t>(split));
    Tuple val(t.begin() + static_cast<std::ptrdiff_t>(split), t.begin() + static_cast<std::ptrdiff_t>(to));
    auto [it, fresh] = seen.emplace(key, val);
    if (!fresh && it->second != val) return false;
  }
  return true;
}

std::set<Tuple> closure_set(const ProductClosure& pc) {
  std::set<Tuple> out;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    auto e = pc.element(i);
    out.emplace(e.begin(), e.end());
  }
  return out;
}

}  // namespace

TEST_CASE("closure engine agrees with a naive fixpoint", "[closure][property]") {
  test_support::Rng rng(61);
  std::size_t conflicts = 0;
  for (int iter = 0; iter < 90; ++iter) {
    // Small products are indexed directly, wide ones by packed or unpacked hashing.
    int mode = iter % 3;
    std::vector<Symbol> ops{{"u", 1}, {"b", 2}};
    if (rng.coin()) ops.push_back({"t", 3});
    std::vector<FiniteStructure> algs;
    for (int i = 0; i < 2; ++i) algs.push_back(test_support::random_algebra(rng, mode == 0 ? 2 + rng.below(3) : 4, ops));
    std::vector<ClosureColumn> base;
    std::size_t ngens = 1 + rng.below(2);
    for (std::size_t i = 0, m = 1 + rng.below(3); i < m; ++i) {
      ClosureColumn c{&algs[rng.below(2)], {}};
      for (std::size_t g = 0; g < ngens; ++g) c.gens.push_back(static_cast<Element>(rng.below(c.structure->size())));
      base.push_back(c);
    }
    std::size_t k = mode == 0 ? 1 + rng.below(4) : mode == 1 ? 11 + rng.below(6) : 33 + rng.below(6);
    std::vector<ClosureColumn> cols;
    for (std::size_t c = 0; c < k; ++c) cols.push_back(base[rng.below(base.size())]);
    INFO("iter " << iter << " columns " << k);
    auto want = brute_closure(cols);

    ProductClosure whole(cols);
    REQUIRE(whole.complete());
    CHECK(whole.size() == want.size());
    CHECK(closure_set(whole) == want);
    for (const auto& t : want) CHECK(whole.find(t));

    ClosureOptions opt;
    opt.split = 1 + rng.below(k);
    opt.check_reverse = rng.coin();
    ProductClosure split(cols, opt);
    bool ok = block_function(want, 0, opt.split, k);
    if (opt.check_reverse && opt.split < k && ok) {
      // Swap the blocks to test injectivity.
      std::set<Tuple> swapped;
      for (const auto& t : want) {
        Tuple s(t.begin() + static_cast<std::ptrdiff_t>(opt.split), t.end());
        s.insert(s.end(), t.begin(), t.begin() + static_cast<std::ptrdiff_t>(opt.split));
        swapped.insert(s);
      }
      ok = block_function(swapped, 0, k - opt.split, k);
    }
    conflicts += !ok;
    CHECK(split.status() == (ok ? ClosureStatus::Complete : ClosureStatus::Conflict));
    if (ok) CHECK(closure_set(split) == want);

    if (ngens == 2) {
      auto first = cols;
      Tuple second;
      for (auto& c : first) {
        second.push_back(c.gens[1]);
        c.gens.pop_back();
      }
      ProductClosure grown(first);
      grown.add_generator(second);
      REQUIRE(grown.complete());
      CHECK(grown.generator_count() == 2);
      CHECK(closure_set(grown) == want);
      auto idx = grown.find(second);
      REQUIRE(idx);
      Term t = grown.term(*idx, {"x1", "x2"});
      for (const auto& c : cols) CHECK(evaluate_term(*c.structure, t, {c.gens[0], c.gens[1]}) == c.gens[1]);
    }
  }
  CHECK(conflicts > 0);
  CHECK(conflicts < 90);
}

TEST_CASE("closure size cap", "[closure]") {
  auto s = builtins::stone3();
  ClosureOptions opt;
  opt.max_size = 2;
  ProductClosure pc({{&s, {1}}}, opt);
  CHECK(pc.status() == ClosureStatus::SizeExceeded);
}

TEST_CASE("all_subuniverses examples", "[subpowers]") {
  auto s = builtins::stone3();
  auto subs = all_subuniverses(s);
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].elements() == std::vector<Element>{0, 2});
  CHECK(subs[1].elements() == std::vector<Element>{0, 1, 2});
  auto t = builtins::trivial_algebra(s.signature());
  CHECK(all_subuniverses(t).size() == 1);
  CHECK_THROWS_AS(all_subuniverses(power(s, 2), 3), ResourceExceeded);
}

TEST_CASE("subuniverses of the square of (M, circ)", "[subpowers]") {
  auto m = builtins::demorganM_circ();
  auto m2 = power(m, 2);
  ProductEncoding enc({4, 4});
  auto subs = all_subuniverses(m2);
  std::vector<std::vector<Element>> got;
  for (const auto& x : subs) got.push_back(x.elements());
  CHECK(got == brute_subuniverses(m2));
  std::vector<Tuple> diag, graph, bools, bm, mb, full;
  for (Element x = 0; x < 4; ++x) {
    diag.push_back({x, x});
    graph.push_back({x, builtins::demorgan_circ_table()[x]});
    for (Element y = 0; y < 4; ++y) {
      full.push_back({x, y});
      bool bx = x == 0 || x == 3, by = y == 0 || y == 3;
      if (bx && by) bools.push_back({x, y});
      if (bx) bm.push_back({x, y});
      if (by) mb.push_back({x, y});
    }
  }
  std::vector<std::vector<Element>> expected{encode_all(enc, {{0, 0}, {3, 3}}), encode_all(enc, diag),
                                             encode_all(enc, graph), encode_all(enc, bools),
                                             encode_all(enc, bm), encode_all(enc, mb), encode_all(enc, full)};
  std::sort(expected.begin(), expected.end(), [](const auto& x, const auto& y) {
    return x.size() != y.size() ? x.size() < y.size() : x < y;
  });
  CHECK(got == expected);
}

TEST_CASE("subuniverse enumeration matches the subset sweep", "[subpowers][property]") {
  test_support::Rng rng(3);
  for (int i = 0; i < 60; ++i) {
    auto a = test_support::random_algebra(rng, 2 + rng.below(3), {{"f", 2}, {"g", 1}});
    std::vector<std::vector<Element>> got;
    for (const auto& x : all_subuniverses(a)) {
      CHECK(is_closed(a, x.mask()));
      got.push_back(x.elements());
    }
    CHECK(got == brute_subuniverses(a));
  }
}

TEST_CASE("generated_subuniverse is a closure operator", "[subpowers][property]") {
  test_support::Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    auto a = test_support::random_algebra(rng, 4, {{"f", 2}});
    Tuple g1{static_cast<Element>(rng.below(4))};
    Tuple g2 = g1;
    g2.push_back(static_cast<Element>(rng.below(4)));
    auto s1 = generated_subuniverse(a, g1);
    auto s2 = generated_subuniverse(a, g2);
    CHECK(generated_subuniverse(a, s1.elements()) == s1);
    for (Element e : g1) CHECK(s1.contains(e));
    for (Element e : s1.elements()) CHECK(s2.contains(e));
  }
}

TEST_CASE("homomorphisms of stone3", "[subpowers]") {
  auto s = builtins::stone3();
  auto full = Subuniverse::full(s);
  auto homs = find_maps(full, full, MapKind::Hom);
  REQUIRE(homs.size() == 2);
  CHECK(homs[0].image == std::vector<Element>{0, 1, 2});
  CHECK(homs[1].image == std::vector<Element>{0, 2, 2});
  for (const auto& h : homs) CHECK(verify_map(h, MapKind::Hom));
}

TEST_CASE("inner isomorphisms of M", "[subpowers]") {
  auto m = builtins::demorganM();
  std::vector<std::vector<Element>> nontrivial;
  for (const auto& a0 : all_subuniverses(m))
    for (const auto& b0 : all_subuniverses(m))
      for (const auto& iso : find_maps(a0, b0, MapKind::Iso)) {
        bool identity = true;
        for (Element e : a0.elements()) identity = identity && iso.image[e] == e;
        if (!identity) nontrivial.push_back(iso.image);
      }
  constexpr Element u = HomMap::unset;
  std::vector<std::vector<Element>> expected{{0, 2, u, 3}, {0, u, 1, 3}, {0, 2, 1, 3}};
  std::sort(nontrivial.begin(), nontrivial.end());
  std::sort(expected.begin(), expected.end());
  CHECK(nontrivial == expected);
}

TEST_CASE("find_maps agrees with exhaustive map enumeration", "[subpowers][property]") {
  test_support::Rng rng(9);
  for (int i = 0; i < 80; ++i) {
    auto a = test_support::random_algebra(rng, 2 + rng.below(2), {{"f", 2}, {"c", 0}});
    auto b = test_support::random_algebra(rng, 2 + rng.below(2), {{"f", 2}, {"c", 0}});
    if (i % 3 == 0) b = a;
    for (auto kind : {MapKind::Hom, MapKind::Embedding, MapKind::Iso}) {
      for (const auto& a0 : all_subuniverses(a))
        for (const auto& b0 : all_subuniverses(b)) {
          auto maps = find_maps(a0, b0, kind);
          std::vector<std::vector<Element>> got;
          for (const auto& m : maps) {
            CHECK(verify_map(m, kind));
            got.push_back(m.image);
          }
          std::sort(got.begin(), got.end());
          CHECK(got == brute_maps(a0, b0, kind));
          if (kind == MapKind::Iso)
            for (const auto& m : maps) {
              std::vector<Element> inv(b.size(), HomMap::unset);
              for (Element e : a0.elements()) inv[m.image[e]] = e;
              auto back = find_maps(b0, a0, kind);
              CHECK(std::any_of(back.begin(), back.end(), [&](const HomMap& x) { return x.image == inv; }));
            }
        }
    }
  }
}

TEST_CASE("relations are respected by maps", "[subpowers]") {
  auto a = with_relation(builtins::bool2(), "le", 2, {{0, 0}, {0, 1}, {1, 1}});
  auto full = Subuniverse::full(a);
  CHECK(find_maps(full, full, MapKind::Hom).size() == 1);
  auto b = with_relation(builtins::bool2(), "le", 2, {{0, 0}, {1, 1}});
  auto fb = Subuniverse::full(b);
  CHECK(find_maps(fb, Subuniverse::full(a), MapKind::Hom).size() == 1);
  CHECK(find_maps(fb, Subuniverse::full(a), MapKind::Embedding).empty());
}

TEST_CASE("pointed substructure types", "[subpowers]") {
  auto b = builtins::bool2();
  auto tb = pointed_substructure_types({b}, 1);
  CHECK(tb.size() == 2);
  auto s = builtins::stone3();
  auto ts = pointed_substructure_types({s}, 1);
  REQUIRE(ts.size() == 3);
  CHECK(ts[0].universe.size() == 2);
  CHECK(ts[1].universe.size() == 2);
  CHECK(ts[2].universe.size() == 3);
  CHECK(ts[2].point == Tuple{1});
  auto t0 = pointed_substructure_types({s, b}, 0);
  CHECK(t0.size() == 1);
}

TEST_CASE("pointed types are complete and pairwise non-isomorphic", "[subpowers][property]") {
  test_support::Rng rng(21);
  for (int i = 0; i < 30; ++i) {
    std::vector<FiniteStructure> k{test_support::random_algebra(rng, 3, {{"f", 2}}),
                                   test_support::random_algebra(rng, 2, {{"f", 2}})};
    auto types = pointed_substructure_types(k, 2);
    ClosureOptions opt;
    opt.split = 1;
    opt.check_reverse = true;
    auto pointed_iso = [&](std::size_t m1, const Tuple& p1, std::size_t m2, const Tuple& p2) {
      return ProductClosure({{&k[m1], p1}, {&k[m2], p2}}, opt).complete();
    };
    for (std::size_t m = 0; m < k.size(); ++m) {
      Tuple x(2, 0);
      do {
        std::size_t hits = 0;
        for (const auto& t : types) hits += pointed_iso(t.member, t.point, m, x);
        CHECK(hits == 1);
      } while (next_tuple(x, k[m].size()));
    }
  }
}

TEST_CASE("canonical forms detect isomorphism", "[subpowers][property]") {
  test_support::Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    auto a = test_support::random_algebra(rng, 4, {{"f", 2}, {"g", 1}});
    std::vector<Element> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), std::mt19937(static_cast<unsigned>(i)));
    std::vector<std::vector<Element>> tables;
    for (std::size_t op = 0; op < 2; ++op) {
      std::size_t ar = a.signature().operations()[op].arity;
      std::vector<Element> inv(4);
      for (Element e = 0; e < 4; ++e) inv[perm[e]] = e;
      tables.push_back(tabulate(4, ar, [&](const Tuple& t) {
        Tuple args;
        for (Element e : t) args.push_back(inv[e]);
        return perm[a.apply(op, args)];
      }));
    }
    FiniteStructure b("b", a.signature(), 4, std::move(tables));
    CHECK(canonical_form(a) == canonical_form(b));
    CHECK(isomorphic(a, b));
    auto c = test_support::random_algebra(rng, 4, {{"f", 2}, {"g", 1}});
    CHECK((canonical_form(a) == canonical_form(c)) == isomorphic(a, c));
  }
  auto s = builtins::stone3();
  auto p = power(s, 2);
  CHECK(canonical_form(p) == canonical_form(p));
}
