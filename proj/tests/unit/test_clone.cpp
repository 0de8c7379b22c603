#include <catch_amalgamated.hpp>

#include "findef/builtins.hpp"
#include "findef/clone.hpp"
#include "findef/subpowers.hpp"
#include "support.hpp"

using namespace findef;

namespace {

Signature lattice01() { return Signature({{"join", 2}, {"meet", 2}, {"zero", 0}, {"one", 0}}); }

void check_table_invariants(const TermOpTable& t) {
  const auto& k = t.members();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    Term w = t.witness(i);
    auto row = t.row(i);
    for (std::size_t c = 0; c < t.columns().size(); ++c) {
      const auto& col = t.columns()[c];
      CHECK(evaluate_term(k[col.member], w, col.point) == row[c]);
    }
  }
  if (!t.fixpoint()) return;
  const auto& ops = k[0].signature().operations();
  for (std::size_t op = 0; op < ops.size(); ++op) {
    std::size_t ar = ops[op].arity;
    Tuple idx(ar, 0);
    do {
      Tuple r;
      for (std::size_t c = 0; c < t.columns().size(); ++c) {
        Tuple args;
        for (auto i : idx) args.push_back(t.row(i)[c]);
        r.push_back(k[t.columns()[c].member].apply(op, args));
      }
      CHECK(t.find(r));
    } while (next_tuple(idx, t.rows()));
  }
}

}  // namespace

TEST_CASE("binary term operations of bool2", "[clone]") {
  auto t = term_operations({builtins::bool2()}, 2);
  CHECK(t.fixpoint());
  CHECK(t.rows() == 16);
  CHECK(t.witness(0).to_string() == "x1");
  check_table_invariants(t);
}

TEST_CASE("unary term operations of stone3", "[clone]") {
  auto s = builtins::stone3();
  auto t = term_operations({s}, 1);
  REQUIRE(t.fixpoint());
  CHECK(t.rows() == 6);
  for (const char* text : {"x1", "(star x1)", "(star (star x1))", "(join x1 (star x1))", "zero", "one"}) {
    auto term = parse_term(text, s.signature());
    Tuple r;
    for (Element a = 0; a < 3; ++a) r.push_back(evaluate_term(s, term, {a}));
    CHECK(t.find(r));
  }
  check_table_invariants(t);
  auto t2 = term_operations({s}, 2);
  CHECK(t2.rows() == 108);
  check_table_invariants(t2);
}

TEST_CASE("depth budget flags non-closed tables", "[clone]") {
  auto t = term_operations({builtins::stone3()}, 2, 1);
  CHECK_FALSE(t.fixpoint());
  CHECK(t.status() == ClosureStatus::RoundsExceeded);
  check_table_invariants(t);
}

TEST_CASE("representing terms", "[clone]") {
  auto b = builtins::bool2();
  auto x = find_representing_term({b}, 2, [](std::size_t, const Tuple& v) { return v[0] ^ v[1]; });
  REQUIRE(x);
  for (Element p = 0; p < 2; ++p)
    for (Element q = 0; q < 2; ++q) CHECK(evaluate_term(b, *x.term, {p, q}) == (p ^ q));
  auto j = find_representing_term({b}, 2, [&](std::size_t, const Tuple& v) { return b.apply("join", v); });
  REQUIRE(j);
  CHECK(j.term->to_string() == "(join x1 x2)");
}

TEST_CASE("negation on the meet semilattice has a closure certificate", "[clone]") {
  auto m = builtins::meet_semilattice2();
  auto r = find_representing_term({m}, 1, [](std::size_t, const Tuple& v) { return 1 - v[0]; });
  REQUIRE(r.status == SearchStatus::NotFound);
  REQUIRE(r.certificate);
  CHECK(r.certificate->generators == std::vector<Tuple>{{0, 1}});
  CHECK(r.certificate->subuniverse == std::vector<Tuple>{{0, 1}});
  CHECK(r.certificate->target_row == Tuple{1, 0});
}

TEST_CASE("representing term search agrees with the product closure condition", "[clone][property]") {
  test_support::Rng rng(17);
  for (int i = 0; i < 40; ++i) {
    auto a = test_support::random_algebra(rng, 2 + rng.below(2), {{"f", 2}});
    std::vector<Element> tab(a.size());
    for (auto& e : tab) e = static_cast<Element>(rng.below(a.size()));
    auto r = find_representing_term({a, a}, 1, [&](std::size_t, const Tuple& v) { return tab[v[0]]; });
    // Brute force: f is a term operation iff the projection row generates a subuniverse of
    // A^|A| containing the f-row.
    auto p = power(a, a.size());
    ProductEncoding enc(std::vector<std::size_t>(a.size(), a.size()));
    Tuple id(a.size());
    for (Element e = 0; e < a.size(); ++e) id[e] = e;
    auto s = generated_subuniverse(p, {enc.encode(id)});
    bool expected = s.contains(enc.encode(tab));
    CHECK(bool(r) == expected);
    if (r) {
      for (Element e = 0; e < a.size(); ++e) CHECK(evaluate_term(a, *r.term, {e}) == tab[e]);
    }
  }
}

TEST_CASE("majority terms", "[clone]") {
  auto b = builtins::bool2();
  auto m = find_majority_term({b});
  REQUIRE(m);
  CHECK(is_majority_term({b}, *m.term));
  auto median = parse_term("(join (join (meet x1 x2) (meet x1 x3)) (meet x2 x3))", b.signature());
  CHECK(is_majority_term({b}, median));
  auto t = builtins::trivial_algebra(b.signature());
  auto mt = find_majority_term({t});
  REQUIRE(mt);
  CHECK(mt.term->to_string() == "x1");
  auto ms = find_majority_term({builtins::meet_semilattice2()});
  CHECK(ms.status == SearchStatus::NotFound);
  auto mm = find_majority_term({builtins::demorganM()});
  REQUIRE(mm);
  CHECK(is_majority_term({builtins::demorganM()}, *mm.term));
}

TEST_CASE("discriminator terms", "[clone]") {
  auto b = builtins::bool2();
  auto d = find_discriminator_term({b});
  REQUIRE(d);
  CHECK(is_discriminator_term({b}, *d.term));
  auto t = builtins::trivial_algebra(b.signature());
  CHECK(find_discriminator_term({t}));
  auto s = find_discriminator_term({builtins::stone3()});
  CHECK(s.status == SearchStatus::NotFound);
}

TEST_CASE("verdicts are stable under duplicated members", "[clone][property]") {
  test_support::Rng rng(23);
  for (int i = 0; i < 15; ++i) {
    auto a = test_support::random_algebra(rng, 2, {{"f", 2}, {"g", 1}});
    auto one = find_majority_term({a});
    auto two = find_majority_term({a, a});
    CHECK(one.status == two.status);
    auto d1 = find_discriminator_term({a});
    auto d2 = find_discriminator_term({a, a});
    CHECK(d1.status == d2.status);
  }
}

TEST_CASE("quaternary discriminator", "[clone]") {
  auto b = builtins::bool2();
  auto d = find_discriminator_term({b});
  REQUIRE(d);
  Term q = quaternary_discriminator(*d.term);
  CHECK(evaluate_term(b, q, {0, 0, 1, 0}) == 1);
  CHECK(evaluate_term(b, q, {0, 1, 1, 0}) == 0);
  Tuple x(4, 0);
  do {
    CHECK(evaluate_term(b, q, x) == (x[0] == x[1] ? x[2] : x[3]));
  } while (next_tuple(x, 2));
  CHECK(q.dag_size() <= 3 * d.term->size() + 4);
  CHECK_THROWS_AS(quaternary_discriminator(Term::var(3)), Error);
}

TEST_CASE("lattice reduct of bool2 has no negation term", "[clone]") {
  auto b = builtins::bool2();
  auto r = find_representing_term({b}, "neg", lattice01());
  CHECK(r.status == SearchStatus::NotFound);
}
