#include <catch_amalgamated.hpp>

#include "findef/builtins.hpp"
#include "findef/term.hpp"
#include "support.hpp"

using namespace findef;

TEST_CASE("stone3 tables", "[core]") {
  auto s = builtins::stone3();
  REQUIRE(s.size() == 3);
  CHECK(s.apply("star", {0}) == 2);
  CHECK(s.apply("star", {1}) == 0);
  CHECK(s.apply("star", {2}) == 0);
  CHECK(s.apply("join", {1, 2}) == 2);
  CHECK(s.apply("meet", {1, 2}) == 1);
  CHECK(s.element_name(1) == "1/2");
}

TEST_CASE("demorganM involution fixes the atoms", "[core]") {
  auto m = builtins::demorganM();
  auto t = Term::apply("bar", {Term::var(0)});
  CHECK(evaluate_term(m, t, {1}) == 1);
  CHECK(evaluate_term(m, t, {2}) == 2);
  CHECK(evaluate_term(m, t, {0}) == 3);
  CHECK(m.apply("join", {1, 2}) == 3);
  CHECK(m.apply("meet", {1, 2}) == 0);
}

TEST_CASE("double star at one half", "[core]") {
  auto s = builtins::stone3();
  auto t = Term::apply("star", {Term::apply("star", {Term::var(0)})});
  CHECK(evaluate_term(s, t, {1}) == 2);
  for (Element a = 0; a < 3; ++a) CHECK(evaluate_term(s, Term::var(0), {a}) == a);
}

TEST_CASE("evaluate_term errors", "[core]") {
  auto s = builtins::stone3();
  CHECK_THROWS_AS(evaluate_term(s, Term::apply("nope", {Term::var(0)}), {0}), Error);
  CHECK_THROWS_AS(evaluate_term(s, Term::var(2), {0}), Error);
}

TEST_CASE("empty universe rejected", "[core]") {
  CHECK_THROWS_AS(FiniteStructure("e", Signature(), 0, {}), Error);
  CHECK_THROWS_AS(FiniteStructure("bad", Signature({{"f", 1}}), 2, {{0}}), Error);
  CHECK_THROWS_AS(FiniteStructure("bad", Signature({{"f", 1}}), 2, {{0, 2}}), Error);
  CHECK_THROWS_AS(Signature({{"f", 1}, {"f", 2}}), Error);
}

TEST_CASE("product basics", "[core]") {
  auto s = builtins::stone3();
  auto p = power(s, 2);
  CHECK(p.size() == 9);
  ProductEncoding enc({3, 3});
  Element a = enc.encode(Tuple{2, 0});
  Element b = enc.encode(Tuple{0, 2});
  CHECK(p.apply("join", {a, b}) == enc.encode(Tuple{2, 2}));
  auto one = product(std::vector<const FiniteStructure*>{&s});
  CHECK(one == s);
  for (Element e = 0; e < 9; ++e) CHECK(enc.encode(enc.decode(e)) == e);
}

TEST_CASE("product signature mismatch names the symbol", "[core]") {
  auto s = builtins::stone3();
  auto b = builtins::bool2();
  try {
    product(std::vector<const FiniteStructure*>{&s, &b});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("star") != std::string::npos);
  }
}

TEST_CASE("product relations are componentwise", "[core]") {
  auto a = with_relation(builtins::bool2(), "le", 2, {{0, 0}, {0, 1}, {1, 1}});
  auto p = power(a, 2);
  ProductEncoding enc({2, 2});
  auto r = *p.signature().find_relation("le");
  CHECK(p.relation(r).tuples().size() == 9);
  CHECK(p.holds(r, Tuple{enc.encode(Tuple{0, 1}), enc.encode(Tuple{1, 1})}));
  CHECK_FALSE(p.holds(r, Tuple{enc.encode(Tuple{1, 0}), enc.encode(Tuple{0, 1})}));
}

TEST_CASE("reducts", "[core]") {
  auto s = builtins::stone3();
  auto l = s.signature().restrict_to({"join", "meet", "zero", "one"});
  auto r = reduct(s, l);
  CHECK(r.size() == 3);
  CHECK_FALSE(r.signature().find_operation("star"));
  CHECK(reduct(s, s.signature()) == s);
  auto h = builtins::heyting3();
  CHECK(reduct(h, s.signature()) == s);
  CHECK_THROWS_AS(reduct(s, h.signature()), Error);
}

TEST_CASE("terms evaluate componentwise on products", "[core][property]") {
  auto s = builtins::stone3();
  auto b = builtins::bool2();
  auto sb = reduct(b, b.signature().restrict_to({"join", "meet", "zero", "one"}));
  auto ss = reduct(s, s.signature().restrict_to({"join", "meet", "zero", "one"}));
  auto p = product(std::vector<const FiniteStructure*>{&ss, &sb});
  ProductEncoding enc({3, 2});
  test_support::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Term t = test_support::random_term(rng, ss.signature(), 2, 3);
    for (Element a1 = 0; a1 < 3; ++a1)
      for (Element a2 = 0; a2 < 3; ++a2)
        for (Element b1 = 0; b1 < 2; ++b1)
          for (Element b2 = 0; b2 < 2; ++b2) {
            Element pa = enc.encode(Tuple{a1, b1});
            Element pb = enc.encode(Tuple{a2, b2});
            Element v = evaluate_term(p, t, {pa, pb});
            CHECK(enc.decode(v) == Tuple{evaluate_term(ss, t, {a1, a2}), evaluate_term(sb, t, {b1, b2})});
          }
  }
}

TEST_CASE("reduct commutes with product", "[core][property]") {
  auto h = builtins::heyting3();
  auto l = builtins::stone3().signature();
  auto lhs = reduct(power(h, 2), l);
  auto hr = reduct(h, l);
  auto rhs = power(hr, 2);
  CHECK(lhs == rhs);
}

TEST_CASE("product associativity via re-indexing", "[core][property]") {
  auto s = builtins::stone3();
  auto b = reduct(builtins::heyting3(), s.signature());
  auto ab = product(std::vector<const FiniteStructure*>{&s, &b});
  auto nested = product(std::vector<const FiniteStructure*>{&ab, &s});
  auto flat = product(std::vector<const FiniteStructure*>{&s, &b, &s});
  ProductEncoding left({3, 3}), right({3});
  REQUIRE(nested.size() == flat.size());
  for (std::size_t op = 0; op < s.signature().operations().size(); ++op) {
    std::size_t ar = s.signature().operations()[op].arity;
    Tuple args(ar, 0);
    do {
      Tuple mapped;
      for (Element e : args) mapped.push_back(reassociate_product_index(left, right, e));
      CHECK(reassociate_product_index(left, right, nested.apply(op, args)) == flat.apply(op, mapped));
    } while (next_tuple(args, nested.size()));
  }
}
