#include <catch_amalgamated.hpp>

#include "findef/builtins.hpp"
#include "findef/terminterp.hpp"
#include "support.hpp"

using namespace findef;

namespace {

std::vector<Element> table_of(const FiniteStructure& a, const Term& t, std::size_t n) {
  std::vector<Element> out;
  auto vars = variable_names(n);
  Tuple x(n, 0);
  do out.push_back(evaluate_term(a, t, vars, x));
  while (next_tuple(x, a.size()));
  return out;
}

FiniteStructure lattice_reduct(const FiniteStructure& a) {
  return reduct(a, a.signature().restrict_to({"join", "meet"}));
}

}  // namespace

TEST_CASE("discriminator by cases over the empty language", "[terminterp]") {
  InterpolationProblem p;
  p.k = {with_discriminator(builtins::bool2())};
  p.f = "d";
  p.l = Signature();
  auto r = find_term_by_cases(p);
  REQUIRE(r.kind == VerdictKind::Definable);
  const auto& cd = *r.cases;
  REQUIRE(cd.cases.size() == 2);
  std::set<std::string> terms{cd.cases[0].term.to_string(), cd.cases[1].term.to_string()};
  CHECK(terms == std::set<std::string>{"x1", "x3"});
  CHECK(case_definition_problem(p.k, p.f, cd) == "");
  // The x3 case holds at least where x = y, the x1 case at least where x != y.
  for (const auto& c : cd.cases) {
    Tuple x(3, 0);
    do {
      bool on = evaluate(p.k[0], c.condition, variable_names(3), x);
      if (c.term.to_string() == "x3" && x[0] == x[1]) CHECK(on);
      if (c.term.to_string() == "x1" && x[0] != x[1]) CHECK(on);
    } while (next_tuple(x, 2));
  }
}

TEST_CASE("a term function gives a single case", "[terminterp]") {
  InterpolationProblem p;
  p.k = {with_discriminator(builtins::bool2())};
  p.f = "d";
  auto r = find_term_by_cases(p);
  REQUIRE(r.kind == VerdictKind::Definable);
  REQUIRE(r.cases->cases.size() == 1);
  auto t = r.cases->cases[0].term;
  CHECK(table_of(p.k[0], t, 3) == builtins::discriminator_table(2));
  CHECK(merge_cases_discriminator({builtins::bool2()}, *r.cases, t).to_string() == t.to_string());
}

TEST_CASE("negation on the meet semilattice breaks subuniverse closure", "[terminterp]") {
  InterpolationProblem p;
  p.k = {with_operation(builtins::meet_semilattice2(), "neg", 1, {1, 0})};
  p.f = "neg";
  auto r = find_term_by_cases(p);
  REQUIRE(r.kind == VerdictKind::NotDefinable);
  REQUIRE(r.failure);
  CHECK(r.failure->condition == CaseFailure::Condition::Subuniverse);
  CHECK(r.failure->generators == Tuple{0});
  CHECK(r.failure->subuniverse == std::vector<Element>{0});
  CHECK(r.failure->value == 1);
}

TEST_CASE("case definitions agree with f on random conservative functions", "[terminterp][property]") {
  // Over the empty language every f with f(x) among the x_i that commutes with
  // permutations of {x_i} is term-valued with open cases.
  test_support::Rng rng(19);
  for (int iter = 0; iter < 20; ++iter) {
    std::size_t size = 2 + rng.below(2);
    auto base = builtins::bare_set(size);
    std::vector<Element> tab;
    Tuple x(2, 0);
    do tab.push_back(x[rng.below(2)]);
    while (next_tuple(x, size));
    InterpolationProblem p;
    p.k = {with_operation(base, "f", 2, tab)};
    p.f = "f";
    auto r = find_term_by_cases(p);
    if (r.kind == VerdictKind::Definable) {
      CHECK(case_definition_problem(p.k, p.f, *r.cases) == "");
    } else {
      REQUIRE(r.failure);
      CHECK(r.failure->condition == CaseFailure::Condition::Maps);
      DefinabilityQuery q{p.k, Signature(), Target::functions({"f"}), SyntacticClass::Open, {}};
      CHECK(counterexample_problem(q, *r.failure->map) == "");
    }
  }
}

TEST_CASE("merging the two-case discriminator on bool2", "[terminterp]") {
  auto b = builtins::bool2();
  auto t = find_discriminator_term({b});
  REQUIRE(t);
  CaseDefinition cd;
  cd.arity = 3;
  cd.cases = {{Term::var(2), parse_formula("(= x1 x2)", b.signature())},
              {Term::var(0), parse_formula("(not (= x1 x2))", b.signature())}};
  auto m = merge_cases_discriminator({b}, cd, *t.term);
  CHECK(table_of(b, m, 3) == builtins::discriminator_table(2));
}

TEST_CASE("merging two cases on stone3 with a discriminator operation", "[terminterp]") {
  auto s = with_discriminator(builtins::stone3());
  Term d = parse_term("(d x1 x2 x3)", s.signature());
  CaseDefinition cd;
  cd.arity = 3;
  cd.cases = {{Term::var(2), parse_formula("(= x1 (star x2))", s.signature())},
              {Term::apply("meet", {Term::var(0), Term::var(1)}), parse_formula("(not (= x1 (star x2)))", s.signature())}};
  auto m = merge_cases_discriminator({s}, cd, d);
  Tuple x(3, 0);
  std::size_t checked = 0;
  do {
    Element want = x[0] == s.apply("star", {x[1]}) ? x[2] : s.apply("meet", {x[0], x[1]});
    CHECK(evaluate_term(s, m, {x[0], x[1], x[2]}) == want);
    ++checked;
  } while (next_tuple(x, 3));
  CHECK(checked == 27);
}

TEST_CASE("merged terms reproduce random case tables", "[terminterp][property]") {
  auto b = builtins::bool2();
  auto t = *find_discriminator_term({b}).term;
  test_support::Rng rng(23);
  for (int iter = 0; iter < 25; ++iter) {
    CaseDefinition cd;
    cd.arity = 3;
    std::size_t k = 1 + rng.below(3);
    for (std::size_t i = 0; i < k; ++i) {
      auto lhs = Term::var(rng.below(3));
      auto rhs = rng.coin() ? Term::var(rng.below(3)) : Term::apply("neg", {Term::var(rng.below(3))});
      auto eq = Formula::eq(lhs, rhs);
      cd.cases.push_back({Term::var(rng.below(3)), rng.coin() ? eq : Formula::negate(eq)});
    }
    cd.cases.push_back({Term::apply("join", {Term::var(0), Term::var(1)}), Formula::truth()});
    auto m = merge_cases_discriminator({b}, cd, t);
    Tuple x(3, 0);
    do {
      // First matching case, evaluated directly.
      std::optional<Element> want;
      for (const auto& c : cd.cases)
        if (!want && evaluate(b, c.condition, variable_names(3), x)) want = evaluate_term(b, c.term, {x[0], x[1], x[2]});
      REQUIRE(want);
      CHECK(evaluate_term(b, m, {x[0], x[1], x[2]}) == *want);
    } while (next_tuple(x, 2));
  }
}

TEST_CASE("pixley report", "[terminterp]") {
  auto r = pixley_check({builtins::bool2()});
  CHECK(r.quasiprimal);
  CHECK(r.witness.kind == VerdictKind::Definable);

  auto s = builtins::stone3();
  auto rs = pixley_check({s});
  CHECK_FALSE(rs.quasiprimal);
  REQUIRE(rs.witness.kind == VerdictKind::NotDefinable);
  REQUIRE(rs.witness.failure);
  CHECK(rs.witness.failure->condition == CaseFailure::Condition::Maps);
  const auto& ce = *rs.witness.failure->map;
  CHECK(ce.kind == MapKind::Hom);
  DefinabilityQuery q{{with_discriminator(s)}, s.signature(), Target::functions({"d"}), SyntacticClass::PositiveOpen, {}};
  CHECK(counterexample_problem(q, ce) == "");
  std::set<std::size_t> image(ce.sigma.begin(), ce.sigma.end());
  CHECK(image.size() < ce.sigma.size());

  auto one = pixley_check({builtins::trivial_algebra(s.signature())});
  CHECK(one.quasiprimal);
}

TEST_CASE("baker-pixley on binary functions of bool2", "[terminterp]") {
  auto b = builtins::bool2();
  for (std::uint32_t code = 0; code < 16; ++code) {
    std::vector<Element> tab{Element(code & 1), Element((code >> 1) & 1), Element((code >> 2) & 1),
                             Element((code >> 3) & 1)};
    InterpolationProblem p;
    p.k = {with_operation(b, "f", 2, tab)};
    p.f = "f";
    auto r = baker_pixley_term(p);
    REQUIRE_FALSE(r.failure);
    REQUIRE(r.term);
    REQUIRE(r.interpolant);
    CHECK(table_of(b, *r.term, 2) == tab);
    CHECK(table_of(b, *r.interpolant, 2) == tab);
  }
}

TEST_CASE("baker-pixley certificate for negation over the lattice reduct", "[terminterp]") {
  auto b = builtins::bool2();
  InterpolationProblem p;
  p.k = {b};
  p.f = "neg";
  p.l = b.signature().restrict_to({"join", "meet", "zero", "one"});
  auto r = baker_pixley_term(p);
  REQUIRE(r.failure);
  CHECK(r.failure->a == Tuple{0});
  CHECK(r.failure->b == Tuple{1});
  using P = std::pair<Element, Element>;
  CHECK(r.failure->subuniverse == std::vector<P>{{0, 0}, {0, 1}, {1, 1}});
  CHECK(r.failure->value == P{1, 0});
}

TEST_CASE("the median is its own interpolant on lattices", "[terminterp]") {
  std::vector<FiniteStructure> k{lattice_reduct(builtins::bool2()), lattice_reduct(builtins::stone3())};
  std::vector<FiniteStructure> kf;
  for (const auto& a : k)
    kf.push_back(with_operation(a, "med", 3, tabulate(a.size(), 3, [&](const Tuple& x) {
      Tuple s = x;
      std::sort(s.begin(), s.end());
      return s[1];
    })));
  InterpolationProblem p;
  p.k = kf;
  p.f = "med";
  auto r = baker_pixley_term(p);
  REQUIRE(r.term);
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(table_of(k[i], *r.term, 3) == kf[i].table(2));
}

TEST_CASE("baker-pixley hypothesis matches representability", "[terminterp][property]") {
  test_support::Rng rng(41);
  auto b = builtins::bool2();
  auto s = builtins::stone3();
  for (int iter = 0; iter < 30; ++iter) {
    std::vector<std::string> syms{"join", "meet"};
    for (const char* o : {"zero", "one"})
      if (rng.coin()) syms.push_back(o);
    bool stone = rng.coin();
    const auto& base = stone ? s : b;
    if (!stone && rng.coin()) syms.push_back("neg");
    if (stone && rng.coin()) syms.push_back("star");
    std::size_t n = 1 + rng.below(2);
    std::vector<Element> tab(checked_pow(base.size(), n, 100));
    for (auto& e : tab) e = static_cast<Element>(rng.below(base.size()));
    InterpolationProblem p;
    p.k = {with_operation(base, "f", n, tab)};
    p.f = "f";
    p.l = base.signature().restrict_to(syms);
    auto r = baker_pixley_term(p);
    auto direct = find_representing_term(p.k, "f", *p.l);
    INFO(iter);
    CHECK(bool(r.failure) == !bool(direct));
    if (r.term) CHECK(table_of(reduct(p.k[0], *p.l), *r.term, n) == tab);
  }
}
