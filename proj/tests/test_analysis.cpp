#include "doctest.h"
#include "spanex/analysis.hpp"
#include "support/generators.hpp"

using namespace spanex;
using namespace testsupport;

namespace {

const std::set<char32_t> kAb{U'a', U'b'};

Mapping map_of(std::initializer_list<std::pair<std::string, Span>> bs) {
  Mapping m;
  for (const auto& [v, s] : bs) m.bind(v, s);
  return m;
}

// Exhaustive semantic containment up to a document length bound.
bool contained_up_to(const VaAutomaton& a1, const VaAutomaton& a2, uint32_t max_len) {
  for (const auto& d : all_docs(U"ab", max_len)) {
    MappingSet s1 = enumerate_runs(a1, d);
    MappingSet s2 = enumerate_runs(a2, d);
    for (const auto& m : s1)
      if (!s2.contains(m)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("satisfiability with witness") {
  auto w = sat_va(compile_rgx(parse_rgx("x{a}"), kAb));
  REQUIRE(w.has_value());
  CHECK(w->document.symbols() == U"a");
  CHECK(w->mapping == map_of({{"x", {1, 2}}}));
  CHECK(enumerate_runs(compile_rgx(parse_rgx("x{a}"), kAb), w->document).contains(w->mapping));

  CHECK_FALSE(sat_va(compile_rgx(parse_rgx("x{a} x{b}"), kAb)).has_value());
}

TEST_CASE("sat witnesses re-verify and unsat answers are exhaustively confirmed") {
  Rng rng(1101);
  VaGenOptions opts;
  opts.num_states = 6;
  for (int i = 0; i < 120; ++i) {
    VaAutomaton a = random_va(rng, opts);
    auto w = sat_va(a);
    if (w) {
      CHECK(enumerate_runs(a, w->document).contains(w->mapping));
      size_t bound = (2 * opts.vars.size() + 1) * a.num_states;
      CHECK(w->document.length() <= bound);
    } else {
      // pumping bound: documents up to (2|V|+1)|Q| suffice; desk scale here
      for (const auto& d : all_docs(U"ab", 4)) CHECK(enumerate_runs(a, d).empty());
    }
  }
}

TEST_CASE("sequential satisfiability is reachability") {
  CHECK(sat_seq_va(compile_rgx(parse_rgx("x{a*} y{b*}"), kAb)));

  VaAutomaton unreachable;
  StateId q0 = unreachable.add_state(), q1 = unreachable.add_state();
  unreachable.initial = q0;
  unreachable.finals = {q1};
  CHECK_FALSE(sat_seq_va(unreachable));

  CHECK_THROWS_AS(sat_seq_va(compile_rgx(parse_rgx("x{a} x{b}"), kAb)), Error);

  Rng rng(1102);
  RgxGenOptions opts;
  for (int i = 0; i < 100; ++i) {
    Rgx g = random_sequential_rgx(rng, opts, {"x", "y"});
    VaAutomaton a = compile_rgx(g, kAb);
    CHECK(sat_seq_va(a) == sat_va(a).has_value());
  }
}

TEST_CASE("tree rule witnesses") {
  ExtractionRule r = parse_rule("doc: a x b y && x.(abc z) && y.(@*) && z.(d)",
                                {U'a', U'b', U'c', U'd'});
  SatWitness w = tree_rule_witness(r, {U'a', U'b', U'c', U'd'});
  CHECK(w.document.symbols() == U"aabcdb");
  CHECK(eval_rule_oracle(r, w.document, {U'a', U'b', U'c', U'd'}).contains(w.mapping));

  ExtractionRule m0 = parse_rule("doc: a", kAb);
  SatWitness w0 = tree_rule_witness(m0, kAb);
  CHECK(w0.document.symbols() == U"a");
  CHECK(w0.mapping == Mapping{});

  ExtractionRule star = parse_rule("doc: (a b)*", kAb);
  SatWitness ws = tree_rule_witness(star, kAb);
  CHECK(ws.document.length() == 0);
  CHECK(ws.mapping == Mapping{});
}

TEST_CASE("every sequential tree-like rule is satisfiable with a verified witness") {
  Rng rng(1103);
  for (int i = 0; i < 100; ++i) {
    ExtractionRule r = random_tree_rule(rng, 3, 2);
    SatWitness w = tree_rule_witness(r, kAb);
    OracleBudget budget;
    budget.max_doc_len = 16;
    CHECK(eval_rule_oracle(r, w.document, kAb, budget).contains(w.mapping));
  }
}

TEST_CASE("containment basics") {
  VaAutomaton a = compile_rgx(parse_rgx("x{a}"), kAb);
  VaAutomaton b = compile_rgx(parse_rgx("x{b}"), kAb);

  CHECK(containment_general(a, va_union(a, b)).contained);
  CHECK(containment_general(a, a).contained);

  ContainmentResult r = containment_general(a, b);
  REQUIRE_FALSE(r.contained);
  REQUIRE(r.counterexample.has_value());
  CHECK(r.counterexample->document.symbols() == U"a");
  CHECK(r.counterexample->mapping == map_of({{"x", {1, 2}}}));
}

TEST_CASE("containment handles opens that never close") {
  // A1 opens x without closing; both accept exactly the empty mapping on ""
  VaAutomaton a1;
  StateId q0 = a1.add_state(), q1 = a1.add_state();
  a1.initial = q0;
  a1.finals = {q1};
  a1.add(q0, Label::open("x"), q1);

  VaAutomaton a2;
  StateId p0 = a2.add_state();
  a2.initial = p0;
  a2.finals = {p0};

  CHECK(containment_general(a1, a2).contained);
  CHECK(containment_general(a2, a1).contained);
}

TEST_CASE("containment verdicts match exhaustive comparison on random pairs") {
  Rng rng(1104);
  VaGenOptions opts;
  opts.num_states = 4;
  opts.num_transitions = 7;
  for (int i = 0; i < 60; ++i) {
    VaAutomaton a1 = random_va(rng, opts);
    VaAutomaton a2 = random_va(rng, opts);
    ContainmentResult r = containment_general(a1, a2);
    if (r.contained) {
      CHECK(contained_up_to(a1, a2, 4));
    } else {
      REQUIRE(r.counterexample.has_value());
      const auto& w = *r.counterexample;
      CHECK(enumerate_runs(a1, w.document).contains(w.mapping));
      CHECK_FALSE(enumerate_runs(a2, w.document).contains(w.mapping));
    }
  }
}

TEST_CASE("deterministic sequential point-disjoint containment") {
  VaAutomaton a = determinize(compile_rgx(parse_rgx("x{a} b"), kAb));
  VaAutomaton ab = determinize(compile_rgx(parse_rgx("x{a} (b|c)"), {U'a', U'b', U'c'}));
  CHECK(containment_det_seq_pd(a, a, 3).contained);
  CHECK(containment_det_seq_pd(a, ab, 3).contained);

  ContainmentResult r = containment_det_seq_pd(ab, a, 3);
  REQUIRE_FALSE(r.contained);
  REQUIRE(r.counterexample.has_value());
  CHECK(r.counterexample->document.symbols() == U"ac");

  // rejects automata violating the preconditions
  VaAutomaton nonseq = compile_rgx(parse_rgx("x{a} x{b}"), kAb);
  CHECK_THROWS_AS(containment_det_seq_pd(determinize(nonseq), a, 3), Error);
  VaAutomaton abutting = determinize(compile_rgx(parse_rgx("x{a*} y{b*}"), kAb));
  CHECK_THROWS_AS(containment_det_seq_pd(abutting, abutting, 3), Error);
}

TEST_CASE("point-disjointness bounded verification") {
  CHECK(point_disjoint_check(compile_rgx(parse_rgx("x{a} b y{a}"), kAb), 5));
  CHECK_FALSE(point_disjoint_check(compile_rgx(parse_rgx("x{a*} y{b*}"), kAb), 3));
  CHECK(point_disjoint_check(compile_rgx(parse_rgx("a* b*"), kAb), 3));
}

TEST_CASE("one-in-three spanRGX gadget") {
  // single clause: satisfiable
  std::vector<Clause3> single{{"p", "q", "r"}};
  Rgx g1 = gadget_1in3_spanrgx(single);
  CHECK(is_span_rgx(g1));
  CHECK(sat_va(compile_rgx(g1, {})).has_value());
  CHECK(one_in_three_satisfiable(single));

  // forcing p both true and false: unsatisfiable one-in-three-wise
  std::vector<Clause3> conflict{{"p", "q", "r"}, {"p", "q", "s"}, {"q", "r", "s"}};
  CHECK(sat_va(compile_rgx(gadget_1in3_spanrgx(conflict), {})).has_value() ==
        one_in_three_satisfiable(conflict));

  // empty clause list
  CHECK(rgx_equal(gadget_1in3_spanrgx({}), RgxNode::epsilon()));

  CHECK_THROWS_AS(gadget_1in3_spanrgx({{"p", "p", "q"}}), Error);
}

TEST_CASE("one-in-three gadgets agree with the brute-force solver") {
  Rng rng(1105);
  std::vector<std::string> props{"p1", "p2", "p3", "p4"};
  for (int i = 0; i < 60; ++i) {
    std::vector<Clause3> clauses;
    size_t n = 1 + pick(rng, 3);
    for (size_t c = 0; c < n; ++c) {
      std::vector<std::string> pool = props;
      std::shuffle(pool.begin(), pool.end(), rng);
      clauses.push_back({pool[0], pool[1], pool[2]});
    }
    bool expect = one_in_three_satisfiable(clauses);

    Rgx g = gadget_1in3_spanrgx(clauses);
    CHECK(sat_va(compile_rgx(g, {})).has_value() == expect);

    ExtractionRule rule = gadget_1in3_rule(clauses);
    CHECK(classify(rule).functional);
    CHECK(classify(rule).dag_like);
    OracleBudget budget;
    budget.max_vars = 16;
    budget.max_pairs = 20'000'000;
    CHECK(!eval_rule_oracle(rule, Document("#"), {U'#'}, budget).empty() == expect);
  }
}

TEST_CASE("hamiltonian gadget") {
  Digraph triangle{3, {{0, 1}, {0, 2}, {1, 2}}};
  CHECK(sat_va(gadget_hamiltonian(triangle)).has_value());
  CHECK(hamiltonian_path_exists(triangle));

  Digraph isolated{2, {}};
  CHECK_FALSE(sat_va(gadget_hamiltonian(isolated)).has_value());
  CHECK_FALSE(hamiltonian_path_exists(isolated));

  // the gadget accepts with the all-empty-span mapping
  auto w = sat_va(gadget_hamiltonian(triangle));
  REQUIRE(w.has_value());
  CHECK(w->document.length() == 0);
  for (const auto& [v, s] : w->mapping.bindings()) CHECK(s == Span{1, 1});

  Rng rng(1106);
  for (int i = 0; i < 60; ++i) {
    Digraph g;
    g.num_vertices = 1 + pick(rng, 5);
    for (size_t u = 0; u < g.num_vertices; ++u)
      for (size_t v = 0; v < g.num_vertices; ++v)
        if (u != v && pick(rng, 3) == 0) g.edges.insert({u, v});
    CHECK(sat_va(gadget_hamiltonian(g)).has_value() == hamiltonian_path_exists(g));
  }
}

TEST_CASE("hamiltonian gadget feeds the general evaluator") {
  Digraph square_cycle{4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}};
  VaAutomaton a = gadget_hamiltonian(square_cycle);
  Document empty("");
  Mapping mu_eps;
  for (const auto& v : a.variables()) mu_eps.bind(v, Span{1, 1});
  EvalInstance inst{&a, &empty, ExtendedMapping::from_mapping(mu_eps)};
  CHECK(eval_decision_fpt(inst) == hamiltonian_path_exists(square_cycle));

  Digraph no_path{4, {{0, 1}, {2, 3}}};
  VaAutomaton b = gadget_hamiltonian(no_path);
  Mapping mu2;
  for (const auto& v : b.variables()) mu2.bind(v, Span{1, 1});
  EvalInstance inst2{&b, &empty, ExtendedMapping::from_mapping(mu2)};
  CHECK(eval_decision_fpt(inst2) == hamiltonian_path_exists(no_path));
}

TEST_CASE("dnf containment gadget") {
  // tautology over three variables
  Dnf taut;
  taut.num_vars = 3;
  for (int mask = 0; mask < 8; ++mask)
    taut.clauses.push_back({DnfLiteral{0, (mask & 1) != 0}, DnfLiteral{1, (mask & 2) != 0},
                            DnfLiteral{2, (mask & 4) != 0}});
  REQUIRE(dnf_is_valid(taut));
  auto [t1, t2] = gadget_dnf_containment(taut);
  CHECK(is_deterministic(t1));
  CHECK(is_deterministic(t2));
  CHECK(is_sequential_va(t1));
  CHECK(is_sequential_va(t2));
  CHECK(containment_general(t1, t2).contained);

  // single clause: not valid
  Dnf single;
  single.num_vars = 3;
  single.clauses.push_back({DnfLiteral{0, true}, DnfLiteral{1, true}, DnfLiteral{2, true}});
  REQUIRE_FALSE(dnf_is_valid(single));
  auto [s1, s2] = gadget_dnf_containment(single);
  ContainmentResult r = containment_general(s1, s2);
  REQUIRE_FALSE(r.contained);
  const auto& w = *r.counterexample;
  CHECK(enumerate_runs(s1, w.document).contains(w.mapping));
  CHECK_FALSE(enumerate_runs(s2, w.document).contains(w.mapping));

  // empty dnf: nothing on the right side
  Dnf empty;
  auto [e1, e2] = gadget_dnf_containment(empty);
  CHECK_FALSE(containment_general(e1, e2).contained);
}

TEST_CASE("dnf gadget agrees with the truth table on random formulas") {
  Rng rng(1107);
  for (int i = 0; i < 25; ++i) {
    Dnf dnf;
    dnf.num_vars = 3 + pick(rng, 2);
    size_t m = 1 + pick(rng, 3);
    for (size_t c = 0; c < m; ++c) {
      std::vector<size_t> vars(dnf.num_vars);
      for (size_t v = 0; v < dnf.num_vars; ++v) vars[v] = v;
      std::shuffle(vars.begin(), vars.end(), rng);
      dnf.clauses.push_back({DnfLiteral{vars[0], coin(rng)}, DnfLiteral{vars[1], coin(rng)},
                             DnfLiteral{vars[2], coin(rng)}});
    }
    auto [a1, a2] = gadget_dnf_containment(dnf);
    CHECK(containment_general(a1, a2).contained == dnf_is_valid(dnf));
  }
}
