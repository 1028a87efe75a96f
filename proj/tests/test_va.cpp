#include "doctest.h"
#include "spanex/va.hpp"
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

}  // namespace

TEST_CASE("thompson construction basics") {
  VaAutomaton eps = compile_rgx(RgxNode::epsilon(), kAb);
  CHECK(eps.num_states == 2);
  REQUIRE(eps.transitions.size() == 1);
  CHECK(eps.transitions[0].label.kind == LabelKind::Eps);

  VaAutomaton xa = compile_rgx(parse_rgx("x{a}"), kAb);
  // open -> a -> close along the single path
  CHECK(enumerate_runs(xa, Document("a")) == MappingSet{map_of({{"x", {1, 2}}})});
  CHECK(enumerate_runs(xa, Document("b")).empty());
}

TEST_CASE("open without close yields no binding") {
  VaAutomaton a;
  StateId q0 = a.add_state(), q1 = a.add_state();
  a.initial = q0;
  a.finals = {q1};
  a.add(q0, Label::open("x"), q1);
  CHECK(enumerate_runs(a, Document("")) == MappingSet{Mapping{}});
}

TEST_CASE("close-only variables never fire") {
  VaAutomaton a;
  StateId q0 = a.add_state(), q1 = a.add_state();
  a.initial = q0;
  a.finals = {q0, q1};
  a.add(q0, Label::close("x"), q1);
  CHECK(a.close_only_variables() == std::set<std::string>{"x"});
  CHECK(enumerate_runs(a, Document("")) == MappingSet{Mapping{}});
}

TEST_CASE("compile agrees with the oracle on random expressions") {
  Rng rng(9001);
  RgxGenOptions opts;
  opts.max_depth = 4;
  for (int i = 0; i < 150; ++i) {
    Rgx g = random_rgx(rng, opts);
    VaAutomaton a = compile_rgx(g, kAb);
    for (const auto& d : all_docs(U"ab", 3)) {
      CHECK(enumerate_runs(a, d) == eval_rgx(g, d, kAb));
    }
  }
}

TEST_CASE("stack discipline produces hierarchical mappings only") {
  Rng rng(9002);
  VaGenOptions opts;
  for (int i = 0; i < 100; ++i) {
    VaAutomaton a = random_va(rng, opts);
    for (const auto& d : all_docs(U"ab", 3))
      for (const auto& m : enumerate_runs(a, d, RunPolicy::StackDiscipline))
        CHECK(is_hierarchical(m));
  }
}

TEST_CASE("sequentiality checker") {
  CHECK(is_sequential_va(compile_rgx(parse_rgx("x{a*} y{b*}"), kAb)));
  CHECK(is_sequential_va(compile_rgx(parse_rgx("(a x{b})|(b x{a})"), kAb)));
  CHECK_FALSE(is_sequential_va(compile_rgx(parse_rgx("x{a*} x{b*}"), kAb)));
  CHECK_FALSE(is_sequential_va(compile_rgx(parse_rgx("(x{(a|b)*}|y{(a|b)*})*"), kAb)));

  // two consecutive opens of the same variable on an initial-to-final path
  VaAutomaton dbl;
  StateId q0 = dbl.add_state(), q1 = dbl.add_state(), q2 = dbl.add_state();
  dbl.initial = q0;
  dbl.finals = {q2};
  dbl.add(q0, Label::open("x"), q1);
  dbl.add(q1, Label::open("x"), q2);
  CHECK_FALSE(is_sequential_va(dbl));

  // open reaching a final state without a close
  VaAutomaton open_end;
  q0 = open_end.add_state();
  q1 = open_end.add_state();
  open_end.initial = q0;
  open_end.finals = {q1};
  open_end.add(q0, Label::open("x"), q1);
  CHECK_FALSE(is_sequential_va(open_end));

  // the same automaton with the close present is fine
  VaAutomaton balanced;
  q0 = balanced.add_state();
  q1 = balanced.add_state();
  q2 = balanced.add_state();
  balanced.initial = q0;
  balanced.finals = {q2};
  balanced.add(q0, Label::open("x"), q1);
  balanced.add(q1, Label::close("x"), q2);
  CHECK(is_sequential_va(balanced));
}

TEST_CASE("compiled sequential expressions give sequential automata") {
  Rng rng(9003);
  RgxGenOptions opts;
  for (int i = 0; i < 150; ++i) {
    Rgx g = random_sequential_rgx(rng, opts, {"x", "y", "z"});
    REQUIRE(is_sequential(g));
    CHECK(is_sequential_va(compile_rgx(g, kAb)));
  }
}

TEST_CASE("path decomposition of single captures") {
  auto paths = decompose_paths(compile_rgx(parse_rgx("x{a}"), kAb));
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].ops.size() == 2);
  CHECK(print_rgx(path_to_rgx(paths[0])) == "x{a}");

  auto two = decompose_paths(compile_rgx(parse_rgx("x{a}|y{b}"), kAb));
  CHECK(two.size() == 2);
}

TEST_CASE("path union preserves semantics on random automata") {
  Rng rng(9004);
  VaGenOptions opts;
  opts.num_states = 4;
  opts.num_transitions = 8;
  for (int i = 0; i < 80; ++i) {
    VaAutomaton a = random_va(rng, opts);
    std::vector<VaPath> paths = decompose_paths(a);
    for (const auto& d : all_docs(U"ab", 3)) {
      MappingSet direct = enumerate_runs(a, d);
      MappingSet via_paths;
      for (const auto& p : paths)
        for (const auto& m : enumerate_runs(path_to_va(p, kAb), d)) via_paths.insert(m);
      CHECK(direct == via_paths);
    }
    for (const auto& p : paths) CHECK(p.ops.size() <= 2 * opts.vars.size());
  }
}

TEST_CASE("va_to_rgx round trips semantics for compiled expressions") {
  Rng rng(9005);
  RgxGenOptions opts;
  opts.max_depth = 3;
  opts.vars = {"x", "y"};
  for (int i = 0; i < 60; ++i) {
    Rgx g = random_rgx(rng, opts);
    Rgx back = va_to_rgx(compile_rgx(g, kAb));
    for (const auto& d : all_docs(U"ab", 3))
      CHECK(eval_rgx(back, d, kAb) == eval_rgx(g, d, kAb));
  }
}

TEST_CASE("va_to_rgx rejects non-nestable paths") {
  VaAutomaton a;
  StateId s[5];
  for (auto& q : s) q = a.add_state();
  a.initial = s[0];
  a.finals = {s[4]};
  a.add(s[0], Label::open("x"), s[1]);
  a.add(s[1], Label::open("y"), s[2]);
  a.add(s[2], Label::close("x"), s[3]);
  a.add(s[3], Label::close("y"), s[4]);
  CHECK_THROWS_AS(va_to_rgx(a), Error);
}

TEST_CASE("sequentialize") {
  // already sequential input keeps its semantics
  Rgx g1 = parse_rgx("x{a*} y{b*}");
  Rgx s1 = sequentialize(g1, kAb);
  CHECK(is_sequential(s1));
  for (const auto& d : all_docs(U"ab", 3)) CHECK(eval_rgx(s1, d, kAb) == eval_rgx(g1, d, kAb));

  // An unsatisfiable input has no sequential equivalent (sequential
  // expressions are always satisfiable); the result is empty everywhere.
  Rgx s2 = sequentialize(parse_rgx("x{a*} x{b*}"), kAb);
  for (const auto& d : all_docs(U"ab", 4)) CHECK(eval_rgx(s2, d, kAb).empty());

  // the star-over-variables example keeps the worked mapping
  Rgx g3 = parse_rgx("(x{(a|b)*}|y{(a|b)*})*");
  Rgx s3 = sequentialize(g3, kAb);
  CHECK(is_sequential(s3));
  MappingSet out = eval_rgx(s3, Document("aaabbb"), kAb, OracleBudget{12, 4, 20'000'000});
  CHECK(out.contains(map_of({{"y", {1, 4}}, {"x", {4, 7}}})));
}

TEST_CASE("sequentialize agrees with the oracle on random expressions") {
  Rng rng(9006);
  RgxGenOptions opts;
  opts.max_depth = 3;
  opts.vars = {"x", "y"};
  for (int i = 0; i < 60; ++i) {
    Rgx g = random_rgx(rng, opts);
    Rgx s = sequentialize(g, kAb);
    bool empty_everywhere = true;
    for (const auto& d : all_docs(U"ab", 3)) {
      MappingSet got = eval_rgx(s, d, kAb);
      CHECK(got == eval_rgx(g, d, kAb));
      if (!got.empty()) empty_everywhere = false;
    }
    // Satisfiable inputs sequentialize; unsatisfiable ones cannot.
    if (!is_sequential(s)) CHECK(empty_everywhere);
  }
}

TEST_CASE("union, projection, join") {
  VaAutomaton ax = compile_rgx(parse_rgx("x{a}@*"), kAb);
  VaAutomaton by = compile_rgx(parse_rgx("@*y{b}"), kAb);

  MappingSet joined = enumerate_runs(va_join(ax, by), Document("ab"));
  CHECK(joined == MappingSet{map_of({{"x", {1, 2}}, {"y", {2, 3}}})});

  VaAutomaton xy = compile_rgx(parse_rgx("x{a*} y{b*}"), kAb);
  MappingSet projected = enumerate_runs(va_project(xy, {"x"}), Document("aaabbb"));
  CHECK(projected.contains(map_of({{"x", {1, 4}}})));
  for (const auto& m : projected) CHECK_FALSE(m.binds("y"));

  VaAutomaton u = va_union(ax, ax);
  for (const auto& d : all_docs(U"ab", 3)) CHECK(enumerate_runs(u, d) == enumerate_runs(ax, d));
}

TEST_CASE("join equals the join of component semantics on random pairs") {
  Rng rng(9007);
  VaGenOptions opts;
  opts.num_states = 4;
  opts.num_transitions = 7;
  for (int i = 0; i < 60; ++i) {
    VaAutomaton a1 = random_va(rng, opts);
    VaAutomaton a2 = random_va(rng, opts);
    VaAutomaton j = va_join(a1, a2);
    for (const auto& d : all_docs(U"ab", 3)) {
      MappingSet expect = join_sets(enumerate_runs(a1, d), enumerate_runs(a2, d));
      CHECK(enumerate_runs(j, d) == expect);
    }
  }
}

TEST_CASE("projection equals domain restriction on random automata") {
  Rng rng(9008);
  VaGenOptions opts;
  for (int i = 0; i < 60; ++i) {
    VaAutomaton a = random_va(rng, opts);
    VaAutomaton p = va_project(a, {"x"});
    for (const auto& d : all_docs(U"ab", 3)) {
      MappingSet expect;
      for (const auto& m : enumerate_runs(a, d)) {
        Mapping r;
        if (const Span* s = m.find("x")) r.bind("x", *s);
        expect.insert(r);
      }
      CHECK(enumerate_runs(p, d) == expect);
    }
  }
}

TEST_CASE("determinization preserves semantics and is deterministic") {
  Rng rng(9009);
  VaGenOptions opts;
  opts.num_states = 5;
  for (int i = 0; i < 80; ++i) {
    VaAutomaton a = random_va(rng, opts);
    VaAutomaton det = determinize(a);
    CHECK(is_deterministic(det));
    for (const auto& d : all_docs(U"ab", 3)) CHECK(enumerate_runs(det, d) == enumerate_runs(a, d));
    // idempotent in semantics
    VaAutomaton det2 = determinize(det);
    for (const auto& d : all_docs(U"ab", 2)) CHECK(enumerate_runs(det2, d) == enumerate_runs(det, d));
  }

  VaAutomaton dd = determinize(compile_rgx(parse_rgx("x{a}|x{a}"), kAb));
  CHECK(is_deterministic(dd));
  CHECK(enumerate_runs(dd, Document("a")) == MappingSet{map_of({{"x", {1, 2}}})});
}

TEST_CASE("is_deterministic") {
  VaAutomaton a;
  StateId q0 = a.add_state(), q1 = a.add_state();
  a.initial = q0;
  a.finals = {q1};
  a.add(q0, Label::symbol(U'a'), q1);
  CHECK(is_deterministic(a));
  a.add(q0, Label::symbol(U'a'), q0);
  CHECK_FALSE(is_deterministic(a));

  VaAutomaton e;
  q0 = e.add_state();
  q1 = e.add_state();
  e.initial = q0;
  e.finals = {q1};
  e.add(q0, Label::eps(), q1);
  CHECK_FALSE(is_deterministic(e));
}

TEST_CASE("automaton JSON round trip is exact") {
  Rng rng(9010);
  VaGenOptions opts;
  for (int i = 0; i < 40; ++i) {
    VaAutomaton a = random_va(rng, opts);
    a.normalize();
    std::string j = va_to_json(a);
    VaAutomaton back = va_from_json(j);
    back.normalize();
    CHECK(va_to_json(back) == j);
  }
}

TEST_CASE("JSON loader flags close-only variables") {
  VaAutomaton a;
  StateId q0 = a.add_state(), q1 = a.add_state();
  a.initial = q0;
  a.finals = {q1};
  a.add(q0, Label::close("ghost"), q1);
  std::vector<std::string> warnings;
  va_from_json(va_to_json(a), &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("ghost") != std::string::npos);
}

TEST_CASE("single-final normalization") {
  VaAutomaton a;
  StateId q0 = a.add_state(), q1 = a.add_state(), q2 = a.add_state();
  a.initial = q0;
  a.finals = {q1, q2};
  a.add(q0, Label::symbol(U'a'), q1);
  a.add(q0, Label::symbol(U'b'), q2);
  VaAutomaton nf = normalize_single_final(a);
  CHECK(nf.finals.size() == 1);
  for (const auto& d : all_docs(U"ab", 2)) CHECK(enumerate_runs(nf, d) == enumerate_runs(a, d));
}
