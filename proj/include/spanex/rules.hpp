#pragma once

#include <map>
#include <optional>

#include "spanex/core.hpp"
#include "spanex/eval.hpp"
#include "spanex/rgx.hpp"

namespace spanex {

// ---------------------------------------------------------------------------
// Extraction rules: a root spanRGX over the whole document plus constraints
// var.expr over the span each variable captures.

struct ExtractionRule {
  Rgx root;
  std::vector<std::pair<std::string, Rgx>> constraints;  // in file order

  // All variables mentioned anywhere, including constraint heads.
  std::set<std::string> variables() const;
  const Rgx* constraint_for(const std::string& var) const;
};

struct RuleUnion {
  std::vector<ExtractionRule> rules;
};

// Rule text: first conjunct is the root (optionally prefixed `doc:`), the
// rest are `var . expr`; `&&` and newlines both separate conjuncts; `#`
// starts a comment. Bodies are parsed in spanRGX context against `alphabet`.
ExtractionRule parse_rule(const std::string& text, const std::set<char32_t>& alphabet = {});
std::string print_rule(const ExtractionRule& rule, const std::set<char32_t>& alphabet = {});

std::string rule_union_to_json(const RuleUnion& u, const std::set<char32_t>& alphabet = {});
RuleUnion rule_union_from_json(const std::string& text, const std::set<char32_t>& alphabet = {});

// ---------------------------------------------------------------------------
// The rule graph: nodes are variables plus `doc`; an edge (x, y) records that
// y occurs in x's expression. Used by the shape classifiers and rewrites.

struct RuleGraph {
  // Index 0 is the doc node; variables follow in sorted order.
  std::vector<std::string> nodes;
  std::vector<std::vector<size_t>> edges;

  size_t index_of(const std::string& var) const;
  bool is_dag() const;
  bool is_tree_rooted_at_doc() const;
  bool path_exists(size_t from, size_t to) const;
};

RuleGraph rule_graph(const ExtractionRule& rule);

struct RuleShape {
  bool simple = false;
  bool functional = false;
  bool sequential = false;
  bool span_rgx = false;
  bool dag_like = false;
  bool tree_like = false;
};

RuleShape classify(const ExtractionRule& rule);

// ---------------------------------------------------------------------------
// Semantics.

// Instantiated variables of a rule under a tuple of mappings (mu0 aligned
// with the root, the rest with the constraints in order).
std::set<std::string> ivar(const ExtractionRule& rule, const std::vector<Mapping>& tuple);

// Brute-force reference semantics: enumerates candidate tuples and keeps the
// unions of those satisfying the rule. Desk scale only.
MappingSet eval_rule_oracle(const ExtractionRule& rule, const Document& d,
                            const std::set<char32_t>& alphabet, const OracleBudget& budget = {});
MappingSet eval_rule_oracle(const ExtractionRule& rule, const Document& d,
                            const OracleBudget& budget = {});

// Eval for sequential tree-like rules: memoized interval recursion over the
// per-variable expressions; polynomial time.
bool eval_tree_rule(const ExtractionRule& rule, const Document& d, const ExtendedMapping& constraint,
                    const std::set<char32_t>& alphabet);

// Polynomial-delay enumeration for sequential tree-like rules.
void enumerate_tree_rule(const ExtractionRule& rule, const Document& d,
                         const std::set<char32_t>& alphabet, const MappingSink& sink,
                         EnumerateStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Rewriting pipeline.

struct RewriteBudget {
  size_t max_rules = 200'000;
  size_t max_paths_per_body = 50'000;
};

// Simple functional rule -> equivalent dag-like rule (cycle elimination via
// colouring and strongly connected components).
ExtractionRule eliminate_cycles(const ExtractionRule& rule);

// Simple rule -> union of functional dag-like rules.
RuleUnion to_functional_union(const ExtractionRule& rule, const RewriteBudget& budget = {});

// Functional dag-like rule -> union of functional tree-like rules; empty
// union when the rule is unsatisfiable.
RuleUnion dag_to_tree_union(const ExtractionRule& rule, const RewriteBudget& budget = {});

// Tree-like rule -> equivalent RGX by recursive nesting.
Rgx tree_to_rgx(const ExtractionRule& rule);

// RGX -> union of tree-like rules via path decomposition.
RuleUnion rgx_to_rule_union(const Rgx& g, const std::set<char32_t>& alphabet,
                            const RewriteBudget& budget = {});

// The designated unsatisfiable dag-like rule emitted for red cycles.
ExtractionRule unsat_dag_rule();

// Per-body functional path decomposition of a spanRGX (used by the rewrites).
std::vector<Rgx> span_rgx_paths(const Rgx& g, size_t max_paths);

}  // namespace spanex
