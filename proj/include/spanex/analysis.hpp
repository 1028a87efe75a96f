#pragma once

#include <array>
#include <optional>

#include "spanex/rules.hpp"
#include "spanex/va.hpp"

namespace spanex {

// ---------------------------------------------------------------------------
// Satisfiability.

struct SatWitness {
  Document document;
  Mapping mapping;
};

struct AnalysisBudget {
  size_t max_configs = 5'000'000;
  size_t max_macro_states = 2'000'000;
};

// Configuration-graph search; a witness document never needs to exceed
// (2|var(A)|+1)|Q| symbols. nullopt means unsatisfiable.
std::optional<SatWitness> sat_va(const VaAutomaton& a, const AnalysisBudget& budget = {});

// Plain initial-to-final reachability; requires a sequential automaton.
bool sat_seq_va(const VaAutomaton& a);

// Witness for a sequential tree-like rule: pre-order traversal taking left
// disjuncts and skipping stars.
SatWitness tree_rule_witness(const ExtractionRule& rule, const std::set<char32_t>& alphabet);

// ---------------------------------------------------------------------------
// Containment.

struct ContainmentResult {
  bool contained = false;
  std::optional<SatWitness> counterexample;  // in A1, not in A2
};

// Macro-state search over state sets of both automata with guessed letters
// and position-grouped variable-operation sets.
ContainmentResult containment_general(const VaAutomaton& a1, const VaAutomaton& a2,
                                      const AnalysisBudget& budget = {});

// Product reachability for deterministic sequential point-disjoint automata;
// point-disjointness is verified only up to `pd_doc_bound`.
ContainmentResult containment_det_seq_pd(const VaAutomaton& a1, const VaAutomaton& a2,
                                         uint32_t pd_doc_bound = 4,
                                         const AnalysisBudget& budget = {});

// Bounded verification that every mapping on every document up to the bound
// is point-disjoint. Not a proof.
bool point_disjoint_check(const VaAutomaton& a, uint32_t doc_len_bound,
                          const RunBudget& budget = {});

// ---------------------------------------------------------------------------
// Hardness-gadget constructions, used as differential test generators.

// Positive 3-clauses over propositional variable names.
using Clause3 = std::array<std::string, 3>;

// spanRGX satisfiable on the empty document iff the clause set has an
// assignment making exactly one literal per clause true.
Rgx gadget_1in3_spanrgx(const std::vector<Clause3>& clauses);

// Functional dag-like rule over the document "#" with the same property.
ExtractionRule gadget_1in3_rule(const std::vector<Clause3>& clauses);

struct Digraph {
  size_t num_vertices = 0;
  std::set<std::pair<size_t, size_t>> edges;
};

// Automaton satisfiable (on the empty document) iff the graph has a
// Hamiltonian path.
VaAutomaton gadget_hamiltonian(const Digraph& g);

struct DnfLiteral {
  size_t var = 0;
  bool positive = true;
};

struct Dnf {
  size_t num_vars = 0;
  std::vector<std::array<DnfLiteral, 3>> clauses;
};

// Deterministic sequential automata with A1 contained in A2 iff the formula
// is valid.
std::pair<VaAutomaton, VaAutomaton> gadget_dnf_containment(const Dnf& dnf);

}  // namespace spanex
