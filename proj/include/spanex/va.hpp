#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "spanex/core.hpp"
#include "spanex/rgx.hpp"

namespace spanex {

// ---------------------------------------------------------------------------
// Variable-set automata.

using StateId = uint32_t;

enum class LabelKind { Letter, Open, Close, Eps };

struct Label {
  LabelKind kind = LabelKind::Eps;
  char32_t letter = 0;  // Letter
  std::string var;      // Open/Close

  static Label eps() { return {}; }
  static Label symbol(char32_t c) { return Label{LabelKind::Letter, c, ""}; }
  static Label open(std::string v) { return Label{LabelKind::Open, 0, std::move(v)}; }
  static Label close(std::string v) { return Label{LabelKind::Close, 0, std::move(v)}; }

  bool operator==(const Label&) const = default;
  auto operator<=>(const Label&) const = default;
};

struct Transition {
  StateId from = 0;
  Label label;
  StateId to = 0;

  bool operator==(const Transition&) const = default;
  auto operator<=>(const Transition&) const = default;
};

struct VaAutomaton {
  uint32_t num_states = 0;
  StateId initial = 0;
  std::set<StateId> finals;
  std::vector<Transition> transitions;

  StateId add_state() { return num_states++; }
  void add(StateId from, Label label, StateId to) { transitions.push_back({from, std::move(label), to}); }
  bool is_final(StateId q) const { return finals.count(q) != 0; }

  // var(A): variables with an open transition. Close-only variables are not
  // part of var(A); their transitions can never fire in a valid run.
  std::set<std::string> variables() const;
  std::set<std::string> close_only_variables() const;
  std::set<char32_t> letters() const;

  // Sorts states/transitions into the canonical serialization order.
  void normalize();
};

// JSON wire format (round-trips bit-exactly after normalize()).
std::string va_to_json(const VaAutomaton& a);
// `warnings` collects loader diagnostics such as close-only variables.
VaAutomaton va_from_json(const std::string& text, std::vector<std::string>* warnings = nullptr);

// Single-final paper form: adds a fresh final state with epsilon edges.
VaAutomaton normalize_single_final(const VaAutomaton& a);

// ---------------------------------------------------------------------------
// Compilation from RGX (Thompson construction). Wildcards expand to the
// disjunction of the alphabet.

VaAutomaton compile_rgx(const Rgx& g, const std::set<char32_t>& alphabet);

// ---------------------------------------------------------------------------
// Run semantics.

enum class RunPolicy { SetDiscipline, StackDiscipline };

struct RunBudget {
  size_t max_configs = 3'000'000;
};

// All mappings of accepting runs; exhaustive search, desk-scale only.
MappingSet enumerate_runs(const VaAutomaton& a, const Document& d,
                          RunPolicy policy = RunPolicy::SetDiscipline, const RunBudget& budget = {});

// ---------------------------------------------------------------------------
// Classifiers.

// No path from the initial state double-opens, double-closes, closes an
// unopened variable, or reaches a final state with open variables.
bool is_sequential_va(const VaAutomaton& a);

// Epsilon-free with per-(state, label) fan-out at most one.
bool is_deterministic(const VaAutomaton& a);

// ---------------------------------------------------------------------------
// Path decomposition (state elimination to a var-op graph, then all paths
// with at most 2|var(A)|+1 edges). Each path is a sequential alternation of
// regex segments and variable operations.

struct VaPath {
  // segments.size() == ops.size() + 1; path reads segment[0], op[0], ...
  std::vector<Rgx> segments;
  std::vector<std::pair<LabelKind, std::string>> ops;  // Open/Close only

  bool stack_disciplined() const;
};

struct PathBudget {
  size_t max_paths = 200'000;
};

std::vector<VaPath> decompose_paths(const VaAutomaton& a, RunPolicy policy = RunPolicy::SetDiscipline,
                                    const PathBudget& budget = {});

// A path as a standalone automaton over the given alphabet.
VaAutomaton path_to_va(const VaPath& p, const std::set<char32_t>& alphabet);

// Stack-disciplined path to RGX: open(x) ... close(x) becomes x{...}.
Rgx path_to_rgx(const VaPath& p);

// Disjunction of per-path RGX; rejects automata with non-nestable paths.
Rgx va_to_rgx(const VaAutomaton& a, const PathBudget& budget = {});

// Sequential RGX with the same semantics, via path decomposition.
Rgx sequentialize(const Rgx& g, const std::set<char32_t>& alphabet, const PathBudget& budget = {});

// ---------------------------------------------------------------------------
// Algebra.

struct AlgebraBudget {
  size_t max_states = 2'000'000;
};

VaAutomaton va_union(const VaAutomaton& a1, const VaAutomaton& a2);
VaAutomaton va_project(const VaAutomaton& a, const std::set<std::string>& keep,
                       const AlgebraBudget& budget = {});
VaAutomaton va_join(const VaAutomaton& a1, const VaAutomaton& a2, const AlgebraBudget& budget = {});

// Subset construction; output is deterministic, epsilon-free, with a final
// state set; semantics preserved on every document.
VaAutomaton determinize(const VaAutomaton& a, const AlgebraBudget& budget = {});

}  // namespace spanex
