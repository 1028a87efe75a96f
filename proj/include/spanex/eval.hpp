#pragma once

#include <functional>

#include "spanex/core.hpp"
#include "spanex/va.hpp"

namespace spanex {

// ---------------------------------------------------------------------------
// The Eval decision problem: does some mapping extending the constraint
// belong to the semantics of the target on the document? Bottom-constrained
// variables must stay unbound in the extension.

struct EvalBudget {
  uint32_t max_fpt_vars = 8;
  size_t max_configs = 20'000'000;
};

struct EvalInstance {
  const VaAutomaton* target = nullptr;
  const Document* document = nullptr;
  ExtendedMapping constraint;
};

// Polynomial-time decision for sequential automata: constrained operations
// are grouped by document position and admitted through counted path search;
// unconstrained operations become epsilon moves.
bool eval_decision_seq(const EvalInstance& inst);

// General automata, exponential only in the number of variables: per-variable
// open/close statuses replace the epsilon rewrite.
bool eval_decision_fpt(const EvalInstance& inst, const EvalBudget& budget = {});

// Dispatches on sequentiality.
bool eval_decision(const EvalInstance& inst, const EvalBudget& budget = {});

// Membership test: every target variable outside dom(m) is pinned to bottom.
bool model_check(const VaAutomaton& a, const Document& d, const Mapping& m,
                 const EvalBudget& budget = {});

// ---------------------------------------------------------------------------
// Enumeration with polynomial delay. Variables are assigned in lexicographic
// order; candidate spans iterate (start asc, end asc) with bottom last. The
// sink returns false to stop early.

using MappingSink = std::function<bool(const Mapping&)>;

struct EnumerateStats {
  size_t outputs = 0;
  size_t eval_calls = 0;
  // Eval invocations between consecutive outputs, including the gap that ends
  // at termination.
  std::vector<size_t> gaps;
};

void enumerate(const VaAutomaton& a, const Document& d, const MappingSink& sink,
               EnumerateStats* stats = nullptr, const EvalBudget& budget = {});

MappingSet enumerate_all(const VaAutomaton& a, const Document& d, const EvalBudget& budget = {});

// ---------------------------------------------------------------------------
// Delay audit: runs the enumeration to completion and reports per-output Eval
// call counts against the polynomial-delay bound.

struct DelayAudit {
  size_t var_count = 0;
  uint32_t doc_len = 0;
  size_t outputs = 0;
  std::vector<size_t> gaps;
  size_t max_gap = 0;
  // |var| * (|d|^2 + 1), the bound as usually stated. A gap can exceed it:
  // the recursion may pay for a depth twice between outputs, and |sub(d)|+1
  // exceeds |d|^2+1 for short documents.
  size_t stated_bound = 0;
  // max(1, 2 * |var| * (|sub(d)| + 1)): what the recursion structure
  // guarantees on every instance.
  size_t structural_bound = 0;
  bool satisfies_stated_bound = false;
  bool satisfies_structural_bound = false;
};

DelayAudit delay_audit(const VaAutomaton& a, const Document& d, const EvalBudget& budget = {});

}  // namespace spanex
