#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "spanex/core.hpp"

namespace spanex {

// ---------------------------------------------------------------------------
// Variable-regex AST. Nodes are immutable and shared.

enum class RgxKind { Epsilon, Letter, Wildcard, Capture, Concat, Disj, Star };

struct RgxNode;
using Rgx = std::shared_ptr<const RgxNode>;

struct RgxNode {
  RgxKind kind;
  char32_t letter = 0;    // Letter
  std::string var;        // Capture
  Rgx left, right;        // Concat/Disj children; Capture/Star body in `left`

  std::set<std::string> vars_;  // var(g), filled at construction

  const std::set<std::string>& vars() const { return vars_; }

  static Rgx epsilon();
  static Rgx symbol(char32_t c);
  static Rgx wildcard();
  static Rgx capture(std::string var, Rgx body);
  static Rgx concat(Rgx a, Rgx b);
  static Rgx disj(Rgx a, Rgx b);
  static Rgx star(Rgx body);
};

// Folds a sequence into a right-nested concatenation (epsilon when empty).
Rgx concat_all(const std::vector<Rgx>& parts);
Rgx disj_all(const std::vector<Rgx>& parts);

bool rgx_equal(const Rgx& a, const Rgx& b);

// ---------------------------------------------------------------------------
// Concrete syntax.
//
//   concatenation by juxtaposition, `|` disjunction, postfix `*`,
//   `x{...}` capture, `()` epsilon, `@` alphabet wildcard, `\` escapes,
//   `#` comment to end of line, whitespace insignificant.
//
// In spanRGX context (rule files) a bare identifier is sugar for ident{@*},
// except that identifiers spelled entirely from declared alphabet symbols
// denote letter sequences. Plain RGX context has no sugar: identifier runs
// are always letter sequences.

struct ParseOptions {
  bool span_rgx_sugar = false;
  std::set<char32_t> alphabet;  // resolves bare identifiers under sugar
};

Rgx parse_rgx(const std::string& text, const ParseOptions& opts = {});

struct PrintOptions {
  bool span_rgx_sugar = false;  // print x{@*} as bare x
  std::set<char32_t> alphabet;  // letters printed unescaped under sugar
};

std::string print_rgx(const Rgx& g, const PrintOptions& opts = {});

// ---------------------------------------------------------------------------
// Reference semantics (Table-2 oracle). Exponential; test/differential use.

struct OracleBudget {
  uint32_t max_doc_len = 12;
  uint32_t max_vars = 4;
  size_t max_pairs = 2'000'000;
};

// One (span, mapping) pair of the inner semantics layer.
struct SemPair {
  Span span;
  Mapping mapping;
  bool operator==(const SemPair&) const = default;
  auto operator<=>(const SemPair&) const = default;
};

using PairSemantics = std::set<SemPair>;

PairSemantics pair_semantics(const Rgx& g, const Document& d,
                             const std::set<char32_t>& alphabet, const OracleBudget& budget = {});
PairSemantics pair_semantics(const Rgx& g, const Document& d, const OracleBudget& budget = {});

// Mappings whose pair spans the whole document.
MappingSet eval_rgx(const Rgx& g, const Document& d, const std::set<char32_t>& alphabet,
                    const OracleBudget& budget = {});
MappingSet eval_rgx(const Rgx& g, const Document& d, const OracleBudget& budget = {});

// ---------------------------------------------------------------------------
// Syntactic classifiers.

// Functional wrt var(g): every produced mapping binds exactly var(g).
bool is_functional(const Rgx& g);

// Concatenations variable-disjoint, stars variable-free, no self-nested capture.
bool is_sequential(const Rgx& g);

// Every capture body is the wildcard star.
bool is_span_rgx(const Rgx& g);

}  // namespace spanex
