#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace spanex {

enum class Errc {
  syntax_error,
  invalid_span,
  incompatible_mappings,
  not_sequential,
  not_functional,
  not_simple,
  not_tree_like,
  not_dag_like,
  not_hierarchical,
  precondition_violated,
  malformed_clause,
  budget_exceeded,
  empty_result,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// ---------------------------------------------------------------------------
// UTF-8 <-> scalar values. Span indices count Unicode scalar values, not bytes.

std::u32string utf8_decode(const std::string& bytes);
std::string utf8_encode(const std::u32string& syms);
std::string utf8_encode(char32_t sym);

// ---------------------------------------------------------------------------
// Spans are 1-based and end-exclusive: (i, j) with 1 <= i <= j <= |d|+1.

struct Span {
  uint32_t start = 1;
  uint32_t end = 1;

  bool empty() const { return start == end; }
  bool operator==(const Span& o) const = default;
  auto operator<=>(const Span& o) const = default;

  bool contains(const Span& o) const { return start <= o.start && o.end <= end; }
  bool disjoint(const Span& o) const { return end <= o.start || o.end <= start; }
  // Shares no endpoint with o, per the point-disjointness definition.
  bool point_disjoint(const Span& o) const {
    return start != o.start && start != o.end && end != o.start && end != o.end;
  }
  bool concatenable(const Span& o) const { return end == o.start; }
  Span concat(const Span& o) const { return Span{start, o.end}; }
};

class Document {
 public:
  Document() = default;
  explicit Document(const std::string& utf8) : syms_(utf8_decode(utf8)) {}
  explicit Document(std::u32string syms) : syms_(std::move(syms)) {}

  uint32_t length() const { return static_cast<uint32_t>(syms_.size()); }
  const std::u32string& symbols() const { return syms_; }
  // 1-based symbol access.
  char32_t at(uint32_t pos) const { return syms_.at(pos - 1); }

  bool valid(const Span& s) const {
    return 1 <= s.start && s.start <= s.end && s.end <= length() + 1;
  }
  Span whole() const { return Span{1, length() + 1}; }

  // The symbol set of the document, used when no alphabet is declared.
  std::set<char32_t> alphabet() const;

  // Byte offset of the 1-based scalar position (for CLI --byte-offsets).
  size_t byte_offset(uint32_t pos) const;

  bool operator==(const Document& o) const = default;

 private:
  std::u32string syms_;
};

std::u32string span_content(const Document& d, const Span& s);
std::string span_content_utf8(const Document& d, const Span& s);

// All spans of d: sub(d), of size (|d|+1)(|d|+2)/2, ordered (start asc, end asc).
std::vector<Span> all_spans(const Document& d);

// ---------------------------------------------------------------------------
// Mappings: partial functions from variable names to spans.

class Mapping {
 public:
  Mapping() = default;

  bool binds(const std::string& var) const { return find(var) != nullptr; }
  const Span* find(const std::string& var) const;
  Span at(const std::string& var) const;
  size_t size() const { return b_.size(); }
  bool empty() const { return b_.empty(); }

  // Adds a binding; returns false when var is already bound to a different span.
  bool bind(const std::string& var, Span s);

  std::vector<std::string> domain() const;
  const std::vector<std::pair<std::string, Span>>& bindings() const { return b_; }

  bool operator==(const Mapping& o) const = default;
  auto operator<=>(const Mapping& o) const = default;

 private:
  std::vector<std::pair<std::string, Span>> b_;  // sorted by variable name
};

bool compatible(const Mapping& m1, const Mapping& m2);
Mapping merge(const Mapping& m1, const Mapping& m2);

// Every pair of bound spans nested or disjoint.
bool is_hierarchical(const Mapping& m);
// Spans of distinct variables share no endpoint.
bool is_point_disjoint(const Mapping& m);

// ---------------------------------------------------------------------------
// Extended mappings add the "must stay unbound" marker; nullopt encodes it.

class ExtendedMapping {
 public:
  ExtendedMapping() = default;

  bool has(const std::string& var) const { return find(var) != nullptr; }
  const std::optional<Span>* find(const std::string& var) const;
  bool is_bottom(const std::string& var) const;

  void set(const std::string& var, std::optional<Span> value);
  void erase(const std::string& var);
  size_t size() const { return b_.size(); }

  // Bound (non-bottom) part, viewed as a plain mapping.
  Mapping as_mapping() const;
  std::vector<std::string> bottom_vars() const;
  const std::vector<std::pair<std::string, std::optional<Span>>>& entries() const { return b_; }

  // True when every assignment of *this also holds in m (bottom = unbound in m).
  bool extended_by(const Mapping& m) const;

  static ExtendedMapping from_mapping(const Mapping& m);

  bool operator==(const ExtendedMapping& o) const = default;

 private:
  std::vector<std::pair<std::string, std::optional<Span>>> b_;  // sorted
};

// ---------------------------------------------------------------------------
// Duplicate-free sets of mappings.

class MappingSet {
 public:
  MappingSet() = default;
  MappingSet(std::initializer_list<Mapping> ms) : s_(ms) {}

  void insert(const Mapping& m) { s_.insert(m); }
  bool contains(const Mapping& m) const { return s_.count(m) != 0; }
  size_t size() const { return s_.size(); }
  bool empty() const { return s_.empty(); }

  auto begin() const { return s_.begin(); }
  auto end() const { return s_.end(); }

  bool operator==(const MappingSet& o) const = default;

 private:
  std::set<Mapping> s_;
};

MappingSet join_sets(const MappingSet& m1, const MappingSet& m2);

// Joins M with the set of all total functions vars -> sub(d). Reproduces the
// legacy relation semantics; used by tests only.
MappingSet totalize(const MappingSet& m, const std::set<std::string>& vars, const Document& d);

// ---------------------------------------------------------------------------
// JSON wire format. Mappings serialize as {"var": [start, end], ...}; extended
// mappings serialize bottom as null.

std::string mapping_to_json(const Mapping& m);
std::string mapping_to_json(const Mapping& m, const Document& d, bool byte_offsets);
std::string extended_mapping_to_json(const ExtendedMapping& m);
Mapping mapping_from_json(const std::string& text);
ExtendedMapping extended_mapping_from_json(const std::string& text);

}  // namespace spanex
