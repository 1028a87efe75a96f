// Random instance generators and independent brute-force solvers shared by
// the unit tests and the acceptance suite. Everything here stays independent
// of the library's decision procedures so it can serve as an oracle.

#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "spanex/analysis.hpp"
#include "spanex/rgx.hpp"
#include "spanex/rules.hpp"
#include "spanex/va.hpp"

namespace testsupport {

using namespace spanex;

using Rng = std::mt19937;

inline size_t pick(Rng& rng, size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng); }
inline bool coin(Rng& rng) { return pick(rng, 2) == 0; }

// All documents over the alphabet up to the length bound, shortest first.
inline std::vector<Document> all_docs(const std::u32string& sigma, uint32_t max_len) {
  std::vector<std::u32string> words{U""};
  std::vector<Document> out{Document(std::u32string())};
  for (uint32_t len = 1; len <= max_len; ++len) {
    std::vector<std::u32string> next;
    for (const auto& w : words)
      for (char32_t c : sigma) {
        next.push_back(w + c);
        out.push_back(Document(w + c));
      }
    words = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random expressions.

struct RgxGenOptions {
  std::vector<std::string> vars{"x", "y", "z"};
  std::u32string letters = U"ab";
  uint32_t max_depth = 5;
};

inline Rgx random_rgx(Rng& rng, const RgxGenOptions& opts, uint32_t depth = 0) {
  size_t variants = depth >= opts.max_depth ? 3 : 7;
  switch (pick(rng, variants)) {
    case 0:
      return RgxNode::epsilon();
    case 1:
    case 2:
      return RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]);
    case 3:
      return RgxNode::concat(random_rgx(rng, opts, depth + 1), random_rgx(rng, opts, depth + 1));
    case 4:
      return RgxNode::disj(random_rgx(rng, opts, depth + 1), random_rgx(rng, opts, depth + 1));
    case 5:
      return RgxNode::star(random_rgx(rng, opts, depth + 1));
    default:
      return RgxNode::capture(opts.vars[pick(rng, opts.vars.size())],
                              random_rgx(rng, opts, depth + 1));
  }
}

// Random functional expression with respect to exactly `target` variables.
inline Rgx random_functional_rgx(Rng& rng, const RgxGenOptions& opts,
                                 std::vector<std::string> target, uint32_t depth = 0) {
  if (target.empty()) {
    switch (pick(rng, depth >= opts.max_depth ? 2 : 5)) {
      case 0:
        return RgxNode::epsilon();
      case 1:
        return RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]);
      case 2:
        return RgxNode::concat(random_functional_rgx(rng, opts, {}, depth + 1),
                               random_functional_rgx(rng, opts, {}, depth + 1));
      case 3:
        return RgxNode::disj(random_functional_rgx(rng, opts, {}, depth + 1),
                             random_functional_rgx(rng, opts, {}, depth + 1));
      default:
        return RgxNode::star(random_functional_rgx(rng, opts, {}, depth + 1));
    }
  }
  switch (depth >= opts.max_depth ? pick(rng, 1) : pick(rng, 3)) {
    case 0: {
      // Capture one target variable around the rest.
      size_t i = pick(rng, target.size());
      std::string x = target[i];
      target.erase(target.begin() + i);
      return RgxNode::capture(x, random_functional_rgx(rng, opts, target, depth + 1));
    }
    case 1: {
      // Split the target set over a concatenation.
      std::vector<std::string> left, right;
      for (auto& v : target) (coin(rng) ? left : right).push_back(v);
      return RgxNode::concat(random_functional_rgx(rng, opts, left, depth + 1),
                             random_functional_rgx(rng, opts, right, depth + 1));
    }
    default:
      return RgxNode::disj(random_functional_rgx(rng, opts, target, depth + 1),
                           random_functional_rgx(rng, opts, target, depth + 1));
  }
}

// Random sequential expression (possibly non-functional).
inline Rgx random_sequential_rgx(Rng& rng, const RgxGenOptions& opts,
                                 std::vector<std::string> avail, uint32_t depth = 0) {
  if (depth >= opts.max_depth || pick(rng, 7) < 2) {
    if (!avail.empty() && coin(rng) && depth < opts.max_depth) {
      std::string x = avail[pick(rng, avail.size())];
      return RgxNode::capture(x, RgxNode::star(RgxNode::wildcard()));
    }
    return coin(rng) ? RgxNode::epsilon()
                     : RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]);
  }
  switch (pick(rng, 5)) {
    case 0: {
      std::vector<std::string> left, right;
      for (auto& v : avail) (coin(rng) ? left : right).push_back(v);
      return RgxNode::concat(random_sequential_rgx(rng, opts, left, depth + 1),
                             random_sequential_rgx(rng, opts, right, depth + 1));
    }
    case 1:
      return RgxNode::disj(random_sequential_rgx(rng, opts, avail, depth + 1),
                           random_sequential_rgx(rng, opts, avail, depth + 1));
    case 2:
      return RgxNode::star(random_sequential_rgx(rng, opts, {}, depth + 1));
    case 3: {
      if (avail.empty())
        return RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]);
      size_t i = pick(rng, avail.size());
      std::string x = avail[i];
      avail.erase(avail.begin() + i);
      return RgxNode::capture(x, random_sequential_rgx(rng, opts, avail, depth + 1));
    }
    default:
      return RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]);
  }
}

// ---------------------------------------------------------------------------
// Random spanRGX and rules.

inline Rgx random_span_rgx(Rng& rng, const RgxGenOptions& opts, uint32_t depth = 0) {
  size_t variants = depth >= opts.max_depth ? 3 : 6;
  switch (pick(rng, variants)) {
    case 0:
      return RgxNode::epsilon();
    case 1:
      return RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]);
    case 2:
      return RgxNode::capture(opts.vars[pick(rng, opts.vars.size())],
                              RgxNode::star(RgxNode::wildcard()));
    case 3:
      return RgxNode::concat(random_span_rgx(rng, opts, depth + 1),
                             random_span_rgx(rng, opts, depth + 1));
    case 4:
      return RgxNode::disj(random_span_rgx(rng, opts, depth + 1),
                           random_span_rgx(rng, opts, depth + 1));
    default: {
      Rgx body = random_span_rgx(rng, opts, depth + 1);
      return body->vars().empty() ? RgxNode::star(body) : body;
    }
  }
}

// Random simple rule over a small variable pool; bodies are spanRGX.
inline ExtractionRule random_simple_rule(Rng& rng, size_t num_vars = 3, uint32_t max_depth = 3) {
  RgxGenOptions opts;
  opts.vars.clear();
  for (size_t i = 0; i < num_vars; ++i) opts.vars.push_back(std::string(1, char('x' + i)));
  opts.letters = U"ab";
  opts.max_depth = max_depth;
  ExtractionRule rule;
  rule.root = random_span_rgx(rng, opts);
  std::vector<std::string> heads = opts.vars;
  std::shuffle(heads.begin(), heads.end(), rng);
  size_t m = pick(rng, heads.size() + 1);
  for (size_t i = 0; i < m; ++i) rule.constraints.push_back({heads[i], random_span_rgx(rng, opts)});
  return rule;
}

// Random simple functional rule: every body is functional spanRGX.
inline ExtractionRule random_functional_rule(Rng& rng, size_t num_vars = 3, uint32_t max_depth = 3) {
  RgxGenOptions opts;
  opts.vars.clear();
  for (size_t i = 0; i < num_vars; ++i) opts.vars.push_back(std::string(1, char('x' + i)));
  opts.letters = U"ab";
  opts.max_depth = max_depth;

  auto functional_span = [&](std::vector<std::string> target) {
    // Functional spanRGX: variables appear as whole-capture atoms only.
    std::function<Rgx(std::vector<std::string>, uint32_t)> gen =
        [&](std::vector<std::string> tgt, uint32_t depth) -> Rgx {
      if (depth >= opts.max_depth) {
        // Force termination with a capture chain over the remaining target.
        if (tgt.empty())
          return coin(rng) ? RgxNode::epsilon()
                           : RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]);
        std::vector<Rgx> parts;
        for (const auto& v : tgt) parts.push_back(RgxNode::capture(v, RgxNode::star(RgxNode::wildcard())));
        return concat_all(parts);
      }
      if (tgt.size() == 1 && coin(rng))
        return RgxNode::capture(tgt[0], RgxNode::star(RgxNode::wildcard()));
      if (tgt.empty()) {
        switch (pick(rng, 4)) {
          case 0:
            return RgxNode::epsilon();
          case 1:
            return RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]);
          case 2:
            return RgxNode::star(gen({}, depth + 1));
          default:
            return RgxNode::concat(gen({}, depth + 1), gen({}, depth + 1));
        }
      }
      if (coin(rng)) {
        std::vector<std::string> left, right;
        for (auto& v : tgt) (coin(rng) ? left : right).push_back(v);
        return RgxNode::concat(gen(left, depth + 1), gen(right, depth + 1));
      }
      return RgxNode::disj(gen(tgt, depth + 1), gen(tgt, depth + 1));
    };
    return gen(std::move(target), 0);
  };

  ExtractionRule rule;
  std::vector<std::string> pool = opts.vars;
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::string> root_vars(pool.begin(), pool.begin() + pick(rng, pool.size() + 1));
  rule.root = functional_span(root_vars);
  std::vector<std::string> heads = opts.vars;
  std::shuffle(heads.begin(), heads.end(), rng);
  size_t m = pick(rng, heads.size() + 1);
  for (size_t i = 0; i < m; ++i) {
    std::vector<std::string> body_vars;
    for (const auto& v : opts.vars)
      if (v != heads[i] && pick(rng, 3) == 0) body_vars.push_back(v);
    rule.constraints.push_back({heads[i], functional_span(body_vars)});
  }
  return rule;
}

// Random sequential tree-like rule.
inline ExtractionRule random_tree_rule(Rng& rng, size_t num_vars = 3, uint32_t max_depth = 3) {
  RgxGenOptions opts;
  opts.letters = U"ab";
  opts.max_depth = max_depth;
  std::vector<std::string> vars;
  for (size_t i = 0; i < num_vars; ++i) vars.push_back(std::string(1, char('x' + i)));
  std::shuffle(vars.begin(), vars.end(), rng);

  // Assign each variable a parent among doc and the earlier variables.
  std::vector<std::vector<std::string>> children(num_vars + 1);
  for (size_t i = 0; i < num_vars; ++i) children[pick(rng, i + 1)].push_back(vars[i]);

  std::function<Rgx(const std::vector<std::string>&, uint32_t)> seq_with =
      [&](const std::vector<std::string>& kids, uint32_t depth) -> Rgx {
    // Sequential spanRGX mentioning each child exactly once.
    std::vector<Rgx> parts;
    for (const auto& k : kids) parts.push_back(RgxNode::capture(k, RgxNode::star(RgxNode::wildcard())));
    size_t extra = pick(rng, 3);
    for (size_t i = 0; i < extra; ++i) {
      switch (pick(rng, 3)) {
        case 0:
          parts.push_back(RgxNode::symbol(opts.letters[pick(rng, opts.letters.size())]));
          break;
        case 1:
          parts.push_back(RgxNode::star(RgxNode::wildcard()));
          break;
        default:
          parts.push_back(RgxNode::disj(RgxNode::symbol(opts.letters[pick(rng, 2)]),
                                        RgxNode::epsilon()));
          break;
      }
    }
    std::shuffle(parts.begin(), parts.end(), rng);
    (void)depth;
    return concat_all(parts);
  };

  ExtractionRule rule;
  rule.root = seq_with(children[0], 0);
  for (size_t i = 0; i < num_vars; ++i) {
    size_t idx = std::find(vars.begin(), vars.end(), vars[i]) - vars.begin();
    rule.constraints.push_back({vars[i], seq_with(children[idx + 1], 0)});
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Random automata.

struct VaGenOptions {
  uint32_t num_states = 5;
  std::vector<std::string> vars{"x", "y"};
  std::u32string letters = U"ab";
  uint32_t num_transitions = 10;
};

inline VaAutomaton random_va(Rng& rng, const VaGenOptions& opts) {
  VaAutomaton a;
  for (uint32_t i = 0; i < opts.num_states; ++i) a.add_state();
  a.initial = static_cast<StateId>(pick(rng, opts.num_states));
  a.finals.insert(static_cast<StateId>(pick(rng, opts.num_states)));
  for (uint32_t i = 0; i < opts.num_transitions; ++i) {
    StateId from = static_cast<StateId>(pick(rng, opts.num_states));
    StateId to = static_cast<StateId>(pick(rng, opts.num_states));
    switch (pick(rng, 4)) {
      case 0:
        a.add(from, Label::eps(), to);
        break;
      case 1:
        a.add(from, Label::open(opts.vars[pick(rng, opts.vars.size())]), to);
        break;
      case 2:
        a.add(from, Label::close(opts.vars[pick(rng, opts.vars.size())]), to);
        break;
      default:
        a.add(from, Label::symbol(opts.letters[pick(rng, opts.letters.size())]), to);
        break;
    }
  }
  a.normalize();
  return a;
}

// ---------------------------------------------------------------------------
// Brute-force problem solvers (independent oracles for the gadgets).

// Restriction of a mapping to a variable set; rewrites introduce auxiliary
// variables, so equivalence is read modulo projection onto the input's.
inline Mapping project_mapping(const Mapping& m, const std::set<std::string>& vars) {
  Mapping out;
  for (const auto& [v, s] : m.bindings())
    if (vars.count(v)) out.bind(v, s);
  return out;
}

inline MappingSet project_set(const MappingSet& ms, const std::set<std::string>& vars) {
  MappingSet out;
  for (const auto& m : ms) out.insert(project_mapping(m, vars));
  return out;
}

inline bool hamiltonian_path_exists(const Digraph& g) {
  size_t n = g.num_vertices;
  if (n == 0) return true;
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end());
  do {
    bool ok = true;
    for (size_t i = 0; i + 1 < n && ok; ++i)
      if (!g.edges.count({perm[i], perm[i + 1]})) ok = false;
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

inline bool one_in_three_satisfiable(const std::vector<Clause3>& clauses) {
  std::set<std::string> vars;
  for (const auto& c : clauses)
    for (const auto& l : c) vars.insert(l);
  std::vector<std::string> vs(vars.begin(), vars.end());
  for (uint64_t mask = 0; mask < (uint64_t(1) << vs.size()); ++mask) {
    auto truth = [&](const std::string& v) {
      size_t i = std::lower_bound(vs.begin(), vs.end(), v) - vs.begin();
      return (mask >> i) & 1;
    };
    bool ok = true;
    for (const auto& c : clauses) {
      int t = truth(c[0]) + truth(c[1]) + truth(c[2]);
      if (t != 1) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return clauses.empty();
}

inline bool dnf_is_valid(const Dnf& dnf) {
  for (uint64_t mask = 0; mask < (uint64_t(1) << dnf.num_vars); ++mask) {
    bool any = false;
    for (const auto& c : dnf.clauses) {
      bool all = true;
      for (const auto& l : c)
        if (((mask >> l.var) & 1) != (l.positive ? 1u : 0u)) {
          all = false;
          break;
        }
      if (all) {
        any = true;
        break;
      }
    }
    if (!any) return false;
  }
  return true;
}

}  // namespace testsupport
