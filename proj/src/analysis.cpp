#include "spanex/analysis.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>

namespace spanex {

namespace {

struct VarIndex {
  std::vector<std::string> names;
  size_t id(const std::string& v) const {
    auto it = std::lower_bound(names.begin(), names.end(), v);
    if (it == names.end() || *it != v) throw Error(Errc::precondition_violated, "unknown variable " + v);
    return static_cast<size_t>(it - names.begin());
  }
};

VaAutomaton trim_dead_closes(const VaAutomaton& a) {
  std::set<std::string> dead = a.close_only_variables();
  if (dead.empty()) return a;
  VaAutomaton out = a;
  std::erase_if(out.transitions, [&](const Transition& t) {
    return t.label.kind == LabelKind::Close && dead.count(t.label.var) != 0;
  });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Satisfiability

std::optional<SatWitness> sat_va(const VaAutomaton& input, const AnalysisBudget& budget) {
  VaAutomaton a = trim_dead_closes(input);
  VarIndex vars;
  {
    auto vs = a.variables();
    vars.names.assign(vs.begin(), vs.end());
  }
  if (vars.names.size() > 64)
    throw Error(Errc::budget_exceeded, "satisfiability variable budget exceeded");

  std::vector<std::vector<const Transition*>> adj(a.num_states);
  for (const auto& t : a.transitions) adj[t.from].push_back(&t);

  struct Config {
    StateId q;
    uint64_t opened, closed;
    auto operator<=>(const Config&) const = default;
  };
  struct Step {
    Config parent;
    const Transition* via;
  };

  std::map<Config, Step> seen;
  std::deque<Config> queue;
  Config start{a.initial, 0, 0};
  seen.emplace(start, Step{start, nullptr});
  queue.push_back(start);

  std::optional<Config> accept;
  if (a.is_final(a.initial)) accept = start;

  while (!queue.empty() && !accept) {
    Config c = queue.front();
    queue.pop_front();
    for (const Transition* t : adj[c.q]) {
      Config n = c;
      n.q = t->to;
      if (t->label.kind == LabelKind::Open) {
        uint64_t bit = uint64_t(1) << vars.id(t->label.var);
        if (c.opened & bit) continue;
        n.opened |= bit;
      } else if (t->label.kind == LabelKind::Close) {
        uint64_t bit = uint64_t(1) << vars.id(t->label.var);
        if (!(c.opened & bit) || (c.closed & bit)) continue;
        n.closed |= bit;
      }
      if (seen.count(n)) continue;
      if (seen.size() > budget.max_configs)
        throw Error(Errc::budget_exceeded, "satisfiability configuration budget exceeded");
      seen.emplace(n, Step{c, t});
      if (a.is_final(n.q)) {
        accept = n;
        break;
      }
      queue.push_back(n);
    }
  }
  if (!accept) return std::nullopt;

  // Reconstruct the path; its letters form the witness document.
  std::vector<const Transition*> path;
  for (Config c = *accept; ; ) {
    const Step& s = seen.at(c);
    if (!s.via) break;
    path.push_back(s.via);
    c = s.parent;
  }
  std::reverse(path.begin(), path.end());

  std::u32string doc;
  std::map<std::string, uint32_t> open_pos;
  Mapping mu;
  for (const Transition* t : path) {
    switch (t->label.kind) {
      case LabelKind::Letter:
        doc.push_back(t->label.letter);
        break;
      case LabelKind::Open:
        open_pos[t->label.var] = static_cast<uint32_t>(doc.size()) + 1;
        break;
      case LabelKind::Close:
        mu.bind(t->label.var, Span{open_pos.at(t->label.var), static_cast<uint32_t>(doc.size()) + 1});
        break;
      case LabelKind::Eps:
        break;
    }
  }
  return SatWitness{Document(doc), mu};
}

bool sat_seq_va(const VaAutomaton& a) {
  if (!is_sequential_va(a)) throw Error(Errc::not_sequential, "automaton is not sequential");
  std::vector<bool> seen(a.num_states, false);
  std::vector<std::vector<StateId>> adj(a.num_states);
  for (const auto& t : a.transitions) adj[t.from].push_back(t.to);
  std::deque<StateId> queue{a.initial};
  seen[a.initial] = true;
  while (!queue.empty()) {
    StateId q = queue.front();
    queue.pop_front();
    if (a.is_final(q)) return true;
    for (StateId to : adj[q])
      if (!seen[to]) {
        seen[to] = true;
        queue.push_back(to);
      }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Satisfiability witness for sequential tree-like rules.

namespace {

struct WitnessBuilder {
  const ExtractionRule& rule;
  char32_t fill;
  std::u32string doc;
  Mapping mu;

  void walk(const Rgx& g) {
    switch (g->kind) {
      case RgxKind::Epsilon:
        break;
      case RgxKind::Star:
        break;  // stars are skipped
      case RgxKind::Letter:
        doc.push_back(g->letter);
        break;
      case RgxKind::Wildcard:
        doc.push_back(fill);
        break;
      case RgxKind::Disj:
        walk(g->left);  // left subtree only
        break;
      case RgxKind::Concat:
        walk(g->left);
        walk(g->right);
        break;
      case RgxKind::Capture: {
        uint32_t start = static_cast<uint32_t>(doc.size()) + 1;
        const Rgx* body = rule.constraint_for(g->var);
        if (body) walk(*body);  // unconstrained variables capture the empty span
        mu.bind(g->var, Span{start, static_cast<uint32_t>(doc.size()) + 1});
        break;
      }
    }
  }
};

}  // namespace

SatWitness tree_rule_witness(const ExtractionRule& rule, const std::set<char32_t>& alphabet) {
  RuleShape shape = classify(rule);
  if (!shape.tree_like) throw Error(Errc::not_tree_like, "rule is not tree-like");
  if (!shape.sequential) throw Error(Errc::not_sequential, "rule is not sequential");
  WitnessBuilder b{rule, alphabet.empty() ? U'a' : *alphabet.begin(), {}, {}};
  b.walk(rule.root);
  return SatWitness{Document(b.doc), b.mu};
}

// ---------------------------------------------------------------------------
// Containment, general case.
//
// Macro states hold the reachable configurations of both automata plus the
// available/open variable bookkeeping of the guessed document-mapping pair.
// A move is a letter or a set of variable operations pinned to one document
// position; within a set, either automaton may realize any order in which a
// close follows its open. The comparison runs on canonical labels (exactly
// one open and close per bound variable, groups alternating with letters);
// opens an automaton is structurally forced through but that the mapping
// does not mention are taken as phantoms, recorded per configuration so the
// corresponding run never touches that variable again.

namespace {

struct Cfg {
  StateId q;
  uint64_t phantoms;  // variables this run opened without the mapping's sanction
  auto operator<=>(const Cfg&) const = default;
};

using CfgSet = std::set<Cfg>;
using OpSet = std::set<std::pair<LabelKind, std::string>>;

struct Side {
  std::vector<std::vector<const Transition*>> adj;
  std::set<StateId> finals;
  const VarIndex* vars;

  Side(const VaAutomaton& a, const VarIndex& vi) : adj(a.num_states), finals(a.finals), vars(&vi) {
    for (const auto& t : a.transitions) adj[t.from].push_back(&t);
  }

  // Epsilon closure extended with phantom opens: passing an open(x) edge
  // without recording an operation commits the run to never close x. Only
  // variables the label has not opened yet can be phantoms.
  CfgSet closure(CfgSet s, uint64_t avail_mask) const {
    std::deque<Cfg> queue(s.begin(), s.end());
    while (!queue.empty()) {
      Cfg c = queue.front();
      queue.pop_front();
      for (const Transition* t : adj[c.q]) {
        Cfg n = c;
        n.q = t->to;
        if (t->label.kind == LabelKind::Eps) {
          // plain move
        } else if (t->label.kind == LabelKind::Open) {
          uint64_t bit = uint64_t(1) << vars->id(t->label.var);
          if (!(avail_mask & bit) || (c.phantoms & bit)) continue;
          n.phantoms |= bit;
        } else {
          continue;
        }
        if (s.insert(n).second) queue.push_back(n);
      }
    }
    return s;
  }

  CfgSet letter_step(const CfgSet& s, char32_t c, uint64_t avail_mask) const {
    CfgSet out;
    for (const Cfg& cfg : s)
      for (const Transition* t : adj[cfg.q])
        if (t->label.kind == LabelKind::Letter && t->label.letter == c)
          out.insert({t->to, cfg.phantoms});
    return closure(std::move(out), avail_mask);
  }

  bool any_final(const CfgSet& s) const {
    for (const Cfg& c : s)
      if (finals.count(c.q)) return true;
    return false;
  }

  // Configurations reachable by performing exactly `ops`, epsilon and
  // phantom moves free. Closes are admitted for variables opened in this
  // group or already open in the label, never for phantoms of the run.
  CfgSet group_step(const CfgSet& from, const std::vector<std::pair<LabelKind, std::string>>& ops,
                    uint64_t avail_mask, uint64_t open_mask, size_t budget_limit) const {
    struct Node {
      Cfg c;
      uint32_t done;
      auto operator<=>(const Node&) const = default;
    };
    // Variables opened by this group are no longer available for phantoms.
    uint64_t avail_after = avail_mask;
    for (const auto& [kind, var] : ops)
      if (kind == LabelKind::Open) avail_after &= ~(uint64_t(1) << vars->id(var));

    std::set<Node> seen;
    std::deque<Node> queue;
    for (const Cfg& c : from) {
      Node n{c, 0};
      if (seen.insert(n).second) queue.push_back(n);
    }
    uint32_t full = (uint32_t(1) << ops.size()) - 1;
    CfgSet out;
    while (!queue.empty()) {
      Node n = queue.front();
      queue.pop_front();
      if (n.done == full) out.insert(n.c);
      if (seen.size() > budget_limit)
        throw Error(Errc::budget_exceeded, "containment group search budget exceeded");
      for (const Transition* t : adj[n.c.q]) {
        Node next = n;
        next.c.q = t->to;
        if (t->label.kind == LabelKind::Letter) continue;
        if (t->label.kind == LabelKind::Eps) {
          if (seen.insert(next).second) queue.push_back(next);
          continue;
        }
        uint64_t bit = uint64_t(1) << vars->id(t->label.var);
        auto it = std::find(ops.begin(), ops.end(), std::make_pair(t->label.kind, t->label.var));
        if (it == ops.end()) {
          // Not part of the group: only a phantom open can slip through.
          if (t->label.kind == LabelKind::Open && (avail_after & bit) && !(n.c.phantoms & bit)) {
            next.c.phantoms |= bit;
            if (seen.insert(next).second) queue.push_back(next);
          }
          continue;
        }
        uint32_t op_bit = uint32_t(1) << (it - ops.begin());
        if (n.done & op_bit) continue;
        if (n.c.phantoms & bit) continue;  // the run already disowned this variable
        if (t->label.kind == LabelKind::Close) {
          bool open_in_label = (open_mask & bit) != 0;
          auto oit = std::find(ops.begin(), ops.end(), std::make_pair(LabelKind::Open, t->label.var));
          bool opened_here = oit != ops.end() && (n.done & (uint32_t(1) << (oit - ops.begin())));
          if (!open_in_label && !opened_here) continue;
        }
        next.done |= op_bit;
        if (seen.insert(next).second) queue.push_back(next);
      }
    }
    return out;
  }

  // Groups this side can realize from `from` at one position, with the
  // configurations reached. Restricting guesses to realizable groups keeps
  // the search tractable; other guesses empty the left side anyway.
  std::map<OpSet, CfgSet> candidate_groups(const CfgSet& from, uint64_t avail_mask,
                                           uint64_t open_mask, size_t budget_limit) const {
    struct Node {
      Cfg c;
      OpSet done;
      auto operator<=>(const Node&) const = default;
    };
    std::set<Node> seen;
    std::deque<Node> queue;
    for (const Cfg& c : from) {
      Node n{c, {}};
      if (seen.insert(n).second) queue.push_back(n);
    }
    std::map<OpSet, CfgSet> out;
    while (!queue.empty()) {
      Node n = queue.front();
      queue.pop_front();
      out[n.done].insert(n.c);
      if (seen.size() > budget_limit)
        throw Error(Errc::budget_exceeded, "containment group search budget exceeded");
      for (const Transition* t : adj[n.c.q]) {
        Node next = n;
        next.c.q = t->to;
        if (t->label.kind == LabelKind::Letter) continue;
        if (t->label.kind == LabelKind::Eps) {
          if (seen.insert(next).second) queue.push_back(next);
          continue;
        }
        uint64_t bit = uint64_t(1) << vars->id(t->label.var);
        if (t->label.kind == LabelKind::Open) {
          if (n.c.phantoms & bit) continue;
          bool fresh = (avail_mask & bit) && !n.done.count({LabelKind::Open, t->label.var});
          if (fresh) {
            Node taken = next;
            taken.done.insert({LabelKind::Open, t->label.var});
            if (seen.insert(taken).second) queue.push_back(taken);
            Node phantom = next;
            phantom.c.phantoms |= bit;
            if (seen.insert(phantom).second) queue.push_back(phantom);
          }
        } else {
          if (n.c.phantoms & bit) continue;
          if (n.done.count({LabelKind::Close, t->label.var})) continue;
          bool opened_here = n.done.count({LabelKind::Open, t->label.var}) != 0;
          if (!opened_here && !(open_mask & bit)) continue;
          next.done.insert({LabelKind::Close, t->label.var});
          if (seen.insert(next).second) queue.push_back(next);
        }
      }
    }
    return out;
  }
};

struct MacroState {
  CfgSet s1, s2;
  uint64_t avail_mask = 0, open_mask = 0;
  bool group_done = false;  // groups alternate with letters
  auto operator<=>(const MacroState&) const = default;
};

struct MacroMove {
  bool is_letter = false;
  char32_t letter = 0;
  OpSet ops;
};

}  // namespace

ContainmentResult containment_general(const VaAutomaton& in1, const VaAutomaton& in2,
                                      const AnalysisBudget& budget) {
  VaAutomaton a1 = trim_dead_closes(in1);
  VaAutomaton a2 = trim_dead_closes(in2);

  VarIndex vars;
  {
    std::set<std::string> universe = a1.variables();
    auto v2 = a2.variables();
    universe.insert(v2.begin(), v2.end());
    vars.names.assign(universe.begin(), universe.end());
    if (vars.names.size() > 64)
      throw Error(Errc::budget_exceeded, "containment variable budget exceeded");
  }
  Side n1(a1, vars), n2(a2, vars);

  std::set<char32_t> sigma = a1.letters();
  {
    auto l2 = a2.letters();
    sigma.insert(l2.begin(), l2.end());
  }

  std::map<MacroState, std::pair<MacroState, MacroMove>> seen;
  std::deque<MacroState> queue;

  MacroState start;
  start.avail_mask = vars.names.size() == 64 ? ~uint64_t(0)
                                             : (uint64_t(1) << vars.names.size()) - 1;
  start.s1 = n1.closure({{a1.initial, 0}}, start.avail_mask);
  start.s2 = n2.closure({{a2.initial, 0}}, start.avail_mask);
  seen.emplace(start, std::make_pair(start, MacroMove{}));
  queue.push_back(start);

  std::optional<MacroState> bad;
  auto is_bad = [&](const MacroState& m) {
    return m.open_mask == 0 && n1.any_final(m.s1) && !n2.any_final(m.s2);
  };
  if (is_bad(start)) bad = start;

  while (!queue.empty() && !bad) {
    MacroState m = queue.front();
    queue.pop_front();

    auto push = [&](MacroState next, MacroMove move) {
      if (next.s1.empty()) return;  // the left side can no longer accept
      if (seen.count(next)) return;
      if (seen.size() > budget.max_macro_states)
        throw Error(Errc::budget_exceeded, "containment macro-state budget exceeded");
      seen.emplace(next, std::make_pair(m, std::move(move)));
      if (is_bad(next)) bad = next;
      queue.push_back(next);
    };

    for (char32_t c : sigma) {
      MacroState next = m;
      next.s1 = n1.letter_step(m.s1, c, m.avail_mask);
      next.s2 = n2.letter_step(m.s2, c, m.avail_mask);
      next.group_done = false;
      push(std::move(next), MacroMove{true, c, {}});
      if (bad) break;
    }
    if (bad) break;
    if (m.group_done) continue;

    for (auto& [ops, s1_next] :
         n1.candidate_groups(m.s1, m.avail_mask, m.open_mask, budget.max_macro_states)) {
      if (ops.empty()) continue;
      std::vector<std::pair<LabelKind, std::string>> op_list(ops.begin(), ops.end());
      MacroState next = m;
      for (const auto& [kind, var] : ops) {
        uint64_t bit = uint64_t(1) << vars.id(var);
        if (kind == LabelKind::Open) {
          next.avail_mask &= ~bit;
          next.open_mask |= bit;
        } else {
          next.open_mask &= ~bit;
        }
      }
      next.s1 = n1.closure(s1_next, next.avail_mask);
      next.s2 = n2.group_step(m.s2, op_list, m.avail_mask, m.open_mask, budget.max_macro_states);
      next.s2 = n2.closure(std::move(next.s2), next.avail_mask);
      next.group_done = true;
      push(std::move(next), MacroMove{false, 0, ops});
      if (bad) break;
    }
  }

  if (!bad) return ContainmentResult{true, std::nullopt};

  // Materialize the counterexample along the parent chain, expanding each
  // group at its document position with opens before closes.
  std::vector<MacroMove> moves;
  for (MacroState m = *bad; ; ) {
    auto& [parent, move] = seen.at(m);
    if (parent == m) break;
    moves.push_back(move);
    m = parent;
  }
  std::reverse(moves.begin(), moves.end());
  std::u32string doc;
  std::map<std::string, uint32_t> open_pos;
  Mapping mu;
  for (const auto& mv : moves) {
    if (mv.is_letter) {
      doc.push_back(mv.letter);
      continue;
    }
    uint32_t pos = static_cast<uint32_t>(doc.size()) + 1;
    for (const auto& [kind, var] : mv.ops)
      if (kind == LabelKind::Open) open_pos[var] = pos;
    for (const auto& [kind, var] : mv.ops)
      if (kind == LabelKind::Close) mu.bind(var, Span{open_pos.at(var), pos});
  }
  return ContainmentResult{false, SatWitness{Document(doc), mu}};
}

// ---------------------------------------------------------------------------
// Containment for deterministic sequential point-disjoint automata.

ContainmentResult containment_det_seq_pd(const VaAutomaton& a1, const VaAutomaton& a2,
                                         uint32_t pd_doc_bound, const AnalysisBudget& budget) {
  if (!is_deterministic(a1) || !is_deterministic(a2))
    throw Error(Errc::precondition_violated, "both automata must be deterministic");
  if (!is_sequential_va(a1) || !is_sequential_va(a2))
    throw Error(Errc::not_sequential, "both automata must be sequential");
  if (!point_disjoint_check(a1, pd_doc_bound) || !point_disjoint_check(a2, pd_doc_bound))
    throw Error(Errc::precondition_violated,
                "point-disjointness verification failed at the document bound");

  // Deterministic successor maps.
  std::map<std::pair<StateId, Label>, StateId> d1, d2;
  for (const auto& t : a1.transitions) d1[{t.from, t.label}] = t.to;
  for (const auto& t : a2.transitions) d2[{t.from, t.label}] = t.to;

  constexpr StateId kSink = ~StateId(0);
  struct Node {
    StateId q1, q2;
    auto operator<=>(const Node&) const = default;
  };
  struct Step {
    Node parent;
    Label label;
    bool root = false;
  };
  std::map<Node, Step> seen;
  std::deque<Node> queue;
  Node start{a1.initial, a2.initial};
  seen.emplace(start, Step{start, Label::eps(), true});
  queue.push_back(start);

  std::optional<Node> bad;
  auto check = [&](const Node& n) {
    if (a1.is_final(n.q1) && (n.q2 == kSink || !a2.is_final(n.q2))) bad = n;
  };
  check(start);

  while (!queue.empty() && !bad) {
    Node n = queue.front();
    queue.pop_front();
    for (const auto& t : a1.transitions) {
      if (t.from != n.q1) continue;
      Node next{t.to, kSink};
      if (n.q2 != kSink) {
        auto it = d2.find({n.q2, t.label});
        if (it != d2.end()) next.q2 = it->second;
      }
      if (seen.count(next)) continue;
      if (seen.size() > budget.max_macro_states)
        throw Error(Errc::budget_exceeded, "containment product budget exceeded");
      seen.emplace(next, Step{n, t.label});
      check(next);
      if (bad) break;
      queue.push_back(next);
    }
  }
  if (!bad) return ContainmentResult{true, std::nullopt};

  std::vector<Label> labels;
  for (Node n = *bad; ; ) {
    const Step& s = seen.at(n);
    if (s.root) break;
    labels.push_back(s.label);
    n = s.parent;
  }
  std::reverse(labels.begin(), labels.end());
  std::u32string doc;
  std::map<std::string, uint32_t> open_pos;
  Mapping mu;
  for (const Label& l : labels) {
    switch (l.kind) {
      case LabelKind::Letter:
        doc.push_back(l.letter);
        break;
      case LabelKind::Open:
        open_pos[l.var] = static_cast<uint32_t>(doc.size()) + 1;
        break;
      case LabelKind::Close:
        mu.bind(l.var, Span{open_pos.at(l.var), static_cast<uint32_t>(doc.size()) + 1});
        break;
      case LabelKind::Eps:
        break;
    }
  }
  return ContainmentResult{false, SatWitness{Document(doc), mu}};
}

bool point_disjoint_check(const VaAutomaton& a, uint32_t doc_len_bound, const RunBudget& budget) {
  std::set<char32_t> letters = a.letters();
  std::vector<char32_t> sigma(letters.begin(), letters.end());
  std::u32string word;
  std::function<bool()> rec = [&]() -> bool {
    Document d(word);
    for (const auto& m : enumerate_runs(a, d, RunPolicy::SetDiscipline, budget))
      if (!is_point_disjoint(m)) return false;
    if (word.size() >= doc_len_bound) return true;
    for (char32_t c : sigma) {
      word.push_back(c);
      bool ok = rec();
      word.pop_back();
      if (!ok) return false;
    }
    return true;
  };
  return rec();
}

// ---------------------------------------------------------------------------
// Hardness gadgets.

namespace {

std::string conflict_var(size_t i, size_t j, size_t k, size_t l) {
  return "y_" + std::to_string(i) + "_" + std::to_string(j) + "_" + std::to_string(k) + "_" +
         std::to_string(l);
}

void validate_clauses(const std::vector<Clause3>& clauses) {
  for (const auto& c : clauses) {
    for (const auto& lit : c)
      if (lit.empty()) throw Error(Errc::malformed_clause, "empty literal in clause");
    if (c[0] == c[1] || c[0] == c[2] || c[1] == c[2])
      throw Error(Errc::malformed_clause, "clause literals must be pairwise distinct");
  }
}

// p(i,j) conflicts with p(k,l) when making both true is impossible in a
// one-in-three assignment (indices 1-based, i < k).
bool in_conflict(const std::vector<Clause3>& cs, size_t i, size_t j, size_t k, size_t l) {
  if (i >= k) return false;
  for (size_t m = 0; m < 3; ++m) {
    if (m != l - 1 && cs[i - 1][j - 1] == cs[k - 1][m]) return true;
    if (m != j - 1 && cs[i - 1][m] == cs[k - 1][l - 1]) return true;
  }
  return false;
}

}  // namespace

Rgx gadget_1in3_spanrgx(const std::vector<Clause3>& clauses) {
  validate_clauses(clauses);
  size_t n = clauses.size();
  if (n == 0) return RgxNode::epsilon();

  auto gamma_ij = [&](size_t i, size_t j) {
    std::vector<Rgx> parts;
    parts.push_back(RgxNode::capture("x_" + std::to_string(i) + "_" + std::to_string(j),
                                     RgxNode::star(RgxNode::wildcard())));
    std::set<std::string> conflicts;
    for (size_t k = 1; k <= n; ++k)
      for (size_t l = 1; l <= 3; ++l) {
        if (in_conflict(clauses, i, j, k, l)) conflicts.insert(conflict_var(i, j, k, l));
        if (in_conflict(clauses, k, l, i, j)) conflicts.insert(conflict_var(k, l, i, j));
      }
    for (const auto& v : conflicts)
      parts.push_back(RgxNode::capture(v, RgxNode::star(RgxNode::wildcard())));
    return concat_all(parts);
  };

  std::vector<Rgx> gammas;
  for (size_t i = 1; i <= n; ++i)
    gammas.push_back(disj_all({gamma_ij(i, 1), gamma_ij(i, 2), gamma_ij(i, 3)}));
  return concat_all(gammas);
}

ExtractionRule gadget_1in3_rule(const std::vector<Clause3>& clauses) {
  validate_clauses(clauses);
  size_t n = clauses.size();
  auto var = [](const std::string& name) {
    return RgxNode::capture(name, RgxNode::star(RgxNode::wildcard()));
  };
  ExtractionRule rule;
  if (n == 0) {
    rule.root = concat_all({var("T"), RgxNode::symbol(U'#'), var("F")});
    return rule;
  }
  rule.root = concat_all({var("T"), var("c1"), var("F")});
  for (size_t i = 1; i <= n; ++i) {
    const Clause3& c = clauses[i - 1];
    std::vector<Rgx> branches;
    for (size_t j = 0; j < 3; ++j) {
      std::vector<Rgx> seq{var(c[j])};
      if (i < n) {
        seq.push_back(var("c" + std::to_string(i + 1)));
      } else {
        seq.push_back(var("T"));
        seq.push_back(RgxNode::symbol(U'#'));
        seq.push_back(var("F"));
      }
      for (size_t m = 0; m < 3; ++m)
        if (m != j) seq.push_back(var(c[m]));
      branches.push_back(concat_all(seq));
    }
    rule.constraints.push_back({"c" + std::to_string(i), disj_all(branches)});
  }
  return rule;
}

VaAutomaton gadget_hamiltonian(const Digraph& g) {
  VaAutomaton a;
  size_t n = g.num_vertices;
  if (n == 0) {
    StateId q = a.add_state();
    a.initial = q;
    a.finals = {q};
    return a;
  }
  for (const auto& [u, v] : g.edges)
    if (u >= n || v >= n) throw Error(Errc::precondition_violated, "edge endpoint out of range");

  StateId q0 = a.add_state();
  StateId qf = a.add_state();
  // p(v, i): vertex v visited as the i-th stop (i is 0-based here).
  auto p = [&](size_t v, size_t i) { return static_cast<StateId>(2 + v * n + i); };
  for (size_t v = 0; v < n; ++v)
    for (size_t i = 0; i < n; ++i) a.add_state();

  auto var = [](size_t v) { return "v" + std::to_string(v); };
  for (size_t v = 0; v < n; ++v) {
    a.add(q0, Label::open(var(v)), q0);
    a.add(q0, Label::close(var(v)), p(v, 0));
    a.add(p(v, n - 1), Label::eps(), qf);
  }
  for (const auto& [u, v] : g.edges)
    for (size_t i = 0; i + 1 < n; ++i) a.add(p(u, i), Label::close(var(v)), p(v, i + 1));
  a.initial = q0;
  a.finals = {qf};
  return a;
}

std::pair<VaAutomaton, VaAutomaton> gadget_dnf_containment(const Dnf& dnf) {
  size_t n = dnf.num_vars, m = dnf.clauses.size();
  for (const auto& c : dnf.clauses) {
    std::set<size_t> vars;
    for (const auto& l : c) {
      if (l.var >= n) throw Error(Errc::malformed_clause, "literal variable out of range");
      vars.insert(l.var);
    }
    if (vars.size() != 3)
      throw Error(Errc::malformed_clause, "clause must use three distinct variables");
  }

  auto pos = [](size_t v) { return "p" + std::to_string(v); };
  auto neg = [](size_t v) { return "np" + std::to_string(v); };
  auto cl = [](size_t j) { return "c" + std::to_string(j); };
  auto lit_name = [&](const DnfLiteral& l) { return l.positive ? pos(l.var) : neg(l.var); };

  // A variable gadget: open then close across a fresh middle state.
  auto add_gadget = [](VaAutomaton& a, StateId from, const std::string& v, StateId to) {
    StateId mid = a.add_state();
    a.add(from, Label::open(v), mid);
    a.add(mid, Label::close(v), to);
  };

  VaAutomaton a1;
  {
    std::vector<StateId> chain;
    for (size_t i = 0; i <= n + m; ++i) chain.push_back(a1.add_state());
    for (size_t i = 0; i < n; ++i) {
      add_gadget(a1, chain[i], pos(i), chain[i + 1]);
      add_gadget(a1, chain[i], neg(i), chain[i + 1]);
    }
    for (size_t j = 0; j < m; ++j) add_gadget(a1, chain[n + j], cl(j), chain[n + j + 1]);
    a1.initial = chain.front();
    a1.finals = {chain.back()};
  }

  VaAutomaton a2;
  {
    StateId init = a2.add_state();
    StateId fin = a2.add_state();
    for (size_t i = 0; i < m; ++i) {
      const auto& clause = dnf.clauses[i];
      // Elements of the branch chain; parallel entries share endpoints. The
      // final states of all branches are fused into `fin` directly so the
      // automaton stays deterministic.
      std::vector<std::vector<std::string>> elems;
      elems.push_back({cl(i)});
      for (const auto& l : clause) elems.push_back({lit_name(l)});
      std::set<size_t> used;
      for (const auto& l : clause) used.insert(l.var);
      for (size_t v = 0; v < n; ++v)
        if (!used.count(v)) elems.push_back({pos(v), neg(v)});
      for (size_t j = 0; j < m; ++j)
        if (j != i) elems.push_back({cl(j)});

      StateId cur = init;
      for (size_t k = 0; k < elems.size(); ++k) {
        StateId next = k + 1 == elems.size() ? fin : a2.add_state();
        for (const auto& v : elems[k]) add_gadget(a2, cur, v, next);
        cur = next;
      }
    }
    a2.initial = init;
    a2.finals = {fin};
  }
  return {a1, a2};
}

}  // namespace spanex
