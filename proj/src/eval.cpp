#include "spanex/eval.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_set>

namespace spanex {

namespace {

struct OpAt {
  LabelKind kind;
  std::string var;
  bool operator==(const OpAt&) const = default;
};

// Positioned operation groups induced by the bound constraint variables:
// open(x) joins the group at span start, close(x) the group at span end.
std::map<uint32_t, std::vector<OpAt>> make_groups(const Mapping& bound) {
  std::map<uint32_t, std::vector<OpAt>> groups;
  for (const auto& [v, s] : bound.bindings()) {
    groups[s.start].push_back({LabelKind::Open, v});
    groups[s.end].push_back({LabelKind::Close, v});
  }
  return groups;
}

struct Prepared {
  const VaAutomaton* a;
  const Document* d;
  Mapping bound;                          // constrained to spans
  std::set<std::string> bottoms;          // constrained to stay unbound
  std::map<uint32_t, std::vector<OpAt>> groups;
  std::vector<std::vector<const Transition*>> adj;
  bool infeasible = false;                // constraint binds a foreign variable
};

Prepared prepare(const EvalInstance& inst) {
  Prepared p;
  p.a = inst.target;
  p.d = inst.document;
  std::set<std::string> avars = inst.target->variables();
  for (const auto& [v, s] : inst.constraint.entries()) {
    if (s) {
      if (!inst.document->valid(*s))
        throw Error(Errc::invalid_span, "constraint span out of range for variable " + v);
      if (!avars.count(v)) {
        p.infeasible = true;  // no mapping of the target can bind v
      } else {
        p.bound.bind(v, *s);
      }
    } else if (avars.count(v)) {
      p.bottoms.insert(v);
    }
  }
  p.groups = make_groups(p.bound);
  p.adj.resize(inst.target->num_states);
  for (const auto& t : inst.target->transitions) p.adj[t.from].push_back(&t);
  return p;
}

// ---------------------------------------------------------------------------
// Sequential decision procedure.

class SeqEval {
 public:
  explicit SeqEval(const Prepared& p) : p_(p) {}

  bool run() {
    const Document& d = *p_.d;
    std::set<StateId> states = closure({p_.a->initial});
    for (uint32_t pos = 1; pos <= d.length() + 1; ++pos) {
      auto git = p_.groups.find(pos);
      if (git != p_.groups.end()) states = group_step(states, git->second);
      if (pos <= d.length()) states = closure(letter_step(states, d.at(pos)));
      if (states.empty()) return false;
    }
    for (StateId q : states)
      if (p_.a->is_final(q)) return true;
    return false;
  }

 private:
  // Epsilon-like moves: real epsilons plus operations of unconstrained
  // variables, which a sequential automaton lets us erase.
  bool eps_like(const Label& l) const {
    if (l.kind == LabelKind::Eps) return true;
    if (l.kind != LabelKind::Open && l.kind != LabelKind::Close) return false;
    return !p_.bound.binds(l.var) && !p_.bottoms.count(l.var);
  }

  std::set<StateId> closure(std::set<StateId> s) const {
    std::deque<StateId> queue(s.begin(), s.end());
    while (!queue.empty()) {
      StateId q = queue.front();
      queue.pop_front();
      for (const Transition* t : p_.adj[q])
        if (eps_like(t->label) && s.insert(t->to).second) queue.push_back(t->to);
    }
    return s;
  }

  std::set<StateId> letter_step(const std::set<StateId>& s, char32_t c) const {
    std::set<StateId> out;
    for (StateId q : s)
      for (const Transition* t : p_.adj[q])
        if (t->label.kind == LabelKind::Letter && t->label.letter == c) out.insert(t->to);
    return out;
  }

  // Group transition: states reachable along paths that use epsilon-like
  // moves freely and each group operation exactly once. Sequentiality lets a
  // counter stand in for the set of used operations.
  std::set<StateId> group_step(const std::set<StateId>& s, const std::vector<OpAt>& group) const {
    size_t want = group.size();
    std::vector<std::vector<bool>> seen(p_.a->num_states, std::vector<bool>(want + 1, false));
    std::deque<std::pair<StateId, size_t>> queue;
    for (StateId q : s) {
      seen[q][0] = true;
      queue.push_back({q, 0});
    }
    std::set<StateId> out;
    while (!queue.empty()) {
      auto [q, c] = queue.front();
      queue.pop_front();
      if (c == want) out.insert(q);
      for (const Transition* t : p_.adj[q]) {
        size_t next;
        if (eps_like(t->label)) {
          next = c;
        } else if ((t->label.kind == LabelKind::Open || t->label.kind == LabelKind::Close) &&
                   c < want &&
                   std::find(group.begin(), group.end(), OpAt{t->label.kind, t->label.var}) !=
                       group.end()) {
          next = c + 1;
        } else {
          continue;
        }
        if (!seen[t->to][next]) {
          seen[t->to][next] = true;
          queue.push_back({t->to, next});
        }
      }
    }
    return out;
  }

  const Prepared& p_;
};

// ---------------------------------------------------------------------------
// Fixed-parameter decision procedure for general automata. Configurations
// carry the progress of the current position's group and a status per
// unconstrained variable.

class FptEval {
 public:
  FptEval(const Prepared& p, const EvalBudget& budget) : p_(p), budget_(budget) {
    for (const auto& v : p.a->variables())
      if (!p.bound.binds(v) && !p.bottoms.count(v)) unconstrained_.push_back(v);
  }

  bool run() {
    const Document& d = *p_.d;
    struct Config {
      StateId q;
      uint32_t pos;
      uint32_t group_mask;
      uint64_t statuses;
      auto operator<=>(const Config&) const = default;
    };
    std::set<Config> seen;
    std::deque<Config> queue;
    auto push = [&](Config c) {
      if (seen.insert(c).second) {
        if (seen.size() > budget_.max_configs)
          throw Error(Errc::budget_exceeded, "evaluation configuration budget exceeded");
        queue.push_back(c);
      }
    };

    push({p_.a->initial, 1, 0, 0});
    while (!queue.empty()) {
      Config c = queue.front();
      queue.pop_front();
      const std::vector<OpAt>* group = group_at(c.pos);
      uint32_t full = group ? (uint32_t(1) << group->size()) - 1 : 0;
      if (c.pos == d.length() + 1 && c.group_mask == full && p_.a->is_final(c.q)) return true;
      for (const Transition* t : p_.adj[c.q]) {
        const Label& l = t->label;
        switch (l.kind) {
          case LabelKind::Eps:
            push({t->to, c.pos, c.group_mask, c.statuses});
            break;
          case LabelKind::Letter:
            if (c.pos <= d.length() && d.at(c.pos) == l.letter && c.group_mask == full)
              push({t->to, c.pos + 1, 0, c.statuses});
            break;
          case LabelKind::Open:
          case LabelKind::Close: {
            if (p_.bottoms.count(l.var)) break;
            if (p_.bound.binds(l.var)) {
              if (!group) break;
              OpAt op{l.kind, l.var};
              auto it = std::find(group->begin(), group->end(), op);
              if (it == group->end()) break;
              uint32_t bit = uint32_t(1) << (it - group->begin());
              if (c.group_mask & bit) break;
              if (l.kind == LabelKind::Close) {
                // An open of the same variable pinned to this very position
                // must come first.
                auto oit = std::find(group->begin(), group->end(), OpAt{LabelKind::Open, l.var});
                if (oit != group->end() &&
                    !(c.group_mask & (uint32_t(1) << (oit - group->begin()))))
                  break;
              }
              push({t->to, c.pos, c.group_mask | bit, c.statuses});
            } else {
              size_t i = index_of(l.var);
              uint64_t st = (c.statuses >> (2 * i)) & 3;
              if (l.kind == LabelKind::Open ? st != 0 : st != 1) break;
              uint64_t next = (c.statuses & ~(uint64_t(3) << (2 * i))) |
                              (uint64_t(l.kind == LabelKind::Open ? 1 : 2) << (2 * i));
              push({t->to, c.pos, c.group_mask, next});
            }
            break;
          }
        }
      }
    }
    return false;
  }

 private:
  const std::vector<OpAt>* group_at(uint32_t pos) const {
    auto it = p_.groups.find(pos);
    return it == p_.groups.end() ? nullptr : &it->second;
  }
  size_t index_of(const std::string& v) const {
    return std::find(unconstrained_.begin(), unconstrained_.end(), v) - unconstrained_.begin();
  }

  const Prepared& p_;
  const EvalBudget& budget_;
  std::vector<std::string> unconstrained_;
};

}  // namespace

bool eval_decision_seq(const EvalInstance& inst) {
  if (!is_sequential_va(*inst.target))
    throw Error(Errc::not_sequential, "target automaton is not sequential");
  Prepared p = prepare(inst);
  if (p.infeasible) return false;
  return SeqEval(p).run();
}

bool eval_decision_fpt(const EvalInstance& inst, const EvalBudget& budget) {
  if (inst.target->variables().size() > budget.max_fpt_vars)
    throw Error(Errc::budget_exceeded,
                "variable budget for general evaluation exceeded: " +
                    std::to_string(inst.target->variables().size()) + " variables");
  Prepared p = prepare(inst);
  if (p.infeasible) return false;
  return FptEval(p, budget).run();
}

bool eval_decision(const EvalInstance& inst, const EvalBudget& budget) {
  if (is_sequential_va(*inst.target)) {
    Prepared p = prepare(inst);
    if (p.infeasible) return false;
    return SeqEval(p).run();
  }
  return eval_decision_fpt(inst, budget);
}

bool model_check(const VaAutomaton& a, const Document& d, const Mapping& m,
                 const EvalBudget& budget) {
  ExtendedMapping pinned = ExtendedMapping::from_mapping(m);
  for (const auto& v : a.variables())
    if (!m.binds(v)) pinned.set(v, std::nullopt);
  EvalInstance inst{&a, &d, pinned};
  return eval_decision(inst, budget);
}

// ---------------------------------------------------------------------------
// Enumeration (the polynomial-delay recursion over variables and spans).

namespace {

struct Enumerator {
  const VaAutomaton& a;
  const Document& d;
  const MappingSink& sink;
  const EvalBudget& budget;
  EnumerateStats* stats;
  bool sequential;
  std::vector<std::string> vars;
  std::vector<Span> spans;
  size_t evals_since_output = 0;
  bool stopped = false;

  bool eval(const ExtendedMapping& mu) {
    ++evals_since_output;
    if (stats) ++stats->eval_calls;
    EvalInstance inst{&a, &d, mu};
    if (sequential) {
      Prepared p = prepare(inst);
      if (p.infeasible) return false;
      return SeqEval(p).run();
    }
    return eval_decision_fpt(inst, budget);
  }

  void output(const ExtendedMapping& mu) {
    if (stats) {
      stats->gaps.push_back(evals_since_output);
      ++stats->outputs;
    }
    evals_since_output = 0;
    if (!sink(mu.as_mapping())) stopped = true;
  }

  void recurse(ExtendedMapping& mu, size_t idx) {
    if (stopped) return;
    if (idx == vars.size()) {
      output(mu);
      return;
    }
    const std::string& x = vars[idx];
    for (const Span& s : spans) {
      mu.set(x, s);
      if (eval(mu)) recurse(mu, idx + 1);
      if (stopped) break;
    }
    if (!stopped) {
      mu.set(x, std::nullopt);
      if (eval(mu)) recurse(mu, idx + 1);
    }
    mu.erase(x);
  }

  void run() {
    ExtendedMapping mu;
    if (vars.empty()) {
      if (eval(mu)) output(mu);
    } else {
      recurse(mu, 0);
    }
    if (stats) stats->gaps.push_back(evals_since_output);
  }
};

}  // namespace

void enumerate(const VaAutomaton& a, const Document& d, const MappingSink& sink,
               EnumerateStats* stats, const EvalBudget& budget) {
  bool seq = is_sequential_va(a);
  if (!seq && a.variables().size() > budget.max_fpt_vars)
    throw Error(Errc::budget_exceeded, "target is neither sequential nor within the variable budget");
  std::set<std::string> vs = a.variables();
  Enumerator e{a, d, sink, budget, stats, seq,
               std::vector<std::string>(vs.begin(), vs.end()), all_spans(d)};
  e.run();
}

MappingSet enumerate_all(const VaAutomaton& a, const Document& d, const EvalBudget& budget) {
  MappingSet out;
  enumerate(
      a, d,
      [&](const Mapping& m) {
        out.insert(m);
        return true;
      },
      nullptr, budget);
  return out;
}

DelayAudit delay_audit(const VaAutomaton& a, const Document& d, const EvalBudget& budget) {
  EnumerateStats stats;
  enumerate(a, d, [](const Mapping&) { return true; }, &stats, budget);
  DelayAudit audit;
  audit.var_count = a.variables().size();
  audit.doc_len = d.length();
  audit.outputs = stats.outputs;
  audit.gaps = stats.gaps;
  audit.max_gap = audit.gaps.empty() ? 0 : *std::max_element(audit.gaps.begin(), audit.gaps.end());
  uint64_t n = d.length();
  size_t spans_plus_bottom = (n + 1) * (n + 2) / 2 + 1;
  audit.stated_bound = audit.var_count * (n * n + 1);
  // Between two outputs the recursion can pay for each variable depth twice:
  // the leftover candidates of the loop instance that produced the previous
  // output, plus one fresh sweep on the way back down.
  audit.structural_bound = std::max<size_t>(1, 2 * audit.var_count * spans_plus_bottom);
  audit.satisfies_stated_bound = audit.max_gap <= audit.stated_bound;
  audit.satisfies_structural_bound = audit.max_gap <= audit.structural_bound;
  return audit;
}

}  // namespace spanex
