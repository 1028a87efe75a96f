#include <algorithm>
#include <deque>
#include <map>

#include "spanex/va.hpp"

namespace spanex {

// ---------------------------------------------------------------------------
// Simplifying constructors used by state elimination.

namespace {

bool is_eps(const Rgx& g) { return g->kind == RgxKind::Epsilon; }

Rgx smart_concat(const Rgx& a, const Rgx& b) {
  if (is_eps(a)) return b;
  if (is_eps(b)) return a;
  return RgxNode::concat(a, b);
}

Rgx smart_disj(const Rgx& a, const Rgx& b) {
  if (rgx_equal(a, b)) return a;
  return RgxNode::disj(a, b);
}

Rgx smart_star(const Rgx& a) {
  if (is_eps(a)) return RgxNode::epsilon();
  if (a->kind == RgxKind::Star) return a;
  return RgxNode::star(a);
}

// Drops transitions that can never fire: closes of variables with no open.
VaAutomaton trim_dead_closes(const VaAutomaton& a) {
  std::set<std::string> dead = a.close_only_variables();
  if (dead.empty()) return a;
  VaAutomaton out = a;
  std::erase_if(out.transitions, [&](const Transition& t) {
    return t.label.kind == LabelKind::Close && dead.count(t.label.var) != 0;
  });
  return out;
}

// ---------------------------------------------------------------------------
// State elimination to a var-op graph. Every edge reads a regex and then
// performs at most one variable operation; all edges into a kept interior
// state carry that state's operation.

struct GEdge {
  StateId from, to;
  Rgx regex;
  bool has_op = false;
  LabelKind op_kind = LabelKind::Open;
  std::string op_var;
};

struct OpGraph {
  StateId init, final;
  uint32_t num_states;
  std::vector<GEdge> edges;
};

OpGraph eliminate_states(const VaAutomaton& input) {
  VaAutomaton a = trim_dead_closes(input);
  uint32_t n = a.num_states;
  OpGraph g;
  g.num_states = n;
  auto fresh = [&] { return g.num_states++; };
  g.init = fresh();
  g.final = fresh();

  std::vector<GEdge> edges;
  edges.push_back({g.init, a.initial, RgxNode::epsilon(), false, LabelKind::Open, ""});
  for (StateId f : a.finals) edges.push_back({f, g.final, RgxNode::epsilon(), false, LabelKind::Open, ""});

  std::vector<bool> keep(g.num_states, false);
  keep[g.init] = keep[g.final] = true;

  for (const auto& t : a.transitions) {
    switch (t.label.kind) {
      case LabelKind::Letter:
        edges.push_back({t.from, t.to, RgxNode::symbol(t.label.letter), false, LabelKind::Open, ""});
        break;
      case LabelKind::Eps:
        edges.push_back({t.from, t.to, RgxNode::epsilon(), false, LabelKind::Open, ""});
        break;
      case LabelKind::Open:
      case LabelKind::Close: {
        // Interpose a kept state so that the operation sits on its only
        // incoming edge.
        StateId mid = fresh();
        keep.push_back(true);
        edges.push_back({t.from, mid, RgxNode::epsilon(), true, t.label.kind, t.label.var});
        edges.push_back({mid, t.to, RgxNode::epsilon(), false, LabelKind::Open, ""});
        break;
      }
    }
  }

  auto merge_parallel = [](std::vector<GEdge>& es) {
    std::vector<GEdge> out;
    for (auto& e : es) {
      bool merged = false;
      for (auto& o : out) {
        if (o.from == e.from && o.to == e.to && o.has_op == e.has_op && o.op_kind == e.op_kind &&
            o.op_var == e.op_var) {
          o.regex = smart_disj(o.regex, e.regex);
          merged = true;
          break;
        }
      }
      if (!merged) out.push_back(e);
    }
    es = std::move(out);
  };
  merge_parallel(edges);

  for (StateId s = 0; s < n; ++s) {
    // Original states all have op-free incoming edges; eliminate them.
    Rgx self = nullptr;
    std::vector<GEdge> in, out, rest;
    for (auto& e : edges) {
      if (e.from == s && e.to == s) {
        self = self ? smart_disj(self, e.regex) : e.regex;
      } else if (e.to == s) {
        in.push_back(e);
      } else if (e.from == s) {
        out.push_back(e);
      } else {
        rest.push_back(e);
      }
    }
    Rgx loop = self ? smart_star(self) : RgxNode::epsilon();
    for (const auto& ein : in)
      for (const auto& eout : out)
        rest.push_back({ein.from, eout.to, smart_concat(smart_concat(ein.regex, loop), eout.regex),
                        eout.has_op, eout.op_kind, eout.op_var});
    merge_parallel(rest);
    edges = std::move(rest);
  }

  g.edges = std::move(edges);
  return g;
}

// ---------------------------------------------------------------------------
// Path enumeration over the op graph.

struct PathSearch {
  const OpGraph& g;
  RunPolicy policy;
  const PathBudget& budget;
  std::vector<std::vector<const GEdge*>> out;
  std::vector<VaPath> result;

  PathSearch(const OpGraph& graph, RunPolicy pol, const PathBudget& b)
      : g(graph), policy(pol), budget(b), out(graph.num_states) {
    for (const auto& e : g.edges) out[e.from].push_back(&e);
  }

  struct Frame {
    std::vector<Rgx> segments{};
    std::vector<std::pair<LabelKind, std::string>> ops{};
    std::vector<std::string> open_stack{};
    std::set<std::string> opened_ever{};
  };

  void emit(const Frame& f) {
    // Variables opened but never closed contribute nothing; drop their opens
    // and fuse the surrounding segments.
    std::set<std::string> unclosed(f.open_stack.begin(), f.open_stack.end());
    VaPath p;
    p.segments.push_back(f.segments[0]);
    for (size_t i = 0; i < f.ops.size(); ++i) {
      if (f.ops[i].first == LabelKind::Open && unclosed.count(f.ops[i].second)) {
        p.segments.back() = smart_concat(p.segments.back(), f.segments[i + 1]);
      } else {
        p.ops.push_back(f.ops[i]);
        p.segments.push_back(f.segments[i + 1]);
      }
    }
    result.push_back(std::move(p));
    if (result.size() > budget.max_paths)
      throw Error(Errc::budget_exceeded, "path decomposition budget exceeded");
  }

  void dfs(StateId q, Frame& f) {
    for (const GEdge* e : out[q]) {
      if (e->to == g.final) {
        f.segments.push_back(e->regex);
        emit(f);
        f.segments.pop_back();
        continue;
      }
      if (!e->has_op) continue;  // interior edges always carry an op
      const std::string& v = e->op_var;
      size_t restore_idx = 0;
      if (e->op_kind == LabelKind::Open) {
        if (f.opened_ever.count(v)) continue;
        f.opened_ever.insert(v);
        f.open_stack.push_back(v);
      } else {
        auto it = std::find(f.open_stack.begin(), f.open_stack.end(), v);
        if (it == f.open_stack.end()) continue;
        if (policy == RunPolicy::StackDiscipline && v != f.open_stack.back()) continue;
        restore_idx = static_cast<size_t>(it - f.open_stack.begin());
        f.open_stack.erase(it);
      }
      f.segments.push_back(e->regex);
      f.ops.push_back({e->op_kind, v});
      dfs(e->to, f);
      f.ops.pop_back();
      f.segments.pop_back();
      if (e->op_kind == LabelKind::Open) {
        f.opened_ever.erase(v);
        f.open_stack.pop_back();
      } else {
        f.open_stack.insert(f.open_stack.begin() + restore_idx, v);
      }
    }
  }
};

}  // namespace

std::vector<VaPath> decompose_paths(const VaAutomaton& a, RunPolicy policy, const PathBudget& budget) {
  OpGraph g = eliminate_states(a);
  PathSearch search(g, policy, budget);
  PathSearch::Frame f;
  search.dfs(g.init, f);
  return std::move(search.result);
}

// ---------------------------------------------------------------------------

bool VaPath::stack_disciplined() const {
  std::vector<std::string> stack;
  for (const auto& [kind, var] : ops) {
    if (kind == LabelKind::Open) {
      stack.push_back(var);
    } else {
      if (stack.empty() || stack.back() != var) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

VaAutomaton path_to_va(const VaPath& p, const std::set<char32_t>& alphabet) {
  VaAutomaton a;
  VaAutomaton seg0 = compile_rgx(p.segments[0], alphabet);
  a = seg0;
  StateId tail = *a.finals.begin();
  for (size_t i = 0; i < p.ops.size(); ++i) {
    VaAutomaton seg = compile_rgx(p.segments[i + 1], alphabet);
    StateId base = a.num_states;
    for (uint32_t q = 0; q < seg.num_states; ++q) a.add_state();
    for (const auto& t : seg.transitions) a.add(t.from + base, t.label, t.to + base);
    Label op = p.ops[i].first == LabelKind::Open ? Label::open(p.ops[i].second)
                                                 : Label::close(p.ops[i].second);
    a.add(tail, op, seg.initial + base);
    tail = *seg.finals.begin() + base;
  }
  a.finals = {tail};
  return a;
}

Rgx path_to_rgx(const VaPath& p) {
  if (!p.stack_disciplined())
    throw Error(Errc::not_hierarchical, "path variable operations are not properly nested");
  std::vector<std::pair<std::string, Rgx>> stack;  // (variable, accumulated prefix)
  Rgx acc = p.segments[0];
  for (size_t i = 0; i < p.ops.size(); ++i) {
    const auto& [kind, var] = p.ops[i];
    if (kind == LabelKind::Open) {
      stack.push_back({var, acc});
      acc = RgxNode::epsilon();
    } else {
      Rgx body = acc;
      auto [v, prefix] = stack.back();
      stack.pop_back();
      acc = smart_concat(prefix, RgxNode::capture(v, body));
    }
    acc = smart_concat(acc, p.segments[i + 1]);
  }
  return acc;
}

// Unsatisfiable on every document: the concatenation binds one variable twice.
static Rgx unsat_rgx() {
  return RgxNode::concat(RgxNode::capture("_", RgxNode::epsilon()),
                         RgxNode::capture("_", RgxNode::epsilon()));
}

Rgx va_to_rgx(const VaAutomaton& a, const PathBudget& budget) {
  std::vector<VaPath> paths = decompose_paths(a, RunPolicy::SetDiscipline, budget);
  std::vector<Rgx> branches;
  for (const auto& p : paths) {
    if (!p.stack_disciplined())
      throw Error(Errc::not_hierarchical,
                  "automaton has a path whose variable operations cannot be nested");
    branches.push_back(path_to_rgx(p));
  }
  if (branches.empty()) return unsat_rgx();
  return disj_all(branches);
}

Rgx sequentialize(const Rgx& g, const std::set<char32_t>& alphabet, const PathBudget& budget) {
  std::vector<VaPath> paths = decompose_paths(compile_rgx(g, alphabet), RunPolicy::SetDiscipline, budget);
  std::vector<Rgx> branches;
  for (const auto& p : paths)
    if (p.stack_disciplined()) branches.push_back(path_to_rgx(p));
  if (branches.empty()) return unsat_rgx();
  return disj_all(branches);
}

// ---------------------------------------------------------------------------
// Algebra

VaAutomaton va_union(const VaAutomaton& a1, const VaAutomaton& a2) {
  VaAutomaton out;
  StateId init = out.add_state();
  out.initial = init;
  StateId base1 = out.num_states;
  for (uint32_t i = 0; i < a1.num_states; ++i) out.add_state();
  StateId base2 = out.num_states;
  for (uint32_t i = 0; i < a2.num_states; ++i) out.add_state();
  for (const auto& t : a1.transitions) out.add(t.from + base1, t.label, t.to + base1);
  for (const auto& t : a2.transitions) out.add(t.from + base2, t.label, t.to + base2);
  out.add(init, Label::eps(), a1.initial + base1);
  out.add(init, Label::eps(), a2.initial + base2);
  for (StateId f : a1.finals) out.finals.insert(f + base1);
  for (StateId f : a2.finals) out.finals.insert(f + base2);
  return out;
}

VaAutomaton va_project(const VaAutomaton& input, const std::set<std::string>& keep,
                       const AlgebraBudget& budget) {
  VaAutomaton a = trim_dead_closes(input);
  std::vector<std::string> dropped;
  for (const auto& v : a.variables())
    if (!keep.count(v)) dropped.push_back(v);

  // Product with a per-dropped-variable status so that erased operations
  // still obey the once-open-once-close run discipline.
  auto var_index = [&](const std::string& v) {
    return std::find(dropped.begin(), dropped.end(), v) - dropped.begin();
  };

  using Key = std::pair<StateId, std::vector<uint8_t>>;
  std::map<Key, StateId> ids;
  std::deque<Key> queue;
  VaAutomaton out;
  auto intern = [&](const Key& k) {
    auto it = ids.find(k);
    if (it != ids.end()) return it->second;
    StateId id = out.add_state();
    if (out.num_states > budget.max_states)
      throw Error(Errc::budget_exceeded, "projection state budget exceeded");
    ids.emplace(k, id);
    queue.push_back(k);
    if (a.is_final(k.first)) out.finals.insert(id);
    return id;
  };

  std::vector<std::vector<const Transition*>> adj(a.num_states);
  for (const auto& t : a.transitions) adj[t.from].push_back(&t);

  Key start{a.initial, std::vector<uint8_t>(dropped.size(), 0)};
  out.initial = intern(start);
  while (!queue.empty()) {
    Key k = queue.front();
    queue.pop_front();
    StateId from = ids.at(k);
    for (const Transition* t : adj[k.first]) {
      Label label = t->label;
      Key next{t->to, k.second};
      if ((label.kind == LabelKind::Open || label.kind == LabelKind::Close) &&
          !keep.count(label.var)) {
        size_t i = var_index(label.var);
        uint8_t st = k.second[i];
        if (label.kind == LabelKind::Open) {
          if (st != 0) continue;
          next.second[i] = 1;
        } else {
          if (st != 1) continue;
          next.second[i] = 2;
        }
        label = Label::eps();
      }
      out.add(from, label, intern(next));
    }
  }
  out.normalize();
  return out;
}

namespace {

// Per shared variable, per side: available / phantom-open / committed-open /
// sync-open / closed. Phantom opens consume the side's transition without
// emitting an operation and promise never to close.
enum : uint8_t { VA_AVAIL = 0, VA_OPEN_PHANTOM, VA_OPEN_COMMIT, VA_OPEN_SYNC, VA_CLOSED };

struct JoinKey {
  StateId q1, q2;
  std::vector<uint8_t> st;  // two entries per shared variable
  auto operator<=>(const JoinKey&) const = default;
};

}  // namespace

VaAutomaton va_join(const VaAutomaton& in1, const VaAutomaton& in2, const AlgebraBudget& budget) {
  VaAutomaton a1 = trim_dead_closes(in1), a2 = trim_dead_closes(in2);
  std::vector<std::string> shared;
  {
    auto v1 = a1.variables(), v2 = a2.variables();
    std::set_intersection(v1.begin(), v1.end(), v2.begin(), v2.end(), std::back_inserter(shared));
  }
  auto shared_index = [&](const std::string& v) -> int {
    auto it = std::lower_bound(shared.begin(), shared.end(), v);
    if (it != shared.end() && *it == v) return static_cast<int>(it - shared.begin());
    return -1;
  };

  std::vector<std::vector<const Transition*>> adj1(a1.num_states), adj2(a2.num_states);
  for (const auto& t : a1.transitions) adj1[t.from].push_back(&t);
  for (const auto& t : a2.transitions) adj2[t.from].push_back(&t);

  VaAutomaton out;
  std::map<JoinKey, StateId> ids;
  std::deque<JoinKey> queue;
  auto intern = [&](const JoinKey& k) {
    auto it = ids.find(k);
    if (it != ids.end()) return it->second;
    StateId id = out.add_state();
    if (out.num_states > budget.max_states)
      throw Error(Errc::budget_exceeded, "join state budget exceeded");
    ids.emplace(k, id);
    queue.push_back(k);
    if (a1.is_final(k.q1) && a2.is_final(k.q2)) out.finals.insert(id);
    return id;
  };

  JoinKey start{a1.initial, a2.initial, std::vector<uint8_t>(shared.size() * 2, VA_AVAIL)};
  out.initial = intern(start);
  while (!queue.empty()) {
    JoinKey k = queue.front();
    queue.pop_front();
    StateId from = ids.at(k);
    auto status = [&](int var, int side) -> uint8_t { return k.st[2 * var + side]; };

    // One side moves alone: epsilon, unshared operations, and the phantom /
    // committed flavours of shared operations.
    auto unilateral = [&](int side, const Transition* t) {
      StateId nq1 = side == 0 ? t->to : k.q1;
      StateId nq2 = side == 1 ? t->to : k.q2;
      const Label& l = t->label;
      if (l.kind == LabelKind::Eps) {
        out.add(from, Label::eps(), intern({nq1, nq2, k.st}));
        return;
      }
      if (l.kind == LabelKind::Letter) return;  // letters are synchronized
      int v = shared_index(l.var);
      if (v < 0) {
        out.add(from, l, intern({nq1, nq2, k.st}));
        return;
      }
      uint8_t mine = status(v, side), theirs = status(v, 1 - side);
      if (l.kind == LabelKind::Open) {
        if (mine != VA_AVAIL) return;
        {  // phantom: side opens, promises never to close, emits nothing
          JoinKey n{nq1, nq2, k.st};
          n.st[2 * v + side] = VA_OPEN_PHANTOM;
          out.add(from, Label::eps(), intern(n));
        }
        if (theirs == VA_AVAIL || theirs == VA_OPEN_PHANTOM) {
          // committed: this side alone will bind the variable
          JoinKey n{nq1, nq2, k.st};
          n.st[2 * v + side] = VA_OPEN_COMMIT;
          out.add(from, l, intern(n));
        }
      } else {
        if ((mine != VA_OPEN_COMMIT && mine != VA_OPEN_SYNC) || theirs == VA_CLOSED) return;
        JoinKey n{nq1, nq2, k.st};
        n.st[2 * v + side] = VA_CLOSED;
        out.add(from, l, intern(n));
      }
    };
    for (const Transition* t : adj1[k.q1]) unilateral(0, t);
    for (const Transition* t : adj2[k.q2]) unilateral(1, t);

    // Synchronized moves: letters, and joint open/close of shared variables.
    for (const Transition* t1 : adj1[k.q1]) {
      if (t1->label.kind == LabelKind::Eps) continue;
      for (const Transition* t2 : adj2[k.q2]) {
        if (t1->label != t2->label) continue;
        const Label& l = t1->label;
        if (l.kind == LabelKind::Letter) {
          out.add(from, l, intern({t1->to, t2->to, k.st}));
          continue;
        }
        int v = shared_index(l.var);
        if (v < 0) continue;
        uint8_t s1 = status(v, 0), s2 = status(v, 1);
        if (l.kind == LabelKind::Open && s1 == VA_AVAIL && s2 == VA_AVAIL) {
          JoinKey n{t1->to, t2->to, k.st};
          n.st[2 * v] = n.st[2 * v + 1] = VA_OPEN_SYNC;
          out.add(from, l, intern(n));
        } else if (l.kind == LabelKind::Close && s1 == VA_OPEN_SYNC && s2 == VA_OPEN_SYNC) {
          JoinKey n{t1->to, t2->to, k.st};
          n.st[2 * v] = n.st[2 * v + 1] = VA_CLOSED;
          out.add(from, l, intern(n));
        }
      }
    }
  }
  out.normalize();
  return out;
}

}  // namespace spanex
