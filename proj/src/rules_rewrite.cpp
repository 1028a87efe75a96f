#include <algorithm>
#include <deque>
#include <functional>
#include <map>

#include "spanex/rules.hpp"
#include "spanex/va.hpp"

namespace spanex {

namespace {

Rgx wildcard_star() { return RgxNode::star(RgxNode::wildcard()); }
Rgx bare_var(const std::string& v) { return RgxNode::capture(v, wildcard_star()); }

// ---------------------------------------------------------------------------
// The emptiness-shape function: nullopt plays the empty language, absorbing
// under concatenation and neutral under disjunction. Letters cannot be empty,
// stars always can, variables stay.

std::optional<Rgx> nu(const Rgx& g) {
  switch (g->kind) {
    case RgxKind::Epsilon:
      return RgxNode::epsilon();
    case RgxKind::Letter:
    case RgxKind::Wildcard:
      return std::nullopt;
    case RgxKind::Capture:
      return g;
    case RgxKind::Star:
      return RgxNode::epsilon();
    case RgxKind::Concat: {
      auto l = nu(g->left), r = nu(g->right);
      if (!l || !r) return std::nullopt;
      if ((*l)->kind == RgxKind::Epsilon) return r;
      if ((*r)->kind == RgxKind::Epsilon) return l;
      return RgxNode::concat(*l, *r);
    }
    case RgxKind::Disj: {
      auto l = nu(g->left), r = nu(g->right);
      if (!l) return r;
      if (!r) return l;
      return RgxNode::disj(*l, *r);
    }
  }
  return std::nullopt;
}

// Renames or replaces capture atoms whose variable satisfies `pred`.
Rgx replace_captures(const Rgx& g, const std::function<Rgx(const std::string&)>& repl) {
  switch (g->kind) {
    case RgxKind::Epsilon:
    case RgxKind::Letter:
    case RgxKind::Wildcard:
      return g;
    case RgxKind::Capture: {
      Rgx r = repl(g->var);
      return r ? r : g;
    }
    case RgxKind::Concat:
      return RgxNode::concat(replace_captures(g->left, repl), replace_captures(g->right, repl));
    case RgxKind::Disj:
      return RgxNode::disj(replace_captures(g->left, repl), replace_captures(g->right, repl));
    case RgxKind::Star:
      return RgxNode::star(replace_captures(g->left, repl));
  }
  return g;
}

// Replaces the first cycle-member occurrence on each concatenation path with
// the auxiliary variable and later ones with epsilon. Cycle members all take
// the same value, and sibling occurrences force that value to be empty at a
// single point, so the collapsed form is equivalent.
Rgx substitute_members(const Rgx& g, const std::set<std::string>& members, const std::string& aux,
                       bool& seen) {
  switch (g->kind) {
    case RgxKind::Epsilon:
    case RgxKind::Letter:
    case RgxKind::Wildcard:
      return g;
    case RgxKind::Capture:
      if (members.count(g->var)) {
        if (seen) return RgxNode::epsilon();
        seen = true;
        return bare_var(aux);
      }
      return g;
    case RgxKind::Concat: {
      Rgx l = substitute_members(g->left, members, aux, seen);
      Rgx r = substitute_members(g->right, members, aux, seen);
      return RgxNode::concat(l, r);
    }
    case RgxKind::Disj: {
      bool seen_l = seen, seen_r = seen;
      Rgx l, r;
      {
        bool s = seen_l;
        l = substitute_members(g->left, members, aux, s);
        seen_l = s;
      }
      {
        bool s = seen_r;
        r = substitute_members(g->right, members, aux, s);
        seen_r = s;
      }
      seen = seen_l || seen_r;
      return RgxNode::disj(l, r);
    }
    case RgxKind::Star:
      return g;  // functional stars are variable-free
  }
  return g;
}

std::string fresh_var(std::set<std::string>& used, const std::string& base) {
  if (!used.count(base)) {
    used.insert(base);
    return base;
  }
  for (int i = 1;; ++i) {
    std::string name = base + std::to_string(i);
    if (!used.count(name)) {
      used.insert(name);
      return name;
    }
  }
}

// Strongly connected components in topological order (Tarjan).
std::vector<std::vector<size_t>> scc_topological(const std::vector<std::vector<size_t>>& edges) {
  size_t n = edges.size();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<size_t> stack;
  std::vector<std::vector<size_t>> sccs;
  int counter = 0;

  struct Frame {
    size_t node;
    size_t edge = 0;
  };
  for (size_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call{{root}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < edges[f.node].size()) {
        size_t to = edges[f.node][f.edge++];
        if (index[to] == -1) {
          index[to] = low[to] = counter++;
          stack.push_back(to);
          on_stack[to] = true;
          call.push_back({to});
        } else if (on_stack[to]) {
          low[f.node] = std::min(low[f.node], index[to]);
        }
      } else {
        if (low[f.node] == index[f.node]) {
          std::vector<size_t> comp;
          while (true) {
            size_t v = stack.back();
            stack.pop_back();
            on_stack[v] = false;
            comp.push_back(v);
            if (v == f.node) break;
          }
          sccs.push_back(comp);
        }
        size_t done = f.node;
        call.pop_back();
        if (!call.empty()) {
          size_t parent = call.back().node;
          low[parent] = std::min(low[parent], low[done]);
        }
      }
    }
  }
  // Tarjan emits components in reverse topological order.
  std::reverse(sccs.begin(), sccs.end());
  return sccs;
}

}  // namespace

ExtractionRule unsat_dag_rule() {
  ExtractionRule r;
  r.root = RgxNode::concat(bare_var("x"), bare_var("y"));
  r.constraints.push_back({"x", RgxNode::concat(bare_var("z"), RgxNode::symbol('a'))});
  r.constraints.push_back({"y", RgxNode::concat(RgxNode::symbol('a'), bare_var("z"))});
  return r;
}

// ---------------------------------------------------------------------------
// Cycle elimination

ExtractionRule eliminate_cycles(const ExtractionRule& input) {
  RuleShape shape = classify(input);
  if (!shape.simple) throw Error(Errc::not_simple, "cycle elimination requires a simple rule");
  if (!shape.functional) throw Error(Errc::not_functional, "cycle elimination requires a functional rule");

  // Every mentioned variable gets a constraint; missing ones default to the
  // unconstrained span.
  ExtractionRule rule = input;
  {
    std::set<std::string> heads;
    for (const auto& [h, _] : rule.constraints) heads.insert(h);
    for (const auto& v : rule.variables())
      if (!heads.count(v)) rule.constraints.push_back({v, wildcard_star()});
  }

  RuleGraph g = rule_graph(rule);
  if (g.is_dag()) return rule;

  // Variables unreachable from doc are never instantiated, so their cycles
  // are vacuous: they get neutralized instead of deciding satisfiability.
  std::vector<bool> live(g.nodes.size(), false);
  {
    std::deque<size_t> queue{0};
    live[0] = true;
    while (!queue.empty()) {
      size_t n = queue.front();
      queue.pop_front();
      for (size_t to : g.edges[n])
        if (!live[to]) {
          live[to] = true;
          queue.push_back(to);
        }
    }
  }

  // Colouring: black nodes cannot have empty content; red nodes are black or
  // reach a black node.
  std::vector<bool> red(g.nodes.size(), false);
  {
    std::vector<std::vector<size_t>> rev(g.nodes.size());
    for (size_t n = 0; n < g.nodes.size(); ++n)
      for (size_t to : g.edges[n]) rev[to].push_back(n);
    std::deque<size_t> queue;
    for (const auto& [head, body] : rule.constraints)
      if (!nu(body)) {
        size_t n = g.index_of(head);
        if (!red[n]) {
          red[n] = true;
          queue.push_back(n);
        }
      }
    while (!queue.empty()) {
      size_t n = queue.front();
      queue.pop_front();
      for (size_t p : rev[n])
        if (!red[p]) {
          red[p] = true;
          queue.push_back(p);
        }
    }
  }

  std::vector<std::vector<size_t>> sccs = scc_topological(g.edges);

  std::set<std::string> used = rule.variables();
  used.insert("doc");
  std::map<std::string, Rgx> bodies;
  for (const auto& [h, b] : rule.constraints) bodies[h] = b;

  ExtractionRule out;
  out.root = rule.root;
  std::set<size_t> downstream;  // SCC ids forced to type 3

  auto subst_everywhere = [&](const std::set<std::string>& members, const std::string& aux) {
    bool seen = false;
    out.root = substitute_members(out.root, members, aux, seen);
    for (auto& [h, b] : out.constraints) {
      bool s = false;
      b = substitute_members(b, members, aux, s);
    }
  };

  for (size_t ci = 0; ci < sccs.size(); ++ci) {
    std::vector<size_t> comp = sccs[ci];
    std::sort(comp.begin(), comp.end());
    bool marked = downstream.count(ci) != 0;
    bool cyclic = false;
    size_t intra_edges = 0;
    for (size_t n : comp)
      for (size_t to : g.edges[n])
        if (std::binary_search(comp.begin(), comp.end(), to)) {
          ++intra_edges;
          cyclic = true;
        }
    bool simple_cycle = cyclic && intra_edges == comp.size();

    auto mark_reachable = [&] {
      for (size_t cj = ci + 1; cj < sccs.size(); ++cj)
        for (size_t n : comp)
          for (size_t m : sccs[cj])
            if (g.path_exists(n, m)) downstream.insert(cj);
    };

    if (comp.size() == 1 && comp[0] == 0) {
      continue;  // doc node; the root is already in place
    }
    if (!cyclic && !marked) {
      const std::string& v = g.nodes[comp[0]];
      out.constraints.push_back({v, bodies.at(v)});
      continue;
    }

    if (cyclic && !live[comp[0]] && !marked) {
      // Vacuous cycle: the constraints never fire, so breaking the edges
      // keeps the semantics while making the graph acyclic.
      for (size_t n : comp) out.constraints.push_back({g.nodes[n], wildcard_star()});
      continue;
    }

    // A live self-loop makes its variable impossible to instantiate: the
    // capture of x cannot contain a binding of x, and functionality forces
    // that binding on every match. The rule is then unsatisfiable.
    for (size_t n : comp)
      if (std::find(g.edges[n].begin(), g.edges[n].end(), n) != g.edges[n].end())
        return unsat_dag_rule();

    // The component must be rewritten; red means unsatisfiable.
    for (size_t n : comp)
      if (red[n]) return unsat_dag_rule();

    std::set<std::string> members;
    for (size_t n : comp) members.insert(g.nodes[n]);

    // A live site mentioning two members as siblings forces the common value
    // to be empty (the spans would have to be disjoint and equal), which is
    // the forced-empty treatment below, not the free auxiliary. Constraints
    // unreachable from doc never fire and force nothing.
    auto members_in = [&](const Rgx& e) {
      size_t c = 0;
      for (const auto& v : e->vars()) c += members.count(v);
      return c;
    };
    bool forced_empty = members_in(out.root) >= 2;
    for (const auto& [h, b] : out.constraints) {
      // Auxiliary heads from earlier rewrites are not graph nodes; their
      // bodies only mention their own component's members.
      if (!bodies.count(h)) continue;
      if (live[g.index_of(h)] && members_in(b) >= 2) forced_empty = true;
    }

    if (simple_cycle && !marked && !forced_empty) {
      // Walk the cycle starting from the smallest variable.
      std::vector<size_t> order{comp[0]};
      while (order.size() < comp.size()) {
        size_t cur = order.back();
        for (size_t to : g.edges[cur])
          if (std::binary_search(comp.begin(), comp.end(), to) && to != order.front()) {
            order.push_back(to);
            break;
          }
      }
      std::string aux = fresh_var(used, "w");
      subst_everywhere(members, aux);
      out.constraints.push_back({aux, bare_var(g.nodes[order[0]])});
      for (size_t k = 0; k + 1 < order.size(); ++k) {
        const std::string& v = g.nodes[order[k]];
        out.constraints.push_back({v, *nu(bodies.at(v))});
      }
      const std::string& last = g.nodes[order.back()];
      Rgx psi = *nu(bodies.at(last));
      const std::string first = g.nodes[order[0]];
      psi = replace_captures(psi, [&](const std::string& v) -> Rgx {
        return v == first ? wildcard_star() : nullptr;
      });
      out.constraints.push_back({last, psi});
      mark_reachable();
      continue;
    }

    // Type 3: cycle with extra edges, or anything downstream of a rewrite.
    // Members are forced to empty content at a common point.
    if (comp.size() > 1 || cyclic) {
      std::string aux = fresh_var(used, "u");
      subst_everywhere(members, aux);
      std::vector<Rgx> seq;
      for (size_t n : comp) seq.push_back(bare_var(g.nodes[n]));
      out.constraints.push_back({aux, concat_all(seq)});
    }
    for (size_t n : comp) {
      const std::string& v = g.nodes[n];
      Rgx body = *nu(bodies.at(v));
      body = replace_captures(body, [&](const std::string& w) -> Rgx {
        return members.count(w) ? RgxNode::epsilon() : nullptr;
      });
      out.constraints.push_back({v, body});
    }
    mark_reachable();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Functional path decomposition of spanRGX bodies.

namespace {

void star_sequences(const std::vector<Rgx>& var_paths, const Rgx& filler, size_t max_paths,
                    std::vector<Rgx>& out) {
  // All orderings of variable-disjoint picks, with the variable-free filler
  // interleaved everywhere.
  struct S {
    std::vector<Rgx> picked;
    std::set<std::string> vars;
  };
  std::deque<S> queue{{{}, {}}};
  while (!queue.empty()) {
    S s = queue.front();
    queue.pop_front();
    Rgx expr = filler;
    for (const auto& p : s.picked) expr = RgxNode::concat(expr, RgxNode::concat(p, filler));
    out.push_back(expr);
    if (out.size() > max_paths) throw Error(Errc::budget_exceeded, "path decomposition budget exceeded");
    for (const auto& p : var_paths) {
      bool disjoint = true;
      for (const auto& v : p->vars())
        if (s.vars.count(v)) {
          disjoint = false;
          break;
        }
      if (!disjoint) continue;
      S next = s;
      next.picked.push_back(p);
      next.vars.insert(p->vars().begin(), p->vars().end());
      queue.push_back(next);
    }
  }
}

}  // namespace

std::vector<Rgx> span_rgx_paths(const Rgx& g, size_t max_paths) {
  switch (g->kind) {
    case RgxKind::Epsilon:
    case RgxKind::Letter:
    case RgxKind::Wildcard:
    case RgxKind::Capture:
      return {g};
    case RgxKind::Disj: {
      std::vector<Rgx> out = span_rgx_paths(g->left, max_paths);
      std::vector<Rgx> r = span_rgx_paths(g->right, max_paths);
      out.insert(out.end(), r.begin(), r.end());
      // Syntactic duplicates add nothing to the union.
      std::vector<Rgx> dedup;
      std::set<std::string> seen;
      for (const auto& p : out)
        if (seen.insert(print_rgx(p)).second) dedup.push_back(p);
      if (dedup.size() > max_paths)
        throw Error(Errc::budget_exceeded, "path decomposition budget exceeded");
      return dedup;
    }
    case RgxKind::Concat: {
      std::vector<Rgx> ls = span_rgx_paths(g->left, max_paths);
      std::vector<Rgx> rs = span_rgx_paths(g->right, max_paths);
      std::vector<Rgx> out;
      for (const auto& l : ls)
        for (const auto& r : rs) {
          bool disjoint = true;
          for (const auto& v : l->vars())
            if (r->vars().count(v)) {
              disjoint = false;
              break;
            }
          if (!disjoint) continue;
          out.push_back(RgxNode::concat(l, r));
          if (out.size() > max_paths)
            throw Error(Errc::budget_exceeded, "path decomposition budget exceeded");
        }
      return out;
    }
    case RgxKind::Star: {
      if (g->left->vars().empty()) return {g};
      std::vector<Rgx> inner = span_rgx_paths(g->left, max_paths);
      std::vector<Rgx> var_free, var_paths;
      for (const auto& p : inner)
        (p->vars().empty() ? var_free : var_paths).push_back(p);
      Rgx filler = var_free.empty() ? RgxNode::epsilon() : RgxNode::star(disj_all(var_free));
      std::vector<Rgx> out;
      star_sequences(var_paths, filler, max_paths, out);
      return out;
    }
  }
  return {g};
}

// ---------------------------------------------------------------------------
// Simple rule -> union of functional dag-like rules.

RuleUnion to_functional_union(const ExtractionRule& rule, const RewriteBudget& budget) {
  RuleShape shape = classify(rule);
  if (!shape.simple) throw Error(Errc::not_simple, "functional decomposition requires a simple rule");

  std::vector<std::vector<Rgx>> choices;
  choices.push_back(span_rgx_paths(rule.root, budget.max_paths_per_body));
  if (choices[0].empty()) return {};  // the root matches nothing at all

  // A constraint body with no functional disjuncts is unsatisfiable, so its
  // head can never be instantiated: combinations keeping the head away from
  // doc are kept with a placeholder body, the rest contribute nothing.
  std::set<std::string> dead_heads;
  for (const auto& [head, body] : rule.constraints) {
    std::vector<Rgx> paths = span_rgx_paths(body, budget.max_paths_per_body);
    if (paths.empty()) {
      dead_heads.insert(head);
      paths.push_back(wildcard_star());
    }
    choices.push_back(std::move(paths));
  }

  size_t total = 1;
  for (const auto& c : choices) {
    total *= c.size();
    if (total > budget.max_rules)
      throw Error(Errc::budget_exceeded, "functional decomposition budget exceeded");
  }

  RuleUnion out;
  std::vector<size_t> pick(choices.size(), 0);
  while (true) {
    ExtractionRule r;
    r.root = choices[0][pick[0]];
    for (size_t i = 0; i < rule.constraints.size(); ++i)
      r.constraints.push_back({rule.constraints[i].first, choices[i + 1][pick[i + 1]]});
    bool viable = true;
    if (!dead_heads.empty()) {
      RuleGraph g = rule_graph(r);
      for (const auto& h : dead_heads)
        if (g.path_exists(0, g.index_of(h))) {
          viable = false;
          break;
        }
    }
    if (viable) out.rules.push_back(eliminate_cycles(r));
    size_t k = 0;
    while (k < pick.size() && ++pick[k] == choices[k].size()) pick[k++] = 0;
    if (k == pick.size()) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Functional dag-like rule -> union of functional tree-like rules.

namespace {

// Flattens a disjunction-free body into its concatenation sequence.
void flatten(const Rgx& g, std::vector<Rgx>& out) {
  if (g->kind == RgxKind::Concat) {
    flatten(g->left, out);
    flatten(g->right, out);
  } else {
    out.push_back(g);
  }
}

struct TreeRewriter {
  std::map<std::string, Rgx> body;
  Rgx root;
  bool aborted = false;

  Rgx& body_of(const std::string& var) { return body.at(var); }

  // Rewrites an atom sequence so it can only match the empty word: letters
  // abort, stars vanish, captured variables stay and are forced empty too.
  std::vector<Rgx> force_atoms(const std::vector<Rgx>& atoms) {
    std::vector<Rgx> kept;
    for (const auto& a : atoms) {
      switch (a->kind) {
        case RgxKind::Letter:
        case RgxKind::Wildcard:
          aborted = true;
          return kept;
        case RgxKind::Star:
        case RgxKind::Epsilon:
          break;
        case RgxKind::Capture:
          kept.push_back(a);
          force_var(a->var);
          break;
        default:
          aborted = true;  // disjunctions were removed beforehand
          return kept;
      }
      if (aborted) return kept;
    }
    return kept;
  }

  void force_var(const std::string& var) {
    if (aborted || forced.count(var)) return;
    forced.insert(var);
    std::vector<Rgx> atoms;
    flatten(body.at(var), atoms);
    std::vector<Rgx> kept = force_atoms(atoms);
    if (aborted) return;
    body.at(var) = concat_all(kept);
  }

  std::set<std::string> forced;
};

// Position of a variable's capture in an atom sequence.
size_t atom_index(const std::vector<Rgx>& atoms, const std::string& var) {
  for (size_t i = 0; i < atoms.size(); ++i)
    if (atoms[i]->kind == RgxKind::Capture && atoms[i]->var == var) return i;
  throw Error(Errc::precondition_violated, "variable occurrence not found: " + var);
}

}  // namespace

RuleUnion dag_to_tree_union(const ExtractionRule& input, const RewriteBudget& budget) {
  RuleShape shape = classify(input);
  if (!shape.functional) throw Error(Errc::not_functional, "tree rewrite requires a functional rule");
  if (!shape.dag_like) throw Error(Errc::not_dag_like, "tree rewrite requires a dag-like rule");
  if (shape.tree_like) return RuleUnion{{input}};

  ExtractionRule rule = input;
  {
    std::set<std::string> heads;
    for (const auto& [h, _] : rule.constraints) heads.insert(h);
    for (const auto& v : rule.variables())
      if (!heads.count(v)) rule.constraints.push_back({v, wildcard_star()});
    // Constraints unreachable from doc never fire and would break tree shape.
    RuleGraph g = rule_graph(rule);
    std::vector<bool> live(g.nodes.size(), false);
    std::deque<size_t> queue{0};
    live[0] = true;
    while (!queue.empty()) {
      size_t n = queue.front();
      queue.pop_front();
      for (size_t to : g.edges[n])
        if (!live[to]) {
          live[to] = true;
          queue.push_back(to);
        }
    }
    std::erase_if(rule.constraints, [&](const auto& c) { return !live[g.index_of(c.first)]; });
  }

  // Disjunction-free combinations.
  std::vector<std::vector<Rgx>> choices;
  choices.push_back(span_rgx_paths(rule.root, budget.max_paths_per_body));
  for (const auto& [_, b] : rule.constraints)
    choices.push_back(span_rgx_paths(b, budget.max_paths_per_body));
  size_t total = 1;
  for (const auto& c : choices) {
    total *= c.size();
    if (total > budget.max_rules) throw Error(Errc::budget_exceeded, "tree rewrite budget exceeded");
  }

  RuleUnion out;
  std::vector<size_t> pick(choices.size(), 0);
  while (true) {
    TreeRewriter rw;
    rw.root = choices[0][pick[0]];
    for (size_t i = 0; i < rule.constraints.size(); ++i)
      rw.body[rule.constraints[i].first] = choices[i + 1][pick[i + 1]];

    // Dissolve join points top-down: the topologically first variable with
    // two parents sits below unique chains from doc.
    while (!rw.aborted) {
      ExtractionRule cur;
      cur.root = rw.root;
      for (const auto& [h, _] : rule.constraints) cur.constraints.push_back({h, rw.body.at(h)});
      RuleGraph g = rule_graph(cur);

      std::vector<std::vector<size_t>> parents(g.nodes.size());
      for (size_t n = 0; n < g.nodes.size(); ++n)
        for (size_t to : g.edges[n]) parents[to].push_back(n);

      // Topological order of this dag.
      std::vector<size_t> order;
      {
        std::vector<size_t> indeg(g.nodes.size(), 0);
        for (size_t n = 0; n < g.nodes.size(); ++n)
          for (size_t to : g.edges[n]) ++indeg[to];
        std::deque<size_t> q;
        for (size_t n = 0; n < g.nodes.size(); ++n)
          if (indeg[n] == 0) q.push_back(n);
        while (!q.empty()) {
          size_t n = q.front();
          q.pop_front();
          order.push_back(n);
          for (size_t to : g.edges[n])
            if (--indeg[to] == 0) q.push_back(to);
        }
      }

      size_t join = 0;
      bool found = false;
      for (size_t n : order)
        if (n != 0 && parents[n].size() >= 2) {
          join = n;
          found = true;
          break;
        }
      if (!found) break;

      // Unique chains doc -> p and doc -> q for two parents of the join.
      auto chain_to = [&](size_t node) {
        std::vector<size_t> chain{node};
        while (chain.back() != 0) chain.push_back(parents[chain.back()][0]);
        std::reverse(chain.begin(), chain.end());
        return chain;
      };
      size_t p = parents[join][0], q = parents[join][1];
      std::vector<size_t> pc = chain_to(p), qc = chain_to(q);
      pc.push_back(join);
      qc.push_back(join);
      size_t common = 0;
      while (common + 1 < pc.size() && common + 1 < qc.size() && pc[common + 1] == qc[common + 1])
        ++common;
      // Branches diverge below pc[common]; orient so `left` occurs first in
      // the divergence expression.
      std::vector<size_t> left(pc.begin() + common, pc.end());
      std::vector<size_t> right(qc.begin() + common, qc.end());
      auto expr_of = [&](size_t node) -> Rgx& {
        return node == 0 ? rw.root : rw.body_of(g.nodes[node]);
      };
      {
        std::vector<Rgx> atoms;
        flatten(expr_of(left[0]), atoms);
        if (atom_index(atoms, g.nodes[left[1]]) > atom_index(atoms, g.nodes[right[1]]))
          std::swap(left, right);
      }

      // Between the two branch entries everything must be empty.
      {
        std::vector<Rgx> atoms;
        flatten(expr_of(left[0]), atoms);
        size_t a = atom_index(atoms, g.nodes[left[1]]);
        size_t b = atom_index(atoms, g.nodes[right[1]]);
        std::vector<Rgx> mid(atoms.begin() + a + 1, atoms.begin() + b);
        std::vector<Rgx> kept = rw.force_atoms(mid);
        if (rw.aborted) break;
        std::vector<Rgx> rebuilt(atoms.begin(), atoms.begin() + a + 1);
        rebuilt.insert(rebuilt.end(), kept.begin(), kept.end());
        rebuilt.insert(rebuilt.end(), atoms.begin() + b, atoms.end());
        expr_of(left[0]) = concat_all(rebuilt);
      }
      // Down the left chain: everything right of the next hop is empty.
      for (size_t i = 1; i + 1 < left.size() && !rw.aborted; ++i) {
        std::vector<Rgx> atoms;
        flatten(expr_of(left[i]), atoms);
        size_t a = atom_index(atoms, g.nodes[left[i + 1]]);
        std::vector<Rgx> tail(atoms.begin() + a + 1, atoms.end());
        std::vector<Rgx> kept = rw.force_atoms(tail);
        if (rw.aborted) break;
        std::vector<Rgx> rebuilt(atoms.begin(), atoms.begin() + a + 1);
        rebuilt.insert(rebuilt.end(), kept.begin(), kept.end());
        expr_of(left[i]) = concat_all(rebuilt);
      }
      // Down the right chain: everything left of the next hop is empty.
      for (size_t i = 1; i + 1 < right.size() && !rw.aborted; ++i) {
        std::vector<Rgx> atoms;
        flatten(expr_of(right[i]), atoms);
        size_t a = atom_index(atoms, g.nodes[right[i + 1]]);
        std::vector<Rgx> head(atoms.begin(), atoms.begin() + a);
        std::vector<Rgx> kept = rw.force_atoms(head);
        if (rw.aborted) break;
        std::vector<Rgx> rebuilt = kept;
        rebuilt.insert(rebuilt.end(), atoms.begin() + a, atoms.end());
        expr_of(right[i]) = concat_all(rebuilt);
      }
      if (rw.aborted) break;

      // The join itself and everything below it are empty; then drop its
      // occurrence from the right parent, dissolving the undirected cycle.
      rw.force_var(g.nodes[join]);
      if (rw.aborted) break;
      {
        Rgx& parent_expr = expr_of(right[right.size() - 2]);
        std::vector<Rgx> atoms;
        flatten(parent_expr, atoms);
        size_t a = atom_index(atoms, g.nodes[join]);
        atoms.erase(atoms.begin() + a);
        parent_expr = concat_all(atoms);
      }
    }

    if (!rw.aborted) {
      ExtractionRule r;
      r.root = rw.root;
      for (const auto& [h, _] : rule.constraints) r.constraints.push_back({h, rw.body.at(h)});
      // Dropping occurrences can strand a subtree; prune dead constraints.
      RuleGraph g = rule_graph(r);
      std::vector<bool> live(g.nodes.size(), false);
      std::deque<size_t> queue{0};
      live[0] = true;
      while (!queue.empty()) {
        size_t n = queue.front();
        queue.pop_front();
        for (size_t to : g.edges[n])
          if (!live[to]) {
            live[to] = true;
            queue.push_back(to);
          }
      }
      std::erase_if(r.constraints, [&](const auto& c) { return !live[g.index_of(c.first)]; });
      out.rules.push_back(std::move(r));
    }

    size_t k = 0;
    while (k < pick.size() && ++pick[k] == choices[k].size()) pick[k++] = 0;
    if (k == pick.size()) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tree-like rule <-> RGX

Rgx tree_to_rgx(const ExtractionRule& rule) {
  if (!classify(rule).tree_like) throw Error(Errc::not_tree_like, "rule is not tree-like");
  // Each variable mention y becomes y{gamma_y} with its subtree nested inside.
  std::function<Rgx(const Rgx&)> rewrite = [&](const Rgx& g) -> Rgx {
    return replace_captures(g, [&](const std::string& v) -> Rgx {
      const Rgx* body = rule.constraint_for(v);
      Rgx inner = body ? rewrite(*body) : wildcard_star();
      return RgxNode::capture(v, inner);
    });
  };
  return rewrite(rule.root);
}

RuleUnion rgx_to_rule_union(const Rgx& g, const std::set<char32_t>& alphabet,
                            const RewriteBudget& budget) {
  PathBudget pb{budget.max_rules};
  std::vector<VaPath> paths = decompose_paths(compile_rgx(g, alphabet), RunPolicy::SetDiscipline, pb);
  RuleUnion out;
  for (const auto& p : paths) {
    if (!p.stack_disciplined())
      throw Error(Errc::not_hierarchical, "expression compiled to a non-nestable path");
    // Peel the path into nested scopes: the root collects top-level content,
    // each variable's scope becomes its constraint body.
    struct Scope {
      std::string var;
      std::vector<Rgx> acc;
    };
    auto append = [](Scope& s, const Rgx& g) {
      if (g->kind != RgxKind::Epsilon) s.acc.push_back(g);
    };
    std::vector<Scope> stack{{"", {}}};
    append(stack.back(), p.segments[0]);
    std::vector<std::pair<std::string, Rgx>> constraints;
    for (size_t i = 0; i < p.ops.size(); ++i) {
      const auto& [kind, var] = p.ops[i];
      if (kind == LabelKind::Open) {
        stack.push_back({var, {}});
      } else {
        Scope done = stack.back();
        stack.pop_back();
        constraints.push_back({done.var, concat_all(done.acc)});
        stack.back().acc.push_back(bare_var(done.var));
      }
      append(stack.back(), p.segments[i + 1]);
    }
    ExtractionRule r;
    r.root = concat_all(stack.back().acc);
    std::sort(constraints.begin(), constraints.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    r.constraints = std::move(constraints);
    out.rules.push_back(std::move(r));
  }
  return out;
}

}  // namespace spanex
