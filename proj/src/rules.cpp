#include "spanex/rules.hpp"

#include <algorithm>
#include <deque>

#include "json.hpp"

namespace spanex {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Model

std::set<std::string> ExtractionRule::variables() const {
  std::set<std::string> out = root->vars();
  for (const auto& [head, body] : constraints) {
    out.insert(head);
    out.insert(body->vars().begin(), body->vars().end());
  }
  return out;
}

const Rgx* ExtractionRule::constraint_for(const std::string& var) const {
  for (const auto& [head, body] : constraints)
    if (head == var) return &body;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Parsing and printing

namespace {

std::vector<std::string> split_conjuncts(const std::string& text) {
  // Conjuncts are separated by `&&` or newlines; `#` comments run to the end
  // of the line and `\` escapes the next character.
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    size_t a = cur.find_first_not_of(" \t\r");
    if (a != std::string::npos) out.push_back(cur);
    cur.clear();
  };
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\\' && i + 1 < text.size()) {
      cur += c;
      cur += text[++i];
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      flush();
    } else if (c == '\n') {
      flush();
    } else if (c == '&' && i + 1 < text.size() && text[i + 1] == '&') {
      flush();
      ++i;
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

bool is_ident_char_ascii(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

ExtractionRule parse_rule(const std::string& text, const std::set<char32_t>& alphabet) {
  std::vector<std::string> parts = split_conjuncts(text);
  if (parts.empty()) throw Error(Errc::syntax_error, "empty rule");
  ParseOptions opts;
  opts.span_rgx_sugar = true;
  opts.alphabet = alphabet;

  ExtractionRule rule;
  std::string head = parts[0];
  size_t start = 0;
  {
    size_t a = head.find_first_not_of(" \t\r");
    if (a != std::string::npos && head.compare(a, 4, "doc:") == 0) start = a + 4;
  }
  rule.root = parse_rgx(head.substr(start), opts);
  if (!is_span_rgx(rule.root))
    throw Error(Errc::syntax_error, "rule root is not a spanRGX expression");

  for (size_t i = 1; i < parts.size(); ++i) {
    const std::string& c = parts[i];
    size_t p = c.find_first_not_of(" \t\r");
    size_t q = p;
    while (q < c.size() && is_ident_char_ascii(c[q])) ++q;
    if (q == p) throw Error(Errc::syntax_error, "rule conjunct must start with a variable: " + c);
    std::string var = c.substr(p, q - p);
    while (q < c.size() && (c[q] == ' ' || c[q] == '\t')) ++q;
    if (q >= c.size() || c[q] != '.')
      throw Error(Errc::syntax_error, "expected `.` after variable in rule conjunct: " + c);
    Rgx body = parse_rgx(c.substr(q + 1), opts);
    if (!is_span_rgx(body))
      throw Error(Errc::syntax_error, "constraint body for `" + var + "` is not a spanRGX expression");
    rule.constraints.push_back({var, body});
  }
  return rule;
}

std::string print_rule(const ExtractionRule& rule, const std::set<char32_t>& alphabet) {
  PrintOptions opts;
  opts.span_rgx_sugar = true;
  opts.alphabet = alphabet;
  std::string out = "doc: " + print_rgx(rule.root, opts);
  for (const auto& [head, body] : rule.constraints) {
    std::string b = print_rgx(body, opts);
    out += " && " + head + (b == "()" ? ".()" : ".(" + b + ")");
  }
  return out;
}

std::string rule_union_to_json(const RuleUnion& u, const std::set<char32_t>& alphabet) {
  json j = json::array();
  for (const auto& r : u.rules) j.push_back(print_rule(r, alphabet));
  return j.dump(2);
}

RuleUnion rule_union_from_json(const std::string& text, const std::set<char32_t>& alphabet) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw Error(Errc::syntax_error, "rule union must be a JSON array of rule texts");
  RuleUnion u;
  for (const auto& item : j) u.rules.push_back(parse_rule(item.get<std::string>(), alphabet));
  return u;
}

// ---------------------------------------------------------------------------
// Rule graph

RuleGraph rule_graph(const ExtractionRule& rule) {
  RuleGraph g;
  g.nodes.push_back("doc");
  std::set<std::string> vars = rule.variables();
  g.nodes.insert(g.nodes.end(), vars.begin(), vars.end());
  g.edges.resize(g.nodes.size());
  auto add_edges = [&](size_t from, const Rgx& expr) {
    for (const auto& v : expr->vars()) {
      size_t to = g.index_of(v);
      auto& es = g.edges[from];
      if (std::find(es.begin(), es.end(), to) == es.end()) es.push_back(to);
    }
  };
  add_edges(0, rule.root);
  for (const auto& [head, body] : rule.constraints) add_edges(g.index_of(head), body);
  for (auto& es : g.edges) std::sort(es.begin(), es.end());
  return g;
}

size_t RuleGraph::index_of(const std::string& var) const {
  auto it = std::lower_bound(nodes.begin() + 1, nodes.end(), var);
  if (it == nodes.end() || *it != var)
    throw Error(Errc::syntax_error, "unknown rule variable: " + var);
  return static_cast<size_t>(it - nodes.begin());
}

bool RuleGraph::is_dag() const {
  std::vector<int> mark(nodes.size(), 0);  // 0 new, 1 active, 2 done
  std::vector<std::pair<size_t, size_t>> stack;
  for (size_t s = 0; s < nodes.size(); ++s) {
    if (mark[s]) continue;
    stack.push_back({s, 0});
    mark[s] = 1;
    while (!stack.empty()) {
      auto& [n, i] = stack.back();
      if (i < edges[n].size()) {
        size_t to = edges[n][i++];
        if (mark[to] == 1) return false;
        if (mark[to] == 0) {
          mark[to] = 1;
          stack.push_back({to, 0});
        }
      } else {
        mark[n] = 2;
        stack.pop_back();
      }
    }
  }
  return true;
}

bool RuleGraph::is_tree_rooted_at_doc() const {
  std::vector<size_t> indeg(nodes.size(), 0);
  for (const auto& es : edges)
    for (size_t to : es) ++indeg[to];
  if (indeg[0] != 0) return false;
  for (size_t i = 1; i < nodes.size(); ++i)
    if (indeg[i] != 1) return false;
  // In-degree one everywhere and no edge into the root: reachability from doc
  // is then equivalent to acyclicity.
  if (!is_dag()) return false;
  std::vector<bool> seen(nodes.size(), false);
  std::deque<size_t> queue{0};
  seen[0] = true;
  size_t count = 1;
  while (!queue.empty()) {
    size_t n = queue.front();
    queue.pop_front();
    for (size_t to : edges[n])
      if (!seen[to]) {
        seen[to] = true;
        ++count;
        queue.push_back(to);
      }
  }
  return count == nodes.size();
}

bool RuleGraph::path_exists(size_t from, size_t to) const {
  std::vector<bool> seen(nodes.size(), false);
  std::deque<size_t> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    size_t n = queue.front();
    queue.pop_front();
    if (n == to) return true;
    for (size_t e : edges[n])
      if (!seen[e]) {
        seen[e] = true;
        queue.push_back(e);
      }
  }
  return false;
}

RuleShape classify(const ExtractionRule& rule) {
  RuleShape s;
  std::set<std::string> heads;
  s.simple = true;
  for (const auto& [head, _] : rule.constraints)
    if (!heads.insert(head).second) s.simple = false;

  s.functional = is_functional(rule.root);
  s.sequential = is_sequential(rule.root);
  s.span_rgx = is_span_rgx(rule.root);
  for (const auto& [_, body] : rule.constraints) {
    s.functional = s.functional && is_functional(body);
    s.sequential = s.sequential && is_sequential(body);
    s.span_rgx = s.span_rgx && is_span_rgx(body);
  }

  RuleGraph g = rule_graph(rule);
  s.dag_like = s.simple && g.is_dag();
  s.tree_like = s.simple && g.is_tree_rooted_at_doc();
  return s;
}

// ---------------------------------------------------------------------------
// Semantics

std::set<std::string> ivar(const ExtractionRule& rule, const std::vector<Mapping>& tuple) {
  if (tuple.size() != rule.constraints.size() + 1)
    throw Error(Errc::precondition_violated, "mapping tuple length must be m+1");
  std::set<std::string> out;
  for (const auto& v : tuple[0].domain()) out.insert(v);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < rule.constraints.size(); ++i) {
      if (!out.count(rule.constraints[i].first)) continue;
      for (const auto& v : tuple[i + 1].domain())
        if (out.insert(v).second) changed = true;
    }
  }
  return out;
}

MappingSet eval_rule_oracle(const ExtractionRule& rule, const Document& d,
                            const std::set<char32_t>& alphabet, const OracleBudget& budget) {
  std::vector<Mapping> roots;
  for (const auto& m : eval_rgx(rule.root, d, alphabet, budget)) roots.push_back(m);

  // Candidate mappings per constraint: members of [[x.R]], all binding x.
  std::vector<std::vector<Mapping>> cands(rule.constraints.size());
  for (size_t i = 0; i < rule.constraints.size(); ++i) {
    Rgx wrapped = RgxNode::capture(rule.constraints[i].first, rule.constraints[i].second);
    std::set<Mapping> seen;
    for (const auto& p : pair_semantics(wrapped, d, alphabet, budget)) seen.insert(p.mapping);
    cands[i].assign(seen.begin(), seen.end());
  }

  // Backtracking over the tuple with compatibility pruning: every picked
  // member must agree with the union of the earlier ones, which also makes
  // the final pairwise-compatibility condition hold. The instantiation
  // consistency check runs on the completed tuple.
  MappingSet out;
  size_t m = rule.constraints.size();
  std::vector<Mapping> tuple(m + 1);
  size_t steps = 0;
  std::function<void(size_t, const Mapping&)> rec = [&](size_t i, const Mapping& merged) {
    if (++steps > budget.max_pairs)
      throw Error(Errc::budget_exceeded, "rule oracle tuple budget exceeded");
    if (i == m + 1) {
      std::set<std::string> inst = ivar(rule, tuple);
      for (size_t k = 0; k < m; ++k) {
        bool instantiated = inst.count(rule.constraints[k].first) != 0;
        if (instantiated != !tuple[k + 1].empty()) return;
      }
      out.insert(merged);
      return;
    }
    tuple[i] = Mapping{};
    if (i > 0) rec(i + 1, merged);  // the empty pick for a constraint
    const std::vector<Mapping>& options = i == 0 ? roots : cands[i - 1];
    for (const Mapping& cand : options) {
      if (!compatible(cand, merged)) continue;
      tuple[i] = cand;
      rec(i + 1, merge(cand, merged));
    }
    tuple[i] = Mapping{};
  };
  rec(0, Mapping{});
  return out;
}

MappingSet eval_rule_oracle(const ExtractionRule& rule, const Document& d, const OracleBudget& budget) {
  return eval_rule_oracle(rule, d, d.alphabet(), budget);
}

// ---------------------------------------------------------------------------
// Sequential tree-like evaluation: memoized interval recursion.

namespace {

class TreeEval {
 public:
  TreeEval(const ExtractionRule& rule, const Document& d, const ExtendedMapping& constraint,
           const std::set<char32_t>& alphabet)
      : rule_(rule), d_(d), alphabet_(alphabet), graph_(rule_graph(rule)) {
    for (const auto& [v, s] : constraint.entries()) {
      if (s)
        bound_.bind(v, *s);
      else
        bottoms_.insert(v);
    }
  }

  bool run() {
    const Mapping& mu = bound_;
    // Fast rejections from the tree-like evaluation procedure.
    if (!is_hierarchical(mu)) return false;
    for (const auto& [v, s] : mu.bindings()) {
      if (!d_.valid(s)) throw Error(Errc::invalid_span, "constraint span out of range");
      if (!rule_.variables().count(v)) return false;
      size_t n = graph_.index_of(v);
      if (!graph_.path_exists(0, n)) return false;
      for (const auto& [w, t] : mu.bindings()) {
        if (v >= w || s != t || s.empty()) continue;
        size_t nw = graph_.index_of(w);
        if (!graph_.path_exists(n, nw) && !graph_.path_exists(nw, n)) return false;
      }
    }
    // need(x): x's subtree mentions a bound variable.
    for (const auto& [v, _] : mu.bindings()) {
      size_t n = graph_.index_of(v);
      for (size_t i = 0; i < graph_.nodes.size(); ++i)
        if (graph_.path_exists(i, n)) need_.insert(graph_.nodes[i]);
    }
    Outcomes top = match(rule_.root, 1, d_.length() + 1, owner_children(rule_.root));
    return top.count(full_mask(owner_children(rule_.root))) != 0;
  }

 private:
  using Outcomes = std::set<uint32_t>;

  // Needed children of an expression owner: variables occurring in it whose
  // subtree carries a bound variable.
  std::vector<std::string> owner_children(const Rgx& expr) const {
    std::vector<std::string> out;
    for (const auto& v : expr->vars())
      if (need_.count(v)) out.push_back(v);
    return out;
  }

  static uint32_t full_mask(const std::vector<std::string>& needed) {
    return needed.size() >= 32 ? ~uint32_t(0) : (uint32_t(1) << needed.size()) - 1;
  }

  bool check_var(const std::string& var, uint32_t i, uint32_t j) {
    auto key = std::make_tuple(var, i, j);
    auto it = var_memo_.find(key);
    if (it != var_memo_.end()) return it->second;
    const Rgx* body = rule_.constraint_for(var);
    static const Rgx any = RgxNode::star(RgxNode::wildcard());
    const Rgx& expr = body ? *body : any;
    std::vector<std::string> needed = owner_children(expr);
    // Expressions may share subtrees across constraints; the memo is scoped
    // per owner because outcome masks are owner-relative.
    size_t saved = owner_;
    owner_ = graph_.index_of(var);
    Outcomes o = match(expr, i, j, needed);
    owner_ = saved;
    bool ok = o.count(full_mask(needed)) != 0;
    var_memo_[key] = ok;
    return ok;
  }

  // Does the capture of `var` over (i, j) fit the constraint and its subtree?
  bool capture_ok(const std::string& var, uint32_t i, uint32_t j) {
    if (bottoms_.count(var)) return false;
    if (const Span* s = bound_.find(var); s && *s != Span{i, j}) return false;
    return check_var(var, i, j);
  }

  Outcomes match(const Rgx& expr, uint32_t i, uint32_t j, const std::vector<std::string>& needed) {
    auto key = std::make_tuple(owner_, expr.get(), i, j);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Outcomes out;
    switch (expr->kind) {
      case RgxKind::Epsilon:
        if (i == j) out.insert(0);
        break;
      case RgxKind::Letter:
        if (j == i + 1 && d_.at(i) == expr->letter) out.insert(0);
        break;
      case RgxKind::Wildcard:
        if (j == i + 1 && alphabet_.count(d_.at(i))) out.insert(0);
        break;
      case RgxKind::Capture: {
        if (!all_in_alphabet(i, j)) break;
        if (!capture_ok(expr->var, i, j)) break;
        uint32_t mask = 0;
        auto pos = std::find(needed.begin(), needed.end(), expr->var);
        if (pos != needed.end()) mask = uint32_t(1) << (pos - needed.begin());
        out.insert(mask);
        break;
      }
      case RgxKind::Concat:
        for (uint32_t m = i; m <= j; ++m) {
          Outcomes l = match(expr->left, i, m, needed);
          if (l.empty()) continue;
          Outcomes r = match(expr->right, m, j, needed);
          for (uint32_t a : l)
            for (uint32_t b : r) out.insert(a | b);
        }
        break;
      case RgxKind::Disj: {
        out = match(expr->left, i, j, needed);
        Outcomes r = match(expr->right, i, j, needed);
        out.insert(r.begin(), r.end());
        break;
      }
      case RgxKind::Star: {
        // Sequential rules have variable-free star bodies.
        if (match_star(expr, i, j)) out.insert(0);
        break;
      }
    }
    memo_[key] = out;
    return out;
  }

  bool match_star(const Rgx& star, uint32_t i, uint32_t j) {
    if (i == j) return true;
    auto key = std::make_tuple(star.get(), i, j);
    auto it = star_memo_.find(key);
    if (it != star_memo_.end()) return it->second;
    star_memo_[key] = false;
    static const std::vector<std::string> none;
    bool ok = false;
    for (uint32_t m = i + 1; m <= j && !ok; ++m)
      if (!match(star->left, i, m, none).empty() && match_star(star, m, j)) ok = true;
    star_memo_[key] = ok;
    return ok;
  }

  bool all_in_alphabet(uint32_t i, uint32_t j) {
    for (uint32_t p = i; p < j; ++p)
      if (!alphabet_.count(d_.at(p))) return false;
    return true;
  }

  const ExtractionRule& rule_;
  const Document& d_;
  std::set<char32_t> alphabet_;
  RuleGraph graph_;
  Mapping bound_;
  std::set<std::string> bottoms_;
  std::set<std::string> need_;
  size_t owner_ = 0;  // doc
  std::map<std::tuple<size_t, const RgxNode*, uint32_t, uint32_t>, Outcomes> memo_;
  std::map<std::tuple<const RgxNode*, uint32_t, uint32_t>, bool> star_memo_;
  std::map<std::tuple<std::string, uint32_t, uint32_t>, bool> var_memo_;
};

}  // namespace

bool eval_tree_rule(const ExtractionRule& rule, const Document& d, const ExtendedMapping& constraint,
                    const std::set<char32_t>& alphabet) {
  RuleShape shape = classify(rule);
  if (!shape.tree_like) throw Error(Errc::not_tree_like, "rule is not tree-like");
  if (!shape.sequential) throw Error(Errc::not_sequential, "rule is not sequential");
  return TreeEval(rule, d, constraint, alphabet).run();
}

void enumerate_tree_rule(const ExtractionRule& rule, const Document& d,
                         const std::set<char32_t>& alphabet, const MappingSink& sink,
                         EnumerateStats* stats) {
  RuleShape shape = classify(rule);
  if (!shape.tree_like) throw Error(Errc::not_tree_like, "rule is not tree-like");
  if (!shape.sequential) throw Error(Errc::not_sequential, "rule is not sequential");

  std::set<std::string> vs = rule.variables();
  std::vector<std::string> vars(vs.begin(), vs.end());
  std::vector<Span> spans = all_spans(d);
  size_t evals_since_output = 0;
  bool stopped = false;

  auto eval = [&](const ExtendedMapping& mu) {
    ++evals_since_output;
    if (stats) ++stats->eval_calls;
    return TreeEval(rule, d, mu, alphabet).run();
  };

  std::function<void(ExtendedMapping&, size_t)> recurse = [&](ExtendedMapping& mu, size_t idx) {
    if (stopped) return;
    if (idx == vars.size()) {
      if (stats) {
        stats->gaps.push_back(evals_since_output);
        ++stats->outputs;
      }
      evals_since_output = 0;
      if (!sink(mu.as_mapping())) stopped = true;
      return;
    }
    for (const Span& s : spans) {
      mu.set(vars[idx], s);
      if (eval(mu)) recurse(mu, idx + 1);
      if (stopped) break;
    }
    if (!stopped) {
      mu.set(vars[idx], std::nullopt);
      if (eval(mu)) recurse(mu, idx + 1);
    }
    mu.erase(vars[idx]);
  };

  ExtendedMapping mu;
  if (vars.empty()) {
    if (eval(mu)) {
      if (stats) {
        stats->gaps.push_back(evals_since_output);
        ++stats->outputs;
      }
      evals_since_output = 0;
      sink(mu.as_mapping());
    }
  } else {
    recurse(mu, 0);
  }
  if (stats) stats->gaps.push_back(evals_since_output);
}

}  // namespace spanex
