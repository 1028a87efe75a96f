#include "spanex/va.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <map>

#include "json.hpp"

namespace spanex {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Model

std::set<std::string> VaAutomaton::variables() const {
  std::set<std::string> out;
  for (const auto& t : transitions)
    if (t.label.kind == LabelKind::Open) out.insert(t.label.var);
  return out;
}

std::set<std::string> VaAutomaton::close_only_variables() const {
  std::set<std::string> opens = variables(), out;
  for (const auto& t : transitions)
    if (t.label.kind == LabelKind::Close && !opens.count(t.label.var)) out.insert(t.label.var);
  return out;
}

std::set<char32_t> VaAutomaton::letters() const {
  std::set<char32_t> out;
  for (const auto& t : transitions)
    if (t.label.kind == LabelKind::Letter) out.insert(t.label.letter);
  return out;
}

void VaAutomaton::normalize() {
  std::sort(transitions.begin(), transitions.end());
  transitions.erase(std::unique(transitions.begin(), transitions.end()), transitions.end());
}

// ---------------------------------------------------------------------------
// JSON

static json label_to_json(const Label& l) {
  switch (l.kind) {
    case LabelKind::Letter:
      return {{"kind", "letter"}, {"value", utf8_encode(l.letter)}};
    case LabelKind::Open:
      return {{"kind", "open"}, {"value", l.var}};
    case LabelKind::Close:
      return {{"kind", "close"}, {"value", l.var}};
    case LabelKind::Eps:
      return {{"kind", "eps"}};
  }
  return {};
}

std::string va_to_json(const VaAutomaton& a) {
  json j;
  json states = json::array();
  for (StateId q = 0; q < a.num_states; ++q) states.push_back(q);
  j["states"] = states;
  j["initial"] = a.initial;
  j["finals"] = std::vector<StateId>(a.finals.begin(), a.finals.end());
  json ts = json::array();
  for (const auto& t : a.transitions)
    ts.push_back({{"from", t.from}, {"label", label_to_json(t.label)}, {"to", t.to}});
  j["transitions"] = ts;
  return j.dump(2);
}

VaAutomaton va_from_json(const std::string& text, std::vector<std::string>* warnings) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::syntax_error, "invalid automaton JSON");
  VaAutomaton a;
  std::set<StateId> states;
  for (const auto& s : j.at("states")) states.insert(s.get<StateId>());
  if (states.empty()) throw Error(Errc::syntax_error, "automaton needs at least one state");
  a.num_states = *states.rbegin() + 1;
  a.initial = j.at("initial").get<StateId>();
  if (!states.count(a.initial)) throw Error(Errc::syntax_error, "initial state not in state set");
  for (const auto& f : j.at("finals")) {
    StateId q = f.get<StateId>();
    if (!states.count(q)) throw Error(Errc::syntax_error, "final state not in state set");
    a.finals.insert(q);
  }
  for (const auto& t : j.at("transitions")) {
    StateId from = t.at("from").get<StateId>();
    StateId to = t.at("to").get<StateId>();
    if (!states.count(from) || !states.count(to))
      throw Error(Errc::syntax_error, "transition endpoint not in state set");
    const auto& l = t.at("label");
    std::string kind = l.at("kind").get<std::string>();
    Label label;
    if (kind == "letter") {
      std::u32string v = utf8_decode(l.at("value").get<std::string>());
      if (v.size() != 1) throw Error(Errc::syntax_error, "letter label must hold one symbol");
      label = Label::symbol(v[0]);
    } else if (kind == "open") {
      label = Label::open(l.at("value").get<std::string>());
    } else if (kind == "close") {
      label = Label::close(l.at("value").get<std::string>());
    } else if (kind == "eps") {
      label = Label::eps();
    } else {
      throw Error(Errc::syntax_error, "unknown label kind: " + kind);
    }
    a.add(from, label, to);
  }
  if (warnings) {
    for (const auto& v : a.close_only_variables())
      warnings->push_back("variable `" + v + "` is closed but never opened; its transitions are dead");
  }
  return a;
}

VaAutomaton normalize_single_final(const VaAutomaton& a) {
  if (a.finals.size() == 1) return a;
  VaAutomaton out = a;
  StateId f = out.add_state();
  for (StateId q : a.finals) out.add(q, Label::eps(), f);
  out.finals = {f};
  return out;
}

// ---------------------------------------------------------------------------
// Thompson construction

namespace {

struct Frag {
  StateId in, out;
};

Frag build(const Rgx& g, VaAutomaton& a, const std::set<char32_t>& alphabet) {
  switch (g->kind) {
    case RgxKind::Epsilon: {
      StateId s = a.add_state(), t = a.add_state();
      a.add(s, Label::eps(), t);
      return {s, t};
    }
    case RgxKind::Letter: {
      StateId s = a.add_state(), t = a.add_state();
      a.add(s, Label::symbol(g->letter), t);
      return {s, t};
    }
    case RgxKind::Wildcard: {
      StateId s = a.add_state(), t = a.add_state();
      for (char32_t c : alphabet) a.add(s, Label::symbol(c), t);
      if (alphabet.empty()) {
        // No symbols declared: the wildcard matches nothing.
        (void)0;
      }
      return {s, t};
    }
    case RgxKind::Capture: {
      Frag body = build(g->left, a, alphabet);
      StateId s = a.add_state(), t = a.add_state();
      a.add(s, Label::open(g->var), body.in);
      a.add(body.out, Label::close(g->var), t);
      return {s, t};
    }
    case RgxKind::Concat: {
      Frag l = build(g->left, a, alphabet);
      Frag r = build(g->right, a, alphabet);
      a.add(l.out, Label::eps(), r.in);
      return {l.in, r.out};
    }
    case RgxKind::Disj: {
      Frag l = build(g->left, a, alphabet);
      Frag r = build(g->right, a, alphabet);
      StateId s = a.add_state(), t = a.add_state();
      a.add(s, Label::eps(), l.in);
      a.add(s, Label::eps(), r.in);
      a.add(l.out, Label::eps(), t);
      a.add(r.out, Label::eps(), t);
      return {s, t};
    }
    case RgxKind::Star: {
      Frag body = build(g->left, a, alphabet);
      StateId s = a.add_state(), t = a.add_state();
      a.add(s, Label::eps(), body.in);
      a.add(s, Label::eps(), t);
      a.add(body.out, Label::eps(), body.in);
      a.add(body.out, Label::eps(), t);
      return {s, t};
    }
  }
  throw Error(Errc::syntax_error, "unreachable RGX kind");
}

}  // namespace

VaAutomaton compile_rgx(const Rgx& g, const std::set<char32_t>& alphabet) {
  VaAutomaton a;
  Frag f = build(g, a, alphabet);
  a.initial = f.in;
  a.finals = {f.out};
  return a;
}

// ---------------------------------------------------------------------------
// Run enumeration

namespace {

// A run configuration. Two runs reaching the same configuration have the
// same continuations, so the search dedupes on it.
struct RunState {
  StateId q;
  uint32_t pos;
  std::vector<std::string> open_stack;
  std::set<std::string> opened_ever;
  Mapping closed;
  std::map<std::string, uint32_t> open_pos;
  auto operator<=>(const RunState&) const = default;
};

struct Adjacency {
  std::vector<std::vector<const Transition*>> out;
  explicit Adjacency(const VaAutomaton& a) : out(a.num_states) {
    for (const auto& t : a.transitions) out[t.from].push_back(&t);
  }
};

}  // namespace

MappingSet enumerate_runs(const VaAutomaton& a, const Document& d, RunPolicy policy,
                          const RunBudget& budget) {
  Adjacency adj(a);
  MappingSet out;
  std::set<RunState> seen;
  std::deque<const RunState*> queue;
  auto push = [&](RunState&& st) {
    auto [it, fresh] = seen.insert(std::move(st));
    if (!fresh) return;
    if (seen.size() > budget.max_configs)
      throw Error(Errc::budget_exceeded, "run search budget exceeded");
    queue.push_back(&*it);
  };
  push(RunState{a.initial, 1, {}, {}, {}, {}});

  while (!queue.empty()) {
    const RunState& st = *queue.front();
    queue.pop_front();
    if (st.pos == d.length() + 1 && a.is_final(st.q)) out.insert(st.closed);
    for (const Transition* t : adj.out[st.q]) {
      switch (t->label.kind) {
        case LabelKind::Letter: {
          if (st.pos > d.length() || d.at(st.pos) != t->label.letter) break;
          RunState next = st;
          next.q = t->to;
          next.pos = st.pos + 1;
          push(std::move(next));
          break;
        }
        case LabelKind::Eps: {
          RunState next = st;
          next.q = t->to;
          push(std::move(next));
          break;
        }
        case LabelKind::Open: {
          if (st.opened_ever.count(t->label.var)) break;
          RunState next = st;
          next.q = t->to;
          next.opened_ever.insert(t->label.var);
          next.open_stack.push_back(t->label.var);
          next.open_pos[t->label.var] = st.pos;
          push(std::move(next));
          break;
        }
        case LabelKind::Close: {
          const std::string& v = t->label.var;
          auto it = std::find(st.open_stack.begin(), st.open_stack.end(), v);
          if (it == st.open_stack.end()) break;
          if (policy == RunPolicy::StackDiscipline && v != st.open_stack.back()) break;
          RunState next = st;
          next.q = t->to;
          next.open_stack.erase(next.open_stack.begin() + (it - st.open_stack.begin()));
          next.closed.bind(v, Span{st.open_pos.at(v), st.pos});
          push(std::move(next));
          break;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sequentiality

bool is_sequential_va(const VaAutomaton& a) {
  Adjacency adj(a);
  std::set<std::string> all_vars = a.variables();
  for (const auto& v : a.close_only_variables()) all_vars.insert(v);

  // Per-variable status reachability: available(0) / open(1) / closed(2).
  for (const auto& x : all_vars) {
    std::vector<std::array<bool, 3>> seen(a.num_states, {false, false, false});
    std::deque<std::pair<StateId, int>> queue{{a.initial, 0}};
    seen[a.initial][0] = true;
    while (!queue.empty()) {
      auto [q, st] = queue.front();
      queue.pop_front();
      for (const Transition* t : adj.out[q]) {
        int next = st;
        if (t->label.kind == LabelKind::Open && t->label.var == x) {
          if (st != 0) return false;  // double open or reopen after close
          next = 1;
        } else if (t->label.kind == LabelKind::Close && t->label.var == x) {
          if (st != 1) return false;  // close before open, or double close
          next = 2;
        }
        if (!seen[t->to][next]) {
          seen[t->to][next] = true;
          queue.push_back({t->to, next});
        }
      }
    }
  }

  // Open-count reachability: a final state reachable with a nonzero count of
  // currently-open variables witnesses an open-without-close path.
  size_t max_open = all_vars.size();
  std::vector<std::vector<bool>> seen(a.num_states, std::vector<bool>(max_open + 1, false));
  std::deque<std::pair<StateId, size_t>> queue{{a.initial, 0}};
  seen[a.initial][0] = true;
  while (!queue.empty()) {
    auto [q, o] = queue.front();
    queue.pop_front();
    if (o != 0 && a.is_final(q)) return false;
    for (const Transition* t : adj.out[q]) {
      size_t next = o;
      if (t->label.kind == LabelKind::Open) {
        if (o == max_open) continue;  // per-variable pass already rejects
        next = o + 1;
      } else if (t->label.kind == LabelKind::Close) {
        if (o == 0) continue;
        next = o - 1;
      }
      if (!seen[t->to][next]) {
        seen[t->to][next] = true;
        queue.push_back({t->to, next});
      }
    }
  }
  return true;
}

bool is_deterministic(const VaAutomaton& a) {
  std::set<std::pair<StateId, Label>> seen;
  for (const auto& t : a.transitions) {
    if (t.label.kind == LabelKind::Eps) return false;
    if (!seen.insert({t.from, t.label}).second) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Determinization (subset construction over letter and variable-op labels)

VaAutomaton determinize(const VaAutomaton& a, const AlgebraBudget& budget) {
  Adjacency adj(a);
  auto closure = [&](std::set<StateId> s) {
    std::deque<StateId> queue(s.begin(), s.end());
    while (!queue.empty()) {
      StateId q = queue.front();
      queue.pop_front();
      for (const Transition* t : adj.out[q])
        if (t->label.kind == LabelKind::Eps && s.insert(t->to).second) queue.push_back(t->to);
    }
    return s;
  };

  VaAutomaton out;
  std::map<std::set<StateId>, StateId> ids;
  std::deque<std::set<StateId>> queue;
  auto intern = [&](const std::set<StateId>& s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    StateId id = out.add_state();
    if (out.num_states > budget.max_states)
      throw Error(Errc::budget_exceeded, "determinization state budget exceeded");
    ids.emplace(s, id);
    queue.push_back(s);
    for (StateId q : s)
      if (a.is_final(q)) {
        out.finals.insert(id);
        break;
      }
    return id;
  };

  out.initial = intern(closure({a.initial}));
  while (!queue.empty()) {
    std::set<StateId> s = queue.front();
    queue.pop_front();
    StateId sid = ids.at(s);
    std::map<Label, std::set<StateId>> step;
    for (StateId q : s)
      for (const Transition* t : adj.out[q])
        if (t->label.kind != LabelKind::Eps) step[t->label].insert(t->to);
    for (auto& [label, targets] : step) out.add(sid, label, intern(closure(targets)));
  }
  out.normalize();
  return out;
}

}  // namespace spanex
