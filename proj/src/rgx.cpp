#include "spanex/rgx.hpp"

#include <algorithm>

namespace spanex {

// ---------------------------------------------------------------------------
// Construction

static Rgx make(RgxKind kind, char32_t letter, std::string var, Rgx left, Rgx right) {
  auto n = std::make_shared<RgxNode>();
  n->kind = kind;
  n->letter = letter;
  n->var = std::move(var);
  n->left = std::move(left);
  n->right = std::move(right);
  if (!n->var.empty()) n->vars_.insert(n->var);
  if (n->left) n->vars_.insert(n->left->vars().begin(), n->left->vars().end());
  if (n->right) n->vars_.insert(n->right->vars().begin(), n->right->vars().end());
  return n;
}

Rgx RgxNode::epsilon() { return make(RgxKind::Epsilon, 0, "", nullptr, nullptr); }
Rgx RgxNode::symbol(char32_t c) { return make(RgxKind::Letter, c, "", nullptr, nullptr); }
Rgx RgxNode::wildcard() { return make(RgxKind::Wildcard, 0, "", nullptr, nullptr); }
Rgx RgxNode::capture(std::string var, Rgx body) {
  return make(RgxKind::Capture, 0, std::move(var), std::move(body), nullptr);
}
Rgx RgxNode::concat(Rgx a, Rgx b) {
  return make(RgxKind::Concat, 0, "", std::move(a), std::move(b));
}
Rgx RgxNode::disj(Rgx a, Rgx b) { return make(RgxKind::Disj, 0, "", std::move(a), std::move(b)); }
Rgx RgxNode::star(Rgx body) { return make(RgxKind::Star, 0, "", std::move(body), nullptr); }

Rgx concat_all(const std::vector<Rgx>& parts) {
  if (parts.empty()) return RgxNode::epsilon();
  Rgx out = parts.back();
  for (size_t i = parts.size() - 1; i-- > 0;) out = RgxNode::concat(parts[i], out);
  return out;
}

Rgx disj_all(const std::vector<Rgx>& parts) {
  if (parts.empty()) throw Error(Errc::syntax_error, "empty disjunction");
  Rgx out = parts.back();
  for (size_t i = parts.size() - 1; i-- > 0;) out = RgxNode::disj(parts[i], out);
  return out;
}

bool rgx_equal(const Rgx& a, const Rgx& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->letter != b->letter || a->var != b->var) return false;
  if ((a->left != nullptr) != (b->left != nullptr)) return false;
  if ((a->right != nullptr) != (b->right != nullptr)) return false;
  if (a->left && !rgx_equal(a->left, b->left)) return false;
  if (a->right && !rgx_equal(a->right, b->right)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

bool is_ident_start(char32_t c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
bool is_ident_char(char32_t c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_space(char32_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_meta(char32_t c) {
  return c == '(' || c == ')' || c == '{' || c == '}' || c == '|' || c == '*' || c == '@' ||
         c == '\\' || c == '#';
}

class Parser {
 public:
  Parser(std::u32string text, const ParseOptions& opts) : t_(std::move(text)), opts_(opts) {}

  Rgx run() {
    Rgx g = parse_alt();
    skip_ws();
    if (pos_ < t_.size()) fail("unexpected trailing input");
    return g;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw Error(Errc::syntax_error, msg + " at position " + std::to_string(pos_ + 1));
  }

  void skip_ws() {
    while (pos_ < t_.size()) {
      if (is_space(t_[pos_])) {
        ++pos_;
      } else if (t_[pos_] == '#') {
        while (pos_ < t_.size() && t_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool at_atom_start() {
    skip_ws();
    if (pos_ >= t_.size()) return false;
    char32_t c = t_[pos_];
    return c != ')' && c != '}' && c != '|' && c != '*';
  }

  Rgx parse_alt() {
    std::vector<Rgx> branches{parse_cat()};
    while (true) {
      skip_ws();
      if (pos_ < t_.size() && t_[pos_] == '|') {
        ++pos_;
        branches.push_back(parse_cat());
      } else {
        break;
      }
    }
    return disj_all(branches);
  }

  Rgx parse_cat() {
    std::vector<Rgx> parts;
    while (at_atom_start()) parts.push_back(parse_starred());
    if (parts.empty()) fail("expected an expression");
    return concat_all(parts);
  }

  Rgx parse_starred() {
    Rgx g = parse_atom();
    while (true) {
      skip_ws();
      if (pos_ < t_.size() && t_[pos_] == '*') {
        ++pos_;
        g = RgxNode::star(g);
      } else {
        break;
      }
    }
    return g;
  }

  Rgx parse_atom() {
    skip_ws();
    if (pos_ >= t_.size()) fail("expected an expression");
    char32_t c = t_[pos_];
    if (c == '(') {
      ++pos_;
      skip_ws();
      if (pos_ < t_.size() && t_[pos_] == ')') {
        ++pos_;
        return RgxNode::epsilon();
      }
      Rgx g = parse_alt();
      skip_ws();
      if (pos_ >= t_.size() || t_[pos_] != ')') fail("missing `)`");
      ++pos_;
      return g;
    }
    if (c == '@') {
      ++pos_;
      return RgxNode::wildcard();
    }
    if (c == '\\') {
      ++pos_;
      if (pos_ >= t_.size()) fail("dangling escape");
      return RgxNode::symbol(t_[pos_++]);
    }
    if (c == '}' || c == ')' || c == '{' || c == '|' || c == '*') fail("unexpected metacharacter");
    if (is_ident_start(c)) {
      size_t end = pos_;
      while (end < t_.size() && is_ident_char(t_[end])) ++end;
      std::u32string ident = t_.substr(pos_, end - pos_);
      if (end < t_.size() && t_[end] == '{') {
        pos_ = end + 1;
        Rgx body = parse_alt();
        skip_ws();
        if (pos_ >= t_.size() || t_[pos_] != '}') fail("missing `}` in capture");
        ++pos_;
        return RgxNode::capture(utf8_encode(ident), body);
      }
      if (opts_.span_rgx_sugar &&
          !std::all_of(ident.begin(), ident.end(),
                       [&](char32_t ch) { return opts_.alphabet.count(ch) != 0; })) {
        // Bare identifier stands for ident{@*} in rule files.
        pos_ = end;
        return RgxNode::capture(utf8_encode(ident), RgxNode::star(RgxNode::wildcard()));
      }
      // Letter runs parse one symbol at a time, so a trailing star binds the
      // last letter only.
      ++pos_;
      return RgxNode::symbol(c);
    }
    ++pos_;
    return RgxNode::symbol(c);
  }

  std::u32string t_;
  ParseOptions opts_;
  size_t pos_ = 0;
};

}  // namespace

Rgx parse_rgx(const std::string& text, const ParseOptions& opts) {
  return Parser(utf8_decode(text), opts).run();
}

// ---------------------------------------------------------------------------
// Printer. Precedence: star > concat > disjunction.

namespace {

int prec(const Rgx& g) {
  switch (g->kind) {
    case RgxKind::Disj:
      return 0;
    case RgxKind::Concat:
      return 1;
    default:
      return 2;
  }
}

bool is_wildcard_star(const Rgx& g) {
  return g->kind == RgxKind::Star && g->left->kind == RgxKind::Wildcard;
}

void print_node(const Rgx& g, const PrintOptions& opts, int min_prec, std::string& out) {
  bool parens = prec(g) < min_prec;
  if (parens) out += '(';
  switch (g->kind) {
    case RgxKind::Epsilon:
      out += "()";
      break;
    case RgxKind::Letter: {
      char32_t c = g->letter;
      bool escape = is_meta(c) || is_space(c);
      // Under rule-file sugar, identifier characters outside the declared
      // alphabet would read back as variables.
      if (opts.span_rgx_sugar && is_ident_char(c) && !opts.alphabet.count(c)) escape = true;
      if (escape) out += '\\';
      out += utf8_encode(c);
      break;
    }
    case RgxKind::Wildcard:
      out += '@';
      break;
    case RgxKind::Capture:
      if (opts.span_rgx_sugar && is_wildcard_star(g->left) &&
          !std::all_of(g->var.begin(), g->var.end(),
                       [&](char c) { return opts.alphabet.count(static_cast<char32_t>(c)) != 0; })) {
        out += g->var;
      } else {
        out += g->var;
        out += '{';
        print_node(g->left, opts, 0, out);
        out += '}';
      }
      break;
    case RgxKind::Concat:
      // The parser associates to the right; a left-nested chain keeps its
      // shape only with explicit parentheses.
      print_node(g->left, opts, 2, out);
      out += ' ';
      print_node(g->right, opts, 1, out);
      break;
    case RgxKind::Disj:
      print_node(g->left, opts, 1, out);
      out += '|';
      print_node(g->right, opts, 0, out);
      break;
    case RgxKind::Star:
      // Postfix stars stack, so only concatenations and disjunctions below
      // a star need parentheses.
      print_node(g->left, opts, 2, out);
      out += '*';
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string print_rgx(const Rgx& g, const PrintOptions& opts) {
  std::string out;
  print_node(g, opts, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Table-2 oracle

namespace {

void check_budget(const Rgx& g, const Document& d, const OracleBudget& budget) {
  if (d.length() > budget.max_doc_len)
    throw Error(Errc::budget_exceeded,
                "oracle document budget exceeded: |d| = " + std::to_string(d.length()));
  if (g->vars().size() > budget.max_vars)
    throw Error(Errc::budget_exceeded,
                "oracle variable budget exceeded: " + std::to_string(g->vars().size()) + " variables");
}

// Concatenation clause: spans adjacent, domains disjoint.
PairSemantics concat_pairs(const PairSemantics& a, const PairSemantics& b, const OracleBudget& budget) {
  PairSemantics out;
  for (const auto& pa : a)
    for (const auto& pb : b) {
      if (!pa.span.concatenable(pb.span)) continue;
      bool disjoint_domains = true;
      Mapping m = pa.mapping;
      for (const auto& [v, s] : pb.mapping.bindings()) {
        if (m.find(v)) {
          disjoint_domains = false;
          break;
        }
        m.bind(v, s);
      }
      if (!disjoint_domains) continue;
      out.insert({pa.span.concat(pb.span), std::move(m)});
      if (out.size() > budget.max_pairs) throw Error(Errc::budget_exceeded, "oracle pair budget exceeded");
    }
  return out;
}

PairSemantics eval_pairs(const Rgx& g, const Document& d, const std::set<char32_t>& alphabet,
                         const OracleBudget& budget) {
  PairSemantics out;
  switch (g->kind) {
    case RgxKind::Epsilon:
      for (uint32_t i = 1; i <= d.length() + 1; ++i) out.insert({Span{i, i}, Mapping{}});
      break;
    case RgxKind::Letter:
      for (uint32_t i = 1; i <= d.length(); ++i)
        if (d.at(i) == g->letter) out.insert({Span{i, i + 1}, Mapping{}});
      break;
    case RgxKind::Wildcard:
      for (uint32_t i = 1; i <= d.length(); ++i)
        if (alphabet.count(d.at(i))) out.insert({Span{i, i + 1}, Mapping{}});
      break;
    case RgxKind::Capture: {
      PairSemantics inner = eval_pairs(g->left, d, alphabet, budget);
      for (const auto& p : inner) {
        if (p.mapping.binds(g->var)) continue;
        Mapping m = p.mapping;
        m.bind(g->var, p.span);
        out.insert({p.span, std::move(m)});
      }
      break;
    }
    case RgxKind::Concat:
      out = concat_pairs(eval_pairs(g->left, d, alphabet, budget),
                         eval_pairs(g->right, d, alphabet, budget), budget);
      break;
    case RgxKind::Disj: {
      out = eval_pairs(g->left, d, alphabet, budget);
      PairSemantics r = eval_pairs(g->right, d, alphabet, budget);
      out.insert(r.begin(), r.end());
      break;
    }
    case RgxKind::Star: {
      // Least fixpoint of pairwise concatenation over the finite pair set.
      PairSemantics base = eval_pairs(g->left, d, alphabet, budget);
      for (uint32_t i = 1; i <= d.length() + 1; ++i) out.insert({Span{i, i}, Mapping{}});
      out.insert(base.begin(), base.end());
      while (true) {
        PairSemantics next = concat_pairs(out, base, budget);
        size_t before = out.size();
        out.insert(next.begin(), next.end());
        if (out.size() == before) break;
        if (out.size() > budget.max_pairs) throw Error(Errc::budget_exceeded, "oracle pair budget exceeded");
      }
      break;
    }
  }
  return out;
}

}  // namespace

PairSemantics pair_semantics(const Rgx& g, const Document& d, const std::set<char32_t>& alphabet,
                             const OracleBudget& budget) {
  check_budget(g, d, budget);
  return eval_pairs(g, d, alphabet, budget);
}

PairSemantics pair_semantics(const Rgx& g, const Document& d, const OracleBudget& budget) {
  return pair_semantics(g, d, d.alphabet(), budget);
}

MappingSet eval_rgx(const Rgx& g, const Document& d, const std::set<char32_t>& alphabet,
                    const OracleBudget& budget) {
  MappingSet out;
  Span whole = d.whole();
  for (const auto& p : pair_semantics(g, d, alphabet, budget))
    if (p.span == whole) out.insert(p.mapping);
  return out;
}

MappingSet eval_rgx(const Rgx& g, const Document& d, const OracleBudget& budget) {
  return eval_rgx(g, d, d.alphabet(), budget);
}

// ---------------------------------------------------------------------------
// Classifiers

namespace {

// Functional wrt X forces var(g) == X, which makes the concatenation split
// unique and the check deterministic.
bool functional_wrt(const Rgx& g, const std::set<std::string>& x) {
  if (g->vars() != x) return false;
  switch (g->kind) {
    case RgxKind::Epsilon:
    case RgxKind::Letter:
    case RgxKind::Wildcard:
      return x.empty();
    case RgxKind::Disj:
      return functional_wrt(g->left, x) && functional_wrt(g->right, x);
    case RgxKind::Concat: {
      const auto& lv = g->left->vars();
      const auto& rv = g->right->vars();
      for (const auto& v : lv)
        if (rv.count(v)) return false;
      return functional_wrt(g->left, lv) && functional_wrt(g->right, rv);
    }
    case RgxKind::Star:
      return g->left->vars().empty() && x.empty();
    case RgxKind::Capture: {
      if (!x.count(g->var)) return false;
      std::set<std::string> rest = x;
      rest.erase(g->var);
      return functional_wrt(g->left, rest);
    }
  }
  return false;
}

}  // namespace

bool is_functional(const Rgx& g) { return functional_wrt(g, g->vars()); }

bool is_sequential(const Rgx& g) {
  switch (g->kind) {
    case RgxKind::Epsilon:
    case RgxKind::Letter:
    case RgxKind::Wildcard:
      return true;
    case RgxKind::Disj:
      return is_sequential(g->left) && is_sequential(g->right);
    case RgxKind::Concat: {
      for (const auto& v : g->left->vars())
        if (g->right->vars().count(v)) return false;
      return is_sequential(g->left) && is_sequential(g->right);
    }
    case RgxKind::Star:
      return g->left->vars().empty();
    case RgxKind::Capture:
      if (g->left->vars().count(g->var)) return false;
      return is_sequential(g->left);
  }
  return false;
}

bool is_span_rgx(const Rgx& g) {
  switch (g->kind) {
    case RgxKind::Epsilon:
    case RgxKind::Letter:
    case RgxKind::Wildcard:
      return true;
    case RgxKind::Disj:
    case RgxKind::Concat:
      return is_span_rgx(g->left) && is_span_rgx(g->right);
    case RgxKind::Star:
      return is_span_rgx(g->left);
    case RgxKind::Capture:
      return g->left->kind == RgxKind::Star && g->left->left->kind == RgxKind::Wildcard;
  }
  return false;
}

}  // namespace spanex
