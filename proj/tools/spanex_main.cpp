// Command-line driver: batch extraction, classification, compilation,
// rule/expression transformation, static analysis, and delay auditing.

#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "spanex/analysis.hpp"
#include "spanex/eval.hpp"
#include "spanex/rules.hpp"
#include "spanex/va.hpp"

using namespace spanex;
using nlohmann::json;

namespace {

constexpr int kExitSyntax = 2;
constexpr int kExitFragment = 3;
constexpr int kExitEmpty = 4;
constexpr int kExitBudget = 5;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::syntax_error:
    case Errc::io_error:
      return kExitSyntax;
    case Errc::budget_exceeded:
      return kExitBudget;
    case Errc::empty_result:
      return kExitEmpty;
    default:
      return kExitFragment;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Inputs {
  std::string expr_inline, expr_file;
  std::string rule_inline, rule_file;
  std::string automaton_file;
  std::string alphabet;
  uint32_t max_doc_len = 12;
  uint32_t max_vars = 8;

  void add_flags(CLI::App* cmd, bool with_automaton) {
    cmd->add_option("--expr", expr_inline, "inline expression");
    cmd->add_option("--expr-file", expr_file, "expression file");
    cmd->add_option("--rule", rule_inline, "inline extraction rule");
    cmd->add_option("--rule-file", rule_file, "extraction rule file");
    if (with_automaton) cmd->add_option("--automaton", automaton_file, "automaton JSON file");
    cmd->add_option("--alphabet", alphabet, "declared alphabet symbols");
    cmd->add_option("--max-doc-len", max_doc_len, "oracle document budget");
    cmd->add_option("--max-vars", max_vars, "variable budget for general evaluation");
  }

  int sources() const {
    return !expr_inline.empty() + !expr_file.empty() + !rule_inline.empty() +
           !rule_file.empty() + !automaton_file.empty();
  }

  std::set<char32_t> alphabet_set(const Document* d) const {
    if (!alphabet.empty()) {
      std::u32string s = utf8_decode(alphabet);
      return std::set<char32_t>(s.begin(), s.end());
    }
    return d ? d->alphabet() : std::set<char32_t>{};
  }

  bool has_rule() const { return !rule_inline.empty() || !rule_file.empty(); }
  bool has_expr() const { return !expr_inline.empty() || !expr_file.empty(); }
  bool has_automaton() const { return !automaton_file.empty(); }

  std::string expr_text() const { return expr_inline.empty() ? read_file(expr_file) : expr_inline; }
  std::string rule_text() const { return rule_inline.empty() ? read_file(rule_file) : rule_inline; }

  VaAutomaton load_automaton() const {
    std::vector<std::string> warnings;
    VaAutomaton a = va_from_json(read_file(automaton_file), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return a;
  }
};

json span_json(const Span& s) { return {s.start, s.end}; }

json witness_json(const SatWitness& w, bool byte_offsets) {
  json j;
  j["document"] = utf8_encode(w.document.symbols());
  json mu = json::object();
  for (const auto& [v, s] : w.mapping.bindings()) {
    if (byte_offsets) {
      mu[v] = {{"span", span_json(s)},
               {"bytes", {w.document.byte_offset(s.start), w.document.byte_offset(s.end)}}};
    } else {
      mu[v] = span_json(s);
    }
  }
  j["mapping"] = mu;
  return j;
}

// ---------------------------------------------------------------------------
// extract

int cmd_extract(const Inputs& in, const std::vector<std::string>& docs,
                const std::vector<std::string>& doc_files, size_t limit, bool byte_offsets) {
  if (in.sources() != 1)
    throw Error(Errc::syntax_error, "exactly one of --expr/--expr-file/--rule/--rule-file required");

  struct DocJob {
    std::string name;
    Document doc;
  };
  std::vector<DocJob> jobs;
  for (const auto& d : docs) jobs.push_back({"<inline>", Document(d)});
  for (const auto& f : doc_files) jobs.push_back({f, Document(read_file(f))});
  if (jobs.empty()) throw Error(Errc::syntax_error, "no document given (--doc or --doc-file)");

  EvalBudget budget;
  budget.max_fpt_vars = in.max_vars;

  auto run_one = [&](const DocJob& job) {
    std::vector<std::string> lines;
    EnumerateStats stats;
    std::set<char32_t> sigma = in.alphabet_set(&job.doc);
    auto sink = [&](const Mapping& m) {
      lines.push_back(mapping_to_json(m, job.doc, byte_offsets));
      return limit == 0 || lines.size() < limit;
    };
    if (in.has_rule()) {
      ExtractionRule rule = parse_rule(in.rule_text(), sigma);
      enumerate_tree_rule(rule, job.doc, sigma, sink, &stats);
    } else {
      Rgx g = parse_rgx(in.expr_text());
      VaAutomaton a = compile_rgx(g, sigma);
      enumerate(a, job.doc, sink, &stats, budget);
    }
    size_t max_gap = 0;
    for (size_t g : stats.gaps) max_gap = std::max(max_gap, g);
    return std::make_tuple(lines, stats.outputs, max_gap);
  };

  size_t total = 0;
  if (jobs.size() == 1) {
    auto [lines, outputs, max_gap] = run_one(jobs[0]);
    for (const auto& l : lines) std::cout << l << "\n";
    std::cerr << "count=" << outputs << " max_delay=" << max_gap << "\n";
    total = outputs;
  } else {
    std::vector<std::future<std::tuple<std::vector<std::string>, size_t, size_t>>> futures;
    for (const auto& job : jobs)
      futures.push_back(std::async(std::launch::async, run_one, std::cref(job)));
    for (size_t i = 0; i < jobs.size(); ++i) {
      auto [lines, outputs, max_gap] = futures[i].get();
      std::cout << "# " << jobs[i].name << "\n";
      for (const auto& l : lines) std::cout << l << "\n";
      std::cerr << jobs[i].name << ": count=" << outputs << " max_delay=" << max_gap << "\n";
      total += outputs;
    }
  }
  return total == 0 ? kExitEmpty : 0;
}

// ---------------------------------------------------------------------------
// check

int cmd_check(const Inputs& in) {
  if (in.sources() != 1) throw Error(Errc::syntax_error, "exactly one input source required");
  json report;
  if (in.has_rule()) {
    ExtractionRule rule = parse_rule(in.rule_text(), in.alphabet_set(nullptr));
    RuleShape s = classify(rule);
    std::set<std::string> vars = rule.variables();
    report = {{"kind", "rule"},       {"simple", s.simple},     {"functional", s.functional},
              {"sequential", s.sequential}, {"span_rgx", s.span_rgx}, {"dag_like", s.dag_like},
              {"tree_like", s.tree_like},
              {"variables", json(std::vector<std::string>(vars.begin(), vars.end()))}};
  } else if (in.has_expr()) {
    Rgx g = parse_rgx(in.expr_text());
    report = {{"kind", "expression"},
              {"functional", is_functional(g)},
              {"sequential", is_sequential(g)},
              {"span_rgx", is_span_rgx(g)},
              {"variables", json(std::vector<std::string>(g->vars().begin(), g->vars().end()))}};
  } else {
    VaAutomaton a = in.load_automaton();
    std::set<std::string> vars = a.variables();
    report = {{"kind", "automaton"},
              {"sequential", is_sequential_va(a)},
              {"deterministic", is_deterministic(a)},
              {"states", a.num_states},
              {"variables", json(std::vector<std::string>(vars.begin(), vars.end()))}};
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compile

int cmd_compile(const Inputs& in, bool do_determinize, bool single_final) {
  Rgx g = parse_rgx(in.expr_text());
  std::set<char32_t> sigma = in.alphabet_set(nullptr);
  if (sigma.empty() && !g->vars().empty() && in.alphabet.empty()) {
    // Wildcards need a declared alphabet when no document is around.
    for (char32_t c : std::u32string(U"ab")) sigma.insert(c);
  }
  VaAutomaton a = compile_rgx(g, sigma);
  if (do_determinize) a = determinize(a);
  if (single_final) a = normalize_single_final(a);
  a.normalize();
  std::cout << va_to_json(a) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// transform

int cmd_transform(const Inputs& in, const std::string& to) {
  std::set<char32_t> sigma = in.alphabet_set(nullptr);
  json out;
  if (to == "dag") {
    ExtractionRule rule = parse_rule(in.rule_text(), sigma);
    ExtractionRule r = eliminate_cycles(rule);
    out["result"] = print_rule(r, sigma);
    out["metadata"] = {{"constraints_in", rule.constraints.size()},
                       {"constraints_out", r.constraints.size()}};
  } else if (to == "functional-union") {
    ExtractionRule rule = parse_rule(in.rule_text(), sigma);
    RuleUnion u = to_functional_union(rule);
    json rules = json::array();
    for (const auto& r : u.rules) rules.push_back(print_rule(r, sigma));
    out["result"] = rules;
    out["metadata"] = {{"members", u.rules.size()}};
  } else if (to == "tree-union") {
    ExtractionRule rule = parse_rule(in.rule_text(), sigma);
    RuleUnion u = dag_to_tree_union(rule);
    json rules = json::array();
    for (const auto& r : u.rules) rules.push_back(print_rule(r, sigma));
    out["result"] = rules;
    out["metadata"] = {{"members", u.rules.size()}};
  } else if (to == "rgx") {
    ExtractionRule rule = parse_rule(in.rule_text(), sigma);
    Rgx g = tree_to_rgx(rule);
    out["result"] = print_rgx(g);
    out["metadata"] = {{"size_in", rule.constraints.size() + 1}};
  } else if (to == "seq-rgx") {
    Rgx g = parse_rgx(in.expr_text());
    if (sigma.empty()) sigma = {U'a', U'b'};
    Rgx s = sequentialize(g, sigma);
    out["result"] = print_rgx(s);
    out["metadata"] = {{"sequential_in", is_sequential(g)}, {"sequential_out", is_sequential(s)}};
  } else if (to == "rule-union") {
    Rgx g = parse_rgx(in.expr_text());
    if (sigma.empty()) sigma = {U'a', U'b'};
    RuleUnion u = rgx_to_rule_union(g, sigma);
    json rules = json::array();
    for (const auto& r : u.rules) rules.push_back(print_rule(r, sigma));
    out["result"] = rules;
    out["metadata"] = {{"members", u.rules.size()}};
  } else {
    throw Error(Errc::syntax_error, "unknown transform target: " + to);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const Inputs& in, const std::string& other_automaton, bool sat, bool point_disjoint,
                uint32_t bound, bool byte_offsets) {
  json out;
  auto target = [&]() -> VaAutomaton {
    if (in.has_automaton()) return in.load_automaton();
    std::set<char32_t> sigma = in.alphabet_set(nullptr);
    if (sigma.empty()) sigma = {U'a', U'b'};
    return compile_rgx(parse_rgx(in.expr_text()), sigma);
  };

  if (sat) {
    VaAutomaton a = target();
    auto witness = sat_va(a);
    if (witness) {
      // Independent re-verification through the run oracle.
      MappingSet runs = enumerate_runs(a, witness->document);
      if (!runs.contains(witness->mapping))
        throw Error(Errc::precondition_violated, "satisfiability witness failed re-verification");
      out["result"] = "sat";
      out["witness"] = witness_json(*witness, byte_offsets);
    } else {
      out["result"] = "unsat";
    }
    out["bounded"] = false;
  } else if (point_disjoint) {
    VaAutomaton a = target();
    out["result"] = point_disjoint_check(a, bound) ? "point-disjoint" : "not-point-disjoint";
    out["bounded"] = true;
    out["bound"] = bound;
  } else if (!other_automaton.empty()) {
    VaAutomaton a1 = target();
    std::vector<std::string> warnings;
    VaAutomaton a2 = va_from_json(read_file(other_automaton), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    ContainmentResult r = containment_general(a1, a2);
    if (r.contained) {
      out["result"] = "contained";
    } else {
      const SatWitness& w = *r.counterexample;
      MappingSet s1 = enumerate_runs(a1, w.document);
      MappingSet s2 = enumerate_runs(a2, w.document);
      if (!s1.contains(w.mapping) || s2.contains(w.mapping))
        throw Error(Errc::precondition_violated, "containment counterexample failed re-verification");
      out["result"] = "counterexample";
      out["witness"] = witness_json(w, byte_offsets);
    }
    out["bounded"] = false;
  } else {
    throw Error(Errc::syntax_error, "analyze needs --sat, --point-disjoint, or --containment");
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// audit

int cmd_audit(const Inputs& in, const std::vector<std::string>& docs,
              const std::vector<std::string>& doc_files) {
  std::vector<Document> targets;
  for (const auto& d : docs) targets.push_back(Document(d));
  for (const auto& f : doc_files) targets.push_back(Document(read_file(f)));
  if (targets.empty()) throw Error(Errc::syntax_error, "no document given");

  EvalBudget budget;
  budget.max_fpt_vars = in.max_vars;
  json out = json::array();
  for (const auto& doc : targets) {
    std::set<char32_t> sigma = in.alphabet_set(&doc);
    VaAutomaton a = compile_rgx(parse_rgx(in.expr_text()), sigma);
    DelayAudit audit = delay_audit(a, doc, budget);
    out.push_back({{"doc_len", audit.doc_len},
                   {"variables", audit.var_count},
                   {"outputs", audit.outputs},
                   {"max_gap", audit.max_gap},
                   {"stated_bound", audit.stated_bound},
                   {"structural_bound", audit.structural_bound},
                   {"within_stated_bound", audit.satisfies_stated_bound},
                   {"within_structural_bound", audit.satisfies_structural_bound},
                   {"gaps", audit.gaps}});
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"document spanner engine"};
  app.require_subcommand(1);

  Inputs in;
  std::vector<std::string> docs, doc_files;
  size_t limit = 0;
  bool byte_offsets = false;

  auto* extract = app.add_subcommand("extract", "enumerate mappings as JSON lines");
  in.add_flags(extract, false);
  extract->add_option("--doc", docs, "inline document");
  extract->add_option("--doc-file", doc_files, "document file");
  extract->add_option("--limit", limit, "truncate output after N mappings");
  extract->add_flag("--byte-offsets", byte_offsets, "also report byte offsets");

  auto* check = app.add_subcommand("check", "classify an expression, rule, or automaton");
  in.add_flags(check, true);

  auto* compile = app.add_subcommand("compile", "compile an expression to an automaton");
  in.add_flags(compile, false);
  bool do_det = false, single_final = false;
  compile->add_flag("--determinize", do_det, "apply subset construction");
  compile->add_flag("--single-final", single_final, "emit the single-final-state form");

  auto* transform = app.add_subcommand("transform", "rewrite rules and expressions");
  in.add_flags(transform, false);
  std::string to;
  transform->add_option("--to", to,
                        "dag | functional-union | tree-union | rgx | seq-rgx | rule-union")
      ->required();

  auto* analyze = app.add_subcommand("analyze", "satisfiability, containment, point-disjointness");
  in.add_flags(analyze, true);
  bool sat = false, pd = false;
  std::string other;
  uint32_t bound = 4;
  analyze->add_flag("--sat", sat, "satisfiability with witness");
  analyze->add_flag("--point-disjoint", pd, "bounded point-disjointness check");
  analyze->add_option("--containment", other, "automaton JSON to test containment against");
  analyze->add_option("--bound", bound, "document length bound for bounded checks");
  analyze->add_flag("--byte-offsets", byte_offsets, "also report byte offsets");

  auto* audit = app.add_subcommand("audit", "delay audit for the enumeration");
  in.add_flags(audit, false);
  audit->add_option("--doc", docs, "inline document");
  audit->add_option("--doc-file", doc_files, "document file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (extract->parsed()) return cmd_extract(in, docs, doc_files, limit, byte_offsets);
    if (check->parsed()) return cmd_check(in);
    if (compile->parsed()) return cmd_compile(in, do_det, single_final);
    if (transform->parsed()) return cmd_transform(in, to);
    if (analyze->parsed()) return cmd_analyze(in, other, sat, pd, bound, byte_offsets);
    if (audit->parsed()) return cmd_audit(in, docs, doc_files);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
