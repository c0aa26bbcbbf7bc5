// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <exception>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "poto/analysis.hpp"
#include "poto/parser.hpp"
#include "poto/results.hpp"
#include "support.hpp"

using namespace poto;
namespace pt = poto::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

TypeSet lookup(const KeyedTypeResult& r, const std::string& f, const std::string& v) {
  auto it = r.find(Key{"example", f, v});
  return it == r.end() ? TypeSet{"<missing>"} : it->second;
}

Outcome illustrating_example() {
  Outcome o;
  auto begin = std::chrono::steady_clock::now();
  FixtureEvaluator fixture = FixtureEvaluator::load(pt::fig1_transcript());
  auto a = pt::fig1_analysis(&fixture);
  a->run();
  KeyedTypeResult r = a->types();
  auto elapsed = std::chrono::steady_clock::now() - begin;
  o.expect(lookup(r, "validate", "url") == TypeSet{"str"}, "url types");
  o.expect(lookup(r, "validate", "m") == TypeSet{"re.Match"}, "m types");
  auto url = a->local("example.validate", "url");
  auto ret = a->local("example.str_validator", "str_validator_ret");
  o.expect(url && ret, "variables present");
  if (url && ret) {
    const auto& into = a->graph().pt(*url);
    bool flows = !a->graph().pt(*ret).empty();
    for (ObjectId x : a->graph().pt(*ret)) flows &= into.count(x) != 0;
    o.expect(flows, "str_validator_ret flows into url");
  }
  o.expect(elapsed < std::chrono::seconds(1), "runtime under 1 s");
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  auto corpus = pt::generated_corpus();
  o.expect(corpus.size() >= 30, "corpus size");
  std::size_t bad = 0;
  for (const auto& p : corpus) {
    if (p.body_statements > 12) ++bad;
    if (!(pt::canonical(*pt::analyze(p, nullptr)) == pt::naive_fixpoint(p))) ++bad;
  }
  o.expect(bad == 0, std::to_string(bad) + " discrepancies");
  return o;
}

Outcome monotonicity() {
  Outcome o;
  std::size_t shrinks = 0, extra = 0;
  for (const auto& p : pt::generated_corpus()) {
    AnalysisOptions options;
    options.entries = p.entries;
    auto a = Analysis::from_sources(p.sources, nullptr, options);
    pt::TraceCheck c = pt::run_checked(*a);
    shrinks += c.shrinks;
    extra += c.extra_changes;
  }
  o.expect(shrinks == 0, std::to_string(shrinks) + " shrinking sets");
  o.expect(extra == 0, std::to_string(extra) + " changes after fixpoint");
  return o;
}

Outcome mro() {
  Outcome o;
  auto table = pt::load_mro_table();
  o.expect(table.size() == 10, "10 hierarchies");
  bool diamond = false;
  std::size_t errors = 0;
  for (const auto& c : table) {
    diamond |= c.name == "diamond";
    Hierarchy h = Hierarchy::from_edges(c.classes);
    for (const auto& [cls, expected] : c.mro) {
      auto id = h.find(cls);
      if (!id) {
        o.expect(false, c.name + "." + cls + " missing");
        continue;
      }
      const Linearization& l = h.linearization(*id);
      if (!expected) {
        o.expect(!l.ok, c.name + "." + cls + " should error");
        errors += !l.ok;
        continue;
      }
      std::vector<std::string> got;
      for (ClassId k : l.order) got.push_back(h.record(k).name);
      o.expect(l.ok && got == *expected, c.name + "." + cls + " order");
    }
  }
  o.expect(diamond, "diamond case present");
  o.expect(errors >= 1, "inconsistent case present");
  return o;
}

Outcome translation_goldens() {
  Outcome o;
  auto a = Analysis::from_sources({{"m", "def h(y):\n    pass\n"}}, nullptr);
  FunctionId h = a->package().functions.by_qualname("m", "h").front();
  TranslatorContext ctx = a->context();
  LocalEnv env;
  env.bind("y", ctx.vars.fresh(h, "y", VarRole::Local, 0));
  py::Module stmt = py::parse_module("x = y.f.g\n");
  FunctionEntry entry = Translator(ctx).translate_body(h, stmt.body, env);
  std::vector<std::string> lines;
  for (const auto& s : entry.statements) {
    lines.push_back(format_statement(s, a->vars(), a->objects(), a->hierarchy(), a->package().functions));
  }
  o.expect(pt::join(pt::rename_temps(lines)) == "t1 = y.f\nt2 = t1.g\nx = t2\n", "attribute chain");

  FixtureEvaluator fixture = FixtureEvaluator::load(pt::fig1_transcript());
  auto fig = pt::fig1_analysis(&fixture);
  fig->run();
  auto body = pt::rename_temps(pt::collapse_copies(pt::function_lines(*fig, "example.validate")));
  std::vector<std::string> expected = {
      "url = str_validator(value)",
      "t1 = url_regex()",
      "t2 = t1.match",
      "m = t2(url)",
      "t3 = m.end",
      "t4 = t3()",
      "t5 = (const, <class 'builtin_function_or_method'>, <built-in function len>)",
      "t6 = t5(url)",
      "t7 = (const, <class 'type'>, <class 'Exception'>)",
      "t8 = m.end",
      "t9 = t8()",
      "t10 = t7(t9)",
  };
  o.expect(body == expected, "validate body");
  return o;
}

Outcome shallow() {
  Outcome o;
  auto a = Analysis::from_sources(
      {{"m", "def load(schema, field):\n    rules = set(schema.get(field, ()))\n    return rules\n"}}, nullptr);
  KeyedTypeResult r = shallow_scan(a->package());
  auto it = r.find(Key{"m", "load", "rules"});
  o.expect(it != r.end() && it->second == TypeSet{"set"}, "rules is set");
  return o;
}

Outcome classifier() {
  Outcome o;
  o.expect(classify_equivalence({"Dict[str,int]"}, {"dict"}) == Verdict::TotalMatch, "Dict[str,int] vs dict");
  auto a = load_results(pt::fixture_dir() / "compare_a.json");
  auto b = load_results(pt::fixture_dir() / "compare_b.json");
  ComparisonSummary s = compare_results(a, b);
  o.expect(s.total_match == 1 && s.partial_match == 1 && s.mismatch == 1, "fixture triple counts");
  pt::TempDir dir;
  std::string text = serialize_results(a);
  save_results(load_results(pt::fixture_dir() / "compare_a.json"), dir.path() / "a.json");
  save_results(load_results(dir.path() / "a.json"), dir.path() / "b.json");
  o.expect(pt::read_file(dir.path() / "a.json") == text && pt::read_file(dir.path() / "b.json") == text,
           "byte-identical round trip");
  return o;
}

Outcome isolation() {
  Outcome o;
  auto corpus = pt::generated_corpus();
  for (auto& p : pt::concrete_corpus()) corpus.push_back(std::move(p));
  for (const auto& p : corpus) {
    FailingEvaluator failing;
    try {
      auto with = pt::analyze(p, &failing);
      auto without = pt::analyze(p, nullptr);
      o.expect(pt::canonical(*with) == pt::canonical(*without), p.name + " graph");
      o.expect(serialize_results(with->types()) == serialize_results(without->types()), p.name + " types");
    } catch (const std::exception& e) {
      o.expect(false, p.name + " threw " + e.what());
    }
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"illustrating example end to end", illustrating_example},
      {"worklist equals naive fixpoint", oracle_equivalence},
      {"monotone and idempotent solving", monotonicity},
      {"C3 linearization matches native table", mro},
      {"translation goldens", translation_goldens},
      {"shallow scan of set constructor", shallow},
      {"equivalence classifier and result files", classifier},
      {"always-failing evaluator equals abstract-only", isolation},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.ok ? "PASS " : "FAIL ") << name;
    if (!o.ok) std::cout << " (" << o.detail << ")";
    std::cout << std::endl;
    failed += !o.ok;
  }
  return failed == 0 ? 0 : 1;
}
