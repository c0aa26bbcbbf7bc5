#include <gtest/gtest.h>

#include "poto/analysis.hpp"
#include "poto/parser.hpp"
#include "support.hpp"

using namespace poto;
namespace pt = poto::testing;

namespace {

FunctionId function_named(const Analysis& a, std::string_view module, std::string_view qualname) {
  auto ids = a.package().functions.by_qualname(module, qualname);
  EXPECT_EQ(ids.size(), 1u) << module << "." << qualname;
  return ids.front();
}

std::vector<std::string> lines_of(Analysis& a, const FunctionEntry& entry) {
  std::vector<std::string> out;
  for (const auto& s : entry.statements) {
    out.push_back(format_statement(s, a.vars(), a.objects(), a.hierarchy(), a.package().functions));
  }
  return out;
}

std::vector<std::string> translated(Analysis& a, std::string_view module, std::string_view qualname) {
  Translator translator(a.context());
  return lines_of(a, translator.translate_function(function_named(a, module, qualname)));
}

EvalResponse const_response(std::uint64_t handle, std::string type, std::string repr) {
  EvalResponse r;
  r.ok = true;
  r.handle = handle;
  r.type_name = std::move(type);
  r.repr = std::move(repr);
  return r;
}

bool is_tac_form(const TacStatement& s) { return s.form.index() < std::variant_size_v<TacForm>; }

}  // namespace

TEST(Translate, AttributeChainGolden) {
  auto a = Analysis::from_sources({{"m", "def h(y):\n    pass\n"}}, nullptr);
  FunctionId h = function_named(*a, "m", "h");
  TranslatorContext ctx = a->context();
  LocalEnv env;
  env.bind("y", ctx.vars.fresh(h, "y", VarRole::Local, 0));
  py::Module stmt = py::parse_module("x = y.f.g\n");
  Translator translator(ctx);
  FunctionEntry entry = translator.translate_body(h, stmt.body, env);

  EXPECT_EQ(pt::join(pt::rename_temps(lines_of(*a, entry))), "t1 = y.f\nt2 = t1.g\nx = t2\n");
  ASSERT_TRUE(entry.env.lookup("x").has_value());
  EXPECT_NE(*entry.env.lookup("x"), *entry.env.lookup("y"));
}

TEST(Translate, PassIsEmpty) {
  auto a = Analysis::from_sources({{"m", "def f():\n    pass\n"}}, nullptr);
  Translator translator(a->context());
  FunctionEntry entry = translator.translate_function(function_named(*a, "m", "f"));
  EXPECT_TRUE(entry.statements.empty());
  EXPECT_TRUE(entry.ret.valid());
  EXPECT_EQ(a->vars().display(entry.ret), "f_ret");
}

TEST(Translate, IdentityReturnsItsParameter) {
  auto a = Analysis::from_sources({{"m", "def g(x):\n    return x\n"}}, nullptr);
  EXPECT_EQ(translated(*a, "m", "g"), (std::vector<std::string>{"g_ret = x"}));
}

TEST(Translate, RebindingReusesTheVariable) {
  FixtureEvaluator fixture;
  fixture.add(EvalRequest::eval("1", {}), const_response(1, "int", "1"));
  fixture.add(EvalRequest::eval("\"a\"", {}), const_response(2, "str", "'a'"));
  auto a = Analysis::from_sources({{"m", "def h():\n    x = 1\n    x = \"a\"\n"}}, &fixture);
  auto lines = pt::collapse_copies(translated(*a, "m", "h"));
  EXPECT_EQ(lines, (std::vector<std::string>{"x = (const, <class 'int'>, 1)", "x = (const, <class 'str'>, 'a')"}));
}

TEST(Translate, ListLiteralWritesSubscriptField) {
  auto a = Analysis::from_sources({{"m", "def h(y):\n    z = [y]\n"}}, nullptr);
  auto lines = pt::rename_temps(translated(*a, "m", "h"));
  EXPECT_EQ(lines, (std::vector<std::string>{"t1 = (data, list)", "t1[] = y", "z = t1"}));
}

TEST(Translate, SubscriptReadsSubscriptField) {
  auto a = Analysis::from_sources({{"m", "def h(y):\n    z = y[0]\n"}}, nullptr);
  auto lines = pt::rename_temps(translated(*a, "m", "h"));
  EXPECT_EQ(lines, (std::vector<std::string>{"t1 = y[]", "z = t1"}));
}

TEST(Translate, CallArgumentsKeepTheirPositions) {
  auto a = Analysis::from_sources({{"m", "def f(a, b): pass\ndef h(p):\n    f(1, p)\n"}}, nullptr);
  auto lines = pt::rename_temps(translated(*a, "m", "h"));
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0], "t1 = f(t2, p)");
}

TEST(Translate, NestedDefAllocatesMetaFunc) {
  auto a = Analysis::from_sources({{"m", "def outer():\n    def inner(): pass\n    return inner\n"}}, nullptr);
  auto lines = pt::collapse_copies(translated(*a, "m", "outer"));
  EXPECT_EQ(lines, (std::vector<std::string>{"inner = (meta-func, m.outer.inner)", "outer_ret = inner"}));
}

TEST(Translate, ForLoopIsAnAssignment) {
  auto a = Analysis::from_sources({{"m", "def h(xs):\n    for x in xs:\n        y = x\n"}}, nullptr);
  EXPECT_EQ(translated(*a, "m", "h"), (std::vector<std::string>{"x = xs", "y = x"}));
}

TEST(Translate, MethodBindsSelfFirst) {
  auto a = Analysis::from_sources({{"m", "class C:\n    def set(self, v):\n        self.v = v\n"}}, nullptr);
  Translator translator(a->context());
  FunctionEntry entry = translator.translate_function(function_named(*a, "m", "C.set"));
  ASSERT_EQ(entry.params.size(), 2u);
  EXPECT_EQ(a->vars().display(entry.params[0]), "self");
  EXPECT_EQ(lines_of(*a, entry), (std::vector<std::string>{"self.v = v"}));
}

TEST(Translate, InternalFromImportCopies) {
  auto a = Analysis::from_sources({{"m", "def f(): pass\n"}, {"n", "from m import f\nfrom m import f as g\n"}}, nullptr);
  auto lines = translated(*a, "n", "<module>");
  EXPECT_EQ(lines, (std::vector<std::string>{"f = f", "g = f"}));
  Translator translator(a->context());
  FunctionEntry init = translator.translate_function(function_named(*a, "n", "<module>"));
  const auto& copy = std::get<CopyStmt>(init.statements.at(1).form);
  EXPECT_EQ(copy.lhs, *a->global("n.g"));
  EXPECT_EQ(copy.rhs, *a->global("m.f"));
}

TEST(Translate, ExternalImportEmitsNothing) {
  auto a = Analysis::from_sources({{"m", "import re\n"}}, nullptr);
  EXPECT_TRUE(translated(*a, "m", "<module>").empty());
  EXPECT_EQ(a->package().external_imports("m"), (std::vector<std::string>{"import re"}));
}

TEST(Translate, ExternalCallIsConcrete) {
  FixtureEvaluator fixture;
  fixture.add(EvalRequest::eval("re.compile(r\"p\")", {"import re"}),
              const_response(5, "re.Pattern", "re.compile('p')"));
  auto a = Analysis::from_sources({{"m", "import re\ndef h():\n    r = re.compile(r\"p\")\n"}}, &fixture);
  auto lines = pt::collapse_copies(translated(*a, "m", "h"));
  EXPECT_EQ(lines, (std::vector<std::string>{"r = (const, <class 're.Pattern'>, re.compile('p'))"}));
}

TEST(Translate, UnresolvedNameIsDiagnosed) {
  auto a = Analysis::from_sources({{"m", "def h():\n    x = nowhere\n"}}, nullptr);
  EXPECT_TRUE(translated(*a, "m", "h").empty());
  EXPECT_TRUE(a->diagnostics().contains("unresolved name 'nowhere'"));
}

TEST(Translate, RetranslationIsAlphaEquivalent) {
  auto a = pt::fig1_analysis(nullptr);
  for (const char* f : {"url_regex", "str_validator", "validate", "main"}) {
    auto first = pt::rename_temps(translated(*a, "example", f));
    auto second = pt::rename_temps(translated(*a, "example", f));
    EXPECT_EQ(first, second) << f;
  }
}

TEST(Translate, OnlyTheFiveForms) {
  auto a = pt::fig1_analysis(nullptr);
  a->run();
  std::size_t n = 0;
  for (FunctionId f : a->table().ids()) {
    for (const auto& s : a->table().at(f).statements) {
      EXPECT_TRUE(is_tac_form(s));
      ++n;
    }
  }
  EXPECT_GT(n, 0u);
}

TEST(Translate, IllustratingValidateBody) {
  FixtureEvaluator fixture = FixtureEvaluator::load(pt::fig1_transcript());
  auto a = pt::fig1_analysis(&fixture);
  a->run();
  auto lines = pt::rename_temps(pt::collapse_copies(pt::function_lines(*a, "example.validate")));
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
  EXPECT_EQ(lines, expected);
}
