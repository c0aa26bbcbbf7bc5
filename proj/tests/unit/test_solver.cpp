#include <gtest/gtest.h>

#include "poto/analysis.hpp"
#include "support.hpp"

using namespace poto;
namespace pt = poto::testing;

namespace {

// Answers every request with a fresh int handle.
class CountingEvaluator : public Evaluator {
 public:
  EvalResponse evaluate(const EvalRequest& request) override {
    ++calls;
    EvalResponse r;
    r.ok = true;
    r.handle = next++;
    r.type_name = "int";
    r.repr = std::string(op_name(request.op));
    return r;
  }
  std::size_t calls = 0;
  std::uint64_t next = 100000;
};

const char* kClasses =
    "class C:\n"
    "    def __init__(self, v):\n"
    "        self.v = v\n"
    "    def get(self):\n"
    "        return self.v\n"
    "def h():\n"
    "    pass\n"
    "def k():\n"
    "    pass\n";

// Statements are built by hand inside m.h, which is already in the table.
class SolverRules : public ::testing::Test {
 protected:
  void SetUp() override { make(nullptr); }

  void make(Evaluator* evaluator) {
    a = Analysis::from_sources({{"m", kClasses}}, evaluator);
    ctx = std::make_unique<TranslatorContext>(a->context());
    h = a->package().functions.by_qualname("m", "h").front();
    k = a->package().functions.by_qualname("m", "k").front();
    a->solver().ensure_translated(h);
    a->solver().ensure_translated(k);
    cls = *a->hierarchy().find("m.C");
  }

  VarId var(const std::string& name, FunctionId owner = {}) {
    return ctx->vars.fresh(owner.valid() ? owner : h, name, VarRole::Local, 1000 + ordinal++);
  }
  TacStatement at(TacForm form) { return TacStatement{h, 0, std::move(form)}; }
  ObjectId constant(std::uint64_t handle) { return ctx->objects.intern(ConstObject{handle, "int", "x"}); }
  const ObjectSet& pt(VarId v) { return a->graph().pt(v); }
  Solver& solver() { return a->solver(); }

  std::unique_ptr<Analysis> a;
  std::unique_ptr<TranslatorContext> ctx;
  FunctionId h, k;
  ClassId cls;
  std::uint32_t ordinal = 0;
};

}  // namespace

TEST_F(SolverRules, NewInsertsOnceThenIsStable) {
  VarId t = var("t");
  ObjectId f = ctx->objects.meta_func(k);
  TacStatement s = at(NewStmt{t, f});
  EXPECT_EQ(solver().solve(s), (std::set<FunctionId>{h}));
  EXPECT_EQ(pt(t), (ObjectSet{f}));
  EXPECT_TRUE(solver().solve(s).empty());
}

TEST_F(SolverRules, NewConstant) {
  VarId t = var("t");
  ObjectId o = constant(7);
  solver().solve(at(NewStmt{t, o}));
  EXPECT_TRUE(pt(t).count(o));
}

TEST_F(SolverRules, CopyFromEmptyChangesNothing) {
  VarId x = var("x"), y = var("y");
  EXPECT_TRUE(solver().solve(at(CopyStmt{x, y})).empty());
  EXPECT_TRUE(pt(x).empty());
}

TEST_F(SolverRules, CopyPropagates) {
  VarId x = var("x"), y = var("y");
  ObjectId o = constant(1);
  solver().solve(at(NewStmt{y, o}));
  EXPECT_EQ(solver().solve(at(CopyStmt{x, y})), (std::set<FunctionId>{h}));
  EXPECT_EQ(pt(x), (ObjectSet{o}));
}

TEST(SolverAffected, ReturnSlotWakesCallers) {
  auto a = Analysis::from_sources({{"m", "def f(p):\n    return p\ndef main():\n    x = f(main)\n"}}, nullptr,
                                  AnalysisOptions{{"main"}, {}, {}});
  a->run();
  FunctionId f = a->package().functions.by_qualname("m", "f").front();
  FunctionId main = a->package().functions.by_qualname("m", "main").front();
  VarId ret = *a->local("m.f", "f_ret");
  EXPECT_EQ(a->solver().affected_by({ret}), (std::set<FunctionId>{f, main}));
  EXPECT_EQ(a->solver().affected_by({*a->local("m.main", "x")}), (std::set<FunctionId>{main}));
}

TEST_F(SolverRules, FieldWriteWithEmptyBase) {
  VarId b = var("b"), v = var("v");
  solver().solve(at(NewStmt{v, constant(1)}));
  EXPECT_TRUE(solver().solve(at(FieldWriteStmt{b, "f", v})).empty());
}

TEST_F(SolverRules, FieldWriteOneEdgeAndWakesEveryFunction) {
  VarId b = var("b"), v = var("v");
  ObjectId obj = ctx->objects.data(cls, Site{h, 99});
  ObjectId val = constant(1);
  solver().solve(at(NewStmt{b, obj}));
  solver().solve(at(NewStmt{v, val}));
  EXPECT_EQ(solver().solve(at(FieldWriteStmt{b, "f", v})), solver().all_functions());
  EXPECT_EQ(a->graph().field(obj, "f"), (ObjectSet{val}));
  EXPECT_TRUE(solver().solve(at(FieldWriteStmt{b, "f", v})).empty());
}

TEST_F(SolverRules, FieldWriteIsWeakOverReceivers) {
  VarId b = var("b"), v = var("v");
  ObjectId o1 = ctx->objects.data(cls, Site{h, 1});
  ObjectId o2 = ctx->objects.data(cls, Site{h, 2});
  ObjectId val = constant(1);
  solver().solve(at(NewStmt{b, o1}));
  solver().solve(at(NewStmt{b, o2}));
  solver().solve(at(NewStmt{v, val}));
  solver().solve(at(FieldWriteStmt{b, "f", v}));
  EXPECT_EQ(a->graph().field(o1, "f"), (ObjectSet{val}));
  EXPECT_EQ(a->graph().field(o2, "f"), (ObjectSet{val}));
}

TEST_F(SolverRules, FieldReadBindsMethod) {
  VarId b = var("b"), t = var("t");
  ObjectId obj = ctx->objects.data(cls, Site{h, 1});
  solver().solve(at(NewStmt{b, obj}));
  solver().solve(at(FieldReadStmt{t, b, "get"}));
  FunctionId get = a->package().functions.by_qualname("m", "C.get").front();
  EXPECT_EQ(pt(t), (ObjectSet{ctx->objects.meta_func(get, obj)}));
}

TEST_F(SolverRules, FieldReadOnClassIsUnbound) {
  VarId c = var("c"), t = var("t");
  solver().solve(at(NewStmt{c, ctx->objects.meta_cls(cls)}));
  solver().solve(at(FieldReadStmt{t, c, "get"}));
  FunctionId get = a->package().functions.by_qualname("m", "C.get").front();
  EXPECT_EQ(pt(t), (ObjectSet{ctx->objects.meta_func(get)}));
}

TEST_F(SolverRules, FieldReadSeesStoredObjects) {
  VarId b = var("b"), v = var("v"), t = var("t");
  ObjectId obj = ctx->objects.data(cls, Site{h, 1});
  ObjectId val = constant(3);
  solver().solve(at(NewStmt{b, obj}));
  solver().solve(at(NewStmt{v, val}));
  solver().solve(at(FieldWriteStmt{b, "[]", v}));
  solver().solve(at(FieldReadStmt{t, b, "[]"}));
  EXPECT_EQ(pt(t), (ObjectSet{val}));
}

TEST_F(SolverRules, FieldReadOnConstantGoesConcrete) {
  CountingEvaluator eval;
  make(&eval);
  VarId b = var("b"), t = var("t");
  solver().solve(at(NewStmt{b, constant(5)}));
  solver().solve(at(FieldReadStmt{t, b, "match"}));
  ASSERT_EQ(pt(t).size(), 1u);
  EXPECT_EQ(std::get<ConstObject>(a->objects().get(*pt(t).begin())).repr, "getattr");
}

TEST_F(SolverRules, ConstructorAllocatesAndBindsSelf) {
  VarId c = var("c"), arg = var("arg"), x = var("x");
  ObjectId val = constant(1);
  solver().solve(at(NewStmt{c, ctx->objects.meta_cls(cls)}));
  solver().solve(at(NewStmt{arg, val}));
  Site site{h, 42};
  auto affected = solver().solve(at(CallStmt{x, c, {arg}, site}));
  ObjectId instance = ctx->objects.data(cls, site);
  EXPECT_EQ(pt(x), (ObjectSet{instance}));

  FunctionId init = a->package().functions.by_qualname("m", "C.__init__").front();
  ASSERT_TRUE(a->table().contains(init));
  const FunctionEntry& entry = a->table().at(init);
  EXPECT_EQ(pt(entry.params[0]), (ObjectSet{instance}));
  EXPECT_EQ(pt(entry.params[1]), (ObjectSet{val}));
  EXPECT_TRUE(affected.count(h));
  EXPECT_TRUE(affected.count(init));
}

TEST_F(SolverRules, CallFlowsActualsAndReturn) {
  auto prog = Analysis::from_sources({{"m", "def ident(p):\n    return p\ndef main():\n    x = ident(main)\n"}},
                                     nullptr, AnalysisOptions{{"main"}, {}, {}});
  prog->run();
  VarId x = *prog->local("m.main", "x");
  VarId ret = *prog->local("m.ident", "ident_ret");
  EXPECT_EQ(prog->graph().pt(x), prog->graph().pt(ret));
  ASSERT_EQ(prog->graph().pt(x).size(), 1u);
}

TEST_F(SolverRules, ConcreteCallsAreCappedPerSite) {
  CountingEvaluator eval;
  make(&eval);
  VarId f = var("f"), arg = var("arg"), x = var("x");
  solver().solve(at(NewStmt{f, constant(1)}));
  for (std::uint64_t i = 0; i < 20; ++i) solver().solve(at(NewStmt{arg, constant(10 + i)}));
  TacStatement call = at(CallStmt{x, f, {arg}, Site{h, 7}});
  solver().solve(call);
  EXPECT_EQ(pt(x).size(), 16u);
  EXPECT_EQ(solver().stats().concrete_calls_capped, 4u);
  EXPECT_EQ(eval.calls, 16u);

  // Tuples already tried are replayed from the memo and stay within the cap.
  solver().solve(call);
  EXPECT_EQ(eval.calls, 16u);
  EXPECT_EQ(pt(x).size(), 16u);
}

TEST_F(SolverRules, ConcreteCallNeedsConstantArguments) {
  CountingEvaluator eval;
  make(&eval);
  VarId f = var("f"), arg = var("arg"), x = var("x");
  solver().solve(at(NewStmt{f, constant(1)}));
  solver().solve(at(NewStmt{arg, ctx->objects.data(cls, Site{h, 3})}));
  EXPECT_TRUE(solver().solve(at(CallStmt{x, f, {arg}, Site{h, 8}})).empty());
  EXPECT_EQ(eval.calls, 0u);
}

TEST(SolverRun, EmptyPackageEmptyGraph) {
  auto a = Analysis::from_sources({}, nullptr);
  a->run();
  EXPECT_EQ(a->graph().edge_count(), 0u);
  EXPECT_TRUE(a->solver().idle());
}

TEST(SolverRun, StraightLineConstructor) {
  auto a = Analysis::from_sources({{"m", "class A:\n    pass\ndef main():\n    x = A()\n    y = x\n"}}, nullptr,
                                  AnalysisOptions{{"main"}, {}, {}});
  a->run();
  const auto& x = a->graph().pt(*a->local("m.main", "x"));
  ASSERT_EQ(x.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<DataObject>(a->objects().get(*x.begin())));
  EXPECT_EQ(a->graph().pt(*a->local("m.main", "y")), x);
}

TEST(SolverRun, IllustratingExampleWithFixture) {
  FixtureEvaluator fixture = FixtureEvaluator::load(pt::fig1_transcript());
  auto a = pt::fig1_analysis(&fixture);
  a->run();
  auto names = [&](VarId v) {
    std::set<std::string> out;
    for (ObjectId o : a->graph().pt(v)) out.insert(type_name_of(o, a->objects(), a->hierarchy()));
    return out;
  };
  VarId url = *a->local("example.validate", "url");
  VarId m = *a->local("example.validate", "m");
  VarId ret = *a->local("example.str_validator", "str_validator_ret");
  EXPECT_EQ(names(url), (std::set<std::string>{"str"}));
  EXPECT_EQ(names(m), (std::set<std::string>{"re.Match"}));
  for (ObjectId o : a->graph().pt(ret)) EXPECT_TRUE(a->graph().pt(url).count(o));
  const auto& c = std::get<ConstObject>(a->objects().get(*a->graph().pt(url).begin()));
  EXPECT_EQ(c.repr, "'p abcd'");
  EXPECT_TRUE(fixture.unanswered().empty());
}
