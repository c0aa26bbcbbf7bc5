#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

namespace poto::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return fs::path(POTO_FIXTURE_DIR); }

TempDir::TempDir() {
  static std::mt19937_64 rng(std::random_device{}());
  path_ = fs::temp_directory_path() / ("poto-test-" + std::to_string(rng()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path TempDir::write(const std::string& relative, const std::string& text) const {
  fs::path p = path_ / relative;
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<Analysis::Source> fig1_sources() {
  return {{"example", read_file(fixture_dir() / "fig1" / "example.py")}};
}

std::unique_ptr<Analysis> fig1_analysis(Evaluator* evaluator) {
  AnalysisOptions options;
  options.entries = {"main"};
  return Analysis::from_sources(fig1_sources(), evaluator, options);
}

fs::path fig1_transcript() { return fixture_dir() / "fig1.transcript.jsonl"; }

// ---- dumps --------------------------------------------------------------------

namespace {

const std::regex& temp_token() {
  static const std::regex re(R"(\bt\d+\b)");
  return re;
}

std::size_t count_token(const std::vector<std::string>& lines, const std::string& token) {
  std::regex re("\\b" + token + "\\b");
  std::size_t n = 0;
  for (const auto& line : lines) {
    n += static_cast<std::size_t>(std::distance(std::sregex_iterator(line.begin(), line.end(), re),
                                                std::sregex_iterator()));
  }
  return n;
}

}  // namespace

std::vector<std::string> function_lines(const Analysis& analysis, std::string_view full_name) {
  std::string prefix = std::string(full_name) + ": ";
  std::vector<std::string> out;
  std::istringstream in(analysis.dump_tac());
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) out.push_back(line.substr(prefix.size()));
  }
  return out;
}

std::vector<std::string> collapse_copies(const std::vector<std::string>& input) {
  std::vector<std::string> lines = input;
  static const std::regex copy(R"(^(\S+) = (t\d+)$)");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::smatch m;
    if (!std::regex_match(lines[i], m, copy)) continue;
    std::string lhs = m[1];
    std::string temp = m[2];
    if (count_token(lines, temp) != 2) continue;
    for (std::size_t j = 0; j < i; ++j) {
      if (lines[j].rfind(temp + " = ", 0) == 0) {
        lines[j] = lhs + lines[j].substr(temp.size());
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(i));
        --i;
        break;
      }
    }
  }
  return lines;
}

std::vector<std::string> rename_temps(const std::vector<std::string>& lines) {
  std::map<std::string, std::string> names;
  std::vector<std::string> out;
  for (const auto& line : lines) {
    std::string renamed;
    auto begin = std::sregex_iterator(line.begin(), line.end(), temp_token());
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      renamed += line.substr(last, static_cast<std::size_t>(it->position()) - last);
      auto [pos, inserted] = names.try_emplace(it->str(), "t" + std::to_string(names.size() + 1));
      renamed += pos->second;
      last = static_cast<std::size_t>(it->position() + it->length());
    }
    renamed += line.substr(last);
    out.push_back(std::move(renamed));
  }
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// ---- generated programs ---------------------------------------------------------

namespace {

constexpr const char* kPrelude = R"(class A:
    def __init__(self, x):
        self.f = x

    def get(self):
        return self.f


class B(A):
    def __call__(self, y):
        return y


def ident(x):
    return x


def make():
    def inner(y):
        return y
    return inner
)";

// Required forms first: allocation, copy, field write, field read, call.
const std::vector<std::string> kRequired = {"{v} = [{w}]", "{v} = {w}", "{v}.f = {w}", "{v} = {w}.f",
                                            "{v} = ident({w})"};
const std::vector<std::string> kTemplates = {
    "{v} = A({w})",    "{v} = B({w})",    "{v} = {w}",     "{v}.f = {w}",   "{v} = {w}.f",
    "{v} = {w}.get()", "{v} = ident({w})", "{v} = make()",  "{v} = {w}({u})", "{v} = [{w}]",
    "{v} = {w}[0]",    "{v} = A",         "{v} = ident",   "{v}.g = {w}.get", "{v} = {w}.g",
    "{v}[0] = {w}",    "{v} = {w}.get",   "{v} = (({w}))",
};

std::string fill(std::string tmpl, std::mt19937& rng) {
  static const char* kVars[] = {"a", "b", "c", "d", "e"};
  std::uniform_int_distribution<int> pick(0, 4);
  for (const char* slot : {"{v}", "{w}", "{u}"}) {
    std::size_t at = tmpl.find(slot);
    if (at != std::string::npos) tmpl.replace(at, 3, kVars[pick(rng)]);
  }
  return tmpl;
}

}  // namespace

std::vector<GeneratedProgram> generated_corpus(std::size_t count, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<GeneratedProgram> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> length(kRequired.size(), 12);
    std::size_t n = length(rng);
    std::vector<std::string> lines = kRequired;
    std::uniform_int_distribution<std::size_t> any(0, kTemplates.size() - 1);
    // Seed objects early so most templates see non-empty sets.
    lines.insert(lines.begin(), i % 2 ? "{v} = B({w})" : "{v} = A({w})");
    while (lines.size() < n) lines.push_back(kTemplates[any(rng)]);
    std::shuffle(lines.begin() + 1, lines.end(), rng);
    if (lines.size() > 12) lines.resize(12);

    std::string body = "def main(a, b, c, d, e):\n";
    for (auto& l : lines) body += "    " + fill(l, rng) + "\n";

    GeneratedProgram p;
    p.name = "gen" + std::to_string(i);
    p.body_statements = lines.size();
    if (i % 3 == 2) {
      p.sources = {{"lib", kPrelude}, {"app", "from lib import A, B, ident, make\n\n\n" + body}};
      p.entries = {"app.main"};
    } else {
      p.sources = {{"prog", std::string(kPrelude) + "\n\n" + body}};
      p.entries = {"prog.main"};
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<GeneratedProgram> concrete_corpus() {
  std::vector<GeneratedProgram> out;
  out.push_back({"fig1", fig1_sources(), {"main"}, 0});
  out.push_back({"externals",
                 {{"ext", R"(import re
import os.path
from collections import OrderedDict

LIMIT = 10


def compile_all(patterns):
    out = [re.compile(p) for p in patterns]
    return out


def main():
    found = compile_all(["a+", "b"])
    first = found[0].match("aa")
    joined = os.path.join("a", "b")
    table = OrderedDict()
    table["k"] = {"v": (1, 2.0, None)}
    size = len(table) + LIMIT
    return first, joined, size
)"}},
                 {"main"},
                 0});
  out.push_back({"classes",
                 {{"shapes", R"(class Shape:
    def __init__(self, name):
        self.name = name

    def describe(self):
        return "shape " + self.name


class Square(Shape):
    def __init__(self, side):
        super().__init__("square")
        self.side = side

    def area(self):
        return self.side * self.side
)"},
                  {"tests.test_shapes", R"(from shapes import Square


def test_area():
    s = Square(2)
    a = s.area()
    d = s.describe()
    assert a == 4
)"}},
                 {},
                 0});
  return out;
}

std::unique_ptr<Analysis> analyze(const GeneratedProgram& program, Evaluator* evaluator) {
  AnalysisOptions options;
  options.entries = program.entries;
  auto analysis = Analysis::from_sources(program.sources, evaluator, options);
  analysis->run();
  return analysis;
}

// ---- graph comparison --------------------------------------------------------------

std::string canonical_var(VarId v, const VariableTable& vars, const FunctionRegistry& functions) {
  const VarInfo& info = vars.info(v);
  const FunctionInfo& owner = functions.info(info.owner);
  if (info.role == VarRole::Global) return "G:" + owner.module + "." + info.display_name;
  return owner.full_name() + "#" + std::to_string(info.ordinal);
}

std::string canonical_object(ObjectId o, const ObjectTable& objects, const Hierarchy& hierarchy,
                             const FunctionRegistry& functions) {
  const AbstractObject& obj = objects.get(o);
  if (const auto* d = std::get_if<DataObject>(&obj)) {
    return "data:" + hierarchy.record(d->cls).qualified_name() + "@" + functions.info(d->site.function).full_name() +
           "#" + std::to_string(d->site.ordinal);
  }
  if (const auto* f = std::get_if<MetaFuncObject>(&obj)) {
    std::string s = "fn:" + functions.info(f->def).full_name();
    if (f->bound_receiver.valid()) s += "[" + canonical_object(f->bound_receiver, objects, hierarchy, functions) + "]";
    return s;
  }
  if (const auto* c = std::get_if<MetaClsObject>(&obj)) return "cls:" + hierarchy.record(c->cls).qualified_name();
  const auto& k = std::get<ConstObject>(obj);
  return "const:" + std::to_string(k.handle) + ":" + k.type_name;
}

CanonicalGraph canonical(const Analysis& analysis) {
  CanonicalGraph g;
  const auto& functions = analysis.package().functions;
  auto obj = [&](ObjectId o) { return canonical_object(o, analysis.objects(), analysis.hierarchy(), functions); };
  for (std::size_t i = 0; i < analysis.vars().size(); ++i) {
    VarId v(static_cast<std::uint32_t>(i));
    const ObjectSet& pt = analysis.graph().pt(v);
    if (pt.empty()) continue;
    auto& into = g.vars[canonical_var(v, analysis.vars(), functions)];
    for (ObjectId o : pt) into.insert(obj(o));
  }
  for (const auto& [key, set] : analysis.graph().fields()) {
    if (set.empty()) continue;
    auto& into = g.fields[obj(key.first) + "." + key.second];
    for (ObjectId o : set) into.insert(obj(o));
  }
  return g;
}

std::string describe_difference(const CanonicalGraph& expected, const CanonicalGraph& actual) {
  std::ostringstream out;
  auto side = [&](const char* what, const auto& a, const auto& b) {
    std::set<std::string> keys;
    for (const auto& [k, v] : a) keys.insert(k);
    for (const auto& [k, v] : b) keys.insert(k);
    for (const auto& k : keys) {
      auto ia = a.find(k);
      auto ib = b.find(k);
      std::set<std::string> sa = ia == a.end() ? std::set<std::string>{} : ia->second;
      std::set<std::string> sb = ib == b.end() ? std::set<std::string>{} : ib->second;
      if (sa == sb) continue;
      out << what << " " << k << ": expected {";
      for (const auto& s : sa) out << " " << s;
      out << " } actual {";
      for (const auto& s : sb) out << " " << s;
      out << " }\n";
    }
  };
  side("var", expected.vars, actual.vars);
  side("field", expected.fields, actual.fields);
  return out.str();
}

CanonicalGraph naive_fixpoint(const GeneratedProgram& program, unsigned shuffle_seed) {
  AnalysisOptions options;
  options.entries = program.entries;
  auto analysis = Analysis::from_sources(program.sources, nullptr, options);
  TranslatorContext ctx = analysis->context();
  Translator translator(ctx);
  const FunctionRegistry& functions = analysis->package().functions;
  const Hierarchy& hierarchy = analysis->hierarchy();

  std::map<VarId, std::set<ObjectId>> pt;
  std::map<std::pair<ObjectId, std::string>, std::set<ObjectId>> heap;
  std::map<FunctionId, FunctionEntry> phi;
  bool changed = false;

  auto add = [&](std::set<ObjectId>& into, ObjectId o) {
    if (into.insert(o).second) changed = true;
  };
  auto add_all = [&](std::set<ObjectId>& into, std::set<ObjectId> from) {
    for (ObjectId o : from) add(into, o);
  };
  auto reach = [&](FunctionId f) -> const FunctionEntry& {
    auto it = phi.find(f);
    if (it == phi.end()) {
      it = phi.emplace(f, translator.translate_function(f)).first;
      changed = true;
    }
    return it->second;
  };
  auto invoke = [&](FunctionId def, ObjectId receiver, const CallStmt& call, bool flow_ret) {
    const FunctionEntry& callee = reach(def);
    std::size_t first = 0;
    if (receiver.valid()) {
      if (!callee.params.empty()) add(pt[callee.params[0]], receiver);
      first = 1;
    }
    for (std::size_t i = 0; i < call.args.size() && first + i < callee.params.size(); ++i) {
      add_all(pt[callee.params[first + i]], pt[call.args[i]]);
    }
    if (flow_ret && callee.ret.valid()) add_all(pt[call.lhs], pt[callee.ret]);
  };

  for (std::size_t i = 0; i < hierarchy.size(); ++i) {
    const ClassRecord& r = hierarchy.record(ClassId(static_cast<std::uint32_t>(i)));
    if (r.builtin || r.module.empty()) continue;
    if (auto v = analysis->globals().lookup(r.module + "." + r.name)) pt[*v].insert(ctx.objects.meta_cls(r.id));
  }
  for (FunctionId f : analysis->entries()) reach(f);
  for (const auto& info : functions.all()) {
    if (info.is_module_init) reach(info.id);
  }

  std::mt19937 rng(shuffle_seed);
  do {
    changed = false;
    std::vector<const TacStatement*> all;
    for (const auto& [f, entry] : phi) {
      for (const auto& s : entry.statements) all.push_back(&s);
    }
    if (shuffle_seed != 0) std::shuffle(all.begin(), all.end(), rng);
    for (const TacStatement* s : all) {
      if (const auto* n = std::get_if<NewStmt>(&s->form)) {
        add(pt[n->lhs], n->object);
      } else if (const auto* c = std::get_if<CopyStmt>(&s->form)) {
        add_all(pt[c->lhs], pt[c->rhs]);
      } else if (const auto* w = std::get_if<FieldWriteStmt>(&s->form)) {
        for (ObjectId o : std::set<ObjectId>(pt[w->base])) add_all(heap[{o, w->field}], pt[w->rhs]);
      } else if (const auto* r = std::get_if<FieldReadStmt>(&s->form)) {
        for (ObjectId o : std::set<ObjectId>(pt[r->base])) {
          const AbstractObject obj = ctx.objects.get(o);
          if (const auto* d = std::get_if<DataObject>(&obj); d && r->field != kSubscriptField) {
            if (auto def = hierarchy.lookup(d->cls, r->field)) add(pt[r->lhs], ctx.objects.meta_func(*def, o));
          } else if (const auto* m = std::get_if<MetaClsObject>(&obj)) {
            if (auto def = hierarchy.lookup(m->cls, r->field)) add(pt[r->lhs], ctx.objects.meta_func(*def));
          }
          add_all(pt[r->lhs], heap[{o, r->field}]);
        }
      } else {
        const auto& call = std::get<CallStmt>(s->form);
        for (ObjectId o : std::set<ObjectId>(pt[call.callee])) {
          const AbstractObject obj = ctx.objects.get(o);
          if (const auto* d = std::get_if<DataObject>(&obj)) {
            if (auto def = hierarchy.lookup(d->cls, "__call__")) invoke(*def, o, call, true);
          } else if (const auto* m = std::get_if<MetaClsObject>(&obj)) {
            ObjectId fresh = ctx.objects.data(m->cls, call.site);
            add(pt[call.lhs], fresh);
            if (auto def = hierarchy.lookup(m->cls, "__init__")) invoke(*def, fresh, call, false);
          } else if (const auto* f = std::get_if<MetaFuncObject>(&obj)) {
            invoke(f->def, f->bound_receiver, call, true);
          }
        }
      }
    }
  } while (changed);

  CanonicalGraph g;
  auto obj = [&](ObjectId o) { return canonical_object(o, ctx.objects, hierarchy, functions); };
  for (const auto& [v, set] : pt) {
    if (set.empty()) continue;
    auto& into = g.vars[canonical_var(v, ctx.vars, functions)];
    for (ObjectId o : set) into.insert(obj(o));
  }
  for (const auto& [key, set] : heap) {
    if (set.empty()) continue;
    auto& into = g.fields[obj(key.first) + "." + key.second];
    for (ObjectId o : set) into.insert(obj(o));
  }
  return g;
}

TraceCheck run_checked(Analysis& analysis) {
  TraceCheck check;
  PointsToGraph previous;
  analysis.solver().set_observer([&](const TacStatement&, const PointsToGraph& now) {
    ++check.solves;
    if (!now.includes(previous)) ++check.shrinks;
    previous = now;
  });
  analysis.run();
  analysis.solver().set_observer({});
  check.extra_changes = analysis.solver().solve_all_once();
  return check;
}

// ---- MRO table ----------------------------------------------------------------------------

std::vector<MroCase> load_mro_table() {
  auto doc = nlohmann::json::parse(read_file(fixture_dir() / "mro_table.json"));
  std::vector<MroCase> out;
  for (const auto& h : doc) {
    MroCase c;
    c.name = h["name"].get<std::string>();
    for (const auto& cls : h["classes"]) {
      c.classes.emplace_back(cls["name"].get<std::string>(), cls["bases"].get<std::vector<std::string>>());
    }
    c.methods = h["methods"].get<std::map<std::string, std::vector<std::string>>>();
    for (const auto& [cls, mro] : h["mro"].items()) {
      if (mro.is_null()) {
        c.mro[cls] = std::nullopt;
      } else {
        c.mro[cls] = mro.get<std::vector<std::string>>();
      }
    }
    for (const auto& [cls, owners] : h["lookup"].items()) {
      for (const auto& [name, owner] : owners.items()) {
        c.lookup[cls][name] = owner.is_null() ? std::nullopt : std::optional<std::string>(owner.get<std::string>());
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace poto::testing
