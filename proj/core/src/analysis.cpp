#include "poto/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poto/parser.hpp"

namespace poto {

namespace {

bool has_test_segment(const std::string& module) {
  std::stringstream ss(module);
  std::string seg;
  while (std::getline(ss, seg, '.')) {
    std::transform(seg.begin(), seg.end(), seg.begin(), [](unsigned char c) { return std::tolower(c); });
    if (seg == "test" || seg == "tests") return true;
  }
  return false;
}

nlohmann::json describe(ObjectId o, const ObjectTable& objects, const Hierarchy& hierarchy,
                        const FunctionRegistry& functions) {
  const AbstractObject& obj = objects.get(o);
  nlohmann::json d;
  d["tag"] = object_tag(obj);
  if (const auto* data = std::get_if<DataObject>(&obj)) {
    d["class"] = hierarchy.record(data->cls).qualified_name();
    d["site"] = functions.info(data->site.function).full_name() + "#" + std::to_string(data->site.ordinal);
  } else if (const auto* f = std::get_if<MetaFuncObject>(&obj)) {
    d["def"] = functions.info(f->def).full_name();
    if (f->bound_receiver.valid()) d["self"] = describe(f->bound_receiver, objects, hierarchy, functions);
  } else if (const auto* c = std::get_if<MetaClsObject>(&obj)) {
    d["class"] = hierarchy.record(c->cls).qualified_name();
  } else {
    const auto& k = std::get<ConstObject>(obj);
    d["type_name"] = k.type_name;
    d["repr"] = k.repr;
  }
  return d;
}

}  // namespace

Analysis::Analysis(std::vector<ModuleUnit> units, std::filesystem::path root, Evaluator* evaluator,
                   AnalysisOptions options, Diagnostics diags)
    : diags_(std::move(diags)),
      options_(std::move(options)),
      package_(make_package(std::move(units), std::move(root), diags_)),
      globals_(init_global_env(package_.units, package_.functions, package_.imports, vars_, &diags_)),
      hierarchy_(Hierarchy::build(package_, globals_, &diags_)) {
  if (evaluator) session_ = std::make_unique<ConcreteSession>(*evaluator, objects_, &diags_, options_.concrete);
  solver_ = std::make_unique<Solver>(context(), graph_, table_);
  entries_ = discover_entry_points(package_.functions, options_.entries, &diags_);
}

std::unique_ptr<Analysis> Analysis::from_directory(const std::filesystem::path& root, Evaluator* evaluator,
                                                   AnalysisOptions options) {
  Diagnostics diags;
  PackageOptions package_options;
  package_options.tests_dir = options.tests_dir;
  auto units = parse_package(root, diags, package_options);
  return std::unique_ptr<Analysis>(
      new Analysis(std::move(units), root, evaluator, std::move(options), std::move(diags)));
}

std::unique_ptr<Analysis> Analysis::from_sources(const std::vector<Source>& sources, Evaluator* evaluator,
                                                 AnalysisOptions options) {
  Diagnostics diags;
  std::vector<ModuleUnit> units;
  for (const auto& [module, text] : sources) {
    try {
      units.push_back(parse_source(module, text, module + ".py", has_test_segment(module)));
    } catch (const py::ParseError& e) {
      diags.report(module + ".py", e.line(), std::string("syntax error, module skipped: ") + e.what());
    }
  }
  std::sort(units.begin(), units.end(),
            [](const ModuleUnit& a, const ModuleUnit& b) { return a.module_name < b.module_name; });
  return std::unique_ptr<Analysis>(new Analysis(std::move(units), {}, evaluator, std::move(options), std::move(diags)));
}

TranslatorContext Analysis::context() {
  return TranslatorContext{package_, globals_, hierarchy_, vars_, objects_, session_.get(), &diags_};
}

void Analysis::run() { solver_->run(entries_); }

KeyedTypeResult Analysis::points_to_types() const {
  InferContext ctx{package_, globals_, hierarchy_, vars_, objects_};
  return infer_types(ctx, graph_, table_);
}

KeyedTypeResult Analysis::types() const { return merge(points_to_types(), shallow_scan(package_)); }

std::string Analysis::dump_tac() const {
  std::string out;
  for (FunctionId f : table_.ids()) {
    out += dump_function(table_.at(f), vars_, objects_, hierarchy_, package_.functions);
  }
  return out;
}

std::string Analysis::variable_name(VarId v) const {
  const VarInfo& info = vars_.info(v);
  return package_.functions.info(info.owner).full_name() + "::" + vars_.display(v);
}

std::optional<VarId> Analysis::local(std::string_view function_full_name, std::string_view name) const {
  for (FunctionId f : table_.ids()) {
    if (package_.functions.info(f).full_name() != function_full_name) continue;
    return table_.at(f).env.lookup(name);
  }
  return std::nullopt;
}

std::string Analysis::export_graph() const {
  nlohmann::json doc = nlohmann::json::object();
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    VarId v(static_cast<std::uint32_t>(i));
    const ObjectSet& pt = graph_.pt(v);
    if (pt.empty()) continue;
    nlohmann::json objs = nlohmann::json::array();
    for (ObjectId o : pt) objs.push_back(describe(o, objects_, hierarchy_, package_.functions));
    std::string name = variable_name(v);
    // A comprehension variable in module scope can shadow a global.
    if (doc.contains(name)) name += "#" + std::to_string(i);
    doc[name] = std::move(objs);
  }
  return doc.dump(2) + "\n";
}

}  // namespace poto
