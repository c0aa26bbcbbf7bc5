#include "poto/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "poto/parser.hpp"

namespace poto {
namespace fs = std::filesystem;

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool starts_with_path(const fs::path& path, const fs::path& prefix) {
  auto p = path.begin();
  for (auto q = prefix.begin(); q != prefix.end(); ++q, ++p) {
    if (q->empty() || *q == ".") continue;
    if (p == path.end() || *p != *q) return false;
  }
  return true;
}

std::string module_name_for(const fs::path& relative) {
  std::string name;
  fs::path stem_path = relative;
  stem_path.replace_extension();
  for (const auto& part : stem_path) {
    if (!name.empty()) name += ".";
    name += part.string();
  }
  const std::string init_suffix = ".__init__";
  if (name.size() > init_suffix.size() &&
      name.compare(name.size() - init_suffix.size(), init_suffix.size(), init_suffix) == 0) {
    name.resize(name.size() - init_suffix.size());
  }
  return name;
}

bool is_init_file(const fs::path& p) { return p.filename() == "__init__.py"; }

std::string parent_module(const std::string& m) {
  auto dot = m.rfind('.');
  return dot == std::string::npos ? std::string() : m.substr(0, dot);
}

// Visits statements that execute in the same scope: descends into compound
// statement blocks but not into function or class bodies.
template <typename F>
void for_each_scope_stmt(const py::StmtList& body, F&& f) {
  for (const auto& s : body) {
    f(*s);
    if (s->kind == py::StmtKind::FunctionDef || s->kind == py::StmtKind::ClassDef) continue;
    for (const py::StmtList* block : s->blocks()) for_each_scope_stmt(*block, f);
  }
}

template <typename F>
void for_each_stmt_deep(const py::StmtList& body, F&& f) {
  for (const auto& s : body) {
    f(*s);
    for (const py::StmtList* block : s->blocks()) for_each_stmt_deep(*block, f);
  }
}

void collect_target_names(const py::Expr& target, std::vector<std::pair<std::string, int>>& out) {
  switch (target.kind) {
    case py::ExprKind::Name:
      out.emplace_back(target.text, target.line());
      break;
    case py::ExprKind::Tuple:
    case py::ExprKind::List:
      for (const auto& e : target.elts) collect_target_names(*e, out);
      break;
    case py::ExprKind::Starred:
      collect_target_names(*target.value, out);
      break;
    default:
      break;
  }
}

}  // namespace

ModuleUnit parse_source(std::string module_name, std::string source, fs::path source_path,
                        bool is_test) {
  ModuleUnit unit;
  unit.module_name = std::move(module_name);
  unit.source_path = std::move(source_path);
  unit.tree = std::make_unique<py::Module>(py::parse_module(std::move(source)));
  unit.is_test = is_test;
  return unit;
}

std::vector<ModuleUnit> parse_package(const fs::path& root, Diagnostics& diags,
                                      const PackageOptions& options) {
  std::error_code ec;
  if (!fs::exists(root, ec) || !fs::is_directory(root, ec)) {
    throw ConfigError("package root does not exist or is not a directory: " + root.string());
  }
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied);
       it != fs::recursive_directory_iterator(); ++it) {
    const auto& entry = *it;
    std::string name = entry.path().filename().string();
    if (entry.is_directory()) {
      if (name == "__pycache__" || (!name.empty() && name[0] == '.')) it.disable_recursion_pending();
      continue;
    }
    if (entry.is_regular_file() && entry.path().extension() == ".py") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::optional<fs::path> tests_dir;
  if (options.tests_dir) {
    tests_dir = options.tests_dir->is_absolute() ? fs::relative(*options.tests_dir, root)
                                                 : options.tests_dir->lexically_normal();
  }

  std::vector<ModuleUnit> units;
  std::set<std::string> seen;
  for (const auto& file : files) {
    fs::path relative = fs::relative(file, root);
    bool is_test = false;
    if (tests_dir) {
      is_test = starts_with_path(relative, *tests_dir);
    } else {
      for (const auto& seg : relative.parent_path()) {
        std::string lower = lowercase(seg.string());
        if (lower == "test" || lower == "tests") is_test = true;
      }
    }
    std::string module = module_name_for(relative);
    if (!seen.insert(module).second) {
      diags.report(file.string(), 0, "duplicate module '" + module + "' skipped");
      continue;
    }
    std::ifstream in(file, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string source = buffer.str();
    if (source.rfind("\xEF\xBB\xBF", 0) == 0) source.erase(0, 3);
    try {
      units.push_back(parse_source(module, std::move(source), file, is_test));
    } catch (const py::ParseError& e) {
      diags.report(file.string(), e.line(), std::string("syntax error, module skipped: ") + e.what());
    }
  }
  std::sort(units.begin(), units.end(),
            [](const ModuleUnit& a, const ModuleUnit& b) { return a.module_name < b.module_name; });
  return units;
}

// ---- ModuleIndex -------------------------------------------------------------

ModuleIndex::ModuleIndex(const std::vector<ModuleUnit>& units, std::string root_name)
    : root_name_(std::move(root_name)) {
  for (const auto& u : units) modules_[u.module_name] = is_init_file(u.source_path);
}

std::optional<std::string> ModuleIndex::resolve(std::string_view dotted) const {
  if (modules_.count(dotted)) return std::string(dotted);
  if (!root_name_.empty()) {
    if (dotted == root_name_ && modules_.count("__init__")) return std::string("__init__");
    if (dotted.size() > root_name_.size() + 1 && dotted.substr(0, root_name_.size()) == root_name_ &&
        dotted[root_name_.size()] == '.') {
      std::string_view rest = dotted.substr(root_name_.size() + 1);
      if (modules_.count(rest)) return std::string(rest);
    }
  }
  return std::nullopt;
}

bool ModuleIndex::contains(std::string_view module) const { return modules_.count(module) != 0; }

bool ModuleIndex::is_package(std::string_view module) const {
  auto it = modules_.find(module);
  return it != modules_.end() && it->second;
}

// ---- imports -----------------------------------------------------------------

std::vector<ImportRecord> classify_imports(const std::vector<ModuleUnit>& units,
                                           const ModuleIndex& index, Diagnostics* diags) {
  std::vector<ImportRecord> records;
  for (const auto& unit : units) {
    std::set<const py::Stmt*> module_level;
    for_each_scope_stmt(unit.tree->body, [&](const py::Stmt& s) { module_level.insert(&s); });
    bool unit_is_package = index.is_package(unit.module_name) || unit.source_path.filename() == "__init__.py";

    for_each_stmt_deep(unit.tree->body, [&](const py::Stmt& s) {
      if (s.kind == py::StmtKind::Import) {
        for (const auto& alias : s.aliases) {
          ImportRecord r;
          r.importing_module = unit.module_name;
          r.target = alias.name;
          r.line = alias.line;
          r.module_level = module_level.count(&s) != 0;
          std::string first = alias.name.substr(0, alias.name.find('.'));
          r.bound_name = alias.asname.empty() ? first : alias.asname;
          r.module_alias = index.resolve(alias.asname.empty() ? first : alias.name);
          bool internal = false;
          std::string prefix;
          for (std::size_t pos = 0; pos != std::string::npos;) {
            pos = alias.name.find('.', pos + 1);
            prefix = alias.name.substr(0, pos);
            if (index.resolve(prefix)) internal = true;
          }
          r.kind = internal ? ImportKind::Internal : ImportKind::External;
          r.statement_text = "import " + alias.name + (alias.asname.empty() ? "" : " as " + alias.asname);
          records.push_back(std::move(r));
        }
      } else if (s.kind == py::StmtKind::ImportFrom) {
        std::string base = s.module;
        bool resolvable = true;
        if (s.level > 0) {
          std::string pkg = unit_is_package ? unit.module_name : parent_module(unit.module_name);
          if (unit.module_name == "__init__") pkg.clear();
          for (int i = 1; i < s.level; ++i) {
            if (pkg.empty()) {
              resolvable = false;
              break;
            }
            pkg = parent_module(pkg);
          }
          base = pkg.empty() ? s.module : (s.module.empty() ? pkg : pkg + "." + s.module);
          if (!resolvable && diags) {
            diags->report(unit.source_path.string(), s.line(), "relative import beyond package root");
          }
        }
        std::string spelled = std::string(static_cast<std::size_t>(s.level), '.') + s.module;
        for (const auto& alias : s.aliases) {
          ImportRecord r;
          r.importing_module = unit.module_name;
          r.is_from = true;
          r.line = alias.line;
          r.module_level = module_level.count(&s) != 0;
          r.imported_name = alias.name;
          r.from_module = index.resolve(base).value_or(base);
          if (alias.name == "*") {
            r.is_star = true;
            r.bound_name = "*";
            r.target = base + ".*";
          } else {
            r.bound_name = alias.asname.empty() ? alias.name : alias.asname;
            r.target = base.empty() ? alias.name : base + "." + alias.name;
            r.module_alias = index.resolve(r.target);
          }
          bool internal = s.level > 0 || index.resolve(base).has_value() || r.module_alias.has_value();
          r.kind = internal ? ImportKind::Internal : ImportKind::External;
          r.statement_text = "from " + spelled + " import " + alias.name +
                             (alias.asname.empty() ? "" : " as " + alias.asname);
          if (r.is_star && diags) {
            diags->report(unit.source_path.string(), r.line,
                          "star import from '" + spelled + "' ignored");
          }
          records.push_back(std::move(r));
        }
      }
    });
  }
  return records;
}

// ---- functions -----------------------------------------------------------------

FunctionId FunctionRegistry::add(FunctionInfo info) {
  FunctionId id(static_cast<std::uint32_t>(functions_.size()));
  info.id = id;
  if (info.def) by_def_[info.def] = id;
  if (info.is_module_init) inits_[info.module] = id;
  functions_.push_back(std::move(info));
  return id;
}

FunctionRegistry FunctionRegistry::build(const std::vector<ModuleUnit>& units) {
  FunctionRegistry reg;
  for (const auto& unit : units) {
    FunctionInfo init;
    init.module = unit.module_name;
    init.qualname = "<module>";
    init.name = unit.module_name;
    init.unit = &unit;
    init.is_module_init = true;
    init.module_level = true;
    reg.add(std::move(init));
  }
  for (const auto& unit : units) {
    // Nested functions: recurse through compound blocks, stop at classes.
    auto add_nested = [&](auto&& self, const py::StmtList& body, const std::string& prefix) -> void {
      for_each_scope_stmt(body, [&](const py::Stmt& s) {
        if (s.kind != py::StmtKind::FunctionDef) return;
        FunctionInfo f;
        f.module = unit.module_name;
        f.qualname = prefix + s.name;
        f.name = s.name;
        f.def = &s;
        f.unit = &unit;
        std::string q = f.qualname;
        reg.add(std::move(f));
        self(self, s.body, q + ".");
      });
    };
    for_each_scope_stmt(unit.tree->body, [&](const py::Stmt& s) {
      if (s.kind == py::StmtKind::FunctionDef) {
        FunctionInfo f;
        f.module = unit.module_name;
        f.qualname = s.name;
        f.name = s.name;
        f.def = &s;
        f.unit = &unit;
        f.module_level = true;
        reg.add(std::move(f));
        add_nested(add_nested, s.body, s.name + ".");
      } else if (s.kind == py::StmtKind::ClassDef) {
        for_each_scope_stmt(s.body, [&](const py::Stmt& m) {
          if (m.kind != py::StmtKind::FunctionDef) return;
          FunctionInfo f;
          f.module = unit.module_name;
          f.qualname = s.name + "." + m.name;
          f.name = m.name;
          f.def = &m;
          f.unit = &unit;
          f.enclosing_class = s.name;
          std::string q = f.qualname;
          reg.add(std::move(f));
          add_nested(add_nested, m.body, q + ".");
        });
      }
    });
  }
  return reg;
}

std::optional<FunctionId> FunctionRegistry::of_def(const py::Stmt* def) const {
  auto it = by_def_.find(def);
  if (it == by_def_.end()) return std::nullopt;
  return it->second;
}

std::optional<FunctionId> FunctionRegistry::module_init(std::string_view module) const {
  auto it = inits_.find(module);
  if (it == inits_.end()) return std::nullopt;
  return it->second;
}

std::vector<FunctionId> FunctionRegistry::by_qualname(std::string_view module,
                                                      std::string_view qualname) const {
  std::vector<FunctionId> out;
  for (const auto& f : functions_) {
    if (f.module == module && f.qualname == qualname) out.push_back(f.id);
  }
  return out;
}

// ---- global environment --------------------------------------------------------

const GlobalBinding* GlobalEnv::find(std::string_view qualified) const {
  auto it = bindings_.find(qualified);
  return it == bindings_.end() ? nullptr : &it->second;
}

std::optional<VarId> GlobalEnv::lookup(std::string_view qualified) const {
  const GlobalBinding* b = find(qualified);
  if (!b) return std::nullopt;
  return b->var;
}

GlobalEnv init_global_env(const std::vector<ModuleUnit>& units, const FunctionRegistry& functions,
                          const std::vector<ImportRecord>& imports, VariableTable& vars,
                          Diagnostics* diags) {
  GlobalEnv env;
  for (const auto& unit : units) {
    const std::string& m = unit.module_name;
    FunctionId owner = functions.module_init(m).value_or(FunctionId{});
    std::uint32_t ordinal = 0;
    struct Source {
      BindingKind kind;
      int line;
    };
    std::map<std::string, std::vector<Source>> sources;
    std::vector<std::string> order;
    auto note = [&](const std::string& name, BindingKind kind, int line) {
      auto& list = sources[name];
      if (list.empty()) order.push_back(name);
      list.push_back(Source{kind, line});
    };

    // Classes, then functions, then assignments and import aliases.
    for_each_scope_stmt(unit.tree->body, [&](const py::Stmt& s) {
      if (s.kind == py::StmtKind::ClassDef) note(s.name, BindingKind::Class, s.line());
    });
    for_each_scope_stmt(unit.tree->body, [&](const py::Stmt& s) {
      if (s.kind == py::StmtKind::FunctionDef) note(s.name, BindingKind::Function, s.line());
    });
    for_each_scope_stmt(unit.tree->body, [&](const py::Stmt& s) {
      std::vector<std::pair<std::string, int>> names;
      switch (s.kind) {
        case py::StmtKind::Assign:
          for (const auto& t : s.targets) collect_target_names(*t, names);
          break;
        case py::StmtKind::AugAssign:
        case py::StmtKind::AnnAssign:
        case py::StmtKind::For:
          collect_target_names(*s.target, names);
          break;
        case py::StmtKind::With:
          for (const auto& item : s.items) {
            if (item.target) collect_target_names(*item.target, names);
          }
          break;
        case py::StmtKind::Try:
          for (const auto& h : s.handlers) {
            if (!h.name.empty()) names.emplace_back(h.name, h.line);
          }
          break;
        default:
          break;
      }
      for (auto& [name, line] : names) note(name, BindingKind::Assignment, line);
    });
    for (const auto& r : imports) {
      if (r.importing_module != m || !r.module_level || r.is_star) continue;
      note(r.bound_name, r.kind == ImportKind::Internal ? BindingKind::InternalImport
                                                       : BindingKind::ExternalImport,
           r.line);
    }

    for (const auto& name : order) {
      const auto& list = sources[name];
      GlobalBinding b;
      b.kind = list.front().kind;
      b.line = list.front().line;
      b.external_only = std::all_of(list.begin(), list.end(), [](const Source& src) {
        return src.kind == BindingKind::ExternalImport;
      });
      bool has_import = false, has_def = false, reportable = false;
      for (const auto& src : list) {
        has_import |= src.kind == BindingKind::InternalImport || src.kind == BindingKind::ExternalImport;
        has_def |= src.kind == BindingKind::Class || src.kind == BindingKind::Function;
        reportable |= src.kind == BindingKind::Assignment;
      }
      if (has_import && has_def && diags) {
        diags->report(unit.source_path.string(), b.line,
                      "name '" + name + "' bound by both an import and a definition; one binding kept");
      }
      b.var = vars.fresh(owner, name, VarRole::Global, ordinal++);
      vars.info(b.var).reportable = reportable;
      env.bindings_.emplace(m + "." + name, b);
    }
  }
  return env;
}

// ---- entry points --------------------------------------------------------------

std::vector<FunctionId> discover_entry_points(const FunctionRegistry& functions,
                                              const std::vector<std::string>& extra,
                                              Diagnostics* diags) {
  std::set<FunctionId> chosen;
  for (const auto& f : functions.all()) {
    if (f.is_module_init || !f.unit || !f.unit->is_test) continue;
    bool class_level = !f.enclosing_class.empty() &&
                       f.qualname == f.enclosing_class + "." + f.name;
    if (f.module_level || class_level) chosen.insert(f.id);
  }
  for (const auto& name : extra) {
    bool found = false;
    for (const auto& f : functions.all()) {
      if (f.is_module_init) continue;
      if (f.full_name() == name || f.qualname == name) {
        chosen.insert(f.id);
        found = true;
      }
    }
    if (!found && diags) diags->report("<entry>", 0, "entry point '" + name + "' not found");
  }
  std::vector<FunctionId> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end(), [&](FunctionId a, FunctionId b) {
    const auto& fa = functions.info(a);
    const auto& fb = functions.info(b);
    return std::tie(fa.module, fa.qualname, a) < std::tie(fb.module, fb.qualname, b);
  });
  if (out.empty() && diags) diags->report("<entry>", 0, "warning: no entry points");
  return out;
}

// ---- package -------------------------------------------------------------------

const ModuleUnit* Package::unit(std::string_view module) const {
  for (const auto& u : units) {
    if (u.module_name == module) return &u;
  }
  return nullptr;
}

std::vector<std::string> Package::external_imports(std::string_view module) const {
  std::vector<std::string> out;
  for (const auto& r : imports) {
    if (r.importing_module != module || r.kind != ImportKind::External) continue;
    if (std::find(out.begin(), out.end(), r.statement_text) == out.end()) out.push_back(r.statement_text);
  }
  return out;
}

const ImportRecord* Package::import_binding(std::string_view module, std::string_view bound_name) const {
  const ImportRecord* fallback = nullptr;
  for (const auto& r : imports) {
    if (r.importing_module != module || r.bound_name != bound_name) continue;
    if (r.module_level) return &r;
    if (!fallback) fallback = &r;
  }
  return fallback;
}

Package make_package(std::vector<ModuleUnit> units, fs::path root, Diagnostics& diags) {
  Package p;
  p.root = std::move(root);
  p.units = std::move(units);
  p.index = ModuleIndex(p.units, p.root.empty() ? std::string() : fs::absolute(p.root).lexically_normal().filename().string());
  p.imports = classify_imports(p.units, p.index, &diags);
  p.functions = FunctionRegistry::build(p.units);
  return p;
}

}  // namespace poto

namespace poto {

std::optional<std::string> resolve_qualified(const Package& package, const GlobalEnv& globals,
                                             std::string_view module,
                                             const std::vector<std::string>& parts) {
  std::string current(module);
  std::vector<std::string> rest = parts;
  for (int depth = 0; depth < 64 && !rest.empty(); ++depth) {
    std::string name = rest.front();
    rest.erase(rest.begin());
    std::string key = current + "." + name;
    const GlobalBinding* b = globals.find(key);
    if (!b) {
      if (package.index.contains(key)) {
        current = key;
        continue;
      }
      return std::nullopt;
    }
    if (b->kind == BindingKind::InternalImport) {
      const ImportRecord* r = package.import_binding(current, name);
      if (!r) return std::nullopt;
      if (r->module_alias) {
        current = *r->module_alias;
        continue;
      }
      if (!r->is_from) {
        std::string first = r->target.substr(0, r->target.find('.'));
        current = r->bound_name == first ? first : r->target;
        continue;
      }
      if (!package.index.contains(r->from_module)) return std::nullopt;
      current = r->from_module;
      rest.insert(rest.begin(), r->imported_name);
      continue;
    }
    if (!rest.empty()) return std::nullopt;
    return key;
  }
  return std::nullopt;
}

}  // namespace poto
