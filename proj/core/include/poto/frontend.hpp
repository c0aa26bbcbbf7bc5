#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "poto/ast.hpp"
#include "poto/diagnostics.hpp"
#include "poto/ids.hpp"
#include "poto/variables.hpp"

namespace poto {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModuleUnit {
  std::string module_name;
  std::filesystem::path source_path;
  std::unique_ptr<py::Module> tree;
  bool is_test = false;
};

struct PackageOptions {
  // Overrides the default test-directory rule (any `test`/`tests` segment).
  std::optional<std::filesystem::path> tests_dir;
};

// Parses every `.py` file under root. Unparseable files are skipped with a
// diagnostic. Throws ConfigError when root does not exist.
std::vector<ModuleUnit> parse_package(const std::filesystem::path& root, Diagnostics& diags,
                                      const PackageOptions& options = {});

// Parses one in-memory module; used by tests and by parse_package.
// Throws py::ParseError.
ModuleUnit parse_source(std::string module_name, std::string source,
                        std::filesystem::path source_path = {}, bool is_test = false);

enum class ImportKind { Internal, External };

struct ImportRecord {
  std::string importing_module;
  std::string target;      // dotted path of the imported entity
  std::string bound_name;  // local alias
  ImportKind kind = ImportKind::External;

  // Package module the target resolves to when the target itself is a module.
  std::optional<std::string> module_alias;
  // For `from P import x`: resolved module P and the imported name x.
  std::string from_module;
  std::string imported_name;
  bool is_from = false;
  bool is_star = false;
  bool module_level = true;
  int line = 0;
  // Canonical source of the single-name import, replayed for concrete evaluation.
  std::string statement_text;
};

// Module name lookup that tolerates absolute imports spelled through the
// package root's own directory name.
class ModuleIndex {
 public:
  ModuleIndex() = default;
  ModuleIndex(const std::vector<ModuleUnit>& units, std::string root_name);

  std::optional<std::string> resolve(std::string_view dotted) const;
  bool contains(std::string_view module) const;
  bool is_package(std::string_view module) const;

 private:
  std::map<std::string, bool, std::less<>> modules_;  // name -> is package (__init__)
  std::string root_name_;
};

std::vector<ImportRecord> classify_imports(const std::vector<ModuleUnit>& units,
                                           const ModuleIndex& index, Diagnostics* diags = nullptr);
inline std::vector<ImportRecord> classify_imports(const std::vector<ModuleUnit>& units) {
  return classify_imports(units, ModuleIndex(units, ""));
}

// Every function definition the analysis can reach by name: module-level
// functions, methods of module-level classes, functions nested in those, and
// one synthetic initializer per module.
struct FunctionInfo {
  FunctionId id;
  std::string module;
  std::string qualname;  // "f", "C.m", "outer.inner", or "<module>"
  std::string name;      // last component; module name for initializers
  const py::Stmt* def = nullptr;
  const ModuleUnit* unit = nullptr;
  bool is_module_init = false;
  bool module_level = false;
  std::string enclosing_class;  // set for methods of module-level classes

  std::string full_name() const { return module + "." + qualname; }
};

class FunctionRegistry {
 public:
  static FunctionRegistry build(const std::vector<ModuleUnit>& units);

  const FunctionInfo& info(FunctionId f) const { return functions_.at(f.value()); }
  std::size_t size() const { return functions_.size(); }
  const std::vector<FunctionInfo>& all() const { return functions_; }

  std::optional<FunctionId> of_def(const py::Stmt* def) const;
  std::optional<FunctionId> module_init(std::string_view module) const;
  std::vector<FunctionId> by_qualname(std::string_view module, std::string_view qualname) const;

 private:
  FunctionId add(FunctionInfo info);

  std::vector<FunctionInfo> functions_;
  std::unordered_map<const py::Stmt*, FunctionId> by_def_;
  std::map<std::string, FunctionId, std::less<>> inits_;
};

enum class BindingKind { Class, Function, Assignment, InternalImport, ExternalImport };

struct GlobalBinding {
  VarId var;
  BindingKind kind = BindingKind::Assignment;
  // True when every source of this binding is an external import.
  bool external_only = false;
  int line = 0;
};

// Global environment: "M.x" -> analysis variable for every module-level class,
// function, assignment target and import alias.
class GlobalEnv {
 public:
  const GlobalBinding* find(std::string_view qualified) const;
  std::optional<VarId> lookup(std::string_view qualified) const;
  std::size_t size() const { return bindings_.size(); }
  const std::map<std::string, GlobalBinding, std::less<>>& bindings() const { return bindings_; }

 private:
  friend GlobalEnv init_global_env(const std::vector<ModuleUnit>&, const FunctionRegistry&,
                                   const std::vector<ImportRecord>&, VariableTable&, Diagnostics*);
  std::map<std::string, GlobalBinding, std::less<>> bindings_;
};

GlobalEnv init_global_env(const std::vector<ModuleUnit>& units, const FunctionRegistry& functions,
                          const std::vector<ImportRecord>& imports, VariableTable& vars,
                          Diagnostics* diags = nullptr);

// Test modules' functions (module level and class level) plus `extra`, in
// lexicographic (module, qualname) order. `extra` accepts "module.func",
// "module.Class.method" or a bare qualname matched in every module.
std::vector<FunctionId> discover_entry_points(const FunctionRegistry& functions,
                                              const std::vector<std::string>& extra,
                                              Diagnostics* diags = nullptr);

// Everything the frontend produces, bundled for the later phases.
struct Package {
  std::filesystem::path root;
  std::vector<ModuleUnit> units;
  ModuleIndex index;
  std::vector<ImportRecord> imports;
  FunctionRegistry functions;

  const ModuleUnit* unit(std::string_view module) const;
  // External import statements of a module, in source order.
  std::vector<std::string> external_imports(std::string_view module) const;
  // Import records bound in a module, keyed by bound name.
  const ImportRecord* import_binding(std::string_view module, std::string_view bound_name) const;
};

// Follows internal import aliases and module attributes from a dotted name
// used in `module` to the "M.x" key of the binding that defines it. Returns
// nothing when the chain leaves the package or ends on a module.
std::optional<std::string> resolve_qualified(const Package& package, const GlobalEnv& globals,
                                             std::string_view module,
                                             const std::vector<std::string>& parts);

Package make_package(std::vector<ModuleUnit> units, std::filesystem::path root, Diagnostics& diags);

}  // namespace poto
