#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poto/concrete.hpp"
#include "poto/diagnostics.hpp"
#include "poto/frontend.hpp"
#include "poto/graph.hpp"
#include "poto/hierarchy.hpp"
#include "poto/objects.hpp"
#include "poto/solver.hpp"
#include "poto/tac.hpp"
#include "poto/typeinfer.hpp"
#include "poto/variables.hpp"

namespace poto {

struct AnalysisOptions {
  std::vector<std::string> entries;  // extra entry points
  std::optional<std::filesystem::path> tests_dir;
  ConcreteOptions concrete;
};

// One whole-package run: frontend, hierarchy, solver, type inference. A null
// evaluator turns concrete evaluation off entirely.
class Analysis {
 public:
  using Source = std::pair<std::string, std::string>;  // module name, text

  static std::unique_ptr<Analysis> from_directory(const std::filesystem::path& root, Evaluator* evaluator,
                                                  AnalysisOptions options = {});
  // Modules whose name has a `test`/`tests` segment are test modules.
  static std::unique_ptr<Analysis> from_sources(const std::vector<Source>& sources, Evaluator* evaluator,
                                                AnalysisOptions options = {});

  Analysis(const Analysis&) = delete;
  Analysis& operator=(const Analysis&) = delete;

  // Solves to fixpoint from the discovered entry points.
  void run();

  // Points-to types merged with the shallow scan.
  KeyedTypeResult types() const;
  KeyedTypeResult points_to_types() const;

  // Every translated function in translation order.
  std::string dump_tac() const;
  // JSON map from "module.qualname::variable" to object descriptors.
  std::string export_graph() const;
  // "module.qualname::name", or tN for temporaries.
  std::string variable_name(VarId v) const;

  std::optional<VarId> local(std::string_view function_full_name, std::string_view name) const;
  std::optional<VarId> global(std::string_view qualified) const { return globals_.lookup(qualified); }

  const Package& package() const { return package_; }
  const GlobalEnv& globals() const { return globals_; }
  const Hierarchy& hierarchy() const { return hierarchy_; }
  const VariableTable& vars() const { return vars_; }
  const ObjectTable& objects() const { return objects_; }
  const PointsToGraph& graph() const { return graph_; }
  const FunctionTable& table() const { return table_; }
  const std::vector<FunctionId>& entries() const { return entries_; }
  const Diagnostics& diagnostics() const { return diags_; }
  Diagnostics& diagnostics() { return diags_; }
  Solver& solver() { return *solver_; }
  const ConcreteSession* session() const { return session_.get(); }
  TranslatorContext context();

 private:
  Analysis(std::vector<ModuleUnit> units, std::filesystem::path root, Evaluator* evaluator,
           AnalysisOptions options, Diagnostics diags);

  Diagnostics diags_;
  AnalysisOptions options_;
  VariableTable vars_;
  Package package_;
  GlobalEnv globals_;
  Hierarchy hierarchy_;
  ObjectTable objects_;
  PointsToGraph graph_;
  FunctionTable table_;
  std::unique_ptr<ConcreteSession> session_;
  std::unique_ptr<Solver> solver_;
  std::vector<FunctionId> entries_;
};

}  // namespace poto
