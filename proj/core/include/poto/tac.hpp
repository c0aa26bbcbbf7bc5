#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "poto/concrete.hpp"
#include "poto/diagnostics.hpp"
#include "poto/frontend.hpp"
#include "poto/hierarchy.hpp"
#include "poto/ids.hpp"
#include "poto/objects.hpp"
#include "poto/variables.hpp"

namespace poto {

inline constexpr std::string_view kSubscriptField = "[]";

struct NewStmt {
  VarId lhs;
  ObjectId object;
};
struct CopyStmt {
  VarId lhs;
  VarId rhs;
};
struct FieldWriteStmt {
  VarId base;
  std::string field;
  VarId rhs;
};
struct FieldReadStmt {
  VarId lhs;
  VarId base;
  std::string field;
};
struct CallStmt {
  VarId lhs;
  VarId callee;
  std::vector<VarId> args;
  Site site;
};

using TacForm = std::variant<NewStmt, CopyStmt, FieldWriteStmt, FieldReadStmt, CallStmt>;

struct TacStatement {
  FunctionId function;
  int line = 0;
  TacForm form;
};

// Variables a statement reads (not the ones it defines).
std::vector<VarId> read_vars(const TacStatement& s);

// Γ: most recent binding wins; an identifier is bound at most once.
class LocalEnv {
 public:
  std::optional<VarId> lookup(std::string_view name) const;
  // No-op when the name is already bound.
  VarId bind(std::string name, VarId v);
  // Bindings in creation order.
  const std::vector<std::pair<std::string, VarId>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, VarId>> entries_;
};

struct FunctionEntry {
  FunctionId function;
  LocalEnv env;
  std::vector<TacStatement> statements;
  std::vector<VarId> params;  // positional parameters in order, `self` included
  VarId ret;                  // invalid for module initializers
};

// Φ: translated functions in translation order.
class FunctionTable {
 public:
  bool contains(FunctionId f) const { return entries_.count(f) != 0; }
  const FunctionEntry* find(FunctionId f) const;
  const FunctionEntry& at(FunctionId f) const { return entries_.at(f); }
  const FunctionEntry& insert(FunctionEntry entry);
  const std::vector<FunctionId>& ids() const { return order_; }
  std::size_t size() const { return order_.size(); }

 private:
  std::map<FunctionId, FunctionEntry> entries_;
  std::vector<FunctionId> order_;
};

struct TranslatorContext {
  const Package& package;
  const GlobalEnv& globals;
  const Hierarchy& hierarchy;
  VariableTable& vars;
  ObjectTable& objects;
  ConcreteSession* concrete = nullptr;
  Diagnostics* diags = nullptr;
};

// I(s, Γ) and I(e, Γ): lowers function bodies to the five statement forms,
// trying concrete evaluation where the hybrid heuristic allows.
class Translator {
 public:
  explicit Translator(TranslatorContext ctx) : ctx_(ctx) {}

  // Parameters and the return slot are bound first, then the body is
  // translated. Module initializers translate the whole module body.
  FunctionEntry translate_function(FunctionId f);

  // Translates `body` as code of `owner`, starting from `env`.
  FunctionEntry translate_body(FunctionId owner, const py::StmtList& body, LocalEnv env = {});

  // t2 = t1 for an internal `from p import x' as x` in a module initializer.
  std::vector<TacStatement> translate_import(const ImportRecord& import);

 private:
  struct Scope;
  using Vars = std::vector<VarId>;

  Scope open_scope(FunctionId f);
  FunctionEntry close_scope(Scope& scope);

  void block(const py::StmtList& body, Scope& sc);
  void stmt(const py::Stmt& s, Scope& sc);
  void function_def(const py::Stmt& s, Scope& sc);
  void import_stmt(const py::Stmt& s, Scope& sc);
  void assign(const py::Expr& target, const Vars& rhs, Scope& sc);
  void bind_names(const py::Expr& target, Scope& sc);
  VarId bind_name(const std::string& name, Scope& sc);

  Vars expr(const py::Expr& e, Scope& sc);
  Vars expr_opt(const py::Expr* e, Scope& sc) { return e ? expr(*e, sc) : Vars{}; }
  Vars name(const py::Expr& e, Scope& sc);
  Vars attribute(const py::Expr& e, Scope& sc);
  Vars call(const py::Expr& e, Scope& sc);
  Vars container(const py::Expr& e, std::string_view cls, Scope& sc);
  Vars comprehension(const py::Expr& e, Scope& sc);
  Vars other(const py::Expr& e, Scope& sc);

  std::optional<VarId> try_concrete(const py::Expr& e, Scope& sc);
  bool references_abstract(const py::Expr& e, const Scope& sc) const;
  std::optional<Vars> module_attribute(const py::Expr& e, Scope& sc);

  VarId temp(Scope& sc);
  VarId single(const Vars& vars, Scope& sc);
  void emit(Scope& sc, TacForm form);
  ObjectId allocate(std::string_view builtin_class, Scope& sc);
  void report(const Scope& sc, int line, std::string message);

  TranslatorContext ctx_;
};

// Debug dump: `module.qualname: lhs = rhs` and friends, one statement per line.
std::string format_object(ObjectId o, const ObjectTable& objects, const Hierarchy& hierarchy,
                          const FunctionRegistry& functions);
std::string format_statement(const TacStatement& s, const VariableTable& vars, const ObjectTable& objects,
                             const Hierarchy& hierarchy, const FunctionRegistry& functions);
std::string dump_function(const FunctionEntry& entry, const VariableTable& vars, const ObjectTable& objects,
                          const Hierarchy& hierarchy, const FunctionRegistry& functions);

}  // namespace poto
