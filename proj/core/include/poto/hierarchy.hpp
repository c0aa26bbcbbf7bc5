#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poto/diagnostics.hpp"
#include "poto/frontend.hpp"
#include "poto/graph.hpp"
#include "poto/ids.hpp"
#include "poto/objects.hpp"

namespace poto {

struct ClassRecord {
  ClassId id;
  std::string module;  // empty for the root and built-in containers
  std::string name;
  const py::Stmt* def = nullptr;
  std::vector<ClassId> bases;                   // resolvable bases, source order
  std::vector<std::string> unresolved_bases;    // source text of the rest
  std::map<std::string, FunctionId, std::less<>> members;
  bool builtin = false;

  std::string qualified_name() const { return module.empty() ? name : module + "." + name; }
};

struct Linearization {
  bool ok = false;
  std::vector<ClassId> order;
  std::string error;
};

// Module-level classes of the package plus a synthetic root and the built-in
// container classes used for literal allocation.
class Hierarchy {
 public:
  static constexpr std::string_view kRootName = "<root>";

  static Hierarchy build(const Package& package, const GlobalEnv& globals, Diagnostics* diags = nullptr);

  // Test helper: classes given as (name, base names) in declaration order,
  // with members as (class, method name, function id).
  static Hierarchy from_edges(const std::vector<std::pair<std::string, std::vector<std::string>>>& classes,
                              const std::vector<std::tuple<std::string, std::string, FunctionId>>& members = {});

  ClassId root() const { return root_; }
  std::optional<ClassId> builtin(std::string_view name) const;
  std::optional<ClassId> find(std::string_view qualified_name) const;
  const ClassRecord& record(ClassId c) const { return classes_.at(c.value()); }
  std::size_t size() const { return classes_.size(); }

  // C3 linearization; the same value is cached for every call.
  const Linearization& linearization(ClassId c) const { return linear_.at(c.value()); }
  // H(C, f): first definition of f along linearization(C).
  std::optional<FunctionId> lookup(ClassId c, std::string_view name) const;

  // Pt(Γ0["M.C"]) ∋ (meta-cls, C) for every module-level class C.
  void seed_metaclass_objects(const GlobalEnv& globals, ObjectTable& objects, PointsToGraph& graph) const;

 private:
  ClassId add(ClassRecord record);
  void linearize_all(Diagnostics* diags);
  Linearization compute(ClassId c, std::vector<int>& state);

  std::vector<ClassRecord> classes_;
  std::vector<Linearization> linear_;
  std::map<std::string, ClassId, std::less<>> by_name_;
  ClassId root_;
};

// C3 merge over already computed base linearizations. Exposed for tests.
Linearization c3_merge(ClassId self, const std::vector<std::vector<ClassId>>& base_orders,
                       const std::vector<ClassId>& bases);

}  // namespace poto
