#pragma once

#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "poto/frontend.hpp"
#include "poto/graph.hpp"
#include "poto/hierarchy.hpp"
#include "poto/objects.hpp"
#include "poto/tac.hpp"

namespace poto {

inline constexpr std::string_view kModuleScope = "<module>";

struct Key {
  std::string module;
  std::string function;  // qualname, or "<module>"
  std::string variable;

  friend auto operator<=>(const Key&, const Key&) = default;
};

using TypeSet = std::set<std::string>;
// An empty set marks a known key with no inferred type.
using KeyedTypeResult = std::map<Key, TypeSet>;

// Reported name of one abstract object: "M.C" for package classes, the
// built-in container name, "type", "function", or the concrete type name.
std::string type_name_of(ObjectId o, const ObjectTable& objects, const Hierarchy& hierarchy);

struct InferContext {
  const Package& package;
  const GlobalEnv& globals;
  const Hierarchy& hierarchy;
  const VariableTable& vars;
  const ObjectTable& objects;
};

// Types of every named variable of every translated function, plus the
// assigned module-level bindings. Test modules are left out.
KeyedTypeResult infer_types(const InferContext& ctx, const PointsToGraph& graph, const FunctionTable& table);

// Syntactic pass: built-in constructor calls, literals, and annotations.
KeyedTypeResult shallow_scan(const Package& package);

// Maps a bare or dotted annotation name to its reported type name.
using NameResolver = std::function<std::string(std::string_view)>;

// Type names carried by an annotation's source text. Optional/Union/`|` are
// split, typing containers become built-ins, quotes are dropped, `Any` yields
// nothing.
TypeSet annotation_types(std::string_view text, const NameResolver& resolve = {});

// Pointwise union.
KeyedTypeResult merge(const KeyedTypeResult& primary, const KeyedTypeResult& shallow);

}  // namespace poto
