#include "poto/hierarchy.hpp"

#include <algorithm>

namespace poto {
namespace {

constexpr std::string_view kBuiltinContainers[] = {"list", "tuple", "set", "dict"};

bool dotted_parts(const py::Expr& e, std::vector<std::string>& out) {
  if (e.kind == py::ExprKind::Name) {
    out.push_back(e.text);
    return true;
  }
  if (e.kind == py::ExprKind::Attribute && dotted_parts(*e.value, out)) {
    out.push_back(e.text);
    return true;
  }
  return false;
}

}  // namespace

Linearization c3_merge(ClassId self, const std::vector<std::vector<ClassId>>& base_orders,
                       const std::vector<ClassId>& bases) {
  std::vector<std::vector<ClassId>> seqs = base_orders;
  seqs.push_back(bases);
  Linearization out;
  out.order.push_back(self);
  while (true) {
    seqs.erase(std::remove_if(seqs.begin(), seqs.end(), [](const auto& s) { return s.empty(); }),
               seqs.end());
    if (seqs.empty()) break;
    std::optional<ClassId> head;
    for (const auto& candidate_seq : seqs) {
      ClassId candidate = candidate_seq.front();
      bool in_tail = std::any_of(seqs.begin(), seqs.end(), [&](const auto& s) {
        return std::find(s.begin() + 1, s.end(), candidate) != s.end();
      });
      if (!in_tail) {
        head = candidate;
        break;
      }
    }
    if (!head) {
      out.order.clear();
      out.error = "cannot create a consistent method resolution order";
      return out;
    }
    out.order.push_back(*head);
    for (auto& s : seqs) {
      if (s.front() == *head) s.erase(s.begin());
    }
  }
  out.ok = true;
  return out;
}

ClassId Hierarchy::add(ClassRecord record) {
  ClassId id(static_cast<std::uint32_t>(classes_.size()));
  record.id = id;
  by_name_[record.qualified_name()] = id;
  classes_.push_back(std::move(record));
  return id;
}

Hierarchy Hierarchy::build(const Package& package, const GlobalEnv& globals, Diagnostics* diags) {
  Hierarchy h;
  ClassRecord root;
  root.name = std::string(kRootName);
  root.builtin = true;
  h.root_ = h.add(std::move(root));
  for (auto name : kBuiltinContainers) {
    ClassRecord r;
    r.name = std::string(name);
    r.builtin = true;
    h.add(std::move(r));
  }

  std::vector<ClassId> declared;
  for (const auto& unit : package.units) {
    py::for_each_in_scope(unit.tree->body, [&](const py::Stmt& s) {
      if (s.kind != py::StmtKind::ClassDef) return;
      ClassRecord r;
      r.module = unit.module_name;
      r.name = s.name;
      r.def = &s;
      py::for_each_in_scope(s.body, [&](const py::Stmt& m) {
        if (m.kind != py::StmtKind::FunctionDef) return;
        if (auto f = package.functions.of_def(&m)) r.members[m.name] = *f;
      });
      declared.push_back(h.add(std::move(r)));
    });
  }

  for (ClassId c : declared) {
    ClassRecord& r = h.classes_[c.value()];
    const ModuleUnit* unit = package.unit(r.module);
    for (const auto& base : r.def->bases) {
      std::vector<std::string> parts;
      std::optional<ClassId> resolved;
      if (dotted_parts(*base, parts)) {
        if (parts.size() == 1 && parts[0] == "object" && !globals.find(r.module + ".object")) continue;
        if (auto q = resolve_qualified(package, globals, r.module, parts)) {
          auto it = h.by_name_.find(*q);
          if (it != h.by_name_.end() && !h.classes_[it->second.value()].builtin) resolved = it->second;
        }
      }
      if (resolved) {
        r.bases.push_back(*resolved);
      } else {
        r.unresolved_bases.emplace_back(unit ? std::string(unit->tree->text(*base)) : std::string());
      }
    }
  }
  h.linearize_all(diags);
  return h;
}

Hierarchy Hierarchy::from_edges(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& classes,
    const std::vector<std::tuple<std::string, std::string, FunctionId>>& members) {
  Hierarchy h;
  ClassRecord root;
  root.name = std::string(kRootName);
  root.builtin = true;
  h.root_ = h.add(std::move(root));
  for (const auto& [name, bases] : classes) {
    ClassRecord r;
    r.name = name;
    h.add(std::move(r));
  }
  for (const auto& [name, bases] : classes) {
    ClassRecord& r = h.classes_[h.by_name_.at(name).value()];
    for (const auto& b : bases) {
      auto it = h.by_name_.find(b);
      if (it == h.by_name_.end() || it->second == h.root_) {
        r.unresolved_bases.push_back(b);
      } else {
        r.bases.push_back(it->second);
      }
    }
  }
  for (const auto& [cls, method, fn] : members) h.classes_[h.by_name_.at(cls).value()].members[method] = fn;
  h.linearize_all(nullptr);
  return h;
}

void Hierarchy::linearize_all(Diagnostics* diags) {
  linear_.assign(classes_.size(), Linearization{});
  std::vector<int> state(classes_.size(), 0);
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    ClassId c(static_cast<std::uint32_t>(i));
    compute(c, state);
    const Linearization& l = linear_[i];
    if (!l.ok && diags) {
      const ClassRecord& r = classes_[i];
      std::string path = r.module;
      diags->report(path, r.def ? r.def->line() : 0,
                    "class '" + r.qualified_name() + "' excluded from method lookup: " + l.error);
    }
  }
}

Linearization Hierarchy::compute(ClassId c, std::vector<int>& state) {
  auto& slot = linear_[c.value()];
  if (state[c.value()] == 2) return slot;
  if (state[c.value()] == 1) {
    Linearization cyc;
    cyc.error = "cyclic inheritance";
    return cyc;
  }
  state[c.value()] = 1;
  Linearization result;
  const ClassRecord& r = classes_[c.value()];
  if (c == root_) {
    result.ok = true;
    result.order = {root_};
  } else if (r.bases.empty()) {
    result.ok = true;
    result.order = {c, root_};
  } else {
    std::vector<std::vector<ClassId>> orders;
    for (ClassId b : r.bases) {
      Linearization lb = compute(b, state);
      if (!lb.ok) {
        result.error = "base '" + classes_[b.value()].qualified_name() + "': " + lb.error;
        break;
      }
      orders.push_back(lb.order);
    }
    if (result.error.empty()) result = c3_merge(c, orders, r.bases);
  }
  state[c.value()] = 2;
  linear_[c.value()] = result;
  return result;
}

std::optional<ClassId> Hierarchy::builtin(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end() || !classes_[it->second.value()].builtin) return std::nullopt;
  return it->second;
}

std::optional<ClassId> Hierarchy::find(std::string_view qualified_name) const {
  auto it = by_name_.find(qualified_name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::optional<FunctionId> Hierarchy::lookup(ClassId c, std::string_view name) const {
  const Linearization& l = linearization(c);
  if (!l.ok) return std::nullopt;
  for (ClassId k : l.order) {
    const auto& members = classes_[k.value()].members;
    auto it = members.find(name);
    if (it != members.end()) return it->second;
  }
  return std::nullopt;
}

void Hierarchy::seed_metaclass_objects(const GlobalEnv& globals, ObjectTable& objects,
                                       PointsToGraph& graph) const {
  for (const auto& r : classes_) {
    if (r.builtin || !r.def) continue;
    if (auto v = globals.lookup(r.qualified_name())) graph.add(*v, objects.meta_cls(r.id));
  }
}

}  // namespace poto
