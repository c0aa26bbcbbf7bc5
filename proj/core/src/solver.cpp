#include "poto/solver.hpp"

namespace poto {

Solver::Solver(TranslatorContext ctx, PointsToGraph& graph, FunctionTable& table)
    : ctx_(ctx), translator_(ctx), graph_(graph), table_(table) {}

void Solver::enqueue(FunctionId f) {
  if (!table_.contains(f)) return;
  if (queued_.insert(f).second) worklist_.push_back(f);
}

void Solver::register_readers(const FunctionEntry& entry) {
  for (const auto& s : entry.statements) {
    for (VarId v : read_vars(s)) readers_[v].insert(entry.function);
  }
}

const FunctionEntry& Solver::ensure_translated(FunctionId f) {
  if (const FunctionEntry* e = table_.find(f)) return *e;
  const FunctionEntry& entry = table_.insert(translator_.translate_function(f));
  register_readers(entry);
  enqueue(f);
  return entry;
}

void Solver::start(const std::vector<FunctionId>& entries) {
  ctx_.hierarchy.seed_metaclass_objects(ctx_.globals, ctx_.objects, graph_);
  for (FunctionId f : entries) {
    ensure_translated(f);
    enqueue(f);
  }
  for (const auto& info : ctx_.package.functions.all()) {
    if (!info.is_module_init) continue;
    ensure_translated(info.id);
    enqueue(info.id);
  }
}

bool Solver::step() {
  if (worklist_.empty()) return false;
  FunctionId f = worklist_.front();
  worklist_.pop_front();
  queued_.erase(f);
  ++stats_.functions_processed;
  const FunctionEntry& entry = table_.at(f);
  for (const auto& s : entry.statements) {
    for (FunctionId g : solve(s)) enqueue(g);
  }
  return true;
}

void Solver::run() {
  while (step()) {
  }
}

std::size_t Solver::solve_all_once() {
  std::size_t changes = 0;
  std::vector<FunctionId> ids = table_.ids();
  for (FunctionId f : ids) {
    for (const auto& s : table_.at(f).statements) {
      if (!solve(s).empty()) ++changes;
    }
  }
  return changes;
}

std::set<FunctionId> Solver::all_functions() const {
  return std::set<FunctionId>(table_.ids().begin(), table_.ids().end());
}

std::set<FunctionId> Solver::affected_by(const std::set<VarId>& changed) const {
  std::set<FunctionId> out;
  for (VarId v : changed) {
    FunctionId owner = ctx_.vars.info(v).owner;
    if (table_.contains(owner)) out.insert(owner);
    auto it = readers_.find(v);
    if (it != readers_.end()) out.insert(it->second.begin(), it->second.end());
  }
  return out;
}

bool Solver::grow(VarId v, const ObjectSet& objects, std::set<VarId>& changed) {
  if (graph_.add_all(v, objects) == 0) return false;
  changed.insert(v);
  return true;
}

bool Solver::grow(VarId v, ObjectId o, std::set<VarId>& changed) {
  if (!graph_.add(v, o)) return false;
  changed.insert(v);
  return true;
}

std::set<FunctionId> Solver::solve(const TacStatement& s) {
  ++stats_.statements_solved;
  std::set<FunctionId> out = std::visit(
      [&](const auto& f) -> std::set<FunctionId> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, NewStmt>) {
          return solve_new(s, f);
        } else if constexpr (std::is_same_v<T, CopyStmt>) {
          return solve_copy(s, f);
        } else if constexpr (std::is_same_v<T, FieldWriteStmt>) {
          return solve_field_write(s, f);
        } else if constexpr (std::is_same_v<T, FieldReadStmt>) {
          return solve_field_read(s, f);
        } else {
          return solve_call(s, f);
        }
      },
      s.form);
  if (observer_) observer_(s, graph_);
  return out;
}

std::set<FunctionId> Solver::solve_new(const TacStatement&, const NewStmt& f) {
  std::set<VarId> changed;
  grow(f.lhs, f.object, changed);
  return affected_by(changed);
}

std::set<FunctionId> Solver::solve_copy(const TacStatement&, const CopyStmt& f) {
  std::set<VarId> changed;
  grow(f.lhs, graph_.pt(f.rhs), changed);
  return affected_by(changed);
}

std::set<FunctionId> Solver::solve_field_write(const TacStatement&, const FieldWriteStmt& f) {
  const ObjectSet values = graph_.pt(f.rhs);
  bool changed = false;
  for (ObjectId o : ObjectSet(graph_.pt(f.base))) {
    if (graph_.add_field_all(o, f.field, values) > 0) changed = true;
  }
  // A new field edge may be read anywhere.
  return changed ? all_functions() : std::set<FunctionId>{};
}

std::set<FunctionId> Solver::solve_field_read(const TacStatement& s, const FieldReadStmt& f) {
  std::set<VarId> changed;
  for (ObjectId o : ObjectSet(graph_.pt(f.base))) {
    // Copied: interning below may reallocate the table.
    const AbstractObject obj = ctx_.objects.get(o);
    if (const auto* d = std::get_if<DataObject>(&obj)) {
      if (f.field != kSubscriptField) {
        if (auto def = ctx_.hierarchy.lookup(d->cls, f.field)) {
          grow(f.lhs, ctx_.objects.meta_func(*def, o), changed);
        }
      }
    } else if (const auto* m = std::get_if<MetaClsObject>(&obj)) {
      if (auto def = ctx_.hierarchy.lookup(m->cls, f.field)) grow(f.lhs, ctx_.objects.meta_func(*def), changed);
    } else if (std::holds_alternative<ConstObject>(obj)) {
      if (ctx_.concrete && f.field != kSubscriptField) {
        if (auto r = ctx_.concrete->getattr(o, f.field)) grow(f.lhs, *r, changed);
      }
    }
    grow(f.lhs, graph_.field(o, f.field), changed);
  }
  (void)s;
  return affected_by(changed);
}

void Solver::invoke(FunctionId callee, ObjectId receiver, const CallStmt& call, FunctionId caller,
                    bool flow_ret, std::set<VarId>& changed) {
  bool fresh = !table_.contains(callee);
  const FunctionEntry& entry = ensure_translated(callee);
  if (fresh) changed.insert(VarId{});  // new reachable function counts as progress
  if (entry.ret.valid()) readers_[entry.ret].insert(caller);
  std::size_t offset = 0;
  if (receiver.valid()) {
    if (!entry.params.empty()) grow(entry.params.front(), receiver, changed);
    offset = 1;
  }
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    if (offset + i >= entry.params.size()) break;
    grow(entry.params[offset + i], graph_.pt(call.args[i]), changed);
  }
  if (flow_ret && entry.ret.valid()) grow(call.lhs, graph_.pt(entry.ret), changed);
}

void Solver::concrete_call(ObjectId callee, const CallStmt& call, std::set<VarId>& changed) {
  if (!ctx_.concrete) return;
  std::vector<std::vector<ObjectId>> choices;
  for (VarId a : call.args) {
    std::vector<ObjectId> consts;
    for (ObjectId o : graph_.pt(a)) {
      if (is_const(ctx_.objects.get(o))) consts.push_back(o);
    }
    if (consts.empty()) return;
    choices.push_back(std::move(consts));
  }
  auto& tried = concrete_tuples_[call.site];
  std::uint64_t callee_handle = std::get<ConstObject>(ctx_.objects.get(callee)).handle;
  std::vector<std::size_t> index(choices.size(), 0);
  while (true) {
    std::vector<ObjectId> args;
    std::vector<std::uint64_t> key{callee_handle};
    for (std::size_t i = 0; i < choices.size(); ++i) {
      args.push_back(choices[i][index[i]]);
      key.push_back(std::get<ConstObject>(ctx_.objects.get(args.back())).handle);
    }
    bool known = tried.count(key) != 0;
    if (!known && tried.size() >= ctx_.concrete->options().call_combinations) {
      ++stats_.concrete_calls_capped;
    } else {
      tried.insert(key);
      if (auto r = ctx_.concrete->call(callee, args)) grow(call.lhs, *r, changed);
    }
    std::size_t i = 0;
    for (; i < index.size(); ++i) {
      if (++index[i] < choices[i].size()) break;
      index[i] = 0;
    }
    if (i == index.size()) break;
  }
}

std::set<FunctionId> Solver::solve_call(const TacStatement& s, const CallStmt& f) {
  std::set<VarId> changed;
  std::set<FunctionId> callees;
  for (ObjectId o : ObjectSet(graph_.pt(f.callee))) {
    // Copied: interning below may reallocate the table.
    const AbstractObject obj = ctx_.objects.get(o);
    if (const auto* d = std::get_if<DataObject>(&obj)) {
      if (auto def = ctx_.hierarchy.lookup(d->cls, "__call__")) {
        invoke(*def, o, f, s.function, true, changed);
        callees.insert(*def);
      }
    } else if (const auto* m = std::get_if<MetaClsObject>(&obj)) {
      ObjectId instance = ctx_.objects.data(m->cls, f.site);
      grow(f.lhs, instance, changed);
      if (auto def = ctx_.hierarchy.lookup(m->cls, "__init__")) {
        invoke(*def, instance, f, s.function, false, changed);
        callees.insert(*def);
      }
    } else if (const auto* fn = std::get_if<MetaFuncObject>(&obj)) {
      invoke(fn->def, fn->bound_receiver, f, s.function, true, changed);
      callees.insert(fn->def);
    } else {
      concrete_call(o, f, changed);
    }
  }
  if (changed.empty()) return {};
  bool new_function = changed.erase(VarId{}) > 0;
  std::set<FunctionId> out = affected_by(changed);
  if (new_function || !out.empty()) {
    out.insert(s.function);
    for (FunctionId c : callees) out.insert(c);
  }
  return out;
}

}  // namespace poto
