#pragma once

#include <deque>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "poto/graph.hpp"
#include "poto/tac.hpp"

namespace poto {

struct SolverStats {
  std::size_t functions_processed = 0;
  std::size_t statements_solved = 0;
  std::size_t concrete_calls_capped = 0;
};

// Worklist fixpoint over Φ. Functions are translated on first reach; a
// statement's solve returns the functions whose statements must be revisited.
class Solver {
 public:
  using Observer = std::function<void(const TacStatement&, const PointsToGraph&)>;

  Solver(TranslatorContext ctx, PointsToGraph& graph, FunctionTable& table);

  // Seeds meta-class objects, translates entries and every module
  // initializer, and enqueues them.
  void start(const std::vector<FunctionId>& entries);
  // Processes one function; false once the worklist is empty.
  bool step();
  void run();
  void run(const std::vector<FunctionId>& entries) {
    start(entries);
    run();
  }

  std::set<FunctionId> solve(const TacStatement& s);
  std::set<FunctionId> solve_new(const TacStatement& s, const NewStmt& f);
  std::set<FunctionId> solve_copy(const TacStatement& s, const CopyStmt& f);
  std::set<FunctionId> solve_field_write(const TacStatement& s, const FieldWriteStmt& f);
  std::set<FunctionId> solve_field_read(const TacStatement& s, const FieldReadStmt& f);
  std::set<FunctionId> solve_call(const TacStatement& s, const CallStmt& f);

  // One more pass over every statement in Φ; returns how many changed Pt.
  std::size_t solve_all_once();

  // Translates f if needed. New entries are enqueued.
  const FunctionEntry& ensure_translated(FunctionId f);

  // Functions to revisit after `changed` grew: the owner plus every function
  // that reads it.
  std::set<FunctionId> affected_by(const std::set<VarId>& changed) const;
  std::set<FunctionId> all_functions() const;

  void set_observer(Observer observer) { observer_ = std::move(observer); }
  bool idle() const { return worklist_.empty(); }
  const SolverStats& stats() const { return stats_; }
  const PointsToGraph& graph() const { return graph_; }
  const FunctionTable& table() const { return table_; }

 private:
  void enqueue(FunctionId f);
  void register_readers(const FunctionEntry& entry);
  void invoke(FunctionId callee, ObjectId receiver, const CallStmt& call, FunctionId caller, bool flow_ret,
              std::set<VarId>& changed);
  void concrete_call(ObjectId callee, const CallStmt& call, std::set<VarId>& changed);
  bool grow(VarId v, const ObjectSet& objects, std::set<VarId>& changed);
  bool grow(VarId v, ObjectId o, std::set<VarId>& changed);


  TranslatorContext ctx_;
  Translator translator_;
  PointsToGraph& graph_;
  FunctionTable& table_;
  std::deque<FunctionId> worklist_;
  std::set<FunctionId> queued_;
  std::map<VarId, std::set<FunctionId>> readers_;
  std::map<Site, std::set<std::vector<std::uint64_t>>> concrete_tuples_;
  Observer observer_;
  SolverStats stats_;
};

}  // namespace poto
