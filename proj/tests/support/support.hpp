#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "poto/analysis.hpp"

namespace poto::testing {

std::filesystem::path fixture_dir();

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  // Writes `text` to a path relative to the directory, creating parents.
  std::filesystem::path write(const std::string& relative, const std::string& text) const;

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

// The illustrating example: one module `example`, driven from main.
std::vector<Analysis::Source> fig1_sources();
std::unique_ptr<Analysis> fig1_analysis(Evaluator* evaluator);
std::filesystem::path fig1_transcript();

// ---- dumps ------------------------------------------------------------------

// Dump lines of one function with the "module.qualname: " prefix removed.
std::vector<std::string> function_lines(const Analysis& analysis, std::string_view full_name);
// Folds `x = tN` into tN's only definition when tN is read nowhere else.
std::vector<std::string> collapse_copies(const std::vector<std::string>& lines);
// Renames tN temporaries to t1, t2, ... by first appearance.
std::vector<std::string> rename_temps(const std::vector<std::string>& lines);
std::string join(const std::vector<std::string>& lines);

// ---- generated programs -------------------------------------------------------

struct GeneratedProgram {
  std::string name;
  std::vector<Analysis::Source> sources;
  std::vector<std::string> entries;
  std::size_t body_statements = 0;
};

// Deterministic corpus of small programs. Every body uses constructors,
// closures, field round-trips and calls; some split across two modules.
std::vector<GeneratedProgram> generated_corpus(std::size_t count = 40, unsigned seed = 20240917);

// Hand-written programs that exercise concrete-evaluation paths.
std::vector<GeneratedProgram> concrete_corpus();

std::unique_ptr<Analysis> analyze(const GeneratedProgram& program, Evaluator* evaluator);

// ---- graph comparison -----------------------------------------------------------

// Variables and objects named by translation-independent descriptors.
struct CanonicalGraph {
  std::map<std::string, std::set<std::string>> vars;
  std::map<std::string, std::set<std::string>> fields;

  friend bool operator==(const CanonicalGraph&, const CanonicalGraph&) = default;
};

std::string canonical_var(VarId v, const VariableTable& vars, const FunctionRegistry& functions);
std::string canonical_object(ObjectId o, const ObjectTable& objects, const Hierarchy& hierarchy,
                             const FunctionRegistry& functions);
CanonicalGraph canonical(const Analysis& analysis);
std::string describe_difference(const CanonicalGraph& expected, const CanonicalGraph& actual);

// Reference fixpoint: translate reachable functions, then apply every rule to
// every statement until nothing changes. `shuffle_seed` != 0 visits
// statements in a seeded random order. Concrete evaluation is off.
CanonicalGraph naive_fixpoint(const GeneratedProgram& program, unsigned shuffle_seed = 0);

struct TraceCheck {
  std::size_t solves = 0;
  std::size_t shrinks = 0;      // observed sets that lost an element
  std::size_t extra_changes = 0;  // changes from one more full pass after run()
};

// Runs the analysis with an observer comparing each graph with the previous one.
TraceCheck run_checked(Analysis& analysis);

// ---- MRO table ------------------------------------------------------------------------

struct MroCase {
  std::string name;
  std::vector<std::pair<std::string, std::vector<std::string>>> classes;
  std::map<std::string, std::vector<std::string>> methods;          // class -> defined names
  std::map<std::string, std::optional<std::vector<std::string>>> mro;  // nullopt: native error
  std::map<std::string, std::map<std::string, std::optional<std::string>>> lookup;
};

std::vector<MroCase> load_mro_table();

}  // namespace poto::testing
