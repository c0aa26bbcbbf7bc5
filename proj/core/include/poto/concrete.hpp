#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "poto/diagnostics.hpp"
#include "poto/objects.hpp"

namespace poto {

enum class EvalOp { Eval, GetAttr, Call, Describe };

std::string_view op_name(EvalOp op);

// Call argument: a live handle, or literal source text when handle is 0.
struct EvalArg {
  std::uint64_t handle = 0;
  std::string literal;

  friend bool operator==(const EvalArg&, const EvalArg&) = default;
};

struct EvalRequest {
  EvalOp op = EvalOp::Describe;
  std::string expr;                  // eval
  std::uint64_t handle = 0;          // getattr, call, describe
  std::string name;                  // getattr
  std::vector<EvalArg> args;         // call
  std::vector<std::string> imports;  // eval

  static EvalRequest eval(std::string expr, std::vector<std::string> imports);
  static EvalRequest getattr(std::uint64_t handle, std::string name);
  static EvalRequest call(std::uint64_t handle, std::vector<EvalArg> args);
  static EvalRequest describe(std::uint64_t handle = 0);

  friend bool operator==(const EvalRequest&, const EvalRequest&) = default;
};

struct EvalResponse {
  bool ok = false;
  std::uint64_t handle = 0;
  std::string type_name;
  std::string repr;
  std::string error;

  static EvalResponse failure(std::string error);

  friend bool operator==(const EvalResponse&, const EvalResponse&) = default;
};

inline constexpr std::size_t kMaxReprLength = 256;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One JSON object per line, keys sorted, only the fields the op needs.
std::string encode(const EvalRequest& request);
std::string encode(const EvalResponse& response);
EvalRequest decode_request(std::string_view line);
EvalResponse decode_response(std::string_view line);
// Canonical identity of a request; equal requests have equal fingerprints.
std::string fingerprint(const EvalRequest& request);

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvalResponse evaluate(const EvalRequest& request) = 0;

  EvalResponse eval_expr(std::string expr, std::vector<std::string> imports) {
    return evaluate(EvalRequest::eval(std::move(expr), std::move(imports)));
  }
  EvalResponse get_attr(std::uint64_t handle, std::string name) {
    return evaluate(EvalRequest::getattr(handle, std::move(name)));
  }
  EvalResponse call_handle(std::uint64_t handle, std::vector<EvalArg> args) {
    return evaluate(EvalRequest::call(handle, std::move(args)));
  }
};

// Answers scripted requests only; everything else fails.
class FixtureEvaluator : public Evaluator {
 public:
  FixtureEvaluator() = default;
  explicit FixtureEvaluator(std::map<std::string, EvalResponse> script) : script_(std::move(script)) {}

  // Transcript lines: {"request": {...}, "response": {...}}. Blank lines and
  // lines starting with '#' are ignored.
  static FixtureEvaluator from_transcript(std::istream& in);
  static FixtureEvaluator load(const std::filesystem::path& path);

  void add(const EvalRequest& request, const EvalResponse& response);
  EvalResponse evaluate(const EvalRequest& request) override;

  std::size_t size() const { return script_.size(); }
  const std::vector<EvalRequest>& unanswered() const { return unanswered_; }

 private:
  std::map<std::string, EvalResponse> script_;
  std::vector<EvalRequest> unanswered_;
};

class FailingEvaluator : public Evaluator {
 public:
  EvalResponse evaluate(const EvalRequest&) override { return EvalResponse::failure("concrete evaluation disabled"); }
};

// Forwards to another evaluator and appends every exchange to `out` in the
// transcript format FixtureEvaluator reads.
class RecordingEvaluator : public Evaluator {
 public:
  RecordingEvaluator(Evaluator& inner, std::ostream& out) : inner_(inner), out_(out) {}
  EvalResponse evaluate(const EvalRequest& request) override;

 private:
  Evaluator& inner_;
  std::ostream& out_;
};

// Child process speaking the wire protocol on its stdin/stdout.
class SidecarEvaluator : public Evaluator {
 public:
  struct Options {
    std::string command;  // run through /bin/sh -c
    std::filesystem::path package_root;
    int timeout_ms = 2000;
  };

  static constexpr const char* kCommandEnv = "POTO_SIDECAR";
  static constexpr const char* kDefaultCommand = "python3 -m poto_sidecar";
  // POTO_SIDECAR when set, otherwise the default module launch.
  static std::string default_command();

  explicit SidecarEvaluator(Options options);
  ~SidecarEvaluator() override;
  SidecarEvaluator(const SidecarEvaluator&) = delete;
  SidecarEvaluator& operator=(const SidecarEvaluator&) = delete;

  // Spawns the process and performs the describe health check.
  bool start(std::string* error = nullptr);
  bool alive() const { return pid_ > 0; }
  EvalResponse evaluate(const EvalRequest& request) override;
  void stop();

 private:
  bool write_line(const std::string& line);
  std::optional<std::string> read_line(int timeout_ms, bool* closed = nullptr);

  Options options_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

struct ConcreteOptions {
  std::size_t budget = 10000;         // evaluator requests per run
  std::size_t call_combinations = 16;  // concrete argument tuples per call site
};

// The analysis-side view of the evaluator: memoizes requests, enforces the
// budget and turns successful responses into Const objects.
class ConcreteSession {
 public:
  ConcreteSession(Evaluator& evaluator, ObjectTable& objects, Diagnostics* diags = nullptr,
                  ConcreteOptions options = {});

  std::optional<ObjectId> eval(std::string_view module, std::string_view expr,
                               const std::vector<std::string>& imports);
  std::optional<ObjectId> getattr(ObjectId object, const std::string& name);
  std::optional<ObjectId> call(ObjectId callee, const std::vector<ObjectId>& args);

  const ConcreteOptions& options() const { return options_; }
  std::size_t requests() const { return requests_; }
  bool exhausted() const { return requests_ >= options_.budget; }

 private:
  std::optional<ObjectId> submit(const EvalRequest& request, std::string_view context);
  const ConstObject* as_const(ObjectId id) const;

  Evaluator& evaluator_;
  ObjectTable& objects_;
  Diagnostics* diags_;
  ConcreteOptions options_;
  std::size_t requests_ = 0;
  bool budget_reported_ = false;
  std::map<std::pair<std::string, std::string>, std::optional<ObjectId>, std::less<>> eval_memo_;
  std::map<std::pair<std::uint64_t, std::string>, std::optional<ObjectId>> attr_memo_;
  std::map<std::pair<std::uint64_t, std::vector<std::uint64_t>>, std::optional<ObjectId>> call_memo_;
};

}  // namespace poto
