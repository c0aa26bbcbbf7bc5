#include "poto/concrete.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <nlohmann/json.hpp>

namespace poto {
using nlohmann::json;

namespace {

constexpr int kTimeoutGraceMs = 500;

std::string truncate_repr(std::string s) {
  if (s.size() <= kMaxReprLength) return s;
  std::size_t cut = kMaxReprLength;
  // Do not split a UTF-8 sequence.
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  s.resize(cut);
  return s;
}

json request_json(const EvalRequest& r) {
  json j;
  j["op"] = op_name(r.op);
  switch (r.op) {
    case EvalOp::Eval:
      j["expr"] = r.expr;
      j["imports"] = r.imports;
      break;
    case EvalOp::GetAttr:
      j["handle"] = r.handle;
      j["name"] = r.name;
      break;
    case EvalOp::Call: {
      j["handle"] = r.handle;
      json args = json::array();
      for (const auto& a : r.args) {
        if (a.handle != 0) {
          args.push_back(json{{"handle", a.handle}});
        } else {
          args.push_back(json{{"literal", a.literal}});
        }
      }
      j["args"] = std::move(args);
      break;
    }
    case EvalOp::Describe:
      if (r.handle != 0) j["handle"] = r.handle;
      break;
  }
  return j;
}

json response_json(const EvalResponse& r) {
  json j;
  j["ok"] = r.ok;
  if (r.ok) {
    j["handle"] = r.handle;
    j["type_name"] = r.type_name;
    j["repr"] = truncate_repr(r.repr);
  } else {
    j["error"] = r.error;
  }
  return j;
}

json parse_object(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("malformed message: not a JSON object");
  return j;
}

template <typename T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("bad type for field '") + key + "'");
  }
}

EvalRequest request_from_json(const json& j) {
  EvalRequest r;
  auto op = field<std::string>(j, "op");
  if (op == "eval") {
    r.op = EvalOp::Eval;
    r.expr = field<std::string>(j, "expr");
    if (j.contains("imports")) r.imports = field<std::vector<std::string>>(j, "imports");
  } else if (op == "getattr") {
    r.op = EvalOp::GetAttr;
    r.handle = field<std::uint64_t>(j, "handle");
    r.name = field<std::string>(j, "name");
  } else if (op == "call") {
    r.op = EvalOp::Call;
    r.handle = field<std::uint64_t>(j, "handle");
    auto args = j.find("args");
    if (args != j.end()) {
      if (!args->is_array()) throw ProtocolError("bad type for field 'args'");
      for (const auto& a : *args) {
        if (!a.is_object()) throw ProtocolError("bad call argument");
        EvalArg arg;
        if (a.contains("handle")) {
          arg.handle = field<std::uint64_t>(a, "handle");
        } else {
          arg.literal = field<std::string>(a, "literal");
        }
        r.args.push_back(std::move(arg));
      }
    }
  } else if (op == "describe") {
    r.op = EvalOp::Describe;
    if (j.contains("handle")) r.handle = field<std::uint64_t>(j, "handle");
  } else {
    throw ProtocolError("unknown op '" + op + "'");
  }
  return r;
}

EvalResponse response_from_json(const json& j) {
  EvalResponse r;
  r.ok = field<bool>(j, "ok");
  if (r.ok) {
    r.handle = field<std::uint64_t>(j, "handle");
    r.type_name = field<std::string>(j, "type_name");
    if (j.contains("repr")) r.repr = truncate_repr(field<std::string>(j, "repr"));
  } else {
    if (j.contains("error")) r.error = field<std::string>(j, "error");
  }
  return r;
}

}  // namespace

std::string_view op_name(EvalOp op) {
  switch (op) {
    case EvalOp::Eval: return "eval";
    case EvalOp::GetAttr: return "getattr";
    case EvalOp::Call: return "call";
    case EvalOp::Describe: return "describe";
  }
  return "describe";
}

EvalRequest EvalRequest::eval(std::string expr, std::vector<std::string> imports) {
  EvalRequest r;
  r.op = EvalOp::Eval;
  r.expr = std::move(expr);
  r.imports = std::move(imports);
  return r;
}

EvalRequest EvalRequest::getattr(std::uint64_t handle, std::string name) {
  EvalRequest r;
  r.op = EvalOp::GetAttr;
  r.handle = handle;
  r.name = std::move(name);
  return r;
}

EvalRequest EvalRequest::call(std::uint64_t handle, std::vector<EvalArg> args) {
  EvalRequest r;
  r.op = EvalOp::Call;
  r.handle = handle;
  r.args = std::move(args);
  return r;
}

EvalRequest EvalRequest::describe(std::uint64_t handle) {
  EvalRequest r;
  r.op = EvalOp::Describe;
  r.handle = handle;
  return r;
}

EvalResponse EvalResponse::failure(std::string error) {
  EvalResponse r;
  r.error = std::move(error);
  return r;
}

std::string encode(const EvalRequest& request) { return request_json(request).dump(); }
std::string encode(const EvalResponse& response) { return response_json(response).dump(); }
EvalRequest decode_request(std::string_view line) { return request_from_json(parse_object(line)); }
EvalResponse decode_response(std::string_view line) { return response_from_json(parse_object(line)); }
std::string fingerprint(const EvalRequest& request) { return encode(request); }

// ---- fixtures ------------------------------------------------------------------

FixtureEvaluator FixtureEvaluator::from_transcript(std::istream& in) {
  FixtureEvaluator f;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("request") || !j.contains("response")) {
      throw ProtocolError("transcript line " + std::to_string(number) + ": expected {\"request\", \"response\"}");
    }
    f.add(request_from_json(j["request"]), response_from_json(j["response"]));
  }
  return f;
}

FixtureEvaluator FixtureEvaluator::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProtocolError("cannot open fixture transcript " + path.string());
  return from_transcript(in);
}

void FixtureEvaluator::add(const EvalRequest& request, const EvalResponse& response) {
  script_[fingerprint(request)] = response;
}

EvalResponse FixtureEvaluator::evaluate(const EvalRequest& request) {
  auto it = script_.find(fingerprint(request));
  if (it != script_.end()) return it->second;
  unanswered_.push_back(request);
  return EvalResponse::failure("unscripted request");
}

EvalResponse RecordingEvaluator::evaluate(const EvalRequest& request) {
  EvalResponse response = inner_.evaluate(request);
  json line;
  line["request"] = request_json(request);
  line["response"] = response_json(response);
  out_ << line.dump() << "\n";
  out_.flush();
  return response;
}

// ---- sidecar process -------------------------------------------------------------

std::string SidecarEvaluator::default_command() {
  const char* env = std::getenv(kCommandEnv);
  return env && *env ? std::string(env) : std::string(kDefaultCommand);
}

SidecarEvaluator::SidecarEvaluator(Options options) : options_(std::move(options)) {
  if (options_.command.empty()) options_.command = default_command();
}

SidecarEvaluator::~SidecarEvaluator() { stop(); }

bool SidecarEvaluator::start(std::string* error) {
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    if (error) *error = std::string("socketpair: ") + std::strerror(errno);
    return false;
  }
  std::string pythonpath = options_.package_root.empty() ? std::string()
                                                         : std::filesystem::absolute(options_.package_root).string();
  if (const char* existing = std::getenv("PYTHONPATH"); existing && *existing) {
    pythonpath = pythonpath.empty() ? existing : pythonpath + ":" + existing;
  }
  pid_t pid = fork();
  if (pid < 0) {
    if (error) *error = std::string("fork: ") + std::strerror(errno);
    close(fds[0]);
    close(fds[1]);
    return false;
  }
  if (pid == 0) {
    // Own process group, so stop() also reaches whatever the shell spawned.
    setpgid(0, 0);
    dup2(fds[1], STDIN_FILENO);
    dup2(fds[1], STDOUT_FILENO);
    if (!pythonpath.empty()) setenv("PYTHONPATH", pythonpath.c_str(), 1);
    execl("/bin/sh", "sh", "-c", options_.command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fds[1]);
  setpgid(pid, pid);
  pid_ = pid;
  to_child_ = fds[0];
  from_child_ = fds[0];
  EvalResponse hello = evaluate(EvalRequest::describe());
  if (!hello.ok) {
    if (error) *error = "sidecar health check failed: " + hello.error;
    stop();
    return false;
  }
  return true;
}

void SidecarEvaluator::stop() {
  if (to_child_ >= 0) close(to_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(-pid_, SIGKILL);
    int status = 0;
    waitpid(pid_, &status, 0);
  }
  pid_ = -1;
  buffer_.clear();
}

bool SidecarEvaluator::write_line(const std::string& line) {
  std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = send(to_child_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> SidecarEvaluator::read_line(int timeout_ms, bool* closed) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) return std::nullopt;
    pollfd p{from_child_, POLLIN, 0};
    int rc = poll(&p, 1, static_cast<int>(remaining.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return std::nullopt;
    char chunk[4096];
    ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (closed) *closed = true;
      return std::nullopt;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

EvalResponse SidecarEvaluator::evaluate(const EvalRequest& request) {
  if (!alive()) return EvalResponse::failure("sidecar not running");
  if (!write_line(encode(request))) {
    stop();
    return EvalResponse::failure("sidecar connection lost");
  }
  bool closed = false;
  auto line = read_line(options_.timeout_ms + kTimeoutGraceMs, &closed);
  if (!line) {
    // A late answer would pair with the next request; drop the session.
    stop();
    return EvalResponse::failure(closed ? "sidecar exited" : "timeout");
  }
  try {
    return decode_response(*line);
  } catch (const ProtocolError& e) {
    stop();
    return EvalResponse::failure(std::string("protocol error: ") + e.what());
  }
}

// ---- session -----------------------------------------------------------------------

ConcreteSession::ConcreteSession(Evaluator& evaluator, ObjectTable& objects, Diagnostics* diags,
                                 ConcreteOptions options)
    : evaluator_(evaluator), objects_(objects), diags_(diags), options_(options) {}

const ConstObject* ConcreteSession::as_const(ObjectId id) const {
  return std::get_if<ConstObject>(&objects_.get(id));
}

std::optional<ObjectId> ConcreteSession::submit(const EvalRequest& request, std::string_view context) {
  if (exhausted()) {
    if (!budget_reported_ && diags_) {
      diags_->report("<concrete>", 0,
                     "evaluation budget of " + std::to_string(options_.budget) +
                         " requests exhausted; concrete evaluation disabled");
    }
    budget_reported_ = true;
    return std::nullopt;
  }
  ++requests_;
  EvalResponse r = evaluator_.evaluate(request);
  if (!r.ok || r.handle == 0) {
    if (diags_) diags_->report("<concrete>", 0, std::string(context) + ": " + (r.ok ? "no handle" : r.error));
    return std::nullopt;
  }
  return objects_.intern(ConstObject{r.handle, r.type_name, truncate_repr(r.repr)});
}

std::optional<ObjectId> ConcreteSession::eval(std::string_view module, std::string_view expr,
                                              const std::vector<std::string>& imports) {
  auto key = std::make_pair(std::string(module), std::string(expr));
  auto it = eval_memo_.find(key);
  if (it != eval_memo_.end()) return it->second;
  if (exhausted()) return submit(EvalRequest{}, "");
  auto result = submit(EvalRequest::eval(key.second, imports), "eval '" + key.second + "' in " + key.first);
  eval_memo_.emplace(std::move(key), result);
  return result;
}

std::optional<ObjectId> ConcreteSession::getattr(ObjectId object, const std::string& name) {
  const ConstObject* c = as_const(object);
  if (!c) return std::nullopt;
  auto key = std::make_pair(c->handle, name);
  auto it = attr_memo_.find(key);
  if (it != attr_memo_.end()) return it->second;
  if (exhausted()) return submit(EvalRequest{}, "");
  auto result = submit(EvalRequest::getattr(c->handle, name), "getattr " + c->type_name + "." + name);
  attr_memo_.emplace(std::move(key), result);
  return result;
}

std::optional<ObjectId> ConcreteSession::call(ObjectId callee, const std::vector<ObjectId>& args) {
  const ConstObject* c = as_const(callee);
  if (!c) return std::nullopt;
  std::vector<std::uint64_t> handles;
  std::vector<EvalArg> wire;
  for (ObjectId a : args) {
    const ConstObject* ac = as_const(a);
    if (!ac) return std::nullopt;
    handles.push_back(ac->handle);
    wire.push_back(EvalArg{ac->handle, {}});
  }
  auto key = std::make_pair(c->handle, handles);
  auto it = call_memo_.find(key);
  if (it != call_memo_.end()) return it->second;
  if (exhausted()) return submit(EvalRequest{}, "");
  auto result = submit(EvalRequest::call(c->handle, std::move(wire)), "call " + c->type_name + " " + c->repr);
  call_memo_.emplace(std::move(key), result);
  return result;
}

}  // namespace poto
