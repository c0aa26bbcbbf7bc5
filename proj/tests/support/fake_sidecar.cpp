// Canned evaluator process for the wire client tests.
//   fake_sidecar            answers every request
//   fake_sidecar unhealthy  fails the describe health check
//   fake_sidecar silent     reads requests and never answers
// Special eval expressions: hang, crash, garbage, fail, long, pythonpath.
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "poto/concrete.hpp"

using namespace poto;

int main(int argc, char** argv) {
  std::string mode = argc > 1 ? argv[1] : "";
  std::uint64_t next = 1;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (mode == "silent") continue;
    EvalRequest req;
    try {
      req = decode_request(line);
    } catch (const ProtocolError&) {
      std::cout << encode(EvalResponse::failure("protocol error")) << std::endl;
      continue;
    }
    EvalResponse resp;
    resp.ok = true;
    switch (req.op) {
      case EvalOp::Describe:
        if (mode == "unhealthy") {
          resp = EvalResponse::failure("not ready");
        } else {
          resp.handle = req.handle;
          resp.type_name = "sidecar";
          resp.repr = "fake";
        }
        break;
      case EvalOp::Eval:
        if (req.expr == "hang") std::this_thread::sleep_for(std::chrono::hours(1));
        if (req.expr == "crash") return 3;
        if (req.expr == "garbage") {
          std::cout << "this is not json" << std::endl;
          continue;
        }
        if (req.expr == "fail") {
          resp = EvalResponse::failure("NameError: name 'fail' is not defined");
          break;
        }
        resp.handle = next++;
        resp.type_name = "str";
        if (req.expr == "long") {
          resp.repr = std::string(1000, 'x');
        } else if (req.expr == "pythonpath") {
          const char* p = std::getenv("PYTHONPATH");
          resp.repr = p ? p : "";
        } else {
          resp.repr = req.expr;
          for (const auto& i : req.imports) resp.repr += "|" + i;
        }
        break;
      case EvalOp::GetAttr:
        resp.handle = next++;
        resp.type_name = "builtin_function_or_method";
        resp.repr = req.name;
        break;
      case EvalOp::Call:
        resp.handle = next++;
        resp.type_name = "int";
        resp.repr = std::to_string(req.args.size());
        break;
    }
    std::cout << encode(resp) << std::endl;
  }
  return 0;
}
