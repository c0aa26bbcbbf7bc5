#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poto/analysis.hpp"
#include "poto/concrete.hpp"
#include "poto/results.hpp"

namespace fs = std::filesystem;

namespace {

int compare(const std::vector<std::string>& files, bool verbose) {
  poto::KeyedTypeResult a;
  poto::KeyedTypeResult b;
  try {
    a = poto::load_results(files.at(0));
    b = poto::load_results(files.at(1));
  } catch (const poto::ResultFormatError& e) {
    std::cerr << "poto: " << e.what() << "\n";
    return 1;
  }
  poto::ComparisonSummary summary = poto::compare_results(a, b);
  std::cout << summary;
  if (verbose) {
    for (const auto& d : summary.details) {
      std::cout << poto::verdict_name(d.verdict) << " " << poto::encode_key(d.key) << "\n";
    }
  }
  return 0;
}

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "poto: cannot write " << path << "\n";
    return false;
  }
  out << text;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid points-to analysis and type inference for Python packages", "poto"};

  std::string root;
  std::vector<std::string> entries;
  std::string tests_dir;
  bool no_concrete = false;
  std::size_t budget = poto::ConcreteOptions{}.budget;
  int timeout_ms = 2000;
  std::string output;
  std::vector<std::string> compare_files;
  std::string fixture;
  std::string record;
  std::string graph_file;
  bool dump_tac = false;
  bool verbose = false;

  app.add_option("root", root, "Package root directory");
  app.add_option("--entry", entries, "Extra entry point (module.func or qualname); repeatable");
  app.add_option("--tests-dir", tests_dir, "Directory holding test modules, relative to root");
  app.add_flag("--no-concrete", no_concrete, "Disable concrete evaluation");
  app.add_option("--eval-budget", budget, "Evaluator requests per run")->check(CLI::NonNegativeNumber);
  app.add_option("--timeout-ms", timeout_ms, "Per-request evaluator timeout")->check(CLI::PositiveNumber);
  app.add_option("--output", output, "Result file (stdout when omitted)");
  app.add_option("--compare", compare_files, "Compare two result files")->expected(2);
  app.add_option("--fixture", fixture, "Answer evaluator requests from a recorded transcript");
  app.add_option("--record", record, "Append every evaluator exchange to a transcript file");
  app.add_option("--graph", graph_file, "Write the points-to graph as JSON");
  app.add_flag("--dump-tac", dump_tac, "Print the 3-address code of every reached function");
  app.add_flag("-v,--verbose", verbose, "Print diagnostics and per-key comparison details");

  CLI11_PARSE(app, argc, argv);

  if (!compare_files.empty()) return compare(compare_files, verbose);
  if (root.empty()) {
    std::cerr << "poto: a package root or --compare A B is required\n" << app.help();
    return 2;
  }
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    std::cerr << "poto: package root does not exist or is not a directory: " << root << "\n";
    return 2;
  }

  std::unique_ptr<poto::Evaluator> evaluator;
  if (no_concrete) {
    evaluator = std::make_unique<poto::FailingEvaluator>();
  } else if (!fixture.empty()) {
    try {
      evaluator = std::make_unique<poto::FixtureEvaluator>(poto::FixtureEvaluator::load(fixture));
    } catch (const poto::ProtocolError& e) {
      std::cerr << "poto: " << e.what() << "\n";
      return 2;
    }
  } else {
    auto sidecar = std::make_unique<poto::SidecarEvaluator>(
        poto::SidecarEvaluator::Options{poto::SidecarEvaluator::default_command(), fs::absolute(root), timeout_ms});
    std::string error;
    if (sidecar->start(&error)) {
      evaluator = std::move(sidecar);
    } else {
      std::cerr << "poto: sidecar unavailable (" << error << "); continuing without concrete evaluation\n";
      evaluator = std::make_unique<poto::FailingEvaluator>();
    }
  }

  std::ofstream record_stream;
  std::unique_ptr<poto::RecordingEvaluator> recorder;
  poto::Evaluator* active = evaluator.get();
  if (!record.empty()) {
    record_stream.open(record, std::ios::app);
    if (!record_stream) {
      std::cerr << "poto: cannot write " << record << "\n";
      return 2;
    }
    recorder = std::make_unique<poto::RecordingEvaluator>(*evaluator, record_stream);
    active = recorder.get();
  }

  poto::AnalysisOptions options;
  options.entries = entries;
  if (!tests_dir.empty()) options.tests_dir = fs::path(tests_dir);
  options.concrete.budget = budget;

  std::unique_ptr<poto::Analysis> analysis;
  try {
    analysis = poto::Analysis::from_directory(root, active, options);
  } catch (const poto::ConfigError& e) {
    std::cerr << "poto: " << e.what() << "\n";
    return 2;
  }
  analysis->run();

  poto::KeyedTypeResult result = analysis->types();
  if (verbose) analysis->diagnostics().print(std::cerr);
  if (dump_tac) std::cout << analysis->dump_tac();
  if (!graph_file.empty() && !write_text(graph_file, analysis->export_graph())) return 2;

  std::ostream& summary = output.empty() ? std::cerr : std::cout;
  if (output.empty()) {
    std::cout << poto::serialize_results(result);
  } else if (!write_text(output, poto::serialize_results(result))) {
    return 2;
  }
  summary << poto::coverage(result) << "\n";
  return 0;
}
