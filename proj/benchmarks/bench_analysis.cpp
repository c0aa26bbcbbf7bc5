#include <benchmark/benchmark.h>

#include <string>

#include "poto/analysis.hpp"
#include "poto/parser.hpp"

namespace {

// n classes, each with a method that stores into and reads from a field,
// driven from one main that chains them together.
std::string synthetic(int n) {
  std::string src;
  for (int i = 0; i < n; ++i) {
    auto c = "C" + std::to_string(i);
    src += "class " + c + ":\n";
    src += "    def __init__(self, v):\n        self.v = v\n";
    src += "    def get(self):\n        return self.v\n";
    src += "def f" + std::to_string(i) + "(x):\n    return " + c + "(x).get()\n\n";
  }
  src += "def main(seed):\n    x = [seed]\n";
  for (int i = 0; i < n; ++i) src += "    x = f" + std::to_string(i) + "(x)\n";
  return src;
}

void BM_Parse(benchmark::State& state) {
  std::string src = synthetic(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto m = poto::py::parse_module(src);
    benchmark::DoNotOptimize(m.body.size());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_Parse)->Range(8, 512);

void BM_Analyze(benchmark::State& state) {
  std::string src = synthetic(static_cast<int>(state.range(0)));
  poto::AnalysisOptions options;
  options.entries = {"main"};
  for (auto _ : state) {
    auto a = poto::Analysis::from_sources({{"bench", src}}, nullptr, options);
    a->run();
    benchmark::DoNotOptimize(a->graph().edge_count());
  }
}
BENCHMARK(BM_Analyze)->Range(8, 256)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
