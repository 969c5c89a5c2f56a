#include <benchmark/benchmark.h>

#include "deepgroup/runtime.hpp"

int main(int argc, char** argv) {
  deepgroup::tune_allocator();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
