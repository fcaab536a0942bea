#include <benchmark/benchmark.h>

// The packaged benchmark_main archive carries LTO bytecode from another
// compiler release, so the shared library plus this main is used instead.
BENCHMARK_MAIN();
