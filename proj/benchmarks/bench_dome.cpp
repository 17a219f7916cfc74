#include <random>

#include <benchmark/benchmark.h>

#include "habcast/dome.hpp"

using namespace habcast;

namespace {

void BM_DomeFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    Matrix x(n, 6);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 6; ++j) x(i, j) = u(rng);
        y[i] = 2.0 * x(i, 0) + x(i, 1) / (x(i, 2) + 5.0);
    }
    DomeSpec spec;
    spec.max_num_nodes = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(dome_fit(x, y, spec).mse);
}
BENCHMARK(BM_DomeFit)->Args({500, 10})->Args({500, 30})->Args({2000, 30})->Unit(benchmark::kMillisecond);

void BM_TreeEvaluate(benchmark::State& state) {
    const auto t = parse_equation("1.5 + 2 * x0 - x1 / (x2 + 5) * x3");
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
    for (auto _ : state) benchmark::DoNotOptimize(t.evaluate(x));
}
BENCHMARK(BM_TreeEvaluate);

} // namespace
