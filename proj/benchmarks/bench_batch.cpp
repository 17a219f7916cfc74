#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "habcast/batch/forest.hpp"
#include "habcast/batch/knn.hpp"

using namespace habcast;

namespace {

void make_data(std::size_t n, std::size_t dim, Matrix& x, std::vector<double>& y) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    x = Matrix(n, dim);
    y.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) x(i, j) = u(rng);
        y[i] = std::sin(3.0 * x(i, 0)) + x(i, 1) * x(i, 2);
    }
}

void BM_ForestFit(benchmark::State& state) {
    Matrix x;
    std::vector<double> y;
    make_data(static_cast<std::size_t>(state.range(0)), 20, x, y);
    ForestSpec spec;
    spec.n_trees = 20;
    spec.max_depth = 10;
    for (auto _ : state) {
        RandomForest rf(spec, 7);
        rf.fit(x, y);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_ForestFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KnnPredict(benchmark::State& state) {
    Matrix x;
    std::vector<double> y;
    make_data(static_cast<std::size_t>(state.range(0)), 32, x, y);
    KnnRegressor knn(KnnSpec{5});
    knn.fit(x, y);
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(knn.predict(x.row(i++ % x.rows())));
}
BENCHMARK(BM_KnnPredict)->Arg(1000)->Arg(2000);

} // namespace
