#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "habcast/stream/adwin.hpp"
#include "habcast/stream/hoeffding.hpp"
#include "habcast/stream/knn_stream.hpp"

using namespace habcast;

namespace {

std::vector<std::vector<double>> features(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
    for (auto& x : xs) {
        for (auto& v : x) v = u(rng);
    }
    return xs;
}

void BM_AdwinUpdate(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    Adwin a(0.002);
    for (auto _ : state) benchmark::DoNotOptimize(a.update(g(rng)));
}
BENCHMARK(BM_AdwinUpdate);

template <bool Adaptive>
void BM_HoeffdingLearnOne(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto xs = features(4096, dim, 2);
    HoeffdingSpec spec;
    spec.grace_period = 30;
    HoeffdingTreeRegressor tree(spec, Adaptive);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& x = xs[i++ % xs.size()];
        tree.learn_one(x, x[0] > 0.0 ? 1.0 + x[1] : -x[1]);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK_TEMPLATE(BM_HoeffdingLearnOne, false)->Arg(8)->Arg(64);
BENCHMARK_TEMPLATE(BM_HoeffdingLearnOne, true)->Arg(8)->Arg(64);

void BM_KnnStreamPredict(benchmark::State& state) {
    const auto xs = features(2000, 32, 3);
    KnnStreamRegressor m(KnnStreamSpec{5});
    for (std::size_t i = 0; i < 1000; ++i) m.learn_one(xs[i], static_cast<double>(i));
    std::size_t i = 1000;
    for (auto _ : state) benchmark::DoNotOptimize(m.predict(xs[i++ % xs.size()]));
}
BENCHMARK(BM_KnnStreamPredict);

} // namespace
