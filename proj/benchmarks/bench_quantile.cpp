#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "rulcp/quantile.hpp"

namespace {

std::vector<double> random_scores(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<double> dist(0.0, 100.0);
    std::vector<double> scores(n);
    for (double& s : scores) s = dist(engine);
    return scores;
}

void bm_conformal_quantile(benchmark::State& state) {
    const auto scores = random_scores(static_cast<std::size_t>(state.range(0)), 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rulcp::quantile::conformal_quantile(scores, 0.1));
    }
}

void bm_weighted_conformal_quantile(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    rulcp::quantile::ScoreDistribution dist;
    dist.scores = random_scores(n, 11);
    std::mt19937_64 engine(13);
    std::uniform_real_distribution<double> weight(0.01, 1.0);
    dist.weights.resize(n);
    for (double& w : dist.weights) w = weight(engine);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            rulcp::quantile::weighted_conformal_quantile(dist, 0.1));
    }
}

}  // namespace

BENCHMARK(bm_conformal_quantile)->Arg(100)->Arg(1000)->Arg(10000);
BENCHMARK(bm_weighted_conformal_quantile)->Arg(100)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
