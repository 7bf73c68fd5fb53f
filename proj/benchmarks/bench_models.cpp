#include <benchmark/benchmark.h>

#include "rulcp/eval.hpp"
#include "rulcp/models.hpp"
#include "rulcp/types.hpp"

namespace {

rulcp::RegressorSpec spec_of(rulcp::LearnerKind kind, int n_estimators) {
    rulcp::RegressorSpec spec;
    spec.kind = kind;
    if (kind != rulcp::LearnerKind::regression_tree &&
        kind != rulcp::LearnerKind::knn) {
        spec.params["n_estimators"] = double(n_estimators);
    }
    return spec;
}

std::vector<rulcp::LabeledSample> pool(int n) {
    return rulcp::eval::synth_generate(n, 1, 1,
                                       rulcp::eval::NoiseKind::heteroscedastic, 3)
        .train;
}

void bm_fit(benchmark::State& state, rulcp::LearnerKind kind) {
    const auto data = pool(static_cast<int>(state.range(0)));
    const auto spec = spec_of(kind, 50);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rulcp::models::fit(spec, data));
    }
}

void bm_predict(benchmark::State& state, rulcp::LearnerKind kind) {
    const auto data = pool(static_cast<int>(state.range(0)));
    const auto model = rulcp::models::fit(spec_of(kind, 50), data);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model->predict(data[i % data.size()].features));
        ++i;
    }
}

void bm_fit_tree(benchmark::State& state) {
    bm_fit(state, rulcp::LearnerKind::regression_tree);
}
void bm_fit_forest(benchmark::State& state) {
    bm_fit(state, rulcp::LearnerKind::random_forest);
}
void bm_fit_boosting(benchmark::State& state) {
    bm_fit(state, rulcp::LearnerKind::gradient_boosting);
}
void bm_predict_knn(benchmark::State& state) {
    bm_predict(state, rulcp::LearnerKind::knn);
}
void bm_predict_boosting(benchmark::State& state) {
    bm_predict(state, rulcp::LearnerKind::gradient_boosting);
}

}  // namespace

BENCHMARK(bm_fit_tree)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_fit_forest)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_fit_boosting)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_predict_knn)->Arg(1000)->Arg(5000);
BENCHMARK(bm_predict_boosting)->Arg(1000)->Arg(5000);

BENCHMARK_MAIN();
