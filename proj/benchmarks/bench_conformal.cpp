#include <memory>

#include <benchmark/benchmark.h>

#include "rulcp/conformal.hpp"
#include "rulcp/eval.hpp"
#include "rulcp/models.hpp"

namespace {

struct Fixture {
    rulcp::eval::SynthSets sets;
    std::shared_ptr<const rulcp::models::Model> model;

    explicit Fixture(int n_calib)
        : sets(rulcp::eval::synth_generate(
              2000, n_calib, 200, rulcp::eval::NoiseKind::heteroscedastic, 5)) {
        rulcp::RegressorSpec spec;
        spec.kind = rulcp::LearnerKind::gradient_boosting;
        spec.params["n_estimators"] = 50.0;
        model = rulcp::models::fit(spec, sets.train);
    }
};

void bm_calibrate_scp(benchmark::State& state) {
    const Fixture fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            rulcp::conformal::calibrate_scp(fixture.model, fixture.sets.calib, 0.1));
    }
}

void bm_predict_interval_scp(benchmark::State& state) {
    const Fixture fixture(static_cast<int>(state.range(0)));
    const auto predictor =
        rulcp::conformal::calibrate_scp(fixture.model, fixture.sets.calib, 0.1);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& x = fixture.sets.test[i % fixture.sets.test.size()].features;
        benchmark::DoNotOptimize(predictor.predict_interval(x));
        ++i;
    }
}

void bm_predict_interval_nex(benchmark::State& state) {
    const Fixture fixture(static_cast<int>(state.range(0)));
    const auto predictor = rulcp::conformal::calibrate_nex(
        fixture.model, fixture.sets.calib, 0.1, 0.99);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& s = fixture.sets.test[i % fixture.sets.test.size()];
        benchmark::DoNotOptimize(
            predictor.predict_interval(s.features, s.cycle_index));
        ++i;
    }
}

}  // namespace

BENCHMARK(bm_calibrate_scp)->Arg(500)->Arg(5000);
BENCHMARK(bm_predict_interval_scp)->Arg(500)->Arg(5000);
BENCHMARK(bm_predict_interval_nex)->Arg(500)->Arg(5000);

BENCHMARK_MAIN();
