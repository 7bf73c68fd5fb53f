#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rulcp/models.hpp"
#include "rulcp/types.hpp"

namespace {

using rulcp::LabeledSample;
using rulcp::LearnerKind;
using rulcp::Loss;
using rulcp::RegressorSpec;

LabeledSample sample(std::vector<double> x, double y) {
    LabeledSample s;
    s.features = std::move(x);
    s.target = y;
    return s;
}

RegressorSpec spec_of(LearnerKind kind, Loss loss = Loss::squared()) {
    RegressorSpec spec;
    spec.kind = kind;
    spec.loss = loss;
    return spec;
}

std::vector<double> point(double x) { return {x}; }

}  // namespace

TEST_CASE("1-NN memorizes its training point") {
    RegressorSpec spec = spec_of(LearnerKind::knn);
    spec.params["k"] = 1.0;

    const std::vector<LabeledSample> data = {sample({0.0}, 5.0)};
    const auto model = rulcp::models::fit(spec, data);
    CHECK(model->predict(point(0.0)) == 5.0);
    CHECK(model->predict(point(42.0)) == 5.0);
    CHECK(model->feature_count() == 1);
}

TEST_CASE("knn averages the k nearest targets") {
    RegressorSpec spec = spec_of(LearnerKind::knn);
    spec.params["k"] = 2.0;
    const std::vector<LabeledSample> data = {
        sample({0.0}, 1.0), sample({1.0}, 3.0), sample({10.0}, 100.0)};
    const auto model = rulcp::models::fit(spec, data);
    CHECK(model->predict(point(0.4)) == 2.0);
}

TEST_CASE("gradient boosting reproduces a constant target exactly") {
    const std::vector<LabeledSample> data = {
        sample({0.0, 1.0}, 7.5), sample({2.0, -1.0}, 7.5), sample({5.0, 3.0}, 7.5)};
    const auto model = rulcp::models::fit(spec_of(LearnerKind::gradient_boosting), data);
    CHECK(model->predict(std::vector<double>{1.0, 1.0}) == 7.5);
    CHECK(model->predict(std::vector<double>{-9.0, 4.0}) == 7.5);
}

TEST_CASE("depth-0 squared-error leaf stores the target mean") {
    RegressorSpec spec = spec_of(LearnerKind::regression_tree);
    spec.params["max_depth"] = 0.0;
    const std::vector<LabeledSample> data = {sample({0.0}, 1.0), sample({1.0}, 3.0)};
    const auto model = rulcp::models::fit(spec, data);
    CHECK(model->predict(point(0.0)) == 2.0);
    CHECK(model->predict(point(100.0)) == 2.0);
}

TEST_CASE("depth-0 pinball leaf stores the empirical quantile") {
    RegressorSpec spec = spec_of(LearnerKind::regression_tree, Loss::pinball(0.9));
    spec.params["max_depth"] = 0.0;
    std::vector<LabeledSample> data;
    for (int i = 1; i <= 10; ++i) data.push_back(sample({double(i)}, double(i)));
    const auto model = rulcp::models::fit(spec, data);

    // ceil(0.9 * 10) = 9th smallest of {1..10}; cross-check against the
    // exhaustive loss minimizer.
    CHECK(model->predict(point(0.0)) == 9.0);
    std::vector<double> targets;
    for (const auto& s : data) targets.push_back(s.target);
    CHECK(oracles::pinball_loss_at(targets, 0.9, 9.0) ==
          Catch::Approx(oracles::best_pinball_loss(targets, 0.9)));
}

TEST_CASE("empirical quantile is the brute-force pinball minimizer") {
    using rulcp::models::empirical_quantile;
    CHECK(empirical_quantile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.9) == 9.0);
    CHECK(empirical_quantile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.5) == 5.0);
    CHECK(empirical_quantile({4.0}, 0.1) == 4.0);
    CHECK(empirical_quantile({4.0}, 0.99) == 4.0);

    oracles::TestRng rng(314);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = rng.uniform_int(1, 20);
        std::vector<double> targets;
        for (int i = 0; i < n; ++i) targets.push_back(rng.uniform(-50.0, 50.0));
        if (n >= 3 && trial % 5 == 0) targets[2] = targets[0];  // exact ties
        for (double tau : {0.1, 0.5, 0.9}) {
            const double value = empirical_quantile(targets, tau);
            const double loss = oracles::pinball_loss_at(targets, tau, value);
            const double best = oracles::best_pinball_loss(targets, tau);
            INFO("trial " << trial << " tau " << tau);
            CHECK(loss <= best + 1e-12);
        }
    }
}

TEST_CASE("pinball loss is asymmetric around the prediction") {
    using rulcp::models::pinball_loss;
    CHECK(pinball_loss(0.9, 10.0, 9.0) == Catch::Approx(0.9));   // under-prediction
    CHECK(pinball_loss(0.9, 9.0, 10.0) == Catch::Approx(0.1));   // over-prediction
    CHECK(pinball_loss(0.5, 3.0, 3.0) == 0.0);

    const std::vector<double> y = {1.0, 2.0};
    const std::vector<double> y_hat = {0.0, 3.0};
    // Mean of tau * 1 and (1 - tau) * 1.
    CHECK(rulcp::models::mean_pinball_loss(0.25, y, y_hat) == Catch::Approx(0.5));
}

TEST_CASE("pinball boosting beats the constant baseline on noiseless data") {
    std::vector<LabeledSample> data;
    std::vector<double> targets;
    for (int i = 0; i < 60; ++i) {
        const double x = -3.0 + 0.1 * i;
        data.push_back(sample({x}, 2.0 * x));
        targets.push_back(2.0 * x);
    }
    RegressorSpec spec = spec_of(LearnerKind::gradient_boosting, Loss::pinball(0.5));
    const auto model = rulcp::models::fit(spec, data);

    double fitted_loss = 0.0;
    for (const auto& s : data) {
        fitted_loss +=
            rulcp::models::pinball_loss(0.5, s.target, model->predict(s.features));
    }
    fitted_loss /= double(data.size());

    const double baseline = oracles::best_pinball_loss(targets, 0.5);
    CHECK(fitted_loss < baseline);
}

TEST_CASE("identical spec, data, and seed give bitwise-identical predictions") {
    oracles::TestRng rng(99);
    std::vector<LabeledSample> data;
    for (int i = 0; i < 80; ++i) {
        const double a = rng.uniform(-2.0, 2.0);
        const double b = rng.uniform(-2.0, 2.0);
        data.push_back(sample({a, b}, a * a + 3.0 * b + rng.uniform(-0.1, 0.1)));
    }
    std::vector<std::vector<double>> queries;
    for (int i = 0; i < 25; ++i) {
        queries.push_back({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
    }

    for (LearnerKind kind : {LearnerKind::knn, LearnerKind::regression_tree,
                             LearnerKind::random_forest,
                             LearnerKind::gradient_boosting}) {
        RegressorSpec spec = spec_of(kind);
        spec.seed = 1234;
        if (kind == LearnerKind::random_forest ||
            kind == LearnerKind::gradient_boosting) {
            spec.params["n_estimators"] = 25.0;
        }
        const auto first = rulcp::models::fit(spec, data);
        const auto second = rulcp::models::fit(spec, data);
        for (const auto& x : queries) {
            INFO(rulcp::to_string(kind));
            CHECK(first->predict(x) == second->predict(x));
        }
    }
}

TEST_CASE("forest and boosting track a smooth signal better than a constant") {
    oracles::TestRng rng(7);
    std::vector<LabeledSample> data;
    for (int i = 0; i < 300; ++i) {
        const double x = rng.uniform(-2.0, 2.0);
        data.push_back(sample({x}, std::sin(2.0 * x) * 10.0));
    }
    double mean = 0.0;
    for (const auto& s : data) mean += s.target;
    mean /= double(data.size());

    for (LearnerKind kind :
         {LearnerKind::random_forest, LearnerKind::gradient_boosting}) {
        RegressorSpec spec = spec_of(kind);
        spec.params["n_estimators"] = 40.0;
        const auto model = rulcp::models::fit(spec, data);
        double model_sse = 0.0;
        double const_sse = 0.0;
        for (const auto& s : data) {
            const double y_hat = model->predict(s.features);
            CHECK(std::isfinite(y_hat));
            model_sse += (s.target - y_hat) * (s.target - y_hat);
            const_sse += (s.target - mean) * (s.target - mean);
        }
        INFO(rulcp::to_string(kind));
        CHECK(model_sse < 0.2 * const_sse);
    }
}

TEST_CASE("fit rejects malformed inputs") {
    CHECK_THROWS_AS(rulcp::models::fit(spec_of(LearnerKind::knn), {}),
                    std::invalid_argument);

    const std::vector<LabeledSample> ragged = {sample({1.0}, 1.0),
                                               sample({1.0, 2.0}, 2.0)};
    CHECK_THROWS_AS(rulcp::models::fit(spec_of(LearnerKind::regression_tree), ragged),
                    std::invalid_argument);

    RegressorSpec bad_k = spec_of(LearnerKind::knn);
    bad_k.params["k"] = 0.0;
    const std::vector<LabeledSample> ok = {sample({1.0}, 1.0), sample({2.0}, 2.0)};
    CHECK_THROWS_AS(rulcp::models::fit(bad_k, ok), std::invalid_argument);

    RegressorSpec unknown = spec_of(LearnerKind::gradient_boosting);
    unknown.params["n_trees"] = 10.0;
    CHECK_THROWS_AS(rulcp::models::fit(unknown, ok), std::invalid_argument);

    RegressorSpec knn_lr = spec_of(LearnerKind::knn);
    knn_lr.params["learning_rate"] = 0.1;
    CHECK_THROWS_AS(rulcp::models::fit(knn_lr, ok), std::invalid_argument);

    CHECK_THROWS_AS(rulcp::Loss::pinball(0.0), std::invalid_argument);
    CHECK_THROWS_AS(rulcp::Loss::pinball(1.0), std::invalid_argument);
}

TEST_CASE("predict validates the query dimension") {
    const std::vector<LabeledSample> data = {sample({1.0, 2.0}, 1.0),
                                             sample({2.0, 1.0}, 2.0)};
    const auto model = rulcp::models::fit(spec_of(LearnerKind::regression_tree), data);
    CHECK_THROWS_AS(model->predict(point(1.0)), std::invalid_argument);
    CHECK_NOTHROW(model->predict(std::vector<double>{1.0, 2.0}));
}
