#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rulcp/conformal.hpp"
#include "rulcp/models.hpp"
#include "rulcp/types.hpp"

namespace {

using rulcp::LabeledSample;
using rulcp::PredictionInterval;
using rulcp::RegressorSpec;
using namespace rulcp::conformal;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixed-function stand-in for a fitted regressor; lets tests pin exact
// predictions without involving any learner.
class FnModel : public rulcp::models::Model {
  public:
    FnModel(std::function<double(std::span<const double>)> fn, std::size_t dim,
            RegressorSpec spec = {})
        : fn_(std::move(fn)), dim_(dim), spec_(std::move(spec)) {}

    double predict(std::span<const double> x) const override {
        if (x.size() != dim_) {
            throw std::invalid_argument("predict: feature dimension mismatch");
        }
        return fn_(x);
    }
    std::size_t feature_count() const override { return dim_; }
    const RegressorSpec& spec() const override { return spec_; }

  private:
    std::function<double(std::span<const double>)> fn_;
    std::size_t dim_;
    RegressorSpec spec_;
};

std::shared_ptr<FnModel> constant_model(double value, std::size_t dim = 1) {
    return std::make_shared<FnModel>([value](std::span<const double>) { return value; },
                                     dim);
}

std::shared_ptr<FnModel> quantile_model(double value, double tau, std::size_t dim = 1) {
    RegressorSpec spec;
    spec.loss = rulcp::Loss::pinball(tau);
    return std::make_shared<FnModel>([value](std::span<const double>) { return value; },
                                     dim, spec);
}

LabeledSample sample(std::vector<double> x, double y, int cycle = 1) {
    LabeledSample s;
    s.features = std::move(x);
    s.target = y;
    s.cycle_index = cycle;
    return s;
}

std::vector<LabeledSample> residual_calib(double y_hat, const std::vector<double>& res) {
    std::vector<LabeledSample> calib;
    for (double r : res) calib.push_back(sample({0.0}, y_hat + r));
    return calib;
}

bool same_interval(const PredictionInterval& a, const PredictionInterval& b) {
    return a.lower == b.lower && a.upper == b.upper && a.width == b.width &&
           a.raw_lower == b.raw_lower;
}

}  // namespace

TEST_CASE("scp with a perfect model collapses to point intervals") {
    const auto base = std::make_shared<FnModel>(
        [](std::span<const double> x) { return 3.0 * x[0]; }, 1);
    std::vector<LabeledSample> calib;
    for (int i = 0; i < 9; ++i) calib.push_back(sample({double(i)}, 3.0 * i));

    const auto pred = calibrate_scp(base, calib, 0.10);
    CHECK(pred.critical_score() == 0.0);
    const auto interval = pred.predict_interval(std::vector<double>{2.0});
    CHECK(interval.lower == 6.0);
    CHECK(interval.upper == 6.0);
    CHECK(interval.width == 0.0);
    CHECK(interval.covers(6.0));
}

TEST_CASE("scp critical score follows the index rule on known residuals") {
    const auto calib = residual_calib(0.0, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto base = constant_model(0.0);
    CHECK(calibrate_scp(base, calib, 0.10).critical_score() == 9.0);
    CHECK(calibrate_scp(base, calib, 0.25).critical_score() == 8.0);
}

TEST_CASE("scp interval arithmetic") {
    const auto base = constant_model(100.0);
    const auto calib = residual_calib(100.0, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto pred = calibrate_scp(base, calib, 0.10);

    const auto interval = pred.predict_interval(std::vector<double>{0.5});
    CHECK(interval.lower == 91.0);
    CHECK(interval.upper == 109.0);
    CHECK(interval.width == 18.0);
    CHECK(interval.raw_lower == 91.0);
    CHECK(pred.predict_point(std::vector<double>{0.5}) == 100.0);
}

TEST_CASE("nnm normalizes residuals by the difficulty model") {
    const auto base = constant_model(0.0);
    const auto sigma = std::make_shared<FnModel>(
        [](std::span<const double> x) { return x[0]; }, 1);
    const std::vector<LabeledSample> calib = {sample({1.0}, 2.0), sample({2.0}, 4.0)};

    const auto pred = calibrate_scp_nnm(base, sigma, calib, 0.25);
    CHECK(pred.calibration_scores() == std::vector<double>{2.0, 2.0});
    // Two scores cannot carry 75% of the mass: q = +inf, intervals unbounded.
    CHECK(pred.critical_score() == kInf);

    const auto interval = pred.predict_interval(std::vector<double>{1.5});
    CHECK(interval.lower == 0.0);
    CHECK(interval.raw_lower == -kInf);
    CHECK(interval.upper == kInf);
    CHECK(interval.unbounded());
    CHECK(interval.covers(1e12));
}

TEST_CASE("degenerate calibration yields the clamped unbounded interval") {
    const auto base = constant_model(50.0);
    const auto pred = calibrate_scp(base, residual_calib(50.0, {5.0}), 0.10);
    CHECK(pred.critical_score() == kInf);

    const auto interval = pred.predict_interval(std::vector<double>{0.0});
    CHECK(interval.lower == 0.0);
    CHECK(interval.upper == kInf);
    CHECK(interval.unbounded());
}

TEST_CASE("cqr scores take the signed max of the two quantile gaps") {
    const auto q_low = quantile_model(5.0, 0.25);
    const auto q_high = quantile_model(10.0, 0.75);
    const std::vector<LabeledSample> calib = {
        sample({0.0}, 12.0),  // above the band: score 2
        sample({0.0}, 7.0),   // inside the band: score -2
        sample({0.0}, 5.0),   // exactly on the lower edge: score 0
    };
    const auto pred = calibrate_cqr(q_low, q_high, calib, 0.25);
    CHECK(pred.calibration_scores() == std::vector<double>{2.0, -2.0, 0.0});
    CHECK(pred.critical_score() == 2.0);  // k = ceil(4 * 0.75) = 3rd of {-2,0,2}

    const auto interval = pred.predict_interval(std::vector<double>{0.0});
    CHECK(interval.lower == 3.0);
    CHECK(interval.upper == 12.0);
}

TEST_CASE("negative cqr critical score shrinks the raw quantile band") {
    const auto q_low = quantile_model(80.0, 0.25);
    const auto q_high = quantile_model(120.0, 0.75);
    const std::vector<LabeledSample> calib = {
        sample({0.0}, 82.0), sample({0.0}, 82.0), sample({0.0}, 82.0)};

    const auto pred = calibrate_cqr(q_low, q_high, calib, 0.25);
    CHECK(pred.critical_score() == -2.0);
    const auto interval = pred.predict_interval(std::vector<double>{0.0});
    CHECK(interval.lower == 82.0);
    CHECK(interval.upper == 118.0);
    CHECK(interval.width == 36.0);
}

TEST_CASE("cqr swaps crossed quantile predictions before widening") {
    const auto q_low = quantile_model(10.0, 0.25);   // crosses q_high everywhere
    const auto q_high = quantile_model(5.0, 0.75);
    const std::vector<LabeledSample> calib = {
        sample({0.0}, 7.5), sample({0.0}, 7.5), sample({0.0}, 7.5)};

    const auto pred = calibrate_cqr(q_low, q_high, calib, 0.25);
    const auto interval = pred.predict_interval(std::vector<double>{0.0});
    CHECK(interval.lower == 2.5);
    CHECK(interval.upper == 12.5);
    CHECK(interval.width == 10.0);
}

TEST_CASE("cqr validates the quantile model pair") {
    const std::vector<LabeledSample> calib = {sample({0.0}, 1.0)};
    CHECK_THROWS_AS(
        calibrate_cqr(quantile_model(1.0, 0.30), quantile_model(2.0, 0.75), calib, 0.25),
        std::invalid_argument);
    CHECK_THROWS_AS(
        calibrate_cqr(quantile_model(1.0, 0.25), quantile_model(2.0, 0.80), calib, 0.25),
        std::invalid_argument);
    CHECK_THROWS_AS(
        calibrate_cqr(constant_model(1.0), quantile_model(2.0, 0.75), calib, 0.25),
        std::invalid_argument);
    CHECK_THROWS_AS(calibrate_cqr(nullptr, quantile_model(2.0, 0.75), calib, 0.25),
                    std::invalid_argument);
}

TEST_CASE("cqr point predictions come from the median model") {
    const std::vector<LabeledSample> calib = {sample({0.0}, 7.0)};
    const auto with_median =
        calibrate_cqr(quantile_model(5.0, 0.25), quantile_model(10.0, 0.75), calib,
                      0.25, quantile_model(7.5, 0.5));
    CHECK(with_median.predict_point(std::vector<double>{0.0}) == 7.5);

    const auto without_median =
        calibrate_cqr(quantile_model(5.0, 0.25), quantile_model(10.0, 0.75), calib, 0.25);
    CHECK_THROWS_AS(without_median.predict_point(std::vector<double>{0.0}),
                    std::logic_error);
}

TEST_CASE("sigma identically one reproduces scp bitwise") {
    const auto base = std::make_shared<FnModel>(
        [](std::span<const double> x) { return 2.0 * x[0] + 3.0; }, 1);
    oracles::TestRng rng(42);
    std::vector<LabeledSample> calib;
    for (int i = 0; i < 25; ++i) {
        const double x = rng.uniform(-3.0, 3.0);
        calib.push_back(sample({x}, 2.0 * x + 3.0 + rng.uniform(-2.0, 2.0)));
    }

    const auto scp = calibrate_scp(base, calib, 0.10);
    const auto nnm = calibrate_scp_nnm(base, constant_model(1.0), calib, 0.10);
    CHECK(scp.critical_score() == nnm.critical_score());
    for (int i = 0; i < 30; ++i) {
        const std::vector<double> x = {rng.uniform(-3.0, 3.0)};
        CHECK(same_interval(scp.predict_interval(x), nnm.predict_interval(x)));
    }
}

TEST_CASE("nnm intervals are invariant to positive sigma rescaling") {
    const auto base = std::make_shared<FnModel>(
        [](std::span<const double> x) { return x[0] * x[0]; }, 1);
    const auto difficulty = [](std::span<const double> x) {
        return 1.0 + 0.5 * x[0] * x[0];
    };
    const double c = 7.25;
    const auto sigma = std::make_shared<FnModel>(difficulty, 1);
    const auto sigma_scaled = std::make_shared<FnModel>(
        [&, c](std::span<const double> x) { return c * difficulty(x); }, 1);

    oracles::TestRng rng(4242);
    std::vector<LabeledSample> calib;
    for (int i = 0; i < 40; ++i) {
        const double x = rng.uniform(-2.0, 2.0);
        calib.push_back(sample({x}, x * x + rng.uniform(-1.0, 1.0)));
    }

    const auto a = calibrate_scp_nnm(base, sigma, calib, 0.10);
    const auto b = calibrate_scp_nnm(base, sigma_scaled, calib, 0.10);
    for (int i = 0; i < 30; ++i) {
        const std::vector<double> x = {rng.uniform(-2.0, 2.0)};
        const auto ia = a.predict_interval(x);
        const auto ib = b.predict_interval(x);
        CHECK(ia.lower == Catch::Approx(ib.lower).margin(1e-9));
        CHECK(ia.upper == Catch::Approx(ib.upper).margin(1e-9));
        CHECK(ia.width == Catch::Approx(ib.width).margin(1e-9));
    }
}

TEST_CASE("sigma outputs are floored before any division") {
    const auto base = constant_model(0.0);
    const auto sigma = constant_model(0.0);  // degenerate difficulty model
    std::vector<LabeledSample> calib;
    for (int i = 0; i < 9; ++i) calib.push_back(sample({double(i)}, 1.0));

    const auto pred = calibrate_scp_nnm(base, sigma, calib, 0.10);
    for (double s : pred.calibration_scores()) {
        CHECK(std::isfinite(s));
        CHECK(s == 1.0 / kSigmaFloor);
    }
    // q * floored sigma undoes the normalization: half-width 1, clamped at 0.
    const auto interval = pred.predict_interval(std::vector<double>{0.0});
    CHECK(interval.upper == Catch::Approx(1.0));
    CHECK(interval.width == Catch::Approx(2.0));
}

TEST_CASE("nex with decay one reproduces scp bitwise") {
    const auto base = std::make_shared<FnModel>(
        [](std::span<const double> x) { return 5.0 * x[0]; }, 1);
    oracles::TestRng rng(31337);
    std::vector<LabeledSample> calib;
    for (int i = 0; i < 30; ++i) {
        const double x = rng.uniform(0.0, 4.0);
        calib.push_back(sample({x}, 5.0 * x + rng.uniform(-3.0, 3.0),
                               rng.uniform_int(1, 200)));
    }

    const auto scp = calibrate_scp(base, calib, 0.15);
    const auto nex = calibrate_nex(base, calib, 0.15, 1.0);
    CHECK(nex.framework() == Framework::nex_scp);
    for (int i = 0; i < 25; ++i) {
        const std::vector<double> x = {rng.uniform(0.0, 4.0)};
        const int cycle = rng.uniform_int(1, 200);
        CHECK(same_interval(scp.predict_interval(x),
                            nex.predict_interval(x, cycle)));
    }
}

TEST_CASE("nex with uniform cycle distances reproduces the scp critical score") {
    const auto base = constant_model(0.0);
    std::vector<LabeledSample> calib;
    for (int i = 1; i <= 9; ++i) calib.push_back(sample({0.0}, double(i), 17));

    const auto nex = calibrate_nex(base, calib, 0.10, 0.9);
    const auto scp = calibrate_scp(base, calib, 0.10);
    CHECK(nex.query_critical_score(17) == scp.critical_score());
}

TEST_CASE("nex per-query critical scores match the weighted oracle") {
    const auto base = std::make_shared<FnModel>(
        [](std::span<const double> x) { return x[0]; }, 1);
    oracles::TestRng rng(271828);
    std::vector<LabeledSample> calib;
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform(0.0, 10.0);
        calib.push_back(
            sample({x}, x + rng.uniform(-4.0, 4.0), rng.uniform_int(1, 60)));
    }
    const double decay = 0.97;
    const auto nex = calibrate_nex(base, calib, 0.10, decay);

    for (int t_new : {1, 7, 30, 60}) {
        std::vector<double> weights;
        for (const auto& s : calib) {
            weights.push_back(std::pow(decay, std::abs(t_new - s.cycle_index)));
        }
        const double expected =
            oracles::weighted_quantile(nex.calibration_scores(), weights, 0.10);
        const double actual = nex.query_critical_score(t_new);
        if (std::isinf(expected)) {
            CHECK(std::isinf(actual));
        } else {
            CHECK(actual == expected);
        }
    }
}

TEST_CASE("nex requires cycle information") {
    const auto base = constant_model(0.0);
    std::vector<LabeledSample> calib;
    for (int i = 1; i <= 5; ++i) calib.push_back(sample({0.0}, double(i), i));

    const auto nex = calibrate_nex(base, calib, 0.10, 0.99);
    CHECK_THROWS_AS(nex.predict_interval(std::vector<double>{0.0}),
                    std::invalid_argument);

    std::vector<LabeledSample> bad = calib;
    bad[2].cycle_index = 0;
    CHECK_THROWS_AS(calibrate_nex(base, bad, 0.10, 0.99), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_nex(base, calib, 0.10, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_nex(base, calib, 0.10, 1.5), std::invalid_argument);
}

TEST_CASE("nex with a sigma model becomes nex_scp_nnm") {
    const auto base = constant_model(0.0);
    const auto sigma = constant_model(2.0);
    std::vector<LabeledSample> calib;
    for (int i = 1; i <= 9; ++i) calib.push_back(sample({0.0}, double(i), i));

    const auto nex = calibrate_nex(base, calib, 0.10, 1.0, sigma);
    CHECK(nex.framework() == Framework::nex_scp_nnm);
    // Scores are halved by sigma = 2, then the interval multiplies q back.
    CHECK(nex.calibration_scores()[8] == 4.5);
    const auto interval = nex.predict_interval(std::vector<double>{0.0}, 5);
    const auto plain = calibrate_scp(base, calib, 0.10)
                           .predict_interval(std::vector<double>{0.0});
    CHECK(interval.upper == plain.upper);
    CHECK(interval.width == plain.width);
}

TEST_CASE("widths are monotone in alpha at fixed calibration") {
    const auto base = std::make_shared<FnModel>(
        [](std::span<const double> x) { return 10.0 * x[0]; }, 1);
    const auto sigma = std::make_shared<FnModel>(
        [](std::span<const double> x) { return 1.0 + std::abs(x[0]); }, 1);
    oracles::TestRng rng(555);
    std::vector<LabeledSample> calib;
    for (int i = 0; i < 60; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        calib.push_back(sample({x}, 10.0 * x + rng.uniform(-5.0, 5.0),
                               rng.uniform_int(1, 40)));
    }

    const std::vector<double> alphas = {0.10, 0.15, 0.20, 0.25};
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> x = {rng.uniform(-1.0, 1.0)};
        const int cycle = rng.uniform_int(1, 40);
        double prev_scp = kInf, prev_nnm = kInf, prev_nex = kInf;
        for (double alpha : alphas) {
            const double w_scp =
                calibrate_scp(base, calib, alpha).predict_interval(x).width;
            const double w_nnm = calibrate_scp_nnm(base, sigma, calib, alpha)
                                     .predict_interval(x)
                                     .width;
            const double w_nex = calibrate_nex(base, calib, alpha, 0.95)
                                     .predict_interval(x, cycle)
                                     .width;
            CHECK(w_scp <= prev_scp);
            CHECK(w_nnm <= prev_nnm);
            CHECK(w_nex <= prev_nex);
            prev_scp = w_scp;
            prev_nnm = w_nnm;
            prev_nex = w_nex;
        }
    }
}

TEST_CASE("scp width is constant across test points") {
    const auto base = std::make_shared<FnModel>(
        [](std::span<const double> x) { return 50.0 + 20.0 * std::sin(x[0]); }, 1);
    oracles::TestRng rng(808);
    std::vector<LabeledSample> calib;
    for (int i = 0; i < 35; ++i) {
        const double x = rng.uniform(-3.0, 3.0);
        calib.push_back(
            sample({x}, 50.0 + 20.0 * std::sin(x) + rng.uniform(-4.0, 4.0)));
    }
    const auto pred = calibrate_scp(base, calib, 0.20);
    const double expected = 2.0 * pred.critical_score();
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> x = {rng.uniform(-3.0, 3.0)};
        CHECK(pred.predict_interval(x).width == expected);
    }
}

TEST_CASE("framework names round-trip") {
    for (Framework framework : all_frameworks()) {
        CHECK(framework_from_string(to_string(framework)) == framework);
    }
    CHECK_THROWS_AS(framework_from_string("jackknife"), std::invalid_argument);
    CHECK(is_nex(Framework::nex_scp_nnm));
    CHECK_FALSE(is_nex(Framework::cqr));
    CHECK(uses_sigma(Framework::scp_nnm));
    CHECK_FALSE(uses_sigma(Framework::nex_scp));
}

TEST_CASE("calibration rejects empty sets and bad alphas") {
    const auto base = constant_model(0.0);
    CHECK_THROWS_AS(calibrate_scp(base, {}, 0.10), std::invalid_argument);
    const std::vector<LabeledSample> calib = {sample({0.0}, 1.0)};
    CHECK_THROWS_AS(calibrate_scp(base, calib, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_scp(base, calib, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_scp_nnm(base, nullptr, calib, 0.1),
                    std::invalid_argument);

    const auto scp = calibrate_scp(base, calib, 0.10);
    CHECK_THROWS_AS(scp.query_critical_score(1), std::logic_error);
    const auto nex = calibrate_nex(base, calib, 0.10, 0.99);
    CHECK_THROWS_AS(nex.critical_score(), std::logic_error);
}
