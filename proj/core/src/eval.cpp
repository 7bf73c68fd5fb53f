#include "rulcp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

#include "rng.hpp"

namespace rulcp::eval {

namespace {

constexpr int kSynthDim = 3;

void check_fraction(double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("calib_fraction must lie in (0,1)");
    }
}

}  // namespace

UnitSplit split_units(std::vector<int> unit_ids, const SplitPlan& plan) {
    check_fraction(plan.calib_fraction);
    std::sort(unit_ids.begin(), unit_ids.end());
    unit_ids.erase(std::unique(unit_ids.begin(), unit_ids.end()), unit_ids.end());
    const std::size_t n = unit_ids.size();
    if (n < 2) {
        throw std::invalid_argument("split_units: need at least 2 units");
    }
    const long n_calib = std::lround(plan.calib_fraction * static_cast<double>(n));
    if (n_calib < 1 || n_calib >= static_cast<long>(n)) {
        throw std::invalid_argument(
            "split_units: rounding left an empty side (n_calib = " +
            std::to_string(n_calib) + " of " + std::to_string(n) + ")");
    }
    detail::Rng rng(plan.seed);
    rng.shuffle(unit_ids);

    UnitSplit split;
    split.calib_units.assign(unit_ids.begin(), unit_ids.begin() + n_calib);
    split.train_units.assign(unit_ids.begin() + n_calib, unit_ids.end());
    std::sort(split.calib_units.begin(), split.calib_units.end());
    std::sort(split.train_units.begin(), split.train_units.end());
    return split;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> partition_samples(
    const std::vector<LabeledSample>& samples, const UnitSplit& split) {
    std::unordered_set<int> train_ids(split.train_units.begin(),
                                      split.train_units.end());
    std::unordered_set<int> calib_ids(split.calib_units.begin(),
                                      split.calib_units.end());
    std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> out;
    for (const LabeledSample& s : samples) {
        if (train_ids.count(s.unit_id)) {
            out.first.push_back(s);
        } else if (calib_ids.count(s.unit_id)) {
            out.second.push_back(s);
        } else {
            throw std::invalid_argument("partition_samples: unit " +
                                        std::to_string(s.unit_id) +
                                        " is in neither side of the split");
        }
    }
    return out;
}

std::vector<int> unique_unit_ids(const std::vector<LabeledSample>& samples) {
    std::vector<int> ids;
    ids.reserve(samples.size());
    for (const LabeledSample& s : samples) ids.push_back(s.unit_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::string to_string(NoiseKind kind) {
    return kind == NoiseKind::homoscedastic ? "homoscedastic" : "heteroscedastic";
}

NoiseKind noise_kind_from_string(const std::string& name) {
    if (name == "homoscedastic") return NoiseKind::homoscedastic;
    if (name == "heteroscedastic") return NoiseKind::heteroscedastic;
    throw std::invalid_argument("unknown noise kind: " + name);
}

double synth_mean(std::span<const double> x) {
    if (x.size() != kSynthDim) {
        throw std::invalid_argument("synth_mean: expected 3 features");
    }
    return 100.0 + 20.0 * std::sin(1.5 * x[0]) + 10.0 * x[1] * x[1] + 5.0 * x[2];
}

double synth_noise_scale(NoiseKind kind, std::span<const double> x) {
    if (x.size() != kSynthDim) {
        throw std::invalid_argument("synth_noise_scale: expected 3 features");
    }
    if (kind == NoiseKind::homoscedastic) {
        return 5.0;
    }
    double norm2 = 0.0;
    for (double v : x) norm2 += v * v;
    return 1.0 + 3.0 * std::sqrt(norm2);
}

namespace {

std::vector<LabeledSample> draw_samples(int n, NoiseKind noise, detail::Rng& rng,
                                        int first_unit_id) {
    std::vector<LabeledSample> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        LabeledSample s;
        s.unit_id = first_unit_id + i;
        s.cycle_index = 1;
        s.features.resize(kSynthDim);
        for (double& f : s.features) f = -2.0 + 4.0 * rng.uniform();
        s.target = synth_mean(s.features) +
                   synth_noise_scale(noise, s.features) * rng.normal();
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace

SynthSets synth_generate(int n_train, int n_calib, int n_test, NoiseKind noise,
                         std::uint64_t seed) {
    if (n_train < 1 || n_calib < 1 || n_test < 1) {
        throw std::invalid_argument("synth_generate: all sizes must be >= 1");
    }
    detail::Rng rng(seed);
    SynthSets sets;
    sets.train = draw_samples(n_train, noise, rng, 1);
    sets.calib = draw_samples(n_calib, noise, rng, 1 + n_train);
    sets.test = draw_samples(n_test, noise, rng, 1 + n_train + n_calib);
    return sets;
}

namespace {

using ModelPtr = std::shared_ptr<const models::Model>;

struct ModelSuite {
    ModelPtr point;
    ModelPtr sigma;
    std::map<double, ModelPtr> quantiles;
};

bool needs_point(const std::vector<conformal::Framework>& frameworks) {
    return std::any_of(frameworks.begin(), frameworks.end(), [](auto fw) {
        return fw != conformal::Framework::cqr;
    });
}

bool needs_sigma(const std::vector<conformal::Framework>& frameworks) {
    return std::any_of(frameworks.begin(), frameworks.end(), conformal::uses_sigma);
}

bool needs_quantiles(const std::vector<conformal::Framework>& frameworks) {
    return std::find(frameworks.begin(), frameworks.end(),
                     conformal::Framework::cqr) != frameworks.end();
}

/// Quantile levels CQR needs for the given miscoverage rates, median
/// included (it provides the point predictions).
std::vector<double> cqr_levels(const std::vector<double>& alphas) {
    std::vector<double> taus;
    for (double alpha : alphas) {
        taus.push_back(alpha);
        taus.push_back(1.0 - alpha);
    }
    taus.push_back(0.5);
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    return taus;
}

ModelSuite fit_suite(const std::vector<LabeledSample>& train,
                     const std::vector<conformal::Framework>& frameworks,
                     const std::vector<double>& alphas, const RegressorSpec& learner,
                     const std::optional<RegressorSpec>& sigma_learner,
                     std::uint64_t model_seed) {
    ModelSuite suite;
    if (needs_point(frameworks)) {
        RegressorSpec spec = learner.with_loss(Loss::squared());
        spec.seed = model_seed;
        suite.point = models::fit(spec, train);
    }
    if (needs_sigma(frameworks)) {
        RegressorSpec spec = sigma_learner.value_or(
            RegressorSpec{LearnerKind::random_forest, Loss::squared(), {}, 0});
        spec.loss = Loss::squared();
        spec.seed = detail::mix_seed(model_seed, 0x51);
        std::vector<LabeledSample> residuals = train;
        for (LabeledSample& r : residuals) {
            r.target = std::abs(r.target - suite.point->predict(r.features));
        }
        suite.sigma = models::fit(spec, residuals);
    }
    if (needs_quantiles(frameworks)) {
        for (double tau : cqr_levels(alphas)) {
            RegressorSpec spec = learner.with_loss(Loss::pinball(tau));
            spec.seed = model_seed;
            suite.quantiles[tau] = models::fit(spec, train);
        }
    }
    return suite;
}

conformal::CalibratedPredictor calibrate(conformal::Framework framework,
                                         const ModelSuite& suite,
                                         const std::vector<LabeledSample>& calib,
                                         double alpha, double weight_decay) {
    switch (framework) {
        case conformal::Framework::scp:
            return conformal::calibrate_scp(suite.point, calib, alpha);
        case conformal::Framework::scp_nnm:
            return conformal::calibrate_scp_nnm(suite.point, suite.sigma, calib, alpha);
        case conformal::Framework::cqr:
            return conformal::calibrate_cqr(suite.quantiles.at(alpha),
                                            suite.quantiles.at(1.0 - alpha), calib,
                                            alpha, suite.quantiles.at(0.5));
        case conformal::Framework::nex_scp:
            return conformal::calibrate_nex(suite.point, calib, alpha, weight_decay);
        case conformal::Framework::nex_scp_nnm:
            return conformal::calibrate_nex(suite.point, calib, alpha, weight_decay,
                                            suite.sigma);
    }
    throw std::logic_error("unreachable framework");
}

double coverage_share(int covered, std::size_t n) {
    return static_cast<double>(covered) / static_cast<double>(n);
}

void finish_width_stats(const std::vector<double>& widths, ResultRow& row) {
    if (widths.empty()) {
        row.mean_width = std::numeric_limits<double>::infinity();
        row.width_stddev = 0.0;
        return;
    }
    const auto [lo, hi] = std::minmax_element(widths.begin(), widths.end());
    double sum = 0.0;
    for (double w : widths) sum += w;
    row.mean_width = sum / static_cast<double>(widths.size());
    if (*lo == *hi) {
        // All widths are bit-identical (the scp case); report an exact zero
        // rather than accumulated rounding noise.
        row.width_stddev = 0.0;
        row.mean_width = *lo;
        return;
    }
    double ss = 0.0;
    for (double w : widths) {
        const double d = w - row.mean_width;
        ss += d * d;
    }
    row.width_stddev = std::sqrt(ss / static_cast<double>(widths.size()));
}

void validate_options(const ExperimentOptions& options) {
    if (options.frameworks.empty()) {
        throw std::invalid_argument("run_experiment: no frameworks requested");
    }
    if (options.alphas.empty()) {
        throw std::invalid_argument("run_experiment: no alphas requested");
    }
    for (double alpha : options.alphas) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument("run_experiment: alpha must lie in (0,1)");
        }
    }
    if (options.n_seeds < 1) {
        throw std::invalid_argument("run_experiment: n_seeds must be >= 1");
    }
    check_fraction(options.calib_fraction);
    if (!(options.weight_decay > 0.0 && options.weight_decay <= 1.0)) {
        throw std::invalid_argument("run_experiment: weight_decay must lie in (0,1]");
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentData& data,
                                const ExperimentOptions& options) {
    validate_options(options);
    if (data.train.empty() || data.test.empty()) {
        throw std::invalid_argument("run_experiment: empty train or test data");
    }

    const std::vector<int> unit_ids = unique_unit_ids(data.train);
    ExperimentResult result;

    for (int s = 0; s < options.n_seeds; ++s) {
        const std::uint64_t seed = options.seed_base + static_cast<std::uint64_t>(s);
        const UnitSplit split =
            split_units(unit_ids, SplitPlan{seed, options.calib_fraction});
        const auto [train_s, calib_s] = partition_samples(data.train, split);
        if (train_s.empty() || calib_s.empty()) {
            throw std::runtime_error("run_experiment: a split side has no samples");
        }
        const ModelSuite suite =
            fit_suite(train_s, options.frameworks, options.alphas, options.learner,
                      options.sigma_learner, detail::mix_seed(options.learner.seed, seed));

        for (conformal::Framework framework : options.frameworks) {
            for (double alpha : options.alphas) {
                const conformal::CalibratedPredictor pred =
                    calibrate(framework, suite, calib_s, alpha, options.weight_decay);

                ResultRow row;
                row.dataset = data.dataset;
                row.framework = framework;
                row.alpha = alpha;
                row.seed = static_cast<int>(seed);
                row.n_test = static_cast<int>(data.test.size());

                int covered = 0;
                std::vector<double> widths;
                widths.reserve(data.test.size());
                for (const LabeledSample& t : data.test) {
                    const std::optional<int> cycle =
                        conformal::is_nex(framework) ? std::optional<int>(t.cycle_index)
                                                     : std::nullopt;
                    const PredictionInterval interval =
                        pred.predict_interval(t.features, cycle);
                    if (interval.unbounded()) {
                        row.n_unbounded += 1;
                        covered += 1;
                    } else {
                        covered += interval.covers(t.target) ? 1 : 0;
                        widths.push_back(interval.width);
                    }
                    if (options.collect_intervals) {
                        IntervalRecord rec;
                        rec.dataset = data.dataset;
                        rec.framework = framework;
                        rec.alpha = alpha;
                        rec.seed = row.seed;
                        rec.unit_id = t.unit_id;
                        rec.y_true = t.target;
                        rec.y_hat = pred.predict_point(t.features);
                        rec.lower = interval.lower;
                        rec.upper = interval.upper;
                        result.intervals.push_back(std::move(rec));
                    }
                }
                row.coverage = coverage_share(covered, data.test.size());
                finish_width_stats(widths, row);
                result.rows.push_back(std::move(row));
            }
        }
    }

    const auto row_key = [](const ResultRow& r) {
        return std::make_tuple(r.dataset, static_cast<int>(r.framework), r.alpha,
                               r.seed);
    };
    std::sort(result.rows.begin(), result.rows.end(),
              [&](const ResultRow& a, const ResultRow& b) {
                  return row_key(a) < row_key(b);
              });
    const auto rec_key = [](const IntervalRecord& r) {
        return std::make_tuple(r.dataset, static_cast<int>(r.framework), r.alpha,
                               r.seed);
    };
    std::stable_sort(result.intervals.begin(), result.intervals.end(),
                     [&](const IntervalRecord& a, const IntervalRecord& b) {
                         return rec_key(a) < rec_key(b);
                     });
    return result;
}

double mc_coverage(conformal::Framework framework, const McConfig& config) {
    if (config.n_train < 1 || config.n_calib < 1 || config.n_test < 1 ||
        config.n_redraws < 1) {
        throw std::invalid_argument("mc_coverage: all sizes must be >= 1");
    }
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw std::invalid_argument("mc_coverage: alpha must lie in (0,1)");
    }

    detail::Rng train_rng(detail::mix_seed(config.seed, 0));
    const std::vector<LabeledSample> train =
        draw_samples(config.n_train, config.noise, train_rng, 1);

    const std::vector<conformal::Framework> frameworks{framework};
    const std::vector<double> alphas{config.alpha};
    const ModelSuite suite =
        fit_suite(train, frameworks, alphas, config.learner, config.sigma_learner,
                  detail::mix_seed(config.learner.seed, config.seed));

    double total = 0.0;
    for (int r = 0; r < config.n_redraws; ++r) {
        detail::Rng rng(detail::mix_seed(config.seed, 1 + static_cast<std::uint64_t>(r)));
        const int base_id = 1 + config.n_train;
        const std::vector<LabeledSample> calib =
            draw_samples(config.n_calib, config.noise, rng, base_id);
        const std::vector<LabeledSample> test = draw_samples(
            config.n_test, config.noise, rng, base_id + config.n_calib);

        const conformal::CalibratedPredictor pred =
            calibrate(framework, suite, calib, config.alpha, config.weight_decay);
        int covered = 0;
        for (const LabeledSample& t : test) {
            const std::optional<int> cycle =
                conformal::is_nex(framework) ? std::optional<int>(t.cycle_index)
                                             : std::nullopt;
            const PredictionInterval interval = pred.predict_interval(t.features, cycle);
            covered += (interval.unbounded() || interval.covers(t.target)) ? 1 : 0;
        }
        total += coverage_share(covered, test.size());
    }
    return total / static_cast<double>(config.n_redraws);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("pearson_correlation: size mismatch");
    }
    if (a.empty()) {
        throw std::invalid_argument("pearson_correlation: empty input");
    }
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) {
        return 0.0;
    }
    return cov / std::sqrt(var_a * var_b);
}

}  // namespace rulcp::eval
