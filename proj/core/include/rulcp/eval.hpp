#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rulcp/conformal.hpp"
#include "rulcp/models.hpp"
#include "rulcp/types.hpp"

namespace rulcp::eval {

/// Seeded recipe for one unit-level train/calibration split.
struct SplitPlan {
    std::uint64_t seed = 0;
    double calib_fraction = 0.10;
};

struct UnitSplit {
    std::vector<int> train_units;
    std::vector<int> calib_units;
};

/// Shuffles the (deduplicated) unit ids with the plan's seed and peels off
/// round(calib_fraction * N) of them for calibration. Both sides come back
/// sorted ascending. Throws std::invalid_argument when fewer than two units
/// are given or when rounding leaves either side empty.
UnitSplit split_units(std::vector<int> unit_ids, const SplitPlan& plan);

/// Routes each sample to the side owning its unit, preserving sample order.
/// Throws on a unit id that appears in neither side.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> partition_samples(
    const std::vector<LabeledSample>& samples, const UnitSplit& split);

/// Distinct unit ids, ascending.
std::vector<int> unique_unit_ids(const std::vector<LabeledSample>& samples);

enum class NoiseKind { homoscedastic, heteroscedastic };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

/// Noise-free surface of the synthetic generator; x must be 3-dimensional.
double synth_mean(std::span<const double> x);

/// Noise scale at x: a constant for the homoscedastic case, 1 + 3 * ||x||
/// otherwise.
double synth_noise_scale(NoiseKind kind, std::span<const double> x);

struct SynthSets {
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> calib;
    std::vector<LabeledSample> test;
};

/// I.i.d. draws of y = g(x) + scale(x) * xi with x uniform on [-2,2]^3 and
/// xi standard normal, so the three sets are exchangeable by construction.
/// Every sample gets a distinct unit id, which makes unit-level splits of
/// this data coincide with sample-level splits. Deterministic per seed.
SynthSets synth_generate(int n_train, int n_calib, int n_test, NoiseKind noise,
                         std::uint64_t seed);

/// One interval on one test point, tagged with the run cell it came from.
struct IntervalRecord {
    std::string dataset;
    conformal::Framework framework = conformal::Framework::scp;
    double alpha = 0.1;
    int seed = 0;
    int unit_id = 0;
    double y_true = 0.0;
    double y_hat = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Aggregates for one (dataset, framework, alpha, seed) cell. Unbounded
/// intervals count as covering, are tallied in n_unbounded, and are excluded
/// from the width statistics; if every interval is unbounded, mean_width is
/// +infinity. width_stddev is the population standard deviation and is an
/// exact 0.0 whenever all bounded widths are bit-identical.
struct ResultRow {
    std::string dataset;
    conformal::Framework framework = conformal::Framework::scp;
    double alpha = 0.1;
    int seed = 0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double width_stddev = 0.0;
    int n_unbounded = 0;
    int n_test = 0;
};

/// A training pool (split per seed into proper-training and calibration
/// sides) plus the fixed evaluation points.
struct ExperimentData {
    std::string dataset;
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> test;
};

struct ExperimentOptions {
    std::vector<conformal::Framework> frameworks = conformal::all_frameworks();
    std::vector<double> alphas{0.10, 0.15, 0.20, 0.25};
    int n_seeds = 15;
    std::uint64_t seed_base = 0;
    double calib_fraction = 0.10;
    double weight_decay = 0.99;
    /// Base learner for point and quantile models; its loss field is
    /// overridden per use (squared for point models, pinball for quantiles).
    RegressorSpec learner{};
    /// Difficulty model for the *_nnm frameworks, fit on proper-training
    /// absolute residuals. Defaults to a random forest.
    std::optional<RegressorSpec> sigma_learner;
    bool collect_intervals = true;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;        // sorted by dataset, framework, alpha, seed
    std::vector<IntervalRecord> intervals;
};

/// For each seed in [seed_base, seed_base + n_seeds): split the pool at the
/// unit level, fit the models the requested frameworks need, calibrate each
/// (framework, alpha) cell, and evaluate on the test points. Models are
/// shared across frameworks within a seed; quantile models are shared across
/// the alphas that request the same level.
ExperimentResult run_experiment(const ExperimentData& data,
                                const ExperimentOptions& options);

struct McConfig {
    NoiseKind noise = NoiseKind::homoscedastic;
    int n_train = 2000;
    int n_calib = 500;
    int n_test = 500;
    int n_redraws = 200;
    double alpha = 0.10;
    double weight_decay = 0.99;
    std::uint64_t seed = 0;
    RegressorSpec learner{};
    std::optional<RegressorSpec> sigma_learner;
};

/// Monte Carlo coverage: fit once on a fixed synthetic training set, then
/// redraw (calibration, test) pairs and average the empirical coverage.
/// With exchangeable draws the mean approaches 1 - alpha from above.
double mc_coverage(conformal::Framework framework, const McConfig& config);

/// Pearson correlation; 0.0 when either side has zero variance.
double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace rulcp::eval
