#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "output.hpp"
#include "rulcp/cmapss.hpp"
#include "rulcp/conformal.hpp"
#include "rulcp/eval.hpp"
#include "rulcp/models.hpp"
#include "rulcp/quantile.hpp"
#include "run_config.hpp"

namespace rulcp::cli {

namespace fs = std::filesystem;

namespace {

void atomic_write_samples(const std::string& path,
                          const std::vector<LabeledSample>& samples) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    const std::string tmp = path + ".tmp";
    cmapss::write_samples_csv(tmp, samples);
    fs::rename(tmp, target);
}

}  // namespace

int cmd_prepare(const std::string& dataset, const std::string& data_dir,
                const std::string& out_dir, bool quiet) {
    const std::string name = normalize_dataset_name(dataset);
    if (name == "synthetic") {
        throw UsageError("prepare expects a turbofan dataset id, not 'synthetic'");
    }
    const int id = name.back() - '0';

    cmapss::PreparedDataset prepared;
    try {
        prepared = cmapss::prepare_dataset(data_dir, id);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }

    const cmapss::PreprocessConfig& config = prepared.config;
    const auto train_flat = cmapss::transform_flat(prepared.scaled_train, config);
    const auto train_windowed =
        cmapss::transform_windowed(prepared.scaled_train, config);
    const auto test_flat =
        cmapss::test_points(prepared.scaled_test, config, cmapss::FeatureMode::flat);
    const auto test_windowed = cmapss::test_points(prepared.scaled_test, config,
                                                   cmapss::FeatureMode::windowed);

    const std::string dir = out_dir + "/" + name;
    atomic_write_samples(dir + "/train_flat.csv", train_flat);
    atomic_write_samples(dir + "/train_windowed.csv", train_windowed);
    atomic_write_samples(dir + "/test_flat.csv", test_flat);
    atomic_write_samples(dir + "/test_windowed.csv", test_windowed);
    atomic_write_file(dir + "/manifest.txt",
                      manifest_text(prepared, train_flat.size(), train_windowed.size(),
                                    test_windowed.size()));

    if (!quiet) {
        std::cout << name << ": " << prepared.raw.train_units.size()
                  << " train units, " << prepared.raw.test_units.size()
                  << " test units\n"
                  << "flat samples " << train_flat.size() << ", windowed samples "
                  << train_windowed.size() << ", test points " << test_windowed.size()
                  << "\n"
                  << "wrote " << dir << "\n";
    }
    return 0;
}

namespace {

eval::ExperimentData load_experiment_data(const RunConfig& config) {
    eval::ExperimentData data;
    data.dataset = config.dataset;
    if (config.is_synthetic()) {
        eval::SynthSets sets =
            eval::synth_generate(config.n_train, config.n_calib, config.n_test,
                                 config.noise, config.data_seed);
        data.train = std::move(sets.train);
        data.train.insert(data.train.end(),
                          std::make_move_iterator(sets.calib.begin()),
                          std::make_move_iterator(sets.calib.end()));
        data.test = std::move(sets.test);
        return data;
    }

    cmapss::PreparedDataset prepared;
    try {
        prepared = cmapss::prepare_dataset(config.data_dir, config.dataset_id());
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    const cmapss::PreprocessConfig& pc = prepared.config;
    data.train = config.feature_mode == cmapss::FeatureMode::windowed
                     ? cmapss::transform_windowed(prepared.scaled_train, pc)
                     : cmapss::transform_flat(prepared.scaled_train, pc);
    data.test = cmapss::test_points(prepared.scaled_test, pc, config.feature_mode);
    return data;
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& data_dir, int n_seeds_override, bool quiet) {
    RunConfig config;
    try {
        config = parse_run_config(config_path);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!data_dir.empty()) config.data_dir = data_dir;
    if (n_seeds_override >= 1) config.n_seeds = n_seeds_override;

    const eval::ExperimentData data = load_experiment_data(config);

    eval::ExperimentOptions options;
    options.frameworks = config.frameworks;
    options.alphas = config.alphas;
    options.n_seeds = config.n_seeds;
    options.seed_base = config.seed_base;
    options.calib_fraction = config.calib_fraction;
    options.weight_decay = config.weight_decay;
    options.learner = config.learner;
    options.sigma_learner = config.sigma_learner;

    const eval::ExperimentResult result = eval::run_experiment(data, options);

    atomic_write_file(config.out_dir + "/results.csv", results_csv(result.rows));
    atomic_write_file(config.out_dir + "/intervals.csv",
                      intervals_csv(result.intervals));
    atomic_write_file(
        config.out_dir + "/sorted_rul.csv",
        sorted_rul_csv(result.intervals, static_cast<int>(config.seed_base)));

    if (!quiet) {
        std::cout << summary_table(result.rows);
    }
    return 0;
}

namespace {

/// Uniform draws from a fixed engine; enough determinism for a self-check.
struct CheckRng {
    std::mt19937_64 engine;

    explicit CheckRng(std::uint64_t seed) : engine(seed) {}
    double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(engine() %
                                     static_cast<std::uint64_t>(hi - lo + 1));
    }
};

/// Brute-force reference: smallest finite score whose total normalized mass
/// (recomputed from scratch per candidate) reaches 1 - alpha.
double oracle_weighted_quantile(const std::vector<double>& scores,
                                const std::vector<double>& weights, double alpha) {
    double denom = 1.0;
    for (double w : weights) denom += w;
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    for (double candidate : sorted) {
        double mass = 0.0;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (scores[j] <= candidate) mass += weights[j];
        }
        if (mass / denom >= (1.0 - alpha) - quantile::kMassEps) {
            return candidate;
        }
    }
    return std::numeric_limits<double>::infinity();
}

/// Deliberately broken index rule (floor instead of ceil) used to prove the
/// oracle check can actually catch an off-by-one.
double broken_conformal_quantile(std::vector<double> scores, double alpha) {
    const auto n = static_cast<long long>(scores.size());
    long long k = static_cast<long long>(
        std::floor(static_cast<double>(n + 1) * (1.0 - alpha)));
    if (k < 1) k = 1;
    if (k > n) return std::numeric_limits<double>::infinity();
    std::nth_element(scores.begin(), scores.begin() + (k - 1), scores.end());
    return scores[k - 1];
}

class ConstantModel : public models::Model {
public:
    ConstantModel(double value, std::size_t dim) : value_(value), dim_(dim) {}

    double predict(std::span<const double> x) const override {
        if (x.size() != dim_) {
            throw std::invalid_argument("ConstantModel: dimension mismatch");
        }
        return value_;
    }
    std::size_t feature_count() const override { return dim_; }
    const RegressorSpec& spec() const override { return spec_; }

private:
    double value_;
    std::size_t dim_;
    RegressorSpec spec_{};
};

RegressorSpec small_gbt(int n_estimators) {
    RegressorSpec spec;
    spec.kind = LearnerKind::gradient_boosting;
    spec.params["n_estimators"] = static_cast<double>(n_estimators);
    return spec;
}

bool check_oracle_equivalence(int n_instances, bool unit_weights) {
    CheckRng rng(unit_weights ? 11 : 7);
    for (int i = 0; i < n_instances; ++i) {
        const int n = rng.uniform_int(1, 10);
        std::vector<double> scores(n);
        std::vector<double> weights(n);
        for (int j = 0; j < n; ++j) {
            scores[j] = 100.0 * rng.uniform();
            weights[j] = unit_weights ? 1.0 : 0.05 + 0.95 * rng.uniform();
        }
        const double alpha = 0.05 * rng.uniform_int(1, 10);

        const double expected = oracle_weighted_quantile(scores, weights, alpha);
        double got;
        if (unit_weights) {
            got = quantile::conformal_quantile(scores, alpha);
        } else {
            quantile::ScoreDistribution dist{scores, weights};
            got = quantile::weighted_conformal_quantile(dist, alpha);
        }
        if (got != expected && !(std::isinf(got) && std::isinf(expected))) {
            return false;
        }
    }
    return true;
}

bool check_mutation_detected(int n_instances) {
    CheckRng rng(13);
    int disagreements = 0;
    for (int i = 0; i < n_instances; ++i) {
        const int n = rng.uniform_int(1, 10);
        std::vector<double> scores(n);
        std::vector<double> weights(n, 1.0);
        for (int j = 0; j < n; ++j) scores[j] = 100.0 * rng.uniform();
        const double alpha = 0.05 * rng.uniform_int(1, 10);

        const double expected = oracle_weighted_quantile(scores, weights, alpha);
        const double got = broken_conformal_quantile(scores, alpha);
        if (got != expected && !(std::isinf(got) && std::isinf(expected))) {
            ++disagreements;
        }
    }
    return disagreements > 0;
}

bool check_nex_decay_one_reduction() {
    eval::SynthSets sets = eval::synth_generate(450, 50, 200,
                                                eval::NoiseKind::homoscedastic, 3);
    eval::ExperimentData data;
    data.dataset = "synthetic";
    data.train = sets.train;
    data.train.insert(data.train.end(), sets.calib.begin(), sets.calib.end());
    data.test = sets.test;

    eval::ExperimentOptions options;
    options.frameworks = {conformal::Framework::scp, conformal::Framework::nex_scp};
    options.alphas = {0.10, 0.25};
    options.n_seeds = 3;
    options.weight_decay = 1.0;
    options.learner = small_gbt(30);

    const eval::ExperimentResult result = eval::run_experiment(data, options);
    std::vector<eval::ResultRow> scp_rows;
    std::vector<eval::ResultRow> nex_rows;
    for (const eval::ResultRow& r : result.rows) {
        (r.framework == conformal::Framework::scp ? scp_rows : nex_rows).push_back(r);
    }
    if (scp_rows.size() != nex_rows.size()) return false;
    for (std::size_t i = 0; i < scp_rows.size(); ++i) {
        if (scp_rows[i].alpha != nex_rows[i].alpha ||
            scp_rows[i].seed != nex_rows[i].seed ||
            scp_rows[i].coverage != nex_rows[i].coverage ||
            scp_rows[i].mean_width != nex_rows[i].mean_width ||
            scp_rows[i].n_unbounded != nex_rows[i].n_unbounded) {
            return false;
        }
    }

    std::vector<eval::IntervalRecord> scp_ints;
    std::vector<eval::IntervalRecord> nex_ints;
    for (const eval::IntervalRecord& r : result.intervals) {
        (r.framework == conformal::Framework::scp ? scp_ints : nex_ints).push_back(r);
    }
    if (scp_ints.size() != nex_ints.size()) return false;
    for (std::size_t i = 0; i < scp_ints.size(); ++i) {
        if (scp_ints[i].lower != nex_ints[i].lower ||
            scp_ints[i].upper != nex_ints[i].upper) {
            return false;
        }
    }
    return true;
}

bool check_constant_sigma_reduction() {
    eval::SynthSets sets = eval::synth_generate(400, 100, 200,
                                                eval::NoiseKind::heteroscedastic, 5);
    std::shared_ptr<const models::Model> point =
        models::fit(small_gbt(30), sets.train);
    std::shared_ptr<const models::Model> sigma = std::make_shared<ConstantModel>(
        1.0, sets.train.front().features.size());

    const conformal::CalibratedPredictor scp =
        conformal::calibrate_scp(point, sets.calib, 0.10);
    const conformal::CalibratedPredictor nnm =
        conformal::calibrate_scp_nnm(point, sigma, sets.calib, 0.10);

    for (const LabeledSample& t : sets.test) {
        const PredictionInterval a = scp.predict_interval(t.features);
        const PredictionInterval b = nnm.predict_interval(t.features);
        if (a.lower != b.lower || a.upper != b.upper || a.width != b.width) {
            return false;
        }
    }
    return true;
}

bool check_mc_coverage(conformal::Framework framework, double* out_value) {
    eval::McConfig config;
    config.n_train = 1000;
    config.n_redraws = 50;
    config.alpha = 0.10;
    config.learner = small_gbt(50);
    const double coverage = eval::mc_coverage(framework, config);
    *out_value = coverage;
    return coverage >= 0.87 && coverage <= 0.94;
}

}  // namespace

int cmd_validate(bool quiet) {
    bool all_ok = true;
    const auto report = [&](bool ok, const std::string& name,
                            const std::string& detail = "") {
        all_ok = all_ok && ok;
        if (ok && quiet) return;
        std::cout << (ok ? "PASS " : "FAIL ") << name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n";
    };

    report(check_oracle_equivalence(300, false), "quantile-oracle-equivalence",
           "300 weighted instances");
    report(check_mutation_detected(300), "index-rule-mutation-detected",
           "off-by-one rule disagrees with the oracle");
    report(check_oracle_equivalence(300, true), "unit-weight-reduction",
           "300 unweighted instances");
    report(check_nex_decay_one_reduction(), "nex-decay-one-reduction",
           "decay 1.0 matches scp bitwise");
    report(check_constant_sigma_reduction(), "nnm-constant-sigma-reduction",
           "sigma == 1 matches scp bitwise");

    for (const conformal::Framework fw :
         {conformal::Framework::scp, conformal::Framework::scp_nnm,
          conformal::Framework::cqr}) {
        double coverage = 0.0;
        const bool ok = check_mc_coverage(fw, &coverage);
        char detail[96];
        std::snprintf(detail, sizeof(detail),
                      "alpha 0.10, 50 redraws, mean coverage %.4f", coverage);
        report(ok, "mc-coverage-" + conformal::to_string(fw), detail);
    }

    if (!quiet || !all_ok) {
        std::cout << (all_ok ? "all checks passed" : "some checks FAILED") << "\n";
    }
    return all_ok ? 0 : 1;
}

}  // namespace rulcp::cli
