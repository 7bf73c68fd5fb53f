#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rulcp/cmapss.hpp"
#include "rulcp/conformal.hpp"
#include "rulcp/eval.hpp"
#include "rulcp/types.hpp"

namespace rulcp::cli {

/// Experiment configuration, one flat `key = value` file. Every field has a
/// default; parse_run_config rejects unknown keys so typos fail loudly.
struct RunConfig {
    std::string dataset = "synthetic";  // synthetic | fd001..fd004
    std::string data_dir = "data";
    cmapss::FeatureMode feature_mode = cmapss::FeatureMode::windowed;

    // Synthetic-data knobs. n_train + n_calib form the pool that the
    // per-seed unit splits carve up; n_test points stay fixed.
    eval::NoiseKind noise = eval::NoiseKind::homoscedastic;
    int n_train = 1800;
    int n_calib = 200;
    int n_test = 500;
    std::uint64_t data_seed = 1;

    std::vector<conformal::Framework> frameworks = conformal::all_frameworks();
    std::vector<double> alphas{0.10, 0.15, 0.20, 0.25};
    int n_seeds = 15;
    std::uint64_t seed_base = 0;
    double calib_fraction = 0.10;
    double weight_decay = 0.99;

    RegressorSpec learner{};
    RegressorSpec sigma_learner{LearnerKind::random_forest, Loss::squared(), {}, 0};

    std::string out_dir = "out";

    bool is_synthetic() const { return dataset == "synthetic"; }

    /// 1..4 for the turbofan datasets; throws for synthetic.
    int dataset_id() const;
};

/// Parses a flat config file: `key = value` lines, '#' comments, blank lines
/// ignored. Throws std::invalid_argument naming the offending line for
/// unknown keys or unparseable values.
RunConfig parse_run_config(const std::string& path);

/// Every key at its default, as a ready-to-edit config file.
std::string default_config_text();

/// Normalizes a dataset spelling ("2", "FD002", "fd002") to "fd002", or
/// "synthetic" to itself. Throws on anything else.
std::string normalize_dataset_name(const std::string& name);

}  // namespace rulcp::cli
