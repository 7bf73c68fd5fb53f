#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rulcp {

inline constexpr int kNumSettings = 3;
inline constexpr int kNumSensors = 21;

/// One engine's multivariate trajectory plus its failure time.
/// For run-to-failure training units failure_time equals the series length;
/// for test units the series ends before failure, so failure_time exceeds it.
struct TimeSeriesUnit {
    int unit_id = 0;
    std::vector<std::array<double, kNumSettings>> settings;
    std::vector<std::array<double, kNumSensors>> sensors;
    int failure_time = 0;

    int length() const { return static_cast<int>(sensors.size()); }

    void validate() const {
        if (sensors.empty() || settings.size() != sensors.size()) {
            throw std::invalid_argument(
                "TimeSeriesUnit: settings and sensors must have equal nonzero length");
        }
        if (failure_time < length()) {
            throw std::invalid_argument(
                "TimeSeriesUnit: failure_time must be >= series length");
        }
    }
};

/// A feature vector with its RUL target plus the unit/cycle it came from.
struct LabeledSample {
    std::vector<double> features;
    double target = 0.0;
    int unit_id = 0;
    int cycle_index = 1;
};

/// Lower/upper RUL bounds for a given miscoverage rate alpha.
///
/// upper may be +inf when calibration is degenerate (too little mass below
/// the requested level). lower is clamped to 0 because RUL is nonnegative;
/// raw_lower keeps the unclamped bound for diagnostics. width is the length
/// of the unclamped interval and is what coverage/width reports aggregate.
struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.1;
    double raw_lower = 0.0;
    double width = 0.0;

    bool unbounded() const { return std::isinf(upper); }
    bool covers(double y) const { return lower <= y && y <= upper; }
};

enum class LearnerKind { knn, regression_tree, random_forest, gradient_boosting };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);

/// Training loss. Pinball(tau) targets the conditional tau-quantile.
struct Loss {
    enum class Kind { squared_error, pinball };

    Kind kind = Kind::squared_error;
    double tau = 0.5;

    static Loss squared() { return Loss{Kind::squared_error, 0.5}; }
    static Loss pinball(double tau) {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw std::invalid_argument("pinball loss requires tau in (0,1)");
        }
        return Loss{Kind::pinball, tau};
    }
    bool is_pinball() const { return kind == Kind::pinball; }
};

/// Which learner to fit, with what loss, and any hyperparameter overrides.
///
/// Recognized params (all optional, sensible defaults per learner):
///   n_estimators, learning_rate, max_leaves, max_depth, min_samples_leaf,
///   max_bins, k (knn neighbors).
struct RegressorSpec {
    LearnerKind kind = LearnerKind::gradient_boosting;
    Loss loss = Loss::squared();
    std::map<std::string, double> params;
    std::uint64_t seed = 0;

    double param_or(const std::string& name, double fallback) const {
        auto it = params.find(name);
        return it == params.end() ? fallback : it->second;
    }

    RegressorSpec with_loss(Loss new_loss) const {
        RegressorSpec out = *this;
        out.loss = new_loss;
        return out;
    }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace rulcp
