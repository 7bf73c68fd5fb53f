#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rulcp/types.hpp"

namespace rulcp::models {

/// Fitted point or quantile regressor. Immutable after fit; predict is safe
/// under unrestricted concurrent calls.
class Model {
public:
    virtual ~Model() = default;

    /// Prediction for one feature vector. Throws std::invalid_argument on a
    /// dimension mismatch; always returns a finite value.
    virtual double predict(std::span<const double> x) const = 0;

    virtual std::size_t feature_count() const = 0;

    /// The spec the model was fitted with (loss metadata is used by the
    /// conformal layer to validate quantile-model pairs).
    virtual const RegressorSpec& spec() const = 0;

    std::vector<double> predict_many(const std::vector<LabeledSample>& samples) const;
};

/// Fits the learner described by spec on data. data must be nonempty with
/// consistent feature dimensions. Identical spec + data + seed produce a
/// model with bitwise-identical predictions.
std::unique_ptr<Model> fit(const RegressorSpec& spec,
                           const std::vector<LabeledSample>& data);

/// Pinball loss for quantile level tau: tau-weighted under-prediction,
/// (1-tau)-weighted over-prediction.
double pinball_loss(double tau, double y, double y_hat);

/// Mean pinball loss of predictions against targets.
double mean_pinball_loss(double tau, std::span<const double> y,
                         std::span<const double> y_hat);

/// The k-th smallest value with k = ceil(tau * n): the canonical minimizer of
/// the empirical pinball loss over a finite multiset (lower end of the
/// minimizing interval when tau * n is integral).
double empirical_quantile(std::vector<double> values, double tau);

}  // namespace rulcp::models
