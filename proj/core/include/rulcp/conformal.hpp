#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulcp/models.hpp"
#include "rulcp/quantile.hpp"
#include "rulcp/types.hpp"

namespace rulcp::conformal {

enum class Framework { scp, scp_nnm, cqr, nex_scp, nex_scp_nnm };

std::string to_string(Framework framework);
Framework framework_from_string(const std::string& name);
bool is_nex(Framework framework);
bool uses_sigma(Framework framework);

/// All five frameworks in canonical emission order.
const std::vector<Framework>& all_frameworks();

/// sigma(x) is floored at this value before any division or multiplication;
/// residual-trained difficulty models can legitimately output zero.
inline constexpr double kSigmaFloor = 1e-6;

/// A fitted base model plus the frozen calibration state of one framework.
/// Immutable once built; predict_interval and predict_point are safe under
/// unrestricted concurrent calls (nex variants compute per-query weights
/// without touching shared state).
class CalibratedPredictor {
public:
    Framework framework() const { return framework_; }
    double alpha() const { return alpha_; }
    double weight_decay() const { return weight_decay_; }

    /// Calibration scores in calibration order (raw residuals, normalized
    /// residuals, or CQR scores depending on the framework).
    const std::vector<double>& calibration_scores() const { return scores_; }

    /// The critical score q fixed at calibration time. For nex frameworks q
    /// depends on the query, so this throws std::logic_error there.
    double critical_score() const;

    /// The per-query critical score q(x_new) of the nex frameworks, obtained
    /// from the decay-weighted score distribution at the query's cycle index.
    double query_critical_score(int cycle_index) const;

    /// Interval for one feature vector. nex frameworks require the query's
    /// cycle index. The lower bound is clamped at zero (RUL is nonnegative);
    /// the interval keeps the unclamped bound and width for diagnostics.
    PredictionInterval predict_interval(std::span<const double> x,
                                        std::optional<int> cycle_index = std::nullopt) const;

    /// Single-point RUL estimate: the base model's prediction, or the median
    /// (pinball 0.5) model under CQR.
    double predict_point(std::span<const double> x) const;

private:
    CalibratedPredictor() = default;

    friend CalibratedPredictor calibrate_scp(std::shared_ptr<const models::Model>,
                                             const std::vector<LabeledSample>&, double);
    friend CalibratedPredictor calibrate_scp_nnm(std::shared_ptr<const models::Model>,
                                                 std::shared_ptr<const models::Model>,
                                                 const std::vector<LabeledSample>&,
                                                 double);
    friend CalibratedPredictor calibrate_cqr(std::shared_ptr<const models::Model>,
                                             std::shared_ptr<const models::Model>,
                                             const std::vector<LabeledSample>&, double,
                                             std::shared_ptr<const models::Model>);
    friend CalibratedPredictor calibrate_nex(std::shared_ptr<const models::Model>,
                                             const std::vector<LabeledSample>&, double,
                                             double,
                                             std::shared_ptr<const models::Model>);

    Framework framework_ = Framework::scp;
    double alpha_ = 0.1;
    double weight_decay_ = 1.0;
    double q_ = 0.0;

    std::shared_ptr<const models::Model> base_;
    std::shared_ptr<const models::Model> sigma_;
    std::shared_ptr<const models::Model> q_low_;
    std::shared_ptr<const models::Model> q_high_;
    std::shared_ptr<const models::Model> median_;

    std::vector<double> scores_;
    std::vector<int> cycle_indices_;  // nex only
};

/// Split conformal calibration with absolute-residual scores.
CalibratedPredictor calibrate_scp(std::shared_ptr<const models::Model> model,
                                  const std::vector<LabeledSample>& calib,
                                  double alpha);

/// Normalized non-conformity: residuals divided by the difficulty model's
/// (floored) output. sigma must be trained on proper-training residuals.
CalibratedPredictor calibrate_scp_nnm(std::shared_ptr<const models::Model> model,
                                      std::shared_ptr<const models::Model> sigma,
                                      const std::vector<LabeledSample>& calib,
                                      double alpha);

/// Conformalized quantile regression. q_low must carry pinball(alpha) loss
/// and q_high pinball(1-alpha); median (pinball 0.5) supplies point
/// predictions and may be omitted when only intervals are needed.
CalibratedPredictor calibrate_cqr(std::shared_ptr<const models::Model> q_low,
                                  std::shared_ptr<const models::Model> q_high,
                                  const std::vector<LabeledSample>& calib,
                                  double alpha,
                                  std::shared_ptr<const models::Model> median = nullptr);

/// Non-exchangeable split conformal: scores (raw, or normalized when sigma
/// is given) are stored with their cycle indices; the critical score is
/// computed per query from weights decay^|t_new - t_j|.
CalibratedPredictor calibrate_nex(std::shared_ptr<const models::Model> model,
                                  const std::vector<LabeledSample>& calib,
                                  double alpha, double weight_decay,
                                  std::shared_ptr<const models::Model> sigma = nullptr);

}  // namespace rulcp::conformal
