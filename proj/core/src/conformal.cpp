#include "rulcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rulcp::conformal {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0,1)");
    }
}

void check_calib(const std::vector<LabeledSample>& calib) {
    if (calib.empty()) {
        throw std::invalid_argument("calibration set must be nonempty");
    }
}

double floored_sigma(const models::Model& sigma, std::span<const double> x) {
    return std::max(sigma.predict(x), kSigmaFloor);
}

double pinball_tau_of(const models::Model& model) {
    const RegressorSpec& spec = model.spec();
    if (!spec.loss.is_pinball()) {
        throw std::invalid_argument("cqr: quantile models must use pinball loss");
    }
    return spec.loss.tau;
}

PredictionInterval make_interval(double raw_lower, double upper, double alpha,
                                 double width) {
    PredictionInterval interval;
    interval.raw_lower = raw_lower;
    interval.lower = std::max(raw_lower, 0.0);
    interval.upper = upper;
    interval.alpha = alpha;
    interval.width = width;
    return interval;
}

}  // namespace

std::string to_string(Framework framework) {
    switch (framework) {
        case Framework::scp: return "scp";
        case Framework::scp_nnm: return "scp_nnm";
        case Framework::cqr: return "cqr";
        case Framework::nex_scp: return "nex_scp";
        case Framework::nex_scp_nnm: return "nex_scp_nnm";
    }
    return "unknown";
}

Framework framework_from_string(const std::string& name) {
    if (name == "scp") return Framework::scp;
    if (name == "scp_nnm") return Framework::scp_nnm;
    if (name == "cqr") return Framework::cqr;
    if (name == "nex_scp") return Framework::nex_scp;
    if (name == "nex_scp_nnm") return Framework::nex_scp_nnm;
    throw std::invalid_argument("unknown framework: " + name);
}

bool is_nex(Framework framework) {
    return framework == Framework::nex_scp || framework == Framework::nex_scp_nnm;
}

bool uses_sigma(Framework framework) {
    return framework == Framework::scp_nnm || framework == Framework::nex_scp_nnm;
}

const std::vector<Framework>& all_frameworks() {
    static const std::vector<Framework> order = {
        Framework::scp, Framework::scp_nnm, Framework::cqr, Framework::nex_scp,
        Framework::nex_scp_nnm};
    return order;
}

double CalibratedPredictor::critical_score() const {
    if (is_nex(framework_)) {
        throw std::logic_error(
            "critical_score: nex frameworks compute q per query; "
            "use query_critical_score");
    }
    return q_;
}

double CalibratedPredictor::query_critical_score(int cycle_index) const {
    if (!is_nex(framework_)) {
        throw std::logic_error("query_critical_score: only nex frameworks");
    }
    quantile::ScoreDistribution dist;
    dist.scores = scores_;
    dist.weights.reserve(scores_.size());
    for (int t : cycle_indices_) {
        dist.weights.push_back(
            std::pow(weight_decay_, std::abs(cycle_index - t)));
    }
    return quantile::weighted_conformal_quantile(dist, alpha_);
}

PredictionInterval CalibratedPredictor::predict_interval(
    std::span<const double> x, std::optional<int> cycle_index) const {
    switch (framework_) {
        case Framework::scp: {
            const double y_hat = base_->predict(x);
            return make_interval(y_hat - q_, y_hat + q_, alpha_, 2.0 * q_);
        }
        case Framework::scp_nnm: {
            const double y_hat = base_->predict(x);
            const double half = q_ * floored_sigma(*sigma_, x);
            return make_interval(y_hat - half, y_hat + half, alpha_, 2.0 * half);
        }
        case Framework::cqr: {
            double lo = q_low_->predict(x);
            double hi = q_high_->predict(x);
            if (lo > hi) std::swap(lo, hi);  // independent pinball fits can cross
            return make_interval(lo - q_, hi + q_, alpha_, (hi - lo) + 2.0 * q_);
        }
        case Framework::nex_scp:
        case Framework::nex_scp_nnm: {
            if (!cycle_index.has_value()) {
                throw std::invalid_argument(
                    "predict_interval: nex frameworks require the query cycle index");
            }
            const double q = query_critical_score(*cycle_index);
            const double y_hat = base_->predict(x);
            const double half = framework_ == Framework::nex_scp
                                    ? q
                                    : q * floored_sigma(*sigma_, x);
            return make_interval(y_hat - half, y_hat + half, alpha_, 2.0 * half);
        }
    }
    throw std::logic_error("predict_interval: unknown framework");
}

double CalibratedPredictor::predict_point(std::span<const double> x) const {
    if (framework_ == Framework::cqr) {
        if (!median_) {
            throw std::logic_error(
                "predict_point: this cqr predictor was calibrated without a "
                "median model");
        }
        return median_->predict(x);
    }
    return base_->predict(x);
}

CalibratedPredictor calibrate_scp(std::shared_ptr<const models::Model> model,
                                  const std::vector<LabeledSample>& calib,
                                  double alpha) {
    check_alpha(alpha);
    check_calib(calib);
    CalibratedPredictor out;
    out.framework_ = Framework::scp;
    out.alpha_ = alpha;
    out.base_ = std::move(model);
    out.scores_.reserve(calib.size());
    for (const LabeledSample& s : calib) {
        out.scores_.push_back(std::abs(s.target - out.base_->predict(s.features)));
    }
    out.q_ = quantile::conformal_quantile(out.scores_, alpha);
    return out;
}

CalibratedPredictor calibrate_scp_nnm(std::shared_ptr<const models::Model> model,
                                      std::shared_ptr<const models::Model> sigma,
                                      const std::vector<LabeledSample>& calib,
                                      double alpha) {
    check_alpha(alpha);
    check_calib(calib);
    if (!sigma) {
        throw std::invalid_argument("calibrate_scp_nnm: sigma model is required");
    }
    CalibratedPredictor out;
    out.framework_ = Framework::scp_nnm;
    out.alpha_ = alpha;
    out.base_ = std::move(model);
    out.sigma_ = std::move(sigma);
    out.scores_.reserve(calib.size());
    for (const LabeledSample& s : calib) {
        const double residual = std::abs(s.target - out.base_->predict(s.features));
        out.scores_.push_back(residual / floored_sigma(*out.sigma_, s.features));
    }
    out.q_ = quantile::conformal_quantile(out.scores_, alpha);
    return out;
}

CalibratedPredictor calibrate_cqr(std::shared_ptr<const models::Model> q_low,
                                  std::shared_ptr<const models::Model> q_high,
                                  const std::vector<LabeledSample>& calib,
                                  double alpha,
                                  std::shared_ptr<const models::Model> median) {
    check_alpha(alpha);
    check_calib(calib);
    if (!q_low || !q_high) {
        throw std::invalid_argument("calibrate_cqr: both quantile models required");
    }
    constexpr double kTauTol = 1e-12;
    if (std::abs(pinball_tau_of(*q_low) - alpha) > kTauTol ||
        std::abs(pinball_tau_of(*q_high) - (1.0 - alpha)) > kTauTol) {
        throw std::invalid_argument(
            "calibrate_cqr: expected q_low at tau=alpha and q_high at tau=1-alpha");
    }
    CalibratedPredictor out;
    out.framework_ = Framework::cqr;
    out.alpha_ = alpha;
    out.q_low_ = std::move(q_low);
    out.q_high_ = std::move(q_high);
    out.median_ = std::move(median);
    out.scores_.reserve(calib.size());
    for (const LabeledSample& s : calib) {
        const double lo = out.q_low_->predict(s.features);
        const double hi = out.q_high_->predict(s.features);
        out.scores_.push_back(std::max(lo - s.target, s.target - hi));
    }
    out.q_ = quantile::conformal_quantile(out.scores_, alpha);
    return out;
}

CalibratedPredictor calibrate_nex(std::shared_ptr<const models::Model> model,
                                  const std::vector<LabeledSample>& calib,
                                  double alpha, double weight_decay,
                                  std::shared_ptr<const models::Model> sigma) {
    check_alpha(alpha);
    check_calib(calib);
    if (!(weight_decay > 0.0 && weight_decay <= 1.0)) {
        throw std::invalid_argument("calibrate_nex: weight_decay must lie in (0,1]");
    }
    CalibratedPredictor out;
    out.framework_ = sigma ? Framework::nex_scp_nnm : Framework::nex_scp;
    out.alpha_ = alpha;
    out.weight_decay_ = weight_decay;
    out.base_ = std::move(model);
    out.sigma_ = std::move(sigma);
    out.scores_.reserve(calib.size());
    out.cycle_indices_.reserve(calib.size());
    for (const LabeledSample& s : calib) {
        if (s.cycle_index < 1) {
            throw std::invalid_argument(
                "calibrate_nex: every calibration sample needs a cycle index");
        }
        double score = std::abs(s.target - out.base_->predict(s.features));
        if (out.sigma_) score /= floored_sigma(*out.sigma_, s.features);
        out.scores_.push_back(score);
        out.cycle_indices_.push_back(s.cycle_index);
    }
    return out;
}

}  // namespace rulcp::conformal
