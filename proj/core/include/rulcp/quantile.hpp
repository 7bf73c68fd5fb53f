#pragma once

#include <span>
#include <vector>

namespace rulcp::quantile {

/// Slack used in the cumulative-mass and index computations so that grid
/// alphas sitting exactly on a mass boundary resolve the way exact rational
/// arithmetic would (e.g. nine scores at alpha = 0.10 select the 9th order
/// statistic even though 10 * 0.9 rounds to 9.000000000000002 in binary).
/// Any implementation-independent oracle must apply the same convention.
inline constexpr double kMassEps = 1e-9;

/// Finite non-conformity scores with optional per-score weights.
/// The point mass at +infinity is implicit and never stored.
struct ScoreDistribution {
    std::vector<double> scores;
    std::vector<double> weights;  // empty means unweighted

    bool weighted() const { return !weights.empty(); }
    void validate() const;  // throws std::invalid_argument on violations
};

/// The k-th smallest score with k = ceil((1+n)(1-alpha)); +infinity when
/// k exceeds n. This is the finite-sample conformal index rule; no
/// interpolation between order statistics is ever performed.
double conformal_quantile(std::span<const double> scores, double alpha);

/// (1-alpha)-quantile of the weighted empirical score distribution
/// augmented with a point mass of normalized weight 1/(1+sum w) at
/// +infinity. Returns the smallest finite score whose accumulated
/// normalized mass (ties merged before the test) reaches 1-alpha, or
/// +infinity when no finite score does. With all-ones weights this
/// coincides with conformal_quantile on every input.
double weighted_conformal_quantile(const ScoreDistribution& dist, double alpha);

}  // namespace rulcp::quantile
