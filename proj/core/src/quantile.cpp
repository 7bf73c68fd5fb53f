#include "rulcp/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rulcp::quantile {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0,1)");
    }
}

}  // namespace

void ScoreDistribution::validate() const {
    if (scores.empty()) {
        throw std::invalid_argument("ScoreDistribution: scores must be nonempty");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw std::invalid_argument("ScoreDistribution: scores must be finite");
        }
    }
    if (!weights.empty()) {
        if (weights.size() != scores.size()) {
            throw std::invalid_argument(
                "ScoreDistribution: weights must match scores in size");
        }
        for (double w : weights) {
            if (!(w > 0.0 && w <= 1.0)) {
                throw std::invalid_argument(
                    "ScoreDistribution: weights must lie in (0,1]");
            }
        }
    }
}

double conformal_quantile(std::span<const double> scores, double alpha) {
    check_alpha(alpha);
    if (scores.empty()) {
        throw std::invalid_argument("conformal_quantile: scores must be nonempty");
    }
    const auto n = static_cast<long long>(scores.size());
    const double exact = static_cast<double>(n + 1) * (1.0 - alpha);
    long long k = static_cast<long long>(std::ceil(exact - kMassEps));
    if (k < 1) k = 1;
    if (k > n) {
        return std::numeric_limits<double>::infinity();
    }
    std::vector<double> sorted(scores.begin(), scores.end());
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    return sorted[k - 1];
}

double weighted_conformal_quantile(const ScoreDistribution& dist, double alpha) {
    check_alpha(alpha);
    dist.validate();

    const std::size_t n = dist.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist.scores[a] < dist.scores[b];
    });

    double sum_w = 0.0;
    if (dist.weighted()) {
        for (double w : dist.weights) sum_w += w;
    } else {
        sum_w = static_cast<double>(n);
    }
    const double denom = 1.0 + sum_w;
    const double needed = (1.0 - alpha) - kMassEps;

    double cumulative = 0.0;
    std::size_t i = 0;
    while (i < n) {
        const double s = dist.scores[order[i]];
        // Merge the whole tie group before testing the threshold.
        while (i < n && dist.scores[order[i]] == s) {
            cumulative += dist.weighted() ? dist.weights[order[i]] : 1.0;
            ++i;
        }
        if (cumulative / denom >= needed) {
            return s;
        }
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace rulcp::quantile
