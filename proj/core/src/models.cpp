#include "rulcp/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rng.hpp"
#include "tree.hpp"

namespace rulcp::models {

namespace {

using detail::BinnedMatrix;
using detail::DataMatrix;
using detail::LeafRule;
using detail::Tree;
using detail::TreeConfig;

DataMatrix to_matrix(const std::vector<LabeledSample>& data) {
    DataMatrix m;
    m.rows = data.size();
    m.cols = data.front().features.size();
    m.values.reserve(m.rows * m.cols);
    for (const LabeledSample& s : data) {
        if (s.features.size() != m.cols) {
            throw std::invalid_argument("fit: inconsistent feature dimensions");
        }
        m.values.insert(m.values.end(), s.features.begin(), s.features.end());
    }
    return m;
}

std::vector<double> targets_of(const std::vector<LabeledSample>& data) {
    std::vector<double> y;
    y.reserve(data.size());
    for (const LabeledSample& s : data) y.push_back(s.target);
    return y;
}

int int_param(const RegressorSpec& spec, const std::string& name, int fallback) {
    return static_cast<int>(spec.param_or(name, fallback));
}

void check_dimension(std::span<const double> x, std::size_t expected) {
    if (x.size() != expected) {
        throw std::invalid_argument("predict: feature dimension mismatch");
    }
}

class KnnModel final : public Model {
public:
    KnnModel(RegressorSpec spec, DataMatrix x, std::vector<double> y, int k)
        : spec_(std::move(spec)), x_(std::move(x)), y_(std::move(y)), k_(k) {}

    double predict(std::span<const double> x) const override {
        check_dimension(x, x_.cols);
        std::vector<std::pair<double, std::size_t>> dist(x_.rows);
        for (std::size_t r = 0; r < x_.rows; ++r) {
            double d2 = 0.0;
            const auto row = x_.row(r);
            for (std::size_t c = 0; c < x_.cols; ++c) {
                const double diff = row[c] - x[c];
                d2 += diff * diff;
            }
            dist[r] = {d2, r};
        }
        const std::size_t k = std::min<std::size_t>(k_, x_.rows);
        std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
        std::vector<double> neighbor_y;
        neighbor_y.reserve(k);
        for (std::size_t i = 0; i < k; ++i) neighbor_y.push_back(y_[dist[i].second]);
        if (spec_.loss.is_pinball()) {
            return empirical_quantile(std::move(neighbor_y), spec_.loss.tau);
        }
        return std::accumulate(neighbor_y.begin(), neighbor_y.end(), 0.0) /
               static_cast<double>(k);
    }

    std::size_t feature_count() const override { return x_.cols; }
    const RegressorSpec& spec() const override { return spec_; }

private:
    RegressorSpec spec_;
    DataMatrix x_;
    std::vector<double> y_;
    int k_;
};

class TreeModel final : public Model {
public:
    TreeModel(RegressorSpec spec, Tree tree, std::size_t n_features)
        : spec_(std::move(spec)), tree_(std::move(tree)), n_features_(n_features) {}

    double predict(std::span<const double> x) const override {
        check_dimension(x, n_features_);
        return tree_.predict(x);
    }
    std::size_t feature_count() const override { return n_features_; }
    const RegressorSpec& spec() const override { return spec_; }

private:
    RegressorSpec spec_;
    Tree tree_;
    std::size_t n_features_;
};

class ForestModel final : public Model {
public:
    ForestModel(RegressorSpec spec, std::vector<Tree> trees, std::size_t n_features)
        : spec_(std::move(spec)), trees_(std::move(trees)), n_features_(n_features) {}

    double predict(std::span<const double> x) const override {
        check_dimension(x, n_features_);
        double sum = 0.0;
        for (const Tree& t : trees_) sum += t.predict(x);
        return sum / static_cast<double>(trees_.size());
    }
    std::size_t feature_count() const override { return n_features_; }
    const RegressorSpec& spec() const override { return spec_; }

private:
    RegressorSpec spec_;
    std::vector<Tree> trees_;
    std::size_t n_features_;
};

class BoostedModel final : public Model {
public:
    BoostedModel(RegressorSpec spec, double base_score, double learning_rate,
                 std::vector<Tree> trees, std::size_t n_features)
        : spec_(std::move(spec)),
          base_score_(base_score),
          learning_rate_(learning_rate),
          trees_(std::move(trees)),
          n_features_(n_features) {}

    double predict(std::span<const double> x) const override {
        check_dimension(x, n_features_);
        double value = base_score_;
        for (const Tree& t : trees_) value += learning_rate_ * t.predict(x);
        return value;
    }
    std::size_t feature_count() const override { return n_features_; }
    const RegressorSpec& spec() const override { return spec_; }

private:
    RegressorSpec spec_;
    double base_score_;
    double learning_rate_;
    std::vector<Tree> trees_;
    std::size_t n_features_;
};

TreeConfig tree_config(const RegressorSpec& spec, int default_max_leaves,
                       int default_min_leaf) {
    TreeConfig cfg;
    cfg.max_leaves = int_param(spec, "max_leaves", default_max_leaves);
    cfg.max_depth = int_param(spec, "max_depth", -1);
    cfg.min_samples_leaf =
        std::max(1, int_param(spec, "min_samples_leaf", default_min_leaf));
    return cfg;
}

LeafRule leaf_rule_of(const Loss& loss) {
    return loss.is_pinball() ? LeafRule::quantile : LeafRule::mean;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

std::unique_ptr<Model> fit_tree(const RegressorSpec& spec, const DataMatrix& x,
                                const std::vector<double>& y, int max_bins) {
    const BinnedMatrix binned = detail::bin_features(x, max_bins);
    // Structure is searched with the variance criterion on the raw targets;
    // the leaf value is the loss minimizer over the leaf's targets.
    const TreeConfig cfg = tree_config(spec, /*default_max_leaves=*/-1,
                                       /*default_min_leaf=*/1);
    Tree tree = detail::build_tree(binned, y, y, all_rows(x.rows), cfg,
                                   leaf_rule_of(spec.loss), spec.loss.tau);
    return std::make_unique<TreeModel>(spec, std::move(tree), x.cols);
}

std::unique_ptr<Model> fit_forest(const RegressorSpec& spec, const DataMatrix& x,
                                  const std::vector<double>& y, int max_bins) {
    const BinnedMatrix binned = detail::bin_features(x, max_bins);
    const int n_trees = std::max(1, int_param(spec, "n_estimators", 100));
    const TreeConfig cfg = tree_config(spec, /*default_max_leaves=*/255,
                                       /*default_min_leaf=*/1);
    std::vector<Tree> trees;
    trees.reserve(n_trees);
    for (int t = 0; t < n_trees; ++t) {
        detail::Rng rng(detail::mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> idx(x.rows);
        for (std::size_t i = 0; i < x.rows; ++i) idx[i] = rng.uniform_index(x.rows);
        trees.push_back(detail::build_tree(binned, y, y, std::move(idx), cfg,
                                           leaf_rule_of(spec.loss), spec.loss.tau));
    }
    return std::make_unique<ForestModel>(spec, std::move(trees), x.cols);
}

std::unique_ptr<Model> fit_boosted(const RegressorSpec& spec, const DataMatrix& x,
                                   const std::vector<double>& y, int max_bins) {
    const BinnedMatrix binned = detail::bin_features(x, max_bins);
    const int n_iter = std::max(1, int_param(spec, "n_estimators", 100));
    const double learning_rate = spec.param_or("learning_rate", 0.1);
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("fit: learning_rate must be positive");
    }
    const TreeConfig cfg = tree_config(spec, /*default_max_leaves=*/31,
                                       /*default_min_leaf=*/20);
    const bool pinball = spec.loss.is_pinball();
    const double tau = spec.loss.tau;

    const double base_score =
        pinball ? empirical_quantile(std::vector<double>(y), tau)
                : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

    std::vector<double> current(x.rows, base_score);
    std::vector<double> gradient(x.rows);
    std::vector<double> residual(x.rows);
    std::vector<Tree> trees;
    trees.reserve(n_iter);
    const std::vector<std::size_t> rows = all_rows(x.rows);

    for (int m = 0; m < n_iter; ++m) {
        for (std::size_t i = 0; i < x.rows; ++i) {
            residual[i] = y[i] - current[i];
            // Negative loss gradient at the current prediction.
            gradient[i] = pinball ? (y[i] > current[i] ? tau : -(1.0 - tau))
                                  : residual[i];
        }
        // The tree structure fits the gradient; leaf values are then
        // re-optimized on the raw residuals under the training loss.
        Tree tree = detail::build_tree(binned, gradient, residual,
                                       std::vector<std::size_t>(rows), cfg,
                                       pinball ? LeafRule::quantile : LeafRule::mean,
                                       tau);
        for (std::size_t i = 0; i < x.rows; ++i) {
            current[i] += learning_rate * tree.predict(x.row(i));
        }
        trees.push_back(std::move(tree));
    }
    return std::make_unique<BoostedModel>(spec, base_score, learning_rate,
                                          std::move(trees), x.cols);
}

}  // namespace

std::vector<double> Model::predict_many(const std::vector<LabeledSample>& samples) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const LabeledSample& s : samples) out.push_back(predict(s.features));
    return out;
}

double pinball_loss(double tau, double y, double y_hat) {
    return y > y_hat ? tau * (y - y_hat) : (1.0 - tau) * (y_hat - y);
}

double mean_pinball_loss(double tau, std::span<const double> y,
                         std::span<const double> y_hat) {
    if (y.size() != y_hat.size() || y.empty()) {
        throw std::invalid_argument("mean_pinball_loss: size mismatch or empty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += pinball_loss(tau, y[i], y_hat[i]);
    return sum / static_cast<double>(y.size());
}

double empirical_quantile(std::vector<double> values, double tau) {
    if (values.empty()) {
        throw std::invalid_argument("empirical_quantile: empty values");
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("empirical_quantile: tau must lie in (0,1)");
    }
    const auto n = static_cast<long long>(values.size());
    // Same 1e-9 slack as the conformal index rule, so e.g. tau=0.9 over ten
    // values selects the 9th order statistic despite binary rounding.
    long long k = static_cast<long long>(
        std::ceil(tau * static_cast<double>(n) - 1e-9));
    k = std::clamp<long long>(k, 1, n);
    std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
    return values[k - 1];
}

std::unique_ptr<Model> fit(const RegressorSpec& spec,
                           const std::vector<LabeledSample>& data) {
    if (data.empty()) {
        throw std::invalid_argument("fit: data must be nonempty");
    }
    if (data.front().features.empty()) {
        throw std::invalid_argument("fit: feature vectors must be nonempty");
    }
    if (spec.loss.is_pinball() && !(spec.loss.tau > 0.0 && spec.loss.tau < 1.0)) {
        throw std::invalid_argument("fit: pinball tau must lie in (0,1)");
    }

    const auto check_params = [&spec](std::initializer_list<const char*> allowed) {
        for (const auto& entry : spec.params) {
            const bool known = std::any_of(
                allowed.begin(), allowed.end(),
                [&entry](const char* name) { return entry.first == name; });
            if (!known) {
                throw std::invalid_argument("fit: unknown hyperparameter '" +
                                            entry.first + "' for " +
                                            to_string(spec.kind));
            }
        }
    };

    const DataMatrix x = to_matrix(data);
    const std::vector<double> y = targets_of(data);
    const int max_bins = std::max(2, int_param(spec, "max_bins", 256));

    switch (spec.kind) {
        case LearnerKind::knn: {
            check_params({"k"});
            const int k = int_param(spec, "k", 5);
            if (k < 1) throw std::invalid_argument("fit: knn k must be >= 1");
            return std::make_unique<KnnModel>(spec, x, y, k);
        }
        case LearnerKind::regression_tree:
            check_params({"max_leaves", "max_depth", "min_samples_leaf", "max_bins"});
            return fit_tree(spec, x, y, max_bins);
        case LearnerKind::random_forest:
            check_params({"n_estimators", "max_leaves", "max_depth",
                          "min_samples_leaf", "max_bins"});
            return fit_forest(spec, x, y, max_bins);
        case LearnerKind::gradient_boosting:
            check_params({"n_estimators", "learning_rate", "max_leaves", "max_depth",
                          "min_samples_leaf", "max_bins"});
            return fit_boosted(spec, x, y, max_bins);
    }
    throw std::invalid_argument("fit: unknown learner kind");
}

}  // namespace rulcp::models

namespace rulcp {

std::string to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::knn: return "knn";
        case LearnerKind::regression_tree: return "regression_tree";
        case LearnerKind::random_forest: return "random_forest";
        case LearnerKind::gradient_boosting: return "gradient_boosting";
    }
    return "unknown";
}

LearnerKind learner_kind_from_string(const std::string& name) {
    if (name == "knn") return LearnerKind::knn;
    if (name == "regression_tree") return LearnerKind::regression_tree;
    if (name == "random_forest") return LearnerKind::random_forest;
    if (name == "gradient_boosting") return LearnerKind::gradient_boosting;
    throw std::invalid_argument("unknown learner kind: " + name);
}

}  // namespace rulcp
