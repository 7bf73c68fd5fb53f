#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "rulcp/models.hpp"

namespace rulcp::detail {

BinnedMatrix bin_features(const DataMatrix& x, int max_bins) {
    if (max_bins < 2) {
        throw std::invalid_argument("bin_features: max_bins must be >= 2");
    }
    BinnedMatrix out;
    out.rows = x.rows;
    out.cols = x.cols;
    out.cut_points.resize(x.cols);
    out.bins.resize(x.rows * x.cols, 0);

    std::vector<double> column(x.rows);
    for (std::size_t c = 0; c < x.cols; ++c) {
        for (std::size_t r = 0; r < x.rows; ++r) column[r] = x.at(r, c);
        std::sort(column.begin(), column.end());

        std::vector<double>& cuts = out.cut_points[c];
        const std::size_t n = column.size();
        std::size_t distinct = 1;
        for (std::size_t r = 1; r < n; ++r) {
            if (column[r] != column[r - 1]) ++distinct;
        }
        if (distinct <= static_cast<std::size_t>(max_bins)) {
            // One bin per distinct value; cuts at midpoints.
            for (std::size_t r = 1; r < n; ++r) {
                if (column[r] != column[r - 1]) {
                    cuts.push_back(0.5 * (column[r - 1] + column[r]));
                }
            }
        } else {
            // Quantile-spaced cuts over the (frequency-weighted) sorted column.
            for (int b = 1; b < max_bins; ++b) {
                const std::size_t pos =
                    static_cast<std::size_t>(b) * n / static_cast<std::size_t>(max_bins);
                if (pos == 0 || pos >= n || column[pos] == column[pos - 1]) continue;
                const double cut = 0.5 * (column[pos - 1] + column[pos]);
                if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
            }
        }

        for (std::size_t r = 0; r < x.rows; ++r) {
            const double v = x.at(r, c);
            const auto it = std::lower_bound(cuts.begin(), cuts.end(), v);
            out.bins[r * x.cols + c] =
                static_cast<std::uint16_t>(it - cuts.begin());
        }
    }
    return out;
}

namespace {

struct SplitCandidate {
    bool valid = false;
    double gain = 0.0;
    int feature = -1;
    int cut_index = -1;
};

struct PendingNode {
    int node_id = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    int depth = 0;
    double sum = 0.0;  // sum of split targets over [begin,end)
    SplitCandidate split;
};

// Best split of one node by SSE reduction over histogram bins.
SplitCandidate find_best_split(const BinnedMatrix& binned,
                               std::span<const double> split_targets,
                               std::span<const std::size_t> idx,
                               double node_sum,
                               const TreeConfig& config,
                               std::vector<double>& hist_sum,
                               std::vector<std::size_t>& hist_cnt) {
    SplitCandidate best;
    const auto n = static_cast<double>(idx.size());
    const double parent_score = node_sum * node_sum / n;

    for (std::size_t f = 0; f < binned.cols; ++f) {
        const std::vector<double>& cuts = binned.cut_points[f];
        if (cuts.empty()) continue;
        const std::size_t n_bins = cuts.size() + 1;
        std::fill(hist_sum.begin(), hist_sum.begin() + n_bins, 0.0);
        std::fill(hist_cnt.begin(), hist_cnt.begin() + n_bins, std::size_t{0});
        for (std::size_t i : idx) {
            const std::uint16_t b = binned.bin(i, f);
            hist_sum[b] += split_targets[i];
            hist_cnt[b] += 1;
        }

        double left_sum = 0.0;
        std::size_t left_cnt = 0;
        for (std::size_t cut = 0; cut + 1 < n_bins; ++cut) {
            left_sum += hist_sum[cut];
            left_cnt += hist_cnt[cut];
            const std::size_t right_cnt = idx.size() - left_cnt;
            if (left_cnt < static_cast<std::size_t>(config.min_samples_leaf) ||
                right_cnt < static_cast<std::size_t>(config.min_samples_leaf)) {
                continue;
            }
            const double right_sum = node_sum - left_sum;
            const double gain = left_sum * left_sum / static_cast<double>(left_cnt) +
                                right_sum * right_sum / static_cast<double>(right_cnt) -
                                parent_score;
            // Strict > keeps the earliest (lowest feature, lowest threshold) tie.
            if (gain > best.gain && gain > config.min_gain) {
                best.valid = true;
                best.gain = gain;
                best.feature = static_cast<int>(f);
                best.cut_index = static_cast<int>(cut);
            }
        }
    }
    return best;
}

double leaf_value(std::span<const double> leaf_targets,
                  std::span<const std::size_t> idx, LeafRule rule, double tau) {
    if (rule == LeafRule::mean) {
        double sum = 0.0;
        for (std::size_t i : idx) sum += leaf_targets[i];
        return sum / static_cast<double>(idx.size());
    }
    std::vector<double> values;
    values.reserve(idx.size());
    for (std::size_t i : idx) values.push_back(leaf_targets[i]);
    return models::empirical_quantile(std::move(values), tau);
}

}  // namespace

Tree build_tree(const BinnedMatrix& binned,
                std::span<const double> split_targets,
                std::span<const double> leaf_targets,
                std::vector<std::size_t> sample_idx,
                const TreeConfig& config,
                LeafRule leaf_rule,
                double tau) {
    if (sample_idx.empty()) {
        throw std::invalid_argument("build_tree: no training rows");
    }

    Tree tree;
    tree.nodes.push_back(TreeNode{});

    std::size_t max_bins_any = 2;
    for (const auto& cuts : binned.cut_points) {
        max_bins_any = std::max(max_bins_any, cuts.size() + 1);
    }
    std::vector<double> hist_sum(max_bins_any);
    std::vector<std::size_t> hist_cnt(max_bins_any);

    auto make_pending = [&](int node_id, std::size_t begin, std::size_t end,
                            int depth) {
        PendingNode p;
        p.node_id = node_id;
        p.begin = begin;
        p.end = end;
        p.depth = depth;
        for (std::size_t i = begin; i < end; ++i) p.sum += split_targets[sample_idx[i]];
        const std::size_t count = end - begin;
        const bool depth_ok = config.max_depth < 0 || depth < config.max_depth;
        if (depth_ok && count >= 2 * static_cast<std::size_t>(config.min_samples_leaf) &&
            count >= 2) {
            p.split = find_best_split(
                binned, split_targets,
                std::span<const std::size_t>(sample_idx.data() + begin, count), p.sum,
                config, hist_sum, hist_cnt);
        }
        return p;
    };

    // Max-heap on gain; ties go to the earlier node id for determinism.
    auto cmp = [](const PendingNode& a, const PendingNode& b) {
        if (a.split.gain != b.split.gain) return a.split.gain < b.split.gain;
        return a.node_id > b.node_id;
    };
    std::priority_queue<PendingNode, std::vector<PendingNode>, decltype(cmp)> heap(cmp);
    heap.push(make_pending(0, 0, sample_idx.size(), 0));

    int n_leaves = 1;
    while (!heap.empty()) {
        PendingNode node = heap.top();
        heap.pop();
        const std::size_t count = node.end - node.begin;
        if (!node.split.valid ||
            (config.max_leaves > 0 && n_leaves >= config.max_leaves)) {
            tree.nodes[node.node_id].feature = -1;
            tree.nodes[node.node_id].value = leaf_value(
                leaf_targets,
                std::span<const std::size_t>(sample_idx.data() + node.begin, count),
                leaf_rule, tau);
            continue;
        }

        const int f = node.split.feature;
        const int cut = node.split.cut_index;
        auto mid_it = std::stable_partition(
            sample_idx.begin() + node.begin, sample_idx.begin() + node.end,
            [&](std::size_t i) { return binned.bin(i, f) <= cut; });
        const std::size_t mid = static_cast<std::size_t>(mid_it - sample_idx.begin());

        const int left_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});
        const int right_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});

        TreeNode& parent = tree.nodes[node.node_id];
        parent.feature = f;
        parent.threshold = binned.cut_points[f][cut];
        parent.left = left_id;
        parent.right = right_id;
        ++n_leaves;

        heap.push(make_pending(left_id, node.begin, mid, node.depth + 1));
        heap.push(make_pending(right_id, mid, node.end, node.depth + 1));
    }
    return tree;
}

}  // namespace rulcp::detail
