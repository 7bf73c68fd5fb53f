#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rulcp::detail {

// Row-major dense feature matrix.
struct DataMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * cols, cols};
    }
};

// Per-feature cut points plus the precomputed bin index of every cell.
// A row goes left of a split at cut_points[f][i] iff its bin is <= i,
// which is exactly the predicate value <= cut_points[f][i].
struct BinnedMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<double>> cut_points;
    std::vector<std::uint16_t> bins;  // row-major

    std::uint16_t bin(std::size_t r, std::size_t c) const { return bins[r * cols + c]; }
};

BinnedMatrix bin_features(const DataMatrix& x, int max_bins);

struct TreeConfig {
    int max_leaves = 31;       // <= 0 means unlimited
    int max_depth = -1;        // < 0 unlimited; 0 forces a single leaf
    int min_samples_leaf = 20;
    double min_gain = 1e-12;
};

enum class LeafRule { mean, quantile };

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const {
        int id = 0;
        while (nodes[id].feature >= 0) {
            const TreeNode& node = nodes[id];
            id = x[node.feature] <= node.threshold ? node.left : node.right;
        }
        return nodes[id].value;
    }
};

// Grows a binary regression tree best-first (largest SSE-reduction split
// next) until max_leaves, max_depth, or min_samples_leaf stops it.
// split_targets drive the split criterion; leaf_targets are what the leaf
// value is optimized on (mean, or the tau-quantile for LeafRule::quantile).
// Ties in the split search are broken by lowest feature index, then lowest
// threshold. sample_idx lists the rows to train on (duplicates allowed, as
// with bootstrap resamples).
Tree build_tree(const BinnedMatrix& binned,
                std::span<const double> split_targets,
                std::span<const double> leaf_targets,
                std::vector<std::size_t> sample_idx,
                const TreeConfig& config,
                LeafRule leaf_rule,
                double tau);

}  // namespace rulcp::detail
