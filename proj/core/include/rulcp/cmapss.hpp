#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rulcp/types.hpp"

namespace rulcp::cmapss {

/// The four turbofan dataset files as parsed: unit trajectories plus the
/// provided last-cycle RUL of each test unit.
struct RawDataset {
    std::vector<TimeSeriesUnit> train_units;
    std::vector<TimeSeriesUnit> test_units;
    std::vector<int> test_rul;
    int dataset_id = 0;
};

/// Preprocessing knobs. Defaults follow the standard recipe: seven
/// near-constant sensors dropped, labels capped at 125, sensor values scaled
/// to [-1,1] per operating mode (six K-means modes for the nonstationary
/// datasets 2 and 4, a single mode otherwise), and per-dataset window
/// lengths 30/20/30/15.
struct PreprocessConfig {
    std::vector<int> dropped_sensors = {1, 5, 6, 10, 16, 18, 19};  // 1-based
    int rul_max = 125;
    std::optional<int> window_length;
    int n_modes = 1;
    double scale_lo = -1.0;
    double scale_hi = 1.0;
    std::uint64_t kmeans_seed = 0;

    static PreprocessConfig for_dataset(int dataset_id);

    /// Ascending 0-based indices of the sensors that are kept.
    std::vector<int> retained_sensors() const;
};

/// Parses the three whitespace-separated NASA files (26 columns: unit,
/// cycle, 3 settings, 21 sensors). Train units get failure_time = length;
/// test units get failure_time = length + provided RUL. Throws
/// std::runtime_error on malformed rows, non-contiguous cycles, or a RUL
/// count mismatch.
RawDataset parse_cmapss(const std::string& train_path, const std::string& test_path,
                        const std::string& rul_path, int dataset_id);

/// Serializers for the same text formats (round-trip partners of parse).
void write_units(const std::string& path, const std::vector<TimeSeriesUnit>& units);
void write_rul_file(const std::string& path, const std::vector<int>& ruls);

/// Piecewise-linear rectified label: failure_time - t, capped at rul_max.
int rectified_rul(int failure_time, int t, int rul_max);

/// K-means operating-mode model over the 3-dimensional settings.
class ModeModel {
public:
    ModeModel() = default;
    explicit ModeModel(std::vector<std::array<double, kNumSettings>> centroids)
        : centroids_(std::move(centroids)) {}

    int n_modes() const { return static_cast<int>(centroids_.size()); }
    const std::vector<std::array<double, kNumSettings>>& centroids() const {
        return centroids_;
    }

    /// Index of the nearest centroid by squared Euclidean distance.
    int assign(const std::array<double, kNumSettings>& settings) const;

private:
    std::vector<std::array<double, kNumSettings>> centroids_;
};

/// Lloyd's algorithm with k-means++ seeding and a fixed iteration cap.
/// Requires at least k distinct rows.
ModeModel fit_modes(const std::vector<std::array<double, kNumSettings>>& rows, int k,
                    std::uint64_t seed);

/// Per-(mode, retained sensor) min-max affine maps fitted on training units
/// only. Constant sensors within a mode map to the range midpoint; values
/// outside the training range extrapolate (no clipping).
class ScalerSet {
public:
    ScalerSet() = default;

    double scale(int mode, int sensor_index, double value) const;
    const ModeModel& mode_model() const { return modes_; }
    const std::vector<int>& retained() const { return retained_; }

    /// Fitted training range of one retained sensor within one mode.
    double train_min(int mode, int sensor_index) const;
    double train_max(int mode, int sensor_index) const;

    friend ScalerSet fit_scalers(const std::vector<TimeSeriesUnit>& train_units,
                                 const ModeModel& modes, const PreprocessConfig& config);

private:
    std::size_t retained_position(int sensor_index) const;

    ModeModel modes_;
    std::vector<int> retained_;
    double lo_ = -1.0;
    double hi_ = 1.0;
    // mins_/maxs_ are indexed [mode][position-in-retained]; a mode with no
    // training rows keeps min > max and is rejected at scale time.
    std::vector<std::vector<double>> mins_;
    std::vector<std::vector<double>> maxs_;
};

ScalerSet fit_scalers(const std::vector<TimeSeriesUnit>& train_units,
                      const ModeModel& modes, const PreprocessConfig& config);

/// Copy of the unit with every retained sensor scaled per its row's mode.
TimeSeriesUnit apply_scaling(const TimeSeriesUnit& unit, const ScalerSet& scalers);

/// One sample per (unit, cycle): the retained scaled sensors with the
/// rectified RUL target.
std::vector<LabeledSample> transform_flat(const std::vector<TimeSeriesUnit>& units,
                                          const PreprocessConfig& config);

/// One sample per cycle t with window_length < t <= T: the flattened
/// window of retained sensors (time-major), target as in transform_flat.
std::vector<LabeledSample> transform_windowed(const std::vector<TimeSeriesUnit>& units,
                                              const PreprocessConfig& config);

enum class FeatureMode { flat, windowed };

FeatureMode feature_mode_from_string(const std::string& name);
std::string to_string(FeatureMode mode);

/// Exactly one sample per test unit at its last recorded cycle, target
/// capped at rul_max. Windowed units shorter than the window are left-padded
/// by repeating their first cycle.
std::vector<LabeledSample> test_points(const std::vector<TimeSeriesUnit>& test_units,
                                       const PreprocessConfig& config, FeatureMode mode);

/// Columnar sample interchange: header "unit_id,cycle,target,f_0..f_{d-1}",
/// values written with shortest round-trip formatting.
void write_samples_csv(const std::string& path,
                       const std::vector<LabeledSample>& samples);
std::vector<LabeledSample> read_samples_csv(const std::string& path);

/// The full preprocessing pipeline for one dataset directory.
struct PreparedDataset {
    RawDataset raw;
    PreprocessConfig config;
    ModeModel modes;
    ScalerSet scalers;
    std::vector<TimeSeriesUnit> scaled_train;
    std::vector<TimeSeriesUnit> scaled_test;
};

/// Loads train_FD00x.txt / test_FD00x.txt / RUL_FD00x.txt from data_dir and
/// runs mode fitting (on the pooled train+test settings) and scaling.
PreparedDataset prepare_dataset(const std::string& data_dir, int dataset_id,
                                const PreprocessConfig& config);

PreparedDataset prepare_dataset(const std::string& data_dir, int dataset_id);

}  // namespace rulcp::cmapss
