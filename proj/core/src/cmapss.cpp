#include "rulcp/cmapss.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rng.hpp"

namespace rulcp::cmapss {

namespace {

constexpr std::size_t kNumColumns = 2 + kNumSettings + kNumSensors;

double parse_double(std::string_view token, const std::string& context) {
    double value = 0.0;
    const auto* begin = token.data();
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw std::runtime_error(context + ": malformed numeric field '" +
                                 std::string(token) + "'");
    }
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

std::vector<TimeSeriesUnit> parse_unit_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::vector<TimeSeriesUnit> units;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        const std::string context = path + ":" + std::to_string(line_no);
        if (fields.size() != kNumColumns) {
            throw std::runtime_error(context + ": expected " +
                                     std::to_string(kNumColumns) + " columns, got " +
                                     std::to_string(fields.size()));
        }
        const int unit_id = static_cast<int>(parse_double(fields[0], context));
        const int cycle = static_cast<int>(parse_double(fields[1], context));

        if (units.empty() || units.back().unit_id != unit_id) {
            for (const TimeSeriesUnit& u : units) {
                if (u.unit_id == unit_id) {
                    throw std::runtime_error(context + ": unit " +
                                             std::to_string(unit_id) +
                                             " rows are not grouped together");
                }
            }
            units.push_back(TimeSeriesUnit{});
            units.back().unit_id = unit_id;
        }
        TimeSeriesUnit& unit = units.back();
        if (cycle != unit.length() + 1) {
            throw std::runtime_error(context + ": non-contiguous cycle " +
                                     std::to_string(cycle) + " for unit " +
                                     std::to_string(unit_id));
        }
        std::array<double, kNumSettings> settings{};
        for (int i = 0; i < kNumSettings; ++i) {
            settings[i] = parse_double(fields[2 + i], context);
        }
        std::array<double, kNumSensors> sensors{};
        for (int i = 0; i < kNumSensors; ++i) {
            sensors[i] = parse_double(fields[2 + kNumSettings + i], context);
        }
        unit.settings.push_back(settings);
        unit.sensors.push_back(sensors);
    }
    if (units.empty()) {
        throw std::runtime_error(path + ": no data rows");
    }
    return units;
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

PreprocessConfig PreprocessConfig::for_dataset(int dataset_id) {
    PreprocessConfig config;
    switch (dataset_id) {
        case 1: config.window_length = 30; config.n_modes = 1; break;
        case 2: config.window_length = 20; config.n_modes = 6; break;
        case 3: config.window_length = 30; config.n_modes = 1; break;
        case 4: config.window_length = 15; config.n_modes = 6; break;
        default:
            throw std::invalid_argument("dataset_id must lie in 1..4");
    }
    return config;
}

std::vector<int> PreprocessConfig::retained_sensors() const {
    std::set<int> dropped(dropped_sensors.begin(), dropped_sensors.end());
    std::vector<int> kept;
    for (int s = 1; s <= kNumSensors; ++s) {
        if (!dropped.count(s)) kept.push_back(s - 1);
    }
    return kept;
}

RawDataset parse_cmapss(const std::string& train_path, const std::string& test_path,
                        const std::string& rul_path, int dataset_id) {
    if (dataset_id < 1 || dataset_id > 4) {
        throw std::invalid_argument("dataset_id must lie in 1..4");
    }
    RawDataset data;
    data.dataset_id = dataset_id;
    data.train_units = parse_unit_file(train_path);
    data.test_units = parse_unit_file(test_path);

    std::ifstream rul_in(rul_path);
    if (!rul_in) {
        throw std::runtime_error("cannot open " + rul_path);
    }
    std::string line;
    int line_no = 0;
    while (std::getline(rul_in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        const std::string context = rul_path + ":" + std::to_string(line_no);
        if (fields.size() != 1) {
            throw std::runtime_error(context + ": expected one RUL value per line");
        }
        data.test_rul.push_back(static_cast<int>(parse_double(fields[0], context)));
    }
    if (data.test_rul.size() != data.test_units.size()) {
        throw std::runtime_error(rul_path + ": " + std::to_string(data.test_rul.size()) +
                                 " RUL values for " +
                                 std::to_string(data.test_units.size()) +
                                 " test units");
    }

    for (TimeSeriesUnit& unit : data.train_units) {
        unit.failure_time = unit.length();
        unit.validate();
    }
    for (std::size_t i = 0; i < data.test_units.size(); ++i) {
        TimeSeriesUnit& unit = data.test_units[i];
        if (data.test_rul[i] < 0) {
            throw std::runtime_error(rul_path + ": negative RUL for test unit " +
                                     std::to_string(unit.unit_id));
        }
        unit.failure_time = unit.length() + data.test_rul[i];
        unit.validate();
    }
    return data;
}

void write_units(const std::string& path, const std::vector<TimeSeriesUnit>& units) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    std::string line;
    for (const TimeSeriesUnit& unit : units) {
        for (int t = 0; t < unit.length(); ++t) {
            line.clear();
            line += std::to_string(unit.unit_id);
            line += ' ';
            line += std::to_string(t + 1);
            for (double v : unit.settings[t]) {
                line += ' ';
                append_double(line, v);
            }
            for (double v : unit.sensors[t]) {
                line += ' ';
                append_double(line, v);
            }
            line += '\n';
            out << line;
        }
    }
}

void write_rul_file(const std::string& path, const std::vector<int>& ruls) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    for (int r : ruls) out << r << '\n';
}

int rectified_rul(int failure_time, int t, int rul_max) {
    if (t < 1 || t > failure_time) {
        throw std::invalid_argument("rectified_rul: t out of [1, failure_time]");
    }
    return std::min(rul_max, failure_time - t);
}

int ModeModel::assign(const std::array<double, kNumSettings>& settings) const {
    if (centroids_.empty()) {
        throw std::logic_error("ModeModel: not fitted");
    }
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids_.size(); ++c) {
        double d2 = 0.0;
        for (int i = 0; i < kNumSettings; ++i) {
            const double diff = settings[i] - centroids_[c][i];
            d2 += diff * diff;
        }
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(c);
        }
    }
    return best;
}

ModeModel fit_modes(const std::vector<std::array<double, kNumSettings>>& rows, int k,
                    std::uint64_t seed) {
    if (rows.empty()) {
        throw std::invalid_argument("fit_modes: empty input");
    }
    if (k < 1) {
        throw std::invalid_argument("fit_modes: k must be >= 1");
    }
    std::set<std::array<double, kNumSettings>> distinct(rows.begin(), rows.end());
    if (distinct.size() < static_cast<std::size_t>(k)) {
        throw std::invalid_argument("fit_modes: fewer distinct rows than k");
    }

    detail::Rng rng(seed);
    const std::size_t n = rows.size();
    auto d2 = [](const std::array<double, kNumSettings>& a,
                 const std::array<double, kNumSettings>& b) {
        double sum = 0.0;
        for (int i = 0; i < kNumSettings; ++i) {
            const double diff = a[i] - b[i];
            sum += diff * diff;
        }
        return sum;
    };

    // k-means++ seeding.
    std::vector<std::array<double, kNumSettings>> centroids;
    centroids.push_back(rows[rng.uniform_index(n)]);
    std::vector<double> min_d2(n);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, d2(rows[i], c));
            min_d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cumulative = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cumulative += min_d2[i];
                if (cumulative >= target && min_d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(rows[pick]);
    }

    // Lloyd iterations.
    ModeModel model(centroids);
    std::vector<int> assignment(n, -1);
    constexpr int kMaxIterations = 100;
    for (int it = 0; it < kMaxIterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const int a = model.assign(rows[i]);
            if (a != assignment[i]) {
                assignment[i] = a;
                changed = true;
            }
        }
        if (!changed && it > 0) break;

        std::vector<std::array<double, kNumSettings>> sums(
            k, std::array<double, kNumSettings>{});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < kNumSettings; ++c) sums[assignment[i]][c] += rows[i][c];
            counts[assignment[i]] += 1;
        }
        std::vector<std::array<double, kNumSettings>> next(centroids);
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed an empty cluster at the point farthest from its centroid.
                std::size_t far = 0;
                double far_d2 = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = d2(rows[i], next[assignment[i]]);
                    if (d > far_d2) {
                        far_d2 = d;
                        far = i;
                    }
                }
                next[c] = rows[far];
                continue;
            }
            for (int j = 0; j < kNumSettings; ++j) {
                next[c][j] = sums[c][j] / static_cast<double>(counts[c]);
            }
        }
        if (next == centroids && it > 0) break;
        centroids = std::move(next);
        model = ModeModel(centroids);
    }
    return model;
}

ScalerSet fit_scalers(const std::vector<TimeSeriesUnit>& train_units,
                      const ModeModel& modes, const PreprocessConfig& config) {
    if (train_units.empty()) {
        throw std::invalid_argument("fit_scalers: no training units");
    }
    ScalerSet scalers;
    scalers.modes_ = modes;
    scalers.retained_ = config.retained_sensors();
    scalers.lo_ = config.scale_lo;
    scalers.hi_ = config.scale_hi;
    const std::size_t n_modes = static_cast<std::size_t>(modes.n_modes());
    const std::size_t n_kept = scalers.retained_.size();
    scalers.mins_.assign(n_modes,
                         std::vector<double>(n_kept, std::numeric_limits<double>::infinity()));
    scalers.maxs_.assign(n_modes,
                         std::vector<double>(n_kept, -std::numeric_limits<double>::infinity()));

    for (const TimeSeriesUnit& unit : train_units) {
        for (int t = 0; t < unit.length(); ++t) {
            const int mode = modes.assign(unit.settings[t]);
            for (std::size_t j = 0; j < n_kept; ++j) {
                const double v = unit.sensors[t][scalers.retained_[j]];
                scalers.mins_[mode][j] = std::min(scalers.mins_[mode][j], v);
                scalers.maxs_[mode][j] = std::max(scalers.maxs_[mode][j], v);
            }
        }
    }
    return scalers;
}

std::size_t ScalerSet::retained_position(int sensor_index) const {
    const auto it = std::find(retained_.begin(), retained_.end(), sensor_index);
    if (it == retained_.end()) {
        throw std::invalid_argument("ScalerSet: sensor is not retained");
    }
    return static_cast<std::size_t>(it - retained_.begin());
}

double ScalerSet::train_min(int mode, int sensor_index) const {
    return mins_.at(mode).at(retained_position(sensor_index));
}

double ScalerSet::train_max(int mode, int sensor_index) const {
    return maxs_.at(mode).at(retained_position(sensor_index));
}

double ScalerSet::scale(int mode, int sensor_index, double value) const {
    const std::size_t j = retained_position(sensor_index);
    const double lo_v = mins_[mode][j];
    const double hi_v = maxs_[mode][j];
    if (lo_v > hi_v) {
        throw std::runtime_error(
            "ScalerSet::scale: mode " + std::to_string(mode) +
            " was never seen in training");
    }
    if (lo_v == hi_v) {
        return 0.5 * (lo_ + hi_);
    }
    return lo_ + (hi_ - lo_) * (value - lo_v) / (hi_v - lo_v);
}

TimeSeriesUnit apply_scaling(const TimeSeriesUnit& unit, const ScalerSet& scalers) {
    TimeSeriesUnit out = unit;
    for (int t = 0; t < out.length(); ++t) {
        const int mode = scalers.mode_model().assign(out.settings[t]);
        // Dropped sensors pass through untouched; downstream transforms
        // never read them.
        for (int s : scalers.retained()) {
            out.sensors[t][s] = scalers.scale(mode, s, unit.sensors[t][s]);
        }
    }
    return out;
}

std::vector<LabeledSample> transform_flat(const std::vector<TimeSeriesUnit>& units,
                                          const PreprocessConfig& config) {
    const std::vector<int> kept = config.retained_sensors();
    std::vector<LabeledSample> samples;
    for (const TimeSeriesUnit& unit : units) {
        for (int t = 1; t <= unit.length(); ++t) {
            LabeledSample s;
            s.unit_id = unit.unit_id;
            s.cycle_index = t;
            s.target = static_cast<double>(
                rectified_rul(unit.failure_time, t, config.rul_max));
            s.features.reserve(kept.size());
            for (int idx : kept) s.features.push_back(unit.sensors[t - 1][idx]);
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

namespace {

std::vector<double> window_features(const TimeSeriesUnit& unit, int t_end, int window,
                                    const std::vector<int>& kept) {
    // Rows t_end-window+1 .. t_end (1-based); rows before the first cycle
    // repeat the first cycle.
    std::vector<double> features;
    features.reserve(static_cast<std::size_t>(window) * kept.size());
    for (int t = t_end - window + 1; t <= t_end; ++t) {
        const int row = std::max(t, 1) - 1;
        for (int idx : kept) features.push_back(unit.sensors[row][idx]);
    }
    return features;
}

}  // namespace

std::vector<LabeledSample> transform_windowed(const std::vector<TimeSeriesUnit>& units,
                                              const PreprocessConfig& config) {
    if (!config.window_length.has_value() || *config.window_length < 1) {
        throw std::invalid_argument("transform_windowed: window_length must be set");
    }
    const int window = *config.window_length;
    const std::vector<int> kept = config.retained_sensors();
    std::vector<LabeledSample> samples;
    for (const TimeSeriesUnit& unit : units) {
        for (int t = window + 1; t <= unit.length(); ++t) {
            LabeledSample s;
            s.unit_id = unit.unit_id;
            s.cycle_index = t;
            s.target = static_cast<double>(
                rectified_rul(unit.failure_time, t, config.rul_max));
            s.features = window_features(unit, t, window, kept);
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

FeatureMode feature_mode_from_string(const std::string& name) {
    if (name == "flat") return FeatureMode::flat;
    if (name == "windowed") return FeatureMode::windowed;
    throw std::invalid_argument("unknown feature mode: " + name);
}

std::string to_string(FeatureMode mode) {
    return mode == FeatureMode::flat ? "flat" : "windowed";
}

std::vector<LabeledSample> test_points(const std::vector<TimeSeriesUnit>& test_units,
                                       const PreprocessConfig& config,
                                       FeatureMode mode) {
    if (mode == FeatureMode::windowed &&
        (!config.window_length.has_value() || *config.window_length < 1)) {
        throw std::invalid_argument("test_points: window_length must be set");
    }
    const std::vector<int> kept = config.retained_sensors();
    std::vector<LabeledSample> samples;
    samples.reserve(test_units.size());
    for (const TimeSeriesUnit& unit : test_units) {
        const int t_last = unit.length();
        LabeledSample s;
        s.unit_id = unit.unit_id;
        s.cycle_index = t_last;
        s.target = static_cast<double>(
            rectified_rul(unit.failure_time, t_last, config.rul_max));
        if (mode == FeatureMode::flat) {
            s.features.reserve(kept.size());
            for (int idx : kept) s.features.push_back(unit.sensors[t_last - 1][idx]);
        } else {
            s.features = window_features(unit, t_last, *config.window_length, kept);
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

void write_samples_csv(const std::string& path,
                       const std::vector<LabeledSample>& samples) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    const std::size_t dim = samples.empty() ? 0 : samples.front().features.size();
    std::string line = "unit_id,cycle,target";
    for (std::size_t j = 0; j < dim; ++j) {
        line += ",f_" + std::to_string(j);
    }
    line += '\n';
    out << line;
    for (const LabeledSample& s : samples) {
        if (s.features.size() != dim) {
            throw std::invalid_argument("write_samples_csv: ragged feature dimensions");
        }
        line.clear();
        line += std::to_string(s.unit_id);
        line += ',';
        line += std::to_string(s.cycle_index);
        line += ',';
        append_double(line, s.target);
        for (double f : s.features) {
            line += ',';
            append_double(line, f);
        }
        line += '\n';
        out << line;
    }
}

std::vector<LabeledSample> read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": missing header");
    }
    std::vector<LabeledSample> samples;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string context = path + ":" + std::to_string(line_no);
        std::vector<std::string_view> fields;
        std::string_view view(line);
        std::size_t start = 0;
        while (start <= view.size()) {
            const std::size_t comma = view.find(',', start);
            const std::size_t end = comma == std::string_view::npos ? view.size() : comma;
            fields.push_back(view.substr(start, end - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() < 3) {
            throw std::runtime_error(context + ": too few columns");
        }
        LabeledSample s;
        s.unit_id = static_cast<int>(parse_double(fields[0], context));
        s.cycle_index = static_cast<int>(parse_double(fields[1], context));
        s.target = parse_double(fields[2], context);
        s.features.reserve(fields.size() - 3);
        for (std::size_t j = 3; j < fields.size(); ++j) {
            s.features.push_back(parse_double(fields[j], context));
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

PreparedDataset prepare_dataset(const std::string& data_dir, int dataset_id,
                                const PreprocessConfig& config) {
    const std::string suffix = "FD00" + std::to_string(dataset_id) + ".txt";
    PreparedDataset prepared;
    prepared.config = config;
    prepared.raw = parse_cmapss(data_dir + "/train_" + suffix,
                                data_dir + "/test_" + suffix,
                                data_dir + "/RUL_" + suffix, dataset_id);

    // Mode discovery pools train and test settings: clustering uses no labels
    // and pooling guarantees every row is assignable.
    std::vector<std::array<double, kNumSettings>> settings_rows;
    for (const TimeSeriesUnit& u : prepared.raw.train_units) {
        settings_rows.insert(settings_rows.end(), u.settings.begin(), u.settings.end());
    }
    for (const TimeSeriesUnit& u : prepared.raw.test_units) {
        settings_rows.insert(settings_rows.end(), u.settings.begin(), u.settings.end());
    }
    prepared.modes = fit_modes(settings_rows, config.n_modes, config.kmeans_seed);
    prepared.scalers = fit_scalers(prepared.raw.train_units, prepared.modes, config);

    prepared.scaled_train.reserve(prepared.raw.train_units.size());
    for (const TimeSeriesUnit& u : prepared.raw.train_units) {
        prepared.scaled_train.push_back(apply_scaling(u, prepared.scalers));
    }
    prepared.scaled_test.reserve(prepared.raw.test_units.size());
    for (const TimeSeriesUnit& u : prepared.raw.test_units) {
        prepared.scaled_test.push_back(apply_scaling(u, prepared.scalers));
    }
    return prepared;
}

PreparedDataset prepare_dataset(const std::string& data_dir, int dataset_id) {
    return prepare_dataset(data_dir, dataset_id,
                           PreprocessConfig::for_dataset(dataset_id));
}

}  // namespace rulcp::cmapss
