#include "output.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <tuple>

namespace rulcp::cli {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void atomic_write_file(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
        if (!out.flush()) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

std::string results_csv(const std::vector<eval::ResultRow>& rows) {
    std::string out = "dataset,framework,alpha,seed,coverage,mean_width,n_unbounded\n";
    for (const eval::ResultRow& r : rows) {
        out += r.dataset;
        out += ',';
        out += conformal::to_string(r.framework);
        out += ',';
        out += format_double(r.alpha);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += format_double(r.coverage);
        out += ',';
        out += format_double(r.mean_width);
        out += ',';
        out += std::to_string(r.n_unbounded);
        out += '\n';
    }
    return out;
}

std::string intervals_csv(const std::vector<eval::IntervalRecord>& records) {
    std::string out =
        "dataset,framework,alpha,seed,unit_id,y_true,y_hat,lower,upper\n";
    for (const eval::IntervalRecord& r : records) {
        out += r.dataset;
        out += ',';
        out += conformal::to_string(r.framework);
        out += ',';
        out += format_double(r.alpha);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += std::to_string(r.unit_id);
        out += ',';
        out += format_double(r.y_true);
        out += ',';
        out += format_double(r.y_hat);
        out += ',';
        out += format_double(r.lower);
        out += ',';
        out += format_double(r.upper);
        out += '\n';
    }
    return out;
}

std::string sorted_rul_csv(const std::vector<eval::IntervalRecord>& records,
                           int seed) {
    std::vector<eval::IntervalRecord> picked;
    for (const eval::IntervalRecord& r : records) {
        if (r.seed == seed) picked.push_back(r);
    }
    std::sort(picked.begin(), picked.end(),
              [](const eval::IntervalRecord& a, const eval::IntervalRecord& b) {
                  return std::make_tuple(a.dataset, static_cast<int>(a.framework),
                                         a.alpha, a.y_true, a.unit_id) <
                         std::make_tuple(b.dataset, static_cast<int>(b.framework),
                                         b.alpha, b.y_true, b.unit_id);
              });

    std::string out = "framework,alpha,rank,unit_id,y_true,y_hat,lower,upper\n";
    int rank = 0;
    const eval::IntervalRecord* prev = nullptr;
    for (const eval::IntervalRecord& r : picked) {
        const bool new_block = prev == nullptr || prev->framework != r.framework ||
                               prev->alpha != r.alpha || prev->dataset != r.dataset;
        rank = new_block ? 1 : rank + 1;
        prev = &r;
        out += conformal::to_string(r.framework);
        out += ',';
        out += format_double(r.alpha);
        out += ',';
        out += std::to_string(rank);
        out += ',';
        out += std::to_string(r.unit_id);
        out += ',';
        out += format_double(r.y_true);
        out += ',';
        out += format_double(r.y_hat);
        out += ',';
        out += format_double(r.lower);
        out += ',';
        out += format_double(r.upper);
        out += '\n';
    }
    return out;
}

std::string summary_table(const std::vector<eval::ResultRow>& rows) {
    struct Cell {
        double coverage_sum = 0.0;
        double width_sum = 0.0;
        int n_unbounded = 0;
        int n_rows = 0;
    };
    std::map<std::tuple<std::string, int, double>, Cell> cells;
    for (const eval::ResultRow& r : rows) {
        Cell& c = cells[{r.dataset, static_cast<int>(r.framework), r.alpha}];
        c.coverage_sum += r.coverage;
        c.width_sum += r.mean_width;
        c.n_unbounded += r.n_unbounded;
        c.n_rows += 1;
    }

    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-12s %6s %9s %11s %10s\n", "dataset",
                  "framework", "alpha", "coverage", "mean_width", "unbounded");
    out += line;
    for (const auto& [key, c] : cells) {
        const auto& [dataset, framework, alpha] = key;
        std::snprintf(line, sizeof(line), "%-12s %-12s %6.2f %9.4f %11.4f %10d\n",
                      dataset.c_str(),
                      conformal::to_string(static_cast<conformal::Framework>(framework))
                          .c_str(),
                      alpha, c.coverage_sum / c.n_rows, c.width_sum / c.n_rows,
                      c.n_unbounded);
        out += line;
    }
    return out;
}

std::string manifest_text(const cmapss::PreparedDataset& prepared,
                          std::size_t train_flat_samples,
                          std::size_t train_windowed_samples,
                          std::size_t test_point_count) {
    const cmapss::PreprocessConfig& config = prepared.config;
    std::string out;
    out += "dataset fd00" + std::to_string(prepared.raw.dataset_id) + "\n";
    out += "train_units " + std::to_string(prepared.raw.train_units.size()) + "\n";
    out += "test_units " + std::to_string(prepared.raw.test_units.size()) + "\n";
    out += "rul_max " + std::to_string(config.rul_max) + "\n";
    out += "window_length " +
           (config.window_length ? std::to_string(*config.window_length)
                                 : std::string("none")) +
           "\n";
    out += "n_modes " + std::to_string(config.n_modes) + "\n";
    out += "kmeans_seed " + std::to_string(config.kmeans_seed) + "\n";

    out += "dropped_sensors ";
    for (std::size_t i = 0; i < config.dropped_sensors.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(config.dropped_sensors[i]);
    }
    out += '\n';
    const std::vector<int> retained = config.retained_sensors();
    out += "retained_sensor_count " + std::to_string(retained.size()) + "\n";

    out += "train_flat_samples " + std::to_string(train_flat_samples) + "\n";
    out += "train_windowed_samples " + std::to_string(train_windowed_samples) + "\n";
    out += "test_points " + std::to_string(test_point_count) + "\n";

    for (int m = 0; m < prepared.modes.n_modes(); ++m) {
        out += "centroid_" + std::to_string(m) + " ";
        const auto& c = prepared.modes.centroids()[m];
        for (int j = 0; j < kNumSettings; ++j) {
            if (j > 0) out += ',';
            out += format_double(c[j]);
        }
        out += '\n';
    }
    for (int m = 0; m < prepared.modes.n_modes(); ++m) {
        for (int idx : retained) {
            out += "scaler_mode" + std::to_string(m) + "_sensor" +
                   std::to_string(idx + 1) + " " +
                   format_double(prepared.scalers.train_min(m, idx)) + "," +
                   format_double(prepared.scalers.train_max(m, idx)) + "\n";
        }
    }
    return out;
}

}  // namespace rulcp::cli
