#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rulcp/cmapss.hpp"
#include "rulcp/eval.hpp"

namespace rulcp::cli {

/// Shortest round-trip decimal form; infinities print as "inf"/"-inf".
std::string format_double(double v);

/// Writes content through a temp file in the target directory followed by a
/// rename, creating parent directories first.
void atomic_write_file(const std::string& path, const std::string& content);

std::string results_csv(const std::vector<eval::ResultRow>& rows);
std::string intervals_csv(const std::vector<eval::IntervalRecord>& records);

/// Plot-ready data: for the given seed, one block per (framework, alpha)
/// listing the test points by ascending true RUL with interval bounds.
std::string sorted_rul_csv(const std::vector<eval::IntervalRecord>& records,
                           int seed);

/// Per-(framework, alpha) aggregate table for stdout.
std::string summary_table(const std::vector<eval::ResultRow>& rows);

/// Key-value preprocessing manifest: dropped sensors, mode centroids, and
/// per-(mode, sensor) scaler ranges, plus sample counts.
std::string manifest_text(const cmapss::PreparedDataset& prepared,
                          std::size_t train_flat_samples,
                          std::size_t train_windowed_samples,
                          std::size_t test_point_count);

}  // namespace rulcp::cli
