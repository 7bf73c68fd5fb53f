#pragma once

#include <stdexcept>
#include <string>

namespace rulcp::cli {

/// Configuration or input-data problem; the CLI maps it to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int cmd_prepare(const std::string& dataset, const std::string& data_dir,
                const std::string& out_dir, bool quiet);

/// out_dir/data_dir empty and n_seeds_override < 1 mean "keep the config
/// value".
int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& data_dir, int n_seeds_override, bool quiet);

int cmd_validate(bool quiet);

}  // namespace rulcp::cli
