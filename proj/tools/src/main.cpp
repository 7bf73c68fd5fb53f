#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "run_config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Conformal prediction intervals for remaining useful lifetime"};
    app.require_subcommand(1);

    std::string prepare_dataset;
    std::string prepare_data_dir = "data";
    std::string prepare_out = "out";
    bool prepare_quiet = false;
    CLI::App* prepare =
        app.add_subcommand("prepare", "Preprocess a turbofan dataset into sample files");
    prepare->add_option("dataset", prepare_dataset, "dataset: 1..4 or fd001..fd004")
        ->required();
    prepare->add_option("--data-dir", prepare_data_dir,
                        "directory holding the raw text files (default: data)");
    prepare->add_option("--out", prepare_out, "output root (default: out)");
    prepare->add_flag("--quiet", prepare_quiet, "suppress the summary");

    std::string run_config_path;
    std::string run_out;
    std::string run_data_dir;
    int run_seeds = 0;
    bool run_quiet = false;
    CLI::App* run = app.add_subcommand("run", "Run experiments from a config file");
    run->add_option("--config", run_config_path, "flat key = value config file")
        ->required();
    run->add_option("--out", run_out, "override the config's out_dir");
    run->add_option("--data-dir", run_data_dir, "override the config's data_dir");
    run->add_option("--seeds", run_seeds, "override the config's n_seeds");
    run->add_flag("--quiet", run_quiet, "suppress the summary table");
    run->footer("config keys and defaults:\n" + rulcp::cli::default_config_text());

    bool validate_quiet = false;
    CLI::App* validate =
        app.add_subcommand("validate", "Run the built-in property suite");
    validate->add_flag("--quiet", validate_quiet, "print failures only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (prepare->parsed()) {
            return rulcp::cli::cmd_prepare(prepare_dataset, prepare_data_dir,
                                           prepare_out, prepare_quiet);
        }
        if (run->parsed()) {
            return rulcp::cli::cmd_run(run_config_path, run_out, run_data_dir,
                                       run_seeds, run_quiet);
        }
        if (validate->parsed()) {
            return rulcp::cli::cmd_validate(validate_quiet);
        }
    } catch (const rulcp::cli::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
