#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rulcp::cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

double parse_real(const std::string& value, const std::string& context) {
    double out = 0.0;
    const char* begin = value.data();
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument(context + ": expected a number, got '" + value +
                                    "'");
    }
    return out;
}

long long parse_integer(const std::string& value, const std::string& context) {
    long long out = 0;
    const char* begin = value.data();
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument(context + ": expected an integer, got '" + value +
                                    "'");
    }
    return out;
}

bool has_prefix(const std::string& s, const std::string& prefix) {
    return s.size() > prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

std::string normalize_dataset_name(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lower == "synthetic") return lower;
    if (lower.size() == 1 && lower[0] >= '1' && lower[0] <= '4') {
        return "fd00" + lower;
    }
    if (lower.size() == 5 && lower.compare(0, 4, "fd00") == 0 && lower[4] >= '1' &&
        lower[4] <= '4') {
        return lower;
    }
    throw std::invalid_argument("unknown dataset '" + name +
                                "' (expected synthetic, 1..4, or fd001..fd004)");
}

int RunConfig::dataset_id() const {
    if (is_synthetic()) {
        throw std::logic_error("dataset_id: config selects synthetic data");
    }
    return dataset.back() - '0';
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file " + path);
    }
    RunConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string context = path + ":" + std::to_string(line_no);

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(context + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw std::invalid_argument(context + ": empty key or value");
        }

        if (key == "dataset") {
            config.dataset = normalize_dataset_name(value);
        } else if (key == "data_dir") {
            config.data_dir = value;
        } else if (key == "feature_mode") {
            config.feature_mode = cmapss::feature_mode_from_string(value);
        } else if (key == "noise") {
            config.noise = eval::noise_kind_from_string(value);
        } else if (key == "n_train") {
            config.n_train = static_cast<int>(parse_integer(value, context));
        } else if (key == "n_calib") {
            config.n_calib = static_cast<int>(parse_integer(value, context));
        } else if (key == "n_test") {
            config.n_test = static_cast<int>(parse_integer(value, context));
        } else if (key == "data_seed") {
            config.data_seed = static_cast<std::uint64_t>(parse_integer(value, context));
        } else if (key == "frameworks") {
            config.frameworks.clear();
            for (const std::string& name : split_list(value)) {
                config.frameworks.push_back(conformal::framework_from_string(name));
            }
            if (config.frameworks.empty()) {
                throw std::invalid_argument(context + ": empty framework list");
            }
        } else if (key == "alphas") {
            config.alphas.clear();
            for (const std::string& item : split_list(value)) {
                config.alphas.push_back(parse_real(item, context));
            }
            if (config.alphas.empty()) {
                throw std::invalid_argument(context + ": empty alpha list");
            }
        } else if (key == "n_seeds") {
            config.n_seeds = static_cast<int>(parse_integer(value, context));
        } else if (key == "seed_base") {
            config.seed_base = static_cast<std::uint64_t>(parse_integer(value, context));
        } else if (key == "calib_fraction") {
            config.calib_fraction = parse_real(value, context);
        } else if (key == "weight_decay") {
            config.weight_decay = parse_real(value, context);
        } else if (key == "learner") {
            config.learner.kind = learner_kind_from_string(value);
        } else if (key == "learner_seed") {
            config.learner.seed = static_cast<std::uint64_t>(parse_integer(value, context));
        } else if (key == "sigma_learner") {
            config.sigma_learner.kind = learner_kind_from_string(value);
        } else if (has_prefix(key, "param.")) {
            config.learner.params[key.substr(6)] = parse_real(value, context);
        } else if (has_prefix(key, "sigma_param.")) {
            config.sigma_learner.params[key.substr(12)] = parse_real(value, context);
        } else if (key == "out_dir") {
            config.out_dir = value;
        } else {
            throw std::invalid_argument(context + ": unknown key '" + key + "'");
        }
    }

    for (double alpha : config.alphas) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument(path + ": alpha " + std::to_string(alpha) +
                                        " outside (0,1)");
        }
    }
    if (!(config.calib_fraction > 0.0 && config.calib_fraction < 1.0)) {
        throw std::invalid_argument(path + ": calib_fraction outside (0,1)");
    }
    if (!(config.weight_decay > 0.0 && config.weight_decay <= 1.0)) {
        throw std::invalid_argument(path + ": weight_decay outside (0,1]");
    }
    if (config.n_seeds < 1) {
        throw std::invalid_argument(path + ": n_seeds must be >= 1");
    }
    if (config.is_synthetic() &&
        (config.n_train < 1 || config.n_calib < 1 || config.n_test < 1)) {
        throw std::invalid_argument(path + ": synthetic sizes must be >= 1");
    }
    return config;
}

std::string default_config_text() {
    return
        "# dataset: synthetic or fd001..fd004\n"
        "dataset = synthetic\n"
        "data_dir = data\n"
        "feature_mode = windowed\n"
        "\n"
        "# synthetic data\n"
        "noise = homoscedastic\n"
        "n_train = 1800\n"
        "n_calib = 200\n"
        "n_test = 500\n"
        "data_seed = 1\n"
        "\n"
        "# experiment grid\n"
        "frameworks = scp,scp_nnm,cqr,nex_scp,nex_scp_nnm\n"
        "alphas = 0.10,0.15,0.20,0.25\n"
        "n_seeds = 15\n"
        "seed_base = 0\n"
        "calib_fraction = 0.10\n"
        "weight_decay = 0.99\n"
        "\n"
        "# learners (param.<name> / sigma_param.<name> set hyperparameters)\n"
        "learner = gradient_boosting\n"
        "learner_seed = 0\n"
        "sigma_learner = random_forest\n"
        "\n"
        "out_dir = out\n";
}

}  // namespace rulcp::cli
