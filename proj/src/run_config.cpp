#include "qdyn/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qdyn {

namespace {

double to_double(const std::string& value, const std::string& key) {
    size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &consumed);
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "' has non-numeric value '" + value + "'");
    }
    if (consumed != value.size() || !std::isfinite(v)) {
        throw DataError("config key '" + key + "' has invalid value '" + value + "'");
    }
    return v;
}

int to_int(const std::string& value, const std::string& key) {
    const double v = to_double(value, key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) {
        throw DataError("config key '" + key + "' must be an integer, got '" + value + "'");
    }
    return i;
}

std::uint64_t to_seed(const std::string& value, const std::string& key) {
    try {
        size_t consumed = 0;
        const std::uint64_t v = std::stoull(value, &consumed);
        if (consumed != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "' must be a non-negative integer, got '" +
                        value + "'");
    }
}

bool to_bool(const std::string& value, const std::string& key) {
    if (value == "0" || value == "false") {
        return false;
    }
    if (value == "1" || value == "true") {
        return true;
    }
    throw DataError("config key '" + key + "' must be 0/1/true/false, got '" + value + "'");
}

std::vector<double> to_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        out.push_back(to_double(item, key));
    }
    if (out.empty()) {
        throw DataError("config key '" + key + "' lists no values");
    }
    return out;
}

}  // namespace

RunConfig parse_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config_text(text.str(), path.string());
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) {
            continue;
        }
        const auto end = line.find_last_not_of(" \t\r");
        line = line.substr(begin, end - begin + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError(origin + " line " + std::to_string(line_no) +
                            ": expected key=value, got '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (!seen.insert(key).second) {
            throw DataError(origin + " line " + std::to_string(line_no) + ": duplicate key '" +
                            key + "'");
        }

        if (key == "T") {
            cfg.model.window_len = to_int(value, key);
        } else if (key == "d_p") {
            cfg.model.d_p = to_int(value, key);
        } else if (key == "n_heads") {
            cfg.model.n_heads = to_int(value, key);
        } else if (key == "n_layers") {
            cfg.model.n_layers = to_int(value, key);
        } else if (key == "ffn_hidden") {
            cfg.model.ffn_hidden = to_int(value, key);
        } else if (key == "reduce_dim") {
            cfg.model.reduce_dim = to_int(value, key);
        } else if (key == "fc1") {
            cfg.model.fc1 = to_int(value, key);
        } else if (key == "fc2") {
            cfg.model.fc2 = to_int(value, key);
        } else if (key == "ln_eps") {
            cfg.model.ln_eps = to_double(value, key);
        } else if (key == "pe_base") {
            cfg.model.pe_base = to_double(value, key);
        } else if (key == "dt") {
            cfg.model.dt = to_double(value, key);
        } else if (key == "L_pts") {
            cfg.traj_points = to_int(value, key);
        } else if (key == "val_fraction") {
            cfg.val_fraction = to_double(value, key);
        } else if (key == "split_mode") {
            if (value == "by_sample") {
                cfg.split_mode = RunConfig::SplitMode::BySample;
            } else if (value == "by_trajectory") {
                cfg.split_mode = RunConfig::SplitMode::ByTrajectory;
            } else {
                throw DataError("config key 'split_mode' must be by_sample or by_trajectory, "
                                "got '" +
                                value + "'");
            }
        } else if (key == "batch_size") {
            cfg.batch_size = to_int(value, key);
        } else if (key == "max_epochs") {
            cfg.max_epochs = to_int(value, key);
        } else if (key == "seed") {
            cfg.seed = to_seed(value, key);
        } else if (key == "lr") {
            cfg.lr = to_double(value, key);
        } else if (key == "deterministic") {
            cfg.deterministic = to_bool(value, key);
        } else if (key == "jobs") {
            cfg.jobs = to_int(value, key);
        } else if (key == "gamma") {
            cfg.gamma = to_double(value, key);
        } else if (key == "gamma_phi") {
            cfg.gamma_phi = to_double(value, key);
        } else if (key == "rate_jitter") {
            cfg.rate_jitter = to_double(value, key);
        } else if (key == "substeps") {
            cfg.substeps = to_int(value, key);
        } else if (key == "grid_epsilon") {
            cfg.grid_epsilon = to_list(value, key);
        } else if (key == "grid_lambda") {
            cfg.grid_lambda = to_list(value, key);
        } else if (key == "grid_omega_c") {
            cfg.grid_omega_c = to_list(value, key);
        } else if (key == "grid_beta") {
            cfg.grid_beta = to_list(value, key);
        } else if (key == "holdout") {
            cfg.holdout = to_int(value, key);
        } else {
            throw DataError(origin + " line " + std::to_string(line_no) + ": unknown key '" +
                            key + "'");
        }
    }
    cfg.model.validate();
    return cfg;
}

}  // namespace qdyn
