#include "qdyn/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace qdyn {

namespace {

constexpr double kValueTolerance = 1e-9;
constexpr double kGridTolerance = 1e-12;

double parse_double(const std::string& text, int line_no, const std::string& what) {
    size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &consumed);
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" +
                        text + "'");
    }
    if (consumed != text.size()) {
        throw DataError("line " + std::to_string(line_no) + ": trailing characters in " + what +
                        " '" + text + "'");
    }
    return v;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void TrajectoryMeta::validate() const {
    for (double v : {epsilon, delta, lambda, omega_c, beta}) {
        if (!std::isfinite(v)) {
            throw DataError("trajectory metadata contains a non-finite parameter");
        }
    }
    if (lambda < 0.0 || !(omega_c > 0.0) || !(beta > 0.0)) {
        throw DataError("trajectory metadata out of range: lambda must be >= 0, omega_c and "
                        "beta positive");
    }
}

void validate_trajectory(const Trajectory& traj) {
    traj.meta.validate();
    if (traj.values.size() != traj.times.size()) {
        throw DataError("trajectory time/value lengths differ");
    }
    if (traj.points() < 2) {
        throw DataError("trajectory needs at least 2 points, has " +
                        std::to_string(traj.points()));
    }
    if (!(traj.dt > 0.0)) {
        throw DataError("trajectory dt must be positive");
    }
    // Predictions are written unclamped so divergence stays visible; the
    // Pauli range bound applies to physical sources only.
    const bool check_range = traj.source != "prediction";
    for (size_t i = 0; i < traj.values.size(); ++i) {
        if (check_range && std::abs(traj.values[i]) > 1.0 + kValueTolerance) {
            throw DataError("value out of range at point " + std::to_string(i + 1) + ": " +
                            format_double(traj.values[i]));
        }
        if (i > 0) {
            const double step = traj.times[i] - traj.times[i - 1];
            if (step <= 0.0) {
                throw DataError("times not strictly increasing at point " +
                                std::to_string(i + 1));
            }
            if (std::abs(step - traj.dt) > kGridTolerance) {
                throw DataError("non-uniform time grid at point " + std::to_string(i + 1) +
                                ": step " + format_double(step) + " vs dt " +
                                format_double(traj.dt));
            }
        }
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open trajectory file " + path.string());
    }

    static const std::set<std::string> known_keys = {
        "epsilon", "delta",  "lambda",   "omega_c",  "beta",
        "dt",      "source", "gamma",    "gamma_phi"};
    static const std::set<std::string> passthrough_keys = {"seed_len", "model_checksum"};
    static const std::set<std::string> required_keys = {"epsilon", "delta", "lambda",
                                                        "omega_c", "beta",  "dt",     "source"};

    Trajectory traj;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    bool in_header = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        if (stripped.front() == '#') {
            if (!in_header) {
                throw DataError("line " + std::to_string(line_no) +
                                ": header line after data started");
            }
            const std::string entry = trim(stripped.substr(1));
            const auto eq = entry.find('=');
            if (eq == std::string::npos) {
                throw DataError("line " + std::to_string(line_no) +
                                ": header line is not key=value: '" + entry + "'");
            }
            const std::string key = trim(entry.substr(0, eq));
            const std::string value = trim(entry.substr(eq + 1));
            if (passthrough_keys.count(key) != 0) {
                traj.extra[key] = value;
                continue;
            }
            if (known_keys.count(key) == 0) {
                throw DataError("line " + std::to_string(line_no) + ": unknown header key '" +
                                key + "'");
            }
            if (!seen.insert(key).second) {
                throw DataError("line " + std::to_string(line_no) + ": duplicate header key '" +
                                key + "'");
            }
            if (key == "source") {
                traj.source = value;
            } else if (key == "dt") {
                traj.dt = parse_double(value, line_no, "dt");
            } else if (key == "epsilon") {
                traj.meta.epsilon = parse_double(value, line_no, key);
            } else if (key == "delta") {
                traj.meta.delta = parse_double(value, line_no, key);
            } else if (key == "lambda") {
                traj.meta.lambda = parse_double(value, line_no, key);
            } else if (key == "omega_c") {
                traj.meta.omega_c = parse_double(value, line_no, key);
            } else if (key == "beta") {
                traj.meta.beta = parse_double(value, line_no, key);
            } else if (key == "gamma") {
                traj.meta.gamma = parse_double(value, line_no, key);
            } else if (key == "gamma_phi") {
                traj.meta.gamma_phi = parse_double(value, line_no, key);
            }
            continue;
        }
        if (in_header) {
            for (const std::string& key : required_keys) {
                if (seen.count(key) == 0) {
                    throw DataError(path.string() + ": missing required header key '" + key +
                                    "'");
                }
            }
            in_header = false;
        }
        const auto comma = stripped.find(',');
        if (comma == std::string::npos) {
            throw DataError("line " + std::to_string(line_no) +
                            ": expected 'time,value', got '" + stripped + "'");
        }
        traj.times.push_back(parse_double(trim(stripped.substr(0, comma)), line_no, "time"));
        traj.values.push_back(parse_double(trim(stripped.substr(comma + 1)), line_no, "value"));
    }
    if (in_header) {
        throw DataError(path.string() + ": no data lines found");
    }
    try {
        validate_trajectory(traj);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return traj;
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
    validate_trajectory(traj);
    // Write to a temp file first so a crash never leaves a half file behind.
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) {
            throw DataError("cannot write trajectory file " + tmp.string());
        }
        std::ostringstream header;
        header << "# epsilon=" << format_double(traj.meta.epsilon) << "\n"
               << "# delta=" << format_double(traj.meta.delta) << "\n"
               << "# lambda=" << format_double(traj.meta.lambda) << "\n"
               << "# omega_c=" << format_double(traj.meta.omega_c) << "\n"
               << "# beta=" << format_double(traj.meta.beta) << "\n"
               << "# dt=" << format_double(traj.dt) << "\n"
               << "# source=" << traj.source << "\n";
        if (traj.meta.gamma) {
            header << "# gamma=" << format_double(*traj.meta.gamma) << "\n";
        }
        if (traj.meta.gamma_phi) {
            header << "# gamma_phi=" << format_double(*traj.meta.gamma_phi) << "\n";
        }
        for (const auto& [key, value] : traj.extra) {
            header << "# " << key << "=" << value << "\n";
        }
        out << header.str();
        for (size_t i = 0; i < traj.values.size(); ++i) {
            out << format_double(traj.times[i]) << ',' << format_double(traj.values[i]) << "\n";
        }
        if (!out.good()) {
            throw DataError("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file for checksum: " + path.string());
    }
    std::uint64_t hash = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ULL;
        }
    }
    return hash;
}

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace qdyn
