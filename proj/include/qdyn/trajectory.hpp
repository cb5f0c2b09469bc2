#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdyn/errors.hpp"

namespace qdyn {

// Physical parameters of a spin-boson trajectory. The tunneling element
// delta is the energy unit; epsilon, lambda and omega_c are in units of
// delta, beta in 1/delta. gamma/gamma_phi are the effective surrogate
// rates actually used, recorded so a file is self-describing.
struct TrajectoryMeta {
    double epsilon = 0.0;
    double delta = 1.0;
    double lambda = 0.0;
    double omega_c = 1.0;
    double beta = 1.0;
    std::optional<double> gamma;
    std::optional<double> gamma_phi;

    void validate() const;
};

// A population-difference time series on the uniform grid t_n = (n-1)*dt.
struct Trajectory {
    TrajectoryMeta meta;
    std::string source = "surrogate";  // external | surrogate | prediction
    double dt = 0.1;
    std::vector<double> times;
    std::vector<double> values;
    // Extra header keys carried through save/load (seed_len, model_checksum).
    std::map<std::string, std::string> extra;

    int points() const { return static_cast<int>(values.size()); }
};

// Grid and range checks shared by the loader and the generator.
void validate_trajectory(const Trajectory& traj);

// Text format: '# key=value' header lines (epsilon, delta, lambda, omega_c,
// beta, dt, source required), then one 'time,value' pair per line with 17
// significant digits. Round trips are bitwise.
Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);

// Shortest text rendering that parses back to the identical double.
std::string format_double(double v);

// FNV-1a 64-bit over a file's bytes; used for manifests and checkpoint
// fingerprints in prediction headers.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string to_hex(std::uint64_t v);

}  // namespace qdyn
