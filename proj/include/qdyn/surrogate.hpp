#pragma once

#include <cstdint>
#include <optional>

#include "qdyn/trajectory.hpp"

namespace qdyn {

// Desk-scale stand-in for externally computed spin-boson data. Integrates
// a two-level Lindblad master equation
//   drho/dt = -i[H, rho] + gamma D[sigma-] rho + gamma_phi (sz rho sz - rho)
// with H = epsilon*sz + delta*sx from rho(0) = |0><0|, and emits <sz> on the
// uniform grid. The rate mapping from the bath parameters is NOT physical;
// it only produces diverse damped-oscillatory families. Explicit rates
// override the defaults gamma = lambda, gamma_phi = lambda/beta.
struct SurrogateOptions {
    std::optional<double> gamma;
    std::optional<double> gamma_phi;
    // Relative jitter applied to the effective rates when a noise seed is
    // given; distinguishes grid points whose default rates coincide.
    double rate_jitter = 0.1;
    // RK4 substeps per output interval.
    int substeps = 20;
};

struct SurrogateDiag {
    double max_trace_deviation = 0.0;
};

Trajectory generate_surrogate(const TrajectoryMeta& meta, double dt, int points,
                              std::optional<std::uint64_t> noise_seed = std::nullopt,
                              const SurrogateOptions& options = {},
                              SurrogateDiag* diag = nullptr);

}  // namespace qdyn
