#include "qdyn/surrogate.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <random>

namespace qdyn {

namespace {

using Rho = std::array<std::complex<double>, 4>;  // row-major 2x2

// Lindblad right-hand side for H = eps*sz + del*sx with amplitude damping
// |0> -> |1> at rate gamma and pure dephasing at rate gamma_phi.
Rho lindblad_rhs(const Rho& r, double eps, double del, double gamma, double gamma_phi) {
    const std::complex<double> i(0.0, 1.0);
    const auto& [r00, r01, r10, r11] = r;

    // -i [H, rho] with H = [[eps, del], [del, -eps]]
    const std::complex<double> h00 = eps, h01 = del, h10 = del, h11 = -eps;
    Rho out;
    out[0] = -i * (h00 * r00 + h01 * r10 - (r00 * h00 + r01 * h10));
    out[1] = -i * (h00 * r01 + h01 * r11 - (r00 * h01 + r01 * h11));
    out[2] = -i * (h10 * r00 + h11 * r10 - (r10 * h00 + r11 * h10));
    out[3] = -i * (h10 * r01 + h11 * r11 - (r10 * h01 + r11 * h11));

    // gamma (s- rho s+ - 1/2 {s+s-, rho}); s+s- = |0><0|
    out[0] += gamma * (-r00);
    out[1] += gamma * (-0.5 * r01);
    out[2] += gamma * (-0.5 * r10);
    out[3] += gamma * (r00);

    // gamma_phi (sz rho sz - rho) kills coherences only
    out[1] += gamma_phi * (-2.0 * r01);
    out[2] += gamma_phi * (-2.0 * r10);
    return out;
}

Rho axpy(const Rho& a, const Rho& b, double s) {
    Rho out;
    for (size_t i = 0; i < 4; ++i) {
        out[i] = a[i] + s * b[i];
    }
    return out;
}

}  // namespace

Trajectory generate_surrogate(const TrajectoryMeta& meta, double dt, int points,
                              std::optional<std::uint64_t> noise_seed,
                              const SurrogateOptions& options, SurrogateDiag* diag) {
    meta.validate();
    if (!(dt > 0.0) || points < 2) {
        throw DataError("surrogate needs dt > 0 and at least 2 grid points");
    }
    if (options.substeps < 1) {
        throw DataError("surrogate substeps must be at least 1");
    }

    double gamma = options.gamma.value_or(meta.lambda);
    double gamma_phi = options.gamma_phi.value_or(meta.lambda / meta.beta);
    if (noise_seed && options.rate_jitter > 0.0) {
        std::mt19937_64 rng(*noise_seed);
        std::uniform_real_distribution<double> jitter(-options.rate_jitter,
                                                      options.rate_jitter);
        gamma *= 1.0 + jitter(rng);
        gamma_phi *= 1.0 + jitter(rng);
    }
    if (gamma < 0.0 || gamma_phi < 0.0) {
        throw DataError("surrogate rates must be non-negative");
    }

    Trajectory traj;
    traj.meta = meta;
    traj.meta.gamma = gamma;
    traj.meta.gamma_phi = gamma_phi;
    traj.source = "surrogate";
    traj.dt = dt;
    traj.times.reserve(static_cast<size_t>(points));
    traj.values.reserve(static_cast<size_t>(points));

    Rho rho = {1.0, 0.0, 0.0, 0.0};  // |0><0|
    const double h = dt / options.substeps;
    double max_trace_dev = 0.0;
    for (int n = 0; n < points; ++n) {
        if (n > 0) {
            for (int s = 0; s < options.substeps; ++s) {
                const Rho k1 = lindblad_rhs(rho, meta.epsilon, meta.delta, gamma, gamma_phi);
                const Rho k2 = lindblad_rhs(axpy(rho, k1, h / 2), meta.epsilon, meta.delta,
                                            gamma, gamma_phi);
                const Rho k3 = lindblad_rhs(axpy(rho, k2, h / 2), meta.epsilon, meta.delta,
                                            gamma, gamma_phi);
                const Rho k4 =
                    lindblad_rhs(axpy(rho, k3, h), meta.epsilon, meta.delta, gamma, gamma_phi);
                for (size_t i = 0; i < 4; ++i) {
                    rho[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        const double trace_dev = std::abs((rho[0] + rho[3]).real() - 1.0) +
                                 std::abs((rho[0] + rho[3]).imag());
        max_trace_dev = std::max(max_trace_dev, trace_dev);
        if (trace_dev > 1e-6) {
            throw NumericError(
                "surrogate integration unstable at t=" + format_double(n * dt) +
                " (trace deviation " + format_double(trace_dev) +
                "); increase SurrogateOptions::substeps");
        }
        traj.times.push_back(n * dt);
        traj.values.push_back((rho[0] - rho[3]).real());
    }
    if (diag != nullptr) {
        diag->max_trace_deviation = max_trace_dev;
    }
    validate_trajectory(traj);
    return traj;
}

}  // namespace qdyn
