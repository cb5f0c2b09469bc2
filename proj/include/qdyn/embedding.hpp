#pragma once

#include <span>

#include "qdyn/tensor.hpp"

namespace qdyn {

// Sinusoidal time encoding. Frequencies run over the full dimension index:
// omega_k = base^(-2k/d_p) for k in [0, d_p), even k -> sin, odd k -> cos.
// The encoding depends on the time values themselves, not their positions,
// so shifted windows get distinct rows.
struct EncodingConfig {
    int d_p = 64;
    double base = 1000.0;

    void validate() const;
};

// One row per time stamp: entry (j,k) = sin(t_j * omega_k) for even k,
// cos(t_j * omega_k) for odd k. Non-trainable; recomputed per window since
// rollout keeps shifting the time grid.
Tensor positional_encoding(std::span<const double> times, const EncodingConfig& cfg);

// Position-wise affine lift of the scalar series into d_p dimensions:
// row j = x_j * W + b with W, b of shape 1 x d_p.
Tensor project_values(std::span<const double> x, const Tensor& w, const Tensor& b);

// Model input X = P + PE.
Tensor embed(std::span<const double> x, std::span<const double> t, const Tensor& w,
             const Tensor& b, const EncodingConfig& cfg);

}  // namespace qdyn
