#include "qdyn/embedding.hpp"

#include <cmath>

namespace qdyn {

void EncodingConfig::validate() const {
    if (d_p <= 0 || d_p % 2 != 0) {
        throw ShapeError("encoding dimension must be a positive even integer, got " +
                         std::to_string(d_p));
    }
    if (!(base > 1.0)) {
        throw ShapeError("encoding base must exceed 1");
    }
}

Tensor positional_encoding(std::span<const double> times, const EncodingConfig& cfg) {
    cfg.validate();
    if (times.empty()) {
        throw ShapeError("positional_encoding needs at least one time stamp");
    }
    const int t_len = static_cast<int>(times.size());
    Tensor pe(t_len, cfg.d_p);
    std::vector<double> omega(static_cast<size_t>(cfg.d_p));
    for (int k = 0; k < cfg.d_p; ++k) {
        omega[static_cast<size_t>(k)] = std::pow(cfg.base, -2.0 * k / cfg.d_p);
    }
    for (int j = 0; j < t_len; ++j) {
        if (!std::isfinite(times[static_cast<size_t>(j)])) {
            throw ShapeError("positional_encoding requires finite times");
        }
        for (int k = 0; k < cfg.d_p; ++k) {
            const double phase = times[static_cast<size_t>(j)] * omega[static_cast<size_t>(k)];
            pe.at(j, k) = (k % 2 == 0) ? std::sin(phase) : std::cos(phase);
        }
    }
    return pe;
}

Tensor project_values(std::span<const double> x, const Tensor& w, const Tensor& b) {
    if (w.rows() != 1 || b.rows() != 1 || w.cols() != b.cols()) {
        throw ShapeError("project_values expects 1xd weight and bias rows, got " +
                         w.shape_str() + " and " + b.shape_str());
    }
    Tensor values = Tensor::column(std::vector<double>(x.begin(), x.end()));
    return add_row(matmul(values, w), b);
}

Tensor embed(std::span<const double> x, std::span<const double> t, const Tensor& w,
             const Tensor& b, const EncodingConfig& cfg) {
    if (x.size() != t.size()) {
        throw ShapeError("embed value/time lengths differ: " + std::to_string(x.size()) +
                         " vs " + std::to_string(t.size()));
    }
    return add(project_values(x, w, b), positional_encoding(t, cfg));
}

}  // namespace qdyn
