#pragma once

#include <span>
#include <string>
#include <vector>

#include "qdyn/errors.hpp"

namespace qdyn {

// Dense row-major matrix of 64-bit reals. Rank 2 is all this model needs:
// every intermediate is a sequence-by-feature matrix, scalars are 1x1.
class Tensor {
  public:
    Tensor() = default;
    Tensor(int rows, int cols);
    Tensor(int rows, int cols, double fill);
    Tensor(int rows, int cols, std::vector<double> data);

    static Tensor row(std::vector<double> values);
    static Tensor column(std::vector<double> values);
    static Tensor identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return rows_ * cols_; }

    double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> span() const { return data_; }

    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shape_str() const;
    bool all_finite() const;

    bool operator==(const Tensor& other) const = default;

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Plain forward kernels. The tape records these; they are also usable
// directly when no gradient is needed.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// Adds a 1xN row vector to every row of an MxN matrix (bias broadcast).
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor tanh_map(const Tensor& a);
Tensor relu_map(const Tensor& a);
// Row-wise softmax with per-row max subtraction.
Tensor softmax_rows(const Tensor& a);
// Per-row normalization to zero mean / unit population variance (divisor n),
// then scaled by gamma and shifted by beta (both 1xN).
Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps);
// Concatenate equal-row matrices side by side.
Tensor concat_cols(const std::vector<Tensor>& parts);
// MxN -> 1x(M*N), row-major order.
Tensor flatten_row(const Tensor& a);
double sum_all(const Tensor& a);

}  // namespace qdyn
