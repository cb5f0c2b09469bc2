#include "qdyn/tensor.hpp"

#include <cmath>
#include <utility>

namespace qdyn {

Tensor::Tensor(int rows, int cols) : Tensor(rows, cols, 0.0) {}

Tensor::Tensor(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows <= 0 || cols <= 0) {
        throw ShapeError("tensor dimensions must be positive, got " + shape_str());
    }
}

Tensor::Tensor(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows <= 0 || cols <= 0) {
        throw ShapeError("tensor dimensions must be positive, got " + shape_str());
    }
    if (data_.size() != static_cast<size_t>(rows) * cols) {
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
    }
}

Tensor Tensor::row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor(1, n, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor(n, 1, std::move(values));
}

Tensor Tensor::identity(int n) {
    Tensor out(n, n);
    for (int i = 0; i < n; ++i) {
        out.at(i, i) = 1.0;
    }
    return out;
}

std::string Tensor::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul inner dimensions differ: " + a.shape_str() + " times " +
                         b.shape_str());
    }
    const int m = a.rows();
    const int k = a.cols();
    const int n = b.cols();
    Tensor out(m, n);
    // i-k-j order keeps both b and out rows contiguous.
    for (int i = 0; i < m; ++i) {
        const double* arow = a.data() + static_cast<size_t>(i) * k;
        double* orow = out.data() + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) {
                continue;
            }
            const double* brow = b.data() + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    Tensor out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("add shapes differ: " + a.shape_str() + " vs " + b.shape_str());
    }
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data()[i] += b.data()[i];
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("sub shapes differ: " + a.shape_str() + " vs " + b.shape_str());
    }
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data()[i] -= b.data()[i];
    }
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("hadamard shapes differ: " + a.shape_str() + " vs " + b.shape_str());
    }
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data()[i] *= b.data()[i];
    }
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data()[i] *= c;
    }
    return out;
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("add_row expects a 1x" + std::to_string(a.cols()) +
                         " bias row, got " + row.shape_str());
    }
    Tensor out = a;
    for (int i = 0; i < a.rows(); ++i) {
        double* orow = out.data() + static_cast<size_t>(i) * a.cols();
        for (int j = 0; j < a.cols(); ++j) {
            orow[j] += row.data()[j];
        }
    }
    return out;
}

Tensor tanh_map(const Tensor& a) {
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data()[i] = std::tanh(out.data()[i]);
    }
    return out;
}

Tensor relu_map(const Tensor& a) {
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data()[i] = out.data()[i] > 0.0 ? out.data()[i] : 0.0;
    }
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    Tensor out = a;
    for (int i = 0; i < a.rows(); ++i) {
        double* row = out.data() + static_cast<size_t>(i) * a.cols();
        double mx = row[0];
        for (int j = 1; j < a.cols(); ++j) {
            mx = std::max(mx, row[j]);
        }
        double denom = 0.0;
        for (int j = 0; j < a.cols(); ++j) {
            row[j] = std::exp(row[j] - mx);
            denom += row[j];
        }
        const double inv = 1.0 / denom;
        for (int j = 0; j < a.cols(); ++j) {
            row[j] *= inv;
        }
    }
    return out;
}

Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps) {
    if (a.cols() < 2) {
        throw ShapeError("layer_norm needs at least 2 columns, got " + a.shape_str());
    }
    if (gamma.rows() != 1 || gamma.cols() != a.cols() || beta.rows() != 1 ||
        beta.cols() != a.cols()) {
        throw ShapeError("layer_norm gamma/beta must be 1x" + std::to_string(a.cols()) +
                         ", got " + gamma.shape_str() + " and " + beta.shape_str());
    }
    if (!(eps > 0.0)) {
        throw ShapeError("layer_norm eps must be positive");
    }
    const int n = a.cols();
    Tensor out = a;
    for (int i = 0; i < a.rows(); ++i) {
        double* row = out.data() + static_cast<size_t>(i) * n;
        double mean = 0.0;
        for (int j = 0; j < n; ++j) {
            mean += row[j];
        }
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= n;
        const double inv_std = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < n; ++j) {
            row[j] = (row[j] - mean) * inv_std * gamma.data()[j] + beta.data()[j];
        }
    }
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_cols needs at least one input");
    }
    const int rows = parts.front().rows();
    int total_cols = 0;
    for (const Tensor& p : parts) {
        if (p.rows() != rows) {
            throw ShapeError("concat_cols row mismatch: " + parts.front().shape_str() +
                             " vs " + p.shape_str());
        }
        total_cols += p.cols();
    }
    Tensor out(rows, total_cols);
    int offset = 0;
    for (const Tensor& p : parts) {
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < p.cols(); ++j) {
                out.at(i, offset + j) = p.at(i, j);
            }
        }
        offset += p.cols();
    }
    return out;
}

Tensor flatten_row(const Tensor& a) {
    Tensor out = a;
    return Tensor(1, a.size(), std::vector<double>(out.data(), out.data() + out.size()));
}

double sum_all(const Tensor& a) {
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        s += a.data()[i];
    }
    return s;
}

}  // namespace qdyn
