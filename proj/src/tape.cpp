#include "qdyn/tape.hpp"

#include <cmath>
#include <utility>

namespace qdyn {

Value Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Value{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Value v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw ShapeError("value handle " + std::to_string(v.id) + " is not on this tape");
    }
    return nodes_[static_cast<size_t>(v.id)];
}

const Tensor& Tape::val(Value v) const { return node(v).value; }

void Tape::reset() {
    nodes_.clear();
    params_.clear();
}

Value Tape::constant(Tensor t) {
    return push({.op = Op::Constant, .value = std::move(t)});
}

Value Tape::param(const std::string& name, Tensor t) {
    if (params_.count(name) != 0) {
        throw ShapeError("param '" + name + "' registered twice on one tape");
    }
    Value v = push({.op = Op::Param, .value = std::move(t), .name = name});
    params_[name] = v.id;
    return v;
}

Value Tape::matmul(Value a, Value b) {
    return push({.op = Op::MatMul, .value = qdyn::matmul(val(a), val(b)), .a = a.id, .b = b.id});
}

Value Tape::transpose(Value a) {
    return push({.op = Op::Transpose, .value = qdyn::transpose(val(a)), .a = a.id});
}

Value Tape::add(Value a, Value b) {
    return push({.op = Op::Add, .value = qdyn::add(val(a), val(b)), .a = a.id, .b = b.id});
}

Value Tape::sub(Value a, Value b) {
    return push({.op = Op::Sub, .value = qdyn::sub(val(a), val(b)), .a = a.id, .b = b.id});
}

Value Tape::hadamard(Value a, Value b) {
    return push(
        {.op = Op::Hadamard, .value = qdyn::hadamard(val(a), val(b)), .a = a.id, .b = b.id});
}

Value Tape::scale(Value a, double c) {
    return push({.op = Op::Scale, .value = qdyn::scale(val(a), c), .a = a.id, .scalar = c});
}

Value Tape::add_row(Value a, Value row) {
    return push({.op = Op::AddRow, .value = qdyn::add_row(val(a), val(row)), .a = a.id, .b = row.id});
}

Value Tape::tanh(Value a) {
    return push({.op = Op::Tanh, .value = tanh_map(val(a)), .a = a.id});
}

Value Tape::relu(Value a) {
    return push({.op = Op::Relu, .value = relu_map(val(a)), .a = a.id});
}

Value Tape::softmax_rows(Value a) {
    return push({.op = Op::SoftmaxRows, .value = qdyn::softmax_rows(val(a)), .a = a.id});
}

Value Tape::layer_norm(Value a, Value gamma, Value beta, double eps) {
    // Computed inline rather than via the plain kernel: the backward pass
    // needs the normalized rows and inverse std deviations again.
    const Tensor& x = val(a);
    const Tensor& g = val(gamma);
    const Tensor& bt = val(beta);
    if (x.cols() < 2) {
        throw ShapeError("layer_norm needs at least 2 columns, got " + x.shape_str());
    }
    if (g.rows() != 1 || g.cols() != x.cols() || bt.rows() != 1 || bt.cols() != x.cols()) {
        throw ShapeError("layer_norm gamma/beta must be 1x" + std::to_string(x.cols()) +
                         ", got " + g.shape_str() + " and " + bt.shape_str());
    }
    if (!(eps > 0.0)) {
        throw ShapeError("layer_norm eps must be positive");
    }
    const int n = x.cols();
    Tensor normalized(x.rows(), n);
    Tensor out(x.rows(), n);
    std::vector<double> inv_std(static_cast<size_t>(x.rows()));
    for (int i = 0; i < x.rows(); ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) {
            mean += x.at(i, j);
        }
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = x.at(i, j) - mean;
            var += d * d;
        }
        var /= n;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<size_t>(i)] = is;
        for (int j = 0; j < n; ++j) {
            normalized.at(i, j) = (x.at(i, j) - mean) * is;
            out.at(i, j) = normalized.at(i, j) * g.data()[j] + bt.data()[j];
        }
    }
    return push({.op = Op::LayerNorm,
                 .value = std::move(out),
                 .a = a.id,
                 .b = gamma.id,
                 .c = beta.id,
                 .scalar = eps,
                 .aux = std::move(normalized),
                 .aux_vec = std::move(inv_std)});
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
    std::vector<Tensor> tensors;
    std::vector<int> ids;
    tensors.reserve(parts.size());
    ids.reserve(parts.size());
    for (Value p : parts) {
        tensors.push_back(val(p));
        ids.push_back(p.id);
    }
    return push(
        {.op = Op::ConcatCols, .value = qdyn::concat_cols(tensors), .inputs = std::move(ids)});
}

Value Tape::flatten_row(Value a) {
    return push({.op = Op::FlattenRow, .value = qdyn::flatten_row(val(a)), .a = a.id});
}

Value Tape::sum(Value a) {
    return push({.op = Op::Sum, .value = Tensor(1, 1, sum_all(val(a))), .a = a.id});
}

GradMap Tape::backward(Value loss) const {
    const Node& loss_node = node(loss);
    if (loss_node.value.rows() != 1 || loss_node.value.cols() != 1) {
        throw ShapeError("backward requires a scalar loss, got " + loss_node.value.shape_str());
    }

    // Adjoint per node; empty until first touched.
    std::vector<Tensor> adj(nodes_.size());
    auto accumulate = [&](int id, const Tensor& g) {
        Tensor& slot = adj[static_cast<size_t>(id)];
        if (slot.size() == 0) {
            slot = g;
        } else {
            slot = qdyn::add(slot, g);
        }
    };
    adj[static_cast<size_t>(loss.id)] = Tensor(1, 1, 1.0);

    for (int id = loss.id; id >= 0; --id) {
        const Node& n = nodes_[static_cast<size_t>(id)];
        const Tensor& g = adj[static_cast<size_t>(id)];
        if (g.size() == 0) {
            continue;  // not on the path to the loss
        }
        switch (n.op) {
            case Op::Constant:
            case Op::Param:
                break;
            case Op::MatMul: {
                const Tensor& a = nodes_[static_cast<size_t>(n.a)].value;
                const Tensor& b = nodes_[static_cast<size_t>(n.b)].value;
                accumulate(n.a, qdyn::matmul(g, qdyn::transpose(b)));
                accumulate(n.b, qdyn::matmul(qdyn::transpose(a), g));
                break;
            }
            case Op::Transpose:
                accumulate(n.a, qdyn::transpose(g));
                break;
            case Op::Add:
                accumulate(n.a, g);
                accumulate(n.b, g);
                break;
            case Op::Sub:
                accumulate(n.a, g);
                accumulate(n.b, qdyn::scale(g, -1.0));
                break;
            case Op::Hadamard:
                accumulate(n.a, qdyn::hadamard(g, nodes_[static_cast<size_t>(n.b)].value));
                accumulate(n.b, qdyn::hadamard(g, nodes_[static_cast<size_t>(n.a)].value));
                break;
            case Op::Scale:
                accumulate(n.a, qdyn::scale(g, n.scalar));
                break;
            case Op::AddRow: {
                accumulate(n.a, g);
                Tensor grow(1, g.cols());
                for (int i = 0; i < g.rows(); ++i) {
                    for (int j = 0; j < g.cols(); ++j) {
                        grow.data()[j] += g.at(i, j);
                    }
                }
                accumulate(n.b, grow);
                break;
            }
            case Op::Tanh: {
                Tensor gx = g;
                for (int i = 0; i < gx.size(); ++i) {
                    const double y = n.value.data()[i];
                    gx.data()[i] *= 1.0 - y * y;
                }
                accumulate(n.a, gx);
                break;
            }
            case Op::Relu: {
                Tensor gx = g;
                const Tensor& x = nodes_[static_cast<size_t>(n.a)].value;
                for (int i = 0; i < gx.size(); ++i) {
                    if (x.data()[i] <= 0.0) {
                        gx.data()[i] = 0.0;
                    }
                }
                accumulate(n.a, gx);
                break;
            }
            case Op::SoftmaxRows: {
                // dx = p * (g - sum_j g_j p_j) per row
                const Tensor& p = n.value;
                Tensor gx(p.rows(), p.cols());
                for (int i = 0; i < p.rows(); ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < p.cols(); ++j) {
                        dot += g.at(i, j) * p.at(i, j);
                    }
                    for (int j = 0; j < p.cols(); ++j) {
                        gx.at(i, j) = p.at(i, j) * (g.at(i, j) - dot);
                    }
                }
                accumulate(n.a, gx);
                break;
            }
            case Op::LayerNorm: {
                const Tensor& xhat = n.aux;
                const Tensor& gamma = nodes_[static_cast<size_t>(n.b)].value;
                const int cols = xhat.cols();
                Tensor gx(xhat.rows(), cols);
                Tensor ggamma(1, cols);
                Tensor gbeta(1, cols);
                for (int i = 0; i < xhat.rows(); ++i) {
                    // dgamma/dbeta sum over rows; dx via the standard
                    // centered form to keep row mean/variance constraints.
                    double mean_gy = 0.0;
                    double mean_gy_xhat = 0.0;
                    for (int j = 0; j < cols; ++j) {
                        const double gy = g.at(i, j) * gamma.data()[j];
                        mean_gy += gy;
                        mean_gy_xhat += gy * xhat.at(i, j);
                        ggamma.data()[j] += g.at(i, j) * xhat.at(i, j);
                        gbeta.data()[j] += g.at(i, j);
                    }
                    mean_gy /= cols;
                    mean_gy_xhat /= cols;
                    const double inv_std = n.aux_vec[static_cast<size_t>(i)];
                    for (int j = 0; j < cols; ++j) {
                        const double gy = g.at(i, j) * gamma.data()[j];
                        gx.at(i, j) =
                            inv_std * (gy - mean_gy - xhat.at(i, j) * mean_gy_xhat);
                    }
                }
                accumulate(n.a, gx);
                accumulate(n.b, ggamma);
                accumulate(n.c, gbeta);
                break;
            }
            case Op::ConcatCols: {
                int offset = 0;
                for (int in_id : n.inputs) {
                    const Tensor& part = nodes_[static_cast<size_t>(in_id)].value;
                    Tensor gp(part.rows(), part.cols());
                    for (int i = 0; i < part.rows(); ++i) {
                        for (int j = 0; j < part.cols(); ++j) {
                            gp.at(i, j) = g.at(i, offset + j);
                        }
                    }
                    accumulate(in_id, gp);
                    offset += part.cols();
                }
                break;
            }
            case Op::FlattenRow: {
                const Tensor& x = nodes_[static_cast<size_t>(n.a)].value;
                accumulate(n.a, Tensor(x.rows(), x.cols(),
                                       std::vector<double>(g.data(), g.data() + g.size())));
                break;
            }
            case Op::Sum: {
                const Tensor& x = nodes_[static_cast<size_t>(n.a)].value;
                accumulate(n.a, Tensor(x.rows(), x.cols(), g.data()[0]));
                break;
            }
        }
    }

    GradMap grads;
    for (const auto& [name, id] : params_) {
        const Tensor& g = adj[static_cast<size_t>(id)];
        if (g.size() != 0) {
            grads.emplace(name, g);
        } else {
            const Tensor& p = nodes_[static_cast<size_t>(id)].value;
            grads.emplace(name, Tensor(p.rows(), p.cols()));
        }
    }
    return grads;
}

}  // namespace qdyn
