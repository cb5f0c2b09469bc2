#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qdyn/embedding.hpp"
#include "qdyn/tape.hpp"
#include "qdyn/tensor.hpp"

namespace qdyn {

// Architecture ledger. Defaults are the published optimum; d_k and d_v are
// tied to d_p and the head count.
struct ModelConfig {
    int window_len = 41;   // T
    int d_p = 64;
    int n_heads = 1;
    int n_layers = 2;
    int ffn_hidden = 1536;
    int reduce_dim = 1;
    int fc1 = 1024;
    int fc2 = 1408;
    double ln_eps = 1e-3;
    double pe_base = 1000.0;
    double dt = 0.1;

    int d_k() const { return d_p; }
    int d_v() const { return d_p / n_heads; }
    EncodingConfig encoding() const { return {d_p, pe_base}; }
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

enum class ParamKind : std::uint8_t { Weight, Bias, Gamma, Beta };

struct ParamSpec {
    std::string name;
    int rows;
    int cols;
    ParamKind kind;
};

// Every trainable array the config implies, in a fixed declaration order.
// Single source of truth for initialization, counting, checkpoint layout
// and tape binding.
std::vector<ParamSpec> param_shapes(const ModelConfig& cfg);

// Exact number of trainable scalars. The positional encoding contributes
// nothing.
std::int64_t count_params(const ModelConfig& cfg);

struct TransformerForecaster {
    ModelConfig cfg;
    std::map<std::string, Tensor> params;

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
};

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
// gamma = 1, beta = 0. Deterministic for a given seed.
TransformerForecaster init_params(const ModelConfig& cfg, std::uint64_t seed);

// Per-layer, per-head attention matrices captured during a forward build,
// for tests that inspect the softmax rows.
struct ForwardTrace {
    std::vector<Value> attention;
};

// Param tensors registered on a tape, one Value per named array.
using BoundParams = std::map<std::string, Value>;

BoundParams bind_params(Tape& tape, const TransformerForecaster& model);

// Single attention head: softmax(Q K^T / sqrt(d_k)) V with affine Q/K/V
// projections. No mask; every position attends to the whole window.
Value attention_head(Tape& tape, Value x, Value wq, Value bq, Value wk, Value bk, Value wv,
                     Value bv, int d_k, ForwardTrace* trace = nullptr);

// Concatenated heads followed by the output projection.
Value multi_head(Tape& tape, Value x, const std::vector<std::array<Value, 6>>& heads, Value wo,
                 Value bo, int d_k, ForwardTrace* trace = nullptr);

// Full encoder layer: post-norm residual attention block, then a
// position-wise tanh FFN block, also post-norm residual.
Value transformer_layer(Tape& tape, const ModelConfig& cfg, const BoundParams& bound,
                        int layer_index, Value x, ForwardTrace* trace = nullptr);

// The attention/FFN stack without embedding, for equivariance tests and
// composition oracles.
Value build_layers(Tape& tape, const ModelConfig& cfg, const BoundParams& bound, Value x,
                   ForwardTrace* trace = nullptr);

// Whole model on a tape: embed -> layers -> per-position reduction ->
// flatten -> fc1 (ReLU) -> fc2 (ReLU) -> scalar output. Returns the 1x1
// prediction node.
Value build_forward(Tape& tape, const ModelConfig& cfg, const BoundParams& bound,
                    std::span<const double> x, std::span<const double> t,
                    ForwardTrace* trace = nullptr);

// One prediction without keeping gradients around.
double forward(const TransformerForecaster& model, std::span<const double> x,
               std::span<const double> t);

}  // namespace qdyn
