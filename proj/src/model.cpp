#include "qdyn/model.hpp"

#include <array>
#include <cmath>
#include <random>

namespace qdyn {

void ModelConfig::validate() const {
    if (window_len < 1) {
        throw ShapeError("window_len must be at least 1");
    }
    if (d_p < 2 || d_p % 2 != 0) {
        throw ShapeError("d_p must be a positive even integer, got " + std::to_string(d_p));
    }
    if (n_heads < 1 || d_p % n_heads != 0) {
        throw ShapeError("n_heads must divide d_p: " + std::to_string(n_heads) + " vs " +
                         std::to_string(d_p));
    }
    if (n_layers < 1 || ffn_hidden < 1 || reduce_dim < 1 || fc1 < 1 || fc2 < 1) {
        throw ShapeError("layer sizes must be positive");
    }
    if (!(ln_eps > 0.0) || !(pe_base > 1.0) || !(dt > 0.0)) {
        throw ShapeError("ln_eps and dt must be positive, pe_base must exceed 1");
    }
}

std::vector<ParamSpec> param_shapes(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<ParamSpec> specs;
    specs.push_back({"embed.W", 1, cfg.d_p, ParamKind::Weight});
    specs.push_back({"embed.b", 1, cfg.d_p, ParamKind::Bias});
    for (int layer = 1; layer <= cfg.n_layers; ++layer) {
        const std::string lp = "layer" + std::to_string(layer) + ".";
        for (int head = 1; head <= cfg.n_heads; ++head) {
            const std::string hp = lp + "head" + std::to_string(head) + ".";
            specs.push_back({hp + "Wq", cfg.d_p, cfg.d_k(), ParamKind::Weight});
            specs.push_back({hp + "bq", 1, cfg.d_k(), ParamKind::Bias});
            specs.push_back({hp + "Wk", cfg.d_p, cfg.d_k(), ParamKind::Weight});
            specs.push_back({hp + "bk", 1, cfg.d_k(), ParamKind::Bias});
            specs.push_back({hp + "Wv", cfg.d_p, cfg.d_v(), ParamKind::Weight});
            specs.push_back({hp + "bv", 1, cfg.d_v(), ParamKind::Bias});
        }
        specs.push_back({lp + "attn.Wo", cfg.n_heads * cfg.d_v(), cfg.d_p, ParamKind::Weight});
        specs.push_back({lp + "attn.bo", 1, cfg.d_p, ParamKind::Bias});
        specs.push_back({lp + "ln1.gamma", 1, cfg.d_p, ParamKind::Gamma});
        specs.push_back({lp + "ln1.beta", 1, cfg.d_p, ParamKind::Beta});
        specs.push_back({lp + "ffn.W1", cfg.d_p, cfg.ffn_hidden, ParamKind::Weight});
        specs.push_back({lp + "ffn.b1", 1, cfg.ffn_hidden, ParamKind::Bias});
        specs.push_back({lp + "ffn.W2", cfg.ffn_hidden, cfg.d_p, ParamKind::Weight});
        specs.push_back({lp + "ffn.b2", 1, cfg.d_p, ParamKind::Bias});
        specs.push_back({lp + "ln2.gamma", 1, cfg.d_p, ParamKind::Gamma});
        specs.push_back({lp + "ln2.beta", 1, cfg.d_p, ParamKind::Beta});
    }
    specs.push_back({"reduce.W", cfg.d_p, cfg.reduce_dim, ParamKind::Weight});
    specs.push_back({"reduce.b", 1, cfg.reduce_dim, ParamKind::Bias});
    specs.push_back({"fc1.W", cfg.window_len * cfg.reduce_dim, cfg.fc1, ParamKind::Weight});
    specs.push_back({"fc1.b", 1, cfg.fc1, ParamKind::Bias});
    specs.push_back({"fc2.W", cfg.fc1, cfg.fc2, ParamKind::Weight});
    specs.push_back({"fc2.b", 1, cfg.fc2, ParamKind::Bias});
    specs.push_back({"out.W", cfg.fc2, 1, ParamKind::Weight});
    specs.push_back({"out.b", 1, 1, ParamKind::Bias});
    return specs;
}

std::int64_t count_params(const ModelConfig& cfg) {
    std::int64_t total = 0;
    for (const ParamSpec& s : param_shapes(cfg)) {
        total += static_cast<std::int64_t>(s.rows) * s.cols;
    }
    return total;
}

Tensor& TransformerForecaster::at(const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) {
        throw ShapeError("model has no parameter '" + name + "'");
    }
    return it->second;
}

const Tensor& TransformerForecaster::at(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) {
        throw ShapeError("model has no parameter '" + name + "'");
    }
    return it->second;
}

TransformerForecaster init_params(const ModelConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TransformerForecaster model{cfg, {}};
    for (const ParamSpec& s : param_shapes(cfg)) {
        Tensor t(s.rows, s.cols);
        switch (s.kind) {
            case ParamKind::Weight: {
                const double bound = std::sqrt(6.0 / (s.rows + s.cols));
                std::uniform_real_distribution<double> dist(-bound, bound);
                for (int i = 0; i < t.size(); ++i) {
                    t.data()[i] = dist(rng);
                }
                break;
            }
            case ParamKind::Gamma:
                for (int i = 0; i < t.size(); ++i) {
                    t.data()[i] = 1.0;
                }
                break;
            case ParamKind::Bias:
            case ParamKind::Beta:
                break;  // zero-initialized
        }
        model.params.emplace(s.name, std::move(t));
    }
    return model;
}

BoundParams bind_params(Tape& tape, const TransformerForecaster& model) {
    BoundParams bound;
    for (const ParamSpec& s : param_shapes(model.cfg)) {
        bound.emplace(s.name, tape.param(s.name, model.at(s.name)));
    }
    return bound;
}

Value attention_head(Tape& tape, Value x, Value wq, Value bq, Value wk, Value bk, Value wv,
                     Value bv, int d_k, ForwardTrace* trace) {
    Value q = tape.add_row(tape.matmul(x, wq), bq);
    Value k = tape.add_row(tape.matmul(x, wk), bk);
    Value v = tape.add_row(tape.matmul(x, wv), bv);
    Value scores = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(d_k));
    Value weights = tape.softmax_rows(scores);
    if (trace != nullptr) {
        trace->attention.push_back(weights);
    }
    return tape.matmul(weights, v);
}

Value multi_head(Tape& tape, Value x, const std::vector<std::array<Value, 6>>& heads, Value wo,
                 Value bo, int d_k, ForwardTrace* trace) {
    std::vector<Value> outputs;
    outputs.reserve(heads.size());
    for (const auto& h : heads) {
        outputs.push_back(attention_head(tape, x, h[0], h[1], h[2], h[3], h[4], h[5], d_k, trace));
    }
    Value merged = outputs.size() == 1 ? outputs.front() : tape.concat_cols(outputs);
    return tape.add_row(tape.matmul(merged, wo), bo);
}

Value transformer_layer(Tape& tape, const ModelConfig& cfg, const BoundParams& bound,
                        int layer_index, Value x, ForwardTrace* trace) {
    const std::string lp = "layer" + std::to_string(layer_index) + ".";
    auto p = [&](const std::string& suffix) { return bound.at(lp + suffix); };

    std::vector<std::array<Value, 6>> heads;
    for (int head = 1; head <= cfg.n_heads; ++head) {
        const std::string hp = "head" + std::to_string(head) + ".";
        heads.push_back({p(hp + "Wq"), p(hp + "bq"), p(hp + "Wk"), p(hp + "bk"), p(hp + "Wv"),
                         p(hp + "bv")});
    }
    Value attended = multi_head(tape, x, heads, p("attn.Wo"), p("attn.bo"), cfg.d_k(), trace);
    Value normed =
        tape.layer_norm(tape.add(x, attended), p("ln1.gamma"), p("ln1.beta"), cfg.ln_eps);

    Value hidden = tape.tanh(tape.add_row(tape.matmul(normed, p("ffn.W1")), p("ffn.b1")));
    Value ffn_out = tape.add_row(tape.matmul(hidden, p("ffn.W2")), p("ffn.b2"));
    return tape.layer_norm(tape.add(normed, ffn_out), p("ln2.gamma"), p("ln2.beta"), cfg.ln_eps);
}

Value build_layers(Tape& tape, const ModelConfig& cfg, const BoundParams& bound, Value x,
                   ForwardTrace* trace) {
    Value out = x;
    for (int layer = 1; layer <= cfg.n_layers; ++layer) {
        out = transformer_layer(tape, cfg, bound, layer, out, trace);
    }
    return out;
}

Value build_forward(Tape& tape, const ModelConfig& cfg, const BoundParams& bound,
                    std::span<const double> x, std::span<const double> t, ForwardTrace* trace) {
    if (static_cast<int>(x.size()) != cfg.window_len ||
        static_cast<int>(t.size()) != cfg.window_len) {
        throw ShapeError("forward expects " + std::to_string(cfg.window_len) +
                         " values and times, got " + std::to_string(x.size()) + " and " +
                         std::to_string(t.size()));
    }
    Value values = tape.constant(Tensor::column(std::vector<double>(x.begin(), x.end())));
    Value projected = tape.add_row(tape.matmul(values, bound.at("embed.W")), bound.at("embed.b"));
    Value pe = tape.constant(positional_encoding(t, cfg.encoding()));
    Value embedded = tape.add(projected, pe);

    Value encoded = build_layers(tape, cfg, bound, embedded, trace);

    Value reduced =
        tape.add_row(tape.matmul(encoded, bound.at("reduce.W")), bound.at("reduce.b"));
    Value flat = tape.flatten_row(reduced);
    Value h1 = tape.relu(tape.add_row(tape.matmul(flat, bound.at("fc1.W")), bound.at("fc1.b")));
    Value h2 = tape.relu(tape.add_row(tape.matmul(h1, bound.at("fc2.W")), bound.at("fc2.b")));
    return tape.add_row(tape.matmul(h2, bound.at("out.W")), bound.at("out.b"));
}

double forward(const TransformerForecaster& model, std::span<const double> x,
               std::span<const double> t) {
    Tape tape;
    BoundParams bound = bind_params(tape, model);
    Value out = build_forward(tape, model.cfg, bound, x, t);
    return tape.val(out).data()[0];
}

}  // namespace qdyn
