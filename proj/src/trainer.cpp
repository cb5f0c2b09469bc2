#include "qdyn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "qdyn/checkpoint.hpp"
#include "qdyn/trajectory.hpp"

namespace qdyn {

AdamState AdamState::for_model(const TransformerForecaster& model, double lr) {
    AdamState state;
    state.lr = lr;
    for (const auto& [name, tensor] : model.params) {
        state.m.emplace(name, Tensor(tensor.rows(), tensor.cols()));
        state.v.emplace(name, Tensor(tensor.rows(), tensor.cols()));
    }
    return state;
}

double mse_loss(std::span<const double> preds, std::span<const double> labels) {
    if (preds.size() != labels.size()) {
        throw ShapeError("mse_loss length mismatch: " + std::to_string(preds.size()) + " vs " +
                         std::to_string(labels.size()));
    }
    if (preds.empty()) {
        throw ShapeError("mse_loss needs at least one element");
    }
    double acc = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - labels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(preds.size());
}

void adam_step(std::map<std::string, Tensor>& weights, const GradMap& grads, AdamState& state) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (auto& [name, w] : weights) {
        auto git = grads.find(name);
        if (git == grads.end()) {
            throw ShapeError("adam_step is missing a gradient for '" + name + "'");
        }
        const Tensor& g = git->second;
        Tensor& m = state.m.at(name);
        Tensor& v = state.v.at(name);
        if (!g.same_shape(w) || !m.same_shape(w)) {
            throw ShapeError("adam_step shape mismatch for '" + name + "': weight " +
                             w.shape_str() + ", grad " + g.shape_str());
        }
        for (int i = 0; i < w.size(); ++i) {
            const double gi = g.data()[i];
            m.data()[i] = state.beta1 * m.data()[i] + (1.0 - state.beta1) * gi;
            v.data()[i] = state.beta2 * v.data()[i] + (1.0 - state.beta2) * gi * gi;
            const double m_hat = m.data()[i] / bc1;
            const double v_hat = v.data()[i] / bc2;
            w.data()[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps_hat);
        }
    }
}

std::vector<double> predict_batch(const TransformerForecaster& model,
                                  const std::vector<WindowedSample>& samples) {
    std::vector<double> preds;
    preds.reserve(samples.size());
    Tape tape;
    constexpr size_t kChunk = 128;
    for (size_t begin = 0; begin < samples.size(); begin += kChunk) {
        tape.reset();
        BoundParams bound = bind_params(tape, model);
        const size_t end = std::min(begin + kChunk, samples.size());
        for (size_t i = begin; i < end; ++i) {
            Value out = build_forward(tape, model.cfg, bound, samples[i].x, samples[i].t);
            preds.push_back(tape.val(out).data()[0]);
        }
    }
    return preds;
}

namespace {

// Sum over the given samples of grad of their squared error, along with the
// summed squared error itself. One tape per call.
std::pair<GradMap, double> squared_error_grad_sum(const TransformerForecaster& model,
                                                  const std::vector<WindowedSample>& samples,
                                                  std::span<const size_t> index_slice) {
    Tape tape;
    BoundParams bound = bind_params(tape, model);
    Value total{-1};
    for (size_t i : index_slice) {
        const WindowedSample& s = samples[i];
        Value pred = build_forward(tape, model.cfg, bound, s.x, s.t);
        Value err = tape.sub(pred, tape.constant(Tensor(1, 1, s.y)));
        Value sq = tape.hadamard(err, err);
        total = total.id < 0 ? sq : tape.add(total, sq);
    }
    const double loss_sum = tape.val(total).data()[0];
    return {tape.backward(total), loss_sum};
}

double evaluate_mse(const TransformerForecaster& model,
                    const std::vector<WindowedSample>& samples) {
    const std::vector<double> preds = predict_batch(model, samples);
    std::vector<double> labels;
    labels.reserve(samples.size());
    for (const WindowedSample& s : samples) {
        labels.push_back(s.y);
    }
    return mse_loss(preds, labels);
}

}  // namespace

TrainResult train(TransformerForecaster model, const std::vector<WindowedSample>& train_set,
                  const std::vector<WindowedSample>& val_set, const TrainPlan& plan) {
    if (train_set.empty() || val_set.empty()) {
        throw DataError("training requires non-empty train and validation sets");
    }
    if (plan.batch_size < 1) {
        throw DataError("batch size must be at least 1");
    }
    const int jobs = plan.deterministic ? 1 : std::max(1, plan.jobs);

    std::ofstream log;
    if (!plan.log_path.empty()) {
        log.open(plan.log_path);
        if (!log) {
            throw DataError("cannot write training log " + plan.log_path.string());
        }
        log << "epoch,train_mse,val_mse,seconds\n";
    }

    AdamState adam = AdamState::for_model(model, plan.lr);
    Checkpoint best;
    best.cfg = model.cfg;

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    TrainResult result;
    auto record = [&](int epoch, double train_mse, double val_mse) {
        const EpochRecord rec{epoch, train_mse, val_mse, elapsed()};
        result.trace.push_back(rec);
        if (log.is_open()) {
            log << rec.epoch << ',' << format_double(rec.train_mse) << ','
                << format_double(rec.val_mse) << ',' << format_double(rec.seconds) << '\n';
            log.flush();
        }
        if (val_mse < best.best_val_mse) {
            best.params = model.params;
            best.adam = adam;
            best.best_val_mse = val_mse;
            best.epoch = epoch;
            if (!plan.checkpoint_path.empty()) {
                save_checkpoint(best, plan.checkpoint_path);
            }
        }
    };

    if (plan.max_epochs == 0) {
        // Nothing to train; emit the initial weights with their validation
        // score and keep the log body empty.
        best.params = model.params;
        best.adam = adam;
        best.best_val_mse = evaluate_mse(model, val_set);
        best.epoch = 0;
        if (!plan.checkpoint_path.empty()) {
            save_checkpoint(best, plan.checkpoint_path);
        }
        return {std::move(best), {}};
    }

    record(0, evaluate_mse(model, train_set), evaluate_mse(model, val_set));

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(plan.shuffle_seed);

    for (int epoch = 1; epoch <= plan.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_sq_sum = 0.0;
        int batch_index = 0;
        for (size_t begin = 0; begin < order.size(); begin += plan.batch_size, ++batch_index) {
            const size_t end = std::min(begin + plan.batch_size, order.size());
            const std::span<const size_t> batch(order.data() + begin, end - begin);

            GradMap grad_sum;
            double batch_sq_sum = 0.0;
            if (jobs == 1 || batch.size() < 2) {
                std::tie(grad_sum, batch_sq_sum) =
                    squared_error_grad_sum(model, train_set, batch);
            } else {
                // Contiguous shards, one tape per worker, reduced in shard
                // order so a given shard count is reproducible.
                const size_t n_shards = std::min<size_t>(jobs, batch.size());
                std::vector<std::pair<GradMap, double>> partial(n_shards);
                std::vector<std::thread> workers;
                workers.reserve(n_shards);
                for (size_t s = 0; s < n_shards; ++s) {
                    const size_t lo = batch.size() * s / n_shards;
                    const size_t hi = batch.size() * (s + 1) / n_shards;
                    workers.emplace_back([&, s, lo, hi] {
                        partial[s] =
                            squared_error_grad_sum(model, train_set, batch.subspan(lo, hi - lo));
                    });
                }
                for (auto& w : workers) {
                    w.join();
                }
                grad_sum = std::move(partial[0].first);
                batch_sq_sum = partial[0].second;
                for (size_t s = 1; s < n_shards; ++s) {
                    for (auto& [name, g] : grad_sum) {
                        g = add(g, partial[s].first.at(name));
                    }
                    batch_sq_sum += partial[s].second;
                }
            }

            const double batch_mse = batch_sq_sum / static_cast<double>(batch.size());
            if (!std::isfinite(batch_mse)) {
                throw NumericError("non-finite training loss at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index) + ": " +
                                   format_double(batch_mse));
            }
            epoch_sq_sum += batch_sq_sum;

            const double inv_batch = 1.0 / static_cast<double>(batch.size());
            for (auto& [name, g] : grad_sum) {
                g = scale(g, inv_batch);
            }
            adam_step(model.params, grad_sum, adam);
        }

        const double train_mse = epoch_sq_sum / static_cast<double>(train_set.size());
        record(epoch, train_mse, evaluate_mse(model, val_set));
    }

    result.best = std::move(best);
    result.adam_steps = adam.step;
    return result;
}

TrainResult transfer_retrain(const Checkpoint& checkpoint, const ModelConfig& expected_cfg,
                             const std::vector<WindowedSample>& train_set,
                             const std::vector<WindowedSample>& val_set,
                             const TrainPlan& plan) {
    if (!(checkpoint.cfg == expected_cfg)) {
        throw DataError("checkpoint config does not match the requested model\n  checkpoint: " +
                        describe(checkpoint.cfg) + "\n  requested:  " + describe(expected_cfg));
    }
    // Warm start: weights from the checkpoint, moments reset so curvature
    // learned on the old distribution does not leak into the new one.
    return train(checkpoint.to_model(), train_set, val_set, plan);
}

std::string describe(const ModelConfig& cfg) {
    std::ostringstream out;
    out << "T=" << cfg.window_len << " d_p=" << cfg.d_p << " n_heads=" << cfg.n_heads
        << " n_layers=" << cfg.n_layers << " ffn_hidden=" << cfg.ffn_hidden
        << " reduce_dim=" << cfg.reduce_dim << " fc1=" << cfg.fc1 << " fc2=" << cfg.fc2
        << " ln_eps=" << format_double(cfg.ln_eps) << " pe_base=" << format_double(cfg.pe_base)
        << " dt=" << format_double(cfg.dt);
    return out.str();
}

}  // namespace qdyn
