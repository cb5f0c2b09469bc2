#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "test_util.hpp"

#include "qdyn/checkpoint.hpp"
#include "qdyn/surrogate.hpp"
#include "qdyn/trainer.hpp"

using namespace qdyn;

namespace {

ModelConfig tiny_config(int window_len = 5) {
    ModelConfig cfg;
    cfg.window_len = window_len;
    cfg.d_p = 4;
    cfg.n_heads = 1;
    cfg.n_layers = 1;
    cfg.ffn_hidden = 8;
    cfg.reduce_dim = 1;
    cfg.fc1 = 8;
    cfg.fc2 = 8;
    return cfg;
}

// Damped-cosine family windows, sliced the same way the pipeline does.
std::vector<WindowedSample> family_samples(double frequency, double damping, int n_traj,
                                           int window_len) {
    std::vector<WindowedSample> samples;
    for (int traj = 0; traj < n_traj; ++traj) {
        const double freq = frequency * (1.0 + 0.05 * traj);
        const double damp = damping * (1.0 + 0.1 * traj);
        Trajectory t;
        t.source = "external";
        t.dt = 0.1;
        for (int n = 0; n < 41; ++n) {
            t.times.push_back(n * 0.1);
            t.values.push_back(std::cos(freq * n * 0.1) * std::exp(-damp * n * 0.1));
        }
        t.meta.lambda = damping;
        const auto sliced = window_slice(t, {41, window_len + 1, 0.1});
        samples.insert(samples.end(), sliced.begin(), sliced.end());
    }
    return samples;
}

}  // namespace

TEST_CASE("mse_loss basics and oracle") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    CHECK(mse_loss(a, a) == 0.0);

    const std::vector<double> p = {1.0, 0.0};
    const std::vector<double> l = {0.0, 1.0};
    CHECK(mse_loss(p, l) == 1.0);

    std::mt19937_64 rng(131);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> preds(17);
    std::vector<double> labels(17);
    for (size_t i = 0; i < preds.size(); ++i) {
        preds[i] = dist(rng);
        labels[i] = dist(rng);
    }
    double acc = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        acc += (preds[i] - labels[i]) * (preds[i] - labels[i]);
    }
    CHECK(std::abs(mse_loss(preds, labels) - acc / 17.0) < 1e-15);

    CHECK_THROWS_AS(mse_loss(p, a), ShapeError);
    CHECK_THROWS_AS(mse_loss({}, {}), ShapeError);
}

TEST_CASE("adam leaves weights alone on zero gradients from a fresh state") {
    std::map<std::string, Tensor> weights;
    weights.emplace("w", Tensor(2, 2, 0.5));
    AdamState state = AdamState::for_model({tiny_config(), weights}, 1e-3);
    GradMap grads;
    grads.emplace("w", Tensor(2, 2, 0.0));
    adam_step(weights, grads, state);
    CHECK(state.step == 1);
    for (int i = 0; i < 4; ++i) {
        CHECK(weights.at("w").data()[i] == 0.5);
    }
}

TEST_CASE("first adam step moves by about -lr*sign(g)") {
    std::map<std::string, Tensor> weights;
    weights.emplace("w", Tensor(1, 1, 2.0));
    AdamState state;
    state.lr = 1e-4;
    state.m.emplace("w", Tensor(1, 1, 0.0));
    state.v.emplace("w", Tensor(1, 1, 0.0));
    GradMap grads;
    grads.emplace("w", Tensor(1, 1, 0.37));
    adam_step(weights, grads, state);
    const double update = weights.at("w").data()[0] - 2.0;
    CHECK(std::abs(update + state.lr) < state.lr * 1e-4);
}

TEST_CASE("three adam steps match the recurrence oracle") {
    const std::vector<double> gs = {0.3, -0.2, 0.5};
    std::map<std::string, Tensor> weights;
    weights.emplace("w", Tensor(1, 1, 1.0));
    AdamState state;
    state.lr = 1e-2;
    state.m.emplace("w", Tensor(1, 1, 0.0));
    state.v.emplace("w", Tensor(1, 1, 0.0));
    for (double g : gs) {
        GradMap grads;
        grads.emplace("w", Tensor(1, 1, g));
        adam_step(weights, grads, state);
    }

    // Spreadsheet-style replay.
    double theta = 1.0;
    double m = 0.0;
    double v = 0.0;
    for (size_t k = 0; k < gs.size(); ++k) {
        m = 0.9 * m + 0.1 * gs[k];
        v = 0.999 * v + 0.001 * gs[k] * gs[k];
        const double m_hat = m / (1.0 - std::pow(0.9, static_cast<double>(k + 1)));
        const double v_hat = v / (1.0 - std::pow(0.999, static_cast<double>(k + 1)));
        theta -= 1e-2 * m_hat / (std::sqrt(v_hat) + 1e-8);
    }
    CHECK(std::abs(weights.at("w").data()[0] - theta) < 1e-12);
    CHECK(state.step == 3);
}

TEST_CASE("a tiny model memorizes a single sample") {
    const ModelConfig cfg = tiny_config();
    WindowedSample sample;
    sample.x = {1.0, 0.95, 0.82, 0.63, 0.41};
    sample.t = {0.0, 0.1, 0.2, 0.3, 0.4};
    sample.y = 0.18;

    TrainPlan plan;
    plan.batch_size = 1;
    plan.max_epochs = 200;
    plan.shuffle_seed = 1;
    plan.lr = 1e-2;
    plan.deterministic = true;
    const TrainResult result = train(init_params(cfg, 3), {sample}, {sample}, plan);
    CHECK(result.trace.back().train_mse < 1e-6);
}

TEST_CASE("deterministic training reproduces the loss trace bitwise") {
    const ModelConfig cfg = tiny_config();
    const auto samples = family_samples(2.0, 0.3, 2, cfg.window_len);
    const auto [train_set, val_set] = split_dataset(samples, 0.2, 9);

    TrainPlan plan;
    plan.batch_size = 16;
    plan.max_epochs = 1;
    plan.shuffle_seed = 42;
    plan.lr = 1e-3;
    plan.deterministic = true;

    const TrainResult a = train(init_params(cfg, 11), train_set, val_set, plan);
    const TrainResult b = train(init_params(cfg, 11), train_set, val_set, plan);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].train_mse == b.trace[i].train_mse);
        CHECK(a.trace[i].val_mse == b.trace[i].val_mse);
    }
}

TEST_CASE("adam steps per epoch is ceil(N/batch)") {
    const ModelConfig cfg = tiny_config();
    const auto samples = family_samples(2.0, 0.3, 2, cfg.window_len);  // 2 * 36 windows
    REQUIRE(samples.size() == 72);
    const auto [train_set, val_set] = split_dataset(samples, 0.2, 9);
    REQUIRE(train_set.size() == 58);

    TrainPlan plan;
    plan.batch_size = 16;  // ceil(58/16) = 4
    plan.max_epochs = 3;
    plan.shuffle_seed = 1;
    plan.deterministic = true;
    const TrainResult result = train(init_params(cfg, 11), train_set, val_set, plan);
    CHECK(result.adam_steps == 12);
}

TEST_CASE("returned checkpoint has the minimum validation MSE of the trace") {
    const ModelConfig cfg = tiny_config();
    const auto samples = family_samples(2.0, 0.3, 3, cfg.window_len);
    const auto [train_set, val_set] = split_dataset(samples, 0.2, 5);

    TrainPlan plan;
    plan.batch_size = 32;
    plan.max_epochs = 8;
    plan.shuffle_seed = 3;
    plan.lr = 5e-3;
    plan.deterministic = true;
    const TrainResult result = train(init_params(cfg, 21), train_set, val_set, plan);
    double min_val = result.trace.front().val_mse;
    for (const EpochRecord& rec : result.trace) {
        min_val = std::min(min_val, rec.val_mse);
    }
    CHECK(result.best.best_val_mse == min_val);
    CHECK(result.best.best_val_mse <= result.trace.back().val_mse);
}

TEST_CASE("non-finite loss aborts with epoch and batch in the diagnostic") {
    const ModelConfig cfg = tiny_config();
    TransformerForecaster model = init_params(cfg, 2);
    model.at("out.b").data()[0] = std::numeric_limits<double>::infinity();
    const auto samples = family_samples(2.0, 0.3, 1, cfg.window_len);
    const auto [train_set, val_set] = split_dataset(samples, 0.2, 5);
    TrainPlan plan;
    plan.batch_size = 8;
    plan.max_epochs = 1;
    CHECK_THROWS_WITH_AS(train(std::move(model), train_set, val_set, plan),
                         doctest::Contains("epoch"), NumericError);
}

TEST_CASE("checkpoint save/load round trips bitwise and preserves predictions") {
    const auto dir = qdyn::test::make_temp_dir("qdyn_ckpt");
    const ModelConfig cfg = tiny_config();
    const auto samples = family_samples(2.2, 0.4, 2, cfg.window_len);
    const auto [train_set, val_set] = split_dataset(samples, 0.2, 7);

    TrainPlan plan;
    plan.batch_size = 32;
    plan.max_epochs = 2;
    plan.shuffle_seed = 13;
    plan.lr = 1e-3;
    plan.deterministic = true;
    plan.checkpoint_path = dir / "model.qtf";
    const TrainResult result = train(init_params(cfg, 33), train_set, val_set, plan);

    const Checkpoint loaded = load_checkpoint(plan.checkpoint_path);
    CHECK(loaded.cfg == result.best.cfg);
    CHECK(loaded.epoch == result.best.epoch);
    CHECK(loaded.best_val_mse == result.best.best_val_mse);
    REQUIRE(loaded.adam.has_value());
    CHECK(loaded.adam->step == result.best.adam->step);
    for (const auto& [name, tensor] : result.best.params) {
        const Tensor& other = loaded.params.at(name);
        REQUIRE(tensor.same_shape(other));
        for (int i = 0; i < tensor.size(); ++i) {
            CHECK(tensor.data()[i] == other.data()[i]);
        }
        const Tensor& m0 = result.best.adam->m.at(name);
        const Tensor& m1 = loaded.adam->m.at(name);
        for (int i = 0; i < m0.size(); ++i) {
            CHECK(m0.data()[i] == m1.data()[i]);
        }
    }

    // Reloaded model predicts bitwise identically.
    const TransformerForecaster original = result.best.to_model();
    const TransformerForecaster reloaded = loaded.to_model();
    for (const auto& s : val_set) {
        CHECK(forward(original, s.x, s.t) == forward(reloaded, s.x, s.t));
    }

    // Save again: byte-identical files.
    save_checkpoint(loaded, dir / "again.qtf");
    save_checkpoint(result.best, dir / "direct.qtf");
    std::ifstream f1(dir / "again.qtf", std::ios::binary);
    std::ifstream f2(dir / "direct.qtf", std::ios::binary);
    const std::string bytes1((std::istreambuf_iterator<char>(f1)),
                             std::istreambuf_iterator<char>());
    const std::string bytes2((std::istreambuf_iterator<char>(f2)),
                             std::istreambuf_iterator<char>());
    CHECK(bytes1 == bytes2);

    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto dir = qdyn::test::make_temp_dir("qdyn_ckpt_bad");
    {
        std::ofstream out(dir / "bad.qtf", std::ios::binary);
        out << "NOPE";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "bad.qtf"), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("warm start opens at the checkpoint's stored validation MSE") {
    const auto dir = qdyn::test::make_temp_dir("qdyn_warm");
    const ModelConfig cfg = tiny_config();
    const auto samples = family_samples(2.0, 0.5, 3, cfg.window_len);
    const auto [train_set, val_set] = split_dataset(samples, 0.2, 19);

    TrainPlan plan;
    plan.batch_size = 32;
    plan.max_epochs = 3;
    plan.shuffle_seed = 23;
    plan.lr = 1e-3;
    plan.deterministic = true;
    plan.checkpoint_path = dir / "warm.qtf";
    const TrainResult first = train(init_params(cfg, 44), train_set, val_set, plan);

    const Checkpoint checkpoint = load_checkpoint(plan.checkpoint_path);
    TrainPlan retrain_plan = plan;
    retrain_plan.max_epochs = 1;
    retrain_plan.checkpoint_path.clear();
    const TrainResult resumed =
        transfer_retrain(checkpoint, cfg, train_set, val_set, retrain_plan);
    CHECK(std::abs(resumed.trace.front().val_mse - checkpoint.best_val_mse) < 1e-12);
    CHECK(first.best.best_val_mse == checkpoint.best_val_mse);

    // Zero-epoch retrain returns the warm weights untouched.
    retrain_plan.max_epochs = 0;
    const TrainResult frozen =
        transfer_retrain(checkpoint, cfg, train_set, val_set, retrain_plan);
    for (const auto& [name, tensor] : checkpoint.params) {
        const Tensor& other = frozen.best.params.at(name);
        for (int i = 0; i < tensor.size(); ++i) {
            CHECK(tensor.data()[i] == other.data()[i]);
        }
    }
    CHECK(frozen.trace.empty());

    // Mismatched config is refused with both configs in the message.
    ModelConfig other_cfg = cfg;
    other_cfg.ffn_hidden = 16;
    CHECK_THROWS_WITH_AS(
        transfer_retrain(checkpoint, other_cfg, train_set, val_set, retrain_plan),
        doctest::Contains("does not match"), DataError);

    std::filesystem::remove_all(dir);
}

TEST_CASE("warm start reaches the target MSE no later than cold start") {
    // Family A: slow decay. Family B: same oscillator, stronger decay.
    const ModelConfig cfg = tiny_config();
    const double target = 2e-3;
    const int budget = 25;

    std::vector<int> cold_epochs;
    std::vector<int> warm_epochs;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto base = family_samples(2.0, 0.2, 3, cfg.window_len);
        const auto shifted = family_samples(2.0, 0.8, 3, cfg.window_len);
        const auto [train_a, val_a] = split_dataset(base, 0.2, seed);
        const auto [train_b, val_b] = split_dataset(shifted, 0.2, seed);

        TrainPlan plan;
        plan.batch_size = 32;
        plan.max_epochs = budget;
        plan.shuffle_seed = seed;
        plan.lr = 3e-3;
        plan.deterministic = true;

        auto epochs_to_target = [&](const TrainResult& result) {
            for (const EpochRecord& rec : result.trace) {
                if (rec.val_mse < target) {
                    return rec.epoch;
                }
            }
            return budget + 1;
        };

        TrainPlan pretrain = plan;
        pretrain.max_epochs = 40;
        const TrainResult on_a = train(init_params(cfg, seed), train_a, val_a, pretrain);
        const TrainResult warm = transfer_retrain(on_a.best, cfg, train_b, val_b, plan);
        const TrainResult cold = train(init_params(cfg, seed), train_b, val_b, plan);
        warm_epochs.push_back(epochs_to_target(warm));
        cold_epochs.push_back(epochs_to_target(cold));
    }
    std::sort(warm_epochs.begin(), warm_epochs.end());
    std::sort(cold_epochs.begin(), cold_epochs.end());
    CHECK(warm_epochs[2] <= cold_epochs[2]);  // medians
}
