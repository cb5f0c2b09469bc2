#include "qdyn/rollout.hpp"

#include <cmath>
#include <iostream>

#include "qdyn/trajectory.hpp"

namespace qdyn {

double predict_next(const TransformerForecaster& model, std::span<const double> x,
                    std::span<const double> t) {
    return forward(model, x, t);
}

RolloutResult rollout(const Predictor& predict, std::span<const double> seed_x,
                      std::span<const double> seed_t, int horizon, double dt,
                      std::span<const double> reference) {
    if (seed_x.size() != seed_t.size() || seed_x.empty()) {
        throw ShapeError("rollout seed values/times must be equal-length and non-empty");
    }
    if (horizon < 1) {
        throw ShapeError("rollout horizon must be at least 1");
    }
    if (!(dt > 0.0)) {
        throw ShapeError("rollout dt must be positive");
    }
    if (!reference.empty() && reference.size() != static_cast<size_t>(horizon)) {
        throw ShapeError("rollout reference length " + std::to_string(reference.size()) +
                         " does not match horizon " + std::to_string(horizon));
    }

    const int window = static_cast<int>(seed_x.size());
    // Anchor on the seed's grid index so emitted times are exact multiples.
    const std::int64_t origin = std::llround(seed_t.front() / dt);

    RolloutResult result;
    result.seed_x.assign(seed_x.begin(), seed_x.end());
    result.seed_t.assign(seed_t.begin(), seed_t.end());
    result.predicted.reserve(static_cast<size_t>(horizon));
    result.predicted_times.reserve(static_cast<size_t>(horizon));

    std::vector<double> x(seed_x.begin(), seed_x.end());
    std::vector<double> t(seed_t.begin(), seed_t.end());
    bool warned = false;
    for (int step = 1; step <= horizon; ++step) {
        const double y = predict(x, t);
        if (!std::isfinite(y)) {
            throw NumericError("rollout diverged: non-finite prediction at step " +
                               std::to_string(step));
        }
        if (!warned && std::abs(y) > 1.05) {
            std::cerr << "warning: rollout prediction |" << format_double(y)
                      << "| > 1.05 at step " << step << "\n";
            warned = true;
        }
        const double t_next = static_cast<double>(origin + window - 1 + step) * dt;
        result.predicted.push_back(y);
        result.predicted_times.push_back(t_next);
        x.erase(x.begin());
        x.push_back(y);
        t.erase(t.begin());
        t.push_back(t_next);
    }

    if (!reference.empty()) {
        result.abs_error.reserve(reference.size());
        for (size_t i = 0; i < reference.size(); ++i) {
            result.abs_error.push_back(std::abs(result.predicted[i] - reference[i]));
        }
        result.mae = mae(result.predicted, reference);
    }
    return result;
}

RolloutResult rollout(const TransformerForecaster& model, std::span<const double> seed_x,
                      std::span<const double> seed_t, int horizon,
                      std::span<const double> reference) {
    if (static_cast<int>(seed_x.size()) != model.cfg.window_len) {
        throw ShapeError("rollout seed length " + std::to_string(seed_x.size()) +
                         " does not match model window " +
                         std::to_string(model.cfg.window_len));
    }
    Predictor predict = [&model](std::span<const double> x, std::span<const double> t) {
        return forward(model, x, t);
    };
    return rollout(predict, seed_x, seed_t, horizon, model.cfg.dt, reference);
}

double mae(std::span<const double> predicted, std::span<const double> reference) {
    if (predicted.size() != reference.size()) {
        throw ShapeError("mae length mismatch: " + std::to_string(predicted.size()) + " vs " +
                         std::to_string(reference.size()));
    }
    if (predicted.empty()) {
        throw ShapeError("mae needs at least one element");
    }
    double acc = 0.0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        acc += std::abs(predicted[i] - reference[i]);
    }
    return acc / static_cast<double>(predicted.size());
}

}  // namespace qdyn
