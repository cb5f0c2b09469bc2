#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qdyn/model.hpp"

namespace qdyn {

// Any single-step forecaster: window values and times in, next value out.
// Lets the rollout loop be exercised with lookup stubs independent of the
// network.
using Predictor = std::function<double(std::span<const double>, std::span<const double>)>;

struct RolloutResult {
    std::vector<double> seed_x;
    std::vector<double> seed_t;
    std::vector<double> predicted;
    std::vector<double> predicted_times;
    // Filled only when a reference is supplied to evaluate against.
    std::vector<double> abs_error;
    double mae = 0.0;
};

// One forward pass: the value at the grid point right after the window.
double predict_next(const TransformerForecaster& model, std::span<const double> x,
                    std::span<const double> t);

// Autoregressive extension: repeatedly drop the oldest point, append the
// newest prediction, and advance the window one grid step. Emitted times
// are computed as index*dt from the trajectory origin, not by repeated
// addition, so the grid does not drift over long horizons.
RolloutResult rollout(const Predictor& predict, std::span<const double> seed_x,
                      std::span<const double> seed_t, int horizon, double dt,
                      std::span<const double> reference = {});

RolloutResult rollout(const TransformerForecaster& model, std::span<const double> seed_x,
                      std::span<const double> seed_t, int horizon,
                      std::span<const double> reference = {});

double mae(std::span<const double> predicted, std::span<const double> reference);

}  // namespace qdyn
