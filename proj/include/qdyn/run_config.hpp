#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qdyn/dataset.hpp"
#include "qdyn/model.hpp"
#include "qdyn/surrogate.hpp"
#include "qdyn/trainer.hpp"

namespace qdyn {

// Flat key=value run configuration. Parsing is total: every key must be
// known and have exactly one value, otherwise the whole file is rejected.
struct RunConfig {
    ModelConfig model;
    int traj_points = 201;
    double val_fraction = 0.2;
    enum class SplitMode { BySample, ByTrajectory } split_mode = SplitMode::BySample;
    int batch_size = 128;
    int max_epochs = 100;
    std::uint64_t seed = 0;
    double lr = 1e-4;
    bool deterministic = false;
    int jobs = 1;

    // Surrogate generation.
    std::optional<double> gamma;
    std::optional<double> gamma_phi;
    double rate_jitter = 0.1;
    int substeps = 20;
    std::vector<double> grid_epsilon = {0.0, 1.0};
    std::vector<double> grid_lambda = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> grid_omega_c = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> grid_beta = {0.1, 0.25, 0.5, 0.75, 1.0};
    int holdout = 0;

    SlicerConfig slicer() const {
        return {traj_points, model.window_len + 1, model.dt};
    }
    SurrogateOptions surrogate_options() const {
        return {gamma, gamma_phi, rate_jitter, substeps};
    }
};

RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);

}  // namespace qdyn
