#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qdyn/rollout.hpp"
#include "qdyn/run_config.hpp"

namespace qdyn {

// Batch entry points behind the CLI subcommands. Each is deterministic for
// a given seed; reruns produce byte-identical files apart from the timing
// column of training logs.

struct GenerateSummary {
    int written = 0;
    int held_out = 0;
};

// Surrogate trajectories over the config's parameter grid plus a manifest;
// config.holdout trajectories are moved to a 'holdout/' subdirectory with
// its own manifest.
GenerateSummary cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir,
                             std::uint64_t seed);

struct TrainOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<bool> deterministic;
    std::optional<int> jobs;
    std::filesystem::path warm_start;  // checkpoint to retrain from
    std::filesystem::path log_path;    // defaults next to the checkpoint
};

TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& data_dir,
                      const std::filesystem::path& out_checkpoint,
                      const TrainOverrides& overrides = {});

// Seeds with the first T points of the input and writes seed + rollout as
// a trajectory file with source=prediction.
void cmd_predict(const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& input_path, int steps,
                 const std::filesystem::path& out_path);

struct TrajectoryEval {
    std::string name;
    double horizon_mae = 0.0;
    double full_mae = 0.0;
    RolloutResult result;
};

// Rollout-vs-reference scores for full trajectories: seed on the first
// window_len points, predict to the end. Exposed with a generic predictor
// so the loop can be tested against lookup stubs.
std::vector<TrajectoryEval> evaluate_trajectories(const Predictor& predict, int window_len,
                                                  double dt,
                                                  const std::vector<Trajectory>& references,
                                                  const std::vector<std::string>& names,
                                                  int jobs = 1);

struct EvaluateSummary {
    int trajectories = 0;
    double aggregate_horizon_mae = 0.0;
    double aggregate_full_mae = 0.0;
};

// CSV report (per-trajectory rows plus one aggregate row) and per-trajectory
// (t, reference, prediction) plot CSVs.
EvaluateSummary cmd_evaluate(const std::filesystem::path& checkpoint_path,
                             const std::filesystem::path& data_dir,
                             const std::filesystem::path& report_path,
                             const std::filesystem::path& plots_dir = {}, int jobs = 1);

}  // namespace qdyn
