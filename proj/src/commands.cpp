#include "qdyn/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <thread>

#include "qdyn/checkpoint.hpp"

namespace qdyn {

namespace {

// Stable per-trajectory stream from the master seed, independent of worker
// scheduling.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void run_sharded(int jobs, size_t n, const std::function<void(size_t)>& work) {
    const size_t n_workers = std::min<size_t>(std::max(1, jobs), n);
    if (n_workers <= 1) {
        for (size_t i = 0; i < n; ++i) {
            work(i);
        }
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (size_t w = 0; w < n_workers; ++w) {
        workers.emplace_back([&, w] {
            for (size_t i = w; i < n; i += n_workers) {
                work(i);
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
}

std::string traj_filename(size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "traj_%04zu.txt", index);
    return buf;
}

}  // namespace

GenerateSummary cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir,
                             std::uint64_t seed) {
    std::vector<TrajectoryMeta> grid;
    for (double eps : config.grid_epsilon) {
        for (double lambda : config.grid_lambda) {
            for (double omega_c : config.grid_omega_c) {
                for (double beta : config.grid_beta) {
                    TrajectoryMeta meta;
                    meta.epsilon = eps;
                    meta.lambda = lambda;
                    meta.omega_c = omega_c;
                    meta.beta = beta;
                    grid.push_back(meta);
                }
            }
        }
    }
    if (grid.empty()) {
        throw DataError("generation grid is empty");
    }
    if (config.holdout < 0 || config.holdout >= static_cast<int>(grid.size())) {
        throw DataError("holdout count " + std::to_string(config.holdout) +
                        " must be smaller than the grid size " + std::to_string(grid.size()));
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir)) {
        throw DataError("cannot create output directory " + out_dir.string());
    }

    std::vector<Trajectory> trajectories(grid.size());
    const SurrogateOptions options = config.surrogate_options();
    run_sharded(config.jobs, grid.size(), [&](size_t i) {
        trajectories[i] = generate_surrogate(grid[i], config.model.dt, config.traj_points,
                                             mix_seed(seed, i), options);
    });

    // Hold-out selection mirrors the published protocol: full trajectories
    // set aside before any slicing ever sees them.
    std::vector<size_t> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    if (config.holdout > 0) {
        std::mt19937_64 rng(mix_seed(seed, grid.size()));
        std::shuffle(order.begin(), order.end(), rng);
    }
    const size_t n_holdout = static_cast<size_t>(config.holdout);
    std::vector<size_t> holdout_idx(order.begin(), order.begin() + n_holdout);
    std::vector<size_t> train_idx(order.begin() + n_holdout, order.end());
    std::sort(holdout_idx.begin(), holdout_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    auto write_set = [](const std::filesystem::path& dir, const std::vector<Trajectory>& all,
                        const std::vector<size_t>& indices) {
        std::filesystem::create_directories(dir);
        std::vector<std::string> names;
        names.reserve(indices.size());
        for (size_t seq = 0; seq < indices.size(); ++seq) {
            const std::string name = traj_filename(seq);
            save_trajectory(all[indices[seq]], dir / name);
            names.push_back(name);
        }
        write_manifest(dir, names);
    };

    write_set(out_dir, trajectories, train_idx);
    if (!holdout_idx.empty()) {
        write_set(out_dir / "holdout", trajectories, holdout_idx);
    }

    GenerateSummary summary{static_cast<int>(train_idx.size()),
                            static_cast<int>(holdout_idx.size())};
    std::cout << "wrote " << summary.written << " trajectories to " << out_dir.string();
    if (summary.held_out > 0) {
        std::cout << " and held out " << summary.held_out;
    }
    std::cout << "\n";
    return summary;
}

TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& data_dir,
                      const std::filesystem::path& out_checkpoint,
                      const TrainOverrides& overrides) {
    const std::vector<Trajectory> trajectories = load_dataset(data_dir);
    const SlicerConfig slicer = config.slicer();

    const std::uint64_t seed = overrides.seed.value_or(config.seed);
    std::vector<WindowedSample> train_set;
    std::vector<WindowedSample> val_set;
    if (config.split_mode == RunConfig::SplitMode::ByTrajectory) {
        auto [train_traj, val_traj] =
            split_indices(trajectories.size(), config.val_fraction, seed);
        for (size_t i : train_traj) {
            auto samples = window_slice(trajectories[i], slicer);
            train_set.insert(train_set.end(), samples.begin(), samples.end());
        }
        for (size_t i : val_traj) {
            auto samples = window_slice(trajectories[i], slicer);
            val_set.insert(val_set.end(), samples.begin(), samples.end());
        }
    } else {
        std::vector<WindowedSample> all;
        for (const Trajectory& traj : trajectories) {
            auto samples = window_slice(traj, slicer);
            all.insert(all.end(), samples.begin(), samples.end());
        }
        std::tie(train_set, val_set) = split_dataset(all, config.val_fraction, seed);
    }

    TrainPlan plan;
    plan.batch_size = config.batch_size;
    plan.max_epochs = overrides.epochs.value_or(config.max_epochs);
    plan.shuffle_seed = seed;
    plan.lr = config.lr;
    plan.deterministic = overrides.deterministic.value_or(config.deterministic);
    plan.jobs = overrides.jobs.value_or(config.jobs);
    plan.checkpoint_path = out_checkpoint;
    plan.log_path = overrides.log_path.empty()
                        ? std::filesystem::path(out_checkpoint.string() + ".log.csv")
                        : overrides.log_path;

    TrainResult result;
    if (!overrides.warm_start.empty()) {
        const Checkpoint warm = load_checkpoint(overrides.warm_start);
        result = transfer_retrain(warm, config.model, train_set, val_set, plan);
    } else {
        result = train(init_params(config.model, seed), train_set, val_set, plan);
    }
    std::cout << "trained " << plan.max_epochs << " epochs on " << train_set.size() << "/"
              << val_set.size() << " train/val samples; best val MSE "
              << format_double(result.best.best_val_mse) << " at epoch " << result.best.epoch
              << "\n";
    return result;
}

void cmd_predict(const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& input_path, int steps,
                 const std::filesystem::path& out_path) {
    if (steps < 1) {
        throw DataError("prediction needs at least 1 step");
    }
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const TransformerForecaster model = checkpoint.to_model();
    const Trajectory input = load_trajectory(input_path);
    const int window = model.cfg.window_len;
    if (input.points() < window) {
        throw DataError("input has " + std::to_string(input.points()) +
                        " points, fewer than the model window " + std::to_string(window));
    }
    if (std::abs(input.dt - model.cfg.dt) > 1e-12) {
        throw DataError("input dt " + format_double(input.dt) +
                        " does not match the model's dt " + format_double(model.cfg.dt));
    }

    const std::span<const double> seed_x(input.values.data(), static_cast<size_t>(window));
    const std::span<const double> seed_t(input.times.data(), static_cast<size_t>(window));
    const RolloutResult rolled = rollout(model, seed_x, seed_t, steps);

    Trajectory out;
    out.meta = input.meta;
    out.source = "prediction";
    out.dt = input.dt;
    out.times.assign(seed_t.begin(), seed_t.end());
    out.values.assign(seed_x.begin(), seed_x.end());
    out.times.insert(out.times.end(), rolled.predicted_times.begin(),
                     rolled.predicted_times.end());
    out.values.insert(out.values.end(), rolled.predicted.begin(), rolled.predicted.end());
    out.extra["seed_len"] = std::to_string(window);
    out.extra["model_checksum"] = to_hex(fnv1a64_file(checkpoint_path));
    save_trajectory(out, out_path);
    std::cout << "wrote " << out.points() << " points (seed " << window << " + predicted "
              << steps << ") to " << out_path.string() << "\n";
}

std::vector<TrajectoryEval> evaluate_trajectories(const Predictor& predict, int window_len,
                                                  double dt,
                                                  const std::vector<Trajectory>& references,
                                                  const std::vector<std::string>& names,
                                                  int jobs) {
    if (references.empty()) {
        throw DataError("no reference trajectories to evaluate");
    }
    if (names.size() != references.size()) {
        throw DataError("evaluate: name/reference count mismatch");
    }
    std::vector<TrajectoryEval> evals(references.size());
    run_sharded(jobs, references.size(), [&](size_t i) {
        const Trajectory& ref = references[i];
        if (ref.points() <= window_len) {
            throw DataError(names[i] + " has " + std::to_string(ref.points()) +
                            " points; need more than the window " +
                            std::to_string(window_len));
        }
        const int horizon = ref.points() - window_len;
        const std::span<const double> seed_x(ref.values.data(),
                                             static_cast<size_t>(window_len));
        const std::span<const double> seed_t(ref.times.data(), static_cast<size_t>(window_len));
        const std::span<const double> future(ref.values.data() + window_len,
                                             static_cast<size_t>(horizon));
        TrajectoryEval eval;
        eval.name = names[i];
        eval.result = rollout(predict, seed_x, seed_t, horizon, dt, future);
        eval.horizon_mae = eval.result.mae;
        // Over the whole trajectory the seed region contributes zero error.
        eval.full_mae = eval.result.mae * horizon / ref.points();
        evals[i] = std::move(eval);
    });
    return evals;
}

EvaluateSummary cmd_evaluate(const std::filesystem::path& checkpoint_path,
                             const std::filesystem::path& data_dir,
                             const std::filesystem::path& report_path,
                             const std::filesystem::path& plots_dir, int jobs) {
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const TransformerForecaster model = checkpoint.to_model();
    const std::vector<std::string> names = read_manifest(data_dir);
    std::vector<Trajectory> references;
    references.reserve(names.size());
    for (const std::string& name : names) {
        references.push_back(load_trajectory(data_dir / name));
    }

    const Predictor predict = [&model](std::span<const double> x, std::span<const double> t) {
        return forward(model, x, t);
    };
    const std::vector<TrajectoryEval> evals =
        evaluate_trajectories(predict, model.cfg.window_len, model.cfg.dt, references, names,
                              jobs);

    const std::filesystem::path plots =
        plots_dir.empty() ? report_path.parent_path() / "plots" : plots_dir;
    std::filesystem::create_directories(plots);
    for (size_t i = 0; i < evals.size(); ++i) {
        const Trajectory& ref = references[i];
        const TrajectoryEval& eval = evals[i];
        std::filesystem::path plot_path = plots / (std::filesystem::path(eval.name).stem().string() + "_plot.csv");
        std::ofstream out(plot_path);
        if (!out) {
            throw DataError("cannot write plot data " + plot_path.string());
        }
        out << "t,reference,prediction\n";
        const int window = model.cfg.window_len;
        for (int n = 0; n < ref.points(); ++n) {
            const double prediction =
                n < window ? ref.values[static_cast<size_t>(n)]
                           : eval.result.predicted[static_cast<size_t>(n - window)];
            out << format_double(ref.times[static_cast<size_t>(n)]) << ','
                << format_double(ref.values[static_cast<size_t>(n)]) << ','
                << format_double(prediction) << '\n';
        }
    }

    EvaluateSummary summary;
    summary.trajectories = static_cast<int>(evals.size());
    {
        std::ofstream report(report_path);
        if (!report) {
            throw DataError("cannot write report " + report_path.string());
        }
        report << "trajectory,horizon_mae,full_mae\n";
        for (const TrajectoryEval& eval : evals) {
            report << eval.name << ',' << format_double(eval.horizon_mae) << ','
                   << format_double(eval.full_mae) << '\n';
            summary.aggregate_horizon_mae += eval.horizon_mae;
            summary.aggregate_full_mae += eval.full_mae;
        }
        summary.aggregate_horizon_mae /= static_cast<double>(evals.size());
        summary.aggregate_full_mae /= static_cast<double>(evals.size());
        report << "aggregate," << format_double(summary.aggregate_horizon_mae) << ','
               << format_double(summary.aggregate_full_mae) << '\n';
    }
    std::cout << "evaluated " << summary.trajectories << " trajectories; aggregate horizon MAE "
              << format_double(summary.aggregate_horizon_mae) << "\n";
    return summary;
}

}  // namespace qdyn
