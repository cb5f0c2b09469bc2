#include "qdyn/cli.hpp"

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "qdyn/commands.hpp"

namespace qdyn {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Seed precedence: --seed flag, then config file, then QDYN_SEED.
std::optional<std::uint64_t> env_seed() {
    const char* env = std::getenv("QDYN_SEED");
    if (env == nullptr || *env == '\0') {
        return std::nullopt;
    }
    try {
        return std::stoull(env);
    } catch (const std::exception&) {
        throw DataError(std::string("QDYN_SEED is not a non-negative integer: '") + env + "'");
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Transformer forecaster for spin-boson population dynamics"};
    app.require_subcommand(1);

    std::string config_path;
    std::string data_dir;
    std::string out_path;
    std::string checkpoint_path;
    std::string input_path;
    std::string report_path;
    std::string plots_dir;
    std::string warm_start;
    std::string log_path;
    std::uint64_t seed_flag = 0;
    int epochs_flag = 0;
    int steps = 0;
    int jobs_flag = 0;
    bool deterministic_flag = false;

    CLI::App* generate = app.add_subcommand("generate", "Write a surrogate trajectory dataset");
    generate->add_option("--config", config_path, "Run configuration file")->required();
    generate->add_option("--out", out_path, "Output dataset directory")->required();
    CLI::Option* gen_seed = generate->add_option("--seed", seed_flag, "Master seed");
    CLI::Option* gen_jobs = generate->add_option("--jobs", jobs_flag, "Worker threads");

    CLI::App* train = app.add_subcommand("train", "Train from a dataset directory");
    train->add_option("--config", config_path, "Run configuration file")->required();
    train->add_option("--data", data_dir, "Dataset directory with manifest")->required();
    train->add_option("--out", out_path, "Checkpoint output path")->required();
    CLI::Option* train_seed = train->add_option("--seed", seed_flag, "Shuffle/init seed");
    CLI::Option* train_epochs = train->add_option("--epochs", epochs_flag, "Epoch budget");
    CLI::Option* train_det =
        train->add_flag("--deterministic", deterministic_flag, "Single-shard reproducible run");
    CLI::Option* train_jobs = train->add_option("--jobs", jobs_flag, "Worker threads");
    train->add_option("--warm-start", warm_start, "Checkpoint to retrain from");
    train->add_option("--log", log_path, "Training log CSV (default <out>.log.csv)");

    CLI::App* predict = app.add_subcommand("predict", "Roll out a trajectory from a seed window");
    predict->add_option("--checkpoint", checkpoint_path, "Trained checkpoint")->required();
    predict->add_option("--input", input_path, "Input trajectory file")->required();
    predict->add_option("--steps", steps, "Number of steps to predict")->required();
    predict->add_option("--out", out_path, "Prediction output file")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score rollouts against references");
    evaluate->add_option("--checkpoint", checkpoint_path, "Trained checkpoint")->required();
    evaluate->add_option("--data", data_dir, "Reference dataset directory")->required();
    evaluate->add_option("--report", report_path, "Report CSV path")->required();
    evaluate->add_option("--plots", plots_dir, "Plot-data directory (default: plots/)");
    CLI::Option* eval_jobs = evaluate->add_option("--jobs", jobs_flag, "Worker threads");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (generate->parsed()) {
            RunConfig config = parse_run_config(config_path);
            if (*gen_jobs) {
                config.jobs = jobs_flag;
            }
            const std::uint64_t seed =
                *gen_seed ? seed_flag : (config.seed != 0 ? config.seed : env_seed().value_or(0));
            cmd_generate(config, out_path, seed);
        } else if (train->parsed()) {
            RunConfig config = parse_run_config(config_path);
            TrainOverrides overrides;
            if (*train_seed) {
                overrides.seed = seed_flag;
            } else if (config.seed == 0) {
                overrides.seed = env_seed();
            }
            if (*train_epochs) {
                overrides.epochs = epochs_flag;
            }
            if (*train_det) {
                overrides.deterministic = true;
            }
            if (*train_jobs) {
                overrides.jobs = jobs_flag;
            }
            overrides.warm_start = warm_start;
            overrides.log_path = log_path;
            cmd_train(config, data_dir, out_path, overrides);
        } else if (predict->parsed()) {
            cmd_predict(checkpoint_path, input_path, steps, out_path);
        } else if (evaluate->parsed()) {
            cmd_evaluate(checkpoint_path, data_dir, report_path, plots_dir,
                         *eval_jobs ? jobs_flag : 1);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ShapeError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

}  // namespace qdyn
