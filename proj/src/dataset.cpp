#include "qdyn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace qdyn {

void SlicerConfig::validate() const {
    if (slice_len < 2) {
        throw DataError("slice length must be at least 2 (one input point plus the label)");
    }
    if (traj_points < slice_len) {
        throw DataError("trajectory has " + std::to_string(traj_points) +
                        " points, shorter than slice length " + std::to_string(slice_len));
    }
    if (!(dt > 0.0)) {
        throw DataError("slicer dt must be positive");
    }
}

std::vector<WindowedSample> window_slice(const Trajectory& traj, const SlicerConfig& cfg) {
    cfg.validate();
    if (traj.points() != cfg.traj_points) {
        throw DataError("trajectory has " + std::to_string(traj.points()) +
                        " points but the slicer expects " + std::to_string(cfg.traj_points));
    }
    const int window = cfg.window_len();
    std::vector<WindowedSample> samples;
    samples.reserve(static_cast<size_t>(cfg.samples_per_trajectory()));
    for (int i = 0; i + cfg.slice_len <= cfg.traj_points; ++i) {
        WindowedSample s;
        s.x.assign(traj.values.begin() + i, traj.values.begin() + i + window);
        s.t.assign(traj.times.begin() + i, traj.times.begin() + i + window);
        s.y = traj.values[static_cast<size_t>(i + window)];
        samples.push_back(std::move(s));
    }
    return samples;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, double val_fraction,
                                                                  std::uint64_t seed) {
    if (n == 0) {
        throw DataError("cannot split an empty dataset");
    }
    if (!(val_fraction > 0.0) || !(val_fraction < 1.0)) {
        throw DataError("validation fraction must lie strictly between 0 and 1");
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const size_t n_train =
        static_cast<size_t>(std::ceil(static_cast<double>(n) * (1.0 - val_fraction)));
    std::vector<size_t> train(order.begin(), order.begin() + n_train);
    std::vector<size_t> val(order.begin() + n_train, order.end());
    return {std::move(train), std::move(val)};
}

std::pair<std::vector<WindowedSample>, std::vector<WindowedSample>> split_dataset(
    const std::vector<WindowedSample>& samples, double val_fraction, std::uint64_t seed) {
    auto [train_idx, val_idx] = split_indices(samples.size(), val_fraction, seed);
    std::vector<WindowedSample> train;
    std::vector<WindowedSample> val;
    train.reserve(train_idx.size());
    val.reserve(val_idx.size());
    for (size_t i : train_idx) {
        train.push_back(samples[i]);
    }
    for (size_t i : val_idx) {
        val.push_back(samples[i]);
    }
    return {std::move(train), std::move(val)};
}

void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& relative_paths) {
    const std::filesystem::path tmp = dir / "manifest.txt.tmp";
    {
        std::ofstream out(tmp);
        if (!out) {
            throw DataError("cannot write manifest in " + dir.string());
        }
        for (const std::string& rel : relative_paths) {
            out << to_hex(fnv1a64_file(dir / rel)) << "  " << rel << "\n";
        }
        if (!out.good()) {
            throw DataError("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, dir / "manifest.txt");
}

std::vector<std::string> read_manifest(const std::filesystem::path& dir,
                                       bool verify_checksums) {
    const std::filesystem::path manifest = dir / "manifest.txt";
    std::ifstream in(manifest);
    if (!in) {
        throw DataError("cannot open manifest " + manifest.string());
    }
    std::vector<std::string> paths;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto sep = line.find("  ");
        if (sep == std::string::npos) {
            throw DataError(manifest.string() + " line " + std::to_string(line_no) +
                            ": expected '<checksum>  <path>'");
        }
        const std::string checksum = line.substr(0, sep);
        const std::string rel = line.substr(sep + 2);
        if (verify_checksums) {
            const std::string actual = to_hex(fnv1a64_file(dir / rel));
            if (actual != checksum) {
                throw DataError(rel + ": checksum mismatch (manifest " + checksum +
                                ", file " + actual + ")");
            }
        }
        paths.push_back(rel);
    }
    if (paths.empty()) {
        throw DataError(manifest.string() + " lists no trajectories");
    }
    return paths;
}

std::vector<Trajectory> load_dataset(const std::filesystem::path& dir, bool verify_checksums) {
    std::vector<Trajectory> trajectories;
    for (const std::string& rel : read_manifest(dir, verify_checksums)) {
        trajectories.push_back(load_trajectory(dir / rel));
    }
    return trajectories;
}

}  // namespace qdyn
