#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "qdyn/trajectory.hpp"

namespace qdyn {

// One supervised example: T input values with their times, and the value
// one grid step past the window end as the label.
struct WindowedSample {
    std::vector<double> x;
    std::vector<double> t;
    double y = 0.0;
};

// Window slicing layout. The slice length P covers the input window plus
// its label, so the input length is always T = P - 1.
struct SlicerConfig {
    int traj_points = 201;  // L_pts
    int slice_len = 42;     // P
    double dt = 0.1;

    int window_len() const { return slice_len - 1; }  // T
    int samples_per_trajectory() const { return traj_points - slice_len + 1; }
    void validate() const;
};

// Emits traj_points - P + 1 overlapping samples; sample i takes values and
// times [i, i+T) and labels with the value at index i+T.
std::vector<WindowedSample> window_slice(const Trajectory& traj, const SlicerConfig& cfg);

// Seeded random index partition: ceil(n*(1-val_fraction)) train, rest val.
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n,
                                                                  double val_fraction,
                                                                  std::uint64_t seed);

std::pair<std::vector<WindowedSample>, std::vector<WindowedSample>> split_dataset(
    const std::vector<WindowedSample>& samples, double val_fraction, std::uint64_t seed);

// Dataset directory access. The manifest lists one '<checksum>  <relpath>'
// line per trajectory file.
void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& relative_paths);
std::vector<std::string> read_manifest(const std::filesystem::path& dir,
                                       bool verify_checksums = true);
std::vector<Trajectory> load_dataset(const std::filesystem::path& dir,
                                     bool verify_checksums = true);

}  // namespace qdyn
