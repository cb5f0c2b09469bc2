#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "test_util.hpp"

#include "qdyn/dataset.hpp"
#include "qdyn/surrogate.hpp"

using namespace qdyn;

namespace {

Trajectory synthetic_trajectory(int points, double dt = 0.1) {
    Trajectory traj;
    traj.meta.epsilon = 0.0;
    traj.meta.lambda = 0.1;
    traj.meta.omega_c = 1.0;
    traj.meta.beta = 1.0;
    traj.source = "external";
    traj.dt = dt;
    for (int n = 0; n < points; ++n) {
        traj.times.push_back(n * dt);
        traj.values.push_back(std::cos(0.03 * n));
    }
    return traj;
}

}  // namespace

TEST_CASE("paper slicing: 201 points with P=42 yield 160 windows of 41") {
    const Trajectory traj = synthetic_trajectory(201);
    const SlicerConfig cfg{201, 42, 0.1};
    CHECK(cfg.window_len() == 41);
    const auto samples = window_slice(traj, cfg);
    REQUIRE(samples.size() == 160);
    for (const auto& s : samples) {
        CHECK(s.x.size() == 41);
        CHECK(s.t.size() == 41);
        // 41 points span exactly 4.0 time units.
        CHECK(s.t.back() - s.t.front() == doctest::Approx(4.0).epsilon(1e-12));
    }
    // Label sits one grid step past the window end.
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].y == traj.values[i + 41]);
        const double label_time = traj.times[i + 41];
        CHECK(label_time - samples[i].t.back() == doctest::Approx(0.1).epsilon(1e-12));
    }
}

TEST_CASE("slice boundary cases") {
    const Trajectory tiny = synthetic_trajectory(4);
    const auto samples = window_slice(tiny, {4, 4, 0.1});
    REQUIRE(samples.size() == 1);  // L == P
    CHECK(samples[0].x.size() == 3);

    Trajectory enumerated = synthetic_trajectory(4);
    enumerated.values = {0.1, 0.2, 0.3, 0.4};
    const auto pairs = window_slice(enumerated, {4, 2, 0.1});
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].x == std::vector<double>{0.1});
    CHECK(pairs[0].y == 0.2);
    CHECK(pairs[1].x == std::vector<double>{0.2});
    CHECK(pairs[1].y == 0.3);
    CHECK(pairs[2].x == std::vector<double>{0.3});
    CHECK(pairs[2].y == 0.4);

    CHECK_THROWS_AS(window_slice(synthetic_trajectory(10), {11, 12, 0.1}), DataError);
}

TEST_CASE("slices cover every label index exactly once") {
    const Trajectory traj = synthetic_trajectory(60);
    const SlicerConfig cfg{60, 12, 0.1};
    const auto samples = window_slice(traj, cfg);
    std::set<double> labels;
    for (const auto& s : samples) {
        labels.insert(s.y);
    }
    // Labels are values at indices P..L_pts (1-based), i.e. 11..59 0-based.
    CHECK(samples.size() == 49);
    for (size_t i = 11; i < 60; ++i) {
        CHECK(labels.count(traj.values[i]) == 1);
    }
}

TEST_CASE("values pass through slicing byte-identically (no normalization)") {
    const Trajectory traj = synthetic_trajectory(30);
    const auto samples = window_slice(traj, {30, 6, 0.1});
    for (size_t i = 0; i < samples.size(); ++i) {
        for (size_t j = 0; j < samples[i].x.size(); ++j) {
            // Bitwise equality, not approximate.
            CHECK(samples[i].x[j] == traj.values[i + j]);
            CHECK(samples[i].t[j] == traj.times[i + j]);
        }
    }
}

TEST_CASE("split sizes follow ceil(N(1-f))") {
    const auto [train_small, val_small] = split_indices(10, 0.2, 5);
    CHECK(train_small.size() == 8);
    CHECK(val_small.size() == 2);

    const auto [train_paper, val_paper] = split_indices(144'000, 0.2, 5);
    CHECK(train_paper.size() == 115'200);
    CHECK(val_paper.size() == 28'800);
}

TEST_CASE("900 paper-grid trajectories slice into 144,000 samples") {
    const SlicerConfig cfg{201, 42, 0.1};
    CHECK(900 * cfg.samples_per_trajectory() == 144'000);
}

TEST_CASE("split is deterministic and a true partition") {
    const auto [train_a, val_a] = split_indices(100, 0.2, 77);
    const auto [train_b, val_b] = split_indices(100, 0.2, 77);
    CHECK(train_a == train_b);
    CHECK(val_a == val_b);

    std::set<size_t> seen(train_a.begin(), train_a.end());
    seen.insert(val_a.begin(), val_a.end());
    CHECK(seen.size() == 100);

    const auto [train_c, val_c] = split_indices(100, 0.2, 78);
    CHECK(train_a != train_c);

    CHECK_THROWS_AS(split_indices(0, 0.2, 1), DataError);
    CHECK_THROWS_AS(split_indices(10, 0.0, 1), DataError);
}

TEST_CASE("split_dataset moves whole samples") {
    const Trajectory traj = synthetic_trajectory(20);
    const auto samples = window_slice(traj, {20, 5, 0.1});
    const auto [train, val] = split_dataset(samples, 0.25, 3);
    CHECK(train.size() == 12);
    CHECK(val.size() == 4);
}

TEST_CASE("manifest round trip verifies checksums") {
    const auto dir = qdyn::test::make_temp_dir("qdyn_manifest");

    std::vector<std::string> names;
    for (int i = 0; i < 3; ++i) {
        TrajectoryMeta meta;
        meta.epsilon = 0.0;
        meta.lambda = 0.1 * (i + 1);
        meta.omega_c = 2.0;
        meta.beta = 1.0;
        const std::string name = "traj_" + std::to_string(i) + ".txt";
        save_trajectory(generate_surrogate(meta, 0.1, 21, i), dir / name);
        names.push_back(name);
    }
    write_manifest(dir, names);

    const auto listed = read_manifest(dir);
    CHECK(listed == names);
    const auto loaded = load_dataset(dir);
    CHECK(loaded.size() == 3);

    // Corrupting one file must surface as a checksum error.
    {
        std::ofstream out(dir / names[1], std::ios::app);
        out << "2.1,0.5\n";
    }
    CHECK_THROWS_WITH_AS(read_manifest(dir), doctest::Contains("checksum"), DataError);

    std::filesystem::remove_all(dir);
}
