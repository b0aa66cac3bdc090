#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reso/config.hpp"
#include "reso/sim.hpp"

namespace reso {

// Cross-product grid of variable simulation parameters; one series per cell.
struct Grid {
    std::vector<double> stiffness;
    std::vector<double> brake_time;
    std::vector<double> mu;
    std::vector<MotorPosition> position;

    long size() const {
        return static_cast<long>(stiffness.size()) * static_cast<long>(brake_time.size()) *
               static_cast<long>(mu.size()) * static_cast<long>(position.size());
    }
};

// Full parameter grids from the published experiment design.
Grid paper_train_grid();
Grid paper_test_grid();
// Small grids sized for a single-core run.
Grid desk_train_grid();
Grid desk_test_grid();

struct DatasetSpec {
    Grid train;
    Grid test;
    SimConfig sim;
    std::uint64_t seed = 0;
};

struct ManifestEntry {
    std::string series_id;
    std::string file; // relative to the dataset directory
    SimParams params;
    int samples = 0;
};

struct Manifest {
    int version = 1;
    std::uint64_t seed = 0;
    double sample_rate = 0.0;
    double duration = 0.0;
    std::vector<ManifestEntry> train;
    std::vector<ManifestEntry> test;
};

// Simulates every grid cell and writes one CSV per series (header
// t,mg_rpm,ds_torque) plus manifest.json under out_dir. Train and test
// stiffness sets must be disjoint.
Manifest generate_dataset(const DatasetSpec& spec, const std::string& out_dir);

Manifest load_manifest(const std::string& dir);
SeriesRecord load_series(const std::string& dir, const ManifestEntry& entry, double sample_rate);

// Supervised pair: y starts exactly where x ends in the source series.
struct WindowPair {
    std::vector<float> x; // length L of mg_rpm
    std::vector<float> y; // length T of ds_torque
    std::string series_id;
    int offset = 0;
};

// Pairs at offsets 0, stride, ...; count = floor((len-L-T)/stride)+1, or
// empty when the series is shorter than L+T.
std::vector<WindowPair> window_pairs(const SeriesRecord& s, int L, int T, int stride);

// Per-channel z-score statistics over the training split only.
NormStats fit_normalize(const std::vector<SeriesRecord>& train);
SeriesRecord apply_normalize(const SeriesRecord& s, const NormStats& stats);
SeriesRecord apply_denormalize(const SeriesRecord& s, const NormStats& stats);

} // namespace reso
