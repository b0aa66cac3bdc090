#pragma once

#include <string>
#include <vector>

#include "reso/errors.hpp"

namespace reso {

enum class Metric { Mae, Mse };

struct BenchmarkCell {
    std::string model;
    int horizon = 0;
    bool present = false; // false = gap (missing checkpoint), rendered as --
    double mae = 0;
    double mse = 0;
    double epoch_seconds = 0;
};

// models x horizons result grid, row per model, column per horizon.
struct BenchmarkTable {
    std::vector<std::string> models;
    std::vector<int> horizons;
    std::vector<BenchmarkCell> cells; // row-major [model][horizon]

    static BenchmarkTable make(std::vector<std::string> models, std::vector<int> horizons);
    BenchmarkCell& cell(int model_idx, int horizon_idx);
    const BenchmarkCell& cell(int model_idx, int horizon_idx) const;
};

// Model indices of the strictly smallest and second-smallest metric in a
// column, considering present cells only; -1 when fewer cells exist.
struct ColumnMarks {
    int best = -1;
    int second = -1;
};
ColumnMarks column_marks(const BenchmarkTable& t, int horizon_idx, Metric metric);

// Aligned text table, one per metric: best cell marked '*', second-best '+',
// gaps rendered as '--'.
std::string render_table(const BenchmarkTable& t, Metric metric);

// CSV rows model,horizon,mae,mse,epoch_seconds; gaps are skipped.
void write_benchmark_csv(const std::string& path, const BenchmarkTable& t);

} // namespace reso
