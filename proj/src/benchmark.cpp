#include "reso/benchmark.hpp"

#include <cstdio>
#include <fstream>

namespace reso {

BenchmarkTable BenchmarkTable::make(std::vector<std::string> models, std::vector<int> horizons) {
    BenchmarkTable t;
    t.models = std::move(models);
    t.horizons = std::move(horizons);
    t.cells.resize(t.models.size() * t.horizons.size());
    for (size_t m = 0; m < t.models.size(); ++m)
        for (size_t h = 0; h < t.horizons.size(); ++h) {
            auto& c = t.cells[m * t.horizons.size() + h];
            c.model = t.models[m];
            c.horizon = t.horizons[h];
        }
    return t;
}

BenchmarkCell& BenchmarkTable::cell(int model_idx, int horizon_idx) {
    return cells.at(static_cast<size_t>(model_idx) * horizons.size() + horizon_idx);
}

const BenchmarkCell& BenchmarkTable::cell(int model_idx, int horizon_idx) const {
    return cells.at(static_cast<size_t>(model_idx) * horizons.size() + horizon_idx);
}

ColumnMarks column_marks(const BenchmarkTable& t, int horizon_idx, Metric metric) {
    ColumnMarks marks;
    double best_v = 0, second_v = 0;
    for (int m = 0; m < static_cast<int>(t.models.size()); ++m) {
        const auto& c = t.cell(m, horizon_idx);
        if (!c.present) continue;
        const double v = metric == Metric::Mae ? c.mae : c.mse;
        if (marks.best < 0 || v < best_v) {
            marks.second = marks.best;
            second_v = best_v;
            marks.best = m;
            best_v = v;
        } else if (marks.second < 0 || v < second_v) {
            marks.second = m;
            second_v = v;
        }
    }
    return marks;
}

std::string render_table(const BenchmarkTable& t, Metric metric) {
    const int name_w = 12, cell_w = 12;
    std::string out = metric == Metric::Mae ? "MAE" : "MSE";
    out += "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-*s", name_w, "model");
    out += buf;
    for (int h : t.horizons) {
        const std::string head = "T=" + std::to_string(h);
        std::snprintf(buf, sizeof(buf), "%*s", cell_w, head.c_str());
        out += buf;
    }
    out += "\n";
    for (int m = 0; m < static_cast<int>(t.models.size()); ++m) {
        std::snprintf(buf, sizeof(buf), "%-*s", name_w, t.models[m].c_str());
        out += buf;
        for (int h = 0; h < static_cast<int>(t.horizons.size()); ++h) {
            const auto& c = t.cell(m, h);
            if (!c.present) {
                std::snprintf(buf, sizeof(buf), "%*s", cell_w, "--");
                out += buf;
                continue;
            }
            const auto marks = column_marks(t, h, metric);
            const char mark = m == marks.best ? '*' : (m == marks.second ? '+' : ' ');
            std::string val;
            std::snprintf(buf, sizeof(buf), "%.4f%c", metric == Metric::Mae ? c.mae : c.mse, mark);
            val = buf;
            std::snprintf(buf, sizeof(buf), "%*s", cell_w, val.c_str());
            out += buf;
        }
        out += "\n";
    }
    return out;
}

void write_benchmark_csv(const std::string& path, const BenchmarkTable& t) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write benchmark CSV: " + path);
    os << "model,horizon,mae,mse,epoch_seconds\n";
    char buf[160];
    for (const auto& c : t.cells) {
        if (!c.present) continue;
        std::snprintf(buf, sizeof(buf), "%s,%d,%.10g,%.10g,%.3f\n", c.model.c_str(), c.horizon,
                      c.mae, c.mse, c.epoch_seconds);
        os << buf;
    }
}

} // namespace reso
