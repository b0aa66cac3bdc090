#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "reso/baselines.hpp"
#include "reso/benchmark.hpp"
#include "reso/run_config.hpp"
#include "reso/svg.hpp"
#include "reso/train.hpp"

namespace fs = std::filesystem;
using namespace reso;

namespace {

struct Flags {
    std::string config;
    std::string preset;
    std::string model;
    int horizon = 0;
    std::int64_t seed = -1;
    std::string out;
    bool force = false;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--preset", f.preset, "preset: desk or paper");
    cmd->add_option("--model", f.model, "model kind: zero, lstm, tcn, resoformer");
    cmd->add_option("--horizon", f.horizon, "forecast horizon T");
    cmd->add_option("--seed", f.seed, "run seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_flag("--force", f.force, "overwrite existing output");
}

RunConfig resolve_config(const Flags& f) {
    RunConfig cfg = preset_config(f.preset.empty() ? "desk" : f.preset);
    if (!f.config.empty()) {
        std::ifstream is(f.config);
        if (!is) throw ConfigError("cannot open config file: " + f.config);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file " + f.config + " is not valid JSON: " + e.what());
        }
        if (!f.preset.empty()) j.erase("preset"); // flag overrides the file
        apply_config_json(cfg, j);
    }
    if (!f.model.empty()) cfg.model = f.model;
    if (f.horizon > 0) cfg.model_cfg.horizon = f.horizon;
    if (f.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(f.seed);
        cfg.train_cfg.seed = cfg.seed;
    }
    if (!f.out.empty()) cfg.out_dir = f.out;
    cfg.validate();
    std::cout << "resolved config:\n" << run_config_json(cfg).dump(2) << "\n";
    return cfg;
}

void write_run_json(const fs::path& dir, const RunConfig& cfg) {
    fs::create_directories(dir);
    std::ofstream os(dir / "run.json");
    os << run_config_json(cfg).dump(2) << '\n';
}

std::string checkpoint_name(const std::string& model, int horizon) {
    return model + "_T" + std::to_string(horizon) + ".ckpt";
}

std::string history_name(const std::string& model, int horizon) {
    return model + "_T" + std::to_string(horizon) + "_history.csv";
}

std::vector<WindowPair> split_windows(const Manifest& m, const std::vector<ManifestEntry>& entries,
                                      const std::string& dir, const NormStats& norm, int L, int T,
                                      int stride) {
    std::vector<WindowPair> out;
    for (const auto& e : entries) {
        auto s = apply_normalize(load_series(dir, e, m.sample_rate), norm);
        auto pairs = window_pairs(s, L, T, stride);
        out.insert(out.end(), pairs.begin(), pairs.end());
    }
    return out;
}

NormStats train_norm_stats(const Manifest& m, const std::string& dir) {
    std::vector<SeriesRecord> train;
    for (const auto& e : m.train) train.push_back(load_series(dir, e, m.sample_rate));
    return fit_normalize(train);
}

int cmd_generate(const Flags& f) {
    RunConfig cfg = resolve_config(f);
    const std::string dir = f.out.empty() ? cfg.data_dir : f.out;
    if (fs::exists(dir) && !fs::is_empty(dir) && !f.force)
        throw ConfigError("output directory " + dir + " is not empty (use --force)");
    auto manifest = generate_dataset(dataset_spec(cfg), dir);
    write_run_json(dir, cfg);
    std::cout << "wrote " << manifest.train.size() << " train / " << manifest.test.size()
              << " test series\n"
              << "manifest: " << (fs::path(dir) / "manifest.json").string() << "\n";
    return 0;
}

int cmd_train(const Flags& f) {
    RunConfig cfg = resolve_config(f);
    auto manifest = load_manifest(cfg.data_dir);
    auto norm = train_norm_stats(manifest, cfg.data_dir);
    auto windows = split_windows(manifest, manifest.train, cfg.data_dir, norm,
                                 cfg.model_cfg.input_len, cfg.model_cfg.horizon, cfg.stride);
    std::cout << "training " << cfg.model << " on " << windows.size() << " windows (T="
              << cfg.model_cfg.horizon << ")\n";

    Rng rng(cfg.seed);
    auto model = make_model<float>(cfg.model, cfg.model_cfg, rng);
    auto result = train_model(*model, windows, cfg.train_cfg, norm);

    fs::create_directories(cfg.out_dir);
    const fs::path ckpt = fs::path(cfg.out_dir) / checkpoint_name(cfg.model, cfg.model_cfg.horizon);
    checkpoint_save(ckpt.string(), result.checkpoint);
    write_history_csv(
        (fs::path(cfg.out_dir) / history_name(cfg.model, cfg.model_cfg.horizon)).string(),
        result.history);
    write_run_json(cfg.out_dir, cfg);

    if (result.diverged) {
        std::cerr << "training diverged; kept last good checkpoint at " << ckpt.string() << "\n";
        return 1;
    }
    if (!result.history.empty())
        std::cout << "final loss " << result.history.back().loss << " after "
                  << result.history.size() << " epochs\n";
    std::cout << "checkpoint: " << ckpt.string() << "\n";
    return 0;
}

double mean_epoch_seconds(const fs::path& history_path) {
    std::ifstream is(history_path);
    if (!is) return 0.0;
    std::string line;
    std::getline(is, line); // header
    double sum = 0;
    int n = 0;
    while (std::getline(is, line)) {
        int epoch;
        double loss, lr, secs;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &epoch, &loss, &lr, &secs) == 4) {
            sum += secs;
            ++n;
        }
    }
    return n ? sum / n : 0.0;
}

int cmd_benchmark(const Flags& f) {
    RunConfig cfg = resolve_config(f);
    auto manifest = load_manifest(cfg.data_dir);
    auto norm = train_norm_stats(manifest, cfg.data_dir);

    const std::vector<std::string> models = {"zero", "lstm", "tcn", "resoformer"};
    auto table = BenchmarkTable::make(models, cfg.horizons);
    bool gaps = false;
    for (size_t h = 0; h < cfg.horizons.size(); ++h) {
        const int T = cfg.horizons[h];
        auto windows = split_windows(manifest, manifest.test, cfg.data_dir, norm,
                                     cfg.model_cfg.input_len, T, cfg.stride);
        for (size_t m = 0; m < models.size(); ++m) {
            auto& cell = table.cell(static_cast<int>(m), static_cast<int>(h));
            std::unique_ptr<Forecaster<float>> model;
            if (models[m] == "zero") {
                ModelConfig mc = cfg.model_cfg;
                mc.horizon = T;
                Rng rng(cfg.seed);
                model = make_model<float>("zero", mc, rng);
            } else {
                const fs::path ckpt = fs::path(cfg.out_dir) / checkpoint_name(models[m], T);
                if (!fs::exists(ckpt)) {
                    std::cerr << "missing checkpoint " << ckpt.string() << "; leaving gap\n";
                    gaps = true;
                    continue;
                }
                model = model_from_checkpoint(checkpoint_load(ckpt.string()));
            }
            auto r = evaluate_model(*model, windows);
            cell.present = true;
            cell.mae = r.mae;
            cell.mse = r.mse;
            cell.epoch_seconds =
                mean_epoch_seconds(fs::path(cfg.out_dir) / history_name(models[m], T));
        }
    }

    fs::create_directories(cfg.out_dir);
    write_benchmark_csv((fs::path(cfg.out_dir) / "benchmark.csv").string(), table);
    write_run_json(cfg.out_dir, cfg);
    std::cout << render_table(table, Metric::Mae) << "\n" << render_table(table, Metric::Mse);
    std::cout << "(* best, + second best per column; -- missing checkpoint)\n";
    std::cout << "benchmark CSV: " << (fs::path(cfg.out_dir) / "benchmark.csv").string() << "\n";
    return gaps ? 1 : 0;
}

int cmd_predict(const Flags& f, const std::string& checkpoint, const std::string& series_id,
                int offset) {
    RunConfig cfg = resolve_config(f);
    auto ck = checkpoint_load(checkpoint);
    auto model = model_from_checkpoint(ck);
    const int L = ck.config.input_len, T = ck.config.horizon;

    auto manifest = load_manifest(cfg.data_dir);
    const ManifestEntry* entry = nullptr;
    for (const auto& e : manifest.test)
        if (e.series_id == series_id) entry = &e;
    for (const auto& e : manifest.train)
        if (e.series_id == series_id) entry = &e;
    if (!entry) throw ConfigError("series '" + series_id + "' not found in manifest");

    auto raw = load_series(cfg.data_dir, *entry, manifest.sample_rate);
    if (offset < 0 || offset + L + T > static_cast<int>(raw.mg_rpm.size()))
        throw ConfigError("offset " + std::to_string(offset) + " leaves no room for L+T=" +
                          std::to_string(L + T) + " samples in series of length " +
                          std::to_string(raw.mg_rpm.size()));
    auto s = apply_normalize(raw, ck.norm);

    std::vector<float> x(s.mg_rpm.begin() + offset, s.mg_rpm.begin() + offset + L);
    Rng rng(cfg.seed);
    auto pred = model->forward(Tensor::from_data({L}, x), false, rng);

    fs::create_directories(cfg.out_dir);
    const fs::path csv = fs::path(cfg.out_dir) / (series_id + "_predict.csv");
    {
        std::ofstream os(csv);
        os << "t,truth,prediction\n";
        char buf[128];
        for (int i = 0; i < L + T; ++i) {
            const int idx = offset + i;
            const double t = idx / manifest.sample_rate;
            const double truth = raw.ds_torque[idx];
            if (i < L) {
                std::snprintf(buf, sizeof(buf), "%.6f,%.10g,\n", t, truth);
            } else {
                const double p =
                    double(pred.data()[i - L]) * ck.norm.torque_std + ck.norm.torque_mean;
                std::snprintf(buf, sizeof(buf), "%.6f,%.10g,%.10g\n", t, truth, p);
            }
            os << buf;
        }
    }

    // plot in normalized units so both channels share the axis
    SvgSeries input{"mg rpm (input)", "#888888", offset, {}, false};
    for (int i = 0; i < L; ++i) input.values.push_back(s.mg_rpm[offset + i]);
    SvgSeries truth{"ds torque (truth)", "#1f77b4", offset, {}, false};
    for (int i = 0; i < L + T; ++i) truth.values.push_back(s.ds_torque[offset + i]);
    SvgSeries forecast{"forecast", "#d62728", offset + L, {}, true};
    for (int i = 0; i < T; ++i) forecast.values.push_back(pred.data()[i]);
    const fs::path svg = fs::path(cfg.out_dir) / (series_id + "_predict.svg");
    {
        std::ofstream os(svg);
        os << render_svg_lines({input, truth, forecast}, 800, 400,
                               series_id + " forecast (" + ck.model_kind + ", T=" +
                                   std::to_string(T) + ")");
    }
    write_run_json(cfg.out_dir, cfg);
    std::cout << "forecast CSV: " << csv.string() << "\nplot: " << svg.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"torsional-resonance forecasting toolkit"};
    app.require_subcommand(1);

    Flags gen_f, train_f, bench_f, pred_f;
    auto* gen = app.add_subcommand("generate", "simulate the dataset grid and write CSV series");
    add_common_flags(gen, gen_f);
    auto* train = app.add_subcommand("train", "train one model for one horizon");
    add_common_flags(train, train_f);
    auto* bench = app.add_subcommand("benchmark", "evaluate checkpoints over all horizons");
    add_common_flags(bench, bench_f);
    auto* pred = app.add_subcommand("predict", "forecast one window and plot it");
    add_common_flags(pred, pred_f);
    std::string ckpt_path, series_id;
    int offset = 0;
    pred->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    pred->add_option("--series", series_id, "series id from the manifest")->required();
    pred->add_option("--offset", offset, "window start sample");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_f);
        if (train->parsed()) return cmd_train(train_f);
        if (bench->parsed()) return cmd_benchmark(bench_f);
        if (pred->parsed()) return cmd_predict(pred_f, ckpt_path, series_id, offset);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
