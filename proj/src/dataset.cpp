#include "reso/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "reso/rng.hpp"

namespace fs = std::filesystem;

namespace reso {

namespace {

std::vector<double> paper_brake_times() {
    std::vector<double> b;
    for (int i = 0; i <= 9; ++i) b.push_back((21 + i) / 10.0); // 2.1 .. 3.0
    for (int i = 4; i <= 13; ++i) b.push_back(static_cast<double>(i));
    return b;
}

const std::vector<double> kPaperMu = {0.2, 0.4, 0.6, 0.8, 1.0};
const std::vector<MotorPosition> kBothPositions = {MotorPosition::Front, MotorPosition::Rear};

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_series_csv(const fs::path& path, const SeriesRecord& s) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write series file " + path.string());
    os << "t,mg_rpm,ds_torque\n";
    for (size_t i = 0; i < s.mg_rpm.size(); ++i)
        os << format_double(i / s.sample_rate) << ',' << format_double(s.mg_rpm[i]) << ','
           << format_double(s.ds_torque[i]) << '\n';
}

nlohmann::json entry_json(const ManifestEntry& e) {
    return {{"series_id", e.series_id},
            {"file", e.file},
            {"stiffness", e.params.stiffness},
            {"brake_time", e.params.brake_time},
            {"mu", e.params.mu},
            {"motor_position", to_string(e.params.motor_position)},
            {"seed", e.params.seed},
            {"samples", e.samples}};
}

ManifestEntry entry_from_json(const nlohmann::json& j) {
    ManifestEntry e;
    e.series_id = j.at("series_id").get<std::string>();
    e.file = j.at("file").get<std::string>();
    e.params.stiffness = j.at("stiffness").get<double>();
    e.params.brake_time = j.at("brake_time").get<double>();
    e.params.mu = j.at("mu").get<double>();
    e.params.motor_position = motor_position_from_string(j.at("motor_position").get<std::string>());
    e.params.seed = j.at("seed").get<std::uint64_t>();
    e.samples = j.at("samples").get<int>();
    return e;
}

std::vector<ManifestEntry> generate_split(const Grid& grid, const std::string& split,
                                          const DatasetSpec& spec, std::uint64_t tag_base,
                                          const fs::path& dir) {
    Rng base(spec.seed);
    std::vector<ManifestEntry> entries;
    long idx = 0;
    for (double k : grid.stiffness)
        for (double bt : grid.brake_time)
            for (double mu : grid.mu)
                for (MotorPosition pos : grid.position) {
                    ManifestEntry e;
                    char id[32];
                    std::snprintf(id, sizeof(id), "%s_%04ld", split.c_str(), idx);
                    e.series_id = id;
                    e.file = e.series_id + ".csv";
                    e.params = {k, bt, mu, pos,
                                base.fork(tag_base + static_cast<std::uint64_t>(idx)).next_u64()};
                    SeriesRecord s = simulate_sequence(e.params, spec.sim);
                    s.series_id = e.series_id;
                    e.samples = static_cast<int>(s.mg_rpm.size());
                    write_series_csv(dir / e.file, s);
                    entries.push_back(std::move(e));
                    ++idx;
                }
    return entries;
}

} // namespace

Grid paper_train_grid() {
    return {{2662.0, 3771.2, 4880.3, 5989.5, 7542.3, 9095.2, 10648.0, 12644.7, 14641.3, 16638.0},
            paper_brake_times(),
            kPaperMu,
            kBothPositions};
}

Grid paper_test_grid() {
    return {{1500.0, 6800.0, 18000.0}, paper_brake_times(), kPaperMu, kBothPositions};
}

// Desk brake times sit early in the 2 s series so the brake transient is
// visible inside the input window of most supervised pairs.
Grid desk_train_grid() {
    return {{2662.0, 9095.2}, {0.3, 0.4, 0.5, 0.6, 0.7}, {0.4, 0.8}, kBothPositions};
}

Grid desk_test_grid() {
    return {{1500.0, 6800.0, 18000.0}, {0.35, 0.65}, {0.6}, kBothPositions};
}

Manifest generate_dataset(const DatasetSpec& spec, const std::string& out_dir) {
    for (double kt : spec.test.stiffness)
        if (std::find(spec.train.stiffness.begin(), spec.train.stiffness.end(), kt) !=
            spec.train.stiffness.end())
            throw ConfigError("test stiffness " + format_double(kt) +
                              " overlaps the training grid; splits must be disjoint");

    fs::create_directories(out_dir);
    Manifest m;
    m.seed = spec.seed;
    m.sample_rate = spec.sim.sample_rate;
    m.duration = spec.sim.duration;
    m.train = generate_split(spec.train, "train", spec, 0, out_dir);
    m.test = generate_split(spec.test, "test", spec, 1u << 20, out_dir);

    nlohmann::json j;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["sample_rate"] = m.sample_rate;
    j["duration"] = m.duration;
    j["train"] = nlohmann::json::array();
    for (const auto& e : m.train) j["train"].push_back(entry_json(e));
    j["test"] = nlohmann::json::array();
    for (const auto& e : m.test) j["test"].push_back(entry_json(e));
    std::ofstream os(fs::path(out_dir) / "manifest.json");
    if (!os) throw ConfigError("cannot write manifest under " + out_dir);
    os << j.dump(2) << '\n';
    return m;
}

Manifest load_manifest(const std::string& dir) {
    const fs::path path = fs::path(dir) / "manifest.json";
    std::ifstream is(path);
    if (!is) throw ConfigError("missing dataset manifest: " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    Manifest m;
    try {
        m.version = j.at("version").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.sample_rate = j.at("sample_rate").get<double>();
        m.duration = j.at("duration").get<double>();
        for (const auto& e : j.at("train")) m.train.push_back(entry_from_json(e));
        for (const auto& e : j.at("test")) m.test.push_back(entry_from_json(e));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest " + path.string() + " missing field: " + e.what());
    }
    return m;
}

SeriesRecord load_series(const std::string& dir, const ManifestEntry& entry, double sample_rate) {
    const fs::path path = fs::path(dir) / entry.file;
    std::ifstream is(path);
    if (!is) throw ConfigError("missing series file: " + path.string());
    SeriesRecord s;
    s.series_id = entry.series_id;
    s.params = entry.params;
    s.sample_rate = sample_rate;
    std::string line;
    if (!std::getline(is, line) || line != "t,mg_rpm,ds_torque")
        throw FormatError("series file " + path.string() + " has unexpected header");
    while (std::getline(is, line)) {
        double t, rpm, torque;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &rpm, &torque) != 3)
            throw FormatError("series file " + path.string() + " has malformed row: " + line);
        s.mg_rpm.push_back(rpm);
        s.ds_torque.push_back(torque);
    }
    if (static_cast<int>(s.mg_rpm.size()) != entry.samples)
        throw FormatError("series file " + path.string() + " row count " +
                          std::to_string(s.mg_rpm.size()) + " does not match manifest " +
                          std::to_string(entry.samples));
    return s;
}

std::vector<WindowPair> window_pairs(const SeriesRecord& s, int L, int T, int stride) {
    if (L < 1 || T < 1 || stride < 1)
        throw ConfigError("window_pairs requires L, T, stride >= 1");
    std::vector<WindowPair> out;
    const long len = static_cast<long>(s.mg_rpm.size());
    if (len < L + T) return out;
    for (long o = 0; o + L + T <= len; o += stride) {
        WindowPair p;
        p.series_id = s.series_id;
        p.offset = static_cast<int>(o);
        p.x.assign(s.mg_rpm.begin() + o, s.mg_rpm.begin() + o + L);
        p.y.assign(s.ds_torque.begin() + o + L, s.ds_torque.begin() + o + L + T);
        out.push_back(std::move(p));
    }
    return out;
}

NormStats fit_normalize(const std::vector<SeriesRecord>& train) {
    long n = 0;
    double rpm_sum = 0, torque_sum = 0;
    for (const auto& s : train) {
        n += static_cast<long>(s.mg_rpm.size());
        for (double v : s.mg_rpm) rpm_sum += v;
        for (double v : s.ds_torque) torque_sum += v;
    }
    if (n == 0) throw ConfigError("fit_normalize needs non-empty training data");
    NormStats st;
    st.rpm_mean = rpm_sum / n;
    st.torque_mean = torque_sum / n;
    double rpm_ss = 0, torque_ss = 0;
    for (const auto& s : train) {
        for (double v : s.mg_rpm) rpm_ss += (v - st.rpm_mean) * (v - st.rpm_mean);
        for (double v : s.ds_torque) torque_ss += (v - st.torque_mean) * (v - st.torque_mean);
    }
    st.rpm_std = std::sqrt(rpm_ss / n);
    st.torque_std = std::sqrt(torque_ss / n);
    if (st.rpm_std < 1e-12 || st.torque_std < 1e-12)
        throw ConfigError("training channel has zero variance; cannot normalize");
    return st;
}

SeriesRecord apply_normalize(const SeriesRecord& s, const NormStats& stats) {
    SeriesRecord out = s;
    for (double& v : out.mg_rpm) v = (v - stats.rpm_mean) / stats.rpm_std;
    for (double& v : out.ds_torque) v = (v - stats.torque_mean) / stats.torque_std;
    return out;
}

SeriesRecord apply_denormalize(const SeriesRecord& s, const NormStats& stats) {
    SeriesRecord out = s;
    for (double& v : out.mg_rpm) v = v * stats.rpm_std + stats.rpm_mean;
    for (double& v : out.ds_torque) v = v * stats.torque_std + stats.torque_mean;
    return out;
}

} // namespace reso
