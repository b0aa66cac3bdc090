#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "reso/dataset.hpp"
#include "reso/train.hpp"

namespace reso {

// Everything one run needs: data location, model/train settings, horizons.
// Built from a preset, optionally overridden by a JSON config file and then
// by CLI flags.
struct RunConfig {
    std::string preset = "desk"; // desk | paper
    std::string model = "resoformer";
    std::string data_dir = "data";
    std::string out_dir = "out";
    std::uint64_t seed = 7;
    int stride = 12;
    std::vector<int> horizons = {16, 32, 48, 64};
    double duration = 2.0; // simulated series length, s
    double sample_rate = 100.0;
    ModelConfig model_cfg;
    TrainConfig train_cfg;

    void validate() const;
};

// Baseline settings for the named preset ("desk" or "paper").
RunConfig preset_config(const std::string& name);

// Applies a JSON document on top of cfg; unknown keys anywhere are rejected.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);

// Loads and applies a config file over the preset it names (default desk).
RunConfig load_run_config(const std::string& path);

// Full echo of the resolved config, also used as the run.json provenance record.
nlohmann::json run_config_json(const RunConfig& cfg);

// Simulation grids and constants for cmd_generate under this config.
DatasetSpec dataset_spec(const RunConfig& cfg);

} // namespace reso
