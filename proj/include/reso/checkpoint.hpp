#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "reso/config.hpp"
#include "reso/model.hpp"

namespace reso {

// On-disk model snapshot. Binary layout: magic "RSFC", little-endian u32
// format version, u64 JSON header length, the JSON header (model kind,
// config, normalization stats, named shape table), then one float32
// little-endian blob per parameter in header order.
struct Checkpoint {
    static constexpr int kVersion = 1;
    std::string model_kind;
    ModelConfig config;
    NormStats norm;
    std::vector<std::pair<std::string, Tensor>> params;
};

void checkpoint_save(const std::string& path, const Checkpoint& ck);
Checkpoint checkpoint_load(const std::string& path);

// Snapshot a live model.
Checkpoint snapshot(Forecaster<float>& model, const NormStats& norm);

// Rebuild a model and load the stored weights into it.
std::unique_ptr<Forecaster<float>> model_from_checkpoint(const Checkpoint& ck);

} // namespace reso
