#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reso/checkpoint.hpp"
#include "reso/dataset.hpp"
#include "reso/model.hpp"

namespace reso {

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    int batch_size = 32;
    int epochs = 30;
    LrSchedule schedule = LrSchedule::Constant;
    bool clip_gradients = true; // global-norm clip at clip_norm
    double clip_norm = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw ConfigError("adam betas must lie in [0, 1)");
        if (epsilon <= 0) throw ConfigError("adam epsilon must be > 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (clip_norm <= 0) throw ConfigError("clip_norm must be > 0");
    }
};

// lr0 * (1 + cos(pi * epoch / total)) / 2, no restarts.
double cosine_anneal(double lr0, int epoch, int total_epochs);

// Standard Adam with bias-corrected moments; epsilon sits next to the
// square root in the denominator. Moments are keyed by parameter name so
// the state survives params() being rebuilt between steps.
class Adam {
public:
    explicit Adam(const TrainConfig& cfg) : cfg_(cfg) { cfg.validate(); }

    // Applies one update from the gradients currently stored on the params.
    void step(std::vector<std::pair<std::string, Tensor>>& params, double lr);

    long step_count() const { return t_; }

private:
    TrainConfig cfg_;
    long t_ = 0;
    std::map<std::string, std::pair<std::vector<float>, std::vector<float>>> moments_;
};

struct EpochStats {
    int epoch = 0; // 1-based
    double loss = 0;
    double lr = 0;
    double seconds = 0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    Checkpoint checkpoint; // final weights, or last-good on divergence
    bool diverged = false;
};

// Seeded-shuffle mini-batch training with MAE loss. On divergence (non-finite
// loss) the run stops and the checkpoint from the previous epoch is returned.
TrainResult train_model(Forecaster<float>& model, const std::vector<WindowPair>& windows,
                        const TrainConfig& cfg, const NormStats& norm);

struct EvalResult {
    double mae = 0;
    double mse = 0;
    long windows = 0;
};

// Order-independent accumulation (sum, then divide) over all test windows.
EvalResult evaluate_model(Forecaster<float>& model, const std::vector<WindowPair>& windows);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

} // namespace reso
