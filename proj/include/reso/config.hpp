#pragma once

#include <string>
#include <vector>

#include "reso/errors.hpp"

namespace reso {

// Architecture hyper-parameters shared by all models and the harness.
struct ModelConfig {
    int input_len = 192;
    int horizon = 96;
    int width = 64;
    int heads = 4;
    double dropout = 0.2;
    int kernel = 3;
    std::vector<int> dilations = {16, 32, 64, 128};
    int lstm_hidden = 64;
    int mlp_hidden = 128;

    void validate() const {
        if (input_len < 1) throw ConfigError("input_len must be >= 1");
        if (horizon < 1) throw ConfigError("horizon must be >= 1");
        if (width < 2 || width % 2 != 0) throw ConfigError("width must be even and >= 2");
        if (heads < 1 || width % heads != 0)
            throw ConfigError("width " + std::to_string(width) + " not divisible by heads " +
                              std::to_string(heads));
        if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
        if (kernel < 1) throw ConfigError("kernel must be >= 1");
        if (lstm_hidden < 1) throw ConfigError("lstm_hidden must be >= 1");
        if (mlp_hidden < 1) throw ConfigError("mlp_hidden must be >= 1");
    }
};

// Per-channel z-score statistics fitted on the training split only.
struct NormStats {
    double rpm_mean = 0.0, rpm_std = 1.0;
    double torque_mean = 0.0, torque_std = 1.0;
};

} // namespace reso
