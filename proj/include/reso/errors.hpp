#pragma once

#include <stdexcept>
#include <string>

namespace reso {

// Shape/width mismatches between tensors or layer parameters.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration values (rates, widths, grids).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated operation contracts (e.g. backward on a non-scalar loss).
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime failures during training (NaN gradients, divergence).
struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Simulator blow-up or I/O level dataset problems.
struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint / manifest parsing failures.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace reso
