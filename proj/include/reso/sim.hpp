#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reso/errors.hpp"

namespace reso {

enum class MotorPosition { Front, Rear };

inline std::string to_string(MotorPosition p) {
    return p == MotorPosition::Front ? "front" : "rear";
}

inline MotorPosition motor_position_from_string(const std::string& s) {
    if (s == "front") return MotorPosition::Front;
    if (s == "rear") return MotorPosition::Rear;
    throw ConfigError("unknown motor position '" + s + "' (expected front or rear)");
}

// Per-series variable parameters.
struct SimParams {
    double stiffness = 0.0;  // shaft torsional stiffness, N*m/rad
    double brake_time = 0.0; // brake application time, s
    double mu = 1.0;         // road friction in (0, 1]; rough-road torque scales with 1-mu
    MotorPosition motor_position = MotorPosition::Front;
    std::uint64_t seed = 0;
};

// Fixed physical constants of the two-inertia driveline model.
struct SimConfig {
    double duration = 20.0;    // s
    double sample_rate = 100.0; // Hz
    double j_motor = 0.5;      // kg*m^2
    double j_wheel = 2.0;      // kg*m^2
    double damping_ratio = 0.02;
    double brake_torque = 50.0;       // N*m, applied at the wheel from brake_time;
                                      // mild enough that the wheel keeps spinning
                                      // for ~1.5 s, leaving both inertias free to
                                      // ring at the two-inertia eigenfrequency
    double excitation_torque = 80.0;  // N*m telegraph amplitude before the (1-mu) scale
    double initial_speed = 30.0;      // rad/s, both inertias spinning together
    int substeps = 20;                // RK4 steps per output sample
    double state_bound = 1e9;         // integration sanity limit
};

struct SeriesRecord {
    std::string series_id;
    SimParams params;
    double sample_rate = 0.0;
    std::vector<double> mg_rpm;    // input channel X
    std::vector<double> ds_torque; // target channel Y
};

// Two-inertia torsional oscillator: motor and wheel coupled by a shaft with
// stiffness k and damping c (2% of critical for the twist mode). The brake is
// a smooth torque opposing wheel motion from brake_time on; rough road adds a
// seeded random telegraph torque at the wheel scaled by (1-mu). Fixed-step
// RK4 on the state (twist, motor speed, wheel speed).
SeriesRecord simulate_sequence(const SimParams& p, const SimConfig& cfg);

// Undamped eigenfrequency of the twist mode in Hz: (1/2pi)*sqrt(k*(1/Jm + 1/Jw)).
double eigenfrequency_hz(double stiffness, const SimConfig& cfg);

} // namespace reso
