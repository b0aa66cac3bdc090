#include "reso/sim.hpp"

#include <array>
#include <cmath>

#include "reso/rng.hpp"

namespace reso {

namespace {

// State: x[0] = twist (theta_m - theta_w), x[1] = motor speed, x[2] = wheel speed.
struct Dyn {
    double k, c, j_m, j_w;
    double brake;      // brake torque level active in this step (already ramped)
    double road;       // telegraph road torque active in this step
    double brake_sign; // motor_position convention

    std::array<double, 3> operator()(const std::array<double, 3>& x) const {
        const double shaft = k * x[0] + c * (x[1] - x[2]);
        const double wheel_brake = -brake_sign * brake * std::tanh(x[2] / 0.5);
        return {x[1] - x[2],
                -shaft / j_m,
                (shaft + wheel_brake + road) / j_w};
    }
};

} // namespace

double eigenfrequency_hz(double stiffness, const SimConfig& cfg) {
    return std::sqrt(stiffness * (1.0 / cfg.j_motor + 1.0 / cfg.j_wheel)) / (2.0 * M_PI);
}

SeriesRecord simulate_sequence(const SimParams& p, const SimConfig& cfg) {
    if (p.stiffness <= 0.0) throw ConfigError("stiffness must be > 0");
    if (p.mu <= 0.0 || p.mu > 1.0) throw ConfigError("mu must be in (0, 1]");
    if (p.brake_time < 0.0 || p.brake_time > cfg.duration)
        throw ConfigError("brake_time must lie within the series duration");
    if (cfg.substeps < 1) throw ConfigError("substeps must be >= 1");

    const int n = static_cast<int>(std::lround(cfg.duration * cfg.sample_rate));
    const double j_eff = cfg.j_motor * cfg.j_wheel / (cfg.j_motor + cfg.j_wheel);
    const double c = 2.0 * cfg.damping_ratio * std::sqrt(p.stiffness * j_eff);
    const double brake_sign = p.motor_position == MotorPosition::Front ? 1.0 : -1.0;
    const double road_amp = cfg.excitation_torque * (1.0 - p.mu);
    const double h = 1.0 / (cfg.sample_rate * cfg.substeps);

    Rng rng(p.seed);
    double road_level = road_amp == 0.0 ? 0.0 : (rng.bernoulli(0.5) ? road_amp : -road_amp);

    SeriesRecord out;
    out.params = p;
    out.sample_rate = cfg.sample_rate;
    out.mg_rpm.reserve(n);
    out.ds_torque.reserve(n);

    std::array<double, 3> x = {0.0, cfg.initial_speed, cfg.initial_speed};
    for (int i = 0; i < n; ++i) {
        const double t0 = i / cfg.sample_rate;
        // telegraph level held constant across the sample interval
        if (road_amp != 0.0 && rng.bernoulli(0.2)) road_level = -road_level;
        // 20 ms brake ramp: smooth at substep scale, sharp enough to excite
        // the twist mode across the stiffness grid
        const double ramp = std::min(1.0, std::max(0.0, (t0 - p.brake_time) / 0.02));
        Dyn dyn{p.stiffness, c, cfg.j_motor, cfg.j_wheel,
                cfg.brake_torque * ramp, road_level, brake_sign};

        for (int s = 0; s < cfg.substeps; ++s) {
            auto k1 = dyn(x);
            std::array<double, 3> x2, x3, x4;
            for (int d = 0; d < 3; ++d) x2[d] = x[d] + 0.5 * h * k1[d];
            auto k2 = dyn(x2);
            for (int d = 0; d < 3; ++d) x3[d] = x[d] + 0.5 * h * k2[d];
            auto k3 = dyn(x3);
            for (int d = 0; d < 3; ++d) x4[d] = x[d] + h * k3[d];
            auto k4 = dyn(x4);
            for (int d = 0; d < 3; ++d)
                x[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        for (double v : x)
            if (!std::isfinite(v) || std::abs(v) > cfg.state_bound)
                throw SimulationError("integration unstable at sample " + std::to_string(i) +
                                      " (t=" + std::to_string(t0) + " s)");

        out.mg_rpm.push_back(x[1] * 60.0 / (2.0 * M_PI));
        out.ds_torque.push_back(p.stiffness * x[0] + c * (x[1] - x[2]));
    }
    return out;
}

} // namespace reso
