#pragma once

// Domain physics for the flying-MEC simulator: geometry, kinematics,
// uplink channels, task timing and energy, rotary-wing propulsion.
// Everything here is a pure function of its arguments.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fmec {

inline constexpr double kPi = 3.14159265358979323846;

enum class ChannelMode { FreeSpace2d, Atg3d };

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dist2(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

struct Task {
    double data_bits = 0.0;   // D_i(t)
    double cpu_cycles = 0.0;  // F_i(t)

    bool empty() const { return data_bits == 0.0 && cpu_cycles == 0.0; }
};

struct UserEquipment {
    Vec2 position;
    double tx_power = 0.1;  // W
    double kappa = 1e-28;   // effective switched capacitance
    double nu = 3.0;        // exponent on local CPU frequency
};

struct UavState {
    double x = 0.0;
    double y = 0.0;
    double z = 75.0;
    double battery_j = 1e6;  // tracked in 3-D mode only
};

struct UavAction {
    double theta_h = 0.0;       // horizontal direction, [0, 2pi]
    double theta_v = kPi / 2;   // vertical direction, [0, pi]; pi/2 = level
    double dist = 0.0;          // [0, d_max]
};

struct SystemParams {
    double x_max = 400.0;
    double y_max = 400.0;
    double z_min = 50.0;
    double z_max = 120.0;
    double d_max = 30.0;
    double t_max = 1.0;          // slot duration == per-task deadline, s
    int v_cap = 30;              // V^max, tasks per UAV per slot
    double f_max = 100e9;        // Hz, UAV CPU budget
    double theta_max = kPi / 4;  // antenna half-angle
    double bandwidth = 10e6;     // Hz
    double g0 = 1.42e-4;
    double antenna_gain = 2.2846;  // G0
    double sigma2 = 1e-12;         // noise power, W (-90 dBm)
    double e_max = 1e6;            // J, UAV battery
    double k_z = 0.0025;           // UAV-energy weight in the 3-D reward
    double penalty = 100.0;        // out-of-area penalty

    double alpha() const { return g0 * antenna_gain / sigma2; }
};

struct AtgChannelParams {
    double eta_los = 1.6;    // dB
    double eta_nlos = 23.0;  // dB
    double a_env = 12.08;
    double b_env = 0.11;
    double f_c = 2.5e9;      // Hz
    double c_light = 3e8;    // m/s
};

struct PropulsionParams {
    double p_o = 79.86;          // blade profile power, W
    double p_s = 88.63;          // induced power, W
    double u_tip = 120.0;        // rotor tip speed, m/s
    double v_hover = 4.03;       // mean rotor induced velocity at hover
    double drag_ratio = 0.6;     // d_0
    double air_density = 1.25;   // kg/m^3
    double rotor_solidity = 0.05;
    double rotor_radius = 0.4;   // m
    double mass = 2.0;           // kg
    double gravity = 10.0;       // m/s^2
};

struct WorldState {
    std::vector<UserEquipment> ues;
    std::vector<UavState> uavs;
};

// R^max = Z tan(theta^max)
inline double coverage_radius(double z, double theta_max) {
    if (!(theta_max > 0.0) || theta_max >= kPi / 2)
        throw std::domain_error("coverage_radius: theta_max outside (0, pi/2)");
    if (!(z > 0.0)) throw std::domain_error("coverage_radius: altitude must be positive");
    return z * std::tan(theta_max);
}

// Free-space uplink rate; R is the horizontal UE-UAV distance.
inline double free_space_rate(const UserEquipment& ue, const UavState& uav,
                              const SystemParams& sys) {
    const double r2 = dist2(ue.position, Vec2{uav.x, uav.y});
    const double snr = sys.alpha() * ue.tx_power / (uav.z * uav.z + r2);
    return sys.bandwidth * std::log2(1.0 + snr);
}

// Mean air-to-ground path loss, dB. Elevation angle enters the LoS
// sigmoid in degrees (the a/b constants are degree-calibrated).
inline double atg_path_loss(double dist3, double elevation_rad,
                            const AtgChannelParams& atg) {
    const double theta_deg = elevation_rad * 180.0 / kPi;
    const double sigmoid =
        (atg.eta_los - atg.eta_nlos) /
        (1.0 + atg.a_env * std::exp(-atg.b_env * (theta_deg - atg.a_env)));
    return sigmoid + 20.0 * std::log10(dist3) +
           20.0 * std::log10(4.0 * kPi * atg.f_c / atg.c_light) + atg.eta_nlos;
}

inline double atg_rate(const UserEquipment& ue, const UavState& uav,
                       const SystemParams& sys, const AtgChannelParams& atg) {
    const double r2 = dist2(ue.position, Vec2{uav.x, uav.y});
    const double d3 = std::sqrt(r2 + uav.z * uav.z);
    const double elevation = std::atan2(uav.z, std::sqrt(r2));
    const double loss_db = atg_path_loss(d3, elevation, atg);
    const double snr = ue.tx_power / sys.sigma2 * std::pow(10.0, -loss_db / 10.0);
    return sys.bandwidth * std::log2(1.0 + snr);
}

inline double channel_rate(const UserEquipment& ue, const UavState& uav,
                           const SystemParams& sys, ChannelMode mode,
                           const AtgChannelParams& atg) {
    return mode == ChannelMode::FreeSpace2d ? free_space_rate(ue, uav, sys)
                                            : atg_rate(ue, uav, sys, atg);
}

struct LocalExecution {
    double energy = 0.0;   // J
    double f_local = 0.0;  // Hz
};

// Local CPU runs exactly fast enough to finish at the deadline.
inline LocalExecution local_energy(const Task& task, const UserEquipment& ue,
                                   double t_max) {
    if (task.cpu_cycles == 0.0) return {};
    const double f = task.cpu_cycles / t_max;
    return {ue.kappa * std::pow(f, ue.nu) * (task.cpu_cycles / f), f};
}

struct OffloadCost {
    double t_tr = 0.0;
    double t_total = 0.0;
    double e_tr = 0.0;
    bool feasible = true;  // false when the upload alone misses the deadline
};

inline OffloadCost offload_cost(const Task& task, double rate, double f_c,
                                double p_tx, double t_max) {
    OffloadCost out;
    out.t_tr = task.data_bits == 0.0 ? 0.0 : task.data_bits / rate;
    out.t_total = out.t_tr + (task.cpu_cycles > 0.0 ? task.cpu_cycles / f_c : 0.0);
    out.e_tr = p_tx * out.t_tr;
    out.feasible = out.t_tr < t_max;
    return out;
}

// Minimal UAV CPU share that still meets the deadline; nullopt when the
// transmission time already exceeds it.
inline std::optional<double> required_cpu(const Task& task, double rate,
                                          double t_max) {
    const double t_tr = task.data_bits == 0.0 ? 0.0 : task.data_bits / rate;
    const double slack = t_max - t_tr;
    if (slack <= 0.0) return std::nullopt;
    return task.cpu_cycles / slack;
}

struct Kinematics {
    UavState state;
    bool violated = false;
};

// 2-D: planar step. 3-D: spherical step; with strict_paper_z the altitude
// update drops the distance factor, matching the published update verbatim.
inline Kinematics apply_action(const UavState& state, const UavAction& action,
                               const SystemParams& sys, ChannelMode mode,
                               bool strict_paper_z = false) {
    Kinematics out{state, false};
    double dx, dy, dz = 0.0;
    if (mode == ChannelMode::FreeSpace2d) {
        dx = action.dist * std::cos(action.theta_h);
        dy = action.dist * std::sin(action.theta_h);
    } else {
        const double sv = std::sin(action.theta_v);
        dx = action.dist * sv * std::cos(action.theta_h);
        dy = action.dist * sv * std::sin(action.theta_h);
        dz = (strict_paper_z ? 1.0 : action.dist) * std::cos(action.theta_v);
    }
    out.state.x += dx;
    out.state.y += dy;
    out.state.z += dz;

    auto clamp = [&](double& v, double lo, double hi) {
        if (v < lo) { v = lo; out.violated = true; }
        if (v > hi) { v = hi; out.violated = true; }
    };
    clamp(out.state.x, 0.0, sys.x_max);
    clamp(out.state.y, 0.0, sys.y_max);
    if (mode == ChannelMode::Atg3d) clamp(out.state.z, sys.z_min, sys.z_max);
    return out;
}

// Rotary-wing power: blade profile + induced + parasite + climb.
inline double propulsion_power(double v, double theta_v,
                               const PropulsionParams& pp) {
    const double blade = pp.p_o * (1.0 + 3.0 * (v / pp.u_tip) * (v / pp.u_tip));
    const double vh2 = pp.v_hover * pp.v_hover;
    const double inner = std::sqrt(1.0 + v * v * v * v / (4.0 * vh2 * vh2)) -
                         v * v / (2.0 * vh2);
    // sqrt(1 + x^2/4) >= x/2, so inner >= 0 for all v
    const double induced = pp.p_s * std::sqrt(inner > 0.0 ? inner : 0.0);
    const double parasite = kPi / 2 * pp.drag_ratio * pp.air_density *
                            pp.rotor_solidity * pp.rotor_radius *
                            pp.rotor_radius * v * v * v;
    const double climb = pp.mass * pp.gravity * v * std::cos(theta_v);
    return blade + induced + parasite + climb;
}

struct BatteryStep {
    double remaining = 0.0;
    bool depleted = false;
};

inline BatteryStep battery_step(double battery, double power, double t_max) {
    const double next = battery - power * t_max;
    if (next <= 0.0) return {0.0, true};
    return {next, false};
}

}  // namespace fmec
