#pragma once

// Scenario configuration, seeded generation, and the JSON file format.
// Config files carry an explicit schema version; unknown keys are rejected.

#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmec/model.hpp"

namespace fmec {

inline constexpr int kSchemaVersion = 1;

struct RatHyperParams {
    double gamma = 0.999;
    std::size_t batch = 64;
    std::size_t buffer = 1000;
    double tau = 0.001;
    double beta = 0.6;   // priority exponent
    double mu = 0.4;     // importance-weight exponent
    double eps = 0.001;  // priority floor
    double noise_rho = 2.0;
    double noise_decay = 0.9995;
    int epochs = 300;
    int updates = 1;  // gradient steps per environment step once learning starts
    double actor_lr = 0.001;
    double critic_lr = 0.001;
    std::vector<std::size_t> hidden = {256, 128, 64};
    double reward_scale = 0.0;   // 0 = auto (N * mean local energy estimate)
    double reward_offset = -1.0;  // joules added before scaling; <0 = auto (same estimate)
    bool uniform_replay = false;
    // Actor output head. "cartesian": components are displacement coordinates
    // in [-d_max, d_max] (hover sits at the sigmoid midpoint, no angular
    // wrap-around). "polar": components are (heading angle, distance) --
    // and (vertical angle) in 3-D.
    std::string action_head = "cartesian";
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    int n_ues = 20;
    int n_uavs = 2;
    int slots = 20;
    ChannelMode mode = ChannelMode::FreeSpace2d;
    double task_data_lo = 10e3 * 8;   // bits (10 KB)
    double task_data_hi = 50e3 * 8;   // bits (50 KB)
    double task_cycles_lo = 2e9;
    double task_cycles_hi = 2e10;
    int takeoff_pool = 20;
    bool strict_paper_z = false;
    SystemParams sys;
    AtgChannelParams atg;
    PropulsionParams prop;
    RatHyperParams rat;

    void validate() const {
        if (n_ues < 1) throw std::invalid_argument("config: n_ues must be >= 1");
        if (n_uavs < 1) throw std::invalid_argument("config: n_uavs must be >= 1");
        if (slots < 1) throw std::invalid_argument("config: slots must be >= 1");
        if (task_data_lo > task_data_hi)
            throw std::invalid_argument("config: task data range inverted");
        if (task_cycles_lo > task_cycles_hi)
            throw std::invalid_argument("config: task cycle range inverted");
        if (takeoff_pool < 1)
            throw std::invalid_argument("config: takeoff_pool must be >= 1");
        if (!(sys.t_max > 0.0)) throw std::invalid_argument("config: t_max must be > 0");
        if (sys.v_cap < 0) throw std::invalid_argument("config: v_cap must be >= 0");
        if (rat.action_head != "cartesian" && rat.action_head != "polar")
            throw std::invalid_argument(
                "config: action_head must be \"cartesian\" or \"polar\"");
    }
};

struct Scenario {
    ScenarioConfig cfg;
    std::vector<UserEquipment> ues;
    std::vector<std::vector<Task>> tasks;       // [slot][ue]
    std::vector<std::vector<Vec2>> takeoffs;    // [pool][uav]
};

// Independent generator streams derived from the master seed.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    return rng();
}

inline Scenario generate_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    Scenario sc;
    sc.cfg = cfg;

    std::mt19937_64 pos_rng(substream(cfg.seed, 0));
    std::uniform_real_distribution<double> ux(0.0, cfg.sys.x_max);
    std::uniform_real_distribution<double> uy(0.0, cfg.sys.y_max);
    sc.ues.resize(static_cast<std::size_t>(cfg.n_ues));
    for (auto& ue : sc.ues) ue.position = {ux(pos_rng), uy(pos_rng)};

    std::mt19937_64 task_rng(substream(cfg.seed, 1));
    std::uniform_real_distribution<double> ud(cfg.task_data_lo, cfg.task_data_hi);
    std::uniform_real_distribution<double> uf(cfg.task_cycles_lo, cfg.task_cycles_hi);
    sc.tasks.resize(static_cast<std::size_t>(cfg.slots));
    for (auto& slot : sc.tasks) {
        slot.resize(static_cast<std::size_t>(cfg.n_ues));
        for (auto& task : slot) task = {ud(task_rng), uf(task_rng)};
    }

    std::mt19937_64 takeoff_rng(substream(cfg.seed, 2));
    sc.takeoffs.resize(static_cast<std::size_t>(cfg.takeoff_pool));
    for (auto& pool : sc.takeoffs) {
        pool.resize(static_cast<std::size_t>(cfg.n_uavs));
        for (auto& p : pool) p = {ux(takeoff_rng), uy(takeoff_rng)};
    }
    return sc;
}

// ---------------------------------------------------------------------------
// JSON round trip

namespace detail {

inline void require_keys(const nlohmann::json& j,
                         const std::vector<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const auto& k : known)
            if (k == key) { ok = true; break; }
        if (!ok)
            throw std::runtime_error("config: unknown key '" + key + "' in " + where);
    }
}

}  // namespace detail

inline nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    j["n_ues"] = cfg.n_ues;
    j["n_uavs"] = cfg.n_uavs;
    j["slots"] = cfg.slots;
    j["mode"] = cfg.mode == ChannelMode::FreeSpace2d ? "2d" : "3d";
    j["task_data_bits"] = {cfg.task_data_lo, cfg.task_data_hi};
    j["task_cpu_cycles"] = {cfg.task_cycles_lo, cfg.task_cycles_hi};
    j["takeoff_pool"] = cfg.takeoff_pool;
    j["strict_paper_z"] = cfg.strict_paper_z;
    j["system"] = {{"x_max", cfg.sys.x_max},
                   {"y_max", cfg.sys.y_max},
                   {"z_min", cfg.sys.z_min},
                   {"z_max", cfg.sys.z_max},
                   {"d_max", cfg.sys.d_max},
                   {"t_max", cfg.sys.t_max},
                   {"v_cap", cfg.sys.v_cap},
                   {"f_max", cfg.sys.f_max},
                   {"theta_max", cfg.sys.theta_max},
                   {"bandwidth", cfg.sys.bandwidth},
                   {"g0", cfg.sys.g0},
                   {"antenna_gain", cfg.sys.antenna_gain},
                   {"sigma2", cfg.sys.sigma2},
                   {"e_max", cfg.sys.e_max},
                   {"k_z", cfg.sys.k_z},
                   {"penalty", cfg.sys.penalty}};
    j["atg"] = {{"eta_los", cfg.atg.eta_los},   {"eta_nlos", cfg.atg.eta_nlos},
                {"a_env", cfg.atg.a_env},       {"b_env", cfg.atg.b_env},
                {"f_c", cfg.atg.f_c},           {"c_light", cfg.atg.c_light}};
    j["propulsion"] = {{"p_o", cfg.prop.p_o},
                       {"p_s", cfg.prop.p_s},
                       {"u_tip", cfg.prop.u_tip},
                       {"v_hover", cfg.prop.v_hover},
                       {"drag_ratio", cfg.prop.drag_ratio},
                       {"air_density", cfg.prop.air_density},
                       {"rotor_solidity", cfg.prop.rotor_solidity},
                       {"rotor_radius", cfg.prop.rotor_radius},
                       {"mass", cfg.prop.mass},
                       {"gravity", cfg.prop.gravity}};
    j["rat"] = {{"gamma", cfg.rat.gamma},
                {"batch", cfg.rat.batch},
                {"buffer", cfg.rat.buffer},
                {"tau", cfg.rat.tau},
                {"beta", cfg.rat.beta},
                {"mu", cfg.rat.mu},
                {"eps", cfg.rat.eps},
                {"noise_rho", cfg.rat.noise_rho},
                {"noise_decay", cfg.rat.noise_decay},
                {"epochs", cfg.rat.epochs},
                {"updates", cfg.rat.updates},
                {"actor_lr", cfg.rat.actor_lr},
                {"critic_lr", cfg.rat.critic_lr},
                {"hidden", cfg.rat.hidden},
                {"reward_scale", cfg.rat.reward_scale},
                {"reward_offset", cfg.rat.reward_offset},
                {"uniform_replay", cfg.rat.uniform_replay},
                {"action_head", cfg.rat.action_head}};
    return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    detail::require_keys(j,
                         {"schema_version", "seed", "n_ues", "n_uavs", "slots",
                          "mode", "task_data_bits", "task_cpu_cycles",
                          "takeoff_pool", "strict_paper_z", "system", "atg",
                          "propulsion", "rat"},
                         "root");
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion)
        throw std::runtime_error("config: unsupported schema_version " +
                                 std::to_string(version));
    ScenarioConfig cfg;
    auto opt = [&](const char* key, auto& target) {
        if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
    };
    opt("seed", cfg.seed);
    opt("n_ues", cfg.n_ues);
    opt("n_uavs", cfg.n_uavs);
    opt("slots", cfg.slots);
    if (j.contains("mode")) {
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "2d") cfg.mode = ChannelMode::FreeSpace2d;
        else if (mode == "3d") cfg.mode = ChannelMode::Atg3d;
        else throw std::runtime_error("config: mode must be '2d' or '3d'");
    }
    if (j.contains("task_data_bits")) {
        cfg.task_data_lo = j.at("task_data_bits").at(0).get<double>();
        cfg.task_data_hi = j.at("task_data_bits").at(1).get<double>();
    }
    if (j.contains("task_cpu_cycles")) {
        cfg.task_cycles_lo = j.at("task_cpu_cycles").at(0).get<double>();
        cfg.task_cycles_hi = j.at("task_cpu_cycles").at(1).get<double>();
    }
    opt("takeoff_pool", cfg.takeoff_pool);
    opt("strict_paper_z", cfg.strict_paper_z);
    if (j.contains("system")) {
        const auto& s = j.at("system");
        detail::require_keys(s,
                             {"x_max", "y_max", "z_min", "z_max", "d_max", "t_max",
                              "v_cap", "f_max", "theta_max", "bandwidth", "g0",
                              "antenna_gain", "sigma2", "sigma2_dbm", "e_max",
                              "k_z", "penalty"},
                             "system");
        auto opts = [&](const char* key, auto& target) {
            if (s.contains(key)) target = s.at(key).get<std::decay_t<decltype(target)>>();
        };
        opts("x_max", cfg.sys.x_max);
        opts("y_max", cfg.sys.y_max);
        opts("z_min", cfg.sys.z_min);
        opts("z_max", cfg.sys.z_max);
        opts("d_max", cfg.sys.d_max);
        opts("t_max", cfg.sys.t_max);
        opts("v_cap", cfg.sys.v_cap);
        opts("f_max", cfg.sys.f_max);
        opts("theta_max", cfg.sys.theta_max);
        opts("bandwidth", cfg.sys.bandwidth);
        opts("g0", cfg.sys.g0);
        opts("antenna_gain", cfg.sys.antenna_gain);
        opts("sigma2", cfg.sys.sigma2);
        if (s.contains("sigma2_dbm"))  // converted to watts once, at load
            cfg.sys.sigma2 = std::pow(10.0, s.at("sigma2_dbm").get<double>() / 10.0) / 1000.0;
        opts("e_max", cfg.sys.e_max);
        opts("k_z", cfg.sys.k_z);
        opts("penalty", cfg.sys.penalty);
    }
    if (j.contains("atg")) {
        const auto& a = j.at("atg");
        detail::require_keys(a, {"eta_los", "eta_nlos", "a_env", "b_env", "f_c",
                                 "c_light"},
                             "atg");
        auto opta = [&](const char* key, auto& target) {
            if (a.contains(key)) target = a.at(key).get<std::decay_t<decltype(target)>>();
        };
        opta("eta_los", cfg.atg.eta_los);
        opta("eta_nlos", cfg.atg.eta_nlos);
        opta("a_env", cfg.atg.a_env);
        opta("b_env", cfg.atg.b_env);
        opta("f_c", cfg.atg.f_c);
        opta("c_light", cfg.atg.c_light);
    }
    if (j.contains("propulsion")) {
        const auto& p = j.at("propulsion");
        detail::require_keys(p,
                             {"p_o", "p_s", "u_tip", "v_hover", "drag_ratio",
                              "air_density", "rotor_solidity", "rotor_radius",
                              "mass", "gravity"},
                             "propulsion");
        auto optp = [&](const char* key, auto& target) {
            if (p.contains(key)) target = p.at(key).get<std::decay_t<decltype(target)>>();
        };
        optp("p_o", cfg.prop.p_o);
        optp("p_s", cfg.prop.p_s);
        optp("u_tip", cfg.prop.u_tip);
        optp("v_hover", cfg.prop.v_hover);
        optp("drag_ratio", cfg.prop.drag_ratio);
        optp("air_density", cfg.prop.air_density);
        optp("rotor_solidity", cfg.prop.rotor_solidity);
        optp("rotor_radius", cfg.prop.rotor_radius);
        optp("mass", cfg.prop.mass);
        optp("gravity", cfg.prop.gravity);
    }
    if (j.contains("rat")) {
        const auto& r = j.at("rat");
        detail::require_keys(r,
                             {"gamma", "batch", "buffer", "tau", "beta", "mu",
                              "eps", "noise_rho", "noise_decay", "epochs",
                              "updates", "actor_lr", "critic_lr", "hidden",
                              "reward_scale", "reward_offset", "uniform_replay",
                              "action_head"},
                             "rat");
        auto optr = [&](const char* key, auto& target) {
            if (r.contains(key)) target = r.at(key).get<std::decay_t<decltype(target)>>();
        };
        optr("gamma", cfg.rat.gamma);
        optr("batch", cfg.rat.batch);
        optr("buffer", cfg.rat.buffer);
        optr("tau", cfg.rat.tau);
        optr("beta", cfg.rat.beta);
        optr("mu", cfg.rat.mu);
        optr("eps", cfg.rat.eps);
        optr("noise_rho", cfg.rat.noise_rho);
        optr("noise_decay", cfg.rat.noise_decay);
        optr("epochs", cfg.rat.epochs);
        optr("updates", cfg.rat.updates);
        optr("actor_lr", cfg.rat.actor_lr);
        optr("critic_lr", cfg.rat.critic_lr);
        optr("hidden", cfg.rat.hidden);
        optr("reward_scale", cfg.rat.reward_scale);
        optr("reward_offset", cfg.rat.reward_offset);
        optr("uniform_replay", cfg.rat.uniform_replay);
        optr("action_head", cfg.rat.action_head);
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = config_to_json(sc.cfg);
    j["ues"] = nlohmann::json::array();
    for (const auto& ue : sc.ues)
        j["ues"].push_back({{"x", ue.position.x},
                            {"y", ue.position.y},
                            {"tx_power", ue.tx_power},
                            {"kappa", ue.kappa},
                            {"nu", ue.nu}});
    j["tasks"] = nlohmann::json::array();
    for (const auto& slot : sc.tasks) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& task : slot)
            row.push_back({task.data_bits, task.cpu_cycles});
        j["tasks"].push_back(std::move(row));
    }
    j["takeoffs"] = nlohmann::json::array();
    for (const auto& pool : sc.takeoffs) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& p : pool) row.push_back({p.x, p.y});
        j["takeoffs"].push_back(std::move(row));
    }
    return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    detail::require_keys(j, {"schema_version", "config", "ues", "tasks", "takeoffs"},
                         "scenario");
    if (j.at("schema_version").get<int>() != kSchemaVersion)
        throw std::runtime_error("scenario: unsupported schema_version");
    Scenario sc;
    sc.cfg = config_from_json(j.at("config"));
    for (const auto& u : j.at("ues")) {
        UserEquipment ue;
        ue.position = {u.at("x").get<double>(), u.at("y").get<double>()};
        ue.tx_power = u.at("tx_power").get<double>();
        ue.kappa = u.at("kappa").get<double>();
        ue.nu = u.at("nu").get<double>();
        sc.ues.push_back(ue);
    }
    for (const auto& row : j.at("tasks")) {
        std::vector<Task> slot;
        for (const auto& t : row)
            slot.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
        sc.tasks.push_back(std::move(slot));
    }
    for (const auto& row : j.at("takeoffs")) {
        std::vector<Vec2> pool;
        for (const auto& p : row)
            pool.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        sc.takeoffs.push_back(std::move(pool));
    }
    return sc;
}

inline void save_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return nlohmann::json::parse(in);
}

}  // namespace fmec
