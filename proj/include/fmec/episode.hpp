#pragma once

// Slot-stepped environment shared by the learned agent and the baseline
// policies: kinematics, battery, matching, per-slot energy and reward.

#include <functional>
#include <vector>

#include "fmec/matching.hpp"
#include "fmec/model.hpp"
#include "fmec/scenario.hpp"

namespace fmec {

struct SlotResult {
    Association assoc;
    double energy = 0.0;     // total UE energy this slot, J
    int violations = 0;      // UAVs clamped at a boundary
    double uav_power = 0.0;  // summed propulsion power, W (3-D mode)
    double reward = 0.0;     // raw reward, J-scaled
};

struct EpisodeLog {
    std::vector<SlotResult> slots;
    std::vector<std::vector<UavState>> uav_states;  // [slot][uav], post-move
    double sum_energy = 0.0;
    double sum_reward = 0.0;
};

class Env {
public:
    explicit Env(const Scenario& sc) : sc_(&sc) {}

    void reset(const std::vector<Vec2>& takeoff) {
        world_.ues = sc_->ues;
        world_.uavs.clear();
        const double z0 = 75.0;
        for (const auto& p : takeoff)
            world_.uavs.push_back({p.x, p.y, z0, sc_->cfg.sys.e_max});
        slot_ = 0;
    }

    const WorldState& world() const { return world_; }
    std::size_t slot() const { return slot_; }
    bool done() const { return slot_ >= static_cast<std::size_t>(sc_->cfg.slots); }

    SlotResult step(const std::vector<UavAction>& actions) {
        const auto& cfg = sc_->cfg;
        SlotResult out;
        for (std::size_t j = 0; j < world_.uavs.size(); ++j) {
            const auto kin = apply_action(world_.uavs[j], actions[j], cfg.sys,
                                          cfg.mode, cfg.strict_paper_z);
            const double battery = world_.uavs[j].battery_j;
            world_.uavs[j] = kin.state;
            world_.uavs[j].battery_j = battery;
            if (kin.violated) ++out.violations;
            if (cfg.mode == ChannelMode::Atg3d) {
                const double v = actions[j].dist / cfg.sys.t_max;
                const double power = propulsion_power(v, actions[j].theta_v, cfg.prop);
                out.uav_power += power;
                world_.uavs[j].battery_j =
                    battery_step(battery, power, cfg.sys.t_max).remaining;
            }
        }
        const auto& tasks = sc_->tasks[slot_];
        const auto prefs =
            build_preferences(world_, tasks, cfg.sys, cfg.mode, cfg.atg);
        out.assoc = match(prefs, cfg.sys, world_.ues.size());
        out.energy = slot_energy(out.assoc, tasks, world_, cfg.sys, cfg.mode, cfg.atg);
        out.reward = episode_reward(out, cfg);
        ++slot_;
        return out;
    }

    static double episode_reward(const SlotResult& r, const ScenarioConfig& cfg) {
        double z = -r.energy - cfg.sys.penalty * r.violations;
        if (cfg.mode == ChannelMode::Atg3d)
            z -= cfg.sys.k_z * r.uav_power * cfg.sys.t_max;
        return z;
    }

private:
    const Scenario* sc_;
    WorldState world_;
    std::size_t slot_ = 0;
};

using Policy =
    std::function<std::vector<UavAction>(const WorldState&, std::size_t slot)>;

inline EpisodeLog run_policy(const Scenario& sc, const std::vector<Vec2>& takeoff,
                             const Policy& policy) {
    Env env(sc);
    env.reset(takeoff);
    EpisodeLog log;
    while (!env.done()) {
        const auto actions = policy(env.world(), env.slot());
        SlotResult r = env.step(actions);
        log.sum_energy += r.energy;
        log.sum_reward += r.reward;
        log.uav_states.push_back(env.world().uavs);
        log.slots.push_back(std::move(r));
    }
    return log;
}

}  // namespace fmec
