#pragma once

// Greedy preference-list matching: per-slot user association and CPU
// allocation for fixed UAV positions. UAVs take turns claiming the UE
// with the largest offloading saving; a UE switches only for a strictly
// cheaper upload.

#include <algorithm>
#include <vector>

#include "fmec/model.hpp"

namespace fmec {

struct Association {
    // assign[i] in {-1 = local, 0..M-1 = UAV index}
    std::vector<int> assign;
    // cpu_share[i] = f_C granted by the matched UAV, 0 when local
    std::vector<double> cpu_share;

    bool matched(std::size_t ue) const { return assign[ue] >= 0; }
};

struct PrefEntry {
    int ue = -1;
    double saving = 0.0;  // E^L - E^Tr, J
    double e_tr = 0.0;
    double f_req = 0.0;   // minimal CPU share meeting the deadline
};

using PreferenceList = std::vector<PrefEntry>;

inline std::vector<PreferenceList> build_preferences(
    const WorldState& world, const std::vector<Task>& tasks,
    const SystemParams& sys, ChannelMode mode,
    const AtgChannelParams& atg = {}) {
    std::vector<PreferenceList> prefs(world.uavs.size());
    for (std::size_t j = 0; j < world.uavs.size(); ++j) {
        const UavState& uav = world.uavs[j];
        const double r_max2 = [&] {
            const double r = coverage_radius(uav.z, sys.theta_max);
            return r * r;
        }();
        for (std::size_t i = 0; i < world.ues.size(); ++i) {
            const Task& task = tasks[i];
            if (task.empty()) continue;
            if (dist2(world.ues[i].position, Vec2{uav.x, uav.y}) > r_max2) continue;
            const double rate = channel_rate(world.ues[i], uav, sys, mode, atg);
            if (!(rate > 0.0)) continue;
            const auto f_req = required_cpu(task, rate, sys.t_max);
            if (!f_req || *f_req > sys.f_max) continue;
            const double e_local = local_energy(task, world.ues[i], sys.t_max).energy;
            const double e_tr =
                offload_cost(task, rate, *f_req, world.ues[i].tx_power, sys.t_max).e_tr;
            if (e_tr < e_local)
                prefs[j].push_back({static_cast<int>(i), e_local - e_tr, e_tr, *f_req});
        }
        std::sort(prefs[j].begin(), prefs[j].end(),
                  [](const PrefEntry& a, const PrefEntry& b) {
                      if (a.saving != b.saving) return a.saving > b.saving;
                      return a.ue < b.ue;
                  });
    }
    return prefs;
}

inline Association match(const std::vector<PreferenceList>& prefs,
                         const SystemParams& sys, std::size_t n_ues) {
    const std::size_t m = prefs.size();
    Association assoc;
    assoc.assign.assign(n_ues, -1);
    assoc.cpu_share.assign(n_ues, 0.0);
    std::vector<double> current_e_tr(n_ues, 0.0);
    std::vector<int> count(m, 0);
    std::vector<double> cpu_used(m, 0.0);
    std::vector<std::size_t> next(m, 0);  // cursor into each sorted list

    bool any_left = true;
    while (any_left) {
        any_left = false;
        for (std::size_t j = 0; j < m; ++j) {
            if (next[j] >= prefs[j].size()) continue;
            any_left = true;
            const PrefEntry& e = prefs[j][next[j]];
            ++next[j];  // each entry is visited exactly once
            if (count[j] >= sys.v_cap) continue;
            if (cpu_used[j] + e.f_req > sys.f_max) continue;
            const std::size_t i = static_cast<std::size_t>(e.ue);
            if (assoc.matched(i)) {
                if (!(e.e_tr < current_e_tr[i])) continue;
                const int old = assoc.assign[i];
                --count[old];
                cpu_used[old] -= assoc.cpu_share[i];
            }
            assoc.assign[i] = static_cast<int>(j);
            assoc.cpu_share[i] = e.f_req;
            current_e_tr[i] = e.e_tr;
            ++count[j];
            cpu_used[j] += e.f_req;
        }
    }
    return assoc;
}

// Total UE energy for one slot under a given association.
inline double slot_energy(const Association& assoc,
                          const std::vector<Task>& tasks,
                          const WorldState& world, const SystemParams& sys,
                          ChannelMode mode, const AtgChannelParams& atg = {}) {
    double total = 0.0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!assoc.matched(i)) {
            total += local_energy(tasks[i], world.ues[i], sys.t_max).energy;
        } else {
            const UavState& uav = world.uavs[static_cast<std::size_t>(assoc.assign[i])];
            const double rate = channel_rate(world.ues[i], uav, sys, mode, atg);
            total += offload_cost(tasks[i], rate, assoc.cpu_share[i],
                                  world.ues[i].tx_power, sys.t_max).e_tr;
        }
    }
    return total;
}

}  // namespace fmec
