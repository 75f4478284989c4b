#pragma once

// Comparison policies: local execution (LE), random moving (RM), cluster
// moving (CM). All but LE share the matching algorithm and kinematics
// with the learned agent. The uniform-replay DDPG baseline is the agent
// itself with uniform_replay set.

#include <memory>
#include <random>
#include <vector>

#include "fmec/episode.hpp"
#include "fmec/kmeans.hpp"
#include "fmec/scenario.hpp"

namespace fmec {

// Every task runs on its own UE; no UAVs involved.
inline double run_le(const Scenario& sc) {
    double total = 0.0;
    for (const auto& slot : sc.tasks)
        for (std::size_t i = 0; i < slot.size(); ++i)
            total += local_energy(slot[i], sc.ues[i], sc.cfg.sys.t_max).energy;
    return total;
}

// Uniform random direction and distance each slot (plus vertical in 3-D).
inline EpisodeLog run_rm(const Scenario& sc, const std::vector<Vec2>& takeoff,
                         std::uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    const bool atg = sc.cfg.mode == ChannelMode::Atg3d;
    const double d_max = sc.cfg.sys.d_max;
    return run_policy(sc, takeoff, [rng, atg, d_max](const WorldState& w, std::size_t) {
        std::uniform_real_distribution<double> uh(0.0, 2.0 * kPi);
        std::uniform_real_distribution<double> uv(0.0, kPi);
        std::uniform_real_distribution<double> ud(0.0, d_max);
        std::vector<UavAction> actions(w.uavs.size());
        for (auto& a : actions) {
            a.theta_h = uh(*rng);
            if (atg) a.theta_v = uv(*rng);
            a.dist = ud(*rng);
        }
        return actions;
    });
}

// Route through seeded k-means cluster centers; each UAV enters the route
// at its nearest center (phase-offset by id on ties) and advances one
// center every slots/n_clusters slots, stepping at most d_max per slot.
inline EpisodeLog run_cm(const Scenario& sc, const std::vector<Vec2>& takeoff,
                         int n_clusters, std::uint64_t seed) {
    std::vector<Vec2> pts(sc.ues.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = sc.ues[i].position;
    auto km = kmeans(pts, n_clusters, seed);
    auto centers = std::make_shared<std::vector<Vec2>>(km.centers);
    if (centers->empty())
        centers->push_back({sc.cfg.sys.x_max / 2, sc.cfg.sys.y_max / 2});
    // nearest-neighbor ordering of the route
    for (std::size_t c = 1; c < centers->size(); ++c) {
        std::size_t nearest = c;
        for (std::size_t o = c + 1; o < centers->size(); ++o)
            if (dist2((*centers)[o], (*centers)[c - 1]) <
                dist2((*centers)[nearest], (*centers)[c - 1]))
                nearest = o;
        std::swap((*centers)[c], (*centers)[nearest]);
    }

    const std::size_t legs = centers->size();
    // slots per leg; the final leg absorbs any remainder
    const std::size_t per_leg =
        std::max<std::size_t>(1, static_cast<std::size_t>(sc.cfg.slots) / legs);
    auto start = std::make_shared<std::vector<std::size_t>>();
    for (std::size_t j = 0; j < takeoff.size(); ++j) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < legs; ++c)
            if (dist2(takeoff[j], (*centers)[c]) < dist2(takeoff[j], (*centers)[best]))
                best = c;
        // spread multiple UAVs over the route
        start->push_back((best + legs * j / std::max<std::size_t>(1, takeoff.size())) % legs);
    }

    const double d_max = sc.cfg.sys.d_max;
    return run_policy(sc, takeoff,
                      [centers, start, legs, per_leg, d_max](const WorldState& w,
                                                             std::size_t slot) {
        std::vector<UavAction> actions(w.uavs.size());
        for (std::size_t j = 0; j < w.uavs.size(); ++j) {
            const std::size_t leg = slot / per_leg;
            const Vec2 target = (*centers)[((*start)[j] + leg) % legs];
            const double dx = target.x - w.uavs[j].x;
            const double dy = target.y - w.uavs[j].y;
            const double d = std::sqrt(dx * dx + dy * dy);
            actions[j].theta_h = d > 0.0 ? std::atan2(dy, dx) : 0.0;
            if (actions[j].theta_h < 0.0) actions[j].theta_h += 2.0 * kPi;
            actions[j].dist = std::min(d, d_max);
        }
        return actions;
    });
}

}  // namespace fmec
