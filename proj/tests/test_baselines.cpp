#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fmec/baselines.hpp"

using namespace fmec;
using Catch::Approx;

namespace {

Scenario tiny_scenario(std::uint64_t seed, int n_ues = 6, int n_uavs = 1,
                       int slots = 10) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.n_ues = n_ues;
    cfg.n_uavs = n_uavs;
    cfg.slots = slots;
    return generate_scenario(cfg);
}

}  // namespace

TEST_CASE("local execution sums the fixed-deadline local energies") {
    // one UE, ten identical tasks of 2e9 cycles: E = k F^3 / T^2 = 0.8 J each
    Scenario sc;
    sc.cfg.n_ues = 1;
    sc.cfg.n_uavs = 1;
    sc.cfg.slots = 10;
    UserEquipment ue;
    ue.position = {100.0, 100.0};
    sc.ues.push_back(ue);
    sc.tasks.assign(10, {Task{4e5, 2e9}});
    CHECK(run_le(sc) == Approx(8.0).epsilon(1e-12));
}

TEST_CASE("random moving is reproducible and differs across seeds") {
    const auto sc = tiny_scenario(3);
    const auto a = run_rm(sc, sc.takeoffs[0], 17);
    const auto b = run_rm(sc, sc.takeoffs[0], 17);
    const auto c = run_rm(sc, sc.takeoffs[0], 18);
    CHECK(a.sum_energy == b.sum_energy);
    CHECK(a.sum_reward == b.sum_reward);
    REQUIRE(a.slots.size() == 10);
    // a different seed produces a different flight path
    bool diverged = false;
    for (std::size_t t = 0; t < a.uav_states.size(); ++t)
        if (a.uav_states[t][0].x != c.uav_states[t][0].x) diverged = true;
    CHECK(diverged);
}

TEST_CASE("random moving never exceeds all-local energy") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sc = tiny_scenario(seed);
        const auto rm = run_rm(sc, sc.takeoffs[0], seed + 100);
        CHECK(rm.sum_energy <= run_le(sc) + 1e-9);
    }
}

TEST_CASE("an unreachable UAV makes random moving equal local execution") {
    // shrink the box virtually by placing UEs far from the UAV and freezing it
    ScenarioConfig cfg;
    cfg.seed = 5;
    cfg.n_ues = 4;
    cfg.n_uavs = 1;
    cfg.slots = 5;
    cfg.sys.d_max = 0.0;  // UAV cannot move
    auto sc = generate_scenario(cfg);
    for (auto& ue : sc.ues) ue.position = {0.0, 0.0};
    const std::vector<Vec2> far{{sc.cfg.sys.x_max, sc.cfg.sys.y_max}};
    const auto rm = run_rm(sc, far, 9);
    CHECK(rm.sum_energy == Approx(run_le(sc)).epsilon(1e-12));
    for (const auto& slot : rm.slots)
        for (int a : slot.assoc.assign) CHECK(a == -1);
}

TEST_CASE("cluster moving visits cluster centers in order") {
    // 2 well-separated clusters, 20 slots -> 10 slots per leg
    ScenarioConfig cfg;
    cfg.seed = 6;
    cfg.n_ues = 8;
    cfg.n_uavs = 1;
    cfg.slots = 20;
    auto sc = generate_scenario(cfg);
    for (std::size_t i = 0; i < 4; ++i) sc.ues[i].position = {80.0, 80.0};
    for (std::size_t i = 4; i < 8; ++i) sc.ues[i].position = {240.0, 240.0};

    const auto log = run_cm(sc, {{80.0, 80.0}}, 2, 7);
    REQUIRE(log.uav_states.size() == 20);
    // first leg: stays at the nearest center
    CHECK(log.uav_states[0][0].x == Approx(80.0).margin(1.0));
    CHECK(log.uav_states[0][0].y == Approx(80.0).margin(1.0));
    CHECK(log.uav_states[9][0].x == Approx(80.0).margin(1.0));
    // second leg: walks 160*sqrt(2) m at up to d_max per slot and arrives
    CHECK(log.uav_states[19][0].x == Approx(240.0).margin(1.0));
    CHECK(log.uav_states[19][0].y == Approx(240.0).margin(1.0));
}

TEST_CASE("cluster moving with one degenerate cluster hovers over it") {
    ScenarioConfig cfg;
    cfg.seed = 8;
    cfg.n_ues = 5;
    cfg.n_uavs = 1;
    cfg.slots = 6;
    auto sc = generate_scenario(cfg);
    for (auto& ue : sc.ues) ue.position = {200.0, 150.0};
    const auto log = run_cm(sc, {{200.0, 150.0}}, 1, 3);
    for (const auto& states : log.uav_states) {
        CHECK(states[0].x == Approx(200.0).margin(1e-9));
        CHECK(states[0].y == Approx(150.0).margin(1e-9));
    }
    // hovering over a single hotspot serves everyone
    for (const auto& slot : log.slots)
        for (int a : slot.assoc.assign) CHECK(a == 0);
}

TEST_CASE("cluster moving beats random moving on clustered users") {
    // paired comparison over seeds; CM targets the mass, RM wanders
    double cm_total = 0.0, rm_total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ScenarioConfig cfg;
        cfg.seed = seed;
        cfg.n_ues = 12;
        cfg.n_uavs = 1;
        cfg.slots = 20;
        auto sc = generate_scenario(cfg);
        const auto cm = run_cm(sc, sc.takeoffs[0], 4, seed);
        const auto rm = run_rm(sc, sc.takeoffs[0], seed);
        cm_total += cm.sum_energy;
        rm_total += rm.sum_energy;
    }
    CHECK(cm_total < rm_total);
}

TEST_CASE("baseline steps respect the kinematic bound") {
    const auto sc = tiny_scenario(11, 8, 2, 15);
    const auto rm = run_rm(sc, sc.takeoffs[0], 1);
    const auto cm = run_cm(sc, sc.takeoffs[0], 3, 2);
    for (const auto* log : {&rm, &cm}) {
        std::vector<Vec2> prev;
        for (const auto& p : sc.takeoffs[0]) prev.push_back(p);
        for (const auto& states : log->uav_states) {
            for (std::size_t j = 0; j < states.size(); ++j) {
                const double dx = states[j].x - prev[j].x;
                const double dy = states[j].y - prev[j].y;
                CHECK(std::sqrt(dx * dx + dy * dy) <=
                      sc.cfg.sys.d_max * (1.0 + 1e-9));
                prev[j] = {states[j].x, states[j].y};
            }
        }
    }
}
