#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fmec/cat.hpp"

using namespace fmec;
using Catch::Approx;

namespace {

std::vector<UserEquipment> random_ues(std::uint64_t seed, int n,
                                      const SystemParams& sys) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, sys.x_max);
    std::uniform_real_distribution<double> uy(0.0, sys.y_max);
    std::vector<UserEquipment> ues(static_cast<std::size_t>(n));
    for (auto& ue : ues) ue.position = {ux(rng), uy(rng)};
    return ues;
}

std::vector<std::vector<Task>> random_tasks(std::uint64_t seed, int slots, int n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(8e4, 4e5);
    std::uniform_real_distribution<double> uf(2e9, 2e10);
    std::vector<std::vector<Task>> tasks(static_cast<std::size_t>(slots));
    for (auto& slot : tasks) {
        slot.resize(static_cast<std::size_t>(n));
        for (auto& t : slot) t = {ud(rng), uf(rng)};
    }
    return tasks;
}

// Exhaustive minimum over all (M+1)^N assignments for one slot.
double brute_force_slot(const std::vector<UserEquipment>& ues,
                        const std::vector<Task>& tasks,
                        const std::vector<Vec2>& uav_pos, double z,
                        const SystemParams& sys) {
    const std::size_t n = ues.size();
    const std::size_t m = uav_pos.size();
    const double r_max = coverage_radius(z, sys.theta_max);
    double best = std::numeric_limits<double>::infinity();
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= m + 1;
    for (std::size_t code = 0; code < combos; ++code) {
        std::size_t c = code;
        double energy = 0.0;
        std::vector<int> count(m, 0);
        std::vector<double> cpu(m, 0.0);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            const int choice = static_cast<int>(c % (m + 1)) - 1;
            c /= m + 1;
            if (choice < 0) {
                energy += local_energy(tasks[i], ues[i], sys.t_max).energy;
                continue;
            }
            const auto j = static_cast<std::size_t>(choice);
            if (dist2(ues[i].position, uav_pos[j]) > r_max * r_max) { ok = false; break; }
            UavState uav{uav_pos[j].x, uav_pos[j].y, z};
            const double rate = free_space_rate(ues[i], uav, sys);
            const auto f = required_cpu(tasks[i], rate, sys.t_max);
            if (!f) { ok = false; break; }
            cpu[j] += *f;
            ++count[j];
            energy += offload_cost(tasks[i], rate, *f, ues[i].tx_power, sys.t_max).e_tr;
        }
        if (!ok) continue;
        for (std::size_t j = 0; j < m; ++j)
            if (count[j] > sys.v_cap || cpu[j] > sys.f_max) ok = false;
        if (ok && energy < best) best = energy;
    }
    return best;
}

}  // namespace

TEST_CASE("linearization is tight at the expansion point and below the rate") {
    SystemParams sys;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> ux(0.0, sys.x_max);
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec2 q{ux(rng), ux(rng)};
        const Vec2 g_ref{ux(rng), ux(rng)};
        const Vec2 g{ux(rng), ux(rng)};
        UserEquipment ue;
        ue.position = q;
        const double z = 75.0;
        const auto coeff = sca_coeffs(dist2(q, g_ref), z, ue.tx_power, sys);
        CHECK(coeff.k < 0.0);

        UavState at_ref{g_ref.x, g_ref.y, z};
        const double rate_ref = free_space_rate(ue, at_ref, sys);
        CHECK(sca_rate_bound(coeff, dist2(q, g_ref), dist2(q, g_ref)) ==
              Approx(rate_ref).epsilon(1e-9));

        UavState at_g{g.x, g.y, z};
        const double rate = free_space_rate(ue, at_g, sys);
        CHECK(sca_rate_bound(coeff, dist2(q, g), dist2(q, g_ref)) <=
              rate + 1e-9 * std::max(1.0, rate));
    }
}

TEST_CASE("linearize fills the whole tensor consistently") {
    SystemParams sys;
    const auto ues = random_ues(5, 4, sys);
    Trajectory traj = circle_trajectory(ues, 80.0, 3, 2, sys);
    const auto lin = linearize(traj, ues, sys);
    REQUIRE(lin.coeff.size() == 3);
    for (std::size_t t = 1; t <= 3; ++t)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t i = 0; i < 4; ++i) {
                const auto& c = lin.coeff[t - 1][j][i];
                UavState uav{traj.pos[j][t].x, traj.pos[j][t].y, traj.z};
                CHECK(c.b == Approx(free_space_rate(ues[i], uav, sys)).epsilon(1e-12));
                CHECK(c.k < 0.0);
            }
}

TEST_CASE("branch-and-bound equals exhaustive enumeration") {
    SystemParams sys;
    sys.v_cap = 2;
    sys.f_max = 3e10;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto ues = random_ues(seed, 6, sys);
        const auto tasks = random_tasks(seed + 5000, 1, 6);
        std::mt19937_64 rng(seed + 999);
        std::uniform_real_distribution<double> ux(0.0, sys.x_max);
        std::vector<Vec2> uav_pos{{ux(rng), ux(rng)}, {ux(rng), ux(rng)}};
        const auto slot = solve_slot_assignment(ues, tasks[0], uav_pos, 75.0, sys);
        const double oracle = brute_force_slot(ues, tasks[0], uav_pos, 75.0, sys);
        CHECK(slot.energy == Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("all UEs outside coverage stay local") {
    SystemParams sys;
    std::vector<UserEquipment> ues(3);
    ues[0].position = {0.0, 0.0};
    ues[1].position = {0.0, 10.0};
    ues[2].position = {10.0, 0.0};
    std::vector<Task> tasks{{4e5, 2e9}, {4e5, 2e9}, {4e5, 2e9}};
    const std::vector<Vec2> uav_pos{{390.0, 390.0}};
    const auto slot = solve_slot_assignment(ues, tasks, uav_pos, 75.0, sys);
    double local = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        local += local_energy(tasks[i], ues[i], sys.t_max).energy;
    CHECK(slot.energy == Approx(local));
    for (int a : slot.assoc.assign) CHECK(a == -1);
}

TEST_CASE("V^max = 0 forces all local") {
    SystemParams sys;
    sys.v_cap = 0;
    const auto ues = random_ues(3, 4, sys);
    const auto tasks = random_tasks(4, 1, 4);
    const std::vector<Vec2> uav_pos{{ues[0].position.x, ues[0].position.y}};
    const auto slot = solve_slot_assignment(ues, tasks[0], uav_pos, 75.0, sys);
    for (int a : slot.assoc.assign) CHECK(a == -1);
}

TEST_CASE("trajectory solver is stationary at the overhead point") {
    SystemParams sys;
    sys.d_max = 150.0;
    std::vector<UserEquipment> ues(1);
    ues[0].position = {200.0, 200.0};
    std::vector<std::vector<Task>> tasks{{{4e5, 2e9}}};
    Trajectory traj;
    traj.z = 75.0;
    traj.pos = {{{200.0, 200.0}, {200.0, 200.0}}};
    const auto [assocs, obj] = solve_assignment(traj, tasks, ues, sys);
    REQUIRE(assocs[0].assign[0] == 0);
    const auto next = solve_trajectory(assocs, traj, tasks, ues, sys);
    CHECK(next.pos[0][1].x == Approx(200.0).margin(1e-6));
    CHECK(next.pos[0][1].y == Approx(200.0).margin(1e-6));
    (void)obj;
}

TEST_CASE("trajectory solver moves toward an offset UE and beats a grid oracle") {
    SystemParams sys;
    sys.d_max = 150.0;
    std::vector<UserEquipment> ues(1);
    ues[0].position = {260.0, 200.0};
    std::vector<std::vector<Task>> tasks{{{4e5, 2e9}}};
    Trajectory traj;
    traj.z = 75.0;
    traj.pos = {{{200.0, 200.0}, {200.0, 200.0}}};
    const auto [assocs, obj0] = solve_assignment(traj, tasks, ues, sys);
    REQUIRE(assocs[0].assign[0] == 0);

    const auto next = solve_trajectory(assocs, traj, tasks, ues, sys);
    auto objective_at = [&](Vec2 g) {
        UavState uav{g.x, g.y, traj.z};
        const double rate = free_space_rate(ues[0], uav, sys);
        return ues[0].tx_power * tasks[0][0].data_bits / rate;
    };
    const double before = objective_at(traj.pos[0][1]);
    const double after = objective_at(next.pos[0][1]);
    CHECK(after < before);
    CHECK(next.pos[0][1].x > 210.0);  // moved toward the UE

    // dense grid over the reachable disc at 1 m resolution
    double grid_best = std::numeric_limits<double>::infinity();
    for (double gx = 50.0; gx <= 350.0; gx += 1.0)
        for (double gy = 50.0; gy <= 350.0; gy += 1.0) {
            const Vec2 g{gx, gy};
            if (dist2(g, traj.pos[0][0]) > sys.d_max * sys.d_max) continue;
            if (dist2(g, ues[0].position) > 75.0 * 75.0) continue;  // keep coverage
            grid_best = std::min(grid_best, objective_at(g));
        }
    CHECK(after <= grid_best * (1.0 + 1e-3));
}

TEST_CASE("d_max = 0 freezes the trajectory") {
    SystemParams sys;
    sys.d_max = 0.0;
    std::vector<UserEquipment> ues(1);
    ues[0].position = {230.0, 200.0};
    std::vector<std::vector<Task>> tasks{{{4e5, 2e9}}};
    Trajectory traj;
    traj.z = 75.0;
    traj.pos = {{{200.0, 200.0}, {200.0, 200.0}}};
    const auto [assocs, obj] = solve_assignment(traj, tasks, ues, sys);
    const auto next = solve_trajectory(assocs, traj, tasks, ues, sys);
    CHECK(next.pos[0][1].x == Approx(200.0).margin(1e-12));
    CHECK(next.pos[0][1].y == Approx(200.0).margin(1e-12));
    (void)obj;
}

TEST_CASE("zero tasks stop the BCD immediately") {
    SystemParams sys;
    std::vector<UserEquipment> ues = random_ues(9, 4, sys);
    std::vector<std::vector<Task>> tasks(5, std::vector<Task>(4));
    Trajectory traj = circle_trajectory(ues, 80.0, 5, 1, sys);
    const auto trace = run_cat(traj, tasks, ues, sys);
    REQUIRE(trace.objective.size() == 1);
    CHECK(trace.objective[0] == 0.0);
}

TEST_CASE("BCD objective is non-increasing") {
    SystemParams sys;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto ues = random_ues(seed, 10, sys);
        const auto tasks = random_tasks(seed + 77, 6, 10);
        const Trajectory traj = circle_trajectory(ues, 80.0, 6, 1, sys);
        const auto trace = run_cat(traj, tasks, ues, sys);
        REQUIRE_FALSE(trace.objective.empty());
        for (std::size_t r = 1; r < trace.objective.size(); ++r)
            CHECK(trace.objective[r] <=
                  trace.objective[r - 1] * (1.0 + 1e-6) + 1e-12);
        CHECK(trace.objective.back() <= trace.objective.front() * (1.0 + 1e-6));
        CHECK(trajectory_feasible(trace.final_trajectory, sys));
    }
}

TEST_CASE("different initial radii all yield monotone traces") {
    SystemParams sys;
    const auto ues = random_ues(21, 8, sys);
    const auto tasks = random_tasks(22, 4, 8);
    for (double radius : {80.0, 100.0, 120.0}) {
        const Trajectory traj = circle_trajectory(ues, radius, 4, 2, sys);
        CHECK(trajectory_feasible(traj, sys));
        const auto trace = run_cat(traj, tasks, ues, sys);
        for (std::size_t r = 1; r < trace.objective.size(); ++r)
            CHECK(trace.objective[r] <=
                  trace.objective[r - 1] * (1.0 + 1e-6) + 1e-12);
        CHECK(trace.objective.size() <= 10);
    }
}

TEST_CASE("cluster trajectory respects the step-length bound") {
    SystemParams sys;
    const auto ues = random_ues(30, 12, sys);
    const Trajectory traj = cluster_trajectory(ues, 6, 20, 2, sys, 5);
    CHECK(trajectory_feasible(traj, sys));
}
