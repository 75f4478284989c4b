#pragma once

// Block coordinate descent for the joint association/trajectory problem:
// exact per-slot assignment by branch-and-bound, then a trajectory update
// on the SCA-linearized rate bound via projected gradient descent with an
// exterior penalty on the deadline/coverage constraints.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "fmec/kmeans.hpp"
#include "fmec/matching.hpp"
#include "fmec/model.hpp"

namespace fmec {

// Waypoints per UAV; pos[j][0] is the fixed takeoff point, pos[j][1..T]
// are the optimized slot positions. Altitude is fixed (2-D problem).
struct Trajectory {
    std::vector<std::vector<Vec2>> pos;
    double z = 75.0;

    std::size_t uavs() const { return pos.size(); }
    std::size_t slots() const { return pos.empty() ? 0 : pos[0].size() - 1; }
};

inline bool trajectory_feasible(const Trajectory& traj, const SystemParams& sys,
                                double tol = 1e-9) {
    for (const auto& path : traj.pos) {
        for (std::size_t t = 0; t < path.size(); ++t) {
            if (path[t].x < -tol || path[t].x > sys.x_max + tol) return false;
            if (path[t].y < -tol || path[t].y > sys.y_max + tol) return false;
            if (t > 0 && dist2(path[t], path[t - 1]) >
                             sys.d_max * sys.d_max * (1.0 + tol) + tol)
                return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Assignment subproblem (per-slot exact optimum)

namespace detail {

struct AssignOption {
    int uav = -1;        // -1 = local
    double saving = 0.0; // E^L - E^Tr
    double e_tr = 0.0;
    double f_req = 0.0;
};

// Offloading choices that could ever beat local execution for one UE.
inline std::vector<AssignOption> ue_options(const UserEquipment& ue,
                                            const Task& task,
                                            const std::vector<Vec2>& uav_pos,
                                            double z, const SystemParams& sys) {
    std::vector<AssignOption> opts;
    opts.push_back({});  // local
    if (task.empty()) return opts;
    const double r_max = coverage_radius(z, sys.theta_max);
    const double e_local = local_energy(task, ue, sys.t_max).energy;
    for (std::size_t j = 0; j < uav_pos.size(); ++j) {
        if (dist2(ue.position, uav_pos[j]) > r_max * r_max) continue;
        UavState uav{uav_pos[j].x, uav_pos[j].y, z};
        const double rate = free_space_rate(ue, uav, sys);
        const auto f_req = required_cpu(task, rate, sys.t_max);
        if (!f_req || *f_req > sys.f_max) continue;
        const double e_tr = offload_cost(task, rate, *f_req, ue.tx_power, sys.t_max).e_tr;
        if (e_tr < e_local)
            opts.push_back({static_cast<int>(j), e_local - e_tr, e_tr, *f_req});
    }
    std::sort(opts.begin(), opts.end(),
              [](const AssignOption& a, const AssignOption& b) {
                  if (a.saving != b.saving) return a.saving > b.saving;
                  return a.uav < b.uav;
              });
    return opts;
}

struct BnbState {
    std::vector<std::vector<AssignOption>> opts;  // per UE, sorted by saving
    std::vector<std::size_t> order;               // UE visit order
    std::vector<double> suffix_best;              // bound: sum of best savings
    std::vector<int> cap_v;
    std::vector<double> cap_f;
    std::vector<int> pick;  // option index per UE (by position in order)
    std::vector<int> best_pick;
    double best_saving = 0.0;

    void dfs(std::size_t depth, double saving) {
        if (depth == order.size()) {
            if (saving > best_saving) { best_saving = saving; best_pick = pick; }
            return;
        }
        if (saving + suffix_best[depth] <= best_saving) return;  // bound
        const auto& options = opts[order[depth]];
        for (std::size_t o = 0; o < options.size(); ++o) {
            const AssignOption& opt = options[o];
            if (opt.uav >= 0) {
                if (cap_v[static_cast<std::size_t>(opt.uav)] <= 0) continue;
                if (cap_f[static_cast<std::size_t>(opt.uav)] < opt.f_req) continue;
                --cap_v[static_cast<std::size_t>(opt.uav)];
                cap_f[static_cast<std::size_t>(opt.uav)] -= opt.f_req;
            }
            pick[depth] = static_cast<int>(o);
            dfs(depth + 1, saving + opt.saving);
            if (opt.uav >= 0) {
                ++cap_v[static_cast<std::size_t>(opt.uav)];
                cap_f[static_cast<std::size_t>(opt.uav)] += opt.f_req;
            }
        }
    }
};

}  // namespace detail

struct SlotAssignment {
    Association assoc;
    double energy = 0.0;  // total UE energy this slot
};

// Exact slot optimum: maximize total saving subject to per-UAV V^max and
// f^max, by depth-first branch-and-bound with a best-case-savings bound.
inline SlotAssignment solve_slot_assignment(const std::vector<UserEquipment>& ues,
                                            const std::vector<Task>& tasks,
                                            const std::vector<Vec2>& uav_pos,
                                            double z, const SystemParams& sys) {
    detail::BnbState st;
    st.opts.resize(ues.size());
    double local_total = 0.0;
    for (std::size_t i = 0; i < ues.size(); ++i) {
        st.opts[i] = detail::ue_options(ues[i], tasks[i], uav_pos, z, sys);
        local_total += local_energy(tasks[i], ues[i], sys.t_max).energy;
    }
    st.order.resize(ues.size());
    for (std::size_t i = 0; i < st.order.size(); ++i) st.order[i] = i;
    std::sort(st.order.begin(), st.order.end(), [&](std::size_t a, std::size_t b) {
        return st.opts[a][0].saving > st.opts[b][0].saving;
    });
    st.suffix_best.assign(ues.size() + 1, 0.0);
    for (std::size_t d = ues.size(); d-- > 0;)
        st.suffix_best[d] = st.suffix_best[d + 1] + st.opts[st.order[d]][0].saving;
    st.cap_v.assign(uav_pos.size(), sys.v_cap);
    st.cap_f.assign(uav_pos.size(), sys.f_max);
    st.pick.assign(ues.size(), 0);
    st.best_pick = st.pick;
    st.best_saving = -1.0;  // all-local (saving 0) must be discoverable
    st.dfs(0, 0.0);

    SlotAssignment out;
    out.assoc.assign.assign(ues.size(), -1);
    out.assoc.cpu_share.assign(ues.size(), 0.0);
    double saving = 0.0;
    for (std::size_t d = 0; d < st.order.size(); ++d) {
        const auto& opt = st.opts[st.order[d]][static_cast<std::size_t>(st.best_pick[d])];
        if (opt.uav >= 0) {
            out.assoc.assign[st.order[d]] = opt.uav;
            out.assoc.cpu_share[st.order[d]] = opt.f_req;
            saving += opt.saving;
        }
    }
    out.energy = local_total - saving;
    return out;
}

inline std::pair<std::vector<Association>, double> solve_assignment(
    const Trajectory& traj, const std::vector<std::vector<Task>>& tasks,
    const std::vector<UserEquipment>& ues, const SystemParams& sys) {
    std::vector<Association> assocs;
    double total = 0.0;
    const std::size_t slots = traj.slots();
    for (std::size_t t = 1; t <= slots; ++t) {
        std::vector<Vec2> uav_pos(traj.uavs());
        for (std::size_t j = 0; j < traj.uavs(); ++j) uav_pos[j] = traj.pos[j][t];
        SlotAssignment slot =
            solve_slot_assignment(ues, tasks[t - 1], uav_pos, traj.z, sys);
        total += slot.energy;
        assocs.push_back(std::move(slot.assoc));
    }
    return {std::move(assocs), total};
}

// ---------------------------------------------------------------------------
// SCA linearization of the rate in the squared distance

struct ScaCoeff {
    double k = 0.0;  // slope w.r.t. squared distance, always <= 0
    double b = 0.0;  // rate at the expansion point, bits/s
};

inline ScaCoeff sca_coeffs(double dist2_ref, double z, double tx_power,
                           const SystemParams& sys) {
    const double ap = sys.alpha() * tx_power;
    const double h = z * z + dist2_ref;
    ScaCoeff c;
    c.k = -sys.bandwidth * ap * std::log2(std::exp(1.0)) / (h * (h + ap));
    c.b = sys.bandwidth * std::log2(1.0 + ap / h);
    return c;
}

// Concave lower bound on the rate at squared distance d2, expanded at d2_ref.
inline double sca_rate_bound(const ScaCoeff& c, double d2, double d2_ref) {
    return c.k * (d2 - d2_ref) + c.b;
}

// Full coefficient tensor, indexed [slot][uav][ue].
struct ScaLinearization {
    std::vector<std::vector<std::vector<ScaCoeff>>> coeff;
};

inline ScaLinearization linearize(const Trajectory& traj,
                                  const std::vector<UserEquipment>& ues,
                                  const SystemParams& sys) {
    ScaLinearization lin;
    const std::size_t slots = traj.slots();
    lin.coeff.resize(slots);
    for (std::size_t t = 1; t <= slots; ++t) {
        lin.coeff[t - 1].resize(traj.uavs());
        for (std::size_t j = 0; j < traj.uavs(); ++j) {
            lin.coeff[t - 1][j].resize(ues.size());
            for (std::size_t i = 0; i < ues.size(); ++i) {
                const double d2 = dist2(ues[i].position, traj.pos[j][t]);
                lin.coeff[t - 1][j][i] =
                    sca_coeffs(d2, traj.z, ues[i].tx_power, sys);
            }
        }
    }
    return lin;
}

// ---------------------------------------------------------------------------
// Trajectory subproblem

namespace detail {

struct MatchedTerm {
    std::size_t ue;
    double d_bits;
    double rhs_rate;   // minimal rate meeting the deadline with granted f_C
    double tx_power;
    ScaCoeff coeff;
    double d2_ref;
};

// True objective of the fixed association at trajectory G, with CPU shares
// re-tightened to the deadline. Infinite when the association is infeasible.
inline double true_objective(const Trajectory& traj,
                             const std::vector<Association>& assocs,
                             const std::vector<std::vector<Task>>& tasks,
                             const std::vector<UserEquipment>& ues,
                             const SystemParams& sys) {
    const double r_max = coverage_radius(traj.z, sys.theta_max);
    double total = 0.0;
    for (std::size_t t = 1; t <= traj.slots(); ++t) {
        std::vector<double> cpu(traj.uavs(), 0.0);
        for (std::size_t i = 0; i < ues.size(); ++i) {
            const Task& task = tasks[t - 1][i];
            const int j = assocs[t - 1].assign[i];
            if (j < 0) {
                total += local_energy(task, ues[i], sys.t_max).energy;
                continue;
            }
            const Vec2& g = traj.pos[static_cast<std::size_t>(j)][t];
            if (dist2(ues[i].position, g) > r_max * r_max * (1.0 + 1e-12))
                return std::numeric_limits<double>::infinity();
            UavState uav{g.x, g.y, traj.z};
            const double rate = free_space_rate(ues[i], uav, sys);
            const auto f_req = required_cpu(task, rate, sys.t_max);
            if (!f_req) return std::numeric_limits<double>::infinity();
            cpu[static_cast<std::size_t>(j)] += *f_req;
            total += offload_cost(task, rate, *f_req, ues[i].tx_power, sys.t_max).e_tr;
        }
        for (double used : cpu)
            if (used > sys.f_max * (1.0 + 1e-9))
                return std::numeric_limits<double>::infinity();
    }
    return total;
}

}  // namespace detail

// Approximate solve of the convexified trajectory subproblem. Returns a
// feasible trajectory whose true objective does not exceed that of the
// expansion point; falls back to the expansion point itself otherwise.
inline Trajectory solve_trajectory(const std::vector<Association>& assocs,
                                   const Trajectory& traj_ref,
                                   const std::vector<std::vector<Task>>& tasks,
                                   const std::vector<UserEquipment>& ues,
                                   const SystemParams& sys,
                                   double eps1 = 1e-4) {
    const std::size_t slots = traj_ref.slots();
    const std::size_t m = traj_ref.uavs();
    const double r_max2 = [&] {
        const double r = coverage_radius(traj_ref.z, sys.theta_max);
        return r * r;
    }();

    // Collect matched terms per (slot, uav), with linearization at traj_ref.
    std::vector<std::vector<std::vector<detail::MatchedTerm>>> terms(slots);
    for (std::size_t t = 1; t <= slots; ++t) {
        terms[t - 1].resize(m);
        for (std::size_t i = 0; i < ues.size(); ++i) {
            const int j = assocs[t - 1].assign[i];
            if (j < 0) continue;
            const Task& task = tasks[t - 1][i];
            const double f_c = assocs[t - 1].cpu_share[i];
            const double slack = sys.t_max - task.cpu_cycles / f_c;
            detail::MatchedTerm mt;
            mt.ue = i;
            mt.d_bits = task.data_bits;
            mt.rhs_rate = slack > 0.0 ? task.data_bits / slack
                                      : std::numeric_limits<double>::infinity();
            mt.tx_power = ues[i].tx_power;
            mt.d2_ref = dist2(ues[i].position,
                              traj_ref.pos[static_cast<std::size_t>(j)][t]);
            mt.coeff = sca_coeffs(mt.d2_ref, traj_ref.z, mt.tx_power, sys);
            terms[t - 1][static_cast<std::size_t>(j)].push_back(mt);
        }
    }

    constexpr double kRateFloor = 1e3;  // bits/s, keeps 1/w bounded

    // Surrogate energy for one matched term at squared distance d2, with a
    // linear continuation below the floor so the gradient still pushes back.
    auto term_value = [&](const detail::MatchedTerm& mt, double d2, double& dE_dd2) {
        const double w = sca_rate_bound(mt.coeff, d2, mt.d2_ref);
        const double pd = mt.tx_power * mt.d_bits;
        if (w >= kRateFloor) {
            dE_dd2 = -pd / (w * w) * mt.coeff.k;
            return pd / w;
        }
        dE_dd2 = -pd / (kRateFloor * kRateFloor) * mt.coeff.k;
        return pd / kRateFloor + pd / (kRateFloor * kRateFloor) * (kRateFloor - w);
    };

    // Penalized surrogate objective and its gradient over the free waypoints.
    auto evaluate = [&](const Trajectory& g, double mu,
                        std::vector<std::vector<Vec2>>* grad) {
        double value = 0.0;
        if (grad)
            for (auto& per_uav : *grad)
                for (auto& v : per_uav) v = {0.0, 0.0};
        for (std::size_t t = 1; t <= slots; ++t) {
            for (std::size_t j = 0; j < m; ++j) {
                const Vec2& p = g.pos[j][t];
                for (const auto& mt : terms[t - 1][j]) {
                    const Vec2& q = ues[mt.ue].position;
                    const double d2 = dist2(q, p);
                    double dE_dd2 = 0.0;
                    value += term_value(mt, d2, dE_dd2);
                    double dPen_dd2 = 0.0;
                    // deadline: w_lb >= rhs_rate, normalized by rhs
                    const double w = sca_rate_bound(mt.coeff, d2, mt.d2_ref);
                    if (std::isfinite(mt.rhs_rate) && w < mt.rhs_rate) {
                        const double gap = (mt.rhs_rate - w) / mt.rhs_rate;
                        value += mu * gap * gap;
                        dPen_dd2 += mu * 2.0 * gap * (-mt.coeff.k / mt.rhs_rate);
                    }
                    // coverage: d2 <= R_max^2, normalized by R_max^2
                    if (d2 > r_max2) {
                        const double gap = (d2 - r_max2) / r_max2;
                        value += mu * gap * gap;
                        dPen_dd2 += mu * 2.0 * gap / r_max2;
                    }
                    if (grad) {
                        const double coef = 2.0 * (dE_dd2 + dPen_dd2);
                        (*grad)[j][t].x += coef * (p.x - q.x);
                        (*grad)[j][t].y += coef * (p.y - q.y);
                    }
                }
            }
        }
        return value;
    };

    // Project waypoints onto the box and the per-slot step-length discs,
    // sweeping forward from the fixed takeoff point.
    auto project = [&](Trajectory& g) {
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t t = 1; t <= slots; ++t) {
                Vec2& p = g.pos[j][t];
                p.x = std::clamp(p.x, 0.0, sys.x_max);
                p.y = std::clamp(p.y, 0.0, sys.y_max);
                const Vec2& prev = g.pos[j][t - 1];
                const double step = std::sqrt(dist2(p, prev));
                if (step > sys.d_max && step > 0.0) {
                    const double s = sys.d_max / step;
                    p.x = prev.x + (p.x - prev.x) * s;
                    p.y = prev.y + (p.y - prev.y) * s;
                    p.x = std::clamp(p.x, 0.0, sys.x_max);
                    p.y = std::clamp(p.y, 0.0, sys.y_max);
                }
            }
        }
    };

    Trajectory best = traj_ref;
    const double ref_true = detail::true_objective(traj_ref, assocs, tasks, ues, sys);

    Trajectory cur = traj_ref;
    double mu = 1.0;
    for (int round = 0; round < 8; ++round, mu *= 10.0) {
        std::vector<std::vector<Vec2>> grad(m, std::vector<Vec2>(slots + 1));
        double value = evaluate(cur, mu, &grad);
        double step = 1.0;  // meters-scale initial step
        for (int it = 0; it < 200; ++it) {
            double gnorm2 = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t t = 1; t <= slots; ++t)
                    gnorm2 += grad[j][t].x * grad[j][t].x + grad[j][t].y * grad[j][t].y;
            if (gnorm2 < 1e-18) break;
            const double scale = std::sqrt(gnorm2);
            bool accepted = false;
            while (step > 1e-8) {
                Trajectory cand = cur;
                for (std::size_t j = 0; j < m; ++j)
                    for (std::size_t t = 1; t <= slots; ++t) {
                        cand.pos[j][t].x -= step / scale * grad[j][t].x * sys.d_max;
                        cand.pos[j][t].y -= step / scale * grad[j][t].y * sys.d_max;
                    }
                project(cand);
                const double cand_value = evaluate(cand, mu, nullptr);
                if (cand_value < value) {
                    const double improve = value - cand_value;
                    cur = std::move(cand);
                    value = cand_value;
                    evaluate(cur, mu, &grad);
                    accepted = true;
                    step = std::min(step * 2.0, 4.0);
                    if (improve < eps1 * (std::abs(value) + 1e-12)) it = 200;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
        }
        const double cand_true = detail::true_objective(cur, assocs, tasks, ues, sys);
        const double best_true = detail::true_objective(best, assocs, tasks, ues, sys);
        if (cand_true <= best_true && trajectory_feasible(cur, sys)) best = cur;
    }

    const double best_true = detail::true_objective(best, assocs, tasks, ues, sys);
    if (!(best_true <= ref_true)) return traj_ref;  // no-improvement fallback
    return best;
}

// ---------------------------------------------------------------------------
// Outer BCD loop

struct CatTrace {
    std::vector<double> objective;  // per-iteration total UE energy, J
    std::vector<double> wall_ms;
    Trajectory final_trajectory;
    std::vector<Association> final_assocs;
};

inline CatTrace run_cat(const Trajectory& initial,
                        const std::vector<std::vector<Task>>& tasks,
                        const std::vector<UserEquipment>& ues,
                        const SystemParams& sys, int max_iter = 10,
                        double tol = 1e-3, double eps1 = 1e-4);

// Circle around the UE centroid; UAVs are spread by phase. Chord length
// per slot is capped at d_max.
inline Trajectory circle_trajectory(const std::vector<UserEquipment>& ues,
                                    double radius, std::size_t slots,
                                    std::size_t n_uavs, const SystemParams& sys,
                                    double z = 75.0) {
    Vec2 center{sys.x_max / 2, sys.y_max / 2};
    if (!ues.empty()) {
        center = {0.0, 0.0};
        for (const auto& ue : ues) { center.x += ue.position.x; center.y += ue.position.y; }
        center.x /= static_cast<double>(ues.size());
        center.y /= static_cast<double>(ues.size());
    }
    double dtheta = 2.0 * kPi / static_cast<double>(slots);
    if (radius > 0.0)
        dtheta = std::min(dtheta, 2.0 * std::asin(std::min(1.0, sys.d_max / (2.0 * radius))));
    Trajectory traj;
    traj.z = z;
    traj.pos.resize(n_uavs);
    for (std::size_t j = 0; j < n_uavs; ++j) {
        const double phase = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n_uavs);
        traj.pos[j].resize(slots + 1);
        for (std::size_t t = 0; t <= slots; ++t) {
            const double a = phase + dtheta * static_cast<double>(t);
            traj.pos[j][t] = {
                std::clamp(center.x + radius * std::cos(a), 0.0, sys.x_max),
                std::clamp(center.y + radius * std::sin(a), 0.0, sys.y_max)};
        }
    }
    return traj;
}

// Piecewise-linear route through k-means cluster centers, step <= d_max.
inline Trajectory cluster_trajectory(const std::vector<UserEquipment>& ues,
                                     int n_clusters, std::size_t slots,
                                     std::size_t n_uavs, const SystemParams& sys,
                                     std::uint64_t seed, double z = 75.0) {
    std::vector<Vec2> pts(ues.size());
    for (std::size_t i = 0; i < ues.size(); ++i) pts[i] = ues[i].position;
    auto km = kmeans(pts, n_clusters, seed);
    std::vector<Vec2>& centers = km.centers;
    if (centers.empty()) centers.push_back({sys.x_max / 2, sys.y_max / 2});
    // Order centers as a nearest-neighbor path from the first one.
    for (std::size_t c = 1; c < centers.size(); ++c) {
        std::size_t nearest = c;
        for (std::size_t o = c + 1; o < centers.size(); ++o)
            if (dist2(centers[o], centers[c - 1]) < dist2(centers[nearest], centers[c - 1]))
                nearest = o;
        std::swap(centers[c], centers[nearest]);
    }

    const std::size_t legs = centers.size();
    const std::size_t per_leg = std::max<std::size_t>(1, slots / legs);
    Trajectory traj;
    traj.z = z;
    traj.pos.resize(n_uavs);
    for (std::size_t j = 0; j < n_uavs; ++j) {
        // Phase offset spreads UAVs across the route.
        const std::size_t start = legs * j / std::max<std::size_t>(1, n_uavs);
        traj.pos[j].resize(slots + 1);
        Vec2 cur = centers[start];
        traj.pos[j][0] = cur;
        for (std::size_t t = 1; t <= slots; ++t) {
            const Vec2 target = centers[((t - 1) / per_leg + start + 1) % legs];
            const double d = std::sqrt(dist2(cur, target));
            if (d > sys.d_max) {
                const double s = sys.d_max / d;
                cur = {cur.x + (target.x - cur.x) * s, cur.y + (target.y - cur.y) * s};
            } else {
                cur = target;
            }
            traj.pos[j][t] = cur;
        }
    }
    return traj;
}

inline CatTrace run_cat(const Trajectory& initial,
                        const std::vector<std::vector<Task>>& tasks,
                        const std::vector<UserEquipment>& ues,
                        const SystemParams& sys, int max_iter, double tol,
                        double eps1) {
    CatTrace trace;
    Trajectory traj = initial;
    double prev = std::numeric_limits<double>::infinity();
    for (int r = 0; r < max_iter; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        auto [assocs, objective] = solve_assignment(traj, tasks, ues, sys);
        trace.objective.push_back(objective);
        trace.final_assocs = assocs;
        trace.final_trajectory = traj;
        const auto t1 = std::chrono::steady_clock::now();
        trace.wall_ms.push_back(
            std::chrono::duration<double, std::milli>(t1 - t0).count());
        if (objective == 0.0) break;
        if (std::isfinite(prev) && std::abs(prev - objective) < tol * std::abs(prev))
            break;
        prev = objective;
        if (r + 1 < max_iter)
            traj = solve_trajectory(assocs, traj, tasks, ues, sys, eps1);
    }
    return trace;
}

}  // namespace fmec
