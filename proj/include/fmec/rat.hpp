#pragma once

// DDPG agent with prioritized replay driving per-slot UAV actions. The
// actor emits [0,1] outputs that are affinely mapped onto the action
// ranges; the matching algorithm supplies association and CPU shares.

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "fmec/episode.hpp"
#include "fmec/nn.hpp"
#include "fmec/replay.hpp"
#include "fmec/scenario.hpp"

namespace fmec {

inline std::size_t state_dim(std::size_t n_uavs, ChannelMode mode) {
    return n_uavs * (mode == ChannelMode::FreeSpace2d ? 3 : 4);
}

inline std::size_t action_dim(std::size_t n_uavs, ChannelMode mode) {
    return n_uavs * (mode == ChannelMode::FreeSpace2d ? 2 : 3);
}

// Positions (and battery, in 3-D) normalized to [0,1] by their bounds.
inline std::vector<double> encode_state(const std::vector<UavState>& uavs,
                                        const SystemParams& sys,
                                        ChannelMode mode) {
    std::vector<double> s;
    s.reserve(state_dim(uavs.size(), mode));
    for (const auto& uav : uavs) {
        s.push_back(uav.x / sys.x_max);
        s.push_back(uav.y / sys.y_max);
        if (mode == ChannelMode::FreeSpace2d) {
            s.push_back(uav.z / sys.z_max);
        } else {
            s.push_back((uav.z - sys.z_min) / (sys.z_max - sys.z_min));
            s.push_back(uav.battery_j / sys.e_max);
        }
    }
    return s;
}

// How the actor's [0,1] outputs map onto physical movement commands.
// Polar: (heading fraction, distance fraction) and vertical-angle fraction
// in 3-D. Cartesian: displacement coordinates, each spanning
// [-d_max, d_max], norm-clamped to d_max; hover is the output midpoint and
// there is no angular wrap-around.
enum class ActionHead { Polar, Cartesian };

inline ActionHead parse_action_head(const std::string& s) {
    return s == "cartesian" ? ActionHead::Cartesian : ActionHead::Polar;
}

// Map a normalized [0,1] action vector onto physical ranges.
inline std::vector<UavAction> decode_action(const std::vector<double>& a,
                                            std::size_t n_uavs,
                                            const SystemParams& sys,
                                            ChannelMode mode,
                                            ActionHead head = ActionHead::Polar) {
    std::vector<UavAction> actions(n_uavs);
    const std::size_t per = action_dim(1, mode);
    for (std::size_t j = 0; j < n_uavs; ++j) {
        if (head == ActionHead::Cartesian) {
            const double dx = (2.0 * a[j * per] - 1.0) * sys.d_max;
            const double dy = (2.0 * a[j * per + 1] - 1.0) * sys.d_max;
            const double dz = mode == ChannelMode::Atg3d
                                  ? (2.0 * a[j * per + 2] - 1.0) * sys.d_max
                                  : 0.0;
            const double norm = std::sqrt(dx * dx + dy * dy + dz * dz);
            actions[j].dist = std::min(norm, sys.d_max);
            double theta = std::atan2(dy, dx);
            if (theta < 0.0) theta += 2.0 * kPi;
            actions[j].theta_h = (dx == 0.0 && dy == 0.0) ? 0.0 : theta;
            if (mode == ChannelMode::Atg3d)
                actions[j].theta_v =
                    norm > 0.0 ? std::acos(std::clamp(dz / norm, -1.0, 1.0))
                               : 0.5 * kPi;
            continue;
        }
        actions[j].theta_h = a[j * per] * 2.0 * kPi;
        if (mode == ChannelMode::Atg3d) {
            actions[j].theta_v = a[j * per + 1] * kPi;
            actions[j].dist = a[j * per + 2] * sys.d_max;
        } else {
            actions[j].dist = a[j * per + 1] * sys.d_max;
        }
    }
    return actions;
}

struct ActResult {
    std::vector<UavAction> actions;
    std::vector<double> normalized;  // post-noise, post-clamp, in [0,1]
};

// Actor output -> physical ranges, Gaussian noise (scale rho) added in
// action units, then clamped to the ranges.
inline ActResult act(const DenseNet& actor, const std::vector<double>& state,
                     double noise_scale, std::mt19937_64& rng,
                     const SystemParams& sys, ChannelMode mode,
                     std::size_t n_uavs,
                     ActionHead head = ActionHead::Polar) {
    std::vector<double> raw = forward(actor, state);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t per = action_dim(1, mode);
    ActResult out;
    out.normalized.resize(raw.size());
    for (std::size_t j = 0; j < n_uavs; ++j) {
        for (std::size_t c = 0; c < per; ++c) {
            // Component span in physical units; the noise scale is defined
            // on the heading span (2*pi for polar), so other spans receive
            // the same *relative* perturbation.
            const double span = head == ActionHead::Cartesian
                                    ? 2.0 * sys.d_max
                                : c == 0 ? 2.0 * kPi
                                : (mode == ChannelMode::Atg3d && c == 1)
                                    ? kPi
                                    : sys.d_max;
            const double sigma = head == ActionHead::Cartesian
                                     ? noise_scale * span / (2.0 * kPi)
                                     : noise_scale;
            double v = raw[j * per + c] * span;
            if (noise_scale > 0.0) v += sigma * gauss(rng);
            v = std::clamp(v, 0.0, span);
            out.normalized[j * per + c] = v / span;
        }
    }
    out.actions = decode_action(out.normalized, n_uavs, sys, mode, head);
    return out;
}

struct TrainStats {
    double critic_loss = 0.0;
    bool learned = false;
};

struct TraceRow {
    int epoch = 0;
    double sum_energy = 0.0;
    double sum_reward = 0.0;
    double noise_rho = 0.0;
    double critic_loss = 0.0;
};

inline void shrink_output_layer(DenseNet& net, double scale) {
    for (double& w : net.weights.back().a) w *= scale;
    for (double& b : net.biases.back()) b *= scale;
}

class RatAgent {
public:
    RatAgent(const ScenarioConfig& cfg, std::uint64_t seed)
        : cfg_(cfg),
          hp_(cfg.rat),
          n_uavs_(static_cast<std::size_t>(cfg.n_uavs)),
          head_(parse_action_head(cfg.rat.action_head)),
          buffer_(hp_.buffer, hp_.beta, hp_.mu, hp_.eps),
          rng_(seed) {
        std::vector<std::size_t> actor_sizes{state_dim(n_uavs_, cfg.mode)};
        std::vector<std::size_t> critic_sizes{state_dim(n_uavs_, cfg.mode) +
                                              action_dim(n_uavs_, cfg.mode)};
        for (auto h : hp_.hidden) { actor_sizes.push_back(h); critic_sizes.push_back(h); }
        actor_sizes.push_back(action_dim(n_uavs_, cfg.mode));
        critic_sizes.push_back(1);
        actor_ = make_net(actor_sizes, OutputActivation::Sigmoid, seed * 2 + 1);
        critic_ = make_net(critic_sizes, OutputActivation::Linear, seed * 2 + 2);
        // near-zero critic output layer: initial value estimates start
        // small instead of inheriting random-init structure
        shrink_output_layer(critic_, 0.01);
        actor_target_ = actor_;
        critic_target_ = critic_;
        actor_opt_.kind = OptimizerKind::RmsProp;
        actor_opt_.lr = hp_.actor_lr;
        actor_opt_.init_like(actor_);
        critic_opt_.kind = OptimizerKind::Adam;
        critic_opt_.lr = hp_.critic_lr;
        critic_opt_.init_like(critic_);
        noise_ = hp_.noise_rho;
        reward_scale_ = hp_.reward_scale > 0.0 ? hp_.reward_scale
                                               : default_reward_scale(cfg);
        // Centering the reward on the expected all-local slot energy keeps
        // the critic's targets near zero, so the action-dependent part of
        // the reward is not dwarfed by a large constant baseline.
        reward_offset_ = hp_.reward_offset >= 0.0 ? hp_.reward_offset
                                                  : default_reward_scale(cfg);
    }

    // N * mean per-slot local energy, from the task distribution.
    static double default_reward_scale(const ScenarioConfig& cfg) {
        const double lo = cfg.task_cycles_lo, hi = cfg.task_cycles_hi;
        const double mean_f3 =
            hi > lo ? (std::pow(hi, 4) - std::pow(lo, 4)) / (4.0 * (hi - lo))
                    : std::pow(lo, 3);
        const double kappa = 1e-28, t = cfg.sys.t_max;
        return std::max(1e-9, cfg.n_ues * kappa * mean_f3 / (t * t));
    }

    const DenseNet& actor() const { return actor_; }
    const DenseNet& critic() const { return critic_; }
    DenseNet& actor() { return actor_; }
    DenseNet& critic() { return critic_; }
    const DenseNet& actor_target() const { return actor_target_; }
    const DenseNet& critic_target() const { return critic_target_; }
    ReplayBuffer& buffer() { return buffer_; }
    std::mt19937_64& rng() { return rng_; }
    double noise() const { return noise_; }
    double reward_scale() const { return reward_scale_; }
    double reward_offset() const { return reward_offset_; }
    const ScenarioConfig& config() const { return cfg_; }

    std::vector<double> td_errors(const std::vector<std::size_t>& indices) const {
        std::vector<double> deltas(indices.size());
        for (std::size_t k = 0; k < indices.size(); ++k) {
            const Experience& e = buffer_.at(indices[k]);
            double target = e.reward;
            if (!e.terminal) {
                const auto a2 = forward(actor_target_, e.next_state);
                std::vector<double> sa = e.next_state;
                sa.insert(sa.end(), a2.begin(), a2.end());
                target += hp_.gamma * forward(critic_target_, sa)[0];
            }
            std::vector<double> sa = e.state;
            sa.insert(sa.end(), e.action.begin(), e.action.end());
            deltas[k] = target - forward(critic_, sa)[0];
        }
        return deltas;
    }

    // One gradient step on a sampled batch: weighted TD loss for the
    // critic, deterministic policy gradient for the actor, soft target
    // updates, priority refresh.
    TrainStats train_step(const SampledBatch& batch) {
        TrainStats stats;
        if (batch.indices.empty()) return stats;
        const std::size_t k = batch.indices.size();
        const auto deltas = td_errors(batch.indices);
        const auto weights =
            hp_.uniform_replay
                ? std::vector<double>(k, 1.0)
                : per_weights(batch.probability, buffer_.capacity(), hp_.mu);

        Gradients critic_grads;
        critic_grads.init_like(critic_);
        double loss = 0.0;
        for (std::size_t s = 0; s < k; ++s) {
            const Experience& e = buffer_.at(batch.indices[s]);
            std::vector<double> sa = e.state;
            sa.insert(sa.end(), e.action.begin(), e.action.end());
            ForwardCache cache;
            forward(critic_, sa, &cache);
            loss += weights[s] * deltas[s] * deltas[s];
            // d/dQ of w * (target - Q)^2 / K
            backward(critic_, cache,
                     {-2.0 * weights[s] * deltas[s] / static_cast<double>(k)},
                     critic_grads);
        }
        stats.critic_loss = loss / static_cast<double>(k);
        optimizer_step(critic_, critic_grads, critic_opt_);

        Gradients actor_grads;
        actor_grads.init_like(actor_);
        const std::size_t sdim = actor_.input_size();
        for (std::size_t s = 0; s < k; ++s) {
            const Experience& e = buffer_.at(batch.indices[s]);
            ForwardCache actor_cache;
            const auto a = forward(actor_, e.state, &actor_cache);
            std::vector<double> sa = e.state;
            sa.insert(sa.end(), a.begin(), a.end());
            ForwardCache critic_cache;
            forward(critic_, sa, &critic_cache);
            Gradients critic_input;
            critic_input.init_like(critic_);
            backward(critic_, critic_cache, {1.0}, critic_input);
            // ascend Q: upstream for the actor is -dQ/da / K. The gradient
            // is scaled by the remaining headroom toward the bound it pushes
            // at (gradient inverting), which stops the bounded outputs from
            // being driven into saturation by a still-uninformed critic.
            std::vector<double> upstream(a.size());
            for (std::size_t c = 0; c < a.size(); ++c) {
                const double g = critic_input.d_input[sdim + c];
                const double headroom = g > 0.0 ? 1.0 - a[c] : a[c];
                upstream[c] = -g * headroom / static_cast<double>(k);
            }
            backward(actor_, actor_cache, upstream, actor_grads);
        }
        optimizer_step(actor_, actor_grads, actor_opt_);

        if (!hp_.uniform_replay) {
            std::vector<double> abs_td(k);
            for (std::size_t s = 0; s < k; ++s) abs_td[s] = std::abs(deltas[s]);
            buffer_.update_priorities(batch.indices, abs_td);
        }
        soft_update(critic_target_, critic_, hp_.tau);
        soft_update(actor_target_, actor_, hp_.tau);
        stats.learned = true;
        return stats;
    }

    // One training episode; pushes transitions and learns when the buffer
    // is full. Returns the episode log (raw joules).
    EpisodeLog run_training_episode(const Scenario& sc,
                                    const std::vector<Vec2>& takeoff,
                                    double* mean_loss = nullptr) {
        Env env(sc);
        env.reset(takeoff);
        EpisodeLog log;
        double loss_sum = 0.0;
        int loss_count = 0;
        while (!env.done()) {
            const auto state = encode_state(env.world().uavs, cfg_.sys, cfg_.mode);
            const auto action =
                act(actor_, state, noise_, rng_, cfg_.sys, cfg_.mode,
                    n_uavs_, head_);
            SlotResult r = env.step(action.actions);
            const auto next_state =
                encode_state(env.world().uavs, cfg_.sys, cfg_.mode);
            Experience exp;
            exp.state = state;
            exp.action = action.normalized;
            exp.reward = (r.reward + reward_offset_) / reward_scale_;
            exp.next_state = next_state;
            // The episode ends on a time limit, not an environmental
            // terminal, and the per-slot dynamics are stationary; keep
            // bootstrapping through the cut so the value function does not
            // need an (unobserved) time feature.
            exp.terminal = false;
            buffer_.push(std::move(exp));
            if (buffer_.full()) {
                for (int u = 0; u < std::max(hp_.updates, 1); ++u) {
                    const auto batch =
                        hp_.uniform_replay
                            ? buffer_.sample_uniform(hp_.batch, rng_)
                            : buffer_.sample(hp_.batch, rng_);
                    const auto stats = train_step(batch);
                    if (stats.learned) { loss_sum += stats.critic_loss; ++loss_count; }
                }
            }
            noise_ *= hp_.noise_decay;
            log.sum_energy += r.energy;
            log.sum_reward += r.reward;
            log.uav_states.push_back(env.world().uavs);
            log.slots.push_back(std::move(r));
        }
        if (mean_loss) *mean_loss = loss_count ? loss_sum / loss_count : 0.0;
        return log;
    }

    // Greedy (noise-free) rollout without learning.
    EpisodeLog evaluate(const Scenario& sc, const std::vector<Vec2>& takeoff) {
        return run_policy(sc, takeoff, [&](const WorldState& w, std::size_t) {
            const auto state = encode_state(w.uavs, cfg_.sys, cfg_.mode);
            auto res = act(actor_, state, 0.0, rng_, cfg_.sys, cfg_.mode,
                           n_uavs_, head_);
            return res.actions;
        });
    }

    std::vector<TraceRow> train(const Scenario& sc) {
        std::vector<TraceRow> trace;
        for (int epoch = 1; epoch <= hp_.epochs; ++epoch) {
            const auto& takeoff =
                sc.takeoffs[static_cast<std::size_t>(epoch - 1) % sc.takeoffs.size()];
            double mean_loss = 0.0;
            const auto log = run_training_episode(sc, takeoff, &mean_loss);
            trace.push_back({epoch, log.sum_energy, log.sum_reward, noise_, mean_loss});
        }
        return trace;
    }

    nlohmann::json checkpoint() const {
        nlohmann::json j;
        j["schema_version"] = kSchemaVersion;
        j["actor"] = net_to_json(actor_);
        j["critic"] = net_to_json(critic_);
        j["actor_target"] = net_to_json(actor_target_);
        j["critic_target"] = net_to_json(critic_target_);
        j["actor_opt"] = optimizer_to_json(actor_opt_);
        j["critic_opt"] = optimizer_to_json(critic_opt_);
        j["noise"] = noise_;
        j["reward_scale"] = reward_scale_;
        j["reward_offset"] = reward_offset_;
        std::ostringstream rng_state;
        rng_state << rng_;
        j["rng"] = rng_state.str();
        return j;
    }

    void restore(const nlohmann::json& j) {
        if (j.at("schema_version").get<int>() != kSchemaVersion)
            throw std::runtime_error("checkpoint: unsupported schema_version");
        actor_ = net_from_json(j.at("actor"));
        critic_ = net_from_json(j.at("critic"));
        actor_target_ = net_from_json(j.at("actor_target"));
        critic_target_ = net_from_json(j.at("critic_target"));
        optimizer_from_json(j.at("actor_opt"), actor_, actor_opt_);
        optimizer_from_json(j.at("critic_opt"), critic_, critic_opt_);
        noise_ = j.at("noise").get<double>();
        reward_scale_ = j.at("reward_scale").get<double>();
        reward_offset_ = j.at("reward_offset").get<double>();
        std::istringstream rng_state(j.at("rng").get<std::string>());
        rng_state >> rng_;
    }

private:
    ScenarioConfig cfg_;
    RatHyperParams hp_;
    std::size_t n_uavs_;
    DenseNet actor_, critic_, actor_target_, critic_target_;
    OptimizerState actor_opt_, critic_opt_;
    ReplayBuffer buffer_;
    std::mt19937_64 rng_;
    double noise_ = 2.0;
    ActionHead head_ = ActionHead::Polar;
    double reward_scale_ = 1.0;
    double reward_offset_ = 0.0;
};

}  // namespace fmec
