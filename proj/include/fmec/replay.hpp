#pragma once

// Prioritized experience replay on a sum tree. Leaves hold p_k^beta with
// p_k = |delta_k| + eps; sampling probability is P(k) = p_k^beta / sum.
// Importance weights are (X * P(k))^-mu, unnormalized.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fmec {

struct Experience {
    std::vector<double> state;
    std::vector<double> action;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

class SumTree {
public:
    explicit SumTree(std::size_t capacity)
        : capacity_(capacity), tree_(2 * capacity, 0.0) {}

    void set(std::size_t idx, double value) {
        std::size_t node = idx + capacity_;
        tree_[node] = value;
        for (node /= 2; node >= 1; node /= 2)
            tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
    }

    double get(std::size_t idx) const { return tree_[idx + capacity_]; }
    double total() const { return tree_[1]; }
    std::size_t capacity() const { return capacity_; }

    // Leaf whose cumulative-sum interval contains `prefix`.
    std::size_t find(double prefix) const {
        std::size_t node = 1;
        while (node < capacity_) {
            const double left = tree_[2 * node];
            if (prefix < left) {
                node = 2 * node;
            } else {
                prefix -= left;
                node = 2 * node + 1;
            }
        }
        return node - capacity_;
    }

    // Exact invariant check, used by tests.
    bool consistent(double tol = 1e-9) const {
        for (std::size_t node = 1; node < capacity_; ++node)
            if (std::abs(tree_[node] - tree_[2 * node] - tree_[2 * node + 1]) > tol)
                return false;
        return true;
    }

private:
    std::size_t capacity_;
    std::vector<double> tree_;
};

struct SampledBatch {
    std::vector<std::size_t> indices;
    std::vector<double> probability;  // P(k), normalized over the buffer
};

class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, double beta, double mu, double eps)
        : capacity_(capacity), beta_(beta), mu_(mu), eps_(eps), tree_(capacity) {
        data_.reserve(capacity);
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return data_.size() == capacity_; }
    double priority_eps() const { return eps_; }
    // stored sampling mass of one slot, i.e. priority^beta
    double priority_mass(std::size_t idx) const { return tree_.get(idx); }
    const Experience& at(std::size_t i) const { return data_[i]; }
    const SumTree& tree() const { return tree_; }

    // FIFO-cyclic insert; new samples get the current maximum priority so
    // each transition is drawn at least once.
    void push(Experience exp) {
        const double p = max_priority_;
        if (data_.size() < capacity_) {
            data_.push_back(std::move(exp));
            set_priority(data_.size() - 1, p);
        } else {
            data_[head_] = std::move(exp);
            set_priority(head_, p);
            head_ = (head_ + 1) % capacity_;
        }
    }

    void set_priority(std::size_t idx, double priority) {
        if (priority <= 0.0) throw std::invalid_argument("priority must be > 0");
        if (priority > max_priority_) max_priority_ = priority;
        tree_.set(idx, std::pow(priority, beta_));
    }

    void update_priorities(const std::vector<std::size_t>& indices,
                           const std::vector<double>& abs_td) {
        for (std::size_t k = 0; k < indices.size(); ++k)
            set_priority(indices[k], abs_td[k] + eps_);
    }

    // Stratified proportional sampling over the whole buffer.
    SampledBatch sample(std::size_t k, std::mt19937_64& rng) const {
        SampledBatch batch;
        if (!full()) return batch;  // learning is gated on fullness
        const double total = tree_.total();
        const double segment = total / static_cast<double>(k);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t s = 0; s < k; ++s) {
            const double prefix =
                (static_cast<double>(s) + unit(rng)) * segment;
            const std::size_t idx = tree_.find(std::min(prefix, total * (1.0 - 1e-15)));
            batch.indices.push_back(idx);
            batch.probability.push_back(tree_.get(idx) / total);
        }
        return batch;
    }

    // Uniform sampling (the no-PER baseline); P(k) = 1/X so weights are 1.
    SampledBatch sample_uniform(std::size_t k, std::mt19937_64& rng) const {
        SampledBatch batch;
        if (!full()) return batch;
        std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
        for (std::size_t s = 0; s < k; ++s) {
            batch.indices.push_back(pick(rng));
            batch.probability.push_back(1.0 / static_cast<double>(data_.size()));
        }
        return batch;
    }

private:
    std::size_t capacity_;
    double beta_;
    double mu_;
    double eps_;
    SumTree tree_;
    std::vector<Experience> data_;
    std::size_t head_ = 0;
    double max_priority_ = 1.0;
};

// omega_k = (X * P(k))^-mu
inline std::vector<double> per_weights(const std::vector<double>& probability,
                                       std::size_t buffer_size, double mu) {
    std::vector<double> w(probability.size());
    for (std::size_t k = 0; k < w.size(); ++k)
        w[k] = std::pow(static_cast<double>(buffer_size) * probability[k], -mu);
    return w;
}

}  // namespace fmec
