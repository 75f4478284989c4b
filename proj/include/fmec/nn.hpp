#pragma once

// Minimal dense-network toolkit: forward pass, reverse-mode gradients
// (parameters and input), Adam / RMSProp, soft target updates, JSON
// checkpoints. Enough for desk-scale DDPG, nothing more.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fmec {

struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;  // row-major

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

enum class OutputActivation { Linear, Sigmoid };

// Fully-connected net with ReLU hidden layers.
struct DenseNet {
    std::vector<std::size_t> sizes;  // input, hidden..., output
    std::vector<Mat> weights;        // weights[l]: sizes[l+1] x sizes[l]
    std::vector<std::vector<double>> biases;
    OutputActivation output = OutputActivation::Linear;

    std::size_t layers() const { return weights.size(); }
    std::size_t input_size() const { return sizes.front(); }
    std::size_t output_size() const { return sizes.back(); }
};

inline DenseNet make_net(const std::vector<std::size_t>& sizes,
                         OutputActivation output, std::uint64_t seed) {
    if (sizes.size() < 2) throw std::invalid_argument("make_net: need >= 2 layers");
    DenseNet net;
    net.sizes = sizes;
    net.output = output;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Mat w(sizes[l + 1], sizes[l]);
        for (double& v : w.a) v = dist(rng);
        net.weights.push_back(std::move(w));
        std::vector<double> b(sizes[l + 1]);
        for (double& v : b) v = dist(rng);
        net.biases.push_back(std::move(b));
    }
    return net;
}

struct ForwardCache {
    // activations[0] = input; activations[l+1] = output of layer l
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> preact;  // pre-activation per layer
};

inline std::vector<double> forward(const DenseNet& net,
                                   const std::vector<double>& input,
                                   ForwardCache* cache = nullptr) {
    if (input.size() != net.input_size())
        throw std::invalid_argument("forward: input size mismatch");
    std::vector<double> x = input;
    if (cache) {
        cache->activations.assign(1, x);
        cache->preact.clear();
    }
    for (std::size_t l = 0; l < net.layers(); ++l) {
        const Mat& w = net.weights[l];
        std::vector<double> y(w.rows);
        for (std::size_t r = 0; r < w.rows; ++r) {
            double s = net.biases[l][r];
            const double* row = &w.a[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) s += row[c] * x[c];
            y[r] = s;
        }
        if (cache) cache->preact.push_back(y);
        const bool last = l + 1 == net.layers();
        if (!last) {
            for (double& v : y) v = v > 0.0 ? v : 0.0;  // ReLU
        } else if (net.output == OutputActivation::Sigmoid) {
            for (double& v : y) v = 1.0 / (1.0 + std::exp(-v));
        }
        x = std::move(y);
        if (cache) cache->activations.push_back(x);
    }
    return x;
}

struct Gradients {
    std::vector<Mat> d_weights;
    std::vector<std::vector<double>> d_biases;
    std::vector<double> d_input;

    void init_like(const DenseNet& net) {
        d_weights.clear();
        d_biases.clear();
        for (std::size_t l = 0; l < net.layers(); ++l) {
            d_weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
            d_biases.emplace_back(net.biases[l].size(), 0.0);
        }
        d_input.assign(net.input_size(), 0.0);
    }

    void scale(double s) {
        for (auto& w : d_weights)
            for (double& v : w.a) v *= s;
        for (auto& b : d_biases)
            for (double& v : b) v *= s;
        for (double& v : d_input) v *= s;
    }
};

// Reverse pass: upstream is dL/dy at the network output. Accumulates into
// grads (call init_like first, or reuse across a batch).
inline void backward(const DenseNet& net, const ForwardCache& cache,
                     const std::vector<double>& upstream, Gradients& grads) {
    std::vector<double> delta = upstream;
    const std::size_t last = net.layers() - 1;
    if (net.output == OutputActivation::Sigmoid) {
        const auto& y = cache.activations.back();
        for (std::size_t r = 0; r < delta.size(); ++r) delta[r] *= y[r] * (1.0 - y[r]);
    }
    for (std::size_t l = last + 1; l-- > 0;) {
        if (l != last) {
            const auto& z = cache.preact[l];
            for (std::size_t r = 0; r < delta.size(); ++r)
                if (z[r] <= 0.0) delta[r] = 0.0;
        }
        const auto& x = cache.activations[l];
        Mat& dw = grads.d_weights[l];
        for (std::size_t r = 0; r < dw.rows; ++r) {
            const double d = delta[r];
            double* row = &dw.a[r * dw.cols];
            for (std::size_t c = 0; c < dw.cols; ++c) row[c] += d * x[c];
            grads.d_biases[l][r] += d;
        }
        std::vector<double> prev(net.weights[l].cols, 0.0);
        const Mat& w = net.weights[l];
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double d = delta[r];
            const double* row = &w.a[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) prev[c] += d * row[c];
        }
        if (l == 0) {
            for (std::size_t c = 0; c < prev.size(); ++c) grads.d_input[c] += prev[c];
        }
        delta = std::move(prev);
    }
}

enum class OptimizerKind { Adam, RmsProp };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    double lr = 0.001;
    double beta1 = 0.9;    // Adam first moment / RMSProp decay
    double beta2 = 0.999;  // Adam second moment
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<Mat> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;

    void init_like(const DenseNet& net) {
        m_w.clear(); v_w.clear(); m_b.clear(); v_b.clear();
        for (std::size_t l = 0; l < net.layers(); ++l) {
            m_w.emplace_back(net.weights[l].rows, net.weights[l].cols);
            v_w.emplace_back(net.weights[l].rows, net.weights[l].cols);
            m_b.emplace_back(net.biases[l].size(), 0.0);
            v_b.emplace_back(net.biases[l].size(), 0.0);
        }
        step = 0;
    }
};

inline void optimizer_step(DenseNet& net, const Gradients& grads,
                           OptimizerState& opt) {
    ++opt.step;
    auto update = [&](double& p, double g, double& m, double& v) {
        if (opt.kind == OptimizerKind::Adam) {
            m = opt.beta1 * m + (1.0 - opt.beta1) * g;
            v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
            const double mh = m / (1.0 - std::pow(opt.beta1, static_cast<double>(opt.step)));
            const double vh = v / (1.0 - std::pow(opt.beta2, static_cast<double>(opt.step)));
            p -= opt.lr * mh / (std::sqrt(vh) + opt.eps);
        } else {
            v = opt.beta1 * v + (1.0 - opt.beta1) * g * g;
            p -= opt.lr * g / (std::sqrt(v) + opt.eps);
        }
    };
    for (std::size_t l = 0; l < net.layers(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].a.size(); ++i)
            update(net.weights[l].a[i], grads.d_weights[l].a[i], opt.m_w[l].a[i],
                   opt.v_w[l].a[i]);
        for (std::size_t i = 0; i < net.biases[l].size(); ++i)
            update(net.biases[l][i], grads.d_biases[l][i], opt.m_b[l][i],
                   opt.v_b[l][i]);
    }
}

// target <- tau * online + (1 - tau) * target
inline void soft_update(DenseNet& target, const DenseNet& online, double tau) {
    for (std::size_t l = 0; l < target.layers(); ++l) {
        for (std::size_t i = 0; i < target.weights[l].a.size(); ++i)
            target.weights[l].a[i] =
                tau * online.weights[l].a[i] + (1.0 - tau) * target.weights[l].a[i];
        for (std::size_t i = 0; i < target.biases[l].size(); ++i)
            target.biases[l][i] =
                tau * online.biases[l][i] + (1.0 - tau) * target.biases[l][i];
    }
}

// ---------------------------------------------------------------------------
// Checkpoints (plain JSON: shapes + row-major values)

inline nlohmann::json net_to_json(const DenseNet& net) {
    nlohmann::json j;
    j["sizes"] = net.sizes;
    j["output"] = net.output == OutputActivation::Sigmoid ? "sigmoid" : "linear";
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layers(); ++l) {
        j["weights"].push_back(net.weights[l].a);
        j["biases"].push_back(net.biases[l]);
    }
    return j;
}

inline DenseNet net_from_json(const nlohmann::json& j) {
    DenseNet net;
    net.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    net.output = j.at("output").get<std::string>() == "sigmoid"
                     ? OutputActivation::Sigmoid
                     : OutputActivation::Linear;
    for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
        Mat w(net.sizes[l + 1], net.sizes[l]);
        w.a = j.at("weights").at(l).get<std::vector<double>>();
        if (w.a.size() != w.rows * w.cols)
            throw std::runtime_error("checkpoint: weight shape mismatch");
        net.weights.push_back(std::move(w));
        auto b = j.at("biases").at(l).get<std::vector<double>>();
        if (b.size() != net.sizes[l + 1])
            throw std::runtime_error("checkpoint: bias shape mismatch");
        net.biases.push_back(std::move(b));
    }
    return net;
}

inline nlohmann::json optimizer_to_json(const OptimizerState& opt) {
    nlohmann::json j;
    j["kind"] = opt.kind == OptimizerKind::Adam ? "adam" : "rmsprop";
    j["lr"] = opt.lr;
    j["step"] = opt.step;
    j["m_w"] = nlohmann::json::array();
    j["v_w"] = nlohmann::json::array();
    j["m_b"] = nlohmann::json::array();
    j["v_b"] = nlohmann::json::array();
    for (std::size_t l = 0; l < opt.m_w.size(); ++l) {
        j["m_w"].push_back(opt.m_w[l].a);
        j["v_w"].push_back(opt.v_w[l].a);
        j["m_b"].push_back(opt.m_b[l]);
        j["v_b"].push_back(opt.v_b[l]);
    }
    return j;
}

inline void optimizer_from_json(const nlohmann::json& j, const DenseNet& net,
                                OptimizerState& opt) {
    opt.kind = j.at("kind").get<std::string>() == "adam" ? OptimizerKind::Adam
                                                         : OptimizerKind::RmsProp;
    opt.lr = j.at("lr").get<double>();
    opt.init_like(net);
    opt.step = j.at("step").get<std::size_t>();
    for (std::size_t l = 0; l < opt.m_w.size(); ++l) {
        opt.m_w[l].a = j.at("m_w").at(l).get<std::vector<double>>();
        opt.v_w[l].a = j.at("v_w").at(l).get<std::vector<double>>();
        opt.m_b[l] = j.at("m_b").at(l).get<std::vector<double>>();
        opt.v_b[l] = j.at("v_b").at(l).get<std::vector<double>>();
    }
}

}  // namespace fmec
