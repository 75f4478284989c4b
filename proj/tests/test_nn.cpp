#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fmec/nn.hpp"

using namespace fmec;
using Catch::Approx;

namespace {

// Scalar loss L = sum(y) so dL/dy = 1 everywhere; simple but exercises
// every weight through the chain rule.
double loss_sum(const DenseNet& net, const std::vector<double>& x) {
    const auto y = forward(net, x);
    double s = 0.0;
    for (double v : y) s += v;
    return s;
}

void check_grads_fd(DenseNet net, const std::vector<double>& x) {
    ForwardCache cache;
    const auto y = forward(net, x, &cache);
    Gradients grads;
    grads.init_like(net);
    backward(net, cache, std::vector<double>(y.size(), 1.0), grads);

    const double h = 1e-5;
    std::mt19937_64 pick(7);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        // probe a handful of entries per layer instead of every weight
        for (int probe = 0; probe < 12; ++probe) {
            const std::size_t idx = pick() % net.weights[l].a.size();
            const double orig = net.weights[l].a[idx];
            net.weights[l].a[idx] = orig + h;
            const double lp = loss_sum(net, x);
            net.weights[l].a[idx] = orig - h;
            const double lm = loss_sum(net, x);
            net.weights[l].a[idx] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = grads.d_weights[l].a[idx];
            CHECK(an == Approx(fd).epsilon(1e-4).margin(1e-8));
        }
        for (std::size_t r = 0; r < net.biases[l].size(); ++r) {
            const double orig = net.biases[l][r];
            net.biases[l][r] = orig + h;
            const double lp = loss_sum(net, x);
            net.biases[l][r] = orig - h;
            const double lm = loss_sum(net, x);
            net.biases[l][r] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            CHECK(grads.d_biases[l][r] == Approx(fd).epsilon(1e-4).margin(1e-8));
        }
    }
    // input gradient, used by the deterministic policy gradient
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto xp = x;
        xp[i] += h;
        const double lp = loss_sum(net, xp);
        xp[i] = x[i] - h;
        const double lm = loss_sum(net, xp);
        const double fd = (lp - lm) / (2.0 * h);
        CHECK(grads.d_input[i] == Approx(fd).epsilon(1e-4).margin(1e-8));
    }
}

}  // namespace

TEST_CASE("backward matches central finite differences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);

    SECTION("critic shape, linear output") {
        auto net = make_net({9, 40, 30, 1}, OutputActivation::Linear, 3);
        std::vector<double> x(9);
        for (double& v : x) v = ux(rng);
        check_grads_fd(net, x);
    }
    SECTION("actor shape, sigmoid output") {
        auto net = make_net({7, 40, 30, 2}, OutputActivation::Sigmoid, 4);
        std::vector<double> x(7);
        for (double& v : x) v = ux(rng);
        check_grads_fd(net, x);
    }
    SECTION("tiny net") {
        auto net = make_net({2, 3, 1}, OutputActivation::Linear, 5);
        check_grads_fd(net, {0.3, -0.7});
    }
}

TEST_CASE("Adam first step moves each weight by about lr") {
    // With bias correction, the very first Adam step is
    // -lr * g / (|g| + eps') ~= -lr * sign(g).
    auto net = make_net({1, 1}, OutputActivation::Linear, 1);
    const double w0 = net.weights[0](0, 0);
    Gradients grads;
    grads.init_like(net);
    grads.d_weights[0](0, 0) = 0.5;
    OptimizerState opt;
    opt.kind = OptimizerKind::Adam;
    opt.lr = 0.001;
    opt.init_like(net);
    optimizer_step(net, grads, opt);
    CHECK(net.weights[0](0, 0) == Approx(w0 - 0.001).epsilon(1e-4));
}

TEST_CASE("RMSProp first step has magnitude lr / sqrt(1 - beta1) * sign") {
    auto net = make_net({1, 1}, OutputActivation::Linear, 2);
    const double w0 = net.weights[0](0, 0);
    Gradients grads;
    grads.init_like(net);
    grads.d_weights[0](0, 0) = -2.0;
    OptimizerState opt;
    opt.kind = OptimizerKind::RmsProp;
    opt.lr = 0.001;
    opt.init_like(net);
    optimizer_step(net, grads, opt);
    // cache = (1-beta1)*g^2, step = lr*g/sqrt(cache) = lr*sign(g)/sqrt(1-beta1)
    const double expected = 0.001 * 2.0 / std::sqrt((1.0 - opt.beta1) * 4.0);
    CHECK(net.weights[0](0, 0) == Approx(w0 + expected).epsilon(1e-4));
}

TEST_CASE("soft update contracts target toward online weights") {
    auto online = make_net({3, 8, 2}, OutputActivation::Linear, 6);
    auto target = make_net({3, 8, 2}, OutputActivation::Linear, 7);
    const double tau = 0.001;
    const double before = target.weights[0](0, 0);
    const double src = online.weights[0](0, 0);
    soft_update(target, online, tau);
    CHECK(target.weights[0](0, 0) ==
          Approx(tau * src + (1.0 - tau) * before).epsilon(1e-12));

    // repeated updates converge to the online net
    for (int i = 0; i < 20000; ++i) soft_update(target, online, 0.01);
    for (std::size_t l = 0; l < online.layers(); ++l)
        for (std::size_t k = 0; k < online.weights[l].a.size(); ++k)
            CHECK(target.weights[l].a[k] ==
                  Approx(online.weights[l].a[k]).margin(1e-9));
}

TEST_CASE("same seed gives identical nets, different seeds differ") {
    auto a = make_net({4, 10, 2}, OutputActivation::Sigmoid, 42);
    auto b = make_net({4, 10, 2}, OutputActivation::Sigmoid, 42);
    auto c = make_net({4, 10, 2}, OutputActivation::Sigmoid, 43);
    CHECK(a.weights[0].a == b.weights[0].a);
    CHECK(a.biases == b.biases);
    CHECK(a.weights[0].a != c.weights[0].a);

    // fan-in uniform bounds: |w| <= 1/sqrt(fan_in)
    for (std::size_t l = 0; l < a.layers(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(a.sizes[l]));
        for (double w : a.weights[l].a) {
            CHECK(w <= bound + 1e-12);
            CHECK(w >= -bound - 1e-12);
        }
    }
}

TEST_CASE("sigmoid output stays in (0, 1)") {
    auto net = make_net({3, 16, 4}, OutputActivation::Sigmoid, 9);
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> ux(-5.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x{ux(rng), ux(rng), ux(rng)};
        for (double y : forward(net, x)) {
            CHECK(y > 0.0);
            CHECK(y < 1.0);
        }
    }
}

TEST_CASE("JSON round trip preserves the net and optimizer exactly") {
    auto net = make_net({5, 12, 3}, OutputActivation::Sigmoid, 13);
    OptimizerState opt;
    opt.kind = OptimizerKind::Adam;
    opt.init_like(net);
    Gradients grads;
    grads.init_like(net);
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> ux(-0.1, 0.1);
    for (auto& w : grads.d_weights)
        for (double& v : w.a) v = ux(rng);
    for (int i = 0; i < 3; ++i) optimizer_step(net, grads, opt);

    const auto jn = net_to_json(net);
    const auto jo = optimizer_to_json(opt);
    const auto net2 = net_from_json(jn);
    OptimizerState opt2;
    opt2.kind = OptimizerKind::Adam;
    opt2.init_like(net2);
    optimizer_from_json(jo, net2, opt2);

    CHECK(net2.sizes == net.sizes);
    CHECK(net2.output == net.output);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        CHECK(net2.weights[l].a == net.weights[l].a);
        CHECK(net2.biases[l] == net.biases[l]);
    }
    CHECK(opt2.step == opt.step);

    // continued training is bit-identical
    auto a = net;
    auto b = net2;
    auto oa = opt;
    auto ob = opt2;
    optimizer_step(a, grads, oa);
    optimizer_step(b, grads, ob);
    for (std::size_t l = 0; l < a.layers(); ++l)
        CHECK(a.weights[l].a == b.weights[l].a);
}

TEST_CASE("gradient descent fits a linear target") {
    // y = 2x - 1 learnable by a {1,8,1} net in a few hundred steps
    auto net = make_net({1, 8, 1}, OutputActivation::Linear, 21);
    OptimizerState opt;
    opt.kind = OptimizerKind::Adam;
    opt.lr = 0.01;
    opt.init_like(net);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    for (int step = 0; step < 2000; ++step) {
        Gradients grads;
        grads.init_like(net);
        for (int k = 0; k < 8; ++k) {
            const double x = ux(rng);
            ForwardCache cache;
            const auto y = forward(net, {x}, &cache);
            const double err = y[0] - (2.0 * x - 1.0);
            backward(net, cache, {2.0 * err / 8.0}, grads);
        }
        optimizer_step(net, grads, opt);
    }
    double worst = 0.0;
    for (double x = -1.0; x <= 1.0; x += 0.05)
        worst = std::max(worst, std::abs(forward(net, {x})[0] - (2.0 * x - 1.0)));
    CHECK(worst < 0.05);
}
