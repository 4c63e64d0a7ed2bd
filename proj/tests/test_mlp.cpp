#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>

#include "corrprop/mlp.hpp"

using namespace corrprop;
using namespace corrprop::nn;
using Catch::Matchers::WithinAbs;

namespace {

Mlp tiny_net(Activation act, Eigen::Index dim, Eigen::Index layers, std::uint64_t seed) {
    auto rs = RandomStream::from(seed, 0xabc);
    return make_mlp(InitScheme::he(2.0, 0.1), dim, dim, layers, 1, act, rs);
}

}  // namespace

TEST_CASE("hand-computed forward pass") {
    Mlp net;
    net.activation = Activation::ReLU;
    LayerWeights l1;
    l1.weights.resize(2, 2);
    l1.weights << 1.0, 1.0, 2.0, -1.0;
    l1.bias.resize(2);
    l1.bias << 0.5, -0.5;
    LayerWeights l2;
    l2.weights.resize(1, 2);
    l2.weights << 1.0, -1.0;
    l2.bias.resize(1);
    l2.bias << 0.25;
    net.layers = {l1, l2};

    Eigen::MatrixXd x(1, 2);
    x << 1.0, -1.0;
    // h1 = (1 - 1 + 0.5, 2 + 1 - 0.5) = (0.5, 2.5); s = (0.5, 2.5)
    // out = 0.5 - 2.5 + 0.25 = -1.75
    CHECK_THAT(predict(net, x)(0, 0), WithinAbs(-1.75, 1e-15));

    x << -3.0, 1.0;
    // h1 = (-3 + 1 + 0.5, -6 - 1 - 0.5) = (-1.5, -7.5) -> s = (0, 0), out = 0.25
    CHECK_THAT(predict(net, x)(0, 0), WithinAbs(0.25, 1e-15));
}

TEST_CASE("zero input and zero bias give zero output through relu layers") {
    auto rs = RandomStream::from(1, 2);
    Mlp net = make_mlp(InitScheme::he(2.0, 0.0), 6, 6, 3, 1, Activation::ReLU, rs);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 6);
    CHECK(predict(net, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tanh hidden activations stay inside (-1, 1)") {
    Mlp net = tiny_net(Activation::Tanh, 8, 3, 5);
    auto rs = RandomStream::from(6, 7);
    Eigen::MatrixXd x(4, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i / 8, i % 8) = 3.0 * rs.normal();
    const auto cache = forward(net, x);
    for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
        const auto s = activate(cache.pre[l], Activation::Tanh);
        CHECK(s.abs().maxCoeff() < 1.0);
    }
}

TEST_CASE("gradients match central finite differences") {
    for (auto act : {Activation::ReLU, Activation::Tanh}) {
        Mlp net = tiny_net(act, 8, 3, act == Activation::ReLU ? 11 : 12);
        auto rs = RandomStream::from(13, static_cast<int>(act));
        Eigen::MatrixXd x(4, 8), y(4, 1);
        for (Eigen::Index i = 0; i < 4; ++i) {
            for (Eigen::Index j = 0; j < 8; ++j) x(i, j) = rs.normal();
            y(i, 0) = rs.normal();
        }
        const auto g = backward(net, forward(net, x), y);

        const double h = 1e-6;
        int checked = 0;
        for (int t = 0; t < 25; ++t) {
            const auto li = static_cast<std::size_t>(rs.uniform_index(net.layers.size()));
            auto& W = net.layers[li].weights;
            const auto r = static_cast<Eigen::Index>(rs.uniform_index(W.rows()));
            const auto c = static_cast<Eigen::Index>(rs.uniform_index(W.cols()));
            const double keep = W(r, c);
            W(r, c) = keep + h;
            const double up = mse(predict(net, x), y);
            W(r, c) = keep - h;
            const double dn = mse(predict(net, x), y);
            W(r, c) = keep;
            const double fd = (up - dn) / (2 * h);
            const double an = g.weights[li](r, c);
            const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
            CHECK(std::abs(fd - an) / scale < 1e-5);
            ++checked;
        }
        REQUIRE(checked == 25);
    }
}

TEST_CASE("targets equal to outputs give exactly zero gradients") {
    Mlp net = tiny_net(Activation::ReLU, 6, 2, 21);
    auto rs = RandomStream::from(22, 0);
    Eigen::MatrixXd x(5, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i / 6, i % 6) = rs.normal();
    const auto cache = forward(net, x);
    const auto g = backward(net, cache, cache.output);
    CHECK(g.squared_norm() == 0.0);
}

TEST_CASE("duplicating every sample leaves the mean gradient unchanged") {
    Mlp net = tiny_net(Activation::ReLU, 6, 2, 31);
    auto rs = RandomStream::from(32, 0);
    Eigen::MatrixXd x(4, 6), y(4, 1);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 6; ++j) x(i, j) = rs.normal();
        y(i, 0) = rs.normal();
    }
    Eigen::MatrixXd x2(8, 6), y2(8, 1);
    x2 << x, x;
    y2 << y, y;
    const auto g1 = backward(net, forward(net, x), y);
    const auto g2 = backward(net, forward(net, x2), y2);
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        CHECK((g1.weights[l] - g2.weights[l]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sgd step") {
    Mlp net;
    LayerWeights l;
    l.weights = Eigen::MatrixXd::Zero(1, 1);
    l.bias = Eigen::VectorXd::Zero(1);
    net.layers = {l};
    Gradients g;
    g.weights = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
    g.bias = {Eigen::VectorXd::Constant(1, 2.0)};
    step_sgd(net, g, 0.1);
    CHECK_THAT(net.layers[0].weights(0, 0), WithinAbs(-0.1, 1e-15));
    CHECK_THAT(net.layers[0].bias(0), WithinAbs(-0.2, 1e-15));
}

TEST_CASE("adam first step moves by about lr times the gradient sign") {
    Mlp net;
    LayerWeights l;
    l.weights = Eigen::MatrixXd::Zero(1, 2);
    l.bias = Eigen::VectorXd::Zero(1);
    net.layers = {l};
    AdamState st = AdamState::like(net);
    Gradients g;
    g.weights = {Eigen::MatrixXd::Zero(1, 2)};
    g.weights[0] << 0.003, -7.0;
    g.bias = {Eigen::VectorXd::Zero(1)};
    const AdamHyper hp{0.001, 0.9, 0.999, 1e-7};
    step_adam(net, g, st, hp);
    CHECK_THAT(net.layers[0].weights(0, 0), WithinAbs(-0.001, 1e-4 * 0.001));
    CHECK_THAT(net.layers[0].weights(0, 1), WithinAbs(0.001, 1e-4 * 0.001));
}

TEST_CASE("adam with zero gradients never moves the parameters") {
    Mlp net = tiny_net(Activation::ReLU, 4, 2, 41);
    const Mlp before = net;
    AdamState st = AdamState::like(net);
    Gradients g;
    for (const auto& l : net.layers) {
        g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    for (int t = 0; t < 20; ++t) step_adam(net, g, st, AdamHyper{});
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        CHECK(net.layers[l].weights == before.layers[l].weights);
}
