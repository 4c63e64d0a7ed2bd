#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "corrprop/init.hpp"
#include "corrprop/rng.hpp"

// Fully connected network with a linear scalar readout, exact MSE gradients,
// and plain SGD / Adam updates. Everything is double precision and
// deterministic for a fixed stream.

namespace corrprop::nn {

enum class Activation { ReLU, Tanh };

struct Mlp {
    std::vector<LayerWeights> layers;  // hidden layers ... readout (linear)
    Activation activation = Activation::ReLU;

    Eigen::Index input_dim() const { return layers.front().n_in(); }
    Eigen::Index output_dim() const { return layers.back().n_out(); }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("Mlp: no layers");
        for (std::size_t i = 1; i < layers.size(); ++i)
            if (layers[i].n_in() != layers[i - 1].n_out())
                throw std::invalid_argument("Mlp: layer dimension mismatch");
    }

    bool finite() const {
        for (const auto& l : layers)
            if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
        return true;
    }
};

/// hidden_layers hidden layers of constant width plus a linear readout to
/// output_dim, every layer sampled from the scheme.
inline Mlp make_mlp(const InitScheme& scheme, Eigen::Index input_dim, Eigen::Index width,
                    Eigen::Index hidden_layers, Eigen::Index output_dim, Activation act,
                    RandomStream& rng) {
    Mlp net;
    net.activation = act;
    Eigen::Index in = input_dim;
    for (Eigen::Index l = 0; l < hidden_layers; ++l) {
        net.layers.push_back(sample_layer(scheme, in, width, rng));
        in = width;
    }
    net.layers.push_back(sample_layer(scheme, in, output_dim, rng));
    return net;
}

inline Eigen::ArrayXXd activate(const Eigen::MatrixXd& h, Activation a) {
    if (a == Activation::ReLU) return h.array().max(0.0);
    return h.array().tanh();
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;  // pre-activations per layer (batch x width)
    Eigen::MatrixXd input;
    Eigen::MatrixXd output;  // batch x output_dim (linear readout)
    bool finite = true;
};

inline ForwardCache forward(const Mlp& net, const Eigen::MatrixXd& batch) {
    if (batch.cols() != net.input_dim()) throw std::invalid_argument("forward: input width mismatch");
    ForwardCache cache;
    cache.input = batch;
    cache.pre.reserve(net.layers.size());
    Eigen::MatrixXd s = batch;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Eigen::MatrixXd h = s * net.layers[l].weights.transpose();
        h.rowwise() += net.layers[l].bias.transpose();
        cache.pre.push_back(h);
        if (l + 1 < net.layers.size()) s = activate(h, net.activation).matrix();
    }
    cache.output = cache.pre.back();
    cache.finite = cache.output.allFinite();
    return cache;
}

inline Eigen::MatrixXd predict(const Mlp& net, const Eigen::MatrixXd& batch) {
    return forward(net, batch).output;
}

/// MSE over all outputs: mean over (batch, output) of squared error.
inline double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;

    double squared_norm() const {
        double s = 0.0;
        for (const auto& w : weights) s += w.squaredNorm();
        for (const auto& b : bias) s += b.squaredNorm();
        return s;
    }
};

/// Exact gradients of mse(forward(net, batch), targets) for every weight and
/// bias.
inline Gradients backward(const Mlp& net, const ForwardCache& cache,
                          const Eigen::MatrixXd& targets) {
    const std::size_t L = net.layers.size();
    Gradients g;
    g.weights.resize(L);
    g.bias.resize(L);

    // dL/dout for L = (1/(B*D)) sum (out - y)^2
    Eigen::MatrixXd delta =
        2.0 * (cache.output - targets) / static_cast<double>(cache.output.size());

    for (std::size_t li = L; li-- > 0;) {
        const Eigen::MatrixXd s_in =
            li == 0 ? cache.input : activate(cache.pre[li - 1], net.activation).matrix();
        g.weights[li].noalias() = delta.transpose() * s_in;
        g.bias[li] = delta.colwise().sum().transpose();
        if (li == 0) break;
        Eigen::MatrixXd ds = delta * net.layers[li].weights;
        if (net.activation == Activation::ReLU) {
            delta = (cache.pre[li - 1].array() > 0.0).cast<double>() * ds.array();
        } else {
            delta = (1.0 - cache.pre[li - 1].array().tanh().square()) * ds.array();
        }
    }
    return g;
}

inline void step_sgd(Mlp& net, const Gradients& g, double lr) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        net.layers[l].weights -= lr * g.weights[l];
        net.layers[l].bias -= lr * g.bias[l];
    }
}

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
};

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long t = 0;

    static AdamState like(const Mlp& net) {
        AdamState s;
        for (const auto& l : net.layers) {
            s.mw.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
            s.vw.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
            s.mb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
            s.vb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
        }
        return s;
    }
};

inline void step_adam(Mlp& net, const Gradients& g, AdamState& st, const AdamHyper& hp) {
    st.t += 1;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(st.t));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        st.mw[l] = hp.beta1 * st.mw[l] + (1.0 - hp.beta1) * g.weights[l];
        st.vw[l] = hp.beta2 * st.vw[l].array().matrix() +
                   (1.0 - hp.beta2) * g.weights[l].array().square().matrix();
        st.mb[l] = hp.beta1 * st.mb[l] + (1.0 - hp.beta1) * g.bias[l];
        st.vb[l] = hp.beta2 * st.vb[l].array().matrix() +
                   (1.0 - hp.beta2) * g.bias[l].array().square().matrix();
        net.layers[l].weights.array() -=
            hp.lr * (st.mw[l].array() / bc1) / ((st.vw[l].array() / bc2).sqrt() + hp.eps);
        net.layers[l].bias.array() -=
            hp.lr * (st.mb[l].array() / bc1) / ((st.vb[l].array() / bc2).sqrt() + hp.eps);
    }
}

}  // namespace corrprop::nn
