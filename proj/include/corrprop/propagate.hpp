#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "corrprop/init.hpp"
#include "corrprop/parallel.hpp"
#include "corrprop/rng.hpp"

// Ensemble Monte Carlo: propagates batches of input signals through randomly
// initialized ReLU networks and measures the layerwise squared length
// q^l = (1/N) sum_i h_i^2, the correlation coefficient of signal pairs, and
// dead-node statistics.

namespace corrprop::mc {

struct PropagationConfig {
    InitScheme scheme;
    Eigen::Index width = 256;     // constant N per layer
    Eigen::Index depth = 30;      // L
    Eigen::Index n_inputs = 128;  // M (paired: M/2 pairs)
    int n_networks = 8;
    double input_correlation = 0.5;  // target c0 for signal pairs
    std::uint64_t seed = 0;

    void validate() const {
        scheme.validate();
        if (width < 2) throw std::invalid_argument("PropagationConfig: width must be >= 2");
        if (depth < 1 || n_networks < 1) throw std::invalid_argument("PropagationConfig: empty run");
        if (n_inputs < 2 || n_inputs % 2 != 0)
            throw std::invalid_argument("PropagationConfig: n_inputs must be even and >= 2");
        if (std::abs(input_correlation) > 1.0)
            throw std::invalid_argument("PropagationConfig: |input_correlation| > 1");
    }

    static PropagationConfig desk(InitScheme s, std::uint64_t seed = 0) {
        PropagationConfig c;
        c.scheme = s;
        c.seed = seed;
        return c;
    }

    static PropagationConfig paper(InitScheme s, std::uint64_t seed = 0) {
        PropagationConfig c;
        c.scheme = s;
        c.width = 2048;
        c.n_inputs = 1024;
        c.n_networks = 40;
        c.seed = seed;
        return c;
    }
};

struct LayerStatsCurve {
    std::vector<double> mean_q, std_q, mean_c, std_c;
    Eigen::Index layers = 0;  // layers with finite statistics
    bool truncated = false;   // an ensemble member overflowed

    double final_mean_c() const { return mean_c.at(layers - 1); }
    double final_mean_q() const { return mean_q.at(layers - 1); }

    /// Geometric growth rate of mean_q per layer over the trailing `window`.
    double tail_growth_rate(Eigen::Index window = 10) const {
        if (truncated) return std::numeric_limits<double>::infinity();
        if (layers <= window) throw std::invalid_argument("curve too short for growth window");
        return std::pow(mean_q[layers - 1] / mean_q[layers - 1 - window],
                        1.0 / static_cast<double>(window));
    }
};

/// Per-layer raw statistics of one propagation: squared lengths for every
/// signal and overlaps for every adjacent pair (2i, 2i+1).
struct SignalStats {
    std::vector<Eigen::VectorXd> q;    // [layer](signal)
    std::vector<Eigen::VectorXd> q12;  // [layer](pair)
    Eigen::Index finite_layers = 0;
    bool truncated = false;
    // dead-node counters per layer: dead (node,input) pairs and totals
    std::vector<std::uint64_t> dead, total;
};

/// Propagates `inputs` (M x N, one signal per row) through the given layers,
/// applying relu between layers. Truncates at the last finite layer instead
/// of aborting: the unbounded phase is itself a measurement target.
inline SignalStats forward_signals(const std::vector<LayerWeights>& weights,
                                   const Eigen::MatrixXd& inputs) {
    const Eigen::Index L = static_cast<Eigen::Index>(weights.size());
    const Eigen::Index M = inputs.rows();
    SignalStats st;
    st.q.reserve(L);
    st.q12.reserve(L);
    st.dead.assign(L, 0);
    st.total.assign(L, 0);

    Eigen::MatrixXd S = inputs;
    Eigen::MatrixXd H;
    for (Eigen::Index l = 0; l < L; ++l) {
        const auto& lw = weights[l];
        if (S.cols() != lw.n_in()) throw std::invalid_argument("forward_signals: dimension mismatch");
        H.noalias() = S * lw.weights.transpose();
        H.rowwise() += lw.bias.transpose();
        if (!H.allFinite()) {
            st.truncated = true;
            break;
        }
        const double n = static_cast<double>(H.cols());
        Eigen::VectorXd q(M);
        for (Eigen::Index a = 0; a < M; ++a) q[a] = H.row(a).squaredNorm() / n;
        Eigen::VectorXd q12(M / 2);
        for (Eigen::Index p = 0; p < M / 2; ++p)
            q12[p] = H.row(2 * p).dot(H.row(2 * p + 1)) / n;
        if (!q.allFinite() || !q12.allFinite()) {
            st.truncated = true;
            break;
        }
        st.q.push_back(std::move(q));
        st.q12.push_back(std::move(q12));
        st.finite_layers = l + 1;

        S = H.cwiseMax(0.0);
        st.dead[l] = static_cast<std::uint64_t>((S.array() == 0.0).count());
        st.total[l] = static_cast<std::uint64_t>(S.size());
    }
    return st;
}

namespace detail {

/// M/2 signal pairs at correlation c0 (x2 = c0 x1 + sqrt(1-c0^2) xi), each
/// signal scaled to squared length q0 = 1 (norm^2 = N) when normalize is set.
inline Eigen::MatrixXd make_paired_inputs(Eigen::Index M, Eigen::Index N, double c0,
                                          bool normalize, RandomStream& rng) {
    Eigen::MatrixXd X(M, N);
    const double mix = std::sqrt(std::max(0.0, 1.0 - c0 * c0));
    for (Eigen::Index p = 0; p < M / 2; ++p) {
        for (Eigen::Index j = 0; j < N; ++j) {
            const double a = rng.normal();
            const double b = rng.normal();
            X(2 * p, j) = a;
            X(2 * p + 1, j) = c0 * a + mix * b;
        }
    }
    if (normalize) {
        const double target = std::sqrt(static_cast<double>(N));
        for (Eigen::Index i = 0; i < M; ++i) X.row(i) *= target / X.row(i).norm();
    }
    return X;
}

/// Samples all layers of one replica network. Stream keys are
/// (seed, replica, layer), so replicas can be built in any order.
inline std::vector<LayerWeights> sample_network(const InitScheme& scheme, Eigen::Index N,
                                                Eigen::Index L, std::uint64_t seed, int replica) {
    std::vector<LayerWeights> net;
    net.reserve(L);
    for (Eigen::Index l = 0; l < L; ++l) {
        auto rs = RandomStream::from(seed, 0x6c61796572ull /*"layer"*/, replica, l);
        net.push_back(sample_layer(scheme, N, N, rs, seed));
    }
    return net;
}

struct Accum {
    std::vector<double> sq, sq2, sc, sc2;
    std::vector<std::uint64_t> nq, nc, dead, total;
    Eigen::Index layers = 0;
    bool truncated = false;

    void init(Eigen::Index L) {
        sq.assign(L, 0); sq2.assign(L, 0); sc.assign(L, 0); sc2.assign(L, 0);
        nq.assign(L, 0); nc.assign(L, 0); dead.assign(L, 0); total.assign(L, 0);
        layers = L;
    }

    void add(const SignalStats& st) {
        layers = std::min(layers, st.finite_layers);
        truncated = truncated || st.truncated;
        for (Eigen::Index l = 0; l < st.finite_layers; ++l) {
            for (Eigen::Index a = 0; a < st.q[l].size(); ++a) {
                sq[l] += st.q[l][a];
                sq2[l] += st.q[l][a] * st.q[l][a];
            }
            nq[l] += st.q[l].size();
            for (Eigen::Index p = 0; p < st.q12[l].size(); ++p) {
                const double c = st.q12[l][p] /
                                 std::sqrt(st.q[l][2 * p] * st.q[l][2 * p + 1]);
                sc[l] += c;
                sc2[l] += c * c;
            }
            nc[l] += st.q12[l].size();
            dead[l] += st.dead[l];
            total[l] += st.total[l];
        }
    }
};

}  // namespace detail

/// Layerwise mean and standard deviation of length and correlation over
/// (networks x signals). Bit-identical for a fixed seed under any thread
/// count: replicas use independent keyed streams and are reduced in index
/// order.
inline LayerStatsCurve measure_curves(const PropagationConfig& cfg, int threads = 1,
                                      bool normalize_inputs = true) {
    cfg.validate();
    std::vector<SignalStats> per_net(cfg.n_networks);
    parallel_for(cfg.n_networks, threads, [&](std::size_t net) {
        auto input_rs = RandomStream::from(cfg.seed, 0x696e707574ull /*"input"*/, net);
        const Eigen::MatrixXd X = detail::make_paired_inputs(
            cfg.n_inputs, cfg.width, cfg.input_correlation, normalize_inputs, input_rs);
        const auto weights =
            detail::sample_network(cfg.scheme, cfg.width, cfg.depth, cfg.seed, static_cast<int>(net));
        per_net[net] = forward_signals(weights, X);
    });

    detail::Accum acc;
    acc.init(cfg.depth);
    for (const auto& st : per_net) acc.add(st);

    LayerStatsCurve curve;
    curve.layers = acc.layers;
    curve.truncated = acc.truncated;
    for (Eigen::Index l = 0; l < acc.layers; ++l) {
        const double nq = static_cast<double>(acc.nq[l]);
        const double nc = static_cast<double>(acc.nc[l]);
        const double mq = acc.sq[l] / nq;
        const double mc = acc.sc[l] / nc;
        curve.mean_q.push_back(mq);
        curve.std_q.push_back(std::sqrt(std::max(0.0, acc.sq2[l] / nq - mq * mq)));
        curve.mean_c.push_back(mc);
        curve.std_c.push_back(std::sqrt(std::max(0.0, acc.sc2[l] / nc - mc * mc)));
    }
    return curve;
}

struct DeadNodeReport {
    double probability = 0.0;          // fraction at the first layer fed by rectified activations
    double all_layer_average = 0.0;    // fraction over all hidden layers
    std::vector<double> per_layer;     // fraction per hidden layer
};

/// Dead-node statistics for standard-normal input signals: the fraction of
/// (node, input) pairs with activation exactly 0 (pre-activation <= 0),
/// averaged over the ensemble.
///
/// The headline `probability` is measured at hidden layer 2, the first layer
/// whose inputs are rectified activations: layer 1 sees sign-symmetric
/// signals and its fraction is 1/2 for every scheme, and the deep-layer
/// fractions relax to a slightly lower asymptote, so neither reflects the
/// asymmetry the beta substitution creates. For sign-symmetric schemes the
/// fraction is 1/2 at every layer either way.
inline DeadNodeReport dead_node_report(const PropagationConfig& cfg, int threads = 1) {
    cfg.validate();
    if (cfg.depth < 2) throw std::invalid_argument("dead_node_report: need depth >= 2");
    std::vector<SignalStats> per_net(cfg.n_networks);
    parallel_for(cfg.n_networks, threads, [&](std::size_t net) {
        auto input_rs = RandomStream::from(cfg.seed, 0x696e707574ull, net);
        // raw standard normal inputs, no pairing or normalization needed
        Eigen::MatrixXd X(cfg.n_inputs, cfg.width);
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = input_rs.normal();
        const auto weights =
            detail::sample_network(cfg.scheme, cfg.width, cfg.depth, cfg.seed, static_cast<int>(net));
        per_net[net] = forward_signals(weights, X);
    });

    DeadNodeReport rep;
    std::vector<std::uint64_t> dead(cfg.depth, 0), total(cfg.depth, 0);
    for (const auto& st : per_net)
        for (Eigen::Index l = 0; l < st.finite_layers; ++l) {
            dead[l] += st.dead[l];
            total[l] += st.total[l];
        }
    std::uint64_t d_all = 0, t_all = 0;
    for (Eigen::Index l = 0; l < cfg.depth; ++l) {
        if (total[l] == 0) break;
        rep.per_layer.push_back(static_cast<double>(dead[l]) / static_cast<double>(total[l]));
        d_all += dead[l];
        t_all += total[l];
    }
    if (rep.per_layer.size() < 2) throw std::runtime_error("dead_node_report: propagation truncated before layer 2");
    rep.probability = rep.per_layer[1];
    rep.all_layer_average = static_cast<double>(d_all) / static_cast<double>(t_all);
    return rep;
}

inline double dead_node_probability(const PropagationConfig& cfg, int threads = 1) {
    return dead_node_report(cfg, threads).probability;
}

struct BoundaryScanPoint {
    double sigma2_w = 0.0;
    double growth = 0.0;
    double final_c = 0.0;
    bool truncated = false;
    bool chaotic = false;
};

struct BoundaryReport {
    std::optional<double> length_boundary;
    std::optional<double> chaos_boundary;
    std::vector<BoundaryScanPoint> points;
    std::vector<LayerStatsCurve> curves;  // one per grid point
};

/// Scans sigma2_w over `grid` and reports the smallest value whose trailing
/// per-layer growth rate exceeds 1 + growth_margin and the smallest value
/// whose correlation sits below 1 - delta over the last 5 layers. Empty
/// optionals mean the grid did not bracket the corresponding boundary.
///
/// The growth rate is measured over the trailing `growth_window` layers
/// (clamped to half the curve): at a converged plateau the 10-layer rate
/// fluctuates by ~1% at desk-scale ensembles, so a long window plus a 1%
/// margin keeps subcritical grid points from tripping the detector while a
/// genuinely supercritical rate (>= 1.01/layer near the boundary grid steps)
/// still registers.
inline BoundaryReport locate_empirical_boundary(Family family, const std::vector<double>& grid,
                                                PropagationConfig cfg, double delta = 0.02,
                                                double growth_margin = 0.01, int threads = 1,
                                                Eigen::Index growth_window = 40) {
    if (grid.empty()) throw std::invalid_argument("locate_empirical_boundary: empty grid");
    BoundaryReport rep;
    for (double s2w : grid) {
        cfg.scheme.family = family;
        cfg.scheme.sigma2_w = s2w;
        const LayerStatsCurve curve = measure_curves(cfg, threads);
        BoundaryScanPoint pt;
        pt.sigma2_w = s2w;
        pt.truncated = curve.truncated;
        const Eigen::Index window = std::min<Eigen::Index>(growth_window, curve.layers / 2);
        pt.growth = curve.truncated || window < 1
                        ? std::numeric_limits<double>::infinity()
                        : curve.tail_growth_rate(window);
        pt.final_c = curve.truncated ? std::numeric_limits<double>::quiet_NaN()
                                     : curve.final_mean_c();
        if (!curve.truncated && curve.layers >= 5) {
            pt.chaotic = true;
            for (Eigen::Index l = curve.layers - 5; l < curve.layers; ++l)
                if (curve.mean_c[l] >= 1.0 - delta) pt.chaotic = false;
        }
        if (!rep.length_boundary && pt.growth > 1.0 + growth_margin) rep.length_boundary = s2w;
        if (!rep.chaos_boundary && pt.chaotic) rep.chaos_boundary = s2w;
        rep.points.push_back(pt);
        rep.curves.push_back(curve);
    }
    return rep;
}

}  // namespace corrprop::mc
