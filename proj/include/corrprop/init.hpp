#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "corrprop/rng.hpp"

// Weight/bias samplers: He, correlated Gaussian (anti- or positively
// correlated rows), RAI and RAAI.
//
// A correlated row has distribution N(0, A) with
//     A = (sigma2_w / n_in) * (I - (k/(1+k)) * J / n),
// where J is the all-ones matrix and n the dimension of the correlated block
// (n = n_in for plain correlated rows, n = n_in + 1 for the RAAI augmented
// row). Rows reaching different nodes are independent.

namespace corrprop {

enum class Family { He, CorrelatedGaussian, RAI, RAAI };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::He: return "He";
        case Family::CorrelatedGaussian: return "CorrelatedGaussian";
        case Family::RAI: return "RAI";
        case Family::RAAI: return "RAAI";
    }
    throw std::logic_error("bad family");
}

inline Family family_from_name(const std::string& s) {
    if (s == "He" || s == "he") return Family::He;
    if (s == "CorrelatedGaussian" || s == "corr" || s == "aci" || s == "ACI")
        return Family::CorrelatedGaussian;
    if (s == "RAI" || s == "rai") return Family::RAI;
    if (s == "RAAI" || s == "raai") return Family::RAAI;
    throw std::invalid_argument("unknown init family: " + s);
}

struct InitScheme {
    Family family = Family::He;
    double sigma2_w = 2.0;
    double sigma2_b = 0.0;
    double k = 0.0;  // correlation strength; 0 = uncorrelated

    void validate() const {
        if (!std::isfinite(sigma2_w) || !std::isfinite(sigma2_b) || !std::isfinite(k))
            throw std::invalid_argument("InitScheme: non-finite parameter");
        if (sigma2_w < 0 || sigma2_b < 0)
            throw std::invalid_argument("InitScheme: negative variance");
        if (k <= -1.0)
            throw std::invalid_argument("InitScheme: k must be > -1 (covariance not positive definite)");
    }

    static InitScheme he(double s2w = 2.0, double s2b = 0.0) {
        return {Family::He, s2w, s2b, 0.0};
    }
    static InitScheme aci(double s2w = 2.0, double s2b = 0.0, double k = 100.0) {
        return {Family::CorrelatedGaussian, s2w, s2b, k};
    }
    static InitScheme rai(double s2w = 0.36) { return {Family::RAI, s2w, 0.0, 0.0}; }
    static InitScheme raai(double s2w = 0.9, double k = 100.0) {
        return {Family::RAAI, s2w, 0.0, k};
    }
};

inline void to_json(nlohmann::json& j, const InitScheme& s) {
    j = nlohmann::json{{"family", family_name(s.family)},
                       {"sigma2_w", s.sigma2_w},
                       {"sigma2_b", s.sigma2_b},
                       {"k", s.k}};
}

inline void from_json(const nlohmann::json& j, InitScheme& s) {
    s.family = family_from_name(j.at("family").get<std::string>());
    s.sigma2_w = j.at("sigma2_w").get<double>();
    s.sigma2_b = j.at("sigma2_b").get<double>();
    s.k = j.at("k").get<double>();
    s.validate();
}

struct LayerWeights {
    Eigen::MatrixXd weights;  // n_out x n_in
    Eigen::VectorXd bias;     // n_out
    InitScheme scheme;
    std::uint64_t seed = 0;
    // index of the beta-substituted entry per augmented row (RAI/RAAI only;
    // n_in means the bias slot)
    std::vector<Eigen::Index> beta_index;

    Eigen::Index n_out() const { return weights.rows(); }
    Eigen::Index n_in() const { return weights.cols(); }
};

/// beta solving (I - beta J/n)(I - beta J/n)^T = I - (k/(1+k)) J/n,
/// i.e. 2*beta - beta^2 = k/(1+k); the root in (-inf, 1] is
/// beta = 1 - sqrt(1/(1+k)). Negative for k < 0 (positive correlations).
inline double row_transform_beta(double k) {
    if (k <= -1.0) throw std::invalid_argument("correlation strength k must be > -1");
    return 1.0 - 1.0 / std::sqrt(1.0 + k);
}

namespace detail {

/// Fills `row` (length n) with N(0, (sigma2/norm_dim) * (I - (k/(1+k)) J/n))
/// using the rank-one transform w = sqrt(sigma2/norm_dim) * (I - beta J/n) z.
/// O(n) per row; exact for this covariance family.
inline void fill_correlated(Eigen::Ref<Eigen::VectorXd> row, double sigma2, double k,
                            Eigen::Index norm_dim, RandomStream& rng) {
    const Eigen::Index n = row.size();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        row[i] = rng.normal();
        sum += row[i];
    }
    const double beta = row_transform_beta(k);
    const double shift = beta * sum / static_cast<double>(n);
    const double scale = std::sqrt(sigma2 / static_cast<double>(norm_dim));
    for (Eigen::Index i = 0; i < n; ++i) row[i] = scale * (row[i] - shift);
}

}  // namespace detail

/// One weight row of n_in entries with distribution N(0, A), A as in the
/// header comment. k = 0 degenerates to i.i.d. N(0, sigma2_w/n_in).
inline Eigen::VectorXd sample_correlated_row(Eigen::Index n_in, double sigma2_w, double k,
                                             RandomStream& rng) {
    if (n_in < 1) throw std::invalid_argument("sample_correlated_row: n_in must be >= 1");
    if (!(sigma2_w > 0) || !std::isfinite(sigma2_w) || !std::isfinite(k))
        throw std::invalid_argument("sample_correlated_row: bad parameters");
    if (k <= -1.0) throw std::invalid_argument("sample_correlated_row: k must be > -1");
    Eigen::VectorXd row(n_in);
    detail::fill_correlated(row, sigma2_w, k, n_in, rng);
    return row;
}

/// Samples a full layer. Row i (all weights and, for RAI/RAAI, the bias
/// reaching node i) is drawn independently of every other row, in row order,
/// from the given stream.
///
/// He / CorrelatedGaussian: rows via sample_correlated_row, bias i.i.d.
/// N(0, sigma2_b) drawn after each row.
/// RAI: augmented rows of n_in+1 i.i.d. N(0, sigma2_w/n_in) entries, one
/// uniformly chosen entry per row replaced by a Beta(2,1) draw; the last
/// augmented entry is the bias.
/// RAAI: like RAI but the augmented row is correlated with covariance
/// (sigma2_w/n_in) * (I_{n_in+1} - (k/(1+k)) J/(n_in+1)).
inline LayerWeights sample_layer(const InitScheme& scheme, Eigen::Index n_in,
                                 Eigen::Index n_out, RandomStream& rng,
                                 std::uint64_t seed_tag = 0) {
    scheme.validate();
    if (n_in < 1 || n_out < 1) throw std::invalid_argument("sample_layer: empty layer");

    LayerWeights lw;
    lw.scheme = scheme;
    lw.seed = seed_tag;
    lw.weights.resize(n_out, n_in);
    lw.bias.resize(n_out);

    if (scheme.family == Family::He || scheme.family == Family::CorrelatedGaussian) {
        const double k = scheme.family == Family::He ? 0.0 : scheme.k;
        const double sb = std::sqrt(scheme.sigma2_b);
        Eigen::VectorXd row(n_in);
        for (Eigen::Index i = 0; i < n_out; ++i) {
            detail::fill_correlated(row, scheme.sigma2_w, k, n_in, rng);
            lw.weights.row(i) = row;
            lw.bias[i] = sb * rng.normal();
        }
        return lw;
    }

    // RAI / RAAI: augmented (weights || bias) row of m = n_in + 1 entries.
    const Eigen::Index m = n_in + 1;
    Eigen::VectorXd aug(m);
    lw.beta_index.reserve(n_out);
    for (Eigen::Index i = 0; i < n_out; ++i) {
        if (scheme.family == Family::RAI) {
            const double scale = std::sqrt(scheme.sigma2_w / static_cast<double>(n_in));
            for (Eigen::Index j = 0; j < m; ++j) aug[j] = scale * rng.normal();
        } else {
            detail::fill_correlated(aug, scheme.sigma2_w, scheme.k, n_in, rng);
        }
        const auto pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(m)));
        aug[pick] = rng.beta21();
        lw.beta_index.push_back(pick);
        lw.weights.row(i) = aug.head(n_in);
        lw.bias[i] = aug[m - 1];
    }
    return lw;
}

/// Analytic covariance of the Gaussian part of a scheme's weight row
/// (n_in x n_in block).
inline Eigen::MatrixXd analytic_row_covariance(const InitScheme& scheme, Eigen::Index n_in) {
    scheme.validate();
    const double k = scheme.family == Family::He || scheme.family == Family::RAI ? 0.0 : scheme.k;
    // RAAI correlates the augmented block of dimension n_in+1.
    const Eigen::Index block = scheme.family == Family::RAAI ? n_in + 1 : n_in;
    const double kappa = k / (1.0 + k);
    const double diag = scheme.sigma2_w / static_cast<double>(n_in);
    const double off = -diag * kappa / static_cast<double>(block);
    Eigen::MatrixXd A = Eigen::MatrixXd::Constant(n_in, n_in, off);
    A.diagonal().array() = diag + off;
    return A;
}

/// Second-moment matrix (1/n) sum_r w_r w_r^T of n_samples weight rows drawn
/// from the Gaussian part of the scheme (no beta substitution), for
/// comparison against analytic_row_covariance.
inline Eigen::MatrixXd empirical_row_covariance(const InitScheme& scheme, Eigen::Index n_in,
                                                Eigen::Index n_samples, RandomStream& rng) {
    scheme.validate();
    if (n_in < 1) throw std::invalid_argument("empirical_row_covariance: n_in must be >= 1");
    if (n_samples < 1000)
        throw std::invalid_argument("empirical_row_covariance: need n_samples >= 1000");

    const bool raai = scheme.family == Family::RAAI;
    const Eigen::Index block = raai ? n_in + 1 : n_in;
    const double k = scheme.family == Family::He || scheme.family == Family::RAI ? 0.0 : scheme.k;

    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_in, n_in);
    Eigen::VectorXd row(block);
    for (Eigen::Index s = 0; s < n_samples; ++s) {
        if (scheme.family == Family::RAI) {
            const double scale = std::sqrt(scheme.sigma2_w / static_cast<double>(n_in));
            for (Eigen::Index j = 0; j < block; ++j) row[j] = scale * rng.normal();
        } else {
            detail::fill_correlated(row, scheme.sigma2_w, k, n_in, rng);
        }
        acc.selfadjointView<Eigen::Lower>().rankUpdate(row.head(n_in), 1.0);
    }
    acc /= static_cast<double>(n_samples);
    return acc.selfadjointView<Eigen::Lower>();
}

}  // namespace corrprop
