#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

// Stability integrals for the asymmetric (beta-substituted) initializations
// and root finding for their critical variances.
//
// Model: after normalizing by the activation RMS, the pre-activation of a
// node is  hhat = a z + r u  with z ~ N(0,1) and u ~ Beta(2,1):
//
//   length slope   zeta(s2w) = E[ (relu(a z + r u))^2 ]
//                            = a^2 E[ relu'(.)^2 ] + r E[ u relu'(.) relu(.) ]
//   c = 1 slope    chi1(s2w) = s2w * P(a z + r u > 0)
//
// RAI: a = sqrt(s2w). RAAI: the row anti-correlation shrinks the Gaussian
// part of the length map, a = sqrt(g * s2w) with g = 1 - kappa * rho,
// kappa = k/(1+k); in the correlation-coefficient map the same shrink
// appears in numerator and normalization and cancels, so chi1 is k-free.
//
// Approximation of the activation multiplying the beta draw:
//   RMS : r = 1 (activation RMS), rho = 1 - 1/pi (centered-activation
//         variance of a rectified Gaussian).
//   Mean: r = sqrt(2/pi) (mean-to-RMS ratio of the live activation),
//         rho = 1/sqrt(pi).
//
// The Beta(2,1) factor is integrated by Gauss-Legendre on [0,1] with the
// density 2u absorbed into the weights; the Gaussian factor is integrated
// exactly (the integrands are piecewise polynomials in z, so the half-moments
// Phi and the normal pdf at the kink are exact and keep the reported values
// stable under any order doubling). A Gauss-Hermite rule is provided for
// smooth Gaussian integrands.

namespace corrprop::quad {

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;

    template <typename F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }

    double total_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Gauss-Legendre rule on [0,1] (Newton iteration on the recurrence).
inline Rule gauss_legendre_01(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre_01: order must be >= 1");
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        // map [-1,1] -> [0,1]
        r.nodes[i] = 0.5 * (1.0 - z);
        r.nodes[n - 1 - i] = 0.5 * (1.0 + z);
        const double w = 1.0 / ((1.0 - z * z) * pp * pp);
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

/// Gauss rule for E_{z~N(0,1)}[f(z)] (Golub-Welsch on the Hermite
/// recurrence); weights sum to 1.
inline Rule gauss_hermite_normal(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite_normal: order must be >= 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1 > 0 ? n - 1 : 0);
    for (int i = 1; i < n; ++i) sub[i - 1] = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = std::numbers::sqrt2 * es.eigenvalues()[i];
        const double v0 = es.eigenvectors()(0, i);
        r.weights[i] = v0 * v0;
    }
    return r;
}

enum class Approximation { RMS, Mean };

inline std::string approximation_name(Approximation a) {
    return a == Approximation::RMS ? "rms" : "mean";
}

/// Coefficient of the beta draw (activation / activation RMS).
inline double beta_coefficient(Approximation a) {
    return a == Approximation::RMS ? 1.0 : std::sqrt(2.0 / std::numbers::pi);
}

/// Anti-correlation shrink of the Gaussian part of the length map:
/// g = 1 - kappa * rho.
inline double length_shrink(double k, Approximation a) {
    if (k <= -1.0) throw std::invalid_argument("length_shrink: k must be > -1");
    const double kappa = k / (1.0 + k);
    const double rho = a == Approximation::RMS ? 1.0 - 1.0 / std::numbers::pi
                                               : 1.0 / std::sqrt(std::numbers::pi);
    return 1.0 - kappa * rho;
}

struct QuadratureGrid {
    int hermite_order = 64;
    int beta_order = 64;

    QuadratureGrid(int hermite = 64, int beta = 64) : hermite_order(hermite), beta_order(beta) {
        if (hermite_order < 16 || beta_order < 16)
            throw std::invalid_argument("QuadratureGrid: orders must be >= 16");
        beta_rule_ = gauss_legendre_01(beta_order);
        // absorb the Beta(2,1) density 2u into the weights
        for (std::size_t i = 0; i < beta_rule_.nodes.size(); ++i)
            beta_rule_.weights[i] *= 2.0 * beta_rule_.nodes[i];
        hermite_rule_ = gauss_hermite_normal(hermite_order);
    }

    /// E_{u~Beta(2,1)}[f(u)]
    template <typename F>
    double beta_expect(F&& f) const {
        return beta_rule_.integrate(std::forward<F>(f));
    }

    /// E_{z~N(0,1)}[f(z)] for smooth f
    template <typename F>
    double normal_expect(F&& f) const {
        return hermite_rule_.integrate(std::forward<F>(f));
    }

    double beta_weight_sum() const { return beta_rule_.total_weight(); }
    double hermite_weight_sum() const { return hermite_rule_.total_weight(); }

  private:
    Rule beta_rule_;
    Rule hermite_rule_;
};

namespace detail {

/// E_z[ relu'(a z + c)^2 ] = P(a z + c > 0) = Phi(c/a)
inline double gain_z(double a, double c) { return normal_cdf(c / a); }

/// E_z[ relu'(a z + c) relu(a z + c) ] = E[(a z + c)^+]
inline double ramp_z(double a, double c) {
    const double t = c / a;
    return a * normal_pdf(t) + c * normal_cdf(t);
}

/// E_z[ relu(a z + c)^2 ]
inline double sq_z(double a, double c) {
    const double t = c / a;
    return (a * a + c * c) * normal_cdf(t) + a * c * normal_pdf(t);
}

}  // namespace detail

/// E[ relu'(a z + r u)^2 ]
inline double gain_integral(double a, double r, const QuadratureGrid& g) {
    return g.beta_expect([&](double u) { return detail::gain_z(a, r * u); });
}

/// E[ u relu'(a z + r u) relu(a z + r u) ]  (the beta-entry cross term)
inline double beta_cross_integral(double a, double r, const QuadratureGrid& g) {
    return g.beta_expect([&](double u) { return u * detail::ramp_z(a, r * u); });
}

/// E[ relu(a z + r u)^2 ]
inline double square_integral(double a, double r, const QuadratureGrid& g) {
    return g.beta_expect([&](double u) { return detail::sq_z(a, r * u); });
}

/// Length-map slope for RAI. Limits: s2w -> 0 gives r^2 E[u^2] = r^2/2 (the
/// beta entry alone still carries signal).
inline double zeta_rai(double sigma2_w, const QuadratureGrid& g,
                       Approximation approx = Approximation::RMS) {
    if (!(sigma2_w > 0)) throw std::invalid_argument("zeta_rai: sigma2_w must be > 0");
    const double r = beta_coefficient(approx);
    return square_integral(std::sqrt(sigma2_w), r, g);
}

/// c=1 stability coefficient for RAI; root of chi1 = 1 is the order-chaos
/// prediction.
inline double chi1_rai(double sigma2_w, const QuadratureGrid& g,
                       Approximation approx = Approximation::RMS) {
    if (!(sigma2_w > 0)) throw std::invalid_argument("chi1_rai: sigma2_w must be > 0");
    const double r = beta_coefficient(approx);
    return sigma2_w * gain_integral(std::sqrt(sigma2_w), r, g);
}

/// Length-map slope for RAAI: zeta_rai with the Gaussian part shrunk by
/// g = 1 - kappa * rho. Reduces to zeta_rai at k = 0.
inline double zeta_raai(double sigma2_w, double k, const QuadratureGrid& g,
                        Approximation approx = Approximation::RMS) {
    if (!(sigma2_w > 0)) throw std::invalid_argument("zeta_raai: sigma2_w must be > 0");
    const double r = beta_coefficient(approx);
    return square_integral(std::sqrt(length_shrink(k, approx) * sigma2_w), r, g);
}

/// c=1 stability coefficient for RAAI. The anti-correlation shrink cancels
/// between the overlap map and its normalization, so the coefficient is
/// k-independent and equals chi1_rai.
inline double chi1_raai(double sigma2_w, double k, const QuadratureGrid& g,
                        Approximation approx = Approximation::RMS) {
    if (k <= -1.0) throw std::invalid_argument("chi1_raai: k must be > -1");
    return chi1_rai(sigma2_w, g, approx);
}

/// Bisection for coefficient(s2w) = 1 on [lo, hi]. Deterministic; throws if
/// the bracket does not straddle 1.
inline double find_critical_variance(const std::function<double(double)>& coefficient,
                                     double lo, double hi, double tol = 1e-10) {
    if (!(lo > 0) || !(hi > lo)) throw std::invalid_argument("find_critical_variance: bad bracket");
    if (!(tol > 0)) throw std::invalid_argument("find_critical_variance: tol must be > 0");
    double flo = coefficient(lo) - 1.0;
    double fhi = coefficient(hi) - 1.0;
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0)
        throw std::runtime_error("find_critical_variance: no sign change in bracket");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = coefficient(mid) - 1.0;
        if (std::abs(fm) < tol || 0.5 * (hi - lo) < 1e-14) return mid;
        if (flo * fm <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

struct CriticalPoint {
    std::string approximation;
    std::string scheme;
    std::string quantity;  // "length" or "correlation"
    double critical_sigma2_w;
};

/// The six critical variances (both approximations) for RAI/RAAI at the
/// given correlation strength.
inline std::vector<CriticalPoint> critical_points_table(const QuadratureGrid& g,
                                                        double k = 100.0) {
    std::vector<CriticalPoint> rows;
    for (Approximation ap : {Approximation::RMS, Approximation::Mean}) {
        const std::string apn = approximation_name(ap);
        rows.push_back({apn, "RAI", "length",
                        find_critical_variance(
                            [&](double x) { return zeta_rai(x, g, ap); }, 0.1, 1.5)});
        rows.push_back({apn, "RAAI", "correlation",
                        find_critical_variance(
                            [&](double x) { return chi1_raai(x, k, g, ap); }, 0.5, 2.5)});
        rows.push_back({apn, "RAAI", "length",
                        find_critical_variance(
                            [&](double x) { return zeta_raai(x, k, g, ap); }, 0.5, 3.5)});
    }
    return rows;
}

}  // namespace corrprop::quad
