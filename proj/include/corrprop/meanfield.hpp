#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

// Closed-form mean-field maps for ReLU networks with correlated Gaussian
// weights. With kappa = k/(1+k):
//
//   q^l   = (s2w/2) (1 - kappa/pi) q^{l-1} + s2b
//   q12^l = (s2w/2) (f(c) - kappa/pi) sqrt(q1 q2) + s2b,   c = q12/sqrt(q1 q2)
//   f(c)  = c/2 + (c/pi) asin(c) + sqrt(1-c^2)/pi
//
// Phase structure: the length is bounded iff s2w < g_k = 2/(1 - kappa/pi);
// the c = 1 fixed point is stable iff chi1 = s2w/2 < 1.

namespace corrprop::meanfield {

struct MapParams {
    double sigma2_w = 2.0;
    double sigma2_b = 0.0;
    double k = 0.0;

    void validate() const {
        if (!std::isfinite(sigma2_w) || !std::isfinite(sigma2_b) || !std::isfinite(k))
            throw std::invalid_argument("MapParams: non-finite parameter");
        if (sigma2_w < 0 || sigma2_b < 0) throw std::invalid_argument("MapParams: negative variance");
        if (k <= -1.0) throw std::invalid_argument("MapParams: k must be > -1");
    }

    double kappa() const { return k / (1.0 + k); }
};

struct MapState {
    double q1 = 1.0;
    double q2 = 1.0;
    double q12 = 0.0;

    void validate() const {
        if (q1 < 0 || q2 < 0) throw std::invalid_argument("MapState: negative length");
        const double bound = std::sqrt(q1 * q2);
        if (std::abs(q12) > bound * (1.0 + 1e-12) + 1e-300)
            throw std::invalid_argument("MapState: |q12| exceeds sqrt(q1 q2)");
    }

    double correlation() const {
        const double denom = std::sqrt(q1 * q2);
        if (denom == 0.0) throw std::domain_error("MapState: correlation undefined at zero length");
        return q12 / denom;
    }
};

enum class PhaseLabel { BoundedOrdered, BoundedChaotic, Unbounded };

inline std::string phase_name(PhaseLabel p) {
    switch (p) {
        case PhaseLabel::BoundedOrdered: return "bounded_ordered";
        case PhaseLabel::BoundedChaotic: return "bounded_chaotic";
        case PhaseLabel::Unbounded: return "unbounded";
    }
    throw std::logic_error("bad phase");
}

/// ReLU correlation kernel f(c); monotone nondecreasing on [-1,1], f(-1)=0,
/// f(0)=1/pi, f(1)=1. Inputs within 1e-12 of the boundary are clamped.
inline double f_corr(double c) {
    if (std::abs(c) > 1.0 + 1e-12)
        throw std::domain_error("f_corr: |c| > 1");
    c = std::clamp(c, -1.0, 1.0);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    return 0.5 * c + (c * std::asin(c) + s) / std::numbers::pi;
}

/// One step of the length map.
inline double length_step(double q, const MapParams& p) {
    if (q < 0) throw std::invalid_argument("length_step: q must be >= 0");
    return 0.5 * p.sigma2_w * (1.0 - p.kappa() / std::numbers::pi) * q + p.sigma2_b;
}

/// Contraction coefficient of the length map.
inline double length_coefficient(const MapParams& p) {
    return 0.5 * p.sigma2_w * (1.0 - p.kappa() / std::numbers::pi);
}

/// One step of the joint (q1, q2, q12) map. When q1*q2 = 0 the correlation is
/// undefined; with sigma2_b > 0 the overlap restarts from the bias term,
/// otherwise the state is degenerate.
inline MapState corr_step(const MapState& s, const MapParams& p) {
    s.validate();
    p.validate();
    MapState out;
    out.q1 = length_step(s.q1, p);
    out.q2 = length_step(s.q2, p);
    const double geo = std::sqrt(s.q1 * s.q2);
    if (geo == 0.0) {
        if (p.sigma2_b == 0.0)
            throw std::domain_error("corr_step: zero-length state with zero bias variance");
        out.q12 = p.sigma2_b;
        return out;
    }
    const double c = s.q12 / geo;
    out.q12 = 0.5 * p.sigma2_w * (f_corr(c) - p.kappa() / std::numbers::pi) * geo + p.sigma2_b;
    return out;
}

/// Slope of the correlation-coefficient map at c = 1 (independent of k and
/// sigma2_b): chi1 = s2w/2.
inline double chi1(const MapParams& p) { return 0.5 * p.sigma2_w; }

/// Length-divergence boundary g_k = 2/(1 - kappa/pi). The denominator is
/// positive for every k > -1 (kappa < 1 < pi); a non-positive denominator is
/// reported as an unbounded boundary.
inline double g_k(double k) {
    if (k <= -1.0) throw std::invalid_argument("g_k: k must be > -1");
    const double denom = 1.0 - (k / (1.0 + k)) / std::numbers::pi;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 / denom;
}

/// Phase classification. Boundary values resolve to the bounded /
/// non-chaotic side: s2w == g_k is Bounded*, s2w == 2 is BoundedOrdered.
inline PhaseLabel classify_phase(const MapParams& p) {
    p.validate();
    if (p.sigma2_w > g_k(p.k)) return PhaseLabel::Unbounded;
    if (p.sigma2_w > 2.0) return PhaseLabel::BoundedChaotic;
    return PhaseLabel::BoundedOrdered;
}

struct FixedPoints {
    bool q_unbounded = false;
    double q_star = 0.0;       // valid when !q_unbounded
    bool c_defined = false;
    double c_star = 0.0;       // valid when c_defined
    bool converged = true;     // false when max_iter was exhausted
    double last_iterate = 0.0; // last c iterate when !converged
    int iterations = 0;
};

/// Fixed points by direct iteration (mirrors the layer recursion).
/// q* from q = 1; unbounded when the iterate exceeds 1e12 or the linear
/// coefficient makes divergence certain. c* from c = 0.5 at fixed q*
/// (starting in the interior so a chaotic fixed point is reached instead of
/// the unstable c = 1).
inline FixedPoints solve_fixed_points(const MapParams& p, double tol = 1e-10,
                                      int max_iter = 100000) {
    p.validate();
    if (!(tol > 0)) throw std::invalid_argument("solve_fixed_points: tol must be > 0");
    FixedPoints fp;

    const double a = length_coefficient(p);
    if (a > 1.0 || (a == 1.0 && p.sigma2_b > 0.0)) {
        fp.q_unbounded = true;
    } else if (a == 1.0) {
        fp.q_star = 1.0;  // critical line: every q is a fixed point; keep q0
    } else {
        double q = 1.0;
        for (int i = 0; i < max_iter; ++i) {
            const double qn = length_step(q, p);
            fp.iterations = i + 1;
            if (qn > 1e12) {
                fp.q_unbounded = true;
                break;
            }
            if (std::abs(qn - q) < tol) {
                q = qn;
                break;
            }
            q = qn;
        }
        fp.q_star = (p.sigma2_b == 0.0) ? 0.0 : q;  // vanishing signal for a<1, s2b=0
    }

    if (fp.q_unbounded || fp.q_star <= 0.0) return fp;  // c* undefined

    const double qs = fp.q_star;
    double c = 0.5;
    bool ok = false;
    for (int i = 0; i < max_iter; ++i) {
        const double cn =
            (0.5 * p.sigma2_w * (f_corr(c) - p.kappa() / std::numbers::pi) * qs + p.sigma2_b) / qs;
        if (std::abs(cn - c) < tol) {
            c = cn;
            ok = true;
            break;
        }
        c = cn;
    }
    fp.c_defined = true;
    fp.c_star = std::clamp(c, -1.0, 1.0);
    fp.converged = ok;
    fp.last_iterate = c;
    return fp;
}

}  // namespace corrprop::meanfield
