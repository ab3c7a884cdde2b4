#pragma once

// Standard bivariate normal with unknown correlation theta, reduced to
// X1 = (1 + theta) U1, X2 = (1 - theta) U2, U_i iid ChiSq(n).
//
// Local conditional IM at theta0: eta(u) = (1+theta0) log u1 + (1-theta0) log u2,
// T = log(X1/X2) = z(theta) + V_T, z(theta) = log{(1+theta)/(1-theta)}, and
// V_T given eta = h0 has log-density
//   -n theta0 v / 2 - cosh(v/2) exp{(h0 - theta0 v)/2}   (log-concave).

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "imcond/assoc_finder.hpp"
#include "imcond/dist.hpp"
#include "imcond/engine.hpp"
#include "imcond/error.hpp"
#include "imcond/models/common.hpp"
#include "imcond/rng.hpp"

namespace imcond::models {

struct BvnStats {
    double x1 = 0.0;
    double x2 = 0.0;
    std::size_t n = 0;
};

/// Sums of squares of (a + b) / sqrt 2 and (a - b) / sqrt 2 over the pairs.
inline BvnStats bvn_reduce(const std::vector<std::array<double, 2>>& pairs) {
    BvnStats s;
    for (const auto& p : pairs) {
        s.x1 += 0.5 * (p[0] + p[1]) * (p[0] + p[1]);
        s.x2 += 0.5 * (p[0] - p[1]) * (p[0] - p[1]);
    }
    s.n = pairs.size();
    if (!(s.x1 > 0.0) || !(s.x2 > 0.0)) throw DomainError("bvn: sums of squares must be positive");
    return s;
}

inline double bvn_z(double theta) { return std::log((1.0 + theta) / (1.0 - theta)); }

inline double bvn_h0(const BvnStats& s, double theta0) {
    return (1.0 + theta0) * std::log(s.x1 / (1.0 + theta0)) + (1.0 - theta0) * std::log(s.x2 / (1.0 - theta0));
}

inline double bvn_log_density(double n, double h0, double theta0, double v) {
    return -0.5 * n * theta0 * v - std::cosh(0.5 * v) * std::exp(0.5 * (h0 - theta0 * v));
}

/// Mode and curvature scale of the conditional density at (h0, theta0).
inline std::pair<double, double> bvn_mode(double n, double h0, double theta0) {
    auto d1 = [&](double v) {
        const double e = std::exp(0.5 * (h0 - theta0 * v));
        return -0.5 * n * theta0 - 0.5 * std::sinh(0.5 * v) * e + 0.5 * theta0 * std::cosh(0.5 * v) * e;
    };
    auto d2 = [&](double v) {
        const double e = std::exp(0.5 * (h0 - theta0 * v));
        return -0.25 * e * ((1.0 + theta0 * theta0) * std::cosh(0.5 * v) - 2.0 * theta0 * std::sinh(0.5 * v));
    };
    // d1 is decreasing; bracket its root then Newton with bisection fallback.
    double lo = -1.0, hi = 1.0;
    while (d1(lo) < 0.0) {
        hi = lo;
        lo *= 2.0;
        if (lo < -1e4) throw EstimationError("bvn: conditional density has no mode");
    }
    while (d1(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e4) throw EstimationError("bvn: conditional density has no mode");
    }
    double v = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double g = d1(v);
        if (g > 0.0) lo = v;
        else hi = v;
        double nv = v - g / d2(v);
        if (!(nv > lo && nv < hi)) nv = 0.5 * (lo + hi);
        if (std::abs(nv - v) <= 1e-13 * (1.0 + std::abs(v))) {
            v = nv;
            break;
        }
        v = nv;
    }
    return {v, 1.0 / std::sqrt(-d2(v))};
}

inline LawPtr bvn_local_law(const BvnStats& s, double theta0) {
    if (!(theta0 > -1.0 && theta0 < 1.0)) throw DomainError("bvn: theta0 must lie in (-1,1)");
    const double n = static_cast<double>(s.n);
    const double h0 = bvn_h0(s, theta0);
    const auto [mode, scale] = bvn_mode(n, h0, theta0);
    return std::make_shared<DensityLaw>(
        NormalizedDensity([n, h0, theta0](double v) { return bvn_log_density(n, h0, theta0, v); }, mode, scale));
}

inline ConditionalModel bvn_model(const BvnStats& s) {
    if (!(s.x1 > 0.0) || !(s.x2 > 0.0)) throw DomainError("bvn: x1 and x2 must be positive");
    ConditionalModel m;
    m.name = "bvn";
    m.t = std::log(s.x1 / s.x2);
    m.theta_space = {-1.0, 1.0};
    const double t = m.t;
    m.residual = [t](double th) { return t - bvn_z(th); };
    m.residual_decreasing = true;
    m.local_law = [s](double th0) { return bvn_local_law(s, th0); };
    m.theta_hint = std::tanh(0.5 * t);
    m.theta_step = 0.5 * (1.0 - m.theta_hint * m.theta_hint) / std::sqrt(static_cast<double>(s.n));
    return m;
}

inline double bvn_cpl(double x1, double x2, std::size_t n, double theta) {
    return ConditionalIM(bvn_model({x1, x2, n})).cpl_singleton(theta);
}

/// log-likelihood of (x1, x2) up to a constant.
inline double bvn_loglik(double theta, double x1, double x2, double n) {
    return -0.5 * n * (std::log1p(theta) + std::log1p(-theta)) - 0.5 * x1 / (1.0 + theta) - 0.5 * x2 / (1.0 - theta);
}

/// Fisher information by finite differences at the expected statistics.
inline double bvn_fisher_info(double theta, std::size_t n) {
    const double nn = static_cast<double>(n);
    Eigen::VectorXd th(1);
    th << theta;
    return numeric_fisher_information(
        [nn](const Eigen::VectorXd& t, const Eigen::VectorXd& st) { return bvn_loglik(t[0], st[0], st[1], nn); },
        [nn](const Eigen::VectorXd& t) {
            Eigen::VectorXd e(2);
            e << nn * (1.0 + t[0]), nn * (1.0 - t[0]);
            return e;
        },
        th, std::min(1e-4, 1e-3 * (1.0 - std::abs(theta))))(0, 0);
}

inline double bvn_mle(const BvnStats& s) {
    const double n = static_cast<double>(s.n);
    // Coarse scan in s = atanh(theta), then golden-section refinement.
    auto f = [&](double a) { return bvn_loglik(std::tanh(a), s.x1, s.x2, n); };
    double best = 0.0, fb = f(0.0);
    for (int i = -400; i <= 400; ++i) {
        const double a = i * 0.02;
        const double fa = f(a);
        if (fa > fb) {
            fb = fa;
            best = a;
        }
    }
    double lo = best - 0.02, hi = best + 0.02;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f(d);
        }
    }
    return std::tanh(0.5 * (lo + hi));
}

inline Interval bvn_mle_interval(const BvnStats& s, double alpha) {
    const double n = static_cast<double>(s.n);
    const double th = bvn_mle(s);
    const double j = 0.5 * n / ((1 + th) * (1 + th)) - s.x1 / std::pow(1 + th, 3) + 0.5 * n / ((1 - th) * (1 - th)) -
                     s.x2 / std::pow(1 - th, 3);
    if (!(-j > 0.0)) throw EstimationError("bvn_mle_interval: observed information is not positive");
    const double half = Dist1D::normal(0.0, 1.0).quantile(1.0 - 0.5 * alpha) / std::sqrt(-j);
    return {std::max(-1.0, th - half), std::min(1.0, th + half)};
}

/// Central credible interval under the Jeffreys prior, integrating in atanh(theta).
inline Interval bvn_bayes_jeffreys_interval(const BvnStats& s, double alpha) {
    const double n = static_cast<double>(s.n);
    auto logpost = [&s, n](double a) {
        const double th = std::tanh(a);
        const double c = 1.0 - th * th;
        // The likelihood is far below double precision out here.
        if (c < 1e-12) return -std::numeric_limits<double>::infinity();
        return bvn_loglik(th, s.x1, s.x2, n) + 0.5 * std::log(bvn_fisher_info(th, s.n)) + std::log(c);
    };
    const double mle = bvn_mle(s);
    // The finite-difference prior carries ~1e-10 relative noise; a tighter
    // quadrature tolerance would only chase it.
    NormalizedDensity::Options opt;
    opt.rel_tol = 1e-9;
    NormalizedDensity post(logpost, std::atanh(mle), 1.0 / std::sqrt(n * (1.0 + mle * mle)), opt);
    return {std::tanh(post.quantile(0.5 * alpha)), std::tanh(post.quantile(1.0 - 0.5 * alpha))};
}

inline ScaleFamily bvn_scale_family() {
    ScaleFamily f;
    f.g = [](const Eigen::VectorXd& th) {
        Eigen::VectorXd g(2);
        g << 1.0 + th[0], 1.0 - th[0];
        return g;
    };
    f.dlog_g = [](const Eigen::VectorXd& th) {
        Eigen::MatrixXd d(2, 1);
        d << 1.0 / (1.0 + th[0]), -1.0 / (1.0 - th[0]);
        return d;
    };
    return f;
}

/// Sufficient statistics drawn directly from the chi-square representation.
inline BvnStats bvn_simulate(std::size_t n, double theta, RngStream& s) {
    const double df = static_cast<double>(n);
    return {(1.0 + theta) * s.chisq(df), (1.0 - theta) * s.chisq(df), n};
}

/// Raw pairs from the bivariate normal with correlation theta.
inline std::vector<std::array<double, 2>> bvn_simulate_pairs(std::size_t n, double theta, RngStream& s) {
    std::vector<std::array<double, 2>> p(n);
    const double c = std::sqrt(1.0 - theta * theta);
    for (auto& q : p) {
        const double a = s.normal();
        q = {a, theta * a + c * s.normal()};
    }
    return p;
}

} // namespace imcond::models
