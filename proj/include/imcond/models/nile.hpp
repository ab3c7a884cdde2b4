#pragma once

// Two exponential samples, means 1/theta and theta, so S1 = U1/theta and
// S2 = theta U2 with U_i ~ Gam(n, 1). The MLE is T = sqrt(S2/S1); with
// h = sqrt(S1 S2), T = theta V_T for V_T = sqrt(U2/U1), and V_T given h has
// density exp{-h(v + 1/v)} / (2 v K0(2h)). In w = log v that density is
// proportional to exp(-2h cosh w), symmetric about 0.

#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include <Eigen/Dense>

#include "imcond/assoc_finder.hpp"
#include "imcond/dist.hpp"
#include "imcond/engine.hpp"
#include "imcond/error.hpp"
#include "imcond/rng.hpp"
#include "imcond/special.hpp"

namespace imcond::models {

struct NileStats {
    double s1 = 0.0;
    double s2 = 0.0;
    double t = 0.0; // sqrt(S2/S1), the MLE
    double h = 0.0; // sqrt(S1 S2)
    std::size_t n = 0;
};

inline NileStats nile_stats(const std::vector<double>& x1, const std::vector<double>& x2) {
    if (x1.empty() || x1.size() != x2.size()) throw DomainError("nile: samples must be nonempty and of equal size");
    for (double v : x1)
        if (!(v > 0.0)) throw DomainError("nile: observations must be positive");
    for (double v : x2)
        if (!(v > 0.0)) throw DomainError("nile: observations must be positive");
    NileStats s;
    s.s1 = std::accumulate(x1.begin(), x1.end(), 0.0);
    s.s2 = std::accumulate(x2.begin(), x2.end(), 0.0);
    if (!(s.s1 > 0.0) || !(s.s2 > 0.0)) throw DomainError("nile: sums must be positive");
    s.t = std::sqrt(s.s2 / s.s1);
    s.h = std::sqrt(s.s1 * s.s2);
    s.n = x1.size();
    return s;
}

/// Stats with prescribed T and h (S1 = h / T, S2 = T h).
inline NileStats nile_stats_from(double t, double h, std::size_t n) {
    if (!(t > 0.0) || !(h > 0.0)) throw DomainError("nile: T and h must be positive");
    return {h / t, t * h, t, h, n};
}

/// GIG density of V_T given h, as in the closed form with K0.
inline double nile_gig_pdf(double h, double v) {
    if (!(v > 0.0)) return 0.0;
    // exp(-h(v + 1/v)) / K0(2h) = exp(-h(v + 1/v - 2)) / (e^{2h} K0(2h)).
    return std::exp(-h * (v + 1.0 / v - 2.0)) / (2.0 * v * bessel_k0_scaled(2.0 * h));
}

/// F_h, quad-normalized in w = log v.
inline LawPtr nile_conditional_law(double h) {
    if (!(h > 0.0)) throw DomainError("nile: h must be positive");
    NormalizedDensity d([h](double w) { return -2.0 * h * std::cosh(w); }, 0.0, 1.0 / std::sqrt(2.0 * h));
    return std::make_shared<DensityLaw>(
        std::move(d), [](double w) { return std::exp(w); },
        [](double v) { return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity(); },
        [](double v) { return 1.0 / v; });
}

/// Marginal law of V_T = sqrt(U2/U1), U_i iid Gam(n, 1), ignoring h:
/// P{V_T <= v} = I_{v^2/(1+v^2)}(n, n).
inline LawPtr nile_naive_law(std::size_t n) {
    const double a = static_cast<double>(n);
    return std::make_shared<FunctionLaw>(
        [a](double v) { return v <= 0.0 ? 0.0 : boost::math::ibeta(a, a, v * v / (1.0 + v * v)); },
        [a](double p) {
            if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1)");
            const double y = boost::math::ibeta_inv(a, a, p);
            return std::sqrt(y / (1.0 - y));
        },
        [a](double v) {
            if (v <= 0.0) return 0.0;
            const double y = v * v / (1.0 + v * v);
            const double dy = 2.0 * v / ((1.0 + v * v) * (1.0 + v * v));
            return boost::math::ibeta_derivative(a, a, y) * dy;
        });
}

inline ConditionalModel nile_model(const NileStats& s, bool naive = false) {
    ConditionalModel m;
    m.name = naive ? "nile-naive" : "nile";
    m.t = s.t;
    m.theta_space = {0.0, std::numeric_limits<double>::infinity()};
    const double t = s.t;
    m.residual = [t](double th) { return t / th; };
    m.theta_from_residual = [t](double v) { return t / v; };
    m.residual_decreasing = true;
    m.law = naive ? nile_naive_law(s.n) : nile_conditional_law(s.h);
    m.theta_hint = t;
    m.theta_step = 0.5 * t;
    return m;
}

inline double nile_cpl(const std::vector<double>& x1, const std::vector<double>& x2, double theta) {
    return ConditionalIM(nile_model(nile_stats(x1, x2))).cpl_singleton(theta);
}

/// (S1, S2) = (theta^{-1} U1, theta U2), U_i ~ Gam(n, 1).
inline ScaleFamily nile_scale_family() {
    ScaleFamily f;
    f.g = [](const Eigen::VectorXd& th) {
        Eigen::VectorXd g(2);
        g << 1.0 / th[0], th[0];
        return g;
    };
    f.dlog_g = [](const Eigen::VectorXd& th) {
        Eigen::MatrixXd d(2, 1);
        d << -1.0 / th[0], 1.0 / th[0];
        return d;
    };
    return f;
}

inline std::pair<std::vector<double>, std::vector<double>> nile_simulate(std::size_t n, double theta, RngStream& s) {
    std::vector<double> x1(n), x2(n);
    for (std::size_t i = 0; i < n; ++i) {
        x1[i] = s.exponential(1.0 / theta);
        x2[i] = s.exponential(theta);
    }
    return {x1, x2};
}

} // namespace imcond::models
