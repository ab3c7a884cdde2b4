#pragma once

// Student-t location: X = theta 1 + U, U_i iid t_nu.
//
// With T equivariant, V_T = T(U) given the configuration h = x - T(x)1 has
// density proportional to prod_i {nu + (v + h_i)^2}^{-(nu+1)/2}, and the
// reduced association is T(X) = theta + V_T.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "imcond/dist.hpp"
#include "imcond/engine.hpp"
#include "imcond/error.hpp"
#include "imcond/rng.hpp"

namespace imcond::models {

enum class TDecomposition { mle, naive };

inline double student_t_loglik(const std::vector<double>& x, double nu, double theta) {
    double s = 0.0;
    for (double xi : x) s += std::log1p((xi - theta) * (xi - theta) / nu);
    return -0.5 * (nu + 1.0) * s;
}

/// Observed information -d^2/dtheta^2 loglik.
inline double student_t_observed_info(const std::vector<double>& x, double nu, double theta) {
    double j = 0.0;
    for (double xi : x) {
        const double r2 = (xi - theta) * (xi - theta);
        j += (nu + 1.0) * (nu - r2) / ((nu + r2) * (nu + r2));
    }
    return j;
}

/// Location MLE: damped Newton on the score from every observation and the
/// median; the start reaching the highest likelihood wins.
inline double student_t_mle(const std::vector<double>& x, double nu) {
    if (x.size() < 2) throw DomainError("student_t_mle: need n >= 2");
    if (!(nu > 0.0)) throw DomainError("student_t_mle: nu must be positive");
    std::vector<double> starts(x);
    std::vector<double> sorted(x);
    std::sort(sorted.begin(), sorted.end());
    starts.push_back(0.5 * (sorted[(sorted.size() - 1) / 2] + sorted[sorted.size() / 2]));
    const double spread = std::max(sorted.back() - sorted.front(), 1e-300);
    auto score = [&](double th) {
        double s = 0.0;
        for (double xi : x) {
            const double r = xi - th;
            s += (nu + 1.0) * r / (nu + r * r);
        }
        return s;
    };
    double best = std::numeric_limits<double>::quiet_NaN();
    double best_ll = -std::numeric_limits<double>::infinity();
    for (double th : starts) {
        double ll = student_t_loglik(x, nu, th);
        bool ok = false;
        for (int it = 0; it < 200; ++it) {
            const double g = score(th);
            const double j = student_t_observed_info(x, nu, th);
            double step = j > 0.0 ? g / j : (g > 0 ? 0.1 : -0.1) * spread;
            step = std::clamp(step, -spread, spread);
            double next = th + step;
            double nll = student_t_loglik(x, nu, next);
            for (int k = 0; k < 60 && !(nll >= ll); ++k) {
                step *= 0.5;
                next = th + step;
                nll = student_t_loglik(x, nu, next);
            }
            if (!(nll >= ll)) {
                ok = std::abs(g) <= 1e-9 * (1.0 + static_cast<double>(x.size()));
                break;
            }
            th = next;
            ll = nll;
            if (std::abs(step) <= 1e-14 * (1.0 + std::abs(th))) {
                ok = true;
                break;
            }
        }
        if (ok && ll > best_ll) {
            best_ll = ll;
            best = th;
        }
    }
    if (!std::isfinite(best)) throw EstimationError("student_t_mle: Newton iterations did not converge");
    return best;
}

/// f_{nu,h} normalized by quadrature around its mode.
inline NormalizedDensity student_t_conditional_density(const std::vector<double>& h, double nu, double mode, double scale) {
    auto logf = [h, nu](double v) {
        double s = 0.0;
        for (double hi : h) s += std::log1p((v + hi) * (v + hi) / nu);
        return -0.5 * (nu + 1.0) * s;
    };
    return NormalizedDensity(logf, mode, scale);
}

struct StudentTFit {
    double t = 0.0;        // T(x)
    double mle = 0.0;
    std::vector<double> h; // x - T(x) 1
    double info = 0.0;     // observed information at the MLE
};

inline StudentTFit student_t_fit(const std::vector<double>& x, double nu, TDecomposition dec = TDecomposition::mle) {
    StudentTFit f;
    f.mle = student_t_mle(x, nu);
    f.t = dec == TDecomposition::mle ? f.mle : x.front();
    f.h.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f.h[i] = x[i] - f.t;
    f.info = student_t_observed_info(x, nu, f.mle);
    return f;
}

inline double student_t_scale_hint(const StudentTFit& f, double nu) {
    const double n = static_cast<double>(f.h.size());
    const double j = f.info > 0.0 ? f.info : n * (nu + 1.0) / (nu + 3.0);
    return 1.0 / std::sqrt(j);
}

inline ConditionalModel student_t_model(const std::vector<double>& x, double nu,
                                        TDecomposition dec = TDecomposition::mle) {
    const StudentTFit f = student_t_fit(x, nu, dec);
    const double scale = student_t_scale_hint(f, nu);
    ConditionalModel m;
    m.name = "t";
    m.t = f.t;
    const double t = f.t;
    m.residual = [t](double th) { return t - th; };
    m.theta_from_residual = [t](double v) { return t - v; };
    m.residual_decreasing = true;
    // Mode of V_T sits where theta = T - v is the MLE.
    m.law = std::make_shared<DensityLaw>(student_t_conditional_density(f.h, nu, f.t - f.mle, scale));
    m.theta_hint = f.mle;
    m.theta_step = scale;
    return m;
}

inline double student_t_cpl(const std::vector<double>& x, double nu, double theta) {
    return ConditionalIM(student_t_model(x, nu)).cpl_singleton(theta);
}

/// Flat-prior posterior of theta, normalized by quadrature.
inline NormalizedDensity student_t_flat_posterior(const std::vector<double>& x, double nu) {
    const double mle = student_t_mle(x, nu);
    const double j = student_t_observed_info(x, nu, mle);
    const double n = static_cast<double>(x.size());
    const double scale = 1.0 / std::sqrt(j > 0.0 ? j : n * (nu + 1.0) / (nu + 3.0));
    return NormalizedDensity([x, nu](double th) { return student_t_loglik(x, nu, th); }, mle, scale);
}

inline Interval student_t_bayes_flat_interval(const std::vector<double>& x, double nu, double alpha) {
    const NormalizedDensity post = student_t_flat_posterior(x, nu);
    return {post.quantile(0.5 * alpha), post.quantile(1.0 - 0.5 * alpha)};
}

/// MLE +- z_{1-alpha/2} / sqrt(observed information).
inline Interval student_t_mle_interval(const std::vector<double>& x, double nu, double alpha) {
    const double mle = student_t_mle(x, nu);
    const double j = student_t_observed_info(x, nu, mle);
    if (!(j > 0.0)) throw EstimationError("student_t_mle_interval: observed information is not positive");
    const double z = Dist1D::normal(0.0, 1.0).quantile(1.0 - 0.5 * alpha);
    const double half = z / std::sqrt(j);
    return {mle - half, mle + half};
}

inline std::vector<double> student_t_simulate(std::size_t n, double nu, double theta, RngStream& s) {
    std::vector<double> x(n);
    for (double& v : x) v = theta + s.student_t(nu);
    return x;
}

} // namespace imcond::models
