#pragma once

// Gamma with unknown shape theta1 and scale theta2. Statistics
// T1 = sum x, T2 = mean(log x) - log(T1/n) <= 0, with
// T1 = theta2 F_{n theta1}^{-1}(U1), T2 = G_{theta1}^{-1}(U2), and the random
// square PRS on (U1, U2). G_{theta1} has no closed form and is estimated by
// simulating T2 under shape theta1 (T2 does not depend on the scale).

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <Eigen/Dense>

#include "imcond/dist.hpp"
#include "imcond/error.hpp"
#include "imcond/models/common.hpp"
#include "imcond/parallel.hpp"
#include "imcond/rng.hpp"

namespace imcond::models {

struct Gamma2Stats {
    double t1 = 0.0;
    double t2 = 0.0;
    std::size_t n = 0;
    double sum_log = 0.0;
};

inline double gamma2_t2(const std::vector<double>& x) {
    double s = 0.0, sl = 0.0;
    for (double v : x) {
        s += v;
        sl += std::log(v);
    }
    const double n = static_cast<double>(x.size());
    return sl / n - std::log(s / n);
}

inline Gamma2Stats gamma2_stats(const std::vector<double>& x) {
    if (x.size() < 2) throw DomainError("gamma2: need n >= 2");
    Gamma2Stats s;
    for (double v : x) {
        if (!(v > 0.0)) throw DomainError("gamma2: observations must be positive");
        s.t1 += v;
        s.sum_log += std::log(v);
    }
    s.n = x.size();
    s.t2 = s.sum_log / static_cast<double>(s.n) - std::log(s.t1 / static_cast<double>(s.n));
    // Jensen; a tiny positive value can only come from rounding on equal data.
    if (s.t2 > 1e-14) throw InvariantViolation("gamma2: T2 must be nonpositive");
    s.t2 = std::min(s.t2, 0.0);
    return s;
}

/// Monte Carlo distribution function of T2 under shape theta1.
class Gamma2G {
public:
    Gamma2G() = default;
    Gamma2G(double theta1, std::size_t n, std::size_t draws, RngStream& stream) : theta1_(theta1) {
        if (!(theta1 > 0.0)) throw DomainError("gamma2: shape must be positive");
        if (draws < 10000) throw ConfigurationError("gamma2: need at least 1e4 Monte Carlo draws for G");
        sorted_.resize(draws);
        std::vector<double> x(n);
        for (auto& t : sorted_) {
            for (double& v : x) v = stream.gamma(theta1);
            t = gamma2_t2(x);
        }
        std::sort(sorted_.begin(), sorted_.end());
    }
    double operator()(double t2) const {
        return static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), t2) - sorted_.begin()) /
               static_cast<double>(sorted_.size());
    }
    /// Smallest simulated T2 with G(T2) >= p.
    double quantile(double p) const {
        const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted_.size())));
        return sorted_[std::clamp<std::size_t>(k, 1, sorted_.size()) - 1];
    }
    double theta1() const { return theta1_; }
    std::size_t draws() const { return sorted_.size(); }

private:
    double theta1_ = 0.0;
    std::vector<double> sorted_;
};

/// Square-PRS plausibility of (theta1, theta2) given G at theta1.
inline double gamma2_cpl(const Gamma2Stats& s, const Gamma2G& g, double theta2) {
    if (s.t2 > 0.0) throw InvariantViolation("gamma2: T2 must be nonpositive");
    if (!(theta2 > 0.0)) throw DomainError("gamma2: scale must be positive");
    const double f = boost::math::gamma_p(static_cast<double>(s.n) * g.theta1(), s.t1 / theta2);
    const double m = std::max(std::abs(2.0 * f - 1.0), std::abs(2.0 * g(s.t2) - 1.0));
    return 1.0 - m * m;
}

inline double gamma2_cpl(double t1, double t2, std::size_t n, double theta1, double theta2, std::size_t mc_draws,
                         RngStream& stream) {
    if (t2 > 0.0) throw InvariantViolation("gamma2: T2 must be nonpositive");
    const Gamma2Stats s{t1, t2, n, 0.0};
    return gamma2_cpl(s, Gamma2G(theta1, n, mc_draws, stream), theta2);
}

struct Gamma2GridPoint {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double cpl = 0.0;
    bool in_region = false;
};

/// Plausibility region on a product grid. G is simulated once per theta1,
/// on substream i of `seed` for the i-th theta1 value.
inline std::vector<Gamma2GridPoint> gamma2_region(const Gamma2Stats& s, const std::vector<double>& theta1_grid,
                                                  const std::vector<double>& theta2_grid, double alpha,
                                                  std::size_t mc_draws, std::uint64_t seed) {
    std::vector<Gamma2GridPoint> out(theta1_grid.size() * theta2_grid.size());
    parallel_for(theta1_grid.size(), [&](std::size_t i) {
        RngStream stream(seed, i);
        const Gamma2G g(theta1_grid[i], s.n, mc_draws, stream);
        for (std::size_t j = 0; j < theta2_grid.size(); ++j) {
            const double c = gamma2_cpl(s, g, theta2_grid[j]);
            out[i * theta2_grid.size() + j] = {theta1_grid[i], theta2_grid[j], c, c > alpha};
        }
    });
    return out;
}

inline double gamma2_loglik(double shape, double scale, double sum_x, double sum_log, double n) {
    return (shape - 1.0) * sum_log - sum_x / scale - n * std::lgamma(shape) - n * shape * std::log(scale);
}

/// MLE: profile the scale out and solve log a - digamma(a) = -T2 by Newton.
inline Eigen::Vector2d gamma2_mle(const Gamma2Stats& s) {
    const double target = -s.t2;
    if (!(target > 0.0)) throw EstimationError("gamma2_mle: all observations equal");
    double a = (3.0 - target + std::sqrt((target - 3.0) * (target - 3.0) + 24.0 * target)) / (12.0 * target);
    for (int it = 0; it < 100; ++it) {
        const double f = std::log(a) - boost::math::digamma(a) - target;
        const double d = 1.0 / a - boost::math::trigamma(a);
        double na = a - f / d;
        if (!(na > 0.0)) na = 0.5 * a;
        if (std::abs(na - a) <= 1e-14 * a) {
            a = na;
            break;
        }
        a = na;
    }
    if (!std::isfinite(a)) throw EstimationError("gamma2_mle: Newton iterations did not converge");
    return {a, s.t1 / (static_cast<double>(s.n) * a)};
}

/// Fisher information at (shape, scale) by finite differences.
inline Eigen::Matrix2d gamma2_fisher_info(double shape, double scale, std::size_t n) {
    const double nn = static_cast<double>(n);
    Eigen::VectorXd th(2);
    th << shape, scale;
    const Eigen::MatrixXd I = numeric_fisher_information(
        [nn](const Eigen::VectorXd& t, const Eigen::VectorXd& st) { return gamma2_loglik(t[0], t[1], st[0], st[1], nn); },
        [nn](const Eigen::VectorXd& t) {
            Eigen::VectorXd e(2);
            e << nn * t[0] * t[1], nn * (boost::math::digamma(t[0]) + std::log(t[1]));
            return e;
        },
        th, std::min(1e-4, 0.25 * std::min(shape, scale) / std::max(1.0, std::max(shape, scale))));
    return I;
}

/// Observed-information Wald ellipse: (theta - mle)' J (theta - mle) <= chi2_2 quantile.
struct Gamma2Ellipse {
    Eigen::Vector2d center;
    Eigen::Matrix2d info;
    double radius2 = 0.0;
    bool contains(double a, double b) const {
        const Eigen::Vector2d d(a - center[0], b - center[1]);
        return d.dot(info * d) <= radius2;
    }
};

inline Gamma2Ellipse gamma2_mle_ellipse(const Gamma2Stats& s, double alpha) {
    const Eigen::Vector2d m = gamma2_mle(s);
    const double n = static_cast<double>(s.n);
    const Eigen::MatrixXd H = fd_hessian(
        [&](const Eigen::VectorXd& t) { return gamma2_loglik(t[0], t[1], s.t1, s.sum_log, n); }, Eigen::VectorXd(m));
    return {m, -H, -2.0 * std::log(alpha)};
}

/// Jeffreys posterior masses on a product grid (row-major in theta1),
/// prior sqrt(det I) with I from finite differences.
inline std::vector<double> gamma2_jeffreys_grid(const Gamma2Stats& s, const std::vector<double>& theta1_grid,
                                                const std::vector<double>& theta2_grid) {
    const double n = static_cast<double>(s.n);
    std::vector<double> lp(theta1_grid.size() * theta2_grid.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < theta1_grid.size(); ++i)
        for (std::size_t j = 0; j < theta2_grid.size(); ++j) {
            const double a = theta1_grid[i], b = theta2_grid[j];
            const double det = gamma2_fisher_info(a, b, s.n).determinant();
            const double v = gamma2_loglik(a, b, s.t1, s.sum_log, n) + 0.5 * std::log(std::max(det, 1e-300));
            lp[i * theta2_grid.size() + j] = v;
            mx = std::max(mx, v);
        }
    double z = 0.0;
    for (double& v : lp) z += (v = std::exp(v - mx));
    for (double& v : lp) v /= z;
    return lp;
}

inline std::vector<double> gamma2_simulate(std::size_t n, double shape, double scale, RngStream& s) {
    std::vector<double> x(n);
    for (double& v : x) v = scale * s.gamma(shape);
    return x;
}

} // namespace imcond::models
