#pragma once

// Building theta-insensitive features eta(u) for component-wise scale
// families x_l = g_l(theta) u_l and for location families, plus a finite
// difference checker for d eta(u_{x,theta}) / d theta = 0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "imcond/engine.hpp"
#include "imcond/error.hpp"

namespace imcond {

using VecFn = std::function<std::vector<double>(const std::vector<double>&)>;

/// Central-difference step for parameter component t.
inline double fd_step(double t) { return std::max(1e-5, 1e-5 * std::abs(t)); }

/// Max-norm of the central finite-difference derivative of eta(u_{x,theta})
/// over every component of theta. `step` <= 0 selects the theta-relative default.
inline double diffeq_residual(const VecFn& eta, const Association& assoc, const std::vector<double>& x,
                              const std::vector<double>& theta, double step = 0.0) {
    if (!assoc.solve_u) throw ConfigurationError("diffeq_residual: association has no solver");
    double worst = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double h = step > 0.0 ? step : fd_step(theta[j]);
        std::vector<double> tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        const auto ep = eta(assoc.solve_u(x, tp));
        const auto em = eta(assoc.solve_u(x, tm));
        if (ep.size() != em.size()) throw ConfigurationError("diffeq_residual: eta changed dimension");
        for (std::size_t i = 0; i < ep.size(); ++i) {
            const double d = (ep[i] - em[i]) / (2.0 * h);
            if (!std::isfinite(d)) throw EstimationError("diffeq_residual: non-finite derivative");
            worst = std::max(worst, std::abs(d));
        }
    }
    return worst;
}

/// x_l = g_l(theta) u_l with g_l > 0.
struct ScaleFamily {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> g;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> dlog_g; // L x dim(theta)

    Eigen::VectorXd solve_u(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
        return x.cwiseQuotient(g(theta));
    }

    /// Finite-difference version of dlog_g, for checking the analytic one.
    Eigen::MatrixXd dlog_g_fd(const Eigen::VectorXd& theta) const {
        const Eigen::VectorXd g0 = g(theta);
        Eigen::MatrixXd d(g0.size(), theta.size());
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
            const double h = fd_step(theta[j]);
            Eigen::VectorXd tp = theta, tm = theta;
            tp[j] += h;
            tm[j] -= h;
            d.col(j) = (g(tp).array().log() - g(tm).array().log()).matrix() / (2.0 * h);
        }
        return d;
    }

    Association association() const {
        Association a;
        a.forward = [g = g](const std::vector<double>& th, const std::vector<double>& u) {
            const Eigen::VectorXd gv = g(Eigen::Map<const Eigen::VectorXd>(th.data(), th.size()));
            std::vector<double> x(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) x[i] = gv[static_cast<Eigen::Index>(i)] * u[i];
            return x;
        };
        a.solve_u = [g = g](const std::vector<double>& x, const std::vector<double>& th) {
            const Eigen::VectorXd gv = g(Eigen::Map<const Eigen::VectorXd>(th.data(), th.size()));
            std::vector<double> u(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) u[i] = x[i] / gv[static_cast<Eigen::Index>(i)];
            return u;
        };
        return a;
    }
};

/// Log-linear feature eta(u) = C log u, optionally localized at theta0.
struct EtaSpec {
    Eigen::MatrixXd C;
    std::optional<Eigen::VectorXd> theta0;

    Eigen::VectorXd operator()(const Eigen::VectorXd& u) const { return C * u.array().log().matrix(); }

    VecFn as_function() const {
        return [C = C](const std::vector<double>& u) {
            Eigen::VectorXd lu(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) lu[static_cast<Eigen::Index>(i)] = std::log(u[i]);
            const Eigen::VectorXd e = C * lu;
            return std::vector<double>(e.data(), e.data() + e.size());
        };
    }

    /// H(x) = C log x - C log g(theta0): the observed image of eta.
    Eigen::VectorXd observed(const ScaleFamily& fam, const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
        return C * (x.array().log() - fam.g(theta).array().log()).matrix();
    }
};

/// Orthonormal basis of the orthogonal complement of the columns of
/// dlog_g(theta0), from a Householder QR. Rows are sign-normalized so that
/// their largest-magnitude entry is positive.
inline EtaSpec scale_family_eta(const ScaleFamily& fam, const Eigen::VectorXd& theta0) {
    const Eigen::MatrixXd D = fam.dlog_g(theta0);
    const Eigen::Index L = D.rows();
    const Eigen::Index p = D.cols();
    if (p >= L) throw DegenerateFamilyError("scale_family_eta: no room for a conditioning feature");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(D);
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    const double scale = std::max(D.norm(), 1e-300);
    for (Eigen::Index j = 0; j < p; ++j)
        if (std::abs(R(j, j)) <= 1e-10 * scale)
            throw DegenerateFamilyError("scale_family_eta: dlog_g(theta0) is rank deficient");
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(L, L);
    Eigen::MatrixXd C = Q.rightCols(L - p).transpose();
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
        Eigen::Index k = 0;
        C.row(i).cwiseAbs().maxCoeff(&k);
        if (C(i, k) < 0.0) C.row(i) *= -1.0;
    }
    return {C, theta0};
}

/// Pieces of the location decomposition x - T(x)1 = u - T(u)1, T(x) = theta + T(u).
struct LocationDecomposition {
    std::function<double(const std::vector<double>&)> T;

    std::vector<double> H(const std::vector<double>& x) const {
        const double t = T(x);
        std::vector<double> h(x);
        for (double& v : h) v -= t;
        return h;
    }
    double tau(const std::vector<double>& u) const { return T(u); }
    std::vector<double> eta(const std::vector<double>& u) const { return H(u); }
};

/// Checks T(x + c1) = T(x) + c on every probe and shift, then returns the
/// decomposition. Throws EquivarianceError naming the offending shift.
inline LocationDecomposition location_family_decomposition(std::function<double(const std::vector<double>&)> T,
                                                           const std::vector<std::vector<double>>& probes,
                                                           const std::vector<double>& shifts = {-3.7, -0.25, 0.5,
                                                                                                11.0}) {
    for (const auto& x : probes) {
        const double t0 = T(x);
        for (double c : shifts) {
            std::vector<double> xs(x);
            for (double& v : xs) v += c;
            const double viol = T(xs) - (t0 + c);
            if (!(std::abs(viol) <= 1e-8 * (1.0 + std::abs(t0) + std::abs(c)))) throw EquivarianceError(c, viol);
        }
    }
    return {std::move(T)};
}

} // namespace imcond
