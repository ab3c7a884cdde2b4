#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace imcond::models {

/// Central finite-difference Hessian of f at p, step relative to each coordinate.
inline Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& p,
                                  double rel = 1e-4) {
    const Eigen::Index d = p.size();
    Eigen::VectorXd h(d);
    for (Eigen::Index i = 0; i < d; ++i) h[i] = rel * std::max(1.0, std::abs(p[i]));
    Eigen::MatrixXd H(d, d);
    const double f0 = f(p);
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXd a = p, b = p;
        a[i] += h[i];
        b[i] -= h[i];
        H(i, i) = (f(a) - 2.0 * f0 + f(b)) / (h[i] * h[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            Eigen::VectorXd pp = p, pm = p, mp = p, mm = p;
            pp[i] += h[i];
            pp[j] += h[j];
            pm[i] += h[i];
            pm[j] -= h[j];
            mp[i] -= h[i];
            mp[j] += h[j];
            mm[i] -= h[i];
            mm[j] -= h[j];
            H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h[i] * h[j]);
        }
    }
    return H;
}

/// Fisher information of a model whose log-likelihood is linear in its
/// sufficient statistics: minus the Hessian of the log-likelihood evaluated at
/// the expected statistics under theta (held fixed while differentiating).
inline Eigen::MatrixXd numeric_fisher_information(
    const std::function<double(const Eigen::VectorXd& theta, const Eigen::VectorXd& stats)>& loglik,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd& theta)>& expected_stats, const Eigen::VectorXd& theta,
    double rel = 1e-4) {
    const Eigen::VectorXd es = expected_stats(theta);
    return -fd_hessian([&](const Eigen::VectorXd& t) { return loglik(t, es); }, theta, rel);
}

} // namespace imcond::models
