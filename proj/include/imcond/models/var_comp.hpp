#pragma once

// One-way random effects Y_gj = mu + alpha_g + eps_gj with variances
// (theta_a, theta_e). K' Y ~ N(0, theta_a M + theta_e I), M = K'ZZ'K, so the
// eigen-projections give X_l = (lambda_l theta_a + theta_e) U_l with
// U_l ~ ChiSq(r_l), l = 1..L, lambda_L = 0.
//
// Localized at theta0, eta(u) = Pi log u (Pi from scale_family_eta) is held at
// its observed value h0 and tau = (sum_{l<L} log U_l, log U_L) is predicted
// with an elastic ellipse fitted to Metropolis draws from its conditional law.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "imcond/assoc_finder.hpp"
#include "imcond/error.hpp"
#include "imcond/mcmc.hpp"
#include "imcond/parallel.hpp"
#include "imcond/prs.hpp"
#include "imcond/rng.hpp"

namespace imcond::models {

/// Last n-1 columns of the n x n Helmert matrix: column k has 1/sqrt(k(k+1))
/// in rows 0..k-1 and -k/sqrt(k(k+1)) in row k.
inline Eigen::MatrixXd helmert_contrasts(std::size_t n) {
    if (n < 2) throw DomainError("helmert_contrasts: need n >= 2");
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N - 1);
    for (Eigen::Index k = 1; k < N; ++k) {
        const double c = 1.0 / std::sqrt(static_cast<double>(k * (k + 1)));
        K.col(k - 1).head(k).setConstant(c);
        K(k, k - 1) = -static_cast<double>(k) * c;
    }
    return K;
}

struct VCDesign {
    std::vector<std::size_t> sizes;
    std::size_t n = 0;
    Eigen::MatrixXd K;             // n x (n-1)
    std::vector<double> lambda;    // distinct eigenvalues of M, descending; lambda.back() = 0
    std::vector<std::size_t> mult; // multiplicities r_l
    std::vector<Eigen::MatrixXd> P; // (n-1) x r_l orthonormal eigenbases

    std::size_t L() const { return lambda.size(); }
    std::size_t groups() const { return sizes.size(); }
};

/// Design with the Helmert K, or with a caller-supplied K satisfying
/// K'K = I and KK' = I - 11'/n.
inline VCDesign vc_design(const std::vector<std::size_t>& sizes, const Eigen::MatrixXd* K_in = nullptr) {
    if (sizes.size() < 2) throw DomainError("vc_design: need at least two groups");
    VCDesign d;
    d.sizes = sizes;
    for (std::size_t s : sizes) {
        if (s == 0) throw DomainError("vc_design: empty group");
        d.n += s;
    }
    const auto n = static_cast<Eigen::Index>(d.n);
    d.K = K_in ? *K_in : helmert_contrasts(d.n);
    if (d.K.rows() != n || d.K.cols() != n - 1) throw ConfigurationError("vc_design: K has the wrong shape");
    const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / d.n);
    if ((d.K.transpose() * d.K - Eigen::MatrixXd::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff() > 1e-10 ||
        (d.K * d.K.transpose() - C).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigurationError("vc_design: K does not satisfy the contrast identities");

    // A = Z'K, M = A'A.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes.size()), n - 1);
    Eigen::Index row = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g)
        for (std::size_t j = 0; j < sizes[g]; ++j) A.row(static_cast<Eigen::Index>(g)) += d.K.row(row++);
    const Eigen::MatrixXd M = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw DesignDegeneracyError("vc_design: eigendecomposition failed");
    const Eigen::VectorXd ev = es.eigenvalues(); // ascending
    const Eigen::MatrixXd V = es.eigenvectors();
    const double tol = 1e-8 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);

    // Cluster from the top; consecutive eigenvalues closer than tol chain together.
    std::vector<std::vector<Eigen::Index>> clusters;
    for (Eigen::Index i = n - 2; i >= 0; --i) {
        if (clusters.empty() || ev[clusters.back().back()] - ev[i] > tol) clusters.push_back({});
        clusters.back().push_back(i);
    }
    for (const auto& c : clusters) {
        if (ev[c.front()] - ev[c.back()] > tol)
            throw DesignDegeneracyError("vc_design: eigenvalue clusters are ambiguous at the clustering tolerance");
        Eigen::MatrixXd P(n - 1, static_cast<Eigen::Index>(c.size()));
        double mean = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            P.col(static_cast<Eigen::Index>(k)) = V.col(c[k]);
            mean += ev[c[k]];
        }
        d.lambda.push_back(mean / static_cast<double>(c.size()));
        d.mult.push_back(c.size());
        d.P.push_back(std::move(P));
    }
    if (std::abs(d.lambda.back()) > tol)
        throw DesignDegeneracyError("vc_design: no within-group degrees of freedom");
    d.lambda.back() = 0.0;
    if (d.L() < 2) throw DesignDegeneracyError("vc_design: no between-group component");
    return d;
}

struct VCStats {
    Eigen::VectorXd x; // X_1..X_L
};

/// Sums of squares X_l = |P_l' K' y|^2; y ordered by group as in the design.
inline VCStats vc_sufficient(const std::vector<double>& y, const VCDesign& d) {
    if (y.size() != d.n) throw DomainError("vc_sufficient: data length does not match the design");
    const Eigen::VectorXd ky = d.K.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
    VCStats s;
    s.x.resize(static_cast<Eigen::Index>(d.L()));
    for (std::size_t l = 0; l < d.L(); ++l) s.x[static_cast<Eigen::Index>(l)] = (d.P[l].transpose() * ky).squaredNorm();
    if (!(s.x.minCoeff() > 0.0)) throw DomainError("vc_sufficient: a sum of squares is zero");
    return s;
}

/// g_l(theta) = lambda_l theta_a + theta_e.
inline ScaleFamily vc_scale_family(const VCDesign& d) {
    const std::vector<double> lam = d.lambda;
    ScaleFamily f;
    f.g = [lam](const Eigen::VectorXd& th) {
        Eigen::VectorXd g(static_cast<Eigen::Index>(lam.size()));
        for (std::size_t l = 0; l < lam.size(); ++l) g[static_cast<Eigen::Index>(l)] = lam[l] * th[0] + th[1];
        return g;
    };
    f.dlog_g = [lam](const Eigen::VectorXd& th) {
        Eigen::MatrixXd D(static_cast<Eigen::Index>(lam.size()), 2);
        for (std::size_t l = 0; l < lam.size(); ++l) {
            const double g = lam[l] * th[0] + th[1];
            D(static_cast<Eigen::Index>(l), 0) = lam[l] / g;
            D(static_cast<Eigen::Index>(l), 1) = 1.0 / g;
        }
        return D;
    };
    return f;
}

/// Pi(theta0): (L-2) x L, empty when L = 2.
inline Eigen::MatrixXd vc_pi(const VCDesign& d, const Eigen::Vector2d& theta0) {
    if (d.L() == 2) return Eigen::MatrixXd(0, 2);
    return scale_family_eta(vc_scale_family(d), theta0).C;
}

/// B = [Pi; 1..1 0; 0..0 1].
inline Eigen::MatrixXd vc_b_matrix(const Eigen::MatrixXd& pi) {
    const Eigen::Index L = pi.cols();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(L, L);
    B.topRows(L - 2) = pi;
    B.row(L - 2).head(L - 1).setOnes();
    B(L - 1, L - 1) = 1.0;
    return B;
}

/// Conditional law of tau given eta(U) = h0: log-density
/// sum_l (r_l/2) w_l - exp(w_l)/2 at w = B^{-1}(h0, tau).
class VcTauDensity {
public:
    VcTauDensity(const VCDesign& d, const Eigen::MatrixXd& B, const Eigen::VectorXd& h0) {
        if (std::abs(B.determinant()) <= 1e-6) throw ConfigurationError("vc: tau choice makes B singular");
        const Eigen::MatrixXd Bi = B.inverse();
        const Eigen::Index L = B.rows();
        wh_.assign(static_cast<std::size_t>(L), 0.0);
        if (L > 2) {
            const Eigen::VectorXd w = Bi.leftCols(L - 2) * h0;
            for (Eigen::Index l = 0; l < L; ++l) wh_[static_cast<std::size_t>(l)] = w[l];
        }
        a0_.resize(static_cast<std::size_t>(L));
        a1_.resize(static_cast<std::size_t>(L));
        for (Eigen::Index l = 0; l < L; ++l) {
            a0_[static_cast<std::size_t>(l)] = Bi(l, L - 2);
            a1_[static_cast<std::size_t>(l)] = Bi(l, L - 1);
        }
        for (std::size_t r : d.mult) half_r_.push_back(0.5 * static_cast<double>(r));
    }

    double w(std::size_t l, double t0, double t1) const { return wh_[l] + a0_[l] * t0 + a1_[l] * t1; }

    double operator()(double t0, double t1) const {
        double s = 0.0;
        for (std::size_t l = 0; l < wh_.size(); ++l) {
            const double wl = w(l, t0, t1);
            s += half_r_[l] * wl - 0.5 * std::exp(wl);
        }
        return s;
    }

    /// Negative Hessian in tau (constant curvature structure A' diag(e^w/2) A).
    Eigen::Matrix2d neg_hessian(double t0, double t1) const {
        Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
        for (std::size_t l = 0; l < wh_.size(); ++l) {
            const double e = 0.5 * std::exp(w(l, t0, t1));
            const Eigen::Vector2d a(a0_[l], a1_[l]);
            H += e * a * a.transpose();
        }
        return H;
    }

private:
    std::vector<double> wh_, a0_, a1_, half_r_;
};

struct VcLocal {
    Eigen::Vector2d tau;    // tau at theta, the auxiliary point of the singleton
    Eigen::VectorXd h0;
    Eigen::Vector2d center; // ellipse center / shape from the Metropolis draws
    Eigen::Matrix2d shape;
    RankingPRS prs;
    double rank = 0.0;
    double t0 = 0.0;        // conflict threshold of the ellipse family
    double cpl = 0.0;
    double acceptance = 0.0;
};

/// Local conditional IM for the singleton {theta}, theta0 = theta.
inline VcLocal vc_local(const VCDesign& d, const VCStats& s, const Eigen::Vector2d& theta, RngStream& stream,
                        const MhSettings& mcmc = {}) {
    if (!(theta[0] >= 0.0) || !(theta[1] > 0.0)) throw DomainError("vc: need theta_a >= 0 and theta_e > 0");
    const auto L = static_cast<Eigen::Index>(d.L());
    const ScaleFamily fam = vc_scale_family(d);
    const Eigen::VectorXd logu = (s.x.array().log() - fam.g(theta).array().log()).matrix();
    const Eigen::MatrixXd pi = vc_pi(d, theta);
    const Eigen::MatrixXd B = vc_b_matrix(pi);
    VcLocal out;
    out.h0 = pi * logu;
    const VcTauDensity dens(d, B, out.h0);
    out.tau = Eigen::Vector2d(logu.head(L - 1).sum(), logu[L - 1]);

    const Eigen::Matrix2d cov0 = dens.neg_hessian(out.tau[0], out.tau[1]).inverse();
    std::vector<double> scale0{1.7 * std::sqrt(std::max(cov0(0, 0), 1e-12)), 1.7 * std::sqrt(std::max(cov0(1, 1), 1e-12))};
    const MhResult chain = mh_sample_tuned([&dens](std::span<const double> t) { return dens(t[0], t[1]); },
                                           {out.tau[0], out.tau[1]}, scale0, stream, mcmc);
    out.acceptance = chain.acceptance_rate;

    const std::size_t m = chain.size();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> dr(chain.samples.data(),
                                                                                    static_cast<Eigen::Index>(m), 2);
    out.center = dr.colwise().mean().transpose();
    const Eigen::MatrixXd c = dr.rowwise() - out.center.transpose();
    out.shape = c.transpose() * c / static_cast<double>(m - 1);
    out.prs = ellipse_prs(out.center, out.shape, chain.samples);
    out.rank = out.prs.rank(std::span<const double>(out.tau.data(), 2));

    // The image of the parameter space in tau-space is the half-plane
    // tau1 - (L-1) tau2 <= T1 - (L-1) T2; t0 is the smallest ellipse reaching it.
    const double k = static_cast<double>(L - 1);
    const double cut = s.x.array().log().head(L - 1).sum() - k * std::log(s.x[L - 1]);
    const Eigen::Vector2d a(1.0, -k);
    const double excess = a.dot(out.center) - cut;
    out.t0 = excess <= 0.0 ? 0.0 : excess * excess / a.dot(out.shape * a);
    out.cpl = elastic_plausibility(out.prs, out.rank, out.t0);
    return out;
}

inline double vc_cpl(const std::vector<double>& y, const VCDesign& d, const Eigen::Vector2d& theta, RngStream& stream,
                     const MhSettings& mcmc = {}) {
    return vc_local(d, vc_sufficient(y, d), theta, stream, mcmc).cpl;
}

struct VcGridPoint {
    double log_theta_a = 0.0;
    double log_theta_e = 0.0;
    double cpl = 0.0;
    bool in_region = false;
};

/// Region on a (log theta_a, log theta_e) product grid; point i*|g2|+j runs on
/// substream i*|g2|+j of `seed`.
inline std::vector<VcGridPoint> vc_region(const VCDesign& d, const VCStats& s, const std::vector<double>& log_a,
                                          const std::vector<double>& log_e, double alpha, std::uint64_t seed,
                                          const MhSettings& mcmc = {}) {
    std::vector<VcGridPoint> out(log_a.size() * log_e.size());
    parallel_for(out.size(), [&](std::size_t k) {
        const std::size_t i = k / log_e.size(), j = k % log_e.size();
        RngStream stream(seed, k);
        const double c = vc_local(d, s, Eigen::Vector2d(std::exp(log_a[i]), std::exp(log_e[j])), stream, mcmc).cpl;
        out[k] = {log_a[i], log_e[j], c, c > alpha};
    });
    return out;
}

/// y ordered by group: mu + alpha_g + eps_gj.
inline std::vector<double> vc_simulate(const VCDesign& d, double theta_a, double theta_e, double mu, RngStream& s) {
    std::vector<double> y;
    y.reserve(d.n);
    const double sa = std::sqrt(theta_a), se = std::sqrt(theta_e);
    for (std::size_t g = 0; g < d.groups(); ++g) {
        const double a = sa * s.normal();
        for (std::size_t j = 0; j < d.sizes[g]; ++j) y.push_back(mu + a + se * s.normal());
    }
    return y;
}

/// Group-labelled data to group-ordered y and sizes (labels sorted).
inline std::pair<std::vector<std::size_t>, std::vector<double>> vc_group(const std::vector<std::string>& group,
                                                                          const std::vector<double>& y) {
    if (group.size() != y.size()) throw DomainError("vc: group and y columns differ in length");
    std::map<std::string, std::vector<double>> by;
    for (std::size_t i = 0; i < y.size(); ++i) by[group[i]].push_back(y[i]);
    std::vector<std::size_t> sizes;
    std::vector<double> out;
    for (const auto& [g, v] : by) {
        sizes.push_back(v.size());
        out.insert(out.end(), v.begin(), v.end());
    }
    return {sizes, out};
}

} // namespace imcond::models
