#pragma once

// Nested predictive random sets represented by a ranking function.
//
// The set attached to a draw V is S(V) = {v : rank(v) <= rank(V)}. Everything
// a singleton assertion needs is then the distribution R of rank(V) under the
// reference law: pl(v) = P{rank(V) >= rank(v)} = 1 - R(rank(v)-).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "imcond/error.hpp"
#include "imcond/rng.hpp"
#include "imcond/special.hpp"

namespace imcond {

enum class PRSKind { default_1d, square_2d, ellipse_elastic };

class RankingPRS {
public:
    using RankFn = std::function<double(std::span<const double>)>;
    using CdfFn = std::function<double(double)>;
    using Sampler = std::function<std::vector<double>(RngStream&)>;

    RankingPRS() = default;
    RankingPRS(PRSKind kind, std::size_t dim, RankFn rank, CdfFn rank_cdf_below, CdfFn rank_cdf, Sampler sampler)
        : kind_(kind), dim_(dim), rank_(std::move(rank)), below_(std::move(rank_cdf_below)), cdf_(std::move(rank_cdf)),
          sampler_(std::move(sampler)) {}

    PRSKind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }

    double rank(std::span<const double> v) const { return rank_(v); }
    double rank(double v) const { return rank_(std::span<const double>(&v, 1)); }

    bool has_cdf() const { return static_cast<bool>(below_); }
    bool has_sampler() const { return static_cast<bool>(sampler_); }

    /// R(t-) = P{rank(V) < t}.
    double rank_cdf_below(double t) const {
        if (!below_) throw ConfigurationError("RankingPRS: rank distribution unavailable");
        return below_(t);
    }
    /// R(t) = P{rank(V) <= t}.
    double rank_cdf(double t) const {
        if (cdf_) return cdf_(t);
        return rank_cdf_below(t);
    }
    std::vector<double> sample(RngStream& s) const {
        if (!sampler_) throw ConfigurationError("RankingPRS: no sampler for the reference law");
        return sampler_(s);
    }

    /// Membership of v in the nested set with rank threshold t (closed sets).
    bool contains(std::span<const double> v, double t) const { return rank(v) <= t; }

private:
    PRSKind kind_ = PRSKind::default_1d;
    std::size_t dim_ = 1;
    RankFn rank_;
    CdfFn below_;
    CdfFn cdf_;
    Sampler sampler_;
};

/// Default PRS on (0,1): rank(u) = |u - 1/2|, U ~ Unif(0,1).
inline RankingPRS default_1d_prs() {
    auto r = [](double t) { return t <= 0.0 ? 0.0 : std::min(1.0, 2.0 * t); };
    return RankingPRS(
        PRSKind::default_1d, 1, [](std::span<const double> u) { return std::abs(u[0] - 0.5); }, r, r,
        [](RngStream& s) { return std::vector<double>{s.uniform()}; });
}

/// Random square on (0,1)^2: rank(u) = max_i |u_i - 1/2|, independent uniforms.
inline RankingPRS square_2d_prs() {
    auto r = [](double t) {
        const double p = t <= 0.0 ? 0.0 : std::min(1.0, 2.0 * t);
        return p * p;
    };
    return RankingPRS(
        PRSKind::square_2d, 2,
        [](std::span<const double> u) { return std::max(std::abs(u[0] - 0.5), std::abs(u[1] - 0.5)); }, r, r,
        [](RngStream& s) { return std::vector<double>{s.uniform(), s.uniform()}; });
}

/// Empirical rank law from reference draws: R(t-) = #{rank < t} / N.
class EmpiricalRanks {
public:
    EmpiricalRanks() = default;
    explicit EmpiricalRanks(std::vector<double> ranks) : sorted_(std::move(ranks)) {
        if (sorted_.empty()) throw ConfigurationError("EmpiricalRanks: no reference draws");
        std::sort(sorted_.begin(), sorted_.end());
    }
    double below(double t) const {
        return static_cast<double>(std::lower_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin()) /
               static_cast<double>(sorted_.size());
    }
    double at_or_below(double t) const {
        return static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin()) /
               static_cast<double>(sorted_.size());
    }
    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted() const { return sorted_; }

private:
    std::vector<double> sorted_;
};

/// Ellipse PRS in R^d: rank(v) = (v - c)' S^{-1} (v - c). The rank law is the
/// empirical law of the ranks of `draws` (row-major, dim columns), which are
/// also resampled by the sampler.
inline RankingPRS ellipse_prs(const Eigen::VectorXd& center, const Eigen::MatrixXd& shape, std::vector<double> draws) {
    const std::size_t d = static_cast<std::size_t>(center.size());
    if (shape.rows() != center.size() || shape.cols() != center.size())
        throw ConfigurationError("ellipse_prs: shape/center dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(shape);
    if (llt.info() != Eigen::Success) throw ConfigurationError("ellipse_prs: shape matrix is not positive definite");
    const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(center.size(), center.size()));
    auto rank = [center, prec, d](std::span<const double> v) {
        Eigen::VectorXd dv(d);
        for (std::size_t j = 0; j < d; ++j) dv[j] = v[j] - center[j];
        return dv.dot(prec * dv);
    };
    if (draws.empty() || draws.size() % d != 0) throw ConfigurationError("ellipse_prs: draws do not match dimension");
    const std::size_t n = draws.size() / d;
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) ranks[i] = rank(std::span<const double>(draws.data() + i * d, d));
    auto emp = std::make_shared<const EmpiricalRanks>(std::move(ranks));
    auto shared_draws = std::make_shared<const std::vector<double>>(std::move(draws));
    return RankingPRS(
        PRSKind::ellipse_elastic, d, rank, [emp](double t) { return emp->below(t); },
        [emp](double t) { return emp->at_or_below(t); },
        [shared_draws, n, d](RngStream& s) {
            const std::size_t i = std::min<std::size_t>(n - 1, static_cast<std::size_t>(s.uniform() * n));
            return std::vector<double>(shared_draws->begin() + i * d, shared_draws->begin() + (i + 1) * d);
        });
}

/// Ellipse centered at the sample mean of `draws` with their sample covariance as shape.
inline RankingPRS ellipse_prs_from_draws(std::vector<double> draws, std::size_t dim) {
    if (dim == 0 || draws.size() < 2 * dim || draws.size() % dim != 0)
        throw ConfigurationError("ellipse_prs_from_draws: need at least two draws");
    const std::size_t n = draws.size() / dim;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(draws.data(), n, dim);
    const Eigen::VectorXd mean = m.colwise().mean().transpose();
    const Eigen::MatrixXd centered = m.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    return ellipse_prs(mean, cov, std::move(draws));
}

/// pl of the singleton whose auxiliary value is v: 1 - R(rank(v)-).
inline double prs_singleton_plausibility(const RankingPRS& prs, std::span<const double> v) {
    const double r = prs.rank(v);
    if (!std::isfinite(r)) throw DomainError("prs_singleton_plausibility: rank is not finite");
    return std::clamp(1.0 - prs.rank_cdf_below(r), 0.0, 1.0);
}
inline double prs_singleton_plausibility(const RankingPRS& prs, double v) {
    return prs_singleton_plausibility(prs, std::span<const double>(&v, 1));
}

/// Monte Carlo version for reference laws known only through a sampler.
inline double prs_singleton_plausibility_mc(const RankingPRS& prs, std::span<const double> v, std::size_t draws,
                                            RngStream& stream) {
    if (!prs.has_sampler()) throw ConfigurationError("prs_singleton_plausibility: no rank law and no sampler");
    const double r = prs.rank(v);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const auto w = prs.sample(stream);
        if (prs.rank(w) >= r) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(draws);
}

/// True when Theta_x(S_t) is empty for the nested set with rank threshold t.
/// Must be nonincreasing in t (sets grow with t).
using EmptinessTest = std::function<bool(double)>;

/// Smallest threshold t0 with Theta_x(S_t0) nonempty, by doubling then bisection.
inline double conflict_threshold(const EmptinessTest& is_empty, double t_hint = 1.0) {
    if (!is_empty) throw ConfigurationError("conflict_threshold: emptiness test undefined");
    if (!is_empty(0.0)) return 0.0;
    double lo = 0.0;
    double hi = std::max(t_hint, 1e-12);
    while (is_empty(hi)) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi) || hi > 1e300)
            throw ModelInconsistencyError("conflict_threshold: no rank threshold gives a nonempty set");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (is_empty(mid) ? lo : hi) = mid;
    }
    return hi;
}

/// P{Theta_x(S) is empty} = P{rank(V) < t0}.
inline double conflict_probability(const RankingPRS& prs, double t0) { return prs.rank_cdf_below(t0); }
inline double conflict_probability(const RankingPRS& prs, const EmptinessTest& is_empty) {
    return conflict_probability(prs, conflict_threshold(is_empty));
}

/// Monte Carlo estimate of the conflict probability from reference draws.
inline double conflict_probability_mc(const RankingPRS& prs, const EmptinessTest& is_empty, std::size_t draws,
                                      RngStream& stream) {
    if (!is_empty) throw ConfigurationError("conflict_probability: emptiness test undefined");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < draws; ++i)
        if (is_empty(prs.rank(prs.sample(stream)))) ++hit;
    return static_cast<double>(hit) / static_cast<double>(draws);
}

/// A member of the nested family, identified by its rank threshold.
struct NestedSet {
    double threshold = 0.0;
    bool stretched = false;
};

/// Stretch-to-nonempty: the smallest set of the family containing S(v*) whose
/// image Theta_x is nonempty.
inline NestedSet elastic_envelope(const RankingPRS& prs, const EmptinessTest& is_empty, std::span<const double> v_star) {
    const double r = prs.rank(v_star);
    if (!is_empty(r)) return {r, false};
    return {conflict_threshold(is_empty, std::max(r, 1e-12)), true};
}

/// Singleton plausibility after conditioning away conflict cases:
/// P{rank(V) >= max(r, t0)} / P{rank(V) >= t0}.
inline double normalized_plausibility(const RankingPRS& prs, double r, double t0) {
    const double keep = 1.0 - prs.rank_cdf_below(t0);
    if (!(keep > 0.0)) throw ModelInconsistencyError("normalized_plausibility: conflict has probability one");
    return std::clamp((1.0 - prs.rank_cdf_below(std::max(r, t0))) / keep, 0.0, 1.0);
}

/// Singleton plausibility under elastic stretching: the realized set is
/// stretched to threshold max(rank(V), t0), so every point with r <= t0 is
/// always covered.
inline double elastic_plausibility(const RankingPRS& prs, double r, double t0) {
    if (r <= t0) return 1.0;
    return std::clamp(1.0 - prs.rank_cdf_below(r), 0.0, 1.0);
}

} // namespace imcond
