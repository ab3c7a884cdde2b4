#pragma once

// Two N(theta, 1) observations in the rotated form
// Y1 = X1 + X2 = 2 theta + V1, Y2 = X1 - X2 = V2, V1, V2 iid N(0, 2).

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "imcond/engine.hpp"
#include "imcond/prs.hpp"
#include "imcond/special.hpp"

namespace imcond::models {

enum class NormalMeanVariant { baseline_2d, conditional_1d };

/// Random square on (V1, V2): rank max|v_i|, R(t) = G(t / sqrt 2)^2.
inline RankingPRS normalmean_square_prs() {
    auto r = [](double t) {
        const double g = half_normal_cdf(t / std::numbers::sqrt2);
        return g * g;
    };
    return RankingPRS(
        PRSKind::square_2d, 2, [](std::span<const double> v) { return std::max(std::abs(v[0]), std::abs(v[1])); }, r,
        r, [](RngStream& s) { return std::vector<double>{s.normal(0.0, std::numbers::sqrt2), s.normal(0.0, std::numbers::sqrt2)}; });
}

/// Theta_y(S_t) is empty exactly when t < |y2|.
inline double normalmean_conflict_threshold(double y2) { return std::abs(y2); }

inline EmptinessTest normalmean_emptiness(double y2) {
    return [a = std::abs(y2)](double t) { return t < a; };
}

/// Rank of the auxiliary value solved at theta.
inline double normalmean_rank(double y1, double y2, double theta) {
    return std::max(std::abs(y1 - 2.0 * theta), std::abs(y2));
}

inline double normalmean_pl(double y1, double y2, double theta, NormalMeanVariant variant) {
    if (variant == NormalMeanVariant::conditional_1d)
        return 1.0 - std::abs(2.0 * normal_cdf((y1 - 2.0 * theta) / std::numbers::sqrt2) - 1.0);
    const double g = half_normal_cdf(normalmean_rank(y1, y2, theta) / std::numbers::sqrt2);
    const double g2 = half_normal_cdf(std::abs(y2) / std::numbers::sqrt2);
    return (1.0 - g * g) / (1.0 - g2 * g2);
}

/// Baseline square PRS with elastic stretching instead of normalization.
inline double normalmean_pl_elastic(double y1, double y2, double theta) {
    return elastic_plausibility(normalmean_square_prs(), normalmean_rank(y1, y2, theta),
                                normalmean_conflict_threshold(y2));
}

/// Conditional model Y1 = 2 theta + V1, V1 ~ N(0, 2).
inline ConditionalModel normalmean_model(double y1) {
    ConditionalModel m;
    m.name = "normal-mean";
    m.t = y1;
    m.residual = [y1](double th) { return y1 - 2.0 * th; };
    m.theta_from_residual = [y1](double v) { return 0.5 * (y1 - v); };
    m.residual_decreasing = true;
    m.law = std::make_shared<DistLaw>(Dist1D::normal(0.0, std::numbers::sqrt2));
    m.theta_hint = 0.5 * y1;
    m.theta_step = 1.0;
    return m;
}

inline std::array<double, 2> normalmean_simulate(double theta, RngStream& s) {
    const double x1 = theta + s.normal();
    const double x2 = theta + s.normal();
    return {x1 + x2, x1 - x2};
}

} // namespace imcond::models
