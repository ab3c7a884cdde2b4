#pragma once

// Conditional IMs for a scalar parameter.
//
// A model supplies the observed statistic T(x), the residual v_T(theta) that
// solves T(x) = b(v_T, theta), and the conditional law of V_T given the
// observed feature H(x). Local models supply that law as a function of the
// localization point theta0 instead; cpl at theta then uses theta0 = theta.
//
// With the default PRS on the probability scale, the random set
// Theta_T(S) = {theta : |F(v_T(theta)) - 1/2| <= |W - 1/2|} is an interval
// whenever v_T is monotone in theta, which every closed form below relies on.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "imcond/dist.hpp"
#include "imcond/error.hpp"
#include "imcond/parallel.hpp"
#include "imcond/prs.hpp"
#include "imcond/rng.hpp"

namespace imcond {

/// Baseline association x = a(theta, u) with its unique solver u_{x,theta}.
/// Vectors throughout; dimensions are informational.
struct Association {
    std::size_t dim_theta = 1;
    std::size_t dim_u = 1;
    std::size_t dim_x = 1;
    std::function<std::vector<double>(const std::vector<double>& theta, const std::vector<double>& u)> forward;
    std::function<std::vector<double>(const std::vector<double>& x, const std::vector<double>& theta)> solve_u;
    std::function<std::vector<double>(RngStream&)> sample_u;
};

/// Continuous law of V_T on the real line (or a part of it).
class ConditionalLaw {
public:
    virtual ~ConditionalLaw() = default;
    virtual double cdf(double v) const = 0;
    virtual double quantile(double p) const = 0;
    virtual double pdf(double v) const = 0;
};

class DistLaw final : public ConditionalLaw {
public:
    explicit DistLaw(Dist1D d) : d_(std::move(d)) {}
    double cdf(double v) const override { return d_.cdf(v); }
    double quantile(double p) const override { return d_.quantile(p); }
    double pdf(double v) const override { return d_.pdf(v); }

private:
    Dist1D d_;
};

/// Law given by a quad-normalized density, optionally pushed through an
/// increasing map: V = g(W) with W having the tabulated density.
class DensityLaw final : public ConditionalLaw {
public:
    explicit DensityLaw(NormalizedDensity d) : d_(std::move(d)) {}
    DensityLaw(NormalizedDensity d, std::function<double(double)> g, std::function<double(double)> g_inv,
               std::function<double(double)> g_inv_deriv)
        : d_(std::move(d)), g_(std::move(g)), g_inv_(std::move(g_inv)), g_inv_deriv_(std::move(g_inv_deriv)) {}

    double cdf(double v) const override { return d_.cdf(g_inv_ ? g_inv_(v) : v); }
    double quantile(double p) const override {
        const double w = d_.quantile(p);
        return g_ ? g_(w) : w;
    }
    double pdf(double v) const override {
        if (!g_inv_) return d_.pdf(v);
        const double w = g_inv_(v);
        if (!std::isfinite(w)) return 0.0;
        return d_.pdf(w) * g_inv_deriv_(v);
    }
    const NormalizedDensity& density() const { return d_; }

private:
    NormalizedDensity d_;
    std::function<double(double)> g_, g_inv_, g_inv_deriv_;
};

/// Law given directly by a CDF and its inverse.
class FunctionLaw final : public ConditionalLaw {
public:
    FunctionLaw(std::function<double(double)> cdf, std::function<double(double)> quantile,
                std::function<double(double)> pdf)
        : cdf_(std::move(cdf)), quantile_(std::move(quantile)), pdf_(std::move(pdf)) {}
    double cdf(double v) const override { return cdf_(v); }
    double quantile(double p) const override { return quantile_(p); }
    double pdf(double v) const override { return pdf_(v); }

private:
    std::function<double(double)> cdf_, quantile_, pdf_;
};

using LawPtr = std::shared_ptr<const ConditionalLaw>;

/// Reduced association T(x) = b(V_T, theta) for scalar theta.
struct ConditionalModel {
    std::string name;
    double t = 0.0;                                     // observed T(x)
    Interval theta_space{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    std::function<double(double)> residual;             // v_T(theta) solving T(x) = b(v_T, theta)
    std::function<double(double)> theta_from_residual;  // inverse of residual
    bool residual_decreasing = true;
    LawPtr law;                                         // law of V_T given H(x) (global models)
    std::function<LawPtr(double)> local_law;            // law given H_theta0(x), indexed by theta0
    double theta_hint = 0.0;                            // a point near the cpl maximum
    double theta_step = 1.0;                            // scale of theta for bracketing

    bool is_local() const { return static_cast<bool>(local_law); }
};

struct Assertion {
    enum class Kind { singleton, not_singleton, lower, upper, full, empty, grid_set };
    Kind kind = Kind::singleton;
    double value = 0.0;                 // theta for singleton kinds, s for lower/upper
    std::vector<double> grid;           // grid_set: the finite grid
    std::function<bool(double)> member; // grid_set: membership predicate

    static Assertion singleton(double theta) { return {Kind::singleton, theta, {}, {}}; }
    static Assertion lower(double s) { return {Kind::lower, s, {}, {}}; }  // theta <= s
    static Assertion upper(double s) { return {Kind::upper, s, {}, {}}; }  // theta >= s
    static Assertion full() { return {Kind::full, 0.0, {}, {}}; }
    static Assertion empty() { return {Kind::empty, 0.0, {}, {}}; }
    static Assertion on_grid(std::vector<double> grid, std::function<bool(double)> member) {
        return {Kind::grid_set, 0.0, std::move(grid), std::move(member)};
    }

    Assertion complement() const {
        switch (kind) {
        case Kind::singleton: return {Kind::not_singleton, value, {}, {}};
        case Kind::not_singleton: return singleton(value);
        // Complements of the closed half-lines differ from the opposite
        // half-line only at s, a null event for continuous laws.
        case Kind::lower: return upper(value);
        case Kind::upper: return lower(value);
        case Kind::full: return empty();
        case Kind::empty: return full();
        case Kind::grid_set: {
            auto m = member;
            return on_grid(grid, [m](double th) { return !m(th); });
        }
        }
        return *this;
    }
};

struct RegionPoint {
    double theta = 0.0;
    double cpl = 0.0;
    bool in_region = false;
};

class ConditionalIM {
public:
    explicit ConditionalIM(ConditionalModel m) : m_(std::move(m)) {
        if (!m_.residual) throw ConfigurationError("ConditionalIM: model has no residual map");
        if (!m_.law && !m_.local_law) throw ConfigurationError("ConditionalIM: model has no conditional law");
    }

    const ConditionalModel& model() const { return m_; }

    /// Conditional law used for assertions about theta0.
    LawPtr law_at(double theta0) const {
        if (!m_.is_local()) return m_.law;
        {
            std::lock_guard lock(mu_);
            const auto it = cache_.find(theta0);
            if (it != cache_.end()) return it->second;
        }
        LawPtr law = m_.local_law(theta0);
        std::lock_guard lock(mu_);
        if (cache_.size() >= kCacheLimit) cache_.clear();
        cache_.emplace(theta0, law);
        return law;
    }

    /// F(v_T(theta)) under the law at theta (local) or the global law.
    double cdf_at(double theta) const {
        check_theta(theta);
        return law_at(theta)->cdf(m_.residual(theta));
    }

    double cpl_singleton(double theta) const {
        const double p = cdf_at(theta);
        return std::clamp(1.0 - std::abs(1.0 - 2.0 * p), 0.0, 1.0);
    }

    double cbel(const Assertion& a) const {
        using K = Assertion::Kind;
        switch (a.kind) {
        case K::full: return 1.0;
        case K::empty: return 0.0;
        case K::singleton: return 0.0;
        case K::not_singleton: return 1.0 - cpl_singleton(a.value);
        default: break;
        }
        if (m_.is_local())
            throw UnsupportedAssertionError("cbel: a local conditional IM only supports assertions about theta0");
        if (!m_.theta_from_residual)
            throw UnsupportedAssertionError("cbel: interval assertions need a monotone reduced association");
        if (a.kind == K::grid_set) return grid_bel(a);
        const double s = std::clamp(a.value, m_.theta_space.lo, m_.theta_space.hi);
        const double p = s <= m_.theta_space.lo ? (m_.residual_decreasing ? 1.0 : 0.0)
                         : s >= m_.theta_space.hi ? (m_.residual_decreasing ? 0.0 : 1.0)
                                                  : m_.law->cdf(m_.residual(s));
        const bool lower = a.kind == K::lower;
        const double below = std::max(0.0, 1.0 - 2.0 * p); // P{a <= 1/2 - p}
        const double above = std::max(0.0, 2.0 * p - 1.0); // P{a <= p - 1/2}
        if (m_.residual_decreasing) return lower ? below : above;
        return lower ? above : below;
    }

    double cpl(const Assertion& a) const {
        if (a.kind == Assertion::Kind::singleton) return cpl_singleton(a.value);
        return 1.0 - cbel(a.complement());
    }

    /// {theta : cpl(theta) > alpha}. For alpha >= 1 the result is the empty
    /// interval at the cpl maximum.
    Interval plausibility_interval(double alpha) const {
        if (!(alpha > 0.0)) throw DomainError("plausibility_interval: alpha must be positive");
        const double a = std::min(alpha, 1.0);
        if (!m_.is_local()) {
            if (!m_.theta_from_residual)
                throw ConfigurationError("plausibility_interval: model has no inverse residual map");
            if (a >= 1.0) {
                const double c = m_.theta_from_residual(m_.law->quantile(0.5));
                return {c, c};
            }
            const double e1 = m_.theta_from_residual(m_.law->quantile(0.5 * a));
            const double e2 = m_.theta_from_residual(m_.law->quantile(1.0 - 0.5 * a));
            return {std::min(e1, e2), std::max(e1, e2)};
        }
        // Local: F_theta(v_T(theta)) is monotone in theta; solve for both levels.
        if (a >= 1.0) {
            const double c = solve_level(0.5);
            return {c, c};
        }
        const double e1 = solve_level(0.5 * a);
        const double e2 = solve_level(1.0 - 0.5 * a);
        return {std::min(e1, e2), std::max(e1, e2)};
    }

    std::vector<RegionPoint> plausibility_region(double alpha, const std::vector<double>& grid) const {
        std::vector<RegionPoint> out(grid.size());
        parallel_for(grid.size(), [&](std::size_t i) {
            const double c = cpl_singleton(grid[i]);
            out[i] = {grid[i], c, c > alpha};
        });
        return out;
    }

private:
    static constexpr std::size_t kCacheLimit = 4096;

    void check_theta(double theta) const {
        if (!(theta > m_.theta_space.lo && theta < m_.theta_space.hi))
            throw DomainError("theta outside the parameter space");
    }

    // bel of a grid assertion: Theta(S) restricted to the grid lies in A until
    // |W - 1/2| reaches the smallest |F - 1/2| over grid points outside A.
    double grid_bel(const Assertion& a) const {
        double m = 0.5;
        for (double th : a.grid) {
            if (a.member(th)) continue;
            m = std::min(m, std::abs(cdf_at(th) - 0.5));
        }
        return std::min(1.0, 2.0 * m);
    }

    // theta with F_theta(v_T(theta)) = level, F composed with the residual
    // being monotone in theta. Returns a boundary of the parameter space when
    // the level is not reached inside it.
    double solve_level(double level) const {
        const Interval sp = m_.theta_space;
        // g increasing in theta.
        auto g = [&](double th) {
            const double p = cdf_at(th);
            return m_.residual_decreasing ? (1.0 - p) - (1.0 - level) : p - level;
        };
        double x0 = std::clamp(m_.theta_hint, sp.lo, sp.hi);
        if (!(x0 > sp.lo && x0 < sp.hi)) x0 = std::isfinite(sp.lo) && std::isfinite(sp.hi) ? 0.5 * (sp.lo + sp.hi) : 0.0;
        double g0 = g(x0);
        if (g0 == 0.0) return x0;
        const double dir = g0 < 0.0 ? 1.0 : -1.0;
        const double bound = dir > 0 ? sp.hi : sp.lo;
        double step = m_.theta_step;
        double a = x0, ga = g0;
        double b = x0, gb = g0;
        for (int k = 0;; ++k) {
            double next = b + dir * step;
            if (std::isfinite(bound) && (dir > 0 ? next >= bound : next <= bound)) next = 0.5 * (b + bound);
            if (std::isfinite(bound) && std::abs(bound - next) < 1e-13 * std::max(1.0, std::abs(bound))) return bound;
            a = b;
            ga = gb;
            b = next;
            gb = g(b);
            if ((gb > 0.0) != (ga > 0.0) || gb == 0.0) break;
            step *= 2.0;
            if (k > 400) throw EstimationError("plausibility_interval: could not bracket the endpoint");
        }
        // Regula falsi (Illinois) on the bracket [a, b].
        double lo = std::min(a, b), hi = std::max(a, b);
        double flo = lo == a ? ga : gb, fhi = lo == a ? gb : ga;
        int side = 0;
        for (int it = 0; it < 200; ++it) {
            double x = (lo * fhi - hi * flo) / (fhi - flo);
            if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
            const double fx = g(x);
            if (fx == 0.0 || hi - lo < 1e-12 * std::max(1.0, std::abs(x))) return x;
            if ((fx > 0.0) == (fhi > 0.0)) {
                hi = x;
                fhi = fx;
                if (side == -1) flo *= 0.5;
                side = -1;
            } else {
                lo = x;
                flo = fx;
                if (side == 1) fhi *= 0.5;
                side = 1;
            }
        }
        return 0.5 * (lo + hi);
    }

    ConditionalModel m_;
    mutable std::mutex mu_;
    mutable std::map<double, LawPtr> cache_;
};

inline double cpl_singleton(const ConditionalIM& im, double theta) { return im.cpl_singleton(theta); }
inline double cbel(const ConditionalIM& im, const Assertion& a) { return im.cbel(a); }
inline Interval plausibility_interval(const ConditionalIM& im, double alpha) { return im.plausibility_interval(alpha); }
inline std::vector<RegionPoint> plausibility_region(const ConditionalIM& im, double alpha, const std::vector<double>& grid) {
    return im.plausibility_region(alpha, grid);
}

/// Grid region for any parameter type given its cpl.
template <class Theta, class Cpl>
std::vector<std::pair<Theta, double>> plausibility_region(const std::vector<Theta>& grid, Cpl&& cpl) {
    std::vector<std::pair<Theta, double>> out(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { out[i] = {grid[i], cpl(grid[i])}; });
    return out;
}

} // namespace imcond
