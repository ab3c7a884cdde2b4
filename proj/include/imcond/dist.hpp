#pragma once

// One-dimensional distributions used by the plausibility formulas.
//
// Named kinds (normal, chi-square, gamma, Student-t) take their CDFs from
// Boost.Math; quantiles of every kind go through the same bracketing +
// safeguarded-secant inversion of the CDF. The tabulated kind holds a
// log-density on a grid and integrates it with the trapezoid rule.
//
// NormalizedDensity is the workhorse for conditional laws: it takes an
// unnormalized log-density on the real line, integrates it panel by panel
// with adaptive Gauss-Kronrod, and answers cdf/quantile queries from the
// cumulative table.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "imcond/error.hpp"
#include "imcond/quad.hpp"
#include "imcond/special.hpp"

namespace imcond {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return x > lo && x < hi; }
};

struct Normal {
    double mean = 0.0;
    double sd = 1.0;
};
struct ChiSq {
    double df = 1.0;
};
struct Gamma {
    double shape = 1.0;
    double scale = 1.0;
};
struct StudentT {
    double df = 1.0;
    double location = 0.0;
};
struct Tabulated {
    std::vector<double> grid;        // strictly increasing
    std::vector<double> log_density; // unnormalized
};

class Dist1D {
public:
    using Kind = std::variant<Normal, ChiSq, Gamma, StudentT, Tabulated>;

    static Dist1D normal(double mean, double sd) { return Dist1D(Normal{mean, sd}); }
    static Dist1D chisq(double df) { return Dist1D(ChiSq{df}); }
    static Dist1D gamma(double shape, double scale = 1.0) { return Dist1D(Gamma{shape, scale}); }
    static Dist1D student_t(double df, double location = 0.0) { return Dist1D(StudentT{df, location}); }
    static Dist1D tabulated(std::vector<double> grid, std::vector<double> log_density) {
        return Dist1D(Tabulated{std::move(grid), std::move(log_density)});
    }

    explicit Dist1D(Kind kind) : kind_(std::move(kind)) { validate(); }

    const Kind& kind() const noexcept { return kind_; }

    Interval support() const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return std::visit(
            [&](const auto& d) -> Interval {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, ChiSq> || std::is_same_v<T, Gamma>) return {0.0, inf};
                else if constexpr (std::is_same_v<T, Tabulated>) return {d.grid.front(), d.grid.back()};
                else return {-inf, inf};
            },
            kind_);
    }

    double pdf(double x) const {
        return std::visit(
            [&](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Normal>) {
                    const double z = (x - d.mean) / d.sd;
                    return std::exp(-0.5 * z * z) / (d.sd * std::sqrt(2.0 * std::numbers::pi));
                } else if constexpr (std::is_same_v<T, ChiSq>) {
                    return x <= 0.0 ? 0.0 : 0.5 * boost::math::gamma_p_derivative(0.5 * d.df, 0.5 * x);
                } else if constexpr (std::is_same_v<T, Gamma>) {
                    return x <= 0.0 ? 0.0 : boost::math::gamma_p_derivative(d.shape, x / d.scale) / d.scale;
                } else if constexpr (std::is_same_v<T, StudentT>) {
                    return boost::math::pdf(boost::math::students_t(d.df), x - d.location);
                } else {
                    return tab_pdf(d, x);
                }
            },
            kind_);
    }

    double cdf(double x) const {
        if (std::isnan(x)) throw DomainError("cdf: NaN argument");
        return std::visit(
            [&](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Normal>) {
                    return normal_cdf((x - d.mean) / d.sd);
                } else if constexpr (std::is_same_v<T, ChiSq>) {
                    if (x <= 0.0) return 0.0;
                    if (std::isinf(x)) return 1.0;
                    return boost::math::gamma_p(0.5 * d.df, 0.5 * x);
                } else if constexpr (std::is_same_v<T, Gamma>) {
                    if (x <= 0.0) return 0.0;
                    if (std::isinf(x)) return 1.0;
                    return boost::math::gamma_p(d.shape, x / d.scale);
                } else if constexpr (std::is_same_v<T, StudentT>) {
                    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
                    return boost::math::cdf(boost::math::students_t(d.df), x - d.location);
                } else {
                    return tab_cdf(d, x);
                }
            },
            kind_);
    }

    double quantile(double p) const;

private:
    void validate() {
        std::visit(
            [&](auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Normal>) {
                    if (!(d.sd > 0.0) || !std::isfinite(d.mean)) throw DomainError("normal: sd must be positive");
                } else if constexpr (std::is_same_v<T, ChiSq>) {
                    if (!(d.df > 0.0)) throw DomainError("chisq: df must be positive");
                } else if constexpr (std::is_same_v<T, Gamma>) {
                    if (!(d.shape > 0.0) || !(d.scale > 0.0)) throw DomainError("gamma: shape and scale must be positive");
                } else if constexpr (std::is_same_v<T, StudentT>) {
                    if (!(d.df > 0.0) || !std::isfinite(d.location)) throw DomainError("student_t: df must be positive");
                } else {
                    prepare_table(d);
                }
            },
            kind_);
    }

    // Normalizes the tabulated density in place and fills the cumulative table.
    void prepare_table(Tabulated& t) {
        if (t.grid.size() < 2 || t.grid.size() != t.log_density.size())
            throw DomainError("tabulated: need >= 2 grid points with matching log-densities");
        for (std::size_t i = 1; i < t.grid.size(); ++i)
            if (!(t.grid[i] > t.grid[i - 1])) throw DomainError("tabulated: grid must be strictly increasing");
        const double mx = *std::max_element(t.log_density.begin(), t.log_density.end());
        if (!std::isfinite(mx)) throw DomainError("tabulated: log-density must have a finite maximum");
        dens_.resize(t.grid.size());
        for (std::size_t i = 0; i < dens_.size(); ++i) dens_[i] = std::exp(t.log_density[i] - mx);
        cum_.assign(t.grid.size(), 0.0);
        for (std::size_t i = 1; i < dens_.size(); ++i)
            cum_[i] = cum_[i - 1] + 0.5 * (dens_[i] + dens_[i - 1]) * (t.grid[i] - t.grid[i - 1]);
        const double z = cum_.back();
        for (auto& d : dens_) d /= z;
        for (auto& c : cum_) c /= z;
    }

    double tab_pdf(const Tabulated& t, double x) const {
        if (x < t.grid.front() || x > t.grid.back()) return 0.0;
        const auto it = std::upper_bound(t.grid.begin(), t.grid.end(), x);
        const std::size_t i = std::min<std::size_t>(it - t.grid.begin(), t.grid.size() - 1) - 1;
        const double w = (x - t.grid[i]) / (t.grid[i + 1] - t.grid[i]);
        return (1.0 - w) * dens_[i] + w * dens_[i + 1];
    }

    double tab_cdf(const Tabulated& t, double x) const {
        if (x <= t.grid.front()) return 0.0;
        if (x >= t.grid.back()) return 1.0;
        const auto it = std::upper_bound(t.grid.begin(), t.grid.end(), x);
        const std::size_t i = (it - t.grid.begin()) - 1;
        const double dx = x - t.grid[i];
        const double fx = tab_pdf(t, x);
        return cum_[i] + 0.5 * (dens_[i] + fx) * dx;
    }

    Kind kind_;
    std::vector<double> dens_;
    std::vector<double> cum_;
};

struct InvertOptions {
    double p_tol = 1e-15;
    double x_rel_tol = 4e-16;
    int max_iter = 400;
};

/// Solves cdf(x) = p for a nondecreasing cdf, starting from a guess and an
/// initial step for the outward bracket search, within [support.lo, support.hi].
/// Bisection steps alternate with secant (regula falsi) steps so each
/// iteration at least halves the bracket every other step.
template <class Cdf>
double invert_cdf(Cdf&& cdf, double p, double guess, double step, Interval support, const InvertOptions& opt = {}) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1)");
    step = std::max(step, 1e-8);
    guess = std::clamp(guess, std::nextafter(support.lo, support.hi), std::nextafter(support.hi, support.lo));
    double lo = guess;
    double hi = guess;
    double flo = cdf(lo) - p;
    double fhi = flo;
    if (flo > 0.0) {
        for (int k = 0; flo > 0.0; ++k) {
            hi = lo;
            fhi = flo;
            const double next = lo - step;
            lo = next > support.lo ? next : 0.5 * (lo + support.lo);
            if (std::isinf(support.lo) || next > support.lo) step *= 2.0;
            flo = cdf(lo) - p;
            if (k > 2000) throw EstimationError("quantile: failed to bracket from below");
        }
    } else {
        for (int k = 0; fhi <= 0.0; ++k) {
            lo = hi;
            flo = fhi;
            const double next = hi + step;
            hi = next < support.hi ? next : 0.5 * (hi + support.hi);
            if (std::isinf(support.hi) || next < support.hi) step *= 2.0;
            fhi = cdf(hi) - p;
            if (k > 2000) throw EstimationError("quantile: failed to bracket from above");
        }
    }
    // Invariant: flo <= 0 < fhi.
    for (int it = 0; it < opt.max_iter; ++it) {
        double x;
        if (it % 2 == 0 && fhi != flo) x = lo - flo * (hi - lo) / (fhi - flo);
        else x = 0.5 * (lo + hi);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        if (!(x > lo && x < hi)) break;
        const double fx = cdf(x) - p;
        if (std::abs(fx) <= opt.p_tol) return x;
        if (fx <= 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if (hi - lo <= opt.x_rel_tol * std::max(std::abs(lo), std::abs(hi))) break;
    }
    return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

inline double Dist1D::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1)");
    double guess = 0.0;
    double step = 1.0;
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Normal>) {
                guess = d.mean;
                step = d.sd;
            } else if constexpr (std::is_same_v<T, ChiSq>) {
                guess = d.df;
                step = std::sqrt(2.0 * d.df);
            } else if constexpr (std::is_same_v<T, Gamma>) {
                guess = d.shape * d.scale;
                step = std::sqrt(d.shape) * d.scale;
            } else if constexpr (std::is_same_v<T, StudentT>) {
                guess = d.location;
                step = 1.0;
            } else {
                guess = 0.5 * (d.grid.front() + d.grid.back());
                step = 0.1 * (d.grid.back() - d.grid.front());
            }
        },
        kind_);
    return invert_cdf([&](double x) { return cdf(x); }, p, guess, step, support());
}

inline double cdf(const Dist1D& d, double x) { return d.cdf(x); }
inline double quantile(const Dist1D& d, double p) { return d.quantile(p); }

/// Continuous law on the real line given by an unnormalized log-density.
///
/// The constructor lays panels outward from `mode` (width `scale`, growing
/// geometrically past the first few) until a panel carries less than 1e-14 of
/// the accumulated mass and every point of `must_cover` is inside. Mass past
/// the outermost panels is below 1e-12 and is dropped.
class NormalizedDensity {
public:
    struct Options {
        double rel_tol = 1e-12;
        double tail_mass = 1e-14;
        Interval must_cover{0.0, 0.0};
    };

    NormalizedDensity() = default;

    NormalizedDensity(std::function<double(double)> log_density, double mode, double scale)
        : NormalizedDensity(std::move(log_density), mode, scale, Options{}) {}

    NormalizedDensity(std::function<double(double)> log_density, double mode, double scale, Options opt)
        : logf_(std::move(log_density)), opt_(opt) {
        if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("NormalizedDensity: scale must be positive");
        if (!std::isfinite(mode)) throw DomainError("NormalizedDensity: mode must be finite");
        offset_ = logf_(mode);
        if (!std::isfinite(offset_)) throw DomainError("NormalizedDensity: log-density not finite at the mode hint");
        for (int attempt = 0; attempt < 8; ++attempt) {
            try {
                build(mode, scale);
                return;
            } catch (const Rescale& r) {
                offset_ = r.new_offset;
            }
        }
        throw EstimationError("NormalizedDensity: could not stabilize the log-density offset");
    }

    /// Normalized density at x.
    double pdf(double x) const { return std::exp(logf_(x) - offset_ - log_z_); }

    /// log of int exp(log_density(v)) dv.
    double log_normalizer() const { return offset_ + log_z_; }

    double cdf(double x) const {
        if (std::isnan(x)) throw DomainError("cdf: NaN argument");
        if (x <= knots_.front()) return 0.0;
        if (x >= knots_.back()) return 1.0;
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
        const std::size_t i = (it - knots_.begin()) - 1;
        // Integrate from the nearer knot of the panel.
        if (x - knots_[i] <= knots_[i + 1] - x)
            return std::clamp(cum_[i] + partial(knots_[i], x), 0.0, 1.0);
        return std::clamp(cum_[i + 1] - partial(x, knots_[i + 1]), 0.0, 1.0);
    }

    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1)");
        auto it = std::upper_bound(cum_.begin(), cum_.end(), p);
        std::size_t i = it == cum_.begin() ? 0 : (it - cum_.begin()) - 1;
        i = std::min(i, knots_.size() - 2);
        double lo = knots_[i];
        double hi = knots_[i + 1];
        double flo = cum_[i] - p;
        double fhi = cum_[i + 1] - p;
        // Newton from the panel start with bisection safeguard; each step
        // integrates only the short piece since the last accepted point.
        double x = lo - flo * (hi - lo) / (fhi - flo);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        double fx = cum_[i] + partial(knots_[i], x) - p;
        for (int iter = 0; iter < 100; ++iter) {
            if (std::abs(fx) <= 1e-13) return x;
            if (fx < 0.0) {
                lo = x;
                flo = fx;
            } else {
                hi = x;
                fhi = fx;
            }
            const double d = pdf(x);
            double nx = d > 0.0 ? x - fx / d : 0.5 * (lo + hi);
            if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
            if (nx == x || hi - lo <= 4e-16 * std::max(std::abs(lo), std::abs(hi))) return x;
            const double fn = fx + (nx > x ? partial(x, nx) : -partial(nx, x));
            x = nx;
            fx = fn;
        }
        return x;
    }

    Interval range() const { return {knots_.front(), knots_.back()}; }
    std::size_t panels() const { return knots_.size() - 1; }

private:
    struct Rescale {
        double new_offset;
    };

    double unnormalized(double v) const {
        const double l = logf_(v);
        if (std::isnan(l)) throw IntegrandError(v, l);
        if (l - offset_ > 300.0) throw Rescale{l};
        return l == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(l - offset_);
    }

    double integrate(double a, double b, double abs_tol) const {
        QuadOptions o;
        o.rel_tol = opt_.rel_tol;
        o.abs_tol = abs_tol;
        auto f = [this](double v) { return unnormalized(v); };
        return quad_detailed(f, a, b, o).value;
    }

    double partial(double a, double b) const {
        if (b <= a) return 0.0;
        try {
            return integrate(a, b, 1e-15 * z_) / z_;
        } catch (const Rescale&) {
            throw EstimationError("NormalizedDensity: log-density exceeds its tabulated range");
        }
    }

    void build(double mode, double scale) {
        std::vector<double> right{mode};
        std::vector<double> rmass;
        std::vector<double> left{mode};
        std::vector<double> lmass;
        double total = 0.0;
        auto sweep = [&](std::vector<double>& knots, std::vector<double>& mass, double dir, double cover) {
            double w = scale;
            int quiet = 0;
            for (int k = 0; k < 400; ++k) {
                const double a = knots.back();
                const double b = a + dir * w;
                const double m = dir > 0 ? integrate(a, b, 1e-16 * std::max(total, 1e-300))
                                         : integrate(b, a, 1e-16 * std::max(total, 1e-300));
                knots.push_back(b);
                mass.push_back(m);
                total += m;
                const bool covered = dir > 0 ? b >= cover : b <= cover;
                if (m <= opt_.tail_mass * total && covered) {
                    if (++quiet >= 2) return;
                } else {
                    quiet = 0;
                }
                if (k >= 6) w *= 1.5;
            }
            throw EstimationError("NormalizedDensity: tails did not decay");
        };
        const bool has_cover = opt_.must_cover.hi > opt_.must_cover.lo;
        sweep(right, rmass, +1.0, has_cover ? opt_.must_cover.hi : mode);
        sweep(left, lmass, -1.0, has_cover ? opt_.must_cover.lo : mode);
        if (!(total > 0.0) || !std::isfinite(total)) throw EstimationError("NormalizedDensity: zero or non-finite mass");

        knots_.assign(left.rbegin(), left.rend());
        knots_.insert(knots_.end(), right.begin() + 1, right.end());
        std::vector<double> mass(lmass.rbegin(), lmass.rend());
        mass.insert(mass.end(), rmass.begin(), rmass.end());
        z_ = 0.0;
        for (double m : mass) z_ += m;
        log_z_ = std::log(z_);
        cum_.assign(knots_.size(), 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < mass.size(); ++i) {
            acc += mass[i];
            cum_[i + 1] = acc / z_;
        }
        cum_.back() = 1.0;
    }

    std::function<double(double)> logf_;
    Options opt_;
    double offset_ = 0.0;
    double z_ = 1.0;
    double log_z_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> cum_;
};

} // namespace imcond
