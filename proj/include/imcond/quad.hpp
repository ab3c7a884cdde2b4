#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature.
//
// Finite intervals are bisected globally on the panel with the largest error
// estimate. A half-infinite range [c, inf) is covered by panels of doubling
// width until their contribution is negligible; whatever is left past the
// last panel is mapped onto [0,1) with x = b + t/(1-t).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "imcond/error.hpp"

namespace imcond {

struct QuadOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_panels = 4000;
    // Hints for infinite ranges: where the mass sits and how wide it is.
    double center = 0.0;
    double scale = 1.0;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
    bool converged = true;
};

namespace detail {

// Kronrod abscissae (nonnegative half) and weights; Gauss-7 weights sit on
// the odd-indexed Kronrod nodes.
inline constexpr std::array<double, 8> gk15_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
double checked_eval(F& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw IntegrandError(x, v);
    return v;
}

template <class F>
Panel gk15(F& f, double a, double b, long& evals) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = checked_eval(f, c);
    double kronrod = fc * gk15_wk[7];
    double gauss = fc * gk15_wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * gk15_x[j];
        const double s = checked_eval(f, c - dx) + checked_eval(f, c + dx);
        kronrod += gk15_wk[j] * s;
        if (j % 2 == 1) gauss += gk15_wg[j / 2] * s;
    }
    evals += 15;
    return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

template <class F>
QuadResult adaptive_finite(F& f, double a, double b, const QuadOptions& opt) {
    QuadResult res;
    if (a == b) return res;
    std::priority_queue<Panel> heap;
    const Panel first = gk15(f, a, b, res.evaluations);
    heap.push(first);
    double total = first.value;
    double err = first.error;
    int panels = 1;
    while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (panels >= opt.max_panels) {
            res.converged = false;
            break;
        }
        const Panel worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            res.converged = false;
            break;
        }
        heap.pop();
        const Panel left = gk15(f, worst.a, mid, res.evaluations);
        const Panel right = gk15(f, mid, worst.b, res.evaluations);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    // Re-sum from the panels to shed accumulated cancellation error.
    double sum = 0.0;
    double esum = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        esum += heap.top().error;
        heap.pop();
    }
    res.value = sum;
    res.error = esum;
    return res;
}

// Integral of f over [c, inf) in the direction dir (+1 right, -1 left).
template <class F>
QuadResult half_infinite(F& f, double c, double dir, const QuadOptions& opt) {
    QuadResult res;
    auto g = [&](double t) { return f(c + dir * t); };
    double lo = 0.0;
    double width = std::max(opt.scale, 1e-300);
    int quiet = 0;
    for (int k = 0; k < 60; ++k) {
        const double hi = lo + width;
        QuadOptions o = opt;
        o.abs_tol = std::max(opt.abs_tol, 0.1 * opt.rel_tol * std::abs(res.value));
        const QuadResult p = adaptive_finite(g, lo, hi, o);
        res.value += p.value;
        res.error += p.error;
        res.evaluations += p.evaluations;
        res.converged = res.converged && p.converged;
        lo = hi;
        width *= 2.0;
        const bool negligible = res.value != 0.0
                                    ? std::abs(p.value) <= 0.01 * opt.rel_tol * std::abs(res.value)
                                    : k > 8;
        if (negligible) {
            if (++quiet >= 2) break;
        } else {
            quiet = 0;
        }
    }
    // Remaining tail [lo, inf) through t/(1-t).
    const double b = lo;
    auto tail = [&](double t) {
        const double s = 1.0 - t;
        const double x = b + t / s;
        const double v = g(x);
        return v == 0.0 ? 0.0 : v / (s * s);
    };
    QuadOptions o = opt;
    o.abs_tol = std::max(opt.abs_tol, 0.1 * opt.rel_tol * std::abs(res.value));
    const QuadResult t = adaptive_finite(tail, 0.0, 1.0, o);
    res.value += t.value;
    res.error += t.error;
    res.evaluations += t.evaluations;
    res.converged = res.converged && t.converged;
    return res;
}

} // namespace detail

/// Integral of f over (a,b); a and/or b may be infinite.
/// Throws IntegrandError when f is not finite at an abscissa.
template <class F>
QuadResult quad_detailed(F&& f, double a, double b, const QuadOptions& opt = {}) {
    if (std::isnan(a) || std::isnan(b)) throw DomainError("quad: NaN limit");
    if (a == b) return {};
    if (a > b) {
        QuadResult r = quad_detailed(f, b, a, opt);
        r.value = -r.value;
        return r;
    }
    const bool ainf = std::isinf(a);
    const bool binf = std::isinf(b);
    if (!ainf && !binf) return detail::adaptive_finite(f, a, b, opt);
    if (!ainf) return detail::half_infinite(f, a, +1.0, opt);
    if (!binf) return detail::half_infinite(f, b, -1.0, opt);
    const double c = opt.center;
    QuadResult r = detail::half_infinite(f, c, +1.0, opt);
    const QuadResult l = detail::half_infinite(f, c, -1.0, opt);
    r.value += l.value;
    r.error += l.error;
    r.evaluations += l.evaluations;
    r.converged = r.converged && l.converged;
    return r;
}

template <class F>
double quad(F&& f, double a, double b, double tol = 1e-10) {
    QuadOptions opt;
    opt.rel_tol = tol;
    return quad_detailed(f, a, b, opt).value;
}

template <class F>
double quad(F&& f, double a, double b, const QuadOptions& opt) {
    return quad_detailed(f, a, b, opt).value;
}

} // namespace imcond
