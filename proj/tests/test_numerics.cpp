#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "imcond/dist.hpp"
#include "imcond/mcmc.hpp"
#include "imcond/quad.hpp"
#include "imcond/rng.hpp"
#include "imcond/special.hpp"

using namespace imcond;

namespace {

// Lower regularized incomplete gamma by its power series; independent of
// the Boost route used by Dist1D.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 1000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return std::exp(a * std::log(x) - x - std::lgamma(a)) * sum;
}

double t_density(double nu, double x) {
    return std::exp(std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
                    0.5 * (nu + 1) * std::log1p(x * x / nu));
}

} // namespace

// ---------------------------------------------------------------- RNG

TEST(Rng, PhiloxKnownAnswers) {
    // Random123 known-answer vectors for philox4x32-10.
    auto z = philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(z[0], 0x6627e8d5u);
    EXPECT_EQ(z[1], 0xe169c58du);
    EXPECT_EQ(z[2], 0xbc57ac4cu);
    EXPECT_EQ(z[3], 0x9b00dbd8u);
    auto f = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(f[0], 0x408f276du);
    EXPECT_EQ(f[1], 0x41c83b0eu);
    EXPECT_EQ(f[2], 0xa20bc7c6u);
    EXPECT_EQ(f[3], 0x6d5451fdu);
    auto p = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(p[0], 0xd16cfe09u);
    EXPECT_EQ(p[1], 0x94fdccebu);
    EXPECT_EQ(p[2], 0x5001e420u);
    EXPECT_EQ(p[3], 0x24126ea1u);
}

TEST(Rng, EqualKeysGiveIdenticalSequences) {
    RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::vector<double> va, vb, vc, vd;
    for (int i = 0; i < 1000; ++i) {
        va.push_back(a.normal());
        vb.push_back(b.normal());
        vc.push_back(c.normal());
        vd.push_back(d.normal());
    }
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
    EXPECT_NE(va, vd);
}

TEST(Rng, UniformIsOpenAndCentered) {
    RngStream s(1, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, VariateMomentsMatchTargets) {
    RngStream s(9, 3);
    const int n = 200000;
    for (double shape : {0.4, 1.0, 3.5, 25.0}) {
        double m = 0.0, m2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = s.gamma(shape);
            m += g;
            m2 += g * g;
        }
        m /= n;
        const double var = m2 / n - m * m;
        EXPECT_NEAR(m, shape, 5.0 * std::sqrt(shape / n)) << shape;
        EXPECT_NEAR(var / shape, 1.0, 0.05) << shape;
    }
    double ms = 0.0;
    for (int i = 0; i < n; ++i) ms += s.chisq(7.0);
    EXPECT_NEAR(ms / n, 7.0, 5.0 * std::sqrt(14.0 / n));
    double me = 0.0;
    for (int i = 0; i < n; ++i) me += s.exponential(2.5);
    EXPECT_NEAR(me / n, 2.5, 5.0 * 2.5 / std::sqrt(n));
}

// ---------------------------------------------------------------- cdf / quantile

TEST(Dist, CdfExamples) {
    EXPECT_DOUBLE_EQ(Dist1D::normal(0, 1).cdf(0.0), 0.5);
    EXPECT_NEAR(Dist1D::chisq(2).cdf(2.0 * std::log(2.0)), 0.5, 1e-14);
    EXPECT_NEAR(Dist1D::gamma(3, 1).cdf(3.0), gamma_p_series(3.0, 3.0), 1e-10);
    for (double x : {0.1, 0.9, 2.0, 7.5})
        EXPECT_NEAR(Dist1D::gamma(2.7, 1.0).cdf(x), gamma_p_series(2.7, x), 1e-10) << x;
    EXPECT_NEAR(Dist1D::gamma(3, 2).cdf(6.0), gamma_p_series(3.0, 3.0), 1e-10);
    EXPECT_NEAR(Dist1D::chisq(5).cdf(4.0), gamma_p_series(2.5, 2.0), 1e-10);
}

TEST(Dist, InvalidParametersThrow) {
    EXPECT_THROW(Dist1D::normal(0, 0), DomainError);
    EXPECT_THROW(Dist1D::normal(0, -1), DomainError);
    EXPECT_THROW(Dist1D::chisq(0), DomainError);
    EXPECT_THROW(Dist1D::gamma(-1, 1), DomainError);
    EXPECT_THROW(Dist1D::gamma(1, 0), DomainError);
    EXPECT_THROW(Dist1D::student_t(0), DomainError);
    EXPECT_THROW(Dist1D::tabulated({0.0}, {0.0}), DomainError);
    EXPECT_THROW(Dist1D::tabulated({0.0, 0.0}, {0.0, 0.0}), DomainError);
    EXPECT_THROW(Dist1D::normal(0, 1).quantile(0.0), DomainError);
    EXPECT_THROW(Dist1D::normal(0, 1).quantile(1.0), DomainError);
    EXPECT_THROW(Dist1D::normal(0, 1).quantile(-0.2), DomainError);
}

namespace {
std::vector<Dist1D> all_kinds() {
    std::vector<double> grid, logd;
    for (int i = 0; i <= 400; ++i) {
        const double x = -3.0 + 8.0 * i / 400.0;
        grid.push_back(x);
        logd.push_back(-0.5 * x * x + std::log1p(0.3 * std::tanh(x)));
    }
    return {Dist1D::normal(1.5, 2.0), Dist1D::chisq(4.0),         Dist1D::gamma(0.7, 3.0),
            Dist1D::gamma(12.0, 0.5), Dist1D::student_t(3.0, -1.0), Dist1D::tabulated(grid, logd)};
}
} // namespace

TEST(Dist, CdfMonotoneWithEndpointLimits) {
    for (const auto& d : all_kinds()) {
        const Interval s = d.support();
        const double lo = std::isinf(s.lo) ? -60.0 : s.lo;
        const double hi = std::isinf(s.hi) ? 200.0 : s.hi;
        double prev = d.cdf(lo);
        EXPECT_NEAR(d.cdf(std::isinf(s.lo) ? -1e6 : s.lo), 0.0, 1e-12);
        for (int i = 1; i <= 2000; ++i) {
            const double x = lo + (hi - lo) * i / 2000.0;
            const double c = d.cdf(x);
            ASSERT_GE(c, prev - 1e-15) << x;
            ASSERT_GE(c, 0.0);
            ASSERT_LE(c, 1.0);
            prev = c;
        }
        EXPECT_NEAR(d.cdf(std::isinf(s.hi) ? 1e6 : s.hi), 1.0, 1e-12);
        EXPECT_EQ(d.cdf(s.hi), 1.0);
        EXPECT_EQ(d.cdf(std::isinf(s.lo) ? -std::numeric_limits<double>::infinity() : s.lo), 0.0);
    }
}

TEST(Dist, QuantileCdfRoundTrips) {
    EXPECT_NEAR(Dist1D::normal(0, 1).quantile(0.5), 0.0, 1e-12);
    for (const auto& d : all_kinds()) {
        double prevq = -std::numeric_limits<double>::infinity();
        for (double p : {1e-6, 0.001, 0.025, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.999, 1 - 1e-6}) {
            const double q = d.quantile(p);
            EXPECT_NEAR(d.cdf(q), p, 1e-9) << p;
            EXPECT_GT(q, prevq);
            prevq = q;
        }
        for (double p : {0.05, 0.2, 0.5, 0.8, 0.95}) {
            const double x = d.quantile(p);
            EXPECT_NEAR(d.quantile(d.cdf(x)), x, 1e-7);
        }
    }
}

TEST(Dist, StudentTQuantileMatchesQuadratureOracle) {
    // Oracle: bisection on the quadrature of the explicit t5 density.
    auto cdf_oracle = [](double y) {
        return 0.5 + quad([](double x) { return t_density(5.0, x); }, 0.0, y, 1e-13);
    };
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (lo + hi);
        (cdf_oracle(m) < 0.975 ? lo : hi) = m;
    }
    EXPECT_NEAR(Dist1D::student_t(5).quantile(0.975), 0.5 * (lo + hi), 1e-8);
    EXPECT_NEAR(Dist1D::student_t(5, 2.0).quantile(0.975), 2.0 + 0.5 * (lo + hi), 1e-8);
}

TEST(Dist, TabulatedTrapezoidApproachesNormal) {
    std::vector<double> grid, logd;
    for (int i = 0; i <= 4000; ++i) {
        const double x = -9.0 + 18.0 * i / 4000.0;
        grid.push_back(x);
        logd.push_back(-0.5 * x * x + 17.0);
    }
    const Dist1D t = Dist1D::tabulated(grid, logd);
    for (double x : {-2.0, -0.5, 0.0, 1.3, 2.5}) EXPECT_NEAR(t.cdf(x), normal_cdf(x), 1e-5);
    EXPECT_NEAR(t.pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-5);
}

// ---------------------------------------------------------------- quad

TEST(Quad, Examples) {
    EXPECT_NEAR(quad([](double x) { return x; }, 0.0, 1.0), 0.5, 1e-14);
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_NEAR(quad([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }, -inf, inf),
                1.0, 1e-10);
}

TEST(Quad, AnalyticIntegralTable) {
    const double inf = std::numeric_limits<double>::infinity();
    const double pi = std::numbers::pi;
    struct Case {
        std::function<double(double)> f;
        double a, b, exact;
    };
    const std::vector<Case> cases = {
        {[](double) { return 1.0; }, 0, 3, 3.0},
        {[](double x) { return x * x; }, -1, 2, 3.0},
        {[](double x) { return x * x * x * x * x; }, 0, 2, 64.0 / 6.0},
        {[](double x) { return 3 * x * x - 2 * x + 1; }, -2, 5, 133.0 - 21.0 + 7.0},
        {[](double x) { return std::pow(x, 10); }, 0, 1, 1.0 / 11.0},
        {[](double x) { return std::exp(-x * x); }, -inf, inf, std::sqrt(pi)},
        {[](double x) { return std::exp(-x * x); }, 0, inf, 0.5 * std::sqrt(pi)},
        {[](double x) { return std::exp(-0.5 * (x - 40) * (x - 40) / 0.01); }, -inf, inf, std::sqrt(2 * pi * 0.01)},
        {[](double x) { return x * x * std::exp(-0.5 * x * x); }, -inf, inf, std::sqrt(2 * pi)},
        {[](double x) { return std::exp(-x); }, 0, inf, 1.0},
        {[](double x) { return std::exp(-3 * x); }, 1, inf, std::exp(-3.0) / 3.0},
        {[](double x) { return std::exp(x); }, -inf, 0, 1.0},
        {[](double x) { return x * std::exp(-x); }, 0, inf, 1.0},
        {[](double x) { return std::pow(x, 4) * std::exp(-x); }, 0, inf, 24.0},
        {[](double x) { return 1.0 / (1.0 + x * x); }, -inf, inf, pi},
        {[](double x) { return 1.0 / (x * x); }, 1, inf, 1.0},
        {[](double x) { return std::sin(x); }, 0, pi, 2.0},
        {[](double x) { return std::cos(x) * std::cos(x); }, 0, 2 * pi, pi},
        {[](double x) { return std::sqrt(x); }, 0, 1, 2.0 / 3.0},
        {[](double x) { return std::log(x); }, 0, 1, -1.0},
        {[](double x) { return std::exp(-std::abs(x)); }, -inf, inf, 2.0},
        {[](double x) { return 1.0 / std::cosh(x); }, -inf, inf, pi},
    };
    ASSERT_GE(cases.size(), 20u);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        QuadOptions o;
        o.rel_tol = 1e-10;
        if (i == 7) o.center = 40.0;
        const double v = quad(cases[i].f, cases[i].a, cases[i].b, o);
        EXPECT_NEAR(v, cases[i].exact, 1e-9 * std::max(1.0, std::abs(cases[i].exact))) << "case " << i;
    }
}

TEST(Quad, NonFiniteIntegrandReportsAbscissa) {
    try {
        quad([](double x) { return x > 0.5 ? std::numeric_limits<double>::infinity() : 1.0; }, 0.0, 1.0);
        FAIL() << "expected IntegrandError";
    } catch (const IntegrandError& e) {
        EXPECT_GT(e.abscissa(), 0.5);
        EXPECT_LE(e.abscissa(), 1.0);
    }
    EXPECT_THROW(quad([](double) { return std::nan(""); }, 0.0, 1.0), IntegrandError);
}

TEST(Quad, GigDensityNormalizesWithK0) {
    for (double h : {2.0, 0.5, 5.0}) {
        const double k0 = bessel_k0(2.0 * h);
        auto f = [&](double v) { return v <= 0 ? 0.0 : std::exp(-h * (v + 1.0 / v)) / (2.0 * v * k0); };
        QuadOptions o;
        o.rel_tol = 1e-12;
        EXPECT_NEAR(quad(f, 0.0, std::numeric_limits<double>::infinity(), o), 1.0, 1e-10) << h;
    }
}

// ---------------------------------------------------------------- K0

TEST(BesselK0, MatchesIntegralRepresentationOracle) {
    for (double x : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        QuadOptions o;
        o.rel_tol = 1e-12;
        const double oracle =
            quad([x](double t) { return std::exp(-x * std::cosh(t)); }, 0.0, std::numeric_limits<double>::infinity(), o);
        EXPECT_NEAR(bessel_k0(x) / oracle, 1.0, 1e-10) << x;
    }
}

TEST(BesselK0, MatchesBoostAcrossBothBranches) {
    for (double x : {1e-3, 0.1, 0.5, 1.0, 3.0, 10.0, 29.9, 30.0, 30.1, 45.0, 80.0, 300.0}) {
        const double ref = boost::math::cyl_bessel_k(0, x);
        EXPECT_NEAR(bessel_k0(x) / ref, 1.0, 1e-12) << x;
    }
}

TEST(BesselK0, NormalizationIdentityOfGigDensity) {
    for (double h : {0.5, 1.0, 5.0}) {
        QuadOptions o;
        o.rel_tol = 1e-12;
        const double integral = quad([h](double v) { return v <= 0 ? 0.0 : std::exp(-h * (v + 1.0 / v)) / v; }, 0.0,
                                     std::numeric_limits<double>::infinity(), o);
        EXPECT_NEAR(2.0 * bessel_k0(2.0 * h) / integral, 1.0, 1e-10) << h;
    }
}

TEST(BesselK0, StrictlyDecreasingAndDomain) {
    EXPECT_GT(bessel_k0(1), bessel_k0(2));
    EXPECT_GT(bessel_k0(2), bessel_k0(4));
    EXPECT_THROW(bessel_k0(0.0), DomainError);
    EXPECT_THROW(bessel_k0(-1.0), DomainError);
}

// ---------------------------------------------------------------- NormalizedDensity

TEST(NormalizedDensity, ReproducesNormalCdf) {
    NormalizedDensity d([](double x) { return -0.5 * (x - 3) * (x - 3) / 4.0 + 100.0; }, 3.0, 2.0);
    for (double x : {-5.0, -1.0, 0.0, 2.9, 3.0, 4.5, 9.0}) EXPECT_NEAR(d.cdf(x), normal_cdf((x - 3) / 2), 1e-11) << x;
    for (double p : {1e-5, 0.025, 0.5, 0.9, 0.975}) EXPECT_NEAR(d.cdf(d.quantile(p)), p, 1e-10);
    EXPECT_NEAR(d.quantile(0.975), 3.0 + 2.0 * 1.959963984540054, 1e-8);
    EXPECT_NEAR(d.log_normalizer(), 100.0 + std::log(2.0 * std::sqrt(2.0 * std::numbers::pi)), 1e-10);
}

TEST(NormalizedDensity, BimodalWithPoorModeHint) {
    auto logf = [](double x) {
        return std::log(0.3 * std::exp(-0.5 * (x + 4) * (x + 4)) + 0.7 * std::exp(-0.5 * (x - 5) * (x - 5) / 0.25) / 0.5);
    };
    NormalizedDensity::Options opt;
    opt.must_cover = {-4.0, 5.0};
    NormalizedDensity d(logf, -4.0, 1.0, opt);
    for (double x : {-6.0, -4.0, 0.0, 4.5, 5.0, 6.0}) {
        const double exact = 0.3 * normal_cdf(x + 4) + 0.7 * normal_cdf((x - 5) / 0.5);
        EXPECT_NEAR(d.cdf(x), exact, 1e-10) << x;
    }
}

// ---------------------------------------------------------------- MH

TEST(Mh, StandardNormalMoments) {
    RngStream s(2024, 0);
    LogDensity target = [](std::span<const double> v) { return -0.5 * v[0] * v[0]; };
    const MhResult r = mh_sample(target, {0.0}, 100000, {2.4}, s);
    double m = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        m += r.at(i, 0);
        m2 += r.at(i, 0) * r.at(i, 0);
    }
    m /= r.size();
    EXPECT_NEAR(m, 0.0, 0.02);
    EXPECT_NEAR(m2 / r.size() - m * m, 1.0, 0.05);
    EXPECT_GT(r.acceptance_rate, 0.0);
}

TEST(Mh, PilotRuleLandsAcceptanceInBand) {
    LogDensity target = [](std::span<const double> v) {
        return -0.5 * (v[0] * v[0] / 0.01 + (v[1] - 3) * (v[1] - 3) / 25.0);
    };
    for (double start : {1e-4, 1.0, 100.0}) {
        RngStream s(5, static_cast<std::uint64_t>(start * 1e4));
        std::vector<double> state = {0.0, 3.0};
        const auto scale = tune_proposal(target, state, {start, start}, s);
        const MhResult check = mh_sample(target, state, 1000, scale, s);
        EXPECT_GE(check.acceptance_rate, 0.15) << start;
        EXPECT_LE(check.acceptance_rate, 0.55) << start;
    }
    RngStream s(6, 0);
    MhSettings set;
    const MhResult r = mh_sample_tuned([](std::span<const double> v) { return -0.5 * v[0] * v[0]; }, {0.0}, {50.0}, s, set);
    EXPECT_EQ(r.size(), set.samples);
    EXPECT_GE(r.acceptance_rate, 0.15);
    EXPECT_LE(r.acceptance_rate, 0.55);
}

TEST(Mh, DeterministicAndInitChecked) {
    LogDensity target = [](std::span<const double> v) { return -std::abs(v[0]); };
    RngStream a(1, 1), b(1, 1);
    EXPECT_EQ(mh_sample(target, {0.0}, 500, {1.0}, a).samples, mh_sample(target, {0.0}, 500, {1.0}, b).samples);
    LogDensity bad = [](std::span<const double> v) {
        return v[0] < 0 ? -std::numeric_limits<double>::infinity() : -v[0];
    };
    RngStream c(1, 2);
    EXPECT_THROW(mh_sample(bad, {-1.0}, 10, {1.0}, c), InitializationError);
}
