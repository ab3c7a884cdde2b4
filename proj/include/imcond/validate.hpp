#pragma once

// Monte Carlo harness: coverage and length of interval procedures, and
// uniformity diagnostics for plausibility at the true parameter.
//
// Replication i always runs on RngStream(seed, i) and its result is stored
// by index, so the aggregate does not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "imcond/dist.hpp"
#include "imcond/engine.hpp"
#include "imcond/error.hpp"
#include "imcond/models/bvn.hpp"
#include "imcond/models/nile.hpp"
#include "imcond/models/normal_mean.hpp"
#include "imcond/models/student_t.hpp"
#include "imcond/parallel.hpp"
#include "imcond/rng.hpp"

namespace imcond {

enum class ModelId { normal_mean, student_t, nile, gamma2, bvn_corr, var_comp };
enum class Method { cim, lcim, mle, bayes_flat, bayes_jeffreys };

inline std::string to_string(ModelId m) {
    switch (m) {
    case ModelId::normal_mean: return "normal-mean";
    case ModelId::student_t: return "t";
    case ModelId::nile: return "nile";
    case ModelId::gamma2: return "gamma2";
    case ModelId::bvn_corr: return "bvn";
    case ModelId::var_comp: return "vc";
    }
    return "?";
}

inline std::string to_string(Method m) {
    switch (m) {
    case Method::cim: return "cim";
    case Method::lcim: return "lcim";
    case Method::mle: return "mle";
    case Method::bayes_flat: return "bayes-flat";
    case Method::bayes_jeffreys: return "bayes-jeffreys";
    }
    return "?";
}

struct ExperimentSpec {
    ModelId model = ModelId::student_t;
    std::size_t n = 10;
    double nu = 5.0;                 // Student-t degrees of freedom
    std::vector<double> truth{0.0};  // sampled uniformly per rep when more than one
    std::size_t reps = 5000;
    double alpha = 0.05;
    Method method = Method::cim;
    std::uint64_t seed = 1;
    bool keep_records = false;
};

struct RepRecord {
    double theta = 0.0;
    Interval interval;
    bool covered = false;
    bool failed = false;
};

struct ExperimentResult {
    double coverage = 0.0;
    double mean_length = 0.0;
    double mc_se = 0.0;
    std::size_t reps_used = 0;
    std::size_t failures = 0;
    std::vector<RepRecord> records;
};

/// One simulated dataset for the scalar models, reduced to what the interval
/// constructions need.
struct SimulatedData {
    std::vector<double> x;          // t sample
    models::NileStats nile;
    models::BvnStats bvn;
    std::array<double, 2> y{0, 0}; // normal mean
};

inline bool supports(ModelId model, Method method) {
    switch (model) {
    case ModelId::student_t:
        return method == Method::cim || method == Method::mle || method == Method::bayes_flat;
    case ModelId::nile: return method == Method::cim;
    case ModelId::normal_mean: return method == Method::cim;
    case ModelId::bvn_corr:
        return method == Method::lcim || method == Method::mle || method == Method::bayes_jeffreys;
    default: return false;
    }
}

inline SimulatedData simulate(const ExperimentSpec& spec, double theta, RngStream& s) {
    SimulatedData d;
    switch (spec.model) {
    case ModelId::student_t: d.x = models::student_t_simulate(spec.n, spec.nu, theta, s); break;
    case ModelId::nile: {
        const auto [a, b] = models::nile_simulate(spec.n, theta, s);
        d.nile = models::nile_stats(a, b);
        break;
    }
    case ModelId::bvn_corr: d.bvn = models::bvn_simulate(spec.n, theta, s); break;
    case ModelId::normal_mean: d.y = models::normalmean_simulate(theta, s); break;
    default: throw ConfigurationError("simulate: model has no scalar interval experiment");
    }
    return d;
}

inline Interval interval_for(const ExperimentSpec& spec, const SimulatedData& d) {
    const double a = spec.alpha;
    switch (spec.model) {
    case ModelId::student_t:
        switch (spec.method) {
        case Method::cim: return ConditionalIM(models::student_t_model(d.x, spec.nu)).plausibility_interval(a);
        case Method::mle: return models::student_t_mle_interval(d.x, spec.nu, a);
        case Method::bayes_flat: return models::student_t_bayes_flat_interval(d.x, spec.nu, a);
        default: break;
        }
        break;
    case ModelId::nile:
        if (spec.method == Method::cim) return ConditionalIM(models::nile_model(d.nile)).plausibility_interval(a);
        break;
    case ModelId::normal_mean:
        if (spec.method == Method::cim) return ConditionalIM(models::normalmean_model(d.y[0])).plausibility_interval(a);
        break;
    case ModelId::bvn_corr:
        switch (spec.method) {
        case Method::lcim: return ConditionalIM(models::bvn_model(d.bvn)).plausibility_interval(a);
        case Method::mle: return models::bvn_mle_interval(d.bvn, a);
        case Method::bayes_jeffreys: return models::bvn_bayes_jeffreys_interval(d.bvn, a);
        default: break;
        }
        break;
    default: break;
    }
    throw ConfigurationError("run_coverage: method " + to_string(spec.method) + " is not available for model " +
                             to_string(spec.model));
}

inline double draw_truth(const std::vector<double>& truth, RngStream& s) {
    if (truth.size() == 1) return truth.front();
    const auto k = std::min(truth.size() - 1, static_cast<std::size_t>(s.uniform() * static_cast<double>(truth.size())));
    return truth[k];
}

/// Runs rep(theta_draw, stream) on substream i of `seed` for each replication
/// and aggregates in index order. An imcond error other than a configuration
/// error marks the rep failed; too many failures abort the run.
template <class Rep>
ExperimentResult run_replications(std::size_t reps, std::uint64_t seed, const std::vector<double>& truth,
                                  bool keep_records, Rep&& rep, unsigned threads = thread_count()) {
    std::vector<RepRecord> recs(reps);
    parallel_for(
        reps,
        [&](std::size_t i) {
            RngStream s(seed, i);
            RepRecord& r = recs[i];
            r.theta = draw_truth(truth, s);
            try {
                r.interval = rep(r.theta, s);
                if (!std::isfinite(r.interval.lo) || !std::isfinite(r.interval.hi))
                    throw EstimationError("run_coverage: non-finite interval");
                r.covered = r.interval.contains(r.theta);
            } catch (const ConfigurationError&) {
                throw;
            } catch (const Error&) {
                r.failed = true;
            }
        },
        threads);

    ExperimentResult out;
    std::size_t hits = 0;
    double len = 0.0;
    for (const auto& r : recs) {
        if (r.failed) {
            ++out.failures;
            continue;
        }
        ++out.reps_used;
        hits += r.covered ? 1 : 0;
        len += r.interval.length();
    }
    if (out.failures * 1000 >= reps)
        throw EstimationError("run_coverage: " + std::to_string(out.failures) + " of " + std::to_string(reps) +
                              " replications failed");
    out.coverage = static_cast<double>(hits) / static_cast<double>(out.reps_used);
    out.mean_length = len / static_cast<double>(out.reps_used);
    out.mc_se = std::sqrt(out.coverage * (1.0 - out.coverage) / static_cast<double>(out.reps_used));
    if (keep_records) out.records = std::move(recs);
    return out;
}

inline ExperimentResult run_coverage(const ExperimentSpec& spec, unsigned threads = thread_count()) {
    if (spec.reps < 100) throw ConfigurationError("run_coverage: need at least 100 replications");
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw ConfigurationError("run_coverage: alpha must lie in (0,1)");
    if (spec.truth.empty()) throw ConfigurationError("run_coverage: empty truth set");
    if (!supports(spec.model, spec.method))
        throw ConfigurationError("run_coverage: method " + to_string(spec.method) + " is not available for model " +
                                 to_string(spec.model));
    return run_replications(
        spec.reps, spec.seed, spec.truth, spec.keep_records,
        [&spec](double theta, RngStream& s) { return interval_for(spec, simulate(spec, theta, s)); }, threads);
}

/// Kolmogorov-Smirnov distance of a sample to Unif(0,1).
inline double ks_uniform(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double p = std::clamp(u[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - p, p - static_cast<double>(i) / n});
    }
    return d;
}

/// Asymptotic KS critical value sqrt(-log(level/2)/2)/sqrt(n): 1.63/sqrt(n) at 1%.
inline double ks_critical(std::size_t n, double level = 0.01) {
    return std::sqrt(-0.5 * std::log(0.5 * level)) / std::sqrt(static_cast<double>(n));
}

/// DKW band half-width at confidence 1 - level.
inline double dkw_slack(std::size_t n, double level = 0.01) {
    return std::sqrt(std::log(2.0 / level) / (2.0 * static_cast<double>(n)));
}

/// Largest excess of the empirical CDF over the uniform CDF; <= 0 means the
/// sample is stochastically no smaller than uniform on its support points.
inline double max_ecdf_excess(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double e = -1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        // Right limit at a tie block is what matters; scanning every index covers it.
        e = std::max(e, static_cast<double>(i + 1) / n - std::clamp(u[i], 0.0, 1.0));
    }
    return e;
}

struct QQSpec {
    ModelId model = ModelId::normal_mean;
    models::NormalMeanVariant variant = models::NormalMeanVariant::conditional_1d;
    std::size_t n = 10;
    double nu = 5.0;
    double theta = 0.0;
    std::size_t reps = 5000;
    std::uint64_t seed = 1;
};

struct QQResult {
    std::vector<double> sorted_pl;
    double ks = 0.0;
    double max_excess = 0.0;
    bool dominated = false; // ECDF <= uniform CDF + DKW slack at 1%
};

/// Plausibility of the true parameter over simulated datasets.
inline QQResult qq_uniformity(const QQSpec& spec, unsigned threads = thread_count()) {
    if (spec.reps < 2) throw ConfigurationError("qq_uniformity: need at least two replications");
    std::vector<double> pl(spec.reps);
    parallel_for(
        spec.reps,
        [&](std::size_t i) {
            RngStream s(spec.seed, i);
            switch (spec.model) {
            case ModelId::normal_mean: {
                const auto y = models::normalmean_simulate(spec.theta, s);
                pl[i] = models::normalmean_pl(y[0], y[1], spec.theta, spec.variant);
                break;
            }
            case ModelId::student_t:
                pl[i] = ConditionalIM(models::student_t_model(models::student_t_simulate(spec.n, spec.nu, spec.theta, s),
                                                              spec.nu))
                            .cpl_singleton(spec.theta);
                break;
            case ModelId::nile: {
                const auto [a, b] = models::nile_simulate(spec.n, spec.theta, s);
                pl[i] = ConditionalIM(models::nile_model(models::nile_stats(a, b))).cpl_singleton(spec.theta);
                break;
            }
            case ModelId::bvn_corr:
                pl[i] = ConditionalIM(models::bvn_model(models::bvn_simulate(spec.n, spec.theta, s)))
                            .cpl_singleton(spec.theta);
                break;
            default: throw ConfigurationError("qq_uniformity: model not supported");
            }
        },
        threads);
    QQResult r;
    std::sort(pl.begin(), pl.end());
    r.ks = ks_uniform(pl);
    r.max_excess = max_ecdf_excess(pl);
    r.dominated = r.max_excess <= dkw_slack(pl.size());
    r.sorted_pl = std::move(pl);
    return r;
}

/// Comparator intervals for a single dataset (t sample or bvn sums).
inline Interval comparator_interval(const std::vector<double>& x, double nu, Method method, double alpha) {
    switch (method) {
    case Method::mle: return models::student_t_mle_interval(x, nu, alpha);
    case Method::bayes_flat: return models::student_t_bayes_flat_interval(x, nu, alpha);
    default: throw ConfigurationError("comparator_interval: method not available for the t model");
    }
}

inline Interval comparator_interval(const models::BvnStats& s, Method method, double alpha) {
    switch (method) {
    case Method::mle: return models::bvn_mle_interval(s, alpha);
    case Method::bayes_jeffreys: return models::bvn_bayes_jeffreys_interval(s, alpha);
    default: throw ConfigurationError("comparator_interval: method not available for the bvn model");
    }
}

} // namespace imcond
