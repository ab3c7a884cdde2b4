#pragma once

// Random-walk Metropolis-Hastings with a simple pilot rule for the proposal
// scale. Chains are sequential; parallelism belongs to the caller.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "imcond/error.hpp"
#include "imcond/rng.hpp"

namespace imcond {

using LogDensity = std::function<double(std::span<const double>)>;

struct MhResult {
    std::size_t dim = 0;
    std::vector<double> samples; // row-major, steps x dim
    double acceptance_rate = 0.0;
    std::vector<double> proposal_scale;

    std::size_t size() const { return dim == 0 ? 0 : samples.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {samples.data() + i * dim, dim}; }
    double at(std::size_t i, std::size_t j) const { return samples[i * dim + j]; }
};

/// Plain random-walk chain of `steps` states started at `init`, Gaussian
/// proposals with per-coordinate standard deviations `proposal_scale`.
inline MhResult mh_sample(const LogDensity& logdensity, std::vector<double> init, std::size_t steps,
                          const std::vector<double>& proposal_scale, RngStream& stream) {
    const std::size_t d = init.size();
    if (d == 0 || proposal_scale.size() != d) throw ConfigurationError("mh_sample: dimension mismatch");
    double cur = logdensity(init);
    if (!std::isfinite(cur)) throw InitializationError("mh_sample: log-density is not finite at the initial state");
    MhResult out;
    out.dim = d;
    out.proposal_scale = proposal_scale;
    out.samples.reserve(steps * d);
    std::vector<double> prop(d);
    std::size_t accepted = 0;
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 0; j < d; ++j) prop[j] = init[j] + proposal_scale[j] * stream.normal();
        const double lp = logdensity(prop);
        if (std::isfinite(lp) && std::log(stream.uniform()) < lp - cur) {
            init.swap(prop);
            cur = lp;
            ++accepted;
        }
        out.samples.insert(out.samples.end(), init.begin(), init.end());
    }
    out.acceptance_rate = steps == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(steps);
    return out;
}

struct MhSettings {
    std::size_t samples = 5000;
    std::size_t burn_in = 2000;
    std::size_t pilot_steps = 1000;
    int max_pilots = 30;
    double accept_lo = 0.2;
    double accept_hi = 0.5;
};

/// Pilot tuning: rescale all coordinates by 2 (acceptance too high) or 0.5
/// (too low) until a pilot chain's acceptance lands in [lo, hi]. Returns the
/// tuned scale; the chain state after the last pilot is written to `state`.
inline std::vector<double> tune_proposal(const LogDensity& logdensity, std::vector<double>& state,
                                         std::vector<double> scale, RngStream& stream, const MhSettings& s = {}) {
    for (int k = 0; k < s.max_pilots; ++k) {
        const MhResult pilot = mh_sample(logdensity, state, s.pilot_steps, scale, stream);
        const auto last = pilot.row(pilot.size() - 1);
        state.assign(last.begin(), last.end());
        if (pilot.acceptance_rate < s.accept_lo) {
            for (double& v : scale) v *= 0.5;
        } else if (pilot.acceptance_rate > s.accept_hi) {
            for (double& v : scale) v *= 2.0;
        } else {
            return scale;
        }
    }
    return scale;
}

/// Pilot-tuned chain: tuning, burn-in, then `settings.samples` retained draws
/// (no thinning).
inline MhResult mh_sample_tuned(const LogDensity& logdensity, std::vector<double> init,
                                std::vector<double> initial_scale, RngStream& stream, const MhSettings& settings = {}) {
    if (!std::isfinite(logdensity(init)))
        throw InitializationError("mh_sample: log-density is not finite at the initial state");
    const std::vector<double> scale = tune_proposal(logdensity, init, std::move(initial_scale), stream, settings);
    const MhResult burn = mh_sample(logdensity, init, settings.burn_in, scale, stream);
    if (burn.size() > 0) {
        const auto last = burn.row(burn.size() - 1);
        init.assign(last.begin(), last.end());
    }
    return mh_sample(logdensity, init, settings.samples, scale, stream);
}

} // namespace imcond
