#pragma once

// Command-line front end. Every flag can also come from a JSON config file
// (--config) whose keys are the long flag names; flags given on the command
// line win.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imcond/csv.hpp"
#include "imcond/error.hpp"
#include "imcond/models/bvn.hpp"
#include "imcond/models/gamma2.hpp"
#include "imcond/models/nile.hpp"
#include "imcond/models/normal_mean.hpp"
#include "imcond/models/student_t.hpp"
#include "imcond/models/var_comp.hpp"
#include "imcond/validate.hpp"

namespace imcond::cli {

inline constexpr const char* version = "0.1.0";

/// Bad flags, unknown models, unreadable inputs: exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::string model;
    std::string data;
    std::string grid;
    std::string grid2;
    std::string out;
    std::string method = "cim";
    std::string variant = "conditional";
    std::optional<double> alpha;
    double nu = 5.0;
    std::size_t n = 10;
    std::size_t reps = 5000;
    std::size_t mc_draws = 10000;
    std::uint64_t seed = 1;
    std::vector<double> truth;
    std::vector<std::size_t> sizes{4, 4, 4, 8, 48};
    double theta_a = 1.0;
    double theta_e = 1.0;
    double t = 0.0;
    double h = 0.0;
    bool naive = false;
};

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const auto& v = it.value();
        try {
            if (k == "command") c.command = v.get<std::string>();
            else if (k == "model") c.model = v.get<std::string>();
            else if (k == "data") c.data = v.get<std::string>();
            else if (k == "grid") c.grid = v.get<std::string>();
            else if (k == "grid2") c.grid2 = v.get<std::string>();
            else if (k == "out") c.out = v.get<std::string>();
            else if (k == "method") c.method = v.get<std::string>();
            else if (k == "variant") c.variant = v.get<std::string>();
            else if (k == "alpha") c.alpha = v.get<double>();
            else if (k == "nu") c.nu = v.get<double>();
            else if (k == "n") c.n = v.get<std::size_t>();
            else if (k == "reps") c.reps = v.get<std::size_t>();
            else if (k == "mc-draws") c.mc_draws = v.get<std::size_t>();
            else if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "truth") c.truth = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
            else if (k == "sizes") c.sizes = v.get<std::vector<std::size_t>>();
            else if (k == "theta-a") c.theta_a = v.get<double>();
            else if (k == "theta-e") c.theta_e = v.get<double>();
            else if (k == "t-obs") c.t = v.get<double>();
            else if (k == "h-obs") c.h = v.get<double>();
            else if (k == "naive") c.naive = v.get<bool>();
            else throw UsageError("config: unknown key '" + k + "'");
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config: bad value for '" + k + "': " + e.what());
        }
    }
}

/// "lo:hi:count", evenly spaced, endpoints included.
inline std::vector<double> parse_grid(const std::string& spec) {
    const auto parts = csv::split(spec, ':');
    if (parts.size() != 3) throw UsageError("grid must look like lo:hi:count, got '" + spec + "'");
    double lo, hi, cnt;
    try {
        lo = csv::parse_double(parts[0]);
        hi = csv::parse_double(parts[1]);
        cnt = csv::parse_double(parts[2]);
    } catch (const DomainError&) {
        throw UsageError("grid must look like lo:hi:count, got '" + spec + "'");
    }
    if (!(cnt >= 2.0) || cnt != std::floor(cnt)) throw UsageError("grid count must be an integer >= 2");
    if (!(hi > lo)) throw UsageError("grid needs lo < hi");
    const auto k = static_cast<std::size_t>(cnt);
    std::vector<double> g(k);
    for (std::size_t i = 0; i < k; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);
    return g;
}

inline Method parse_method(const std::string& s) {
    if (s == "cim") return Method::cim;
    if (s == "lcim") return Method::lcim;
    if (s == "mle") return Method::mle;
    if (s == "bayes-flat") return Method::bayes_flat;
    if (s == "bayes-jeffreys") return Method::bayes_jeffreys;
    throw UsageError("unknown method '" + s + "'");
}

inline ModelId parse_model(const std::string& s) {
    if (s == "normal-mean") return ModelId::normal_mean;
    if (s == "t") return ModelId::student_t;
    if (s == "nile") return ModelId::nile;
    if (s == "gamma2") return ModelId::gamma2;
    if (s == "bvn") return ModelId::bvn_corr;
    if (s == "vc") return ModelId::var_comp;
    throw UsageError(s.empty() ? "--model is required" : "unknown model '" + s + "'");
}

inline models::NormalMeanVariant parse_variant(const std::string& s) {
    if (s == "conditional") return models::NormalMeanVariant::conditional_1d;
    if (s == "baseline") return models::NormalMeanVariant::baseline_2d;
    throw UsageError("unknown variant '" + s + "' (conditional or baseline)");
}

inline csv::Table load(const RunConfig& c) {
    if (c.data.empty()) throw UsageError("--data is required for model " + c.model);
    try {
        return csv::read_file(c.data);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

inline std::vector<double> column(const csv::Table& t, const std::string& name) {
    try {
        return t.numbers(name);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw UsageError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

inline std::string comment(const RunConfig& c) { return std::string("imcond ") + version + " seed=" + std::to_string(c.seed); }

inline void cmd_plaus(const RunConfig& c) {
    const ModelId m = parse_model(c.model);
    if (c.grid.empty()) throw UsageError("--grid lo:hi:count is required");
    const auto grid = parse_grid(c.grid);
    std::function<double(double)> pl;
    switch (m) {
    case ModelId::student_t: {
        auto im = std::make_shared<ConditionalIM>(models::student_t_model(column(load(c), "x"), c.nu));
        pl = [im](double th) { return im->cpl_singleton(th); };
        break;
    }
    case ModelId::nile: {
        models::NileStats s;
        if (!c.data.empty()) {
            const auto t = load(c);
            s = models::nile_stats(column(t, "x1"), column(t, "x2"));
        } else if (c.t > 0.0 && c.h > 0.0) {
            s = models::nile_stats_from(c.t, c.h, c.n);
        } else {
            throw UsageError("nile needs --data or both --t-obs and --h-obs");
        }
        auto im = std::make_shared<ConditionalIM>(models::nile_model(s, c.naive));
        pl = [im](double th) { return im->cpl_singleton(th); };
        break;
    }
    case ModelId::bvn_corr: {
        const auto t = load(c);
        const auto a = column(t, "x1"), b = column(t, "x2");
        std::vector<std::array<double, 2>> pairs(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) pairs[i] = {a[i], b[i]};
        auto im = std::make_shared<ConditionalIM>(models::bvn_model(models::bvn_reduce(pairs)));
        pl = [im](double th) { return im->cpl_singleton(th); };
        break;
    }
    case ModelId::normal_mean: {
        const auto t = load(c);
        const auto y1 = column(t, "y1"), y2 = column(t, "y2");
        if (y1.empty()) throw UsageError("normal-mean data has no rows");
        const auto v = parse_variant(c.variant);
        pl = [a = y1[0], b = y2[0], v](double th) { return models::normalmean_pl(a, b, th, v); };
        break;
    }
    default: throw UsageError("plaus supports t, nile, bvn and normal-mean; use region for " + c.model);
    }
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = pl(grid[i]);
    Output o(c.out);
    csv::Writer w(o.stream(), comment(c), {"theta", "cpl"});
    for (std::size_t i = 0; i < grid.size(); ++i) w.row({grid[i], vals[i]});
}

inline void write_region(const RunConfig& c, const std::vector<std::array<double, 4>>& rows) {
    Output o(c.out);
    csv::Writer w(o.stream(), comment(c), {"theta1", "theta2", "cpl", "in_region"});
    for (const auto& r : rows) w.row({r[0], r[1], r[2], r[3]});
}

inline void cmd_region(const RunConfig& c) {
    const ModelId m = parse_model(c.model);
    if (c.grid.empty() || c.grid2.empty()) throw UsageError("--grid and --grid2 are required");
    const auto g1 = parse_grid(c.grid), g2 = parse_grid(c.grid2);
    const double alpha = c.alpha.value_or(0.1);
    std::vector<std::array<double, 4>> rows;
    if (m == ModelId::gamma2) {
        const auto s = models::gamma2_stats(column(load(c), "x"));
        for (const auto& p : models::gamma2_region(s, g1, g2, alpha, c.mc_draws, c.seed))
            rows.push_back({p.theta1, p.theta2, p.cpl, p.in_region ? 1.0 : 0.0});
    } else if (m == ModelId::var_comp) {
        const auto t = load(c);
        std::vector<std::string> groups;
        try {
            groups = t.strings("group");
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
        const auto [sizes, y] = models::vc_group(groups, column(t, "y"));
        const auto d = models::vc_design(sizes);
        for (const auto& p : models::vc_region(d, models::vc_sufficient(y, d), g1, g2, alpha, c.seed))
            rows.push_back({p.log_theta_a, p.log_theta_e, p.cpl, p.in_region ? 1.0 : 0.0});
    } else {
        throw UsageError("region supports gamma2 and vc; use plaus for " + c.model);
    }
    write_region(c, rows);
}

inline void cmd_coverage(const RunConfig& c) {
    ExperimentSpec spec;
    spec.model = parse_model(c.model);
    spec.method = parse_method(c.method);
    if (!supports(spec.model, spec.method))
        throw UsageError("method " + c.method + " is not available for model " + c.model);
    spec.n = c.n;
    spec.nu = c.nu;
    spec.reps = c.reps;
    spec.alpha = c.alpha.value_or(0.05);
    spec.seed = c.seed;
    if (!c.truth.empty()) spec.truth = c.truth;
    else if (spec.model == ModelId::nile) spec.truth = {1.0};
    else if (spec.model == ModelId::bvn_corr) spec.truth = {0.0, 0.3, 0.6, 0.9};
    else spec.truth = {0.0};
    if (spec.reps < 100) throw UsageError("--reps must be at least 100");
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
    const ExperimentResult r = run_coverage(spec);
    Output o(c.out);
    csv::Writer w(o.stream(), comment(c), {"coverage", "mean_length", "mc_se"});
    w.row({r.coverage, r.mean_length, r.mc_se});
}

inline void cmd_qq(const RunConfig& c) {
    QQSpec spec;
    spec.model = parse_model(c.model);
    spec.variant = parse_variant(c.variant);
    spec.n = c.n;
    spec.nu = c.nu;
    spec.reps = c.reps;
    spec.seed = c.seed;
    if (spec.model == ModelId::nile) spec.theta = 1.0;
    if (!c.truth.empty()) spec.theta = c.truth.front();
    if (spec.model == ModelId::gamma2 || spec.model == ModelId::var_comp)
        throw UsageError("qq supports normal-mean, t, nile and bvn");
    const QQResult r = qq_uniformity(spec);
    Output o(c.out);
    csv::Writer w(o.stream(), comment(c), {"p", "empirical_quantile"});
    const double n = static_cast<double>(r.sorted_pl.size());
    for (std::size_t i = 0; i < r.sorted_pl.size(); ++i) w.row({(static_cast<double>(i) + 0.5) / n, r.sorted_pl[i]});
    std::cerr << "ks=" << csv::format(r.ks) << " ks_crit_1pct=" << csv::format(ks_critical(r.sorted_pl.size()))
              << " max_ecdf_excess=" << csv::format(r.max_excess) << '\n';
}

/// Stream index for the simulated dataset, apart from the grid substreams.
inline constexpr std::uint64_t vc_data_stream = 0xFFFF'FFFF'0000'0000ULL;

inline void cmd_vc_demo(const RunConfig& c) {
    const auto d = models::vc_design(c.sizes);
    RngStream ds(c.seed, vc_data_stream);
    const auto y = models::vc_simulate(d, c.theta_a, c.theta_e, 0.0, ds);
    const auto s = models::vc_sufficient(y, d);
    const auto g1 = parse_grid(c.grid.empty() ? "-3:2.85:40" : c.grid);
    const auto g2 = parse_grid(c.grid2.empty() ? "-3:2.85:40" : c.grid2);
    const double alpha = c.alpha.value_or(0.1);
    std::vector<std::array<double, 4>> rows;
    for (const auto& p : models::vc_region(d, s, g1, g2, alpha, c.seed))
        rows.push_back({p.log_theta_a, p.log_theta_e, p.cpl, p.in_region ? 1.0 : 0.0});
    write_region(c, rows);
    RngStream ts(c.seed, vc_data_stream + 1);
    const double at_truth = models::vc_local(d, s, Eigen::Vector2d(c.theta_a, c.theta_e), ts).cpl;
    std::cerr << "L=" << d.L() << " cpl_at_truth=" << csv::format(at_truth)
              << " truth_in_region=" << (at_truth > alpha ? "yes" : "no") << '\n';
}

/// Returns the process exit code.
inline int run(int argc, const char* const* argv) {
    RunConfig cfg;
    try {
        // The config file is read first so that command-line flags override it.
        for (int i = 1; i < argc; ++i) {
            const std::string a = argv[i];
            std::string path;
            if (a == "--config" && i + 1 < argc) path = argv[i + 1];
            else if (a.rfind("--config=", 0) == 0) path = a.substr(9);
            if (path.empty()) continue;
            std::ifstream in(path);
            if (!in) throw UsageError("cannot read config '" + path + "'");
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw UsageError(std::string("config: ") + e.what());
            }
            from_json(j, cfg);
        }
    } catch (const UsageError& e) {
        std::cerr << "imcond: " << e.what() << '\n';
        return 2;
    }

    CLI::App app{"Conditional and local-conditional inferential models"};
    app.set_version_flag("--version", version);
    std::string config_path;
    double alpha = 0.0;
    app.add_option("--config", config_path, "JSON file with default values for any flag");
    app.add_option("--model", cfg.model, "normal-mean, t, nile, gamma2, bvn or vc");
    app.add_option("--data", cfg.data, "input CSV");
    app.add_option("--grid", cfg.grid, "lo:hi:count for theta (theta1 in regions)");
    app.add_option("--grid2", cfg.grid2, "lo:hi:count for theta2 in regions");
    app.add_option("--out", cfg.out, "output CSV (stdout if omitted)");
    app.add_option("--method", cfg.method, "cim, lcim, mle, bayes-flat or bayes-jeffreys")->capture_default_str();
    app.add_option("--variant", cfg.variant, "normal-mean variant: conditional or baseline")->capture_default_str();
    auto* alpha_opt = app.add_option("--alpha", alpha, "level; regions are {theta : pl > alpha}");
    app.add_option("--nu", cfg.nu, "Student-t degrees of freedom")->capture_default_str();
    app.add_option("--n", cfg.n, "sample size for simulation")->capture_default_str();
    app.add_option("--reps", cfg.reps, "Monte Carlo replications")->capture_default_str();
    app.add_option("--mc-draws", cfg.mc_draws, "gamma2 draws for the T2 distribution")->capture_default_str();
    app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    app.add_option("--truth", cfg.truth, "true parameter(s); several are sampled uniformly per rep")->delimiter(',');
    app.add_option("--sizes", cfg.sizes, "vc-demo group sizes")->delimiter(',');
    app.add_option("--theta-a", cfg.theta_a, "vc-demo between-group variance")->capture_default_str();
    app.add_option("--theta-e", cfg.theta_e, "vc-demo within-group variance")->capture_default_str();
    app.add_option("--t-obs", cfg.t, "nile: T(x) when no data are given");
    app.add_option("--h-obs", cfg.h, "nile: h when no data are given");
    app.add_flag("--naive", cfg.naive, "nile: use the marginal law of V_T instead of the conditional one");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"plaus", "plausibility curve on a grid"},
        {"region", "plausibility region on a 2-D grid"},
        {"coverage", "coverage and mean length of an interval procedure"},
        {"qq", "sorted plausibility values at the true parameter"},
        {"vc-demo", "simulate a variance components data set and its region"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (alpha_opt->count() > 0) cfg.alpha = alpha;
    for (const auto& [name, help] : commands)
        if (app.got_subcommand(name)) cfg.command = name;

    try {
        if (cfg.command == "plaus") cmd_plaus(cfg);
        else if (cfg.command == "region") cmd_region(cfg);
        else if (cfg.command == "coverage") cmd_coverage(cfg);
        else if (cfg.command == "qq") cmd_qq(cfg);
        else if (cfg.command == "vc-demo") cmd_vc_demo(cfg);
        else throw UsageError(cfg.command.empty() ? "no command given\n" + app.help() : "unknown command '" + cfg.command + "'");
    } catch (const UsageError& e) {
        std::cerr << "imcond: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "imcond: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace imcond::cli
