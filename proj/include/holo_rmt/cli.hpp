#pragma once

// Command implementations behind the holo-rmt executable. Each command is a
// function of (config, options) that writes its artifacts into the output
// directory and returns a process exit code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "asymptotics.hpp"
#include "config.hpp"
#include "io.hpp"
#include "montecarlo.hpp"

namespace holo_rmt {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_usage = 2, exit_numerical = 3 };

struct CliOptions {
    std::filesystem::path config;
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<double>> snr_db;
    std::optional<std::size_t> samples;
    std::optional<double> tol;
    double threshold_scale = 1.0;
};

inline void apply_overrides(RunConfig& c, const CliOptions& o) {
    if (o.seed) c.mc.seed = *o.seed;
    if (o.snr_db) {
        if (o.snr_db->empty()) throw ConfigError("--snr-db needs at least one value");
        c.snr_db = *o.snr_db;
    }
    if (o.samples) {
        if (*o.samples < 1) throw ConfigError("--samples must be at least 1");
        c.mc.samples = *o.samples;
    }
    if (o.tol) {
        c.solver.tol = *o.tol;
        try {
            c.solver.validate();
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }
    if (!(o.threshold_scale > 0.0)) throw ConfigError("--threshold-scale must be positive");
}

/// Lattices, profile and LoS shared by every SNR point of a run.
struct PreparedRun {
    std::optional<LatticePair> lattices;
    VarianceProfile profile;
    ComplexMatrix los;

    ChannelModel model(const RunConfig& c, double snr_db) const {
        return config_model(c, snr_db, profile, los, lattices ? &*lattices : nullptr);
    }
};

inline PreparedRun prepare_run(const RunConfig& c, std::ostream& err) {
    PreparedRun p;
    if (c.channel.model == ModelKind::holographic) p.lattices = config_lattices(c);
    p.profile = config_profile(c, p.lattices ? &*p.lattices : nullptr);
    if (p.profile.floored_entries() > 0) {
        err << "warning: " << p.profile.floored_entries()
            << " variance-profile entries were raised to the positivity floor (" << kProfileFloor
            << " x max entry)\n";
    }
    p.los = config_los(c, p.profile.rows(), p.profile.cols());
    return p;
}

inline std::string snr_label(double snr_db) { return "snr_" + format_double(snr_db); }

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline Json vector_summary(const RealVector& v) {
    return Json{{"min", v.minCoeff()}, {"max", v.maxCoeff()}, {"mean", v.mean()}};
}

inline Json model_json(const ChannelModel& m) {
    return Json{{"rows", m.rows()},
                {"cols", m.cols()},
                {"profile_kind", to_string(m.profile.kind())},
                {"profile_floored_entries", m.profile.floored_entries()},
                {"los_spectral_norm", m.los_norm},
                {"rician_factor", m.rician_factor},
                {"digest", hex64(model_digest(m))}};
}

inline std::vector<double> rate_grid(const RunConfig& c, const AsymptoticStats& s) {
    return c.auto_rates ? auto_rate_grid(s) : c.rates;
}

inline Json analysis_json(const RunConfig& c, double snr_db, const ChannelModel& m, const FullAnalysis& a) {
    const auto& s = a.stats;
    const auto& sol = s.solution;
    Json outage = Json::array();
    for (double r : rate_grid(c, s)) outage.push_back(Json{{"rate", r}, {"p", outage_probability(s, r)}});
    return Json{{"snr_db", snr_db},
                {"noise_power", noise_power_from_snr_db(snr_db)},
                {"zeta", s.zeta},
                {"solver",
                 {{"iterations", sol.iterations},
                  {"residual", sol.residual},
                  {"self_consistency", self_consistency_residual(m, sol, a.resolvents)}}},
                {"delta_summary", vector_summary(sol.delta)},
                {"delta_tilde_summary", vector_summary(sol.delta_tilde)},
                {"emi_nats", s.emi},
                {"emi_bits", s.emi / std::numbers::ln2},
                {"variance", s.variance},
                {"B_dims", Json::array({a.b.b.rows(), a.b.b.cols()})},
                {"outage", std::move(outage)}};
}

inline int cmd_analyze(const RunConfig& c, const CliOptions& o, std::ostream& out, std::ostream& err) {
    const PreparedRun p = prepare_run(c, err);
    Json results = Json::array();
    Json model_info;
    for (double snr : c.snr_db) {
        const ChannelModel m = p.model(c, snr);
        if (model_info.is_null()) model_info = model_json(m);
        const FullAnalysis a = analyze_model(m, c.solver);
        Json r = analysis_json(c, snr, m, a);
        std::vector<double> rates, probs;
        for (const auto& e : r["outage"]) {
            rates.push_back(e["rate"].get<double>());
            probs.push_back(e["p"].get<double>());
        }
        atomic_write(o.out_dir / ("outage_" + snr_label(snr) + ".csv"), csv_columns("rate,p", rates, probs));
        out << "snr " << snr << " dB: zeta " << a.stats.zeta << ", emi " << a.stats.emi << " nats ("
            << a.stats.emi / std::numbers::ln2 << " bits), variance " << a.stats.variance << ", "
            << a.stats.solution.iterations << " iterations\n";
        results.push_back(std::move(r));
    }
    Json doc{{"schema", 1}, {"command", "analyze"}, {"model", model_info}, {"results", results}};
    atomic_write(o.out_dir / "analysis.json", doc.dump(2) + "\n");
    return exit_ok;
}

// KS distances are flagged below this sample count.
inline constexpr std::size_t kKsMinSamples = 100;

struct McRun {
    FullAnalysis analysis;
    MiSampleSet samples;
    std::vector<double> normalized;
};

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json mc_json(double snr_db, const McRun& r) {
    const auto& s = r.samples;
    const auto& st = r.analysis.stats;
    const double mean = s.mean();
    const auto var = s.variance();
    Json j{{"snr_db", snr_db},
           {"samples", s.size()},
           {"seed", s.seed()},
           {"digest", hex64(s.digest())},
           {"mean", mean},
           {"mean_bits", mean / std::numbers::ln2},
           {"variance", optional_json(var)},
           {"std_error", optional_json(s.standard_error())},
           {"ks", ks_statistic(r.normalized)},
           {"ks_flag", s.size() < kKsMinSamples ? "low-sample" : "ok"},
           {"qq_slope", s.size() >= 2 ? Json(qq_slope(qq_data(r.normalized))) : Json(nullptr)}};
    j["analytic"] = Json{{"emi", st.emi},
                         {"variance", st.variance},
                         {"mean_minus_emi", mean - st.emi},
                         {"mean_relative_error", (mean - st.emi) / st.emi},
                         {"variance_ratio", var ? Json(*var / st.variance) : Json(nullptr)}};
    return j;
}

inline McRun run_mc_point(const RunConfig& c, const ChannelModel& m) {
    McRun r;
    r.analysis = analyze_model(m, c.solver);
    r.samples = run_mc(m, c.mc.samples, c.mc.seed);
    r.normalized = normalized_samples(r.samples, r.analysis.stats);
    return r;
}

inline int cmd_mc(const RunConfig& c, const CliOptions& o, std::ostream& out, std::ostream& err) {
    const PreparedRun p = prepare_run(c, err);
    Json results = Json::array();
    for (double snr : c.snr_db) {
        const ChannelModel m = p.model(c, snr);
        const McRun r = run_mc_point(c, m);
        atomic_write(o.out_dir / ("samples_" + snr_label(snr) + ".csv"), samples_csv(r.samples.samples()));
        const auto qq = qq_data(r.normalized);
        std::vector<double> th, em;
        for (const auto& q : qq) {
            th.push_back(q.theoretical);
            em.push_back(q.empirical);
        }
        atomic_write(o.out_dir / ("qq_" + snr_label(snr) + ".csv"), csv_columns("theoretical,empirical", th, em));
        Json j = mc_json(snr, r);
        if (r.samples.size() < kKsMinSamples) {
            err << "note: " << r.samples.size() << " samples; KS statistic flagged low-sample (needs >= "
                << kKsMinSamples << ")\n";
        }
        out << "snr " << snr << " dB: mc mean " << j["mean"].get<double>() << " (analytic " << r.analysis.stats.emi
            << "), mc variance " << j["variance"] << " (analytic " << r.analysis.stats.variance << "), ks "
            << j["ks"].get<double>() << "\n";
        results.push_back(std::move(j));
    }
    Json doc{{"schema", 1}, {"command", "mc"}, {"results", results}};
    atomic_write(o.out_dir / "mc_summary.json", doc.dump(2) + "\n");
    return exit_ok;
}

// ---------------------------------------------------------------------------
// validate

enum class Verdict { pass, fail, skip };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        case Verdict::skip: return "SKIP";
    }
    return "FAIL";
}

struct CheckRow {
    std::string criterion;
    double measured = 0.0;
    std::string threshold;
    Verdict verdict = Verdict::pass;
};

inline CheckRow check_le(std::string name, double measured, double limit) {
    std::string thr = "<= " + format_double(limit);
    return {std::move(name), measured, std::move(thr), measured <= limit ? Verdict::pass : Verdict::fail};
}

inline CheckRow check_in(std::string name, double measured, double lo, double hi) {
    std::string thr = "[" + format_double(lo) + ", " + format_double(hi) + "]";
    return {std::move(name), measured, std::move(thr),
            measured >= lo && measured <= hi ? Verdict::pass : Verdict::fail};
}

inline CheckRow check_true(std::string name, bool ok, double measured = 0.0, std::string what = "holds") {
    return {std::move(name), measured, std::move(what), ok ? Verdict::pass : Verdict::fail};
}

// Largest dimension at which the nested-system variance is evaluated.
inline constexpr Eigen::Index kOracleMaxDim = 64;

/// Structural invariants of a converged analysis.
inline std::vector<CheckRow> invariant_checks(const ChannelModel& m, const FullAnalysis& a, double scale) {
    std::vector<CheckRow> rows;
    const auto& sol = a.stats.solution;
    const double smax = m.profile.max_entry();
    const double nm = static_cast<double>(m.rows()) / static_cast<double>(m.cols());
    const double slack = 1.0 + 1e-10;
    const bool pos = (sol.delta.array() > 0.0).all() && (sol.delta_tilde.array() > 0.0).all();
    const double bound_ratio = std::max(sol.delta.maxCoeff() / (nm * smax / sol.rho),
                                        sol.delta_tilde.maxCoeff() / (smax / sol.rho));
    rows.push_back(check_true("invariant.delta_positive", pos));
    rows.push_back(check_le("invariant.delta_trace_bound", bound_ratio, slack));
    rows.push_back(check_le("solver.self_consistency", self_consistency_residual(m, sol, a.resolvents), 1e-10 * scale));
    const RealMatrix& b = a.b.b;
    rows.push_back(check_le("invariant.B_min_entry_negated", -b.minCoeff(), 0.0));
    rows.push_back(check_le("invariant.xi_diagonal", a.b.xi.diagonal().cwiseAbs().maxCoeff(), 0.0));
    const LogDet ld = log_det(RealMatrix::Identity(b.rows(), b.cols()) - b);
    rows.push_back(check_true("invariant.det_I_minus_B_in_(0,1]", ld.sign > 0 && ld.log_abs <= 1e-12,
                              ld.sign > 0 ? std::exp(ld.log_abs) : 0.0, "in (0, 1]"));
    rows.push_back(check_true("invariant.variance_positive", a.stats.variance > 0.0, a.stats.variance, "> 0"));
    rows.push_back(check_true("invariant.emi_nonnegative", a.stats.emi >= 0.0, a.stats.emi, ">= 0"));
    return rows;
}

/// Checks of the closed-form statistics against a Monte-Carlo run.
inline std::vector<CheckRow> mc_checks(const RunConfig& c, const McRun& r, double scale) {
    std::vector<CheckRow> rows;
    const auto& st = r.analysis.stats;
    const auto& s = r.samples;
    const double mean = s.mean();
    rows.push_back(check_le("emi.relative_error", std::abs(mean - st.emi) / st.emi, 0.01 * scale));
    if (const auto se = s.standard_error(); se && *se > 0.0) {
        rows.push_back(check_le("emi.standard_errors", std::abs(mean - st.emi) / *se, 4.0 * scale));
    } else {
        rows.push_back({"emi.standard_errors", 0.0, "needs >= 2 samples", Verdict::skip});
    }
    if (const auto var = s.variance()) {
        rows.push_back(check_le("variance.relative_error", std::abs(*var - st.variance) / st.variance, 0.05 * scale));
        // (S - 1) s^2 / V ~ chi^2_{S-1} for Gaussian samples; two-sided 1% band.
        const double dof = static_cast<double>(s.size() - 1);
        boost::math::chi_squared chi(dof);
        const double lo = boost::math::quantile(chi, 0.005) / dof;
        const double hi = boost::math::quantile(chi, 0.995) / dof;
        rows.push_back(check_in("variance.chi2_band", *var / st.variance, 1.0 - (1.0 - lo) * scale,
                                1.0 + (hi - 1.0) * scale));
        rows.push_back(check_le("gaussianity.qq_slope_deviation", std::abs(qq_slope(qq_data(r.normalized)) - 1.0),
                                0.03 * scale));
    } else {
        rows.push_back({"variance.relative_error", 0.0, "needs >= 2 samples", Verdict::skip});
    }
    const double ks = ks_statistic(r.normalized);
    if (s.size() >= kKsMinSamples) {
        rows.push_back(check_le("gaussianity.ks", ks, 1.95 / std::sqrt(static_cast<double>(s.size())) * scale));
    } else {
        rows.push_back({"gaussianity.ks", ks, "low-sample (< 100)", Verdict::skip});
    }
    rows.push_back(check_le("outage.sup_deviation", outage_sup_deviation(s, st, rate_grid(c, st)), 0.02 * scale));
    return rows;
}

inline void print_table(std::ostream& out, const std::string& heading, const std::vector<CheckRow>& rows) {
    out << heading << "\n";
    out << std::left << std::setw(40) << "criterion" << std::setw(24) << "measured" << std::setw(30) << "threshold"
        << "verdict\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(40) << r.criterion << std::setw(24) << format_double(r.measured)
            << std::setw(30) << r.threshold << to_string(r.verdict) << "\n";
    }
}

inline Json rows_json(const std::vector<CheckRow>& rows) {
    Json a = Json::array();
    for (const auto& r : rows) {
        a.push_back(Json{{"criterion", r.criterion},
                         {"measured", r.measured},
                         {"threshold", r.threshold},
                         {"verdict", to_string(r.verdict)}});
    }
    return a;
}

inline int cmd_validate(const RunConfig& c, const CliOptions& o, std::ostream& out, std::ostream& err) {
    const double scale = o.threshold_scale;
    Json doc{{"schema", 1}, {"command", "validate"}, {"threshold_scale", scale}};
    PreparedRun p;
    try {
        p = prepare_run(c, err);
    } catch (const DomainError& e) {
        const std::vector<CheckRow> rows{
            {"preflight.profile_positive", 0.0, "all entries > 0 and finite", Verdict::fail}};
        print_table(out, "preflight", rows);
        err << "preflight: " << e.what() << "\n";
        doc["preflight"] = rows_json(rows);
        doc["error"] = e.what();
        doc["passed"] = false;
        atomic_write(o.out_dir / "validate.json", doc.dump(2) + "\n");
        return exit_validation;
    }
    bool all_pass = true;
    Json points = Json::array();
    for (double snr : c.snr_db) {
        const ChannelModel m = p.model(c, snr);
        std::vector<CheckRow> rows{check_true("preflight.profile_positive", m.profile.min_entry() > 0.0,
                                              m.profile.min_entry(), "> 0")};
        const McRun r = run_mc_point(c, m);
        rows.push_back(check_le("solver.residual", r.analysis.stats.solution.residual, c.solver.tol));
        for (auto& row : invariant_checks(m, r.analysis, scale)) rows.push_back(std::move(row));
        for (auto& row : mc_checks(c, r, scale)) rows.push_back(std::move(row));
        if (m.cols() <= kOracleMaxDim) {
            const double oracle = variance_linear_system_oracle(m, r.analysis.stats.solution, r.analysis.resolvents);
            const double v = r.analysis.stats.variance;
            rows.push_back(check_le("oracle.relative_gap", std::abs(oracle - v) / v, 0.05 * scale));
        } else {
            rows.push_back({"oracle.relative_gap", 0.0, "M > 64", Verdict::skip});
        }
        std::ostringstream head;
        head << "snr " << snr << " dB (N = " << m.rows() << ", M = " << m.cols() << ", S = " << r.samples.size()
             << ")";
        print_table(out, head.str(), rows);
        out << "\n";
        for (const auto& row : rows) all_pass = all_pass && row.verdict != Verdict::fail;
        points.push_back(Json{{"snr_db", snr}, {"checks", rows_json(rows)}});
    }
    doc["points"] = std::move(points);
    doc["passed"] = all_pass;
    atomic_write(o.out_dir / "validate.json", doc.dump(2) + "\n");
    out << (all_pass ? "all criteria passed" : "one or more criteria failed") << "\n";
    return all_pass ? exit_ok : exit_validation;
}

inline int cmd_profile(const RunConfig& c, const CliOptions& o, std::ostream& out, std::ostream& err) {
    const PreparedRun p = prepare_run(c, err);
    write_matrix(o.out_dir / "profile.json", p.profile.values());
    write_matrix(o.out_dir / "los.json", p.los);
    if (p.lattices) {
        atomic_write(o.out_dir / "lattice_rx.json", lattice_to_json(p.lattices->rx).dump(1) + "\n");
        atomic_write(o.out_dir / "lattice_tx.json", lattice_to_json(p.lattices->tx).dump(1) + "\n");
        const auto& g = c.geometry;
        const auto full_rx = enumerate_lattice(g.rx_aperture_x, g.rx_aperture_y, g.wavelength);
        const auto full_tx = enumerate_lattice(g.tx_aperture_x, g.tx_aperture_y, g.wavelength);
        out << "n_R = " << full_rx.size() << " (ceil(pi Lx Ly / lambda^2) = " << full_rx.area_estimate() << ")";
        if (p.lattices->rx.size() != full_rx.size()) out << ", truncated to " << p.lattices->rx.size();
        out << "\n";
        out << "n_S = " << full_tx.size() << " (ceil(pi Lx Ly / lambda^2) = " << full_tx.area_estimate() << ")";
        if (p.lattices->tx.size() != full_tx.size()) out << ", truncated to " << p.lattices->tx.size();
        out << "\n";
        out << "N_R = " << g.rx_antennas() << ", N_S = " << g.tx_antennas() << ", G = " << antenna_gain(g).rx
            << "\n";
    }
    out << "profile " << p.profile.rows() << "x" << p.profile.cols() << " (" << to_string(p.profile.kind())
        << "), total " << p.profile.total() << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------

/// Full command-line entry point; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Asymptotic mutual-information statistics of non-centered, non-separable MIMO channels"};
    app.require_subcommand(1);
    CliOptions opt;
    std::optional<std::uint64_t> seed;
    std::vector<double> snr;
    std::optional<std::size_t> samples;
    std::optional<double> tol;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "run configuration (JSON)")->required();
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--snr-db", snr, "SNR values in dB, overriding the config")->delimiter(',');
        sub->add_option("--tol", tol, "fixed-point tolerance");
    };
    auto add_mc = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Monte-Carlo seed");
        sub->add_option("--samples", samples, "Monte-Carlo sample count");
    };
    CLI::App* analyze = app.add_subcommand("analyze", "deterministic-equivalent mean, variance and outage curve");
    CLI::App* mc = app.add_subcommand("mc", "Monte-Carlo samples and empirical statistics");
    CLI::App* validate = app.add_subcommand("validate", "compare closed forms with Monte Carlo and the oracle");
    CLI::App* profile = app.add_subcommand("profile", "write the variance profile and wavenumber lattices");
    for (CLI::App* s : {analyze, mc, validate, profile}) add_common(s);
    add_mc(mc);
    add_mc(validate);
    validate->add_option("--threshold-scale", opt.threshold_scale,
                         "multiply every acceptance tolerance (values below 1 tighten)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
    }
    opt.seed = seed;
    if (!snr.empty()) opt.snr_db = snr;
    opt.samples = samples;
    opt.tol = tol;

    try {
        RunConfig cfg = load_config(opt.config);
        apply_overrides(cfg, opt);
        if (analyze->parsed()) return cmd_analyze(cfg, opt, out, err);
        if (mc->parsed()) return cmd_mc(cfg, opt, out, err);
        if (validate->parsed()) return cmd_validate(cfg, opt, out, err);
        return cmd_profile(cfg, opt, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << "\n";
        return exit_usage;
    } catch (const ConvergenceError& e) {
        err << "numerical failure: " << e.what() << "\n";
        const auto& t = e.residual_trace;
        const std::size_t from = t.size() > 10 ? t.size() - 10 : 0;
        err << "last updates:";
        for (std::size_t i = from; i < t.size(); ++i) err << " " << t[i];
        err << "\n";
        return exit_numerical;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
}

}  // namespace holo_rmt
