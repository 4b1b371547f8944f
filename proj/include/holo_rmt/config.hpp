#pragma once

// Run configuration: a JSON document with "schema": 1. Every block is
// optional and defaults to the 30 GHz holographic setup (10-wavelength square
// apertures at lambda/4 spacing, tau = 0.6, S_a = lambda^2 / 64, k = 10,
// Gaussian kernel a = 1, SNR 10 dB). Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "channel.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "solver.hpp"
#include "types.hpp"

namespace holo_rmt {

enum class ModelKind { holographic, weichselberger };
enum class ProfileSource { separable, nonseparable, uniform, file };
enum class LosSource { none, single_coupling, low_rank, file };

struct LosConfig {
    LosSource kind = LosSource::low_rank;
    Eigen::Index rank = 4;
    std::uint64_t seed = 7;
    std::filesystem::path path;
};

struct ChannelConfig {
    ModelKind model = ModelKind::holographic;
    ProfileSource profile = ProfileSource::nonseparable;
    double kernel_a = 1.0;
    double rician_k = 10.0;
    double profile_scale = 1.0;
    bool match_separable_power = false;
    std::filesystem::path profile_file;
    Eigen::Index rx_dim = 0;  // uniform Weichselberger profile only
    Eigen::Index tx_dim = 0;
    LosConfig los;
};

struct McConfig {
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
};

struct RunConfig {
    ArrayGeometry geometry;
    std::optional<std::size_t> max_modes;
    ChannelConfig channel;
    std::vector<double> snr_db{10.0};
    bool auto_rates = true;
    std::vector<double> rates;
    McConfig mc;
    SolverOptions solver;
    std::filesystem::path base_dir;  // for relative file paths

    std::filesystem::path resolve(const std::filesystem::path& p) const {
        return p.is_absolute() ? p : base_dir / p;
    }
};

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

inline double get_number(const Json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj[key];
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

inline std::int64_t get_integer(const Json& obj, const char* key, std::int64_t fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj[key];
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
    return v.get<std::int64_t>();
}

inline std::string get_string(const Json& obj, const char* key, const std::string& fallback,
                              const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj[key];
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

inline void get_pair(const Json& obj, const char* key, double& x, double& y, const std::string& where) {
    if (!obj.contains(key)) return;
    const Json& v = obj[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(where + "." + key + " must be a [x, y] pair of numbers");
    }
    x = v[0].get<double>();
    y = v[1].get<double>();
}

inline std::vector<double> get_number_list(const Json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

}  // namespace detail

inline RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {}) {
    using namespace detail;
    check_keys(j, {"schema", "geometry", "channel", "snr_db", "rates", "mc", "solver"}, "config");
    if (!j.contains("schema") || !j["schema"].is_number_integer() || j["schema"].get<int>() != 1) {
        throw ConfigError("config: 'schema' must be 1");
    }
    RunConfig c;
    c.base_dir = base_dir;

    if (j.contains("geometry")) {
        const Json& g = j["geometry"];
        const std::string w = "geometry";
        check_keys(g, {"wavelength", "tx_aperture", "rx_aperture", "tx_spacing", "rx_spacing", "antenna_area",
                       "efficiency", "max_modes"},
                   w);
        auto& geo = c.geometry;
        geo.wavelength = get_number(g, "wavelength", geo.wavelength, w);
        // Apertures, spacing and area default to wavelength multiples.
        const double lam = geo.wavelength;
        geo.tx_aperture_x = geo.tx_aperture_y = geo.rx_aperture_x = geo.rx_aperture_y = 10.0 * lam;
        geo.tx_spacing = geo.rx_spacing = lam / 4.0;
        geo.antenna_area = lam * lam / 64.0;
        get_pair(g, "tx_aperture", geo.tx_aperture_x, geo.tx_aperture_y, w);
        get_pair(g, "rx_aperture", geo.rx_aperture_x, geo.rx_aperture_y, w);
        geo.tx_spacing = get_number(g, "tx_spacing", geo.tx_spacing, w);
        geo.rx_spacing = get_number(g, "rx_spacing", geo.rx_spacing, w);
        geo.antenna_area = get_number(g, "antenna_area", geo.antenna_area, w);
        geo.efficiency = get_number(g, "efficiency", geo.efficiency, w);
        if (g.contains("max_modes")) {
            const auto n = get_integer(g, "max_modes", 0, w);
            if (n < 1) throw ConfigError("geometry.max_modes must be at least 1");
            c.max_modes = static_cast<std::size_t>(n);
        }
        try {
            geo.validate();
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }

    if (j.contains("channel")) {
        const Json& ch = j["channel"];
        const std::string w = "channel";
        check_keys(ch, {"model", "profile", "kernel_a", "rician_k", "profile_scale", "match_separable_power",
                        "profile_file", "dimensions", "los"},
                   w);
        auto& cc = c.channel;
        const std::string model = get_string(ch, "model", "holographic", w);
        if (model == "holographic") cc.model = ModelKind::holographic;
        else if (model == "weichselberger") cc.model = ModelKind::weichselberger;
        else throw ConfigError("channel.model must be 'holographic' or 'weichselberger'");

        const std::string prof =
            get_string(ch, "profile", cc.model == ModelKind::holographic ? "nonseparable" : "file", w);
        if (prof == "separable") cc.profile = ProfileSource::separable;
        else if (prof == "nonseparable") cc.profile = ProfileSource::nonseparable;
        else if (prof == "uniform") cc.profile = ProfileSource::uniform;
        else if (prof == "file") cc.profile = ProfileSource::file;
        else throw ConfigError("channel.profile must be separable, nonseparable, uniform or file");

        cc.kernel_a = get_number(ch, "kernel_a", cc.kernel_a, w);
        if (!(cc.kernel_a > 0.0)) throw ConfigError("channel.kernel_a must be positive");
        cc.rician_k = get_number(ch, "rician_k", cc.rician_k, w);
        if (!(cc.rician_k >= 0.0)) throw ConfigError("channel.rician_k must be non-negative");
        cc.profile_scale = get_number(ch, "profile_scale", cc.profile_scale, w);
        if (!(cc.profile_scale > 0.0)) throw ConfigError("channel.profile_scale must be positive");
        if (ch.contains("match_separable_power")) {
            if (!ch["match_separable_power"].is_boolean()) {
                throw ConfigError("channel.match_separable_power must be a boolean");
            }
            cc.match_separable_power = ch["match_separable_power"].get<bool>();
        }
        cc.profile_file = get_string(ch, "profile_file", "", w);
        if (cc.profile == ProfileSource::file && cc.profile_file.empty()) {
            throw ConfigError("channel.profile_file is required when channel.profile is 'file'");
        }
        if (ch.contains("dimensions")) {
            const Json& d = ch["dimensions"];
            check_keys(d, {"rx", "tx"}, "channel.dimensions");
            cc.rx_dim = get_integer(d, "rx", 0, "channel.dimensions");
            cc.tx_dim = get_integer(d, "tx", 0, "channel.dimensions");
            if (cc.rx_dim < 1 || cc.tx_dim < 1) throw ConfigError("channel.dimensions entries must be at least 1");
        }
        if (cc.model == ModelKind::weichselberger) {
            if (cc.profile == ProfileSource::separable || cc.profile == ProfileSource::nonseparable) {
                throw ConfigError("weichselberger model takes its coupling matrix from 'file' or 'uniform'");
            }
            if (ch.contains("rician_k")) throw ConfigError("channel.rician_k applies to the holographic model only");
            if (cc.profile == ProfileSource::uniform && cc.rx_dim == 0) {
                throw ConfigError("channel.dimensions is required for a uniform weichselberger profile");
            }
        } else if (cc.profile == ProfileSource::uniform) {
            throw ConfigError("holographic model takes profile separable, nonseparable or file");
        }
        if (ch.contains("los")) {
            const Json& l = ch["los"];
            const std::string lw = "channel.los";
            check_keys(l, {"kind", "rank", "seed", "path"}, lw);
            const std::string kind = get_string(l, "kind", "lowrank", lw);
            if (kind == "none") cc.los.kind = LosSource::none;
            else if (kind == "single") cc.los.kind = LosSource::single_coupling;
            else if (kind == "lowrank") cc.los.kind = LosSource::low_rank;
            else if (kind == "file") cc.los.kind = LosSource::file;
            else throw ConfigError("channel.los.kind must be none, single, lowrank or file");
            const auto rank = get_integer(l, "rank", cc.los.rank, lw);
            if (rank < 1) throw ConfigError("channel.los.rank must be at least 1");
            cc.los.rank = rank;
            const auto seed = get_integer(l, "seed", static_cast<std::int64_t>(cc.los.seed), lw);
            if (seed < 0) throw ConfigError("channel.los.seed must be non-negative");
            cc.los.seed = static_cast<std::uint64_t>(seed);
            cc.los.path = get_string(l, "path", "", lw);
            if (cc.los.kind == LosSource::file && cc.los.path.empty()) {
                throw ConfigError("channel.los.path is required when channel.los.kind is 'file'");
            }
        } else if (cc.model == ModelKind::weichselberger) {
            cc.los.kind = LosSource::none;
        }
    }

    if (j.contains("snr_db")) {
        c.snr_db = get_number_list(j["snr_db"], "snr_db");
        if (c.snr_db.empty()) throw ConfigError("snr_db must not be empty");
    }

    if (j.contains("rates")) {
        const Json& r = j["rates"];
        if (r.is_string()) {
            if (r.get<std::string>() != "auto") throw ConfigError("rates must be \"auto\" or a list of numbers");
            c.auto_rates = true;
        } else {
            c.rates = get_number_list(r, "rates");
            c.auto_rates = c.rates.empty();
        }
    }

    if (j.contains("mc")) {
        const Json& m = j["mc"];
        check_keys(m, {"samples", "seed"}, "mc");
        const auto s = get_integer(m, "samples", static_cast<std::int64_t>(c.mc.samples), "mc");
        if (s < 1) throw ConfigError("mc.samples must be at least 1");
        c.mc.samples = static_cast<std::size_t>(s);
        if (m.contains("seed")) {
            if (!m["seed"].is_number_unsigned()) throw ConfigError("mc.seed must be a non-negative integer");
            c.mc.seed = m["seed"].get<std::uint64_t>();
        }
    }

    if (j.contains("solver")) {
        const Json& s = j["solver"];
        check_keys(s, {"tol", "max_iter", "damping"}, "solver");
        c.solver.tol = get_number(s, "tol", c.solver.tol, "solver");
        c.solver.max_iter = static_cast<int>(get_integer(s, "max_iter", c.solver.max_iter, "solver"));
        c.solver.damping = get_number(s, "damping", c.solver.damping, "solver");
        try {
            c.solver.validate();
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(parse_json(read_text(path), path.string()), path.parent_path());
}

/// Lattice pair for the configured geometry, truncated to max_modes if set.
struct LatticePair {
    WavenumberLattice rx;
    WavenumberLattice tx;
};

inline LatticePair config_lattices(const RunConfig& c) {
    const auto& g = c.geometry;
    LatticePair p{enumerate_lattice(g.rx_aperture_x, g.rx_aperture_y, g.wavelength),
                  enumerate_lattice(g.tx_aperture_x, g.tx_aperture_y, g.wavelength)};
    if (c.max_modes) {
        if (*c.max_modes < p.rx.size()) p.rx = truncate_lattice(p.rx, *c.max_modes);
        if (*c.max_modes < p.tx.size()) p.tx = truncate_lattice(p.tx, *c.max_modes);
    }
    return p;
}

/// The variance profile described by the configuration.
inline VarianceProfile config_profile(const RunConfig& c, const LatticePair* lattices = nullptr) {
    const auto& cc = c.channel;
    if (cc.profile == ProfileSource::file) {
        RealMatrix m = read_real_matrix(c.resolve(cc.profile_file));
        return VarianceProfile::from_matrix(cc.profile_scale * m).with_detected_kind();
    }
    if (cc.profile == ProfileSource::uniform) {
        return VarianceProfile::separable(RealVector::Constant(cc.rx_dim, cc.profile_scale),
                                          RealVector::Ones(cc.tx_dim));
    }
    LatticePair own;
    if (!lattices) {
        own = config_lattices(c);
        lattices = &own;
    }
    VarianceProfile sep = profile_separable_isotropic(lattices->rx, lattices->tx, cc.profile_scale);
    if (cc.profile == ProfileSource::separable) return sep;
    VarianceProfile ns = profile_nonseparable_gaussian(sep, lattices->rx, lattices->tx, cc.kernel_a);
    return cc.match_separable_power ? profile_rescale_to_match(ns, sep) : ns;
}

inline ComplexMatrix config_los(const RunConfig& c, Eigen::Index rows, Eigen::Index cols) {
    const auto& l = c.channel.los;
    switch (l.kind) {
        case LosSource::none: return ComplexMatrix::Zero(rows, cols);
        case LosSource::single_coupling: return synth_los(rows, cols, LosKind::single_coupling);
        case LosSource::low_rank:
            return synth_los(rows, cols, LosKind::low_rank, std::min<Eigen::Index>(l.rank, std::min(rows, cols)),
                             l.seed);
        case LosSource::file: {
            ComplexMatrix a = read_complex_matrix(c.resolve(l.path));
            if (a.rows() != rows || a.cols() != cols) {
                throw ShapeError("LoS file is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                 ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
            }
            return a;
        }
    }
    return ComplexMatrix::Zero(rows, cols);
}

/// Channel model at one SNR (dB).
inline ChannelModel config_model(const RunConfig& c, double snr_db, const VarianceProfile& profile,
                                 const ComplexMatrix& los, const LatticePair* lattices = nullptr) {
    const double noise = noise_power_from_snr_db(snr_db);
    if (c.channel.model == ModelKind::weichselberger) return build_weichselberger(los, profile, noise);
    LatticePair own;
    if (!lattices) {
        own = config_lattices(c);
        lattices = &own;
    }
    return build_holographic(c.geometry, lattices->rx, lattices->tx, profile, los, c.channel.rician_k, noise);
}

}  // namespace holo_rmt
