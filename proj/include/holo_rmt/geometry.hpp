#pragma once

// Planar holographic array geometry: antenna counts, the propagating-wave
// lattice ellipse of each aperture, patch antenna gains and the effective
// noise parameter of the angular-domain channel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "types.hpp"

namespace holo_rmt {

struct ArrayGeometry {
    double wavelength = 0.01;
    double tx_aperture_x = 0.1;
    double tx_aperture_y = 0.1;
    double rx_aperture_x = 0.1;
    double rx_aperture_y = 0.1;
    double tx_spacing = 0.0025;
    double rx_spacing = 0.0025;
    double antenna_area = 0.01 * 0.01 / 64.0;
    double efficiency = 0.6;

    void validate() const {
        const double lengths[] = {wavelength,    tx_aperture_x, tx_aperture_y, rx_aperture_x,
                                  rx_aperture_y, tx_spacing,    rx_spacing,    antenna_area};
        for (double v : lengths) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw DomainError("geometry: all lengths and the antenna area must be positive and finite");
            }
        }
        if (!(efficiency > 0.0 && efficiency < 1.0)) {
            throw DomainError("geometry: antenna efficiency must lie in (0, 1)");
        }
        const double side = std::sqrt(antenna_area);
        if (tx_spacing < side || rx_spacing < side) {
            throw DomainError("geometry: antenna spacing is smaller than the antenna side length");
        }
        if (tx_antennas() < 1 || rx_antennas() < 1) {
            throw DomainError("geometry: aperture smaller than half the antenna spacing");
        }
    }

    // Counts round L / spacing to the nearest integer per axis.
    long tx_antennas() const {
        return std::lround(tx_aperture_x / tx_spacing) * std::lround(tx_aperture_y / tx_spacing);
    }
    long rx_antennas() const {
        return std::lround(rx_aperture_x / rx_spacing) * std::lround(rx_aperture_y / rx_spacing);
    }
};

/// Defaults at 30 GHz: 10-wavelength square apertures sampled at lambda/4.
inline ArrayGeometry default_geometry() { return ArrayGeometry{}; }

struct LatticePoint {
    int x = 0;
    int y = 0;
    friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
    friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

/// Integer wavenumber pairs (m_x, m_y) of the propagating region, with the
/// normalized semi-axes L_x / lambda and L_y / lambda of the ellipse.
struct WavenumberLattice {
    std::vector<LatticePoint> points;
    double semi_axis_x = 0.0;
    double semi_axis_y = 0.0;

    std::size_t size() const { return points.size(); }

    /// Normalized radius of a point; <= 1 inside the ellipse.
    double radius(const LatticePoint& p) const {
        const double u = p.x / semi_axis_x;
        const double v = p.y / semi_axis_y;
        return std::sqrt(u * u + v * v);
    }

    /// ceil(pi L_x L_y / lambda^2), the leading-order cardinality estimate.
    long area_estimate() const {
        return static_cast<long>(std::ceil(std::numbers::pi * semi_axis_x * semi_axis_y));
    }
};

// Points whose normalized radius exceeds 1 by less than this are kept; it
// absorbs rounding in L / lambda for apertures that are integer multiples of
// the wavelength.
inline constexpr double kLatticeEdgeSlack = 1e-12;

/// Every integer pair inside the ellipse with semi-axes L_x/lambda, L_y/lambda,
/// sorted lexicographically by (m_x, m_y).
inline WavenumberLattice enumerate_lattice(double aperture_x, double aperture_y, double wavelength) {
    if (!(aperture_x > 0.0) || !(aperture_y > 0.0) || !(wavelength > 0.0)) {
        throw DomainError("enumerate_lattice: apertures and wavelength must be positive");
    }
    WavenumberLattice lat;
    lat.semi_axis_x = aperture_x / wavelength;
    lat.semi_axis_y = aperture_y / wavelength;
    const int mx = static_cast<int>(std::floor(lat.semi_axis_x + kLatticeEdgeSlack));
    const int my = static_cast<int>(std::floor(lat.semi_axis_y + kLatticeEdgeSlack));
    for (int x = -mx; x <= mx; ++x) {
        for (int y = -my; y <= my; ++y) {
            const double u = x / lat.semi_axis_x;
            const double v = y / lat.semi_axis_y;
            if (u * u + v * v <= 1.0 + kLatticeEdgeSlack) {
                lat.points.push_back({x, y});
            }
        }
    }
    return lat;
}

/// Keeps the n points of smallest normalized radius (ties broken
/// lexicographically) and returns them in lexicographic order. The full
/// lattice is point-symmetric and therefore always has odd cardinality; this
/// is how even mode counts are obtained.
inline WavenumberLattice truncate_lattice(const WavenumberLattice& lat, std::size_t n) {
    if (n == 0 || n > lat.size()) {
        throw DomainError("truncate_lattice: requested mode count must be in [1, lattice size]");
    }
    WavenumberLattice out = lat;
    std::stable_sort(out.points.begin(), out.points.end(), [&](const LatticePoint& a, const LatticePoint& b) {
        return lat.radius(a) < lat.radius(b);
    });
    out.points.resize(n);
    std::sort(out.points.begin(), out.points.end());
    return out;
}

struct AntennaGains {
    double tx = 0.0;
    double rx = 0.0;
};

/// G = 4 pi tau S / lambda^2.
inline double antenna_gain(double efficiency, double area, double wavelength) {
    return 4.0 * std::numbers::pi * efficiency * area / (wavelength * wavelength);
}

inline AntennaGains antenna_gain(const ArrayGeometry& geom) {
    const double g = antenna_gain(geom.efficiency, geom.antenna_area, geom.wavelength);
    return {g, g};
}

/// zeta = sigma^2 / (G_R G_S N_R N_S): the noise parameter of the
/// angular-domain channel, after the basis normalization and antenna gains.
inline double effective_zeta(const ArrayGeometry& geom, double noise_power) {
    if (!(noise_power > 0.0)) {
        throw DomainError("effective_zeta: noise power must be positive");
    }
    const auto g = antenna_gain(geom);
    return noise_power /
           (g.rx * g.tx * static_cast<double>(geom.rx_antennas()) * static_cast<double>(geom.tx_antennas()));
}

/// SNR in dB to noise power with unit signal power.
inline double noise_power_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

}  // namespace holo_rmt
