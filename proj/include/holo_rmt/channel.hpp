#pragma once

// The unified non-centered, non-separable channel H = A + Sigma^{o1/2} (.) X.
//
// Both the Rician Weichselberger channel (after dropping its unitary side
// factors) and the angular-domain holographic channel reduce to this form;
// the builders here produce a ChannelModel from either description.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "geometry.hpp"
#include "random.hpp"
#include "types.hpp"

namespace holo_rmt {

enum class ProfileKind { separable, nonseparable, user };

inline const char* to_string(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::separable: return "separable";
        case ProfileKind::nonseparable: return "nonseparable";
        case ProfileKind::user: return "user";
    }
    return "user";
}

inline ProfileKind profile_kind_from_string(const std::string& s) {
    if (s == "separable") return ProfileKind::separable;
    if (s == "nonseparable") return ProfileKind::nonseparable;
    if (s == "user") return ProfileKind::user;
    throw DomainError("unknown profile kind '" + s + "'");
}

// Relative tolerance for recognizing a rank-one (separable) profile.
inline constexpr double kSeparableTolerance = 1e-12;
// Generated profiles are floored at this fraction of their largest entry.
inline constexpr double kProfileFloor = 1e-12;

/// Entries below kProfileFloor * max are raised to that floor; returns how
/// many entries were touched.
inline std::size_t floor_profile_entries(RealMatrix& values) {
    const double floor = kProfileFloor * values.maxCoeff();
    std::size_t touched = 0;
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            if (values(i, j) < floor) {
                values(i, j) = floor;
                ++touched;
            }
        }
    }
    return touched;
}

inline bool is_rank_one(const RealMatrix& v, double rel_tol = kSeparableTolerance) {
    if (v.rows() == 0 || v.cols() == 0) return false;
    Eigen::Index r = 0, c = 0;
    const double pivot = v.maxCoeff(&r, &c);
    if (!(pivot > 0.0)) return false;
    const RealMatrix candidate = v.col(c) * v.row(r) / pivot;
    return (v - candidate).cwiseAbs().maxCoeff() <= rel_tol * pivot;
}

/// N x M matrix of per-entry variances sigma^2_{ij}.
///
/// Invariant: every entry is finite and strictly positive, so all row and
/// column sums are positive too. Separable profiles built from factors keep
/// the factors, and the noise scaling then runs through them.
class VarianceProfile {
public:
    VarianceProfile() = default;

    static VarianceProfile from_matrix(RealMatrix values, ProfileKind kind = ProfileKind::user) {
        VarianceProfile p;
        p.values_ = std::move(values);
        p.kind_ = kind;
        p.check();
        if (kind == ProfileKind::separable && !is_rank_one(p.values_)) {
            throw DomainError("variance profile tagged separable is not rank one");
        }
        p.sqrt_ = p.values_.cwiseSqrt();
        return p;
    }

    /// Sigma = d d~^T.
    static VarianceProfile separable(RealVector row_factor, RealVector col_factor) {
        VarianceProfile p;
        p.values_ = row_factor * col_factor.transpose();
        p.kind_ = ProfileKind::separable;
        p.check();
        p.row_sqrt_ = row_factor.cwiseSqrt();
        p.col_sqrt_ = col_factor.cwiseSqrt();
        p.row_factor_ = std::move(row_factor);
        p.col_factor_ = std::move(col_factor);
        p.sqrt_ = p.values_.cwiseSqrt();
        return p;
    }

    const RealMatrix& values() const { return values_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }
    ProfileKind kind() const { return kind_; }
    double max_entry() const { return values_.maxCoeff(); }
    double min_entry() const { return values_.minCoeff(); }
    double total() const { return values_.sum(); }
    std::size_t floored_entries() const { return floored_; }

    bool has_factors() const { return row_factor_.has_value(); }
    const RealVector& row_factor() const { return row_factor_.value(); }
    const RealVector& col_factor() const { return col_factor_.value(); }

    /// Same values with the kind re-derived: rank-one user input is tagged separable.
    VarianceProfile with_detected_kind() const {
        VarianceProfile p = *this;
        if (p.kind_ == ProfileKind::user && is_rank_one(p.values_)) p.kind_ = ProfileKind::separable;
        return p;
    }

    VarianceProfile scaled(double factor) const {
        if (!(factor > 0.0) || !std::isfinite(factor)) {
            throw DomainError("variance profile scale must be positive and finite");
        }
        if (has_factors()) {
            VarianceProfile p = separable(factor * row_factor(), col_factor());
            p.floored_ = floored_;
            return p;
        }
        VarianceProfile p = from_matrix(factor * values_, kind_);
        p.floored_ = floored_;
        return p;
    }

    /// Sigma^{o1/2} (.) X. For factored profiles this evaluates
    /// D^{1/2} X D~^{1/2} entry by entry, i.e. (sqrt(d_i) x_ij) sqrt(d~_j).
    ComplexMatrix scale_noise(const ComplexMatrix& x) const {
        if (has_factors()) {
            return row_sqrt_->asDiagonal() * x * col_sqrt_->asDiagonal();
        }
        return x.cwiseProduct(sqrt_.cast<Complex>());
    }

    void set_floored_entries(std::size_t n) { floored_ = n; }

private:
    void check() const {
        if (values_.rows() == 0 || values_.cols() == 0) {
            throw ShapeError("variance profile must be non-empty");
        }
        for (Eigen::Index j = 0; j < values_.cols(); ++j) {
            for (Eigen::Index i = 0; i < values_.rows(); ++i) {
                const double v = values_(i, j);
                if (!std::isfinite(v) || !(v > 0.0)) {
                    throw DomainError("variance profile entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                      ") = " + std::to_string(v) + " is not strictly positive and finite");
                }
            }
        }
    }

    RealMatrix values_;
    RealMatrix sqrt_;
    ProfileKind kind_ = ProfileKind::user;
    std::optional<RealVector> row_factor_;
    std::optional<RealVector> col_factor_;
    std::optional<RealVector> row_sqrt_;
    std::optional<RealVector> col_sqrt_;
    std::size_t floored_ = 0;
};

/// Solid angle subtended by one lattice cell: the integral of
/// 1 / sqrt(1 - u^2 - v^2) over the cell, in wavenumbers normalized by
/// 2 pi / lambda, intersected with the unit (propagation) disk.
///
/// The cell of point (m_x, m_y) is centered on it with widths 1/semi_axis.
/// The v-integral is done in closed form (an arcsine), the remaining
/// u-integral by tanh-sinh quadrature split at the kinks where the cell
/// edges meet the circle, which leaves only endpoint singularities.
inline double cell_solid_angle(const LatticePoint& p, double semi_axis_x, double semi_axis_y) {
    const double u0 = (p.x - 0.5) / semi_axis_x;
    const double u1 = (p.x + 0.5) / semi_axis_x;
    const double v0 = (p.y - 0.5) / semi_axis_y;
    const double v1 = (p.y + 0.5) / semi_axis_y;
    const double lo = std::max(u0, -1.0);
    const double hi = std::min(u1, 1.0);
    if (!(lo < hi)) return 0.0;

    auto inner = [&](double u) {
        const double c2 = 1.0 - u * u;
        if (!(c2 > 0.0)) return 0.0;
        const double c = std::sqrt(c2);
        const double a = std::clamp(v0 / c, -1.0, 1.0);
        const double b = std::clamp(v1 / c, -1.0, 1.0);
        return std::asin(b) - std::asin(a);
    };

    std::vector<double> knots{lo, hi};
    for (double v : {v0, v1}) {
        if (std::abs(v) < 1.0) {
            const double u = std::sqrt(1.0 - v * v);
            for (double k : {-u, u}) {
                if (k > lo && k < hi) knots.push_back(k);
            }
        }
    }
    if (lo < 0.0 && hi > 0.0) knots.push_back(0.0);
    std::sort(knots.begin(), knots.end());

    thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (knots[i + 1] > knots[i]) total += integrator.integrate(inner, knots[i], knots[i + 1], 1e-13);
    }
    return total;
}

/// Cell solid angles of a lattice, normalized to unit sum.
inline RealVector lattice_power_weights(const WavenumberLattice& lat) {
    if (lat.size() == 0) throw DomainError("lattice_power_weights: empty lattice");
    RealVector w(static_cast<Eigen::Index>(lat.size()));
    for (std::size_t k = 0; k < lat.size(); ++k) {
        const double s = cell_solid_angle(lat.points[k], lat.semi_axis_x, lat.semi_axis_y);
        if (!(s > 0.0)) {
            throw NumericalError("lattice point (" + std::to_string(lat.points[k].x) + ", " +
                                 std::to_string(lat.points[k].y) + ") has an empty cell");
        }
        w(static_cast<Eigen::Index>(k)) = s;
    }
    return w / w.sum();
}

/// Isotropic scattering: sigma^2_{ij} = scale * sigma^2_R(l_i) sigma^2_S(m_j),
/// each side's factors being the normalized cell solid angles.
inline VarianceProfile profile_separable_isotropic(const WavenumberLattice& rx, const WavenumberLattice& tx,
                                                   double scale = 1.0) {
    if (!(scale > 0.0)) throw DomainError("profile_separable_isotropic: scale must be positive");
    return VarianceProfile::separable(scale * lattice_power_weights(rx), lattice_power_weights(tx));
}

/// Separable profile modulated by exp(-|l - m|^2 / a), where l and m are the
/// receive and transmit wavenumber index pairs.
inline VarianceProfile profile_nonseparable_gaussian(const VarianceProfile& sep, const WavenumberLattice& rx,
                                                     const WavenumberLattice& tx, double kernel_scale) {
    if (!(kernel_scale > 0.0)) throw DomainError("profile_nonseparable_gaussian: kernel scale must be positive");
    if (!sep.has_factors()) throw DomainError("profile_nonseparable_gaussian: input must carry separable factors");
    if (sep.rows() != static_cast<Eigen::Index>(rx.size()) || sep.cols() != static_cast<Eigen::Index>(tx.size())) {
        throw ShapeError("profile_nonseparable_gaussian: profile shape does not match the lattices");
    }
    RealMatrix v(sep.rows(), sep.cols());
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const auto& m = tx.points[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const auto& l = rx.points[static_cast<std::size_t>(i)];
            const double dx = l.x - m.x;
            const double dy = l.y - m.y;
            v(i, j) = sep(i, j) * std::exp(-(dx * dx + dy * dy) / kernel_scale);
        }
    }
    const std::size_t floored = floor_profile_entries(v);
    VarianceProfile out = VarianceProfile::from_matrix(std::move(v), ProfileKind::nonseparable);
    out.set_floored_entries(floored);
    return out;
}

/// target * (sum(reference) / sum(target)), equalizing E Tr H H^H.
inline VarianceProfile profile_rescale_to_match(const VarianceProfile& target, const VarianceProfile& reference) {
    if (target.rows() != reference.rows() || target.cols() != reference.cols()) {
        throw ShapeError("profile_rescale_to_match: shapes differ");
    }
    const double t = target.total();
    if (!(t > 0.0)) throw DomainError("profile_rescale_to_match: target has zero total power");
    return target.scaled(reference.total() / t);
}

inline double spectral_norm(const ComplexMatrix& a) {
    if (a.size() == 0 || a.isZero(0.0)) return 0.0;
    Eigen::BDCSVD<ComplexMatrix> svd(a);
    return svd.singularValues()(0);
}

struct ChannelModel {
    ComplexMatrix los;  // A, N x M
    VarianceProfile profile;
    double zeta = 1.0;
    double rician_factor = 0.0;
    double los_norm = 0.0;  // spectral norm of A

    Eigen::Index rows() const { return profile.rows(); }
    Eigen::Index cols() const { return profile.cols(); }
    bool centered() const { return los_norm == 0.0; }

    void validate() const {
        if (los.rows() != profile.rows() || los.cols() != profile.cols()) {
            throw ShapeError("channel model: LoS matrix is " + std::to_string(los.rows()) + "x" +
                             std::to_string(los.cols()) + " but the profile is " + std::to_string(profile.rows()) +
                             "x" + std::to_string(profile.cols()));
        }
        if (!(zeta > 0.0) || !std::isfinite(zeta)) throw DomainError("channel model: zeta must be positive");
        if (!los.allFinite() || !std::isfinite(los_norm)) throw DomainError("channel model: LoS matrix not finite");
    }
};

/// Weichselberger channel in its eigen-domain: A = U^H A_W V, zeta = sigma^2.
/// The unitary factors do not affect the MI and are not needed.
inline ChannelModel build_weichselberger(ComplexMatrix los_eigen_domain, const VarianceProfile& coupling,
                                         double noise_power) {
    if (!(noise_power > 0.0)) throw DomainError("build_weichselberger: noise power must be positive");
    ChannelModel m;
    m.profile = coupling.with_detected_kind();
    m.los_norm = spectral_norm(los_eigen_domain);
    m.los = std::move(los_eigen_domain);
    m.zeta = noise_power;
    m.validate();
    return m;
}

/// Rician Kronecker channel A + D^{1/2} X D~^{1/2}, the separable special case.
inline ChannelModel build_kronecker(ComplexMatrix los, const RealVector& rx_eigenvalues,
                                    const RealVector& tx_eigenvalues, double noise_power) {
    return build_weichselberger(std::move(los), VarianceProfile::separable(rx_eigenvalues, tx_eigenvalues),
                                noise_power);
}

/// Angular-domain holographic channel: A = sqrt(k / n_S) A_h and
/// zeta = sigma^2 / (G_R G_S N_R N_S).
inline ChannelModel build_holographic(const ArrayGeometry& geom, const WavenumberLattice& rx,
                                      const WavenumberLattice& tx, const VarianceProfile& profile,
                                      const ComplexMatrix& los_angular, double rician_factor, double noise_power) {
    geom.validate();
    const auto n_r = static_cast<Eigen::Index>(rx.size());
    const auto n_s = static_cast<Eigen::Index>(tx.size());
    if (profile.rows() != n_r || profile.cols() != n_s) {
        throw ShapeError("build_holographic: profile is not n_R x n_S for the given lattices");
    }
    if (los_angular.rows() != n_r || los_angular.cols() != n_s) {
        throw ShapeError("build_holographic: LoS matrix is not n_R x n_S for the given lattices");
    }
    if (!(rician_factor >= 0.0) || !std::isfinite(rician_factor)) {
        throw DomainError("build_holographic: Rician factor must be non-negative");
    }
    ChannelModel m;
    m.profile = profile;
    m.los = std::sqrt(rician_factor / static_cast<double>(n_s)) * los_angular;
    m.los_norm = spectral_norm(m.los);
    m.zeta = effective_zeta(geom, noise_power);
    m.rician_factor = rician_factor;
    m.validate();
    return m;
}

enum class LosKind { none, single_coupling, low_rank };

inline LosKind los_kind_from_string(const std::string& s) {
    if (s == "none") return LosKind::none;
    if (s == "single") return LosKind::single_coupling;
    if (s == "lowrank") return LosKind::low_rank;
    throw DomainError("unknown LoS kind '" + s + "' (expected none, single or lowrank)");
}

/// Synthetic LoS matrix of unit spectral norm.
///   single_coupling: a single unit entry at (0, 0);
///   low_rank: sum of `rank` outer products of random unit vectors.
inline ComplexMatrix synth_los(Eigen::Index rows, Eigen::Index cols, LosKind kind, Eigen::Index rank = 1,
                               std::uint64_t seed = 0) {
    if (rows < 1 || cols < 1) throw DomainError("synth_los: dimensions must be at least 1");
    ComplexMatrix a = ComplexMatrix::Zero(rows, cols);
    switch (kind) {
        case LosKind::none: return a;
        case LosKind::single_coupling: a(0, 0) = 1.0; return a;
        case LosKind::low_rank: break;
    }
    if (rank < 1 || rank > std::min(rows, cols)) {
        throw DomainError("synth_los: rank must lie in [1, min(rows, cols)]");
    }
    GaussianStream rng(seed, 0, StreamTag::los_synthesis);
    for (Eigen::Index k = 0; k < rank; ++k) {
        ComplexVector u = rng.complex_matrix(rows, 1, 1.0);
        ComplexVector v = rng.complex_matrix(cols, 1, 1.0);
        u.normalize();
        v.normalize();
        a += u * v.adjoint();
    }
    return a / spectral_norm(a);
}

}  // namespace holo_rmt
