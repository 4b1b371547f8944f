#pragma once

// Fixed-point solver for the N + M coupled equations
//
//   delta_j        = Tr(D_j T) / M,        D_j = diag(column j of Sigma)
//   delta~_i       = Tr(D~_i T~) / M,      D~_i = diag(row i of Sigma)
//
// with, at z = -rho,
//
//   psi_i  = 1 / (rho (1 + delta~_i)),   psi~_j = 1 / (rho (1 + delta_j)),
//   T      = (Psi^{-1} + rho A Psi~ A^H)^{-1},
//   T~     = (Psi~^{-1} + rho A^H Psi A)^{-1}.
//
// Only diag(T) and diag(T~) enter the iteration. When A has small rank the
// diagonals come from a Woodbury identity in O((N + M) r^2); when A = 0 the
// resolvents are diagonal. The full matrices are formed once, at the end.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "types.hpp"

namespace holo_rmt {

enum class ResolventPath { automatic, dense };

struct SolverOptions {
    double tol = 1e-12;
    int max_iter = 10000;
    double damping = 1.0;
    double initial_value = 1.0;
    ResolventPath path = ResolventPath::automatic;

    void validate() const {
        if (!(tol > 0.0)) throw DomainError("solver: tol must be positive");
        if (max_iter < 1) throw DomainError("solver: max_iter must be at least 1");
        if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("solver: damping must lie in (0, 1]");
        if (!(initial_value > 0.0)) throw DomainError("solver: initial value must be positive");
    }
};

struct DeltaSolution {
    RealVector delta;        // length M
    RealVector delta_tilde;  // length N
    double rho = 0.0;
    int iterations = 0;
    double residual = 0.0;  // sup-norm of the last update
    std::vector<double> residual_trace;
};

struct Resolvents {
    ComplexMatrix T;        // N x N
    ComplexMatrix T_tilde;  // M x M
    RealVector psi;         // length N
    RealVector psi_tilde;   // length M
    RealVector t_diag;      // real diagonal of T
    RealVector tt_diag;     // real diagonal of T~
};

/// Raised when the iteration budget runs out; carries the per-iteration
/// sup-norm updates.
struct ConvergenceError : NumericalError {
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : NumericalError(what), residual_trace(std::move(trace)) {}
    std::vector<double> residual_trace;
};

struct DiagonalFamilies {
    std::vector<RealVector> d;        // d[j] = diagonal of D_j, length N
    std::vector<RealVector> d_tilde;  // d_tilde[i] = diagonal of D~_i, length M
};

inline DiagonalFamilies build_D_matrices(const VarianceProfile& profile) {
    const RealMatrix& s = profile.values();
    DiagonalFamilies f;
    f.d.reserve(static_cast<std::size_t>(s.cols()));
    f.d_tilde.reserve(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index j = 0; j < s.cols(); ++j) f.d.emplace_back(s.col(j));
    for (Eigen::Index i = 0; i < s.rows(); ++i) f.d_tilde.emplace_back(s.row(i).transpose());
    return f;
}

inline RealVector psi_from(const RealVector& delta_other, double rho) {
    return (rho * (1.0 + delta_other.array())).inverse().matrix();
}

namespace detail {

inline ComplexMatrix inverse_argument(const ComplexMatrix& a, const RealVector& psi, const RealVector& psi_other,
                                      double rho) {
    ComplexMatrix m = rho * (a * psi_other.cast<Complex>().asDiagonal()) * a.adjoint();
    m.diagonal().array() += psi.cwiseInverse().cast<Complex>().array();
    return m;
}

inline std::string hpd_failure(const char* which, const ComplexMatrix& m, double rho) {
    std::ostringstream os;
    os << "Hermitian factorization of " << which << " failed (rho = " << rho
       << ", diagonal range [" << m.diagonal().real().minCoeff() << ", " << m.diagonal().real().maxCoeff() << "])";
    return os.str();
}

// Diagonal of (Psi^{-1} + rho L (R^H Phi R) L^H)^{-1}.
inline RealVector woodbury_diag(const ComplexMatrix& l, const ComplexMatrix& r, const RealVector& psi,
                                const RealVector& phi, double rho) {
    const Eigen::Index k = l.cols();
    const ComplexMatrix g = r.adjoint() * (phi.cast<Complex>().asDiagonal() * r);
    Eigen::LLT<ComplexMatrix> g_llt(rho * g);
    if (g_llt.info() != Eigen::Success) throw NumericalError("low-rank resolvent: coupling Gram matrix not HPD");
    const ComplexMatrix w = psi.cast<Complex>().asDiagonal() * l;
    ComplexMatrix kmat = g_llt.solve(ComplexMatrix::Identity(k, k)) + l.adjoint() * w;
    kmat = 0.5 * (kmat + kmat.adjoint()).eval();
    Eigen::LLT<ComplexMatrix> k_llt(kmat);
    if (k_llt.info() != Eigen::Success) throw NumericalError("low-rank resolvent: capacitance matrix not HPD");
    const ComplexMatrix y = k_llt.solve(w.adjoint());
    RealVector out(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        out(i) = psi(i) - (w.row(i) * y.col(i)).value().real();
    }
    return out;
}

inline RealVector dense_diag(const ComplexMatrix& a, const RealVector& psi, const RealVector& psi_other, double rho,
                             const char* which) {
    const ComplexMatrix m = inverse_argument(a, psi, psi_other, rho);
    Eigen::LLT<ComplexMatrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError(hpd_failure(which, m, rho));
    const Eigen::Index n = m.rows();
    const ComplexMatrix linv = llt.matrixL().solve(ComplexMatrix::Identity(n, n));
    return linv.colwise().squaredNorm().transpose();
}

}  // namespace detail

/// Evaluates diag(T) and diag(T~) for given psi, psi~ at a fixed rho.
class ResolventEngine {
public:
    enum class Mode { diagonal, low_rank, dense };

    ResolventEngine(const ComplexMatrix& los, double rho, ResolventPath path = ResolventPath::automatic)
        : a_(los), rho_(rho) {
        if (los.isZero(0.0)) {
            mode_ = Mode::diagonal;
            return;
        }
        mode_ = Mode::dense;
        if (path == ResolventPath::dense) return;
        const Eigen::Index dmin = std::min(los.rows(), los.cols());
        Eigen::BDCSVD<ComplexMatrix> svd(los, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const RealVector& s = svd.singularValues();
        const double cut = static_cast<double>(std::max(los.rows(), los.cols())) *
                           std::numeric_limits<double>::epsilon() * s(0);
        Eigen::Index r = 0;
        while (r < s.size() && s(r) > cut) ++r;
        if (4 * r > dmin) return;
        mode_ = Mode::low_rank;
        const ComplexMatrix u = svd.matrixU().leftCols(r);
        const ComplexMatrix v = svd.matrixV().leftCols(r);
        const RealVector sr = s.head(r);
        l_ = u * sr.cast<Complex>().asDiagonal();
        r_ = v;
        lt_ = v * sr.cast<Complex>().asDiagonal();
        rt_ = u;
    }

    Mode mode() const { return mode_; }

    RealVector diag_T(const RealVector& psi, const RealVector& psi_tilde) const {
        switch (mode_) {
            case Mode::diagonal: return psi;
            case Mode::low_rank: return detail::woodbury_diag(l_, r_, psi, psi_tilde, rho_);
            case Mode::dense: break;
        }
        return detail::dense_diag(a_, psi, psi_tilde, rho_, "T^{-1}");
    }

    RealVector diag_T_tilde(const RealVector& psi, const RealVector& psi_tilde) const {
        switch (mode_) {
            case Mode::diagonal: return psi_tilde;
            case Mode::low_rank: return detail::woodbury_diag(lt_, rt_, psi_tilde, psi, rho_);
            case Mode::dense: break;
        }
        return detail::dense_diag(a_.adjoint(), psi_tilde, psi, rho_, "T~^{-1}");
    }

private:
    ComplexMatrix a_;
    double rho_;
    Mode mode_ = Mode::dense;
    ComplexMatrix l_, r_, lt_, rt_;
};

// Imaginary parts of resolvent diagonals above this abort the computation.
inline constexpr double kDiagonalImagTolerance = 1e-10;

/// Forms T and T~ in full from the given parameters.
inline Resolvents compute_resolvents(const ChannelModel& model, const RealVector& delta,
                                     const RealVector& delta_tilde, double rho) {
    if (delta.size() != model.cols() || delta_tilde.size() != model.rows()) {
        throw ShapeError("compute_resolvents: parameter lengths do not match the model");
    }
    if (!(rho > 0.0)) throw DomainError("compute_resolvents: rho must be positive");
    if (!((delta.array() > 0.0).all() && (delta_tilde.array() > 0.0).all())) {
        throw DomainError("compute_resolvents: parameters must be positive");
    }
    Resolvents r;
    r.psi = psi_from(delta_tilde, rho);
    r.psi_tilde = psi_from(delta, rho);

    auto invert = [&](const ComplexMatrix& a, const RealVector& psi, const RealVector& psi_other,
                      const char* which) -> ComplexMatrix {
        const ComplexMatrix m = detail::inverse_argument(a, psi, psi_other, rho);
        Eigen::LLT<ComplexMatrix> llt(m);
        if (llt.info() != Eigen::Success) throw NumericalError(detail::hpd_failure(which, m, rho));
        ComplexMatrix t = llt.solve(ComplexMatrix::Identity(m.rows(), m.cols()));
        return 0.5 * (t + t.adjoint());
    };

    if (model.centered()) {
        r.T = r.psi.cast<Complex>().asDiagonal();
        r.T_tilde = r.psi_tilde.cast<Complex>().asDiagonal();
    } else {
        r.T = invert(model.los, r.psi, r.psi_tilde, "T^{-1}");
        r.T_tilde = invert(model.los.adjoint(), r.psi_tilde, r.psi, "T~^{-1}");
    }
    const double imag_t = r.T.diagonal().imag().cwiseAbs().maxCoeff();
    const double imag_tt = r.T_tilde.diagonal().imag().cwiseAbs().maxCoeff();
    if (imag_t > kDiagonalImagTolerance || imag_tt > kDiagonalImagTolerance) {
        throw NumericalError("compute_resolvents: resolvent diagonal has a non-negligible imaginary part");
    }
    r.t_diag = r.T.diagonal().real();
    r.tt_diag = r.T_tilde.diagonal().real();
    return r;
}

/// max over i, j of |delta_j - Tr(D_j T)/M| and |delta~_i - Tr(D~_i T~)/M|.
inline double self_consistency_residual(const ChannelModel& model, const DeltaSolution& sol, const Resolvents& res) {
    const double m = static_cast<double>(model.cols());
    const RealMatrix& s = model.profile.values();
    const RealVector d = s.transpose() * res.t_diag / m;
    const RealVector dt = s * res.tt_diag / m;
    return std::max((d - sol.delta).cwiseAbs().maxCoeff(), (dt - sol.delta_tilde).cwiseAbs().maxCoeff());
}

struct SolverResult {
    DeltaSolution solution;
    Resolvents resolvents;
};

/// Gauss-Seidel fixed-point iteration at rho = zeta: delta is updated from
/// the previous T, then delta~ from the T~ built with the new delta. Stops
/// once the sup-norm of the (relaxed) update is at most tol.
inline SolverResult solve_deltas(const ChannelModel& model, const SolverOptions& opt = {},
                                 const RealVector* delta0 = nullptr, const RealVector* delta_tilde0 = nullptr) {
    model.validate();
    opt.validate();
    const Eigen::Index n = model.rows();
    const Eigen::Index m = model.cols();
    const double rho = model.zeta;
    const double inv_m = 1.0 / static_cast<double>(m);
    const RealMatrix& s = model.profile.values();

    RealVector delta = delta0 ? *delta0 : RealVector::Constant(m, opt.initial_value);
    RealVector delta_tilde = delta_tilde0 ? *delta_tilde0 : RealVector::Constant(n, opt.initial_value);
    if (delta.size() != m || delta_tilde.size() != n) throw ShapeError("solve_deltas: initial value length mismatch");

    const ResolventEngine engine(model.los, rho, opt.path);
    DeltaSolution sol;
    sol.rho = rho;
    const double w = opt.damping;

    for (int it = 1; it <= opt.max_iter; ++it) {
        RealVector psi = psi_from(delta_tilde, rho);
        RealVector psi_tilde = psi_from(delta, rho);
        const RealVector t = engine.diag_T(psi, psi_tilde);
        RealVector delta_new = s.transpose() * t * inv_m;
        if (w != 1.0) delta_new = (1.0 - w) * delta + w * delta_new;

        psi_tilde = psi_from(delta_new, rho);
        const RealVector tt = engine.diag_T_tilde(psi, psi_tilde);
        RealVector delta_tilde_new = s * tt * inv_m;
        if (w != 1.0) delta_tilde_new = (1.0 - w) * delta_tilde + w * delta_tilde_new;

        const double step = std::max((delta_new - delta).cwiseAbs().maxCoeff(),
                                     (delta_tilde_new - delta_tilde).cwiseAbs().maxCoeff());
        delta = std::move(delta_new);
        delta_tilde = std::move(delta_tilde_new);
        sol.residual_trace.push_back(step);
        if (!std::isfinite(step)) {
            throw ConvergenceError("solve_deltas: iteration produced non-finite values at step " + std::to_string(it),
                                   std::move(sol.residual_trace));
        }
        if (step <= opt.tol) {
            sol.iterations = it;
            sol.residual = step;
            sol.delta = std::move(delta);
            sol.delta_tilde = std::move(delta_tilde);
            Resolvents res = compute_resolvents(model, sol.delta, sol.delta_tilde, rho);
            return {std::move(sol), std::move(res)};
        }
    }
    std::ostringstream os;
    os << "solve_deltas: no convergence after " << opt.max_iter << " iterations (last update "
       << sol.residual_trace.back() << ", tol " << opt.tol << ")";
    throw ConvergenceError(os.str(), std::move(sol.residual_trace));
}

}  // namespace holo_rmt
