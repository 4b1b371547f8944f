#pragma once

// Closed-form statistics of C_M(zeta) = log det(I + H H^H / zeta): the
// deterministic-equivalent mean, the CLT variance -log det(I_2M - B) and the
// Gaussian outage approximation. Also an independent evaluation of the
// variance through the nested linear systems S_j p_j = q_j.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "normal.hpp"
#include "solver.hpp"
#include "types.hpp"

namespace holo_rmt {

struct BMatrix {
    RealMatrix pi;            // M x M
    RealMatrix xi;            // M x M, zero diagonal
    RealMatrix gamma;         // M x M, symmetric
    RealVector lambda_tilde;  // diagonal of Lambda~, length M
    RealMatrix b;             // 2M x 2M, [[Pi, Gamma], [Xi + Lambda~, Pi^T]]

    Eigen::Index m() const { return pi.rows(); }

    static BMatrix assemble(RealMatrix pi, RealMatrix xi, RealMatrix gamma, RealVector lambda_tilde) {
        const Eigen::Index m = pi.rows();
        if (pi.cols() != m || xi.rows() != m || xi.cols() != m || gamma.rows() != m || gamma.cols() != m ||
            lambda_tilde.size() != m) {
            throw ShapeError("BMatrix: block shapes disagree");
        }
        BMatrix out;
        out.b.resize(2 * m, 2 * m);
        out.b.topLeftCorner(m, m) = pi;
        out.b.topRightCorner(m, m) = gamma;
        out.b.bottomLeftCorner(m, m) = xi;
        out.b.bottomLeftCorner(m, m).diagonal() += lambda_tilde;
        out.b.bottomRightCorner(m, m) = pi.transpose();
        out.pi = std::move(pi);
        out.xi = std::move(xi);
        out.gamma = std::move(gamma);
        out.lambda_tilde = std::move(lambda_tilde);
        return out;
    }
};

struct LogDet {
    double log_abs = 0.0;
    int sign = 1;  // -1, 0 or +1
};

/// log|det| and the sign of det for a real square matrix, by LU with partial pivoting.
inline LogDet log_det(const RealMatrix& a) {
    Eigen::PartialPivLU<RealMatrix> lu(a);
    const RealMatrix& f = lu.matrixLU();
    LogDet out;
    out.sign = static_cast<int>(lu.permutationP().determinant());
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double u = f(i, i);
        if (u == 0.0 || !std::isfinite(u)) {
            out.sign = 0;
            out.log_abs = -std::numeric_limits<double>::infinity();
            return out;
        }
        if (u < 0.0) out.sign = -out.sign;
        out.log_abs += std::log(std::abs(u));
    }
    return out;
}

inline double hpd_log_det(const ComplexMatrix& m, const char* what) {
    Eigen::LLT<ComplexMatrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": matrix is not Hermitian PD");
    return 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
}

/// Deterministic equivalent of E C_M(zeta):
///   log det(T^{-1}) - N log zeta + sum_j log(1 + delta_j)
///   - (zeta / M) sum_{ij} sigma^2_ij T_ii T~_jj.
inline double emi_deterministic(const ChannelModel& model, const DeltaSolution& sol, const Resolvents& res) {
    const double zeta = sol.rho;
    const auto n = static_cast<double>(model.rows());
    const auto m = static_cast<double>(model.cols());
    double log_det_tinv = 0.0;
    if (model.centered()) {
        log_det_tinv = res.psi.array().inverse().log().sum();
    } else {
        log_det_tinv = hpd_log_det(detail::inverse_argument(model.los, res.psi, res.psi_tilde, zeta), "T^{-1}");
    }
    const double coupling = res.t_diag.dot(model.profile.values() * res.tt_diag);
    return log_det_tinv - n * std::log(zeta) + sol.delta.array().log1p().sum() - zeta / m * coupling;
}

/// Pi, Xi, Gamma and Lambda~ from the converged resolvents.
inline BMatrix build_B(const ChannelModel& model, const DeltaSolution& sol, const Resolvents& res) {
    const Eigen::Index m = model.cols();
    const double md = static_cast<double>(m);
    const RealMatrix& s = model.profile.values();
    const RealVector inv_sq = (1.0 + sol.delta.array()).square().inverse().matrix();

    RealMatrix pi = RealMatrix::Zero(m, m);
    RealMatrix xi = RealMatrix::Zero(m, m);
    if (!model.centered()) {
        const ComplexMatrix ta = res.T * model.los;
        pi = s.transpose() * ta.cwiseAbs2() / md;
        pi = pi * inv_sq.asDiagonal();
        const ComplexMatrix c = model.los.adjoint() * ta;
        xi = inv_sq.asDiagonal() * c.cwiseAbs2() * inv_sq.asDiagonal();
        xi.diagonal().setZero();
    }
    RealMatrix gamma = s.transpose() * res.T.cwiseAbs2() * s / (md * md);
    gamma = 0.5 * (gamma + gamma.transpose()).eval();
    const RealVector lambda_tilde = (sol.rho * res.tt_diag.array()).square().matrix();
    return BMatrix::assemble(std::move(pi), std::move(xi), std::move(gamma), lambda_tilde);
}

/// V = -log det(I_2M - B).
inline double variance_clt(const BMatrix& bm) {
    const Eigen::Index k = bm.b.rows();
    const LogDet ld = log_det(RealMatrix::Identity(k, k) - bm.b);
    if (ld.sign <= 0) throw InvalidRegimeError("variance_clt: det(I - B) is not positive");
    return -ld.log_abs;
}

/// -log det(I_M - Lambda~ Gamma): the centered (A = 0) form of variance_clt.
inline double variance_centered_reduction(const BMatrix& bm) {
    const Eigen::Index m = bm.m();
    const LogDet ld = log_det(RealMatrix::Identity(m, m) - bm.lambda_tilde.asDiagonal() * bm.gamma);
    if (ld.sign <= 0) throw InvalidRegimeError("variance_centered_reduction: det(I - Lambda Gamma) is not positive");
    return -ld.log_abs;
}

/// Variance from the nested systems: for each j, S_j = I_2j - B_j built from
/// the leading j x j blocks, p_j = S_j^{-1} q_j with
/// q_j = M [Gamma_{j,1..j}, Pi_{j,1..j}], and
///   V ~ (1/M) sum_j (2 p_j[2j] - Lambda~_jj p_j[j]).
/// Entries are evaluated by explicit sums, not through build_B.
inline double variance_linear_system_oracle(const ChannelModel& model, const DeltaSolution& sol,
                                            const Resolvents& res) {
    const Eigen::Index n = model.rows();
    const Eigen::Index m = model.cols();
    const double md = static_cast<double>(m);
    const RealMatrix& s = model.profile.values();
    const ComplexMatrix& t = res.T;
    const ComplexMatrix& a = model.los;

    // u_k = T a_k
    ComplexMatrix u = ComplexMatrix::Zero(n, m);
    if (!model.centered()) {
        for (Eigen::Index k = 0; k < m; ++k) {
            for (Eigen::Index p = 0; p < n; ++p) {
                Complex acc = 0.0;
                for (Eigen::Index q = 0; q < n; ++q) acc += t(p, q) * a(q, k);
                u(p, k) = acc;
            }
        }
    }
    auto one_plus_sq = [&](Eigen::Index j) { return (1.0 + sol.delta(j)) * (1.0 + sol.delta(j)); };
    auto pi_entry = [&](Eigen::Index j, Eigen::Index k) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) acc += s(i, j) * std::norm(u(i, k));
        return acc / (md * one_plus_sq(k));
    };
    auto xi_entry = [&](Eigen::Index j, Eigen::Index k) {
        if (j == k) return 0.0;
        Complex acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) acc += std::conj(a(i, j)) * u(i, k);
        return std::norm(acc) / (one_plus_sq(j) * one_plus_sq(k));
    };
    RealMatrix t_abs2(n, n);
    for (Eigen::Index q = 0; q < n; ++q) {
        for (Eigen::Index p = 0; p < n; ++p) t_abs2(p, q) = std::norm(t(p, q));
    }
    auto gamma_entry = [&](Eigen::Index j, Eigen::Index k) {
        double acc = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            double inner = 0.0;
            for (Eigen::Index q = 0; q < n; ++q) inner += t_abs2(p, q) * s(q, k);
            acc += s(p, j) * inner;
        }
        return acc / (md * md);
    };

    RealMatrix pi(m, m), xi(m, m), gamma(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < m; ++k) {
            pi(j, k) = pi_entry(j, k);
            xi(j, k) = xi_entry(j, k);
            gamma(j, k) = gamma_entry(j, k);
        }
    }
    RealVector lam(m);
    for (Eigen::Index j = 0; j < m; ++j) lam(j) = sol.rho * sol.rho * res.tt_diag(j) * res.tt_diag(j);

    double total = 0.0;
    for (Eigen::Index j = 1; j <= m; ++j) {
        RealMatrix sj = RealMatrix::Identity(2 * j, 2 * j);
        for (Eigen::Index r = 0; r < j; ++r) {
            for (Eigen::Index c = 0; c < j; ++c) {
                sj(r, c) -= pi(r, c);
                sj(r, j + c) -= gamma(r, c);
                sj(j + r, c) -= xi(r, c) + (r == c ? lam(r) : 0.0);
                sj(j + r, j + c) -= pi(c, r);
            }
        }
        RealVector q(2 * j);
        for (Eigen::Index k = 0; k < j; ++k) {
            q(k) = md * gamma(j - 1, k);
            q(j + k) = md * pi(j - 1, k);
        }
        Eigen::FullPivLU<RealMatrix> lu(sj);
        if (!lu.isInvertible()) {
            throw InvalidRegimeError("variance_linear_system_oracle: S_" + std::to_string(j) + " is singular");
        }
        const RealVector p = lu.solve(q);
        total += 2.0 * p(2 * j - 1) - lam(j - 1) * p(j - 1);
    }
    return total / md;
}

struct AsymptoticStats {
    double zeta = 0.0;
    double emi = 0.0;       // nats
    double variance = 0.0;  // nats^2
    DeltaSolution solution;
};

struct FullAnalysis {
    AsymptoticStats stats;
    Resolvents resolvents;
    BMatrix b;
};

inline FullAnalysis analyze_model(const ChannelModel& model, const SolverOptions& opt = {}) {
    SolverResult sr = solve_deltas(model, opt);
    FullAnalysis out;
    out.b = build_B(model, sr.solution, sr.resolvents);
    out.stats.zeta = model.zeta;
    out.stats.emi = emi_deterministic(model, sr.solution, sr.resolvents);
    out.stats.variance = variance_clt(out.b);
    out.stats.solution = std::move(sr.solution);
    out.resolvents = std::move(sr.resolvents);
    return out;
}

/// P(C < R) ~ Phi((R - C) / sqrt(V)).
inline double outage_probability(const AsymptoticStats& stats, double rate) {
    if (!(stats.variance > 0.0)) throw DomainError("outage_probability: variance must be positive");
    return normal_cdf((rate - stats.emi) / std::sqrt(stats.variance));
}

/// `points` rates spanning emi +- half_width * sqrt(V).
inline std::vector<double> auto_rate_grid(const AsymptoticStats& stats, int points = 101, double half_width = 5.0) {
    if (points < 2) throw DomainError("auto_rate_grid: need at least two points");
    const double sd = std::sqrt(stats.variance);
    std::vector<double> rates(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        rates[static_cast<std::size_t>(i)] =
            stats.emi - half_width * sd + 2.0 * half_width * sd * static_cast<double>(i) / (points - 1);
    }
    return rates;
}

}  // namespace holo_rmt
