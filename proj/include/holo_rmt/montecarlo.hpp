#pragma once

// Monte-Carlo sampling of C_M(zeta) and the empirical statistics used to
// check the closed-form results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <utility>
#include <vector>

#include "asymptotics.hpp"
#include "channel.hpp"
#include "normal.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "types.hpp"

namespace holo_rmt {

/// H = A + Sigma^{o1/2} (.) X with X_ij ~ CN(0, 1/M).
inline ComplexMatrix sample_channel(const ChannelModel& model, GaussianStream& rng) {
    const ComplexMatrix x = rng.complex_matrix(model.rows(), model.cols(), 1.0 / static_cast<double>(model.cols()));
    return model.los + model.profile.scale_noise(x);
}

/// log det(I + H H^H / zeta), evaluated on the smaller Gram matrix.
inline double compute_mi(const ComplexMatrix& h, double zeta) {
    if (!(zeta > 0.0)) throw DomainError("compute_mi: zeta must be positive");
    ComplexMatrix g = h.rows() <= h.cols() ? ComplexMatrix(h * h.adjoint()) : ComplexMatrix(h.adjoint() * h);
    g /= zeta;
    g.diagonal().array() += 1.0;
    Eigen::LLT<ComplexMatrix> llt(g);
    if (llt.info() != Eigen::Success) throw NumericalError("compute_mi: I + G/zeta is not Hermitian PD");
    return 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
}

/// 64-bit FNV-1a over the raw bytes of A, Sigma and zeta.
inline std::uint64_t model_digest(const ChannelModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    const std::int64_t dims[] = {model.rows(), model.cols()};
    feed(dims, sizeof dims);
    feed(model.los.data(), sizeof(Complex) * static_cast<std::size_t>(model.los.size()));
    feed(model.profile.values().data(), sizeof(double) * static_cast<std::size_t>(model.profile.values().size()));
    feed(&model.zeta, sizeof model.zeta);
    return h;
}

class MiSampleSet {
public:
    MiSampleSet() = default;
    MiSampleSet(std::vector<double> samples, std::uint64_t seed, std::uint64_t digest, std::uint64_t first_index = 0)
        : samples_(std::move(samples)), seed_(seed), digest_(digest), first_index_(first_index) {
        sorted_ = samples_;
        std::sort(sorted_.begin(), sorted_.end());
    }

    const std::vector<double>& samples() const { return samples_; }
    const std::vector<double>& sorted() const { return sorted_; }
    std::size_t size() const { return samples_.size(); }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t digest() const { return digest_; }
    std::uint64_t first_index() const { return first_index_; }

    double mean() const {
        if (samples_.empty()) throw DomainError("MiSampleSet: empty");
        double acc = 0.0;
        for (double x : samples_) acc += x;
        return acc / static_cast<double>(samples_.size());
    }

    /// Unbiased sample variance; absent for fewer than two samples.
    std::optional<double> variance() const {
        if (samples_.size() < 2) return std::nullopt;
        const double mu = mean();
        double acc = 0.0;
        for (double x : samples_) acc += (x - mu) * (x - mu);
        return acc / static_cast<double>(samples_.size() - 1);
    }

    std::optional<double> standard_error() const {
        const auto v = variance();
        if (!v) return std::nullopt;
        return std::sqrt(*v / static_cast<double>(samples_.size()));
    }

    /// Concatenation in sample-index order; both sets must come from the same
    /// seed and model, with `next` starting where this one ends.
    MiSampleSet merged(const MiSampleSet& next) const {
        if (next.seed_ != seed_ || next.digest_ != digest_) {
            throw DomainError("MiSampleSet::merged: seed or model differ");
        }
        if (next.first_index_ != first_index_ + samples_.size()) {
            throw DomainError("MiSampleSet::merged: sample index ranges are not contiguous");
        }
        std::vector<double> all = samples_;
        all.insert(all.end(), next.samples_.begin(), next.samples_.end());
        return MiSampleSet(std::move(all), seed_, digest_, first_index_);
    }

private:
    std::vector<double> samples_;
    std::vector<double> sorted_;
    std::uint64_t seed_ = 0;
    std::uint64_t digest_ = 0;
    std::uint64_t first_index_ = 0;
};

/// Samples first_index .. first_index + count - 1; sample k draws from its own
/// stream (seed, k), so results do not depend on thread count or partitioning.
inline MiSampleSet run_mc(const ChannelModel& model, std::size_t count, std::uint64_t seed,
                          std::uint64_t first_index = 0, unsigned threads = thread_count()) {
    if (count < 1) throw DomainError("run_mc: sample count must be at least 1");
    model.validate();
    std::vector<double> out(count);
    parallel_for(
        count,
        [&](std::size_t i) {
            GaussianStream rng(seed, first_index + i, StreamTag::channel_sample);
            out[i] = compute_mi(sample_channel(model, rng), model.zeta);
        },
        threads);
    return MiSampleSet(std::move(out), seed, model_digest(model), first_index);
}

inline std::vector<double> normalized_samples(const MiSampleSet& set, const AsymptoticStats& stats) {
    if (!(stats.variance > 0.0)) throw DomainError("normalized_samples: variance must be positive");
    const double sd = std::sqrt(stats.variance);
    std::vector<double> out;
    out.reserve(set.size());
    for (double x : set.samples()) out.push_back((x - stats.emi) / sd);
    return out;
}

/// Two-sided Kolmogorov-Smirnov distance to the standard normal.
inline double ks_statistic(std::vector<double> x) {
    if (x.empty()) throw DomainError("ks_statistic: empty input");
    std::sort(x.begin(), x.end());
    const double s = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = normal_cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / s - f, f - static_cast<double>(i) / s});
    }
    return d;
}

struct QQPoint {
    double theoretical = 0.0;
    double empirical = 0.0;
};

inline std::vector<QQPoint> qq_data(std::vector<double> x) {
    if (x.empty()) throw DomainError("qq_data: empty input");
    std::sort(x.begin(), x.end());
    const double s = static_cast<double>(x.size());
    std::vector<QQPoint> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = {normal_quantile((static_cast<double>(i) + 0.5) / s), x[i]};
    }
    return out;
}

/// Least-squares slope of empirical on theoretical quantiles.
inline double qq_slope(const std::vector<QQPoint>& qq) {
    if (qq.size() < 2) throw DomainError("qq_slope: need at least two points");
    double mx = 0.0, my = 0.0;
    for (const auto& p : qq) {
        mx += p.theoretical;
        my += p.empirical;
    }
    mx /= static_cast<double>(qq.size());
    my /= static_cast<double>(qq.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : qq) {
        sxy += (p.theoretical - mx) * (p.empirical - my);
        sxx += (p.theoretical - mx) * (p.theoretical - mx);
    }
    return sxy / sxx;
}

/// Fraction of samples strictly below `rate`.
inline double empirical_outage(const MiSampleSet& set, double rate) {
    if (set.size() == 0) throw DomainError("empirical_outage: empty sample set");
    const auto& s = set.sorted();
    const auto it = std::lower_bound(s.begin(), s.end(), rate);
    return static_cast<double>(it - s.begin()) / static_cast<double>(s.size());
}

/// sup over the grid of |Phi((R - C) / sqrt(V)) - empirical P(C < R)|.
inline double outage_sup_deviation(const MiSampleSet& set, const AsymptoticStats& stats,
                                   const std::vector<double>& rates) {
    double d = 0.0;
    for (double r : rates) d = std::max(d, std::abs(outage_probability(stats, r) - empirical_outage(set, r)));
    return d;
}

}  // namespace holo_rmt
