#pragma once

// Reproducible Gaussian streams.
//
// Every Monte-Carlo sample (and every synthetic LoS draw) gets its own
// substream: a std::mt19937_64 seeded through std::seed_seq with the four
// 32-bit halves of (seed, stream_index) plus a domain tag. Both engine and
// seed_seq are fully specified by the standard, so the bit stream is
// platform independent. Normals are produced by Box-Muller from 53-bit
// uniforms on the open interval (0, 1); std::normal_distribution is not used
// because its algorithm is implementation defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "types.hpp"

namespace holo_rmt {

enum class StreamTag : std::uint32_t {
    channel_sample = 0x4d43u,  // "MC"
    los_synthesis = 0x4c4fu,   // "LO"
    test_data = 0x5445u,       // "TE"
};

class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream_index, StreamTag tag = StreamTag::channel_sample) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_index & 0xffffffffu),
                          static_cast<std::uint32_t>(stream_index >> 32), static_cast<std::uint32_t>(tag)};
        engine_.seed(seq);
    }

    /// Uniform on (0, 1), 53 bits.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double standard_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    Complex complex_normal(double variance) {
        const double s = std::sqrt(0.5 * variance);
        const double re = standard_normal();
        const double im = standard_normal();
        return {s * re, s * im};
    }

    /// rows x cols matrix of CN(0, variance) entries, filled column-major.
    ComplexMatrix complex_matrix(Eigen::Index rows, Eigen::Index cols, double variance) {
        ComplexMatrix x(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) {
                x(i, j) = complex_normal(variance);
            }
        }
        return x;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace holo_rmt
