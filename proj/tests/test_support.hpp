#pragma once

#include <filesystem>
#include <string>

#include "holo_rmt/holo_rmt.hpp"

namespace holo_rmt::test {

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path(HOLO_RMT_TEST_TMP) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline RealMatrix random_profile(Eigen::Index n, Eigen::Index m, std::uint64_t seed, double lo = 0.2,
                                 double hi = 1.8) {
    GaussianStream g(seed, 0, StreamTag::test_data);
    RealMatrix s(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i) s(i, j) = lo + (hi - lo) * g.uniform();
    return s;
}

inline ComplexMatrix random_complex(Eigen::Index n, Eigen::Index m, std::uint64_t seed, double variance = 1.0) {
    GaussianStream g(seed, 1, StreamTag::test_data);
    return g.complex_matrix(n, m, variance);
}

inline ChannelModel random_model(Eigen::Index n, Eigen::Index m, std::uint64_t seed, double zeta = 0.5,
                                 double los_scale = 1.0) {
    ComplexMatrix a = random_complex(n, m, seed, los_scale * los_scale / static_cast<double>(m));
    return build_weichselberger(a, VarianceProfile::from_matrix(random_profile(n, m, seed)), zeta);
}

inline ChannelModel iid_model(Eigen::Index n, Eigen::Index m, double zeta) {
    return build_weichselberger(ComplexMatrix::Zero(n, m), VarianceProfile::from_matrix(RealMatrix::Ones(n, m)),
                                zeta);
}

/// Haar-like unitary from the QR factorization of a Gaussian matrix.
inline ComplexMatrix random_unitary(Eigen::Index n, std::uint64_t seed) {
    const ComplexMatrix g = random_complex(n, n, seed);
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    return qr.householderQ() * ComplexMatrix::Identity(n, n);
}

}  // namespace holo_rmt::test
