#pragma once

#include "dko/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

inline std::vector<double> normals(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    dko::NoiseStream s(seed, 7, 7);
    std::vector<double> v(n);
    for (auto& x : v) x = scale * s.normal();
    return v;
}

inline std::vector<double> uniforms(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    dko::NoiseStream s(seed, 9, 9);
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * s.uniform();
    return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    dko::NoiseStream s(seed, 3, 3);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = s.normal();
    return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("dko_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testutil
