#pragma once

#include "ssreid/types.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testutil {

inline ssreid::Matrix random_matrix(std::mt19937_64& rng, ssreid::Index r, ssreid::Index c) {
    std::normal_distribution<double> n(0.0, 1.0);
    ssreid::Matrix m(r, c);
    for (ssreid::Index j = 0; j < c; ++j)
        for (ssreid::Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

inline ssreid::Matrix random_spd(std::mt19937_64& rng, ssreid::Index m, double shift = 0.1) {
    const ssreid::Matrix g = random_matrix(rng, m, m);
    ssreid::Matrix s = g * g.transpose();
    s.diagonal().array() += shift;
    return 0.5 * (s + s.transpose());
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    static std::mt19937_64 rng(std::random_device{}());
    auto p = std::filesystem::temp_directory_path() / ("ssreid_" + name + "_" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testutil
