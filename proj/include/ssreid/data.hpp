#pragma once

#include "ssreid/types.hpp"

#include <cstdint>

namespace ssreid {

// Person-level split; all columns of fs are treated as training columns.
LabeledPartition split_by_ratio(const FeatureSet& fs, const Ratio& ratio, std::uint64_t seed);

struct SyntheticOptions {
    int feature_dim = 32;
    int views = 2;
    // Size of the view-specific perturbation of the shared observation map.
    double view_shift = 0.7;
};

// Each person gets a latent vector z; view v observes A_v z + noise_sigma * e with
// A_v = A + view_shift * E_v. Columns are ordered view, image, person and are tagged unlabeled.
FeatureSet generate_synthetic_crossview(int persons, int images_per_view, int latent_dim,
                                        double noise_sigma, std::uint64_t seed,
                                        const SyntheticOptions& options = {},
                                        Matrix* latent_out = nullptr);

// Deterministic 64-bit mixer used to derive per-trial seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ssreid
