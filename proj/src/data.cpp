#include "ssreid/data.hpp"

#include "ssreid/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace ssreid {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

LabeledPartition split_by_ratio(const FeatureSet& fs, const Ratio& ratio, std::uint64_t seed) {
    if (ratio.num <= 0 || ratio.den <= 0 || ratio.num > ratio.den)
        throw Error(ErrorKind::domain, "ratio must lie in (0, 1]");
    for (std::size_t i = 0; i < fs.person_id.size(); ++i)
        if (!fs.person_id[i])
            throw Error(ErrorKind::invariant, "training sample " + std::to_string(i) + " has no person id");
    auto persons = fs.distinct_persons();
    if (persons.empty()) throw Error(ErrorKind::shape, "no training persons");
    std::mt19937_64 rng(seed);
    std::shuffle(persons.begin(), persons.end(), rng);
    const auto nl = ratio.labeled_count(persons.size());
    const std::set<PersonId> labeled(persons.begin(), persons.begin() + static_cast<std::ptrdiff_t>(nl));

    LabeledPartition part;
    part.ratio = ratio;
    for (Index j = 0; j < fs.size(); ++j) {
        if (labeled.count(*fs.person_id[static_cast<std::size_t>(j)])) part.labeled_indices.push_back(j);
        else part.unlabeled_indices.push_back(j);
    }
    return part;
}

FeatureSet generate_synthetic_crossview(int persons, int images_per_view, int latent_dim,
                                        double noise_sigma, std::uint64_t seed,
                                        const SyntheticOptions& options, Matrix* latent_out) {
    if (persons < 2) throw Error(ErrorKind::domain, "need at least 2 persons");
    if (latent_dim < 1) throw Error(ErrorKind::domain, "latent_dim must be positive");
    if (images_per_view < 1) throw Error(ErrorKind::domain, "images_per_view must be positive");
    if (options.feature_dim < 1) throw Error(ErrorKind::domain, "feature_dim must be positive");
    if (options.views < 2) throw Error(ErrorKind::domain, "need at least 2 views");
    if (noise_sigma < 0 || options.view_shift < 0) throw Error(ErrorKind::domain, "noise and view shift must be nonnegative");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto gaussian = [&](Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
        return m;
    };

    const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
    const Matrix latent = gaussian(latent_dim, persons);
    const Matrix shared = gaussian(options.feature_dim, latent_dim) * scale;
    std::vector<Matrix> maps;
    for (int v = 0; v < options.views; ++v)
        maps.push_back(shared + options.view_shift * scale * gaussian(options.feature_dim, latent_dim));

    FeatureSet fs;
    const Index total = static_cast<Index>(options.views) * images_per_view * persons;
    fs.features.resize(options.feature_dim, total);
    Index col = 0;
    for (int v = 0; v < options.views; ++v) {
        for (int img = 0; img < images_per_view; ++img) {
            const Matrix block = maps[static_cast<std::size_t>(v)] * latent +
                                 noise_sigma * gaussian(options.feature_dim, persons);
            for (int p = 0; p < persons; ++p) {
                fs.features.col(col++) = block.col(p);
                fs.person_id.emplace_back(p);
                fs.view_id.push_back(v);
                fs.split.push_back(SplitTag::unlabeled);
            }
        }
    }
    if (latent_out) *latent_out = latent;
    return fs;
}

}  // namespace ssreid
