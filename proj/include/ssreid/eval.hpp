#pragma once

#include "ssreid/types.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace ssreid {

// Squared Euclidean distances between projected probes (rows) and gallery (columns).
Matrix distances(const Projection& p, const Matrix& probes, const Matrix& gallery);
Matrix distances(const Projection& p, const FeatureSet& probes, const FeatureSet& gallery);

struct RankingResult {
    std::vector<std::vector<Index>> order;    // per probe, a permutation of gallery indices
    std::vector<std::vector<double>> scores;  // aligned with order
    MatchMode mode = MatchMode::single_shot;
};

struct CmcCurve {
    std::vector<double> rates;  // rates[r-1] = fraction matched within rank r
    std::size_t probes_evaluated = 0;
    std::size_t probes_excluded = 0;
    bool trials_mean = false;

    double at(std::size_t rank) const;
};

using IdList = std::vector<std::optional<PersonId>>;

// Ascending distance, ties by gallery index.
RankingResult rank_by_distance(const Matrix& D);

CmcCurve cmc(const Matrix& D, const IdList& probe_ids, const IdList& gallery_ids,
             MatchMode mode = MatchMode::single_shot);
CmcCurve cmc(const RankingResult& ranking, const IdList& probe_ids, const IdList& gallery_ids);

CmcCurve mean_curve(const std::vector<CmcCurve>& curves);

RankingResult manifold_rerank(const Matrix& D_probe_gallery, const Matrix& D_gallery_gallery,
                              double alpha = 0.95, int k_graph = 10);

}  // namespace ssreid
