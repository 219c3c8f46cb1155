#include "ssreid/eval.hpp"

#include "ssreid/error.hpp"
#include "ssreid/linalg.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ssreid {

Matrix distances(const Projection& p, const Matrix& probes, const Matrix& gallery) {
    if (probes.rows() != gallery.rows()) throw Error(ErrorKind::shape, "probe and gallery dimensions differ");
    return squared_distances(p.embed(probes), p.embed(gallery));
}

Matrix distances(const Projection& p, const FeatureSet& probes, const FeatureSet& gallery) {
    return distances(p, probes.features, gallery.features);
}

double CmcCurve::at(std::size_t rank) const {
    if (rates.empty() || rank == 0) return 0.0;
    return rates[std::min(rank, rates.size()) - 1];
}

RankingResult rank_by_distance(const Matrix& D) {
    RankingResult rr;
    rr.mode = MatchMode::single_shot;
    std::vector<Index> idx(static_cast<std::size_t>(D.cols()));
    for (Index i = 0; i < D.rows(); ++i) {
        std::iota(idx.begin(), idx.end(), Index{0});
        std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return D(i, a) < D(i, b); });
        std::vector<double> sc;
        for (Index j : idx) sc.push_back(D(i, j));
        rr.order.push_back(idx);
        rr.scores.push_back(std::move(sc));
    }
    return rr;
}

namespace {

// Ranked entries per probe as person keys; gallery columns without an id are their own entry.
CmcCurve accumulate(const std::vector<std::vector<std::optional<PersonId>>>& ranked_ids, const IdList& probe_ids,
                    std::size_t entries) {
    CmcCurve c;
    c.rates.assign(entries, 0.0);
    std::vector<std::size_t> hits(entries, 0);
    for (std::size_t i = 0; i < probe_ids.size(); ++i) {
        const auto& pid = probe_ids[i];
        std::size_t pos = entries;
        if (pid) {
            const auto& list = ranked_ids[i];
            for (std::size_t r = 0; r < list.size(); ++r)
                if (list[r] && *list[r] == *pid) {
                    pos = r;
                    break;
                }
        }
        if (pos == entries) {
            ++c.probes_excluded;
            continue;
        }
        ++c.probes_evaluated;
        ++hits[pos];
    }
    if (c.probes_evaluated == 0) return c;
    std::size_t cum = 0;
    for (std::size_t r = 0; r < entries; ++r) {
        cum += hits[r];
        c.rates[r] = static_cast<double>(cum) / static_cast<double>(c.probes_evaluated);
    }
    return c;
}

}  // namespace

CmcCurve cmc(const Matrix& D, const IdList& probe_ids, const IdList& gallery_ids, MatchMode mode) {
    if (D.cols() == 0) throw Error(ErrorKind::shape, "empty gallery");
    if (static_cast<Index>(probe_ids.size()) != D.rows() || static_cast<Index>(gallery_ids.size()) != D.cols())
        throw Error(ErrorKind::shape, "id lists do not match the distance matrix");
    if (mode == MatchMode::single_shot) return cmc(rank_by_distance(D), probe_ids, gallery_ids);

    // Multi-shot: one entry per gallery person scored by its closest image; anonymous columns stay separate.
    std::map<PersonId, std::size_t> slot;
    std::vector<std::vector<Index>> members;
    std::vector<std::optional<PersonId>> entry_id;
    for (std::size_t j = 0; j < gallery_ids.size(); ++j) {
        const auto& g = gallery_ids[j];
        if (g) {
            auto [it, fresh] = slot.emplace(*g, members.size());
            if (fresh) {
                members.emplace_back();
                entry_id.push_back(g);
            }
            members[it->second].push_back(static_cast<Index>(j));
        } else {
            members.push_back({static_cast<Index>(j)});
            entry_id.push_back(std::nullopt);
        }
    }
    const std::size_t E = members.size();
    std::vector<std::vector<std::optional<PersonId>>> ranked(probe_ids.size());
    std::vector<std::size_t> order(E);
    std::vector<double> best(E);
    for (Index i = 0; i < D.rows(); ++i) {
        for (std::size_t e = 0; e < E; ++e) {
            best[e] = D(i, members[e].front());
            for (Index j : members[e]) best[e] = std::min(best[e], D(i, j));
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return best[a] < best[b]; });
        for (std::size_t e : order) ranked[static_cast<std::size_t>(i)].push_back(entry_id[e]);
    }
    CmcCurve c = accumulate(ranked, probe_ids, E);
    return c;
}

CmcCurve cmc(const RankingResult& ranking, const IdList& probe_ids, const IdList& gallery_ids) {
    if (gallery_ids.empty()) throw Error(ErrorKind::shape, "empty gallery");
    if (ranking.order.size() != probe_ids.size()) throw Error(ErrorKind::shape, "ranking does not match the probes");
    std::vector<std::vector<std::optional<PersonId>>> ranked(probe_ids.size());
    for (std::size_t i = 0; i < probe_ids.size(); ++i) {
        if (ranking.order[i].size() != gallery_ids.size())
            throw Error(ErrorKind::shape, "ranking does not cover the gallery");
        for (Index j : ranking.order[i]) ranked[i].push_back(gallery_ids[static_cast<std::size_t>(j)]);
    }
    return accumulate(ranked, probe_ids, gallery_ids.size());
}

CmcCurve mean_curve(const std::vector<CmcCurve>& curves) {
    CmcCurve out;
    out.trials_mean = true;
    if (curves.empty()) return out;
    std::size_t len = 0;
    for (const auto& c : curves) len = std::max(len, c.rates.size());
    out.rates.assign(len, 0.0);
    for (const auto& c : curves) {
        for (std::size_t r = 0; r < len; ++r) out.rates[r] += c.at(r + 1);
        out.probes_evaluated += c.probes_evaluated;
        out.probes_excluded += c.probes_excluded;
    }
    for (double& v : out.rates) v /= static_cast<double>(curves.size());
    return out;
}

RankingResult manifold_rerank(const Matrix& Dpg, const Matrix& Dgg, double alpha, int k_graph) {
    const Index G = Dgg.rows();
    if (Dgg.cols() != G || Dpg.cols() != G) throw Error(ErrorKind::shape, "re-ranking distance shapes disagree");
    if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::domain, "alpha must lie in (0, 1)");
    if (k_graph < 1) throw Error(ErrorKind::parameter, "k_graph must be at least 1");
    if (G == 0) throw Error(ErrorKind::shape, "empty gallery");

    const Index k = std::min<Index>(k_graph, G - 1);
    std::vector<std::vector<Index>> nbr(static_cast<std::size_t>(G));
    double sum = 0.0;
    std::size_t cnt = 0;
    std::vector<Index> idx;
    for (Index i = 0; i < G; ++i) {
        idx.clear();
        for (Index j = 0; j < G; ++j)
            if (j != i) idx.push_back(j);
        std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Index a, Index b) {
            return Dgg(i, a) < Dgg(i, b) || (Dgg(i, a) == Dgg(i, b) && a < b);
        });
        nbr[static_cast<std::size_t>(i)].assign(idx.begin(), idx.begin() + k);
        for (Index t = 0; t < k; ++t) {
            sum += std::sqrt(std::max(0.0, Dgg(i, idx[static_cast<std::size_t>(t)])));
            ++cnt;
        }
    }
    double sigma = cnt ? sum / static_cast<double>(cnt) : 0.0;
    if (!(sigma > 0)) sigma = 1.0;
    const double denom = 2.0 * sigma * sigma;

    Matrix W = Matrix::Zero(G, G);
    for (Index i = 0; i < G; ++i)
        for (Index j : nbr[static_cast<std::size_t>(i)]) {
            const double a = std::exp(-std::max(0.0, Dgg(i, j)) / denom);
            W(i, j) = std::max(W(i, j), a);
            W(j, i) = std::max(W(j, i), a);
        }
    Vector deg = W.rowwise().sum();
    const double floor = 1e-12;
    for (Index i = 0; i < G; ++i) deg(i) = std::max(deg(i), floor);
    const Vector dinv = deg.cwiseSqrt().cwiseInverse();
    const Matrix S = dinv.asDiagonal() * W * dinv.asDiagonal();
    Matrix M = -alpha * S;
    M.diagonal().array() += 1.0;

    const Matrix Y = (-Dpg.array().max(0.0) / denom).exp().matrix().transpose();  // G x P
    const Matrix F = Eigen::LLT<Matrix>(M).solve(Y);

    RankingResult rr;
    rr.mode = MatchMode::single_shot;
    std::vector<Index> order(static_cast<std::size_t>(G));
    for (Index p = 0; p < Dpg.rows(); ++p) {
        std::iota(order.begin(), order.end(), Index{0});
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            if (F(a, p) != F(b, p)) return F(a, p) > F(b, p);
            if (Dpg(p, a) != Dpg(p, b)) return Dpg(p, a) < Dpg(p, b);
            return a < b;
        });
        std::vector<double> sc;
        for (Index j : order) sc.push_back(F(j, p));
        rr.order.push_back(order);
        rr.scores.push_back(std::move(sc));
    }
    return rr;
}

}  // namespace ssreid
