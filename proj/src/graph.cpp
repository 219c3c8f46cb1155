#include "ssreid/graph.hpp"

#include "ssreid/error.hpp"
#include "ssreid/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace ssreid {

WeightMatrix label_weights(const std::vector<PersonId>& ids) {
    const auto n = static_cast<Index>(ids.size());
    WeightMatrix w{Matrix::Zero(n, n), WeightRole::labeled};
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(j)]) w.W(i, j) = 1.0;
    return w;
}

WeightMatrix knn_cross_view_weights(const Matrix& Z, const std::vector<int>& views, int k) {
    const Index u = Z.cols();
    if (static_cast<Index>(views.size()) != u)
        throw Error(ErrorKind::shape, "view list does not match the number of samples");
    if (k < 1) throw Error(ErrorKind::parameter, "k must be at least 1");

    const Matrix D = squared_distances(Z, Z);
    WeightMatrix w{Matrix::Zero(u, u), WeightRole::pseudo};
    std::vector<Index> cand;
    for (Index i = 0; i < u; ++i) {
        cand.clear();
        for (Index j = 0; j < u; ++j)
            if (views[static_cast<std::size_t>(j)] != views[static_cast<std::size_t>(i)]) cand.push_back(j);
        if (static_cast<Index>(cand.size()) < k)
            throw Error(ErrorKind::parameter, "sample " + std::to_string(i) + " has " + std::to_string(cand.size()) +
                                                  " cross-view candidates, fewer than k=" + std::to_string(k));
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), [&](Index a, Index b) {
            return D(i, a) < D(i, b) || (D(i, a) == D(i, b) && a < b);
        });
        for (int t = 0; t < k; ++t) {
            w.W(i, cand[static_cast<std::size_t>(t)]) = 1.0;
            w.W(cand[static_cast<std::size_t>(t)], i) = 1.0;
        }
    }
    return w;
}

LaplacianPair laplacian(const WeightMatrix& w) {
    if (w.W.rows() != w.W.cols()) throw Error(ErrorKind::shape, "weight matrix is not square");
    if (w.W != w.W.transpose()) throw Error(ErrorKind::invariant, "weight matrix is not symmetric");
    if ((w.W.array() < 0).any()) throw Error(ErrorKind::invariant, "weight matrix has negative entries");
    LaplacianPair lp;
    lp.degree = w.W.rowwise().sum();
    lp.L = -w.W;
    lp.L.diagonal() += lp.degree;
    return lp;
}

std::size_t edge_count(const WeightMatrix& w) {
    std::size_t n = 0;
    for (Index j = 0; j < w.W.cols(); ++j)
        for (Index i = 0; i < j; ++i)
            if (w.W(i, j) != 0.0) ++n;
    return n;
}

std::size_t changed_edges(const WeightMatrix& a, const WeightMatrix& b) {
    if (a.W.size() == 0) return edge_count(b);
    if (b.W.size() == 0) return edge_count(a);
    if (a.W.rows() != b.W.rows()) throw Error(ErrorKind::shape, "graphs differ in size");
    std::size_t n = 0;
    for (Index j = 0; j < a.W.cols(); ++j)
        for (Index i = 0; i < j; ++i)
            if ((a.W(i, j) != 0.0) != (b.W(i, j) != 0.0)) ++n;
    return n;
}

std::size_t union_edges(const WeightMatrix& a, const WeightMatrix& b) {
    if (a.W.size() == 0) return edge_count(b);
    if (b.W.size() == 0) return edge_count(a);
    if (a.W.rows() != b.W.rows()) throw Error(ErrorKind::shape, "graphs differ in size");
    std::size_t n = 0;
    for (Index j = 0; j < a.W.cols(); ++j)
        for (Index i = 0; i < j; ++i)
            if (a.W(i, j) != 0.0 || b.W(i, j) != 0.0) ++n;
    return n;
}

void write_matrix_market(const WeightMatrix& w, std::ostream& out) {
    std::size_t nnz = 0;
    for (Index j = 0; j < w.W.cols(); ++j)
        for (Index i = j; i < w.W.rows(); ++i)
            if (w.W(i, j) != 0.0) ++nnz;
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << "% role=" << (w.role == WeightRole::labeled ? "labeled" : "pseudo") << "\n";
    out << w.W.rows() << ' ' << w.W.cols() << ' ' << nnz << '\n';
    for (Index j = 0; j < w.W.cols(); ++j)
        for (Index i = j; i < w.W.rows(); ++i)
            if (w.W(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << w.W(i, j) << '\n';
}

}  // namespace ssreid
