#pragma once

#include "ssreid/types.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace ssreid {

enum class WeightRole { labeled, pseudo };

struct WeightMatrix {
    Matrix W;
    WeightRole role = WeightRole::labeled;
};

struct LaplacianPair {
    Matrix L;
    Vector degree;

    Matrix D() const { return degree.asDiagonal(); }
};

// W(i, j) = 1 iff ids[i] == ids[j], diagonal included.
WeightMatrix label_weights(const std::vector<PersonId>& ids);

// Cross-view k-NN graph over the columns of Z; candidates are restricted to other views,
// ties go to the lower index, and the result is symmetrized with the OR rule.
WeightMatrix knn_cross_view_weights(const Matrix& Z, const std::vector<int>& views, int k);

LaplacianPair laplacian(const WeightMatrix& W);

// Undirected off-diagonal edges.
std::size_t edge_count(const WeightMatrix& W);
std::size_t changed_edges(const WeightMatrix& a, const WeightMatrix& b);
std::size_t union_edges(const WeightMatrix& a, const WeightMatrix& b);

void write_matrix_market(const WeightMatrix& W, std::ostream& out);

}  // namespace ssreid
