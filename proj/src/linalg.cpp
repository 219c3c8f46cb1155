#include "ssreid/linalg.hpp"

#include "ssreid/error.hpp"

namespace ssreid {

Matrix squared_distances(const Matrix& X, const Matrix& Y) {
    if (X.rows() != Y.rows())
        throw Error(ErrorKind::shape, "squared_distances: dimension mismatch " +
                                          std::to_string(X.rows()) + " vs " + std::to_string(Y.rows()));
    Matrix D(X.cols(), Y.cols());
    for (Index j = 0; j < Y.cols(); ++j)
        for (Index i = 0; i < X.cols(); ++i)
            D(i, j) = (X.col(i) - Y.col(j)).squaredNorm();
    return D;
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double relative_asymmetry(const Matrix& M) {
    const double scale = M.norm();
    if (scale == 0.0) return 0.0;
    return (M - M.transpose()).norm() / scale;
}

}  // namespace ssreid
