#include "ssreid/eigensolve.hpp"

#include "ssreid/error.hpp"
#include "ssreid/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace ssreid {

Matrix regularize(const Matrix& B, double theta, Index m) {
    if (theta < 0) throw Error(ErrorKind::domain, "regularization weight must be nonnegative");
    if (m < 1) throw Error(ErrorKind::domain, "regularization needs a positive sample count");
    Matrix out = B;
    if (theta > 0) out.diagonal().array() += theta * B.trace() / static_cast<double>(m);
    return out;
}

EigenPairs smallest_eigenvectors(const GeneralizedEigenProblem& problem, Index r) {
    const Index m = problem.A.rows();
    if (problem.A.cols() != m || problem.B.rows() != m || problem.B.cols() != m)
        throw Error(ErrorKind::shape, "pencil matrices must be square and of equal size");
    if (r > m) throw Error(ErrorKind::domain, "requested " + std::to_string(r) + " eigenvectors of a " +
                                                  std::to_string(m) + "x" + std::to_string(m) + " pencil");
    if (r < 0) throw Error(ErrorKind::domain, "negative eigenvector count");
    if (relative_asymmetry(problem.A) > 1e-10 || relative_asymmetry(problem.B) > 1e-10)
        throw Error(ErrorKind::invariant, "pencil matrices are not symmetric");

    const Matrix A = symmetrize(problem.A);
    const Matrix B = symmetrize(regularize(problem.B, problem.theta, m));

    Eigen::LLT<Matrix> llt(B);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::conditioning, "regularized constraint matrix is not positive definite");
    const auto L = llt.matrixL();
    // C = L^-1 A L^-T
    Matrix C = L.solve(A);
    C = L.solve(C.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(C));
    if (es.info() != Eigen::Success) throw Error(ErrorKind::conditioning, "symmetric eigensolver failed");

    EigenPairs out;
    out.values = es.eigenvalues().head(r);
    out.vectors = llt.matrixU().solve(es.eigenvectors().leftCols(r));
    for (Index j = 0; j < r; ++j) {
        Index imax = 0;
        out.vectors.col(j).cwiseAbs().maxCoeff(&imax);
        if (out.vectors(imax, j) < 0) out.vectors.col(j) *= -1.0;
    }
    return out;
}

}  // namespace ssreid
