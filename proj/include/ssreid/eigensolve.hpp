#pragma once

#include "ssreid/types.hpp"

namespace ssreid {

struct GeneralizedEigenProblem {
    Matrix A;
    Matrix B;
    double theta = 0.0;
};

struct EigenPairs {
    Vector values;   // ascending
    Matrix vectors;  // columns are B'-orthonormal
};

// B + theta * tr(B) / m * I
Matrix regularize(const Matrix& B, double theta, Index m);

// r smallest eigenpairs of A v = lambda B' v with B' = regularize(B, theta, size).
// The largest-magnitude entry of every returned vector is positive.
EigenPairs smallest_eigenvectors(const GeneralizedEigenProblem& problem, Index r);

}  // namespace ssreid
