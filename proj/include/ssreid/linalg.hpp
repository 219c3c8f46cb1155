#pragma once

#include "ssreid/types.hpp"

namespace ssreid {

// D(i, j) = ||X.col(i) - Y.col(j)||^2, computed from differences so identical columns give exactly 0.
Matrix squared_distances(const Matrix& X, const Matrix& Y);

Matrix symmetrize(const Matrix& M);
double relative_asymmetry(const Matrix& M);

}  // namespace ssreid
