#pragma once

#include <array>
#include <vector>

#include "yatnn/matrix.hpp"
#include "yatnn/rng.hpp"

namespace yatnn {

struct SymEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // column j is the eigenvector of values[j]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps until the
// off-diagonal Frobenius norm drops below `off_tol`.
SymEigen jacobi_eigen(const Matrix& sym, double off_tol = 1e-12, int max_sweeps = 64);

struct Pca2d {
    Matrix points;                             // m x 2 projections
    std::array<double, 2> variance_explained;  // fractions, non-increasing
};

// Projects the rows of x onto the top-2 principal axes of their covariance.
// Each component is sign-fixed so its largest-magnitude loading is positive.
// When there are fewer columns than rows the covariance is decomposed
// directly; otherwise the equivalent row-Gram decomposition is used so the
// eigenproblem never exceeds min(rows, cols) in size.
Pca2d pca_2d(const Matrix& x);

// Random matrix with orthonormal rows (rows <= cols) or orthonormal columns
// (rows > cols), obtained by QR of a standard-normal draw.
Matrix orthogonal_init(std::size_t rows, std::size_t cols, RngState& rng);

}  // namespace yatnn
