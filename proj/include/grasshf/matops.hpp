#pragma once

#include <Eigen/Dense>

namespace grasshf {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Columnwise vectorization: out[i + rows*j] = A(i, j).
Vector vec(const DenseMatrix& A);

// Inverse of vec. Throws std::invalid_argument if v.size() != rows*cols.
DenseMatrix unvec(const Vector& v, Index rows, Index cols);

// Kronecker product, block (i,j) of the result is A(i,j)*B.
DenseMatrix kron(const DenseMatrix& A, const DenseMatrix& B);

// Horizontal / vertical concatenation in argument order.
// Throws std::invalid_argument on mismatched shared dimension.
DenseMatrix hstack(const std::vector<DenseMatrix>& blocks);
DenseMatrix vstack(const std::vector<DenseMatrix>& blocks);

// Thin SVD in the convention M = U * D.asDiagonal() * V where V is
// orthogonal and NOT transposed (a conventional U*S*W^T backend maps to
// V = W^T). D holds the singular values, descending.
struct ThinSvd {
    DenseMatrix U;  // d x N, orthonormal columns
    Vector D;       // N, nonnegative, descending
    DenseMatrix V;  // N x N, orthogonal
};

// Requires M.rows() >= M.cols(). A matrix with ||M||_F < 1e-14 short-circuits
// to U = first N columns of the identity, D = 0, V = Id (keeps zero-tangent
// geodesics away from backend edge cases).
ThinSvd thin_svd(const DenseMatrix& M);

// Factor a symmetric positive-definite S as O^T S O = Id via Cholesky
// S = L L^T, O = L^{-T}. Returns (O, O_inv). Throws std::domain_error when
// S is not symmetric or not positive-definite.
std::pair<DenseMatrix, DenseMatrix> spd_factor(const DenseMatrix& S);

}  // namespace grasshf
