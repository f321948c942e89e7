#include "grasshf/matops.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <sstream>
#include <stdexcept>

namespace grasshf {

Vector vec(const DenseMatrix& A) {
    return Eigen::Map<const Vector>(A.data(), A.size());
}

DenseMatrix unvec(const Vector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) {
        std::ostringstream msg;
        msg << "unvec: vector of length " << v.size() << " cannot fill a "
            << rows << "x" << cols << " matrix";
        throw std::invalid_argument(msg.str());
    }
    return Eigen::Map<const DenseMatrix>(v.data(), rows, cols);
}

DenseMatrix kron(const DenseMatrix& A, const DenseMatrix& B) {
    return Eigen::kroneckerProduct(A, B);
}

DenseMatrix hstack(const std::vector<DenseMatrix>& blocks) {
    if (blocks.empty()) return DenseMatrix(0, 0);
    const Index rows = blocks.front().rows();
    Index cols = 0;
    for (const auto& b : blocks) {
        if (b.rows() != rows)
            throw std::invalid_argument("hstack: row counts differ");
        cols += b.cols();
    }
    DenseMatrix out(rows, cols);
    Index at = 0;
    for (const auto& b : blocks) {
        out.middleCols(at, b.cols()) = b;
        at += b.cols();
    }
    return out;
}

DenseMatrix vstack(const std::vector<DenseMatrix>& blocks) {
    if (blocks.empty()) return DenseMatrix(0, 0);
    const Index cols = blocks.front().cols();
    Index rows = 0;
    for (const auto& b : blocks) {
        if (b.cols() != cols)
            throw std::invalid_argument("vstack: column counts differ");
        rows += b.rows();
    }
    DenseMatrix out(rows, cols);
    Index at = 0;
    for (const auto& b : blocks) {
        out.middleRows(at, b.rows()) = b;
        at += b.rows();
    }
    return out;
}

ThinSvd thin_svd(const DenseMatrix& M) {
    const Index d = M.rows();
    const Index n = M.cols();
    if (d < n)
        throw std::invalid_argument("thin_svd: expected rows >= cols");

    if (M.norm() < 1e-14) {
        ThinSvd out;
        out.U = DenseMatrix::Identity(d, n);
        out.D = Vector::Zero(n);
        out.V = DenseMatrix::Identity(n, n);
        return out;
    }

    Eigen::JacobiSVD<DenseMatrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "thin_svd: backend failed to converge on a " << d << "x" << n
            << " matrix with ||M||_F = " << M.norm();
        throw std::runtime_error(msg.str());
    }
    ThinSvd out;
    out.U = svd.matrixU();
    out.D = svd.singularValues();
    out.V = svd.matrixV().transpose();
    return out;
}

std::pair<DenseMatrix, DenseMatrix> spd_factor(const DenseMatrix& S) {
    if (S.rows() != S.cols())
        throw std::domain_error("spd_factor: matrix is not square");
    const double asym = (S - S.transpose()).norm();
    if (asym > 1e-12 * (1.0 + S.norm())) {
        std::ostringstream msg;
        msg << "spd_factor: matrix is not symmetric, ||S - S^T||_F = " << asym;
        throw std::domain_error(msg.str());
    }
    Eigen::LLT<DenseMatrix> llt(S);
    if (llt.info() != Eigen::Success) {
        // Report the smallest eigenvalue so the caller sees how non-SPD it is.
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(S, Eigen::EigenvaluesOnly);
        std::ostringstream msg;
        msg << "spd_factor: matrix is not positive-definite";
        if (es.info() == Eigen::Success && S.rows() > 0)
            msg << ", smallest eigenvalue " << es.eigenvalues()(0);
        throw std::domain_error(msg.str());
    }
    const DenseMatrix L = llt.matrixL();
    const DenseMatrix I = DenseMatrix::Identity(S.rows(), S.rows());
    DenseMatrix O = L.transpose().triangularView<Eigen::Upper>().solve(I);
    DenseMatrix O_inv = L.transpose();

    // One or two Loewdin polish passes tighten O^T S O = Id for
    // ill-conditioned inputs (plain Cholesky drifts like eps * cond(S)).
    // The drift measurement itself must run in extended precision: in double
    // arithmetic the product O^T S O carries rounding noise of order
    // eps * cond(S)^(3/4), which would swamp the correction.
    using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const LongMatrix S_long = S.cast<long double>();
    for (int pass = 0; pass < 2; ++pass) {
        const LongMatrix O_long = O.cast<long double>();
        const LongMatrix M_long = O_long.transpose() * S_long * O_long;
        const long double residual = (M_long - LongMatrix::Identity(S.rows(), S.rows())).norm();
        if (residual < 1e-13L * static_cast<long double>(S.rows())) break;
        DenseMatrix M = M_long.cast<double>();
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(M);
        if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0.0) break;
        const Vector inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
        const Vector sqrt_ev = es.eigenvalues().cwiseSqrt();
        const DenseMatrix& Q = es.eigenvectors();
        O = O * (Q * inv_sqrt.asDiagonal() * Q.transpose());
        O_inv = (Q * sqrt_ev.asDiagonal() * Q.transpose()) * O_inv;
    }
    return {std::move(O), std::move(O_inv)};
}

}  // namespace grasshf
