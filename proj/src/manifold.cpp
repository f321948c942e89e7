#include "grasshf/manifold.hpp"

#include <random>
#include <sstream>
#include <stdexcept>

namespace grasshf {

namespace {

void require_same_base(const GrassmannPoint& pt, const HorizontalTangent& tan,
                       const char* who) {
    const bool same_metric = pt.metric.get() == tan.base.metric.get();
    const bool same_rep = tan.base.C.rows() == pt.C.rows() &&
                          tan.base.C.cols() == pt.C.cols() &&
                          (tan.base.C - pt.C).norm() == 0.0;
    if (!same_metric || !same_rep) {
        std::ostringstream msg;
        msg << who << ": tangent does not sit at the given base point";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

MetricPtr make_metric(DenseMatrix S) {
    auto basis = std::make_shared<MetricBasis>();
    basis->d = S.rows();
    auto [O, O_inv] = spd_factor(S);
    basis->O = std::move(O);
    basis->O_inv = std::move(O_inv);
    basis->S_solver.compute(S);
    basis->S = std::move(S);
    return basis;
}

MetricPtr make_identity_metric(Index d) {
    return make_metric(DenseMatrix::Identity(d, d));
}

double feasibility_residual(const GrassmannPoint& pt) {
    const Index n = pt.n();
    return (pt.C.transpose() * pt.metric->S * pt.C - DenseMatrix::Identity(n, n)).norm();
}

GrassmannPoint make_point(MetricPtr metric, DenseMatrix C) {
    if (!metric) throw std::invalid_argument("make_point: null metric");
    if (C.rows() != metric->d || C.cols() > C.rows())
        throw std::invalid_argument("make_point: representative shape does not fit the metric");
    GrassmannPoint pt{std::move(metric), std::move(C)};
    const double residual = feasibility_residual(pt);
    if (!(residual <= 1e-10)) {
        std::ostringstream msg;
        msg << "make_point: representative infeasible, ||C^T S C - Id||_F = " << residual;
        throw std::invalid_argument(msg.str());
    }
    return pt;
}

DenseMatrix project_stiefel_tangent(const GrassmannPoint& pt, const DenseMatrix& mu) {
    const DenseMatrix SC = pt.metric->S * pt.C;
    const DenseMatrix CtSmu = SC.transpose() * mu;
    return mu - 0.5 * pt.C * (CtSmu + CtSmu.transpose());
}

HorizontalTangent project_horizontal(const GrassmannPoint& pt, const DenseMatrix& mu) {
    const DenseMatrix CtSmu = (pt.metric->S * pt.C).transpose() * mu;
    return {pt, mu - pt.C * CtSmu};
}

HorizontalTangent riemannian_gradient(const GrassmannPoint& pt, const DenseMatrix& euc_grad) {
    return project_horizontal(pt, pt.metric->apply_S_inv(euc_grad));
}

double inner(const GrassmannPoint& pt, const HorizontalTangent& eta,
             const HorizontalTangent& mu) {
    require_same_base(pt, eta, "inner");
    require_same_base(pt, mu, "inner");
    return (eta.eta.array() * (pt.metric->S * mu.eta).array()).sum();
}

GeodesicFactors geodesic_factors(const GrassmannPoint& pt, const HorizontalTangent& eta) {
    require_same_base(pt, eta, "geodesic_factors");
    GeodesicFactors f{pt, eta.eta, {}};
    f.svd = thin_svd(pt.metric->O_inv * eta.eta);
    return f;
}

GrassmannPoint geodesic_from(const GeodesicFactors& f, double t) {
    if (t == 0.0 || f.base.n() == 0) return f.base;
    const Vector angles = t * f.svd.D;
    const DenseMatrix C_new =
        (f.base.C * f.svd.V.transpose() * angles.array().cos().matrix().asDiagonal() +
         f.base.metric->O * f.svd.U * angles.array().sin().matrix().asDiagonal()) *
        f.svd.V;
    return {f.base.metric, C_new};
}

GrassmannPoint geodesic(const GrassmannPoint& pt, const HorizontalTangent& eta, double t) {
    return geodesic_from(geodesic_factors(pt, eta), t);
}

HorizontalTangent parallel_transport_from(const GeodesicFactors& f, const DenseMatrix& mu,
                                          double t) {
    GrassmannPoint dest = geodesic_from(f, t);
    if (t == 0.0 || f.base.n() == 0) return {std::move(dest), mu};
    const Vector angles = t * f.svd.D;
    const DenseMatrix rotated =
        -f.base.C * f.svd.V.transpose() * angles.array().sin().matrix().asDiagonal() +
        f.base.metric->O * f.svd.U * angles.array().cos().matrix().asDiagonal();
    const DenseMatrix Ut_Oinv_mu = f.svd.U.transpose() * (f.base.metric->O_inv * mu);
    // Rotate the component inside span(O U), keep the complement untouched.
    const DenseMatrix moved =
        mu + rotated * Ut_Oinv_mu - f.base.metric->O * (f.svd.U * Ut_Oinv_mu);
    return {std::move(dest), moved};
}

HorizontalTangent parallel_transport(const GrassmannPoint& pt, const HorizontalTangent& dir,
                                     const HorizontalTangent& mu, double t) {
    require_same_base(pt, mu, "parallel_transport");
    return parallel_transport_from(geodesic_factors(pt, dir), mu.eta, t);
}

HorizontalTangent transport_direction(const GeodesicFactors& f, double t) {
    GrassmannPoint dest = geodesic_from(f, t);
    if (t == 0.0 || f.base.n() == 0) return {std::move(dest), f.eta};
    const Vector angles = t * f.svd.D;
    const DenseMatrix moved =
        (-f.base.C * f.svd.V.transpose() * angles.array().sin().matrix().asDiagonal() +
         f.base.metric->O * f.svd.U * angles.array().cos().matrix().asDiagonal()) *
        f.svd.D.asDiagonal() * f.svd.V;
    return {std::move(dest), moved};
}

double product_inner(const ProductPoint& p, const ProductTangent& eta,
                     const ProductTangent& mu) {
    return inner(p.first, eta.first, mu.first) + inner(p.second, eta.second, mu.second);
}

double product_norm(const ProductPoint& p, const ProductTangent& eta) {
    return std::sqrt(product_inner(p, eta, eta));
}

ProductPoint product_exp(const ProductPoint& p, const ProductTangent& eta, double t) {
    return {geodesic(p.first, eta.first, t), geodesic(p.second, eta.second, t)};
}

std::pair<GrassmannPoint, DenseMatrix> reorthonormalize_with_transform(
    const GrassmannPoint& pt) {
    const Index n = pt.n();
    if (n == 0) return {pt, DenseMatrix(0, 0)};
    const DenseMatrix M = pt.C.transpose() * pt.metric->S * pt.C;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(M);
    if (es.info() != Eigen::Success)
        throw std::domain_error("reorthonormalize: eigensolver failed");
    if (es.eigenvalues()(0) < 1e-10) {
        std::ostringstream msg;
        msg << "reorthonormalize: representative is rank-deficient, smallest Gram eigenvalue "
            << es.eigenvalues()(0);
        throw std::domain_error(msg.str());
    }
    const Vector inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    DenseMatrix T = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
    return {GrassmannPoint{pt.metric, pt.C * T}, std::move(T)};
}

GrassmannPoint reorthonormalize(const GrassmannPoint& pt) {
    return reorthonormalize_with_transform(pt).first;
}

HorizontalTangent random_horizontal(const GrassmannPoint& pt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix raw(pt.d(), pt.n());
    for (Index j = 0; j < raw.cols(); ++j)
        for (Index i = 0; i < raw.rows(); ++i) raw(i, j) = gauss(rng);
    return project_horizontal(pt, raw);
}

GrassmannPoint random_point(MetricPtr metric, Index N, std::uint64_t seed) {
    if (!metric) throw std::invalid_argument("random_point: null metric");
    if (N < 0 || N > metric->d)
        throw std::invalid_argument("random_point: invalid column count");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix raw(metric->d, N);
    for (Index j = 0; j < N; ++j)
        for (Index i = 0; i < metric->d; ++i) raw(i, j) = gauss(rng);
    if (N == 0) return {std::move(metric), std::move(raw)};
    Eigen::HouseholderQR<DenseMatrix> qr(raw);
    DenseMatrix Q = qr.householderQ() * DenseMatrix::Identity(metric->d, N);
    // Columns of O Q are S-orthonormal since O^T S O = Id.
    return {metric, metric->O * Q};
}

}  // namespace grasshf
