#pragma once

#include <memory>
#include <utility>

#include "grasshf/matops.hpp"

namespace grasshf {

// Geometry of the generalized Stiefel manifold {C : C^T S C = Id} under the
// inner product <A|B> = tr(A^T S B), and of its Grassmann quotient (classes
// [C] under right orthogonal rotation). Tangent vectors to the quotient are
// represented by horizontal matrices, C^T S eta = 0.

// The metric matrix S together with a factor O satisfying O^T S O = Id and a
// linear-solve handle for S. Immutable and shareable across threads.
struct MetricBasis {
    Index d = 0;
    DenseMatrix S;
    DenseMatrix O;
    DenseMatrix O_inv;
    Eigen::LLT<DenseMatrix> S_solver;

    DenseMatrix apply_S_inv(const DenseMatrix& rhs) const { return S_solver.solve(rhs); }
};

using MetricPtr = std::shared_ptr<const MetricBasis>;

// Validates symmetry/positive-definiteness and builds the factors.
MetricPtr make_metric(DenseMatrix S);
MetricPtr make_identity_metric(Index d);

// A Stiefel representative C (d x N, C^T S C = Id) standing for its class.
struct GrassmannPoint {
    MetricPtr metric;
    DenseMatrix C;

    Index d() const { return C.rows(); }
    Index n() const { return C.cols(); }
};

// Checked constructor: throws std::invalid_argument when ||C^T S C - Id|| > 1e-10.
GrassmannPoint make_point(MetricPtr metric, DenseMatrix C);

double feasibility_residual(const GrassmannPoint& pt);

// Horizontal tangent at a base point: C^T S eta = 0.
struct HorizontalTangent {
    GrassmannPoint base;
    DenseMatrix eta;
};

struct ProductPoint {
    GrassmannPoint first;
    GrassmannPoint second;
};

struct ProductTangent {
    HorizontalTangent first;
    HorizontalTangent second;
};

// Projection onto the Stiefel tangent space at C:
// mu - C (C^T S mu + mu^T S C) / 2; the output nu satisfies
// C^T S nu antisymmetric.
DenseMatrix project_stiefel_tangent(const GrassmannPoint& pt, const DenseMatrix& mu);

// Horizontal projection (Id - C C^T S) mu.
HorizontalTangent project_horizontal(const GrassmannPoint& pt, const DenseMatrix& mu);

// Converts the Euclidean gradient of a lifted cost into the Riemannian
// gradient: horizontal projection of S^{-1} * euc_grad.
HorizontalTangent riemannian_gradient(const GrassmannPoint& pt, const DenseMatrix& euc_grad);

// tr(eta^T S mu). Throws std::invalid_argument when the tangents sit at
// different base points.
double inner(const GrassmannPoint& pt, const HorizontalTangent& eta,
             const HorizontalTangent& mu);

// Shared factorization for the geodesic through pt with initial velocity eta:
// the thin SVD of O^{-1} eta. Lets one iteration reuse it for the exponential
// and for every transport along the same curve.
struct GeodesicFactors {
    GrassmannPoint base;
    DenseMatrix eta;
    ThinSvd svd;  // O_inv * eta = U * diag(D) * V
};

GeodesicFactors geodesic_factors(const GrassmannPoint& pt, const HorizontalTangent& eta);

// gamma(t) = (C V^T cos(tD) + O U sin(tD)) V; stays on the manifold for all t.
GrassmannPoint geodesic_from(const GeodesicFactors& f, double t);
GrassmannPoint geodesic(const GrassmannPoint& pt, const HorizontalTangent& eta, double t);

// Parallel transport of mu along the geodesic with initial velocity f.eta,
// evaluated at time t. Isometric, and horizontal at gamma(t).
HorizontalTangent parallel_transport_from(const GeodesicFactors& f, const DenseMatrix& mu,
                                          double t);
HorizontalTangent parallel_transport(const GrassmannPoint& pt, const HorizontalTangent& dir,
                                     const HorizontalTangent& mu, double t);
// Transport of the geodesic's own velocity, via the closed form
// (-C V^T sin(tD) + O U cos(tD)) D V.
HorizontalTangent transport_direction(const GeodesicFactors& f, double t);

double product_inner(const ProductPoint& p, const ProductTangent& eta,
                     const ProductTangent& mu);
double product_norm(const ProductPoint& p, const ProductTangent& eta);
ProductPoint product_exp(const ProductPoint& p, const ProductTangent& eta, double t);

// Restores C^T S C = Id while preserving the column span (Loewdin transform
// C -> C T, T = (C^T S C)^{-1/2}). Throws std::domain_error on rank
// deficiency. The _with_transform variant also returns T so callers can map
// tangents carried across the cleanup (eta -> eta T).
GrassmannPoint reorthonormalize(const GrassmannPoint& pt);
std::pair<GrassmannPoint, DenseMatrix> reorthonormalize_with_transform(const GrassmannPoint& pt);

// Deterministic seeded generators for tests and starting guesses.
HorizontalTangent random_horizontal(const GrassmannPoint& pt, std::uint64_t seed);
GrassmannPoint random_point(MetricPtr metric, Index N, std::uint64_t seed);

}  // namespace grasshf
