#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "grasshf/manifold.hpp"

namespace grasshf {

// Cost function on a product of two Grassmannians, supplied through its
// smooth extension to matrix space: implementations must be well defined on
// the quotient (value invariant under right orthogonal rotation of either
// block) and safe for concurrent read-only use.
class CostModel {
public:
    virtual ~CostModel() = default;

    virtual double value(const DenseMatrix& C1, const DenseMatrix& C2) const = 0;
    virtual std::pair<DenseMatrix, DenseMatrix> euclidean_gradient(
        const DenseMatrix& C1, const DenseMatrix& C2) const = 0;
    // Dense second derivative in vectorized block form
    // [[H11, H21^T], [H21, H22]], size d1*N1 + d2*N2.
    virtual DenseMatrix euclidean_hessian(const DenseMatrix& C1,
                                          const DenseMatrix& C2) const = 0;
};

struct StopCriteria {
    int max_iter = 1000;
    double tol_grad = 1e-8;
    double tol_val = 1e-10;
};

enum class OptStatus { ConvergedGrad, ConvergedVal, MaxIter, NumericalFailure };

std::string to_string(OptStatus s);

struct TraceRecord {
    int iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double step_norm = 0.0;
    double wall_time = 0.0;      // seconds since the run started
    std::string phase;
};

struct OptTrace {
    std::vector<TraceRecord> records;
    OptStatus status = OptStatus::MaxIter;
    int switch_iteration = -1;   // hybrid only: first Newton iteration
};

// Raised by augment_system when the Newton system is rank-deficient.
class SingularSystemError : public std::runtime_error {
public:
    SingularSystemError(const std::string& what, double condition_estimate)
        : std::runtime_error(what), condition_estimate_(condition_estimate) {}
    double condition_estimate() const { return condition_estimate_; }

private:
    double condition_estimate_;
};

// Gradient descent along geodesics with a constant step:
// x_{k+1} = exp_{x_k}(-step_size * grad f(x_k)).
std::pair<ProductPoint, OptTrace> rgd(const CostModel& cost, const ProductPoint& x0,
                                      double step_size, const StopCriteria& crit,
                                      int reorthonormalize_every = 1);

// Second-derivative operator of the cost on the horizontal space, as a dense
// matrix acting on stacked vec(eta1), vec(eta2): left-multiplies the Euclidean
// Hessian by blockdiag(Id kron proj_i S_i^{-1}) and subtracts
// blockdiag((euc_grad_i^T C_i) kron Id).
DenseMatrix assemble_riemannian_hessian(const GrassmannPoint& p1, const GrassmannPoint& p2,
                                        const std::pair<DenseMatrix, DenseMatrix>& euc_grads,
                                        const DenseMatrix& euc_hess);

// Newton system with the horizontality constraints appended as extra rows
// (rows Id kron C_i^T S_i, zero right-hand side); returns the rectangular
// matrix and the right-hand side of A * eta = rhs whose least-squares
// solution is the horizontal Newton step (rhs already carries the minus).
std::pair<DenseMatrix, Vector> augment_system(const GrassmannPoint& p1,
                                              const GrassmannPoint& p2,
                                              const DenseMatrix& riem_hess,
                                              const std::pair<DenseMatrix, DenseMatrix>& riem_grads);

// Least-squares solution of an augmented system via column-pivoted QR.
// Throws SingularSystemError when the columns are rank deficient.
Vector solve_augmented(const DenseMatrix& A, const Vector& rhs);

// Newton iteration: solve the augmented system, step along the geodesic at
// t = 1. Singular systems end the run with NumericalFailure.
std::pair<ProductPoint, OptTrace> rnr(const CostModel& cost, const ProductPoint& x0,
                                      const StopCriteria& crit);

enum class RcgVariant { FletcherReeves, PolakRibiere };

// Conjugate gradient with constant step, direction transported along each
// step geodesic, reset to steepest descent every dim(manifold) iterations
// (including the first).
std::pair<ProductPoint, OptTrace> rcg(const CostModel& cost, const ProductPoint& x0,
                                      double step_size, RcgVariant variant,
                                      const StopCriteria& crit,
                                      int reorthonormalize_every = 1);

struct HybridConfig {
    double cg_step = 0.01;
    double switch_grad_tol = 1e-3;
    RcgVariant variant = RcgVariant::FletcherReeves;
    StopCriteria crit;  // max_iter applies to each phase separately
};

// Conjugate gradient until the gradient norm falls under switch_grad_tol,
// then Newton to full tolerance. If Newton fails numerically the run falls
// back to conjugate gradient. The trace keeps running iteration numbers and
// tags records with phase "cg" / "nr".
std::pair<ProductPoint, OptTrace> hybrid(const CostModel& cost, const ProductPoint& x0,
                                         const HybridConfig& cfg);

// Classical conjugate gradient on a frozen quadratic model: solves
// H x = -g for SPD H with exact line steps alpha = <v,-grad>/<v,Hv> and the
// same Fletcher-Reeves direction update the manifold solver uses (transport
// is the identity in flat space). Returns (x, iterations).
std::pair<Vector, int> linear_cg(const DenseMatrix& H, const Vector& g, double tol,
                                 int max_steps);

}  // namespace grasshf
