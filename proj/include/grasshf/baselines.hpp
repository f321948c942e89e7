#pragma once

#include "grasshf/hf.hpp"
#include "grasshf/optim.hpp"

namespace grasshf {

// Euclidean reference solvers working on raw coefficient blocks: Newton on
// the Lagrangian of the constrained problem, and self-consistent field
// iteration with DIIS acceleration. Both spin blocks share one overlap
// metric S, as in the Hartree-Fock setting.

struct MultiplierState {
    DenseMatrix eps_alpha;  // N_a x N_a
    DenseMatrix eps_beta;   // N_b x N_b
};

// Jacobian of the constraint c(C) = C^T S C - Id as a map on vec(V):
// Jc vec(V) = vec(C^T S V + V^T S C), assembled as
// Id_N kron C^T S + hstack_j(C^T S kron e_j).
DenseMatrix constraint_jacobian(const DenseMatrix& C, const DenseMatrix& S);

// Gradient of L(C, eps) = f(C) - sum_spins tr(eps^T c(C)), stacked as
// [vec(orbital alpha); vec(orbital beta); vec(-c_a); vec(-c_b)] with
// orbital blocks euc_grad - S C (eps + eps^T).
Vector lagrangian_gradient(const SpinPair& pair, const MultiplierState& mult,
                           const std::pair<DenseMatrix, DenseMatrix>& euc_grads,
                           const DenseMatrix& S);

// Full KKT matrix
// [[euc_hess - blockdiag((eps+eps^T) kron S), -Jc^T], [-Jc, 0]].
DenseMatrix lagrangian_hessian(const SpinPair& pair, const MultiplierState& mult,
                               const DenseMatrix& euc_hess,
                               const std::pair<DenseMatrix, DenseMatrix>& jacobians,
                               const DenseMatrix& S);

// eps = C^T F C in the Hartree-Fock case, written through the cost model as
// one half of C^T euc_grad: the exact multiplier at any stationary point.
MultiplierState initial_multipliers(const CostModel& cost, const SpinPair& pair);

struct NrlmResult {
    SpinPair pair;
    MultiplierState mult;
    OptTrace trace;
};

// Newton-Raphson on the stationarity system grad L = 0: solves
// Hess L * delta = -grad L by minimum-norm least squares each iteration
// (the KKT matrix is structurally rank deficient for N >= 2) and updates
// coefficients and multipliers additively. Iterates are only asymptotically
// feasible. An inconsistent or non-finite solve stops the run with
// NumericalFailure. The trace's energy column reports the cost value,
// grad_norm the stacked gradient of L, and the value-stagnation test uses
// L itself.
NrlmResult nrlm(const CostModel& cost, const DenseMatrix& S, const SpinPair& x0,
                const MultiplierState& mult0, const StopCriteria& crit);

// Lowest generalized eigenvectors of (h, S): the standard starting guess.
SpinPair core_guess(const IntegralSet& ints);

// Fixed-point iteration: build Fock matrices, DIIS-extrapolate them from a
// window of previous iterations using the commutator errors FPS - SPF, then
// reoccupy with the lowest generalized eigenvectors (aufbau). diis_window 0
// disables extrapolation. Degenerate occupation ties warn on stderr.
// Trace: grad_norm = stacked commutator norm, step_norm = density change.
std::pair<SpinPair, OptTrace> scf_diis(const IntegralSet& ints, const SpinPair& guess,
                                       int diis_window, const StopCriteria& crit);

}  // namespace grasshf
