#include "grasshf/baselines.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "loop_detail.hpp"

namespace grasshf {

namespace {

using detail::StopCheck;
using detail::TraceBuilder;

void check_spin_shapes(const SpinPair& pair, const MultiplierState& mult,
                       const DenseMatrix& S, const char* who) {
    const Index d = S.rows();
    if (S.cols() != d) throw std::invalid_argument(std::string(who) + ": S must be square");
    if (pair.C_alpha.rows() != d || pair.C_beta.rows() != d)
        throw std::invalid_argument(std::string(who) + ": coefficient rows must match S");
    if (mult.eps_alpha.rows() != pair.C_alpha.cols() ||
        mult.eps_alpha.cols() != pair.C_alpha.cols() ||
        mult.eps_beta.rows() != pair.C_beta.cols() ||
        mult.eps_beta.cols() != pair.C_beta.cols())
        throw std::invalid_argument(std::string(who) + ": multiplier shape mismatch");
}

}  // namespace

DenseMatrix constraint_jacobian(const DenseMatrix& C, const DenseMatrix& S) {
    const Index N = C.cols();
    if (S.rows() != C.rows() || S.cols() != C.rows())
        throw std::invalid_argument("constraint_jacobian: S incompatible with C");
    const DenseMatrix CtS = C.transpose() * S;  // N x d
    DenseMatrix Jc = kron(DenseMatrix::Identity(N, N), CtS);
    std::vector<DenseMatrix> columns;
    columns.reserve(static_cast<std::size_t>(N));
    for (Index j = 0; j < N; ++j)
        columns.push_back(kron(CtS, DenseMatrix(DenseMatrix::Identity(N, N).col(j))));
    if (N > 0) Jc += hstack(columns);
    return Jc;
}

Vector lagrangian_gradient(const SpinPair& pair, const MultiplierState& mult,
                           const std::pair<DenseMatrix, DenseMatrix>& euc_grads,
                           const DenseMatrix& S) {
    check_spin_shapes(pair, mult, S, "lagrangian_gradient");
    if (euc_grads.first.rows() != pair.C_alpha.rows() ||
        euc_grads.first.cols() != pair.C_alpha.cols() ||
        euc_grads.second.rows() != pair.C_beta.rows() ||
        euc_grads.second.cols() != pair.C_beta.cols())
        throw std::invalid_argument("lagrangian_gradient: gradient shape mismatch");

    const Index d = S.rows();
    const Index na = pair.C_alpha.cols(), nb = pair.C_beta.cols();
    const DenseMatrix orb_a =
        euc_grads.first -
        S * pair.C_alpha * (mult.eps_alpha + mult.eps_alpha.transpose());
    const DenseMatrix orb_b =
        euc_grads.second -
        S * pair.C_beta * (mult.eps_beta + mult.eps_beta.transpose());
    const DenseMatrix res_a = -(pair.C_alpha.transpose() * S * pair.C_alpha -
                                DenseMatrix::Identity(na, na));
    const DenseMatrix res_b = -(pair.C_beta.transpose() * S * pair.C_beta -
                                DenseMatrix::Identity(nb, nb));

    Vector g(d * (na + nb) + na * na + nb * nb);
    g << vec(orb_a), vec(orb_b), vec(res_a), vec(res_b);
    return g;
}

DenseMatrix lagrangian_hessian(const SpinPair& pair, const MultiplierState& mult,
                               const DenseMatrix& euc_hess,
                               const std::pair<DenseMatrix, DenseMatrix>& jacobians,
                               const DenseMatrix& S) {
    check_spin_shapes(pair, mult, S, "lagrangian_hessian");
    const Index d = S.rows();
    const Index na = pair.C_alpha.cols(), nb = pair.C_beta.cols();
    const Index m = d * (na + nb);
    const Index ca = na * na, cb = nb * nb;
    if (euc_hess.rows() != m || euc_hess.cols() != m)
        throw std::invalid_argument("lagrangian_hessian: Hessian size mismatch");
    if (jacobians.first.rows() != ca || jacobians.first.cols() != d * na ||
        jacobians.second.rows() != cb || jacobians.second.cols() != d * nb)
        throw std::invalid_argument("lagrangian_hessian: Jacobian size mismatch");

    DenseMatrix H = DenseMatrix::Zero(m + ca + cb, m + ca + cb);
    H.topLeftCorner(m, m) = euc_hess;
    H.block(0, 0, d * na, d * na) -=
        kron(DenseMatrix(mult.eps_alpha + mult.eps_alpha.transpose()), S);
    H.block(d * na, d * na, d * nb, d * nb) -=
        kron(DenseMatrix(mult.eps_beta + mult.eps_beta.transpose()), S);
    H.block(0, m, d * na, ca) = -jacobians.first.transpose();
    H.block(d * na, m + ca, d * nb, cb) = -jacobians.second.transpose();
    H.block(m, 0, ca, d * na) = -jacobians.first;
    H.block(m + ca, d * na, cb, d * nb) = -jacobians.second;
    return H;
}

MultiplierState initial_multipliers(const CostModel& cost, const SpinPair& pair) {
    const auto grads = cost.euclidean_gradient(pair.C_alpha, pair.C_beta);
    return {0.5 * pair.C_alpha.transpose() * grads.first,
            0.5 * pair.C_beta.transpose() * grads.second};
}

namespace {

// Value, Lagrangian, and stationarity residual at one (C, eps) iterate.
struct LagrangianState {
    double energy = 0.0;
    double lagrangian = 0.0;
    Vector grad;
    double grad_norm = 0.0;
    bool finite = false;
};

LagrangianState evaluate_lagrangian(const CostModel& cost, const DenseMatrix& S,
                                    const SpinPair& pair, const MultiplierState& mult) {
    LagrangianState s;
    s.energy = cost.value(pair.C_alpha, pair.C_beta);
    const DenseMatrix res_a =
        pair.C_alpha.transpose() * S * pair.C_alpha -
        DenseMatrix::Identity(pair.C_alpha.cols(), pair.C_alpha.cols());
    const DenseMatrix res_b =
        pair.C_beta.transpose() * S * pair.C_beta -
        DenseMatrix::Identity(pair.C_beta.cols(), pair.C_beta.cols());
    s.lagrangian = s.energy - mult.eps_alpha.cwiseProduct(res_a).sum() -
                   mult.eps_beta.cwiseProduct(res_b).sum();
    s.grad = lagrangian_gradient(pair, mult,
                                 cost.euclidean_gradient(pair.C_alpha, pair.C_beta), S);
    s.grad_norm = s.grad.norm();
    s.finite = std::isfinite(s.energy) && std::isfinite(s.lagrangian) && s.grad.allFinite();
    return s;
}

}  // namespace

NrlmResult nrlm(const CostModel& cost, const DenseMatrix& S, const SpinPair& x0,
                const MultiplierState& mult0, const StopCriteria& crit) {
    check_spin_shapes(x0, mult0, S, "nrlm");
    SpinPair pair = x0;
    MultiplierState mult = mult0;
    const Index d = S.rows();
    const Index na = pair.C_alpha.cols(), nb = pair.C_beta.cols();

    TraceBuilder trace("nrlm");
    LagrangianState s = evaluate_lagrangian(cost, S, pair, mult);
    trace.record(0, s.energy, s.grad_norm, 0.0);
    if (!s.finite)
        return {std::move(pair), std::move(mult),
                std::move(trace).finish(OptStatus::NumericalFailure)};

    double l_prev = std::numeric_limits<double>::infinity();
    int k = 0;
    OptStatus status = OptStatus::MaxIter;
    while (true) {
        const StopCheck sc = detail::check_stop(s.grad_norm, l_prev, s.lagrangian, k, crit);
        if (sc.stop) {
            status = sc.status;
            break;
        }
        const DenseMatrix H = lagrangian_hessian(
            pair, mult, cost.euclidean_hessian(pair.C_alpha, pair.C_beta),
            {constraint_jacobian(pair.C_alpha, S), constraint_jacobian(pair.C_beta, S)}, S);
        // The KKT matrix is structurally rank deficient for N >= 2: the
        // Lagrangian only sees eps through tr(eps^T (C^T S C - Id)) with a
        // symmetric residual, so antisymmetric multiplier directions carry
        // zero curvature, and gauge rotations join the null space at
        // stationarity. The gradient stays orthogonal to both, so the
        // minimum-norm least-squares step is the Newton step; a solve that
        // leaves a residual means the system is genuinely inconsistent.
        Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(H);
        const Vector delta = cod.solve(-s.grad);
        if (!delta.allFinite() ||
            (H * delta + s.grad).norm() > 1e-8 * std::max(1.0, s.grad.norm())) {
            status = OptStatus::NumericalFailure;
            break;
        }
        pair.C_alpha += unvec(delta.segment(0, d * na), d, na);
        pair.C_beta += unvec(delta.segment(d * na, d * nb), d, nb);
        mult.eps_alpha += unvec(delta.segment(d * (na + nb), na * na), na, na);
        mult.eps_beta += unvec(delta.tail(nb * nb), nb, nb);

        ++k;
        l_prev = s.lagrangian;
        s = evaluate_lagrangian(cost, S, pair, mult);
        trace.record(k, s.energy, s.grad_norm, delta.norm());
        if (!s.finite) {
            status = OptStatus::NumericalFailure;
            break;
        }
    }
    return {std::move(pair), std::move(mult), std::move(trace).finish(status)};
}

namespace {

struct EigensolverError {};

// Lowest-n generalized eigenvectors of (F, S), ascending eigenvalues.
DenseMatrix occupy_lowest(const DenseMatrix& F, const DenseMatrix& S, Index n) {
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> solver(F, S);
    if (solver.info() != Eigen::Success) throw EigensolverError{};
    const Vector& lambda = solver.eigenvalues();
    if (n > 0 && n < F.rows() && lambda(n) - lambda(n - 1) < 1e-12)
        std::cerr << "warning: degenerate occupation boundary (gap < 1e-12); "
                     "filling ascending eigenvalue order\n";
    return solver.eigenvectors().leftCols(n);
}

// Fock matrices, commutator residual, and energy at the current coefficients.
struct ScfState {
    DenseMatrix P_alpha, P_beta, F_alpha, F_beta;
    Vector err;  // stacked FPS - SPF, alpha then beta
    double grad_norm = 0.0;
    double energy = 0.0;
    bool finite = false;
};

ScfState evaluate_scf(const IntegralSet& ints, const SpinPair& pair) {
    ScfState s;
    s.P_alpha = density(pair.C_alpha);
    s.P_beta = density(pair.C_beta);
    s.F_alpha = fock(s.P_alpha, s.P_beta, Spin::Alpha, ints);
    s.F_beta = fock(s.P_alpha, s.P_beta, Spin::Beta, ints);
    const DenseMatrix e_a =
        s.F_alpha * s.P_alpha * ints.S - ints.S * s.P_alpha * s.F_alpha;
    const DenseMatrix e_b = s.F_beta * s.P_beta * ints.S - ints.S * s.P_beta * s.F_beta;
    s.err.resize(2 * ints.d * ints.d);
    s.err << vec(e_a), vec(e_b);
    s.grad_norm = s.err.norm();
    s.energy = 0.5 * ((s.P_alpha + s.P_beta).cwiseProduct(ints.h).sum() +
                      s.P_alpha.cwiseProduct(s.F_alpha).sum() +
                      s.P_beta.cwiseProduct(s.F_beta).sum()) +
               ints.e_nuc;
    s.finite = std::isfinite(s.energy) && s.err.allFinite();
    return s;
}

struct DiisEntry {
    DenseMatrix F_alpha, F_beta;
    Vector err;
};

// Pulay mixing: minimize the norm of the combined error subject to the
// coefficients summing to one. An unsolvable bordered system sheds the
// oldest entry and retries; a single entry passes through unchanged.
std::pair<DenseMatrix, DenseMatrix> extrapolate_fock(std::deque<DiisEntry>& history) {
    Vector c;
    while (true) {
        const Index m = static_cast<Index>(history.size());
        if (m == 1) {
            c = Vector::Ones(1);
            break;
        }
        DenseMatrix M = DenseMatrix::Zero(m + 1, m + 1);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j)
                M(i, j) = history[static_cast<std::size_t>(i)].err.dot(
                    history[static_cast<std::size_t>(j)].err);
        M.col(m).head(m).setOnes();
        M.row(m).head(m).setOnes();
        Vector rhs = Vector::Zero(m + 1);
        rhs(m) = 1.0;
        Eigen::ColPivHouseholderQR<DenseMatrix> qr(M);
        if (qr.rank() == m + 1) {
            const Vector full = qr.solve(rhs);
            if (full.allFinite()) {
                c = full.head(m);
                break;
            }
        }
        history.pop_front();
    }
    DenseMatrix Fa = c(0) * history.front().F_alpha;
    DenseMatrix Fb = c(0) * history.front().F_beta;
    for (Index i = 1; i < static_cast<Index>(history.size()); ++i) {
        Fa += c(i) * history[static_cast<std::size_t>(i)].F_alpha;
        Fb += c(i) * history[static_cast<std::size_t>(i)].F_beta;
    }
    return {std::move(Fa), std::move(Fb)};
}

}  // namespace

SpinPair core_guess(const IntegralSet& ints) {
    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> solver(ints.h, ints.S);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("core_guess: generalized eigensolver failed");
    return {solver.eigenvectors().leftCols(ints.n_alpha),
            solver.eigenvectors().leftCols(ints.n_beta)};
}

std::pair<SpinPair, OptTrace> scf_diis(const IntegralSet& ints, const SpinPair& guess,
                                       int diis_window, const StopCriteria& crit) {
    if (diis_window < 0)
        throw std::invalid_argument("scf_diis: diis_window must be nonnegative");
    if (guess.C_alpha.rows() != ints.d || guess.C_alpha.cols() != ints.n_alpha ||
        guess.C_beta.rows() != ints.d || guess.C_beta.cols() != ints.n_beta)
        throw std::invalid_argument("scf_diis: guess shape mismatch");

    SpinPair pair = guess;
    TraceBuilder trace("scf");
    ScfState s = evaluate_scf(ints, pair);
    trace.record(0, s.energy, s.grad_norm, 0.0);
    if (!s.finite)
        return {std::move(pair), std::move(trace).finish(OptStatus::NumericalFailure)};

    std::deque<DiisEntry> history;
    double e_prev = std::numeric_limits<double>::infinity();
    int k = 0;
    OptStatus status = OptStatus::MaxIter;
    while (true) {
        const StopCheck sc = detail::check_stop(s.grad_norm, e_prev, s.energy, k, crit);
        if (sc.stop) {
            status = sc.status;
            break;
        }
        DenseMatrix Fa = s.F_alpha, Fb = s.F_beta;
        if (diis_window > 0) {
            history.push_back({s.F_alpha, s.F_beta, s.err});
            while (static_cast<Index>(history.size()) > diis_window) history.pop_front();
            std::tie(Fa, Fb) = extrapolate_fock(history);
        }
        SpinPair next;
        try {
            next = {occupy_lowest(Fa, ints.S, ints.n_alpha),
                    occupy_lowest(Fb, ints.S, ints.n_beta)};
        } catch (const EigensolverError&) {
            status = OptStatus::NumericalFailure;
            break;
        }
        const double step_norm =
            std::sqrt((density(next.C_alpha) - s.P_alpha).squaredNorm() +
                      (density(next.C_beta) - s.P_beta).squaredNorm());
        ++k;
        e_prev = s.energy;
        pair = std::move(next);
        s = evaluate_scf(ints, pair);
        trace.record(k, s.energy, s.grad_norm, step_norm);
        if (!s.finite) {
            status = OptStatus::NumericalFailure;
            break;
        }
    }
    return {std::move(pair), std::move(trace).finish(status)};
}

}  // namespace grasshf
