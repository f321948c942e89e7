#include "grasshf/optim.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "loop_detail.hpp"

namespace grasshf {

namespace {

using detail::StopCheck;
using detail::TraceBuilder;

ProductTangent at_point(const ProductPoint& x, DenseMatrix e1, DenseMatrix e2) {
    return {HorizontalTangent{x.first, std::move(e1)}, HorizontalTangent{x.second, std::move(e2)}};
}

// Cost, Riemannian gradient and its norm at one iterate.
struct EvalState {
    double energy = 0.0;
    ProductTangent grad;
    double grad_norm = 0.0;
    bool finite = false;
};

EvalState evaluate(const CostModel& cost, const ProductPoint& x) {
    EvalState s;
    s.energy = cost.value(x.first.C, x.second.C);
    auto [g1, g2] = cost.euclidean_gradient(x.first.C, x.second.C);
    s.grad = ProductTangent{riemannian_gradient(x.first, g1), riemannian_gradient(x.second, g2)};
    s.grad_norm = product_norm(x, s.grad);
    s.finite = std::isfinite(s.energy) && std::isfinite(s.grad_norm) &&
               s.grad.first.eta.allFinite() && s.grad.second.eta.allFinite();
    return s;
}

StopCheck check_stop(const EvalState& s, double e_prev, int k, const StopCriteria& crit) {
    return detail::check_stop(s.grad_norm, e_prev, s.energy, k, crit);
}

}  // namespace

std::string to_string(OptStatus s) {
    switch (s) {
        case OptStatus::ConvergedGrad: return "converged_grad";
        case OptStatus::ConvergedVal: return "converged_val";
        case OptStatus::MaxIter: return "max_iter";
        case OptStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

std::pair<ProductPoint, OptTrace> rgd(const CostModel& cost, const ProductPoint& x0,
                                      double step_size, const StopCriteria& crit,
                                      int reorthonormalize_every) {
    if (step_size <= 0.0) throw std::invalid_argument("rgd: step_size must be positive");
    ProductPoint x = x0;
    TraceBuilder trace("gd");
    EvalState s = evaluate(cost, x);
    trace.record(0, s.energy, s.grad_norm, 0.0);
    if (!s.finite) return {x, std::move(trace).finish(OptStatus::NumericalFailure)};

    double e_prev = std::numeric_limits<double>::infinity();
    int k = 0;
    OptStatus status = OptStatus::MaxIter;
    while (true) {
        const StopCheck sc = check_stop(s, e_prev, k, crit);
        if (sc.stop) {
            status = sc.status;
            break;
        }
        const ProductTangent dir = at_point(x, -s.grad.first.eta, -s.grad.second.eta);
        const double step_norm = step_size * s.grad_norm;
        ProductPoint x_next = product_exp(x, dir, step_size);
        ++k;
        if (reorthonormalize_every > 0 && k % reorthonormalize_every == 0) {
            try {
                x_next = {reorthonormalize(x_next.first), reorthonormalize(x_next.second)};
            } catch (const std::domain_error&) {
                status = OptStatus::NumericalFailure;
                break;
            }
        }
        e_prev = s.energy;
        x = std::move(x_next);
        s = evaluate(cost, x);
        trace.record(k, s.energy, s.grad_norm, step_norm);
        if (!s.finite) {
            status = OptStatus::NumericalFailure;
            break;
        }
    }
    return {x, std::move(trace).finish(status)};
}

DenseMatrix assemble_riemannian_hessian(const GrassmannPoint& p1, const GrassmannPoint& p2,
                                        const std::pair<DenseMatrix, DenseMatrix>& euc_grads,
                                        const DenseMatrix& euc_hess) {
    const Index m1 = p1.d() * p1.n(), m2 = p2.d() * p2.n();
    if (euc_hess.rows() != m1 + m2 || euc_hess.cols() != m1 + m2)
        throw std::invalid_argument("assemble_riemannian_hessian: Hessian size mismatch");
    if (euc_grads.first.rows() != p1.d() || euc_grads.first.cols() != p1.n() ||
        euc_grads.second.rows() != p2.d() || euc_grads.second.cols() != p2.n())
        throw std::invalid_argument("assemble_riemannian_hessian: gradient shape mismatch");

    // (Id - C C^T S) S^{-1} = S^{-1} - C C^T, applied columnwise via the
    // Kronecker lift.
    auto lift = [](const GrassmannPoint& p) {
        const DenseMatrix S_inv =
            p.metric->apply_S_inv(DenseMatrix::Identity(p.d(), p.d()));
        return kron(DenseMatrix::Identity(p.n(), p.n()),
                    DenseMatrix(S_inv - p.C * p.C.transpose()));
    };

    DenseMatrix H(m1 + m2, m1 + m2);
    H.topRows(m1) = lift(p1) * euc_hess.topRows(m1);
    H.bottomRows(m2) = lift(p2) * euc_hess.bottomRows(m2);
    H.topLeftCorner(m1, m1) -=
        kron(DenseMatrix(euc_grads.first.transpose() * p1.C),
             DenseMatrix::Identity(p1.d(), p1.d()));
    H.bottomRightCorner(m2, m2) -=
        kron(DenseMatrix(euc_grads.second.transpose() * p2.C),
             DenseMatrix::Identity(p2.d(), p2.d()));
    return H;
}

std::pair<DenseMatrix, Vector> augment_system(
    const GrassmannPoint& p1, const GrassmannPoint& p2, const DenseMatrix& riem_hess,
    const std::pair<DenseMatrix, DenseMatrix>& riem_grads) {
    const Index m1 = p1.d() * p1.n(), m2 = p2.d() * p2.n();
    const Index c1 = p1.n() * p1.n(), c2 = p2.n() * p2.n();
    if (riem_hess.rows() != m1 + m2 || riem_hess.cols() != m1 + m2)
        throw std::invalid_argument("augment_system: Hessian size mismatch");

    DenseMatrix A = DenseMatrix::Zero(m1 + m2 + c1 + c2, m1 + m2);
    A.topRows(m1 + m2) = riem_hess;
    A.block(m1 + m2, 0, c1, m1) =
        kron(DenseMatrix::Identity(p1.n(), p1.n()),
             DenseMatrix(p1.C.transpose() * p1.metric->S));
    A.block(m1 + m2 + c1, m1, c2, m2) =
        kron(DenseMatrix::Identity(p2.n(), p2.n()),
             DenseMatrix(p2.C.transpose() * p2.metric->S));

    Vector rhs = Vector::Zero(m1 + m2 + c1 + c2);
    rhs.head(m1) = -vec(riem_grads.first);
    rhs.segment(m1, m2) = -vec(riem_grads.second);
    return {std::move(A), std::move(rhs)};
}

Vector solve_augmented(const DenseMatrix& A, const Vector& rhs) {
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(A);
    const Index n = A.cols();
    double d_max = 0.0, d_min = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
        const double d = std::abs(qr.matrixR()(i, i));
        d_max = std::max(d_max, d);
        d_min = std::min(d_min, d);
    }
    const double cond =
        d_min > 0.0 ? d_max / d_min : std::numeric_limits<double>::infinity();
    if (qr.rank() < n)
        throw SingularSystemError("augmented Newton system is rank deficient", cond);
    return qr.solve(rhs);
}

std::pair<ProductPoint, OptTrace> rnr(const CostModel& cost, const ProductPoint& x0,
                                      const StopCriteria& crit) {
    ProductPoint x = x0;
    TraceBuilder trace("nr");
    EvalState s = evaluate(cost, x);
    trace.record(0, s.energy, s.grad_norm, 0.0);
    if (!s.finite) return {x, std::move(trace).finish(OptStatus::NumericalFailure)};

    const Index d1 = x.first.d(), n1 = x.first.n();
    const Index d2 = x.second.d(), n2 = x.second.n();
    double e_prev = std::numeric_limits<double>::infinity();
    int k = 0;
    OptStatus status = OptStatus::MaxIter;
    while (true) {
        const StopCheck sc = check_stop(s, e_prev, k, crit);
        if (sc.stop) {
            status = sc.status;
            break;
        }
        const auto euc_grads = cost.euclidean_gradient(x.first.C, x.second.C);
        const DenseMatrix riem_hess = assemble_riemannian_hessian(
            x.first, x.second, euc_grads, cost.euclidean_hessian(x.first.C, x.second.C));
        const auto [A, rhs] = augment_system(
            x.first, x.second, riem_hess, {s.grad.first.eta, s.grad.second.eta});
        Vector step;
        try {
            step = solve_augmented(A, rhs);
        } catch (const SingularSystemError&) {
            status = OptStatus::NumericalFailure;
            break;
        }
        if (!step.allFinite()) {
            status = OptStatus::NumericalFailure;
            break;
        }
        const ProductTangent eta =
            at_point(x, unvec(step.head(d1 * n1), d1, n1), unvec(step.tail(d2 * n2), d2, n2));
        const double step_norm = product_norm(x, eta);
        ProductPoint x_next = product_exp(x, eta, 1.0);
        try {
            x_next = {reorthonormalize(x_next.first), reorthonormalize(x_next.second)};
        } catch (const std::domain_error&) {
            status = OptStatus::NumericalFailure;
            break;
        }
        ++k;
        e_prev = s.energy;
        x = std::move(x_next);
        s = evaluate(cost, x);
        trace.record(k, s.energy, s.grad_norm, step_norm);
        if (!s.finite) {
            status = OptStatus::NumericalFailure;
            break;
        }
    }
    return {x, std::move(trace).finish(status)};
}

std::pair<ProductPoint, OptTrace> rcg(const CostModel& cost, const ProductPoint& x0,
                                      double step_size, RcgVariant variant,
                                      const StopCriteria& crit, int reorthonormalize_every) {
    if (step_size <= 0.0) throw std::invalid_argument("rcg: step_size must be positive");
    ProductPoint x = x0;
    TraceBuilder trace("cg");
    EvalState s = evaluate(cost, x);
    trace.record(0, s.energy, s.grad_norm, 0.0);
    if (!s.finite) return {x, std::move(trace).finish(OptStatus::NumericalFailure)};

    const Index d1 = x.first.d(), n1 = x.first.n();
    const Index d2 = x.second.d(), n2 = x.second.n();
    const int dim = static_cast<int>(std::max<Index>(n1 * (d1 - n1) + n2 * (d2 - n2), 1));

    double e_prev = std::numeric_limits<double>::infinity();
    int k = 0;
    OptStatus status = OptStatus::MaxIter;
    ProductTangent v = at_point(x, -s.grad.first.eta, -s.grad.second.eta);
    while (true) {
        const StopCheck sc = check_stop(s, e_prev, k, crit);
        if (sc.stop) {
            status = sc.status;
            break;
        }
        if (k % dim == 0) v = at_point(x, -s.grad.first.eta, -s.grad.second.eta);

        const GeodesicFactors f1 = geodesic_factors(x.first, v.first);
        const GeodesicFactors f2 = geodesic_factors(x.second, v.second);
        ProductPoint x_next{geodesic_from(f1, step_size), geodesic_from(f2, step_size)};
        const double step_norm = step_size * product_norm(x, v);

        // Both transports ride the same factorization of the step geodesic.
        DenseMatrix v1t = transport_direction(f1, step_size).eta;
        DenseMatrix v2t = transport_direction(f2, step_size).eta;
        DenseMatrix g1t, g2t;
        if (variant == RcgVariant::PolakRibiere) {
            g1t = parallel_transport_from(f1, s.grad.first.eta, step_size).eta;
            g2t = parallel_transport_from(f2, s.grad.second.eta, step_size).eta;
        }

        ++k;
        if (reorthonormalize_every > 0 && k % reorthonormalize_every == 0) {
            try {
                auto [q1, t1] = reorthonormalize_with_transform(x_next.first);
                auto [q2, t2] = reorthonormalize_with_transform(x_next.second);
                x_next = {std::move(q1), std::move(q2)};
                v1t *= t1;
                v2t *= t2;
                if (variant == RcgVariant::PolakRibiere) {
                    g1t *= t1;
                    g2t *= t2;
                }
            } catch (const std::domain_error&) {
                status = OptStatus::NumericalFailure;
                break;
            }
        }

        const double gg_old = s.grad_norm * s.grad_norm;
        e_prev = s.energy;
        x = std::move(x_next);
        s = evaluate(cost, x);
        trace.record(k, s.energy, s.grad_norm, step_norm);
        if (!s.finite) {
            status = OptStatus::NumericalFailure;
            break;
        }

        double alpha = 0.0;
        if (variant == RcgVariant::FletcherReeves) {
            alpha = (s.grad_norm * s.grad_norm) / gg_old;
        } else {
            const ProductTangent diff =
                at_point(x, s.grad.first.eta - g1t, s.grad.second.eta - g2t);
            alpha = product_inner(x, diff, s.grad) / gg_old;
        }
        v = at_point(x, -s.grad.first.eta + alpha * v1t, -s.grad.second.eta + alpha * v2t);
    }
    return {x, std::move(trace).finish(status)};
}

namespace {

// Appends a phase's records after `offset`, dropping the duplicate
// iteration-0 row (each phase re-evaluates its starting point).
int splice_phase(OptTrace& into, const OptTrace& phase, int offset) {
    int last = offset;
    for (const auto& r : phase.records) {
        if (r.iter == 0) continue;
        TraceRecord shifted = r;
        shifted.iter += offset;
        last = shifted.iter;
        into.records.push_back(std::move(shifted));
    }
    return last;
}

}  // namespace

std::pair<ProductPoint, OptTrace> hybrid(const CostModel& cost, const ProductPoint& x0,
                                         const HybridConfig& cfg) {
    StopCriteria cg_crit = cfg.crit;
    cg_crit.tol_grad = std::max(cfg.crit.tol_grad, cfg.switch_grad_tol);
    auto [x_mid, cg_trace] = rcg(cost, x0, cfg.cg_step, cfg.variant, cg_crit);

    OptTrace trace;
    trace.records = cg_trace.records;
    for (auto& r : trace.records) r.phase = "cg";
    const int cg_last = trace.records.empty() ? 0 : trace.records.back().iter;
    if (cg_trace.status == OptStatus::NumericalFailure) {
        trace.status = OptStatus::NumericalFailure;
        return {std::move(x_mid), std::move(trace)};
    }

    trace.switch_iteration = cg_last + 1;
    auto [x_final, nr_trace] = rnr(cost, x_mid, cfg.crit);
    const int nr_last = splice_phase(trace, nr_trace, cg_last);
    if (nr_trace.status != OptStatus::NumericalFailure) {
        trace.status = nr_trace.status;
        return {std::move(x_final), std::move(trace)};
    }

    // Newton broke down: resume conjugate gradient to full tolerance.
    auto [x_fallback, fb_trace] = rcg(cost, x_final, cfg.cg_step, cfg.variant, cfg.crit);
    for (auto& r : fb_trace.records) r.phase = "cg";
    splice_phase(trace, fb_trace, nr_last);
    trace.status = fb_trace.status;
    return {std::move(x_fallback), std::move(trace)};
}

std::pair<Vector, int> linear_cg(const DenseMatrix& H, const Vector& g, double tol,
                                 int max_steps) {
    const Index n = g.size();
    Vector x = Vector::Zero(n);
    Vector grad = g;  // gradient of 1/2 x^T H x + g^T x at x = 0
    Vector v = -grad;
    double gg = grad.squaredNorm();
    int steps = 0;
    while (steps < max_steps && std::sqrt(gg) > tol) {
        if (steps > 0 && steps % n == 0) v = -grad;
        const Vector Hv = H * v;
        const double vHv = v.dot(Hv);
        if (!(vHv > 0.0) || !std::isfinite(vHv)) break;
        const double alpha = -grad.dot(v) / vHv;
        x += alpha * v;
        grad += alpha * Hv;
        ++steps;
        const double gg_new = grad.squaredNorm();
        v = -grad + (gg_new / gg) * v;
        gg = gg_new;
    }
    return {std::move(x), steps};
}

}  // namespace grasshf
