#include "grasshf/hf.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace grasshf {

void validate_integrals(const IntegralSet& ints) {
    const Index d = ints.d;
    if (d <= 0) throw std::invalid_argument("integrals: basis size must be positive");
    if (ints.S.rows() != d || ints.S.cols() != d || ints.h.rows() != d || ints.h.cols() != d)
        throw std::invalid_argument("integrals: S/h shape does not match basis size");
    if (static_cast<Index>(ints.g.size()) != d * d * d * d)
        throw std::invalid_argument("integrals: g tensor size does not match basis size");
    if (ints.n_alpha < 1 || ints.n_alpha > d)
        throw std::invalid_argument("integrals: need 1 <= n_alpha <= d");
    if (ints.n_beta < 0 || ints.n_beta > d)
        throw std::invalid_argument("integrals: need 0 <= n_beta <= d");
    if (!std::isfinite(ints.e_nuc))
        throw std::invalid_argument("integrals: nuclear energy is not finite");
    if (!ints.S.allFinite() || !ints.h.allFinite())
        throw std::invalid_argument("integrals: non-finite entry in S or h");
    for (double v : ints.g)
        if (!std::isfinite(v)) throw std::invalid_argument("integrals: non-finite entry in g");

    const double h_asym = (ints.h - ints.h.transpose()).norm();
    if (h_asym > 1e-12 * (1.0 + ints.h.norm())) {
        std::ostringstream msg;
        msg << "integrals: h is not symmetric, ||h - h^T||_F = " << h_asym;
        throw std::invalid_argument(msg.str());
    }
    try {
        (void)spd_factor(ints.S);
    } catch (const std::domain_error& e) {
        throw std::invalid_argument(std::string("integrals: overlap rejected: ") + e.what());
    }

    double scale = 0.0;
    for (double v : ints.g) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * (1.0 + scale);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j)
            for (Index k = 0; k < d; ++k)
                for (Index l = 0; l < d; ++l) {
                    const double v = ints.g_at(i, j, k, l);
                    const double images[3] = {ints.g_at(k, j, i, l), ints.g_at(i, l, k, j),
                                              ints.g_at(j, i, l, k)};
                    for (double w : images)
                        if (std::abs(v - w) > tol) {
                            std::ostringstream msg;
                            msg << "integrals: two-electron symmetry violated at ("
                                << i + 1 << "," << j + 1 << "," << k + 1 << "," << l + 1
                                << "), mismatch " << std::abs(v - w);
                            throw std::invalid_argument(msg.str());
                        }
                }
}

DenseMatrix density(const DenseMatrix& C) { return C * C.transpose(); }

DenseMatrix fock(const DenseMatrix& P_alpha, const DenseMatrix& P_beta, Spin spin,
                 const IntegralSet& ints) {
    const Index d = ints.d;
    const DenseMatrix P_total = P_alpha + P_beta;
    const DenseMatrix& P_same = (spin == Spin::Alpha) ? P_alpha : P_beta;
    DenseMatrix F = ints.h;
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) {
            double acc = 0.0;
            for (Index k = 0; k < d; ++k)
                for (Index l = 0; l < d; ++l)
                    acc += P_total(k, l) * ints.g_at(i, k, j, l) -
                           P_same(k, l) * ints.g_at(i, j, k, l);
            F(i, j) += acc;
        }
    return F;
}

double energy(const SpinPair& pair, const IntegralSet& ints) {
    const DenseMatrix Pa = density(pair.C_alpha);
    const DenseMatrix Pb = density(pair.C_beta);
    const DenseMatrix Fa = fock(Pa, Pb, Spin::Alpha, ints);
    const DenseMatrix Fb = fock(Pa, Pb, Spin::Beta, ints);
    const double electronic = 0.5 * (((Pa + Pb).array() * ints.h.array()).sum() +
                                     (Pa.array() * Fa.array()).sum() +
                                     (Pb.array() * Fb.array()).sum());
    return electronic + ints.e_nuc;
}

std::pair<DenseMatrix, DenseMatrix> euclidean_gradient(const SpinPair& pair,
                                                       const IntegralSet& ints) {
    const DenseMatrix Pa = density(pair.C_alpha);
    const DenseMatrix Pb = density(pair.C_beta);
    const DenseMatrix Fa = fock(Pa, Pb, Spin::Alpha, ints);
    const DenseMatrix Fb = fock(Pa, Pb, Spin::Beta, ints);
    return {2.0 * Fa * pair.C_alpha, 2.0 * Fb * pair.C_beta};
}

namespace {

// Same-spin block: rows/cols packed r + d*s over one spin's coefficients.
DenseMatrix same_spin_block(const DenseMatrix& C, const DenseMatrix& F,
                            const IntegralSet& ints) {
    const Index d = ints.d;
    const Index n = C.cols();
    DenseMatrix H(d * n, d * n);
    for (Index s = 0; s < n; ++s)
        for (Index r = 0; r < d; ++r)
            for (Index q = 0; q < n; ++q)
                for (Index p = 0; p < d; ++p) {
                    double acc = 0.0;
                    if (s == q) {
                        for (Index i = 0; i < d; ++i)
                            for (Index j = 0; j < d; ++j)
                                acc += C(i, q) * C(j, q) *
                                       (ints.g_at(p, i, r, j) - ints.g_at(p, r, j, i));
                        H(r + d * s, p + d * q) = 2.0 * F(p, r) - 2.0 * acc;
                    } else {
                        for (Index i = 0; i < d; ++i)
                            for (Index j = 0; j < d; ++j)
                                acc += C(i, q) * C(j, s) *
                                       (2.0 * ints.g_at(p, j, i, r) - ints.g_at(p, i, j, r) -
                                        ints.g_at(p, i, r, j));
                        H(r + d * s, p + d * q) = 2.0 * acc;
                    }
                }
    return H;
}

// Mixed block H_ba[r + d*s, p + d*q] = 4 sum_ij Ca(i,q) Cb(j,s) g(p,j,i,r).
DenseMatrix mixed_spin_block(const DenseMatrix& Ca, const DenseMatrix& Cb,
                             const IntegralSet& ints) {
    const Index d = ints.d;
    DenseMatrix H(d * Cb.cols(), d * Ca.cols());
    for (Index s = 0; s < Cb.cols(); ++s)
        for (Index r = 0; r < d; ++r)
            for (Index q = 0; q < Ca.cols(); ++q)
                for (Index p = 0; p < d; ++p) {
                    double acc = 0.0;
                    for (Index i = 0; i < d; ++i)
                        for (Index j = 0; j < d; ++j)
                            acc += Ca(i, q) * Cb(j, s) * ints.g_at(p, j, i, r);
                    H(r + d * s, p + d * q) = 4.0 * acc;
                }
    return H;
}

}  // namespace

DenseMatrix euclidean_hessian(const SpinPair& pair, const IntegralSet& ints) {
    const Index d = ints.d;
    const Index na = pair.C_alpha.cols();
    const Index nb = pair.C_beta.cols();
    const DenseMatrix Pa = density(pair.C_alpha);
    const DenseMatrix Pb = density(pair.C_beta);
    const DenseMatrix Fa = fock(Pa, Pb, Spin::Alpha, ints);
    const DenseMatrix Fb = fock(Pa, Pb, Spin::Beta, ints);

    DenseMatrix H = DenseMatrix::Zero(d * (na + nb), d * (na + nb));
    H.topLeftCorner(d * na, d * na) = same_spin_block(pair.C_alpha, Fa, ints);
    if (nb > 0) {
        H.bottomRightCorner(d * nb, d * nb) = same_spin_block(pair.C_beta, Fb, ints);
        const DenseMatrix Hba = mixed_spin_block(pair.C_alpha, pair.C_beta, ints);
        H.bottomLeftCorner(d * nb, d * na) = Hba;
        H.topRightCorner(d * na, d * nb) = Hba.transpose();
    }
    return H;
}

}  // namespace grasshf
