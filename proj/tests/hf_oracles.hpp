#pragma once

// Independent oracles for the Hartree-Fock formulas: the energy as the raw
// quartic polynomial in the coefficients, finite differences for first and
// second derivatives, and fixture generators with an eight-fold symmetric
// two-electron tensor built from symmetric rank factors.

#include <memory>
#include <random>

#include "grasshf/hf.hpp"
#include "test_support.hpp"

namespace grasshf::testsupport {

inline IntegralSet make_integral_fixture(Index d, Index na, Index nb, std::uint64_t seed,
                                         bool identity_overlap = false) {
    std::mt19937_64 rng(seed);
    IntegralSet ints;
    ints.d = d;
    ints.n_alpha = na;
    ints.n_beta = nb;
    ints.e_nuc = 0.7;
    ints.S = identity_overlap ? DenseMatrix::Identity(d, d) : random_spd(d, rng, 1.0);
    if (!identity_overlap) ints.S /= ints.S.norm() / std::sqrt(static_cast<double>(d));
    ints.h = random_symmetric(d, rng) - 1.5 * DenseMatrix::Identity(d, d);

    // g[i,j,k,l] = sum_m B_m(i,k) B_m(j,l) with symmetric B_m: satisfies the
    // full eight-fold symmetry and keeps the Coulomb part positive.
    std::vector<DenseMatrix> factors;
    for (int m = 0; m < 3; ++m) factors.push_back(0.35 * random_symmetric(d, rng));
    ints.g.assign(static_cast<std::size_t>(d * d * d * d), 0.0);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j)
            for (Index k = 0; k < d; ++k)
                for (Index l = 0; l < d; ++l) {
                    double v = 0.0;
                    for (const auto& B : factors) v += B(i, k) * B(j, l);
                    ints.g_at(i, j, k, l) = v;
                }
    return ints;
}

// Energy as the explicit fourth-degree polynomial: one-electron sums plus
// same-spin (Coulomb minus exchange) and opposite-spin Coulomb quartics.
// No density or Fock intermediates.
inline double brute_force_energy(const SpinPair& pair, const IntegralSet& ints) {
    const Index d = ints.d;
    auto one_electron = [&](const DenseMatrix& C) {
        double e = 0.0;
        for (Index mu = 0; mu < C.cols(); ++mu)
            for (Index i = 0; i < d; ++i)
                for (Index j = 0; j < d; ++j) e += C(i, mu) * C(j, mu) * ints.h(i, j);
        return e;
    };
    auto same_spin = [&](const DenseMatrix& C) {
        double e = 0.0;
        for (Index mu = 0; mu < C.cols(); ++mu)
            for (Index nu = 0; nu < C.cols(); ++nu)
                for (Index i = 0; i < d; ++i)
                    for (Index j = 0; j < d; ++j)
                        for (Index k = 0; k < d; ++k)
                            for (Index l = 0; l < d; ++l)
                                e += C(i, mu) * C(j, nu) * C(k, mu) * C(l, nu) *
                                     (ints.g_at(i, j, k, l) - ints.g_at(i, j, l, k));
        return 0.5 * e;
    };
    auto cross_spin = [&](const DenseMatrix& Ca, const DenseMatrix& Cb) {
        double e = 0.0;
        for (Index mu = 0; mu < Ca.cols(); ++mu)
            for (Index nu = 0; nu < Cb.cols(); ++nu)
                for (Index i = 0; i < d; ++i)
                    for (Index j = 0; j < d; ++j)
                        for (Index k = 0; k < d; ++k)
                            for (Index l = 0; l < d; ++l)
                                e += Ca(i, mu) * Cb(j, nu) * Ca(k, mu) * Cb(l, nu) *
                                     ints.g_at(i, j, k, l);
        return e;
    };
    return one_electron(pair.C_alpha) + one_electron(pair.C_beta) + same_spin(pair.C_alpha) +
           same_spin(pair.C_beta) + cross_spin(pair.C_alpha, pair.C_beta) + ints.e_nuc;
}

// Central finite difference of the energy in every coefficient, stacked
// (alpha block first, column-major inside each block).
inline Vector fd_energy_gradient(const SpinPair& pair, const IntegralSet& ints,
                                 double h = 1e-5) {
    const Index na = pair.C_alpha.cols(), nb = pair.C_beta.cols(), d = ints.d;
    Vector out(d * (na + nb));
    Index at = 0;
    for (int block = 0; block < 2; ++block) {
        const Index cols = block == 0 ? na : nb;
        for (Index q = 0; q < cols; ++q)
            for (Index p = 0; p < d; ++p) {
                SpinPair plus = pair, minus = pair;
                DenseMatrix& cp = block == 0 ? plus.C_alpha : plus.C_beta;
                DenseMatrix& cm = block == 0 ? minus.C_alpha : minus.C_beta;
                cp(p, q) += h;
                cm(p, q) -= h;
                out(at++) = (energy(plus, ints) - energy(minus, ints)) / (2.0 * h);
            }
    }
    return out;
}

// Central finite difference of the analytic gradient: column p + d*q (plus
// beta offset) holds d(grad)/d(coefficient).
inline DenseMatrix fd_gradient_jacobian(const SpinPair& pair, const IntegralSet& ints,
                                        double h = 1e-5) {
    const Index na = pair.C_alpha.cols(), nb = pair.C_beta.cols(), d = ints.d;
    const Index n_total = d * (na + nb);
    auto stacked_gradient = [&](const SpinPair& at) {
        auto [ga, gb] = euclidean_gradient(at, ints);
        Vector out(n_total);
        out.head(d * na) = vec(ga);
        if (nb > 0) out.tail(d * nb) = vec(gb);
        return out;
    };
    DenseMatrix H(n_total, n_total);
    Index col = 0;
    for (int block = 0; block < 2; ++block) {
        const Index cols = block == 0 ? na : nb;
        for (Index q = 0; q < cols; ++q)
            for (Index p = 0; p < d; ++p) {
                SpinPair plus = pair, minus = pair;
                DenseMatrix& cp = block == 0 ? plus.C_alpha : plus.C_beta;
                DenseMatrix& cm = block == 0 ? minus.C_alpha : minus.C_beta;
                cp(p, q) += h;
                cm(p, q) -= h;
                H.col(col++) = (stacked_gradient(plus) - stacked_gradient(minus)) / (2.0 * h);
            }
    }
    return H;
}

}  // namespace grasshf::testsupport
