#pragma once

#include <memory>
#include <vector>

#include "grasshf/matops.hpp"
#include "grasshf/optim.hpp"

namespace grasshf {

enum class Spin { Alpha, Beta };

// Problem data for unrestricted Hartree-Fock over a finite basis: overlap S,
// one-electron matrix h, dense two-electron tensor g in the physicists'
// index convention (electron 1 on indices 1 and 3, electron 2 on 2 and 4),
// nuclear repulsion constant, and electron counts per spin. Immutable after
// load; shared read-only across threads.
struct IntegralSet {
    Index d = 0;
    Index n_alpha = 0;
    Index n_beta = 0;
    double e_nuc = 0.0;
    DenseMatrix S;
    DenseMatrix h;
    std::vector<double> g;  // flat, row-major over (i, j, k, l)

    double g_at(Index i, Index j, Index k, Index l) const {
        return g[static_cast<std::size_t>(((i * d + j) * d + k) * d + l)];
    }
    double& g_at(Index i, Index j, Index k, Index l) {
        return g[static_cast<std::size_t>(((i * d + j) * d + k) * d + l)];
    }
};

// Verifies h symmetry, S symmetric positive-definite, the 8-fold symmetry of
// g, electron counts (n_alpha >= 1, n_beta >= 0, both <= d), and finiteness.
// Throws std::invalid_argument describing the first violation.
void validate_integrals(const IntegralSet& ints);

// Orbital coefficient blocks; each satisfies C^T S C = Id when feasible.
// n_beta = 0 gives a legal zero-width beta block.
struct SpinPair {
    DenseMatrix C_alpha;
    DenseMatrix C_beta;
};

// P = C C^T.
DenseMatrix density(const DenseMatrix& C);

// F_ij = h_ij + sum_kl ((Pa + Pb)_kl g(i,k,j,l) - P_spin_kl g(i,j,k,l)).
DenseMatrix fock(const DenseMatrix& P_alpha, const DenseMatrix& P_beta, Spin spin,
                 const IntegralSet& ints);

// Total energy including the nuclear term:
// 1/2 sum_ij ((Pa+Pb)_ij h_ij + Pa_ij Fa_ij + Pb_ij Fb_ij) + E_nuc.
double energy(const SpinPair& pair, const IntegralSet& ints);

// (2 Fa Ca, 2 Fb Cb); valid off the manifold too.
std::pair<DenseMatrix, DenseMatrix> euclidean_gradient(const SpinPair& pair,
                                                       const IntegralSet& ints);

// Full second-derivative matrix of size d*(n_alpha + n_beta), blocks
// [[H_aa, H_ba^T], [H_ba, H_bb]] with column-major packing r + d*s inside
// each block.
DenseMatrix euclidean_hessian(const SpinPair& pair, const IntegralSet& ints);

// Adapter exposing the energy to the optimizers (C1 = alpha, C2 = beta).
class HartreeFockCost : public CostModel {
public:
    explicit HartreeFockCost(std::shared_ptr<const IntegralSet> ints)
        : ints_(std::move(ints)) {}

    double value(const DenseMatrix& C1, const DenseMatrix& C2) const override {
        return energy({C1, C2}, *ints_);
    }
    std::pair<DenseMatrix, DenseMatrix> euclidean_gradient(
        const DenseMatrix& C1, const DenseMatrix& C2) const override {
        return grasshf::euclidean_gradient({C1, C2}, *ints_);
    }
    DenseMatrix euclidean_hessian(const DenseMatrix& C1, const DenseMatrix& C2) const override {
        return grasshf::euclidean_hessian({C1, C2}, *ints_);
    }
    const IntegralSet& integrals() const { return *ints_; }

private:
    std::shared_ptr<const IntegralSet> ints_;
};

}  // namespace grasshf
