#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "grasshf/manifold.hpp"
#include "test_support.hpp"

using namespace grasshf;
using namespace grasshf::testsupport;

namespace {

// Class projector C (C^T S C)^{-1} C^T S: invariant under right GL(N) action,
// so it identifies the Grassmann class even for mildly infeasible C.
DenseMatrix class_projector(const DenseMatrix& C, const DenseMatrix& S) {
    const DenseMatrix G = C.transpose() * S * C;
    return C * G.ldlt().solve(C.transpose() * S);
}

GrassmannPoint sample_point(const MetricPtr& m, Index N, std::uint64_t seed) {
    return random_point(m, N, seed);
}

}  // namespace

TEST_CASE("metric basis invariants") {
    std::mt19937_64 rng(21);
    MetricPtr m = make_metric(random_spd(5, rng));
    CHECK((m->O.transpose() * m->S * m->O - DenseMatrix::Identity(5, 5)).norm() < 1e-10);
    CHECK((m->O_inv * m->O - DenseMatrix::Identity(5, 5)).norm() < 1e-10);
    DenseMatrix X = random_matrix(5, 2, rng);
    CHECK((m->apply_S_inv(m->S * X) - X).norm() < 1e-10 * X.norm());
}

TEST_CASE("point construction checks feasibility") {
    std::mt19937_64 rng(22);
    MetricPtr m = make_metric(random_spd(4, rng));
    GrassmannPoint pt = sample_point(m, 2, 7);
    CHECK(feasibility_residual(pt) < 1e-10);
    CHECK_NOTHROW((void)make_point(m, pt.C));
    CHECK_THROWS_AS((void)make_point(m, 1.01 * pt.C), std::invalid_argument);
}

TEST_CASE("project_stiefel_tangent") {
    SUBCASE("circle: direction along the point dies") {
        MetricPtr m = make_identity_metric(1);
        GrassmannPoint pt{m, DenseMatrix::Ones(1, 1)};
        DenseMatrix mu = DenseMatrix::Ones(1, 1);
        CHECK(project_stiefel_tangent(pt, mu).norm() < 1e-14);
    }

    SUBCASE("lands in the tangent space and is idempotent") {
        std::mt19937_64 rng(23);
        MetricPtr m = make_metric(random_spd(5, rng));
        GrassmannPoint pt = sample_point(m, 2, 3);
        DenseMatrix mu = random_matrix(5, 2, rng);
        DenseMatrix nu = project_stiefel_tangent(pt, mu);
        DenseMatrix skew = pt.C.transpose() * m->S * nu;
        CHECK((skew + skew.transpose()).norm() < 1e-10);
        CHECK((project_stiefel_tangent(pt, nu) - nu).norm() < 1e-12);
    }
}

TEST_CASE("project_horizontal") {
    std::mt19937_64 rng(24);
    MetricPtr m = make_metric(random_spd(6, rng));
    GrassmannPoint pt = sample_point(m, 2, 5);

    SUBCASE("kills the representative and fixes horizontal input") {
        CHECK(project_horizontal(pt, pt.C).eta.norm() < 1e-10);
        HorizontalTangent h = random_horizontal(pt, 99);
        CHECK((project_horizontal(pt, h.eta).eta - h.eta).norm() < 1e-12);
    }

    SUBCASE("residual and idempotence on random input") {
        DenseMatrix mu = random_matrix(6, 2, rng);
        HorizontalTangent h = project_horizontal(pt, mu);
        CHECK((pt.C.transpose() * m->S * h.eta).norm() < 1e-10);
        CHECK((project_horizontal(pt, h.eta).eta - h.eta).norm() < 1e-12);
    }

    SUBCASE("self-adjoint in the metric inner product") {
        DenseMatrix mu = random_matrix(6, 2, rng);
        DenseMatrix nu = random_matrix(6, 2, rng);
        const DenseMatrix Pmu = project_horizontal(pt, mu).eta;
        const DenseMatrix Pnu = project_horizontal(pt, nu).eta;
        const double a = (Pmu.array() * (m->S * nu).array()).sum();
        const double b = (mu.array() * (m->S * Pnu).array()).sum();
        CHECK(std::abs(a - b) < 1e-10 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("riemannian_gradient") {
    SUBCASE("zero gradient and identity metric reduction") {
        std::mt19937_64 rng(25);
        MetricPtr m = make_identity_metric(4);
        GrassmannPoint pt = sample_point(m, 2, 1);
        CHECK(riemannian_gradient(pt, DenseMatrix::Zero(4, 2)).eta.norm() == 0.0);
        DenseMatrix g = random_matrix(4, 2, rng);
        DenseMatrix expected = g - pt.C * (pt.C.transpose() * g);
        CHECK((riemannian_gradient(pt, g).eta - expected).norm() < 1e-12);
    }

    SUBCASE("defining property against the directional derivative") {
        std::mt19937_64 rng(26);
        MetricPtr m = make_metric(random_spd(5, rng));
        GrassmannPoint pt = sample_point(m, 2, 2);
        DenseMatrix g = random_matrix(5, 2, rng);
        HorizontalTangent grad = riemannian_gradient(pt, g);
        for (std::uint64_t s = 0; s < 5; ++s) {
            HorizontalTangent h = random_horizontal(pt, 100 + s);
            const double lhs = inner(pt, grad, h);
            const double rhs = (g.array() * h.eta.array()).sum();
            CHECK(std::abs(lhs - rhs) < 1e-9 * (1.0 + std::abs(rhs)));
        }
    }

    SUBCASE("finite differences on a quadratic trace cost") {
        std::mt19937_64 rng(27);
        MetricPtr m = make_identity_metric(3);
        GrassmannPoint pt = sample_point(m, 1, 4);
        DenseMatrix A = random_symmetric(3, rng);
        auto f = [&](const GrassmannPoint& p) { return (p.C.transpose() * A * p.C).trace(); };
        HorizontalTangent grad = riemannian_gradient(pt, 2.0 * A * pt.C);
        HorizontalTangent h = random_horizontal(pt, 8);
        const double t = 1e-5;
        const double fd = (f(geodesic(pt, h, t)) - f(geodesic(pt, h, -t))) / (2.0 * t);
        const double an = inner(pt, grad, h);
        CHECK(std::abs(fd - an) < 1e-6 * (1.0 + std::abs(fd)));
    }
}

TEST_CASE("inner product") {
    std::mt19937_64 rng(28);
    MetricPtr m = make_metric(random_spd(4, rng));
    GrassmannPoint pt = sample_point(m, 2, 6);
    HorizontalTangent a = random_horizontal(pt, 1);
    HorizontalTangent b = random_horizontal(pt, 2);

    HorizontalTangent zero{pt, DenseMatrix::Zero(4, 2)};
    CHECK(inner(pt, zero, b) == 0.0);
    CHECK(inner(pt, a, a) > 0.0);
    CHECK(std::abs(inner(pt, a, b) - inner(pt, b, a)) < 1e-14);

    // Agrees with the vectorized form through the Kronecker-lifted metric.
    const double direct = inner(pt, a, b);
    const double lifted = vec(a.eta).dot(kron(DenseMatrix::Identity(2, 2), m->S) * vec(b.eta));
    CHECK(std::abs(direct - lifted) < 1e-12 * (1.0 + std::abs(direct)));

    GrassmannPoint other = sample_point(m, 2, 7);
    HorizontalTangent c = random_horizontal(other, 3);
    CHECK_THROWS_AS((void)inner(pt, a, c), std::invalid_argument);
}

TEST_CASE("geodesic") {
    SUBCASE("t = 0 returns the base point exactly") {
        std::mt19937_64 rng(29);
        MetricPtr m = make_metric(random_spd(5, rng));
        GrassmannPoint pt = sample_point(m, 2, 9);
        HorizontalTangent h = random_horizontal(pt, 10);
        CHECK((geodesic(pt, h, 0.0).C - pt.C).norm() == 0.0);
    }

    SUBCASE("zero velocity stays put for all t") {
        std::mt19937_64 rng(30);
        MetricPtr m = make_metric(random_spd(4, rng));
        GrassmannPoint pt = sample_point(m, 2, 11);
        HorizontalTangent h{pt, DenseMatrix::Zero(4, 2)};
        CHECK((geodesic(pt, h, 1.7).C - pt.C).norm() < 1e-14);
    }

    SUBCASE("great circle") {
        MetricPtr m = make_identity_metric(2);
        DenseMatrix C(2, 1);
        C << 1, 0;
        GrassmannPoint pt = make_point(m, C);
        const double theta = 0.8;
        DenseMatrix e(2, 1);
        e << 0, theta;
        GrassmannPoint moved = geodesic(pt, {pt, e}, 1.0);
        CHECK(moved.C(0, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-12));
        CHECK(moved.C(1, 0) == doctest::Approx(std::sin(theta)).epsilon(1e-12));
    }

    SUBCASE("feasibility along the curve and the second-derivative law") {
        std::mt19937_64 rng(31);
        MetricPtr m = make_metric(random_spd(6, rng));
        GrassmannPoint pt = sample_point(m, 2, 12);
        HorizontalTangent h = random_horizontal(pt, 13);
        h.eta /= product_norm({pt, pt}, {h, h}) / std::numbers::sqrt2;

        GeodesicFactors f = geodesic_factors(pt, h);
        for (double t : {0.1, 0.5, 1.0, 2.0})
            CHECK(feasibility_residual(geodesic_from(f, t)) < 1e-9);

        const DenseMatrix Q = h.eta.transpose() * m->S * h.eta;
        const double step = 1e-4;
        for (double t : {0.0, 0.7}) {
            DenseMatrix second = (geodesic_from(f, t + step).C - 2.0 * geodesic_from(f, t).C +
                                  geodesic_from(f, t - step).C) /
                                 (step * step);
            DenseMatrix expected = -geodesic_from(f, t).C * Q;
            CHECK((second - expected).norm() < 1e-5 * (1.0 + expected.norm()));
        }
    }

    SUBCASE("invariant under SVD gauge changes") {
        std::mt19937_64 rng(32);
        MetricPtr m = make_metric(random_spd(5, rng));
        GrassmannPoint pt = sample_point(m, 2, 14);

        // Velocity engineered to have equal singular values: columns of U
        // must be orthogonal to O^{-1} C for horizontality.
        DenseMatrix Chat = m->O_inv * pt.C;
        DenseMatrix raw = random_matrix(5, 2, rng);
        raw -= Chat * (Chat.transpose() * raw);
        Eigen::HouseholderQR<DenseMatrix> qr(raw);
        DenseMatrix U = qr.householderQ() * DenseMatrix::Identity(5, 2);
        DenseMatrix V = random_orthogonal(2, rng);
        Vector D(2);
        D << 0.9, 0.9;
        HorizontalTangent h{pt, m->O * U * D.asDiagonal() * V};
        CHECK((pt.C.transpose() * m->S * h.eta).norm() < 1e-10);

        GeodesicFactors direct{pt, h.eta, {U, D, V}};

        GeodesicFactors flipped = direct;
        flipped.svd.U.col(0) *= -1.0;
        flipped.svd.V.row(0) *= -1.0;

        GeodesicFactors swapped = direct;
        swapped.svd.U.col(0).swap(swapped.svd.U.col(1));
        swapped.svd.V.row(0).swap(swapped.svd.V.row(1));

        HorizontalTangent probe = random_horizontal(pt, 15);
        for (const auto& variant : {flipped, swapped}) {
            CHECK((geodesic_from(variant, 1.3).C - geodesic_from(direct, 1.3).C).norm() < 1e-10);
            CHECK((parallel_transport_from(variant, probe.eta, 1.3).eta -
                   parallel_transport_from(direct, probe.eta, 1.3).eta)
                      .norm() < 1e-10);
        }
    }
}

TEST_CASE("parallel transport") {
    std::mt19937_64 rng(33);
    MetricPtr m = make_metric(random_spd(6, rng));
    GrassmannPoint pt = sample_point(m, 2, 16);
    HorizontalTangent dir = random_horizontal(pt, 17);
    HorizontalTangent mu = random_horizontal(pt, 18);

    SUBCASE("identity at t = 0") {
        HorizontalTangent moved = parallel_transport(pt, dir, mu, 0.0);
        CHECK((moved.eta - mu.eta).norm() == 0.0);
    }

    SUBCASE("isometry and horizontality at the destination") {
        GeodesicFactors f = geodesic_factors(pt, dir);
        HorizontalTangent m1 = parallel_transport_from(f, mu.eta, 0.9);
        HorizontalTangent m2 = parallel_transport_from(f, dir.eta, 0.9);
        GrassmannPoint dest = geodesic_from(f, 0.9);

        CHECK((dest.C.transpose() * m->S * m1.eta).norm() < 1e-9);
        const double before = inner(pt, mu, dir);
        const double after = inner(dest, m1, m2);
        CHECK(std::abs(before - after) < 1e-9 * (1.0 + std::abs(before)));
        const double norm_before = inner(pt, mu, mu);
        const double norm_after = inner(dest, m1, m1);
        CHECK(std::abs(norm_before - norm_after) < 1e-9 * (1.0 + norm_before));
    }

    SUBCASE("transporting the direction matches the closed form") {
        GeodesicFactors f = geodesic_factors(pt, dir);
        HorizontalTangent general = parallel_transport_from(f, dir.eta, 1.1);
        HorizontalTangent special = transport_direction(f, 1.1);
        CHECK((general.eta - special.eta).norm() < 1e-11 * (1.0 + special.eta.norm()));
    }

    SUBCASE("circle rotation") {
        MetricPtr mid = make_identity_metric(2);
        DenseMatrix C(2, 1);
        C << 1, 0;
        GrassmannPoint p = make_point(mid, C);
        const double theta = 0.6;
        DenseMatrix e(2, 1);
        e << 0, theta;
        HorizontalTangent v{p, e};
        HorizontalTangent moved = parallel_transport(p, v, v, 1.0);
        CHECK(moved.eta(0, 0) == doctest::Approx(-theta * std::sin(theta)).epsilon(1e-12));
        CHECK(moved.eta(1, 0) == doctest::Approx(theta * std::cos(theta)).epsilon(1e-12));
    }
}

TEST_CASE("product operations") {
    std::mt19937_64 rng(34);
    MetricPtr m1 = make_metric(random_spd(5, rng));
    MetricPtr m2 = make_metric(random_spd(3, rng));
    ProductPoint p{sample_point(m1, 2, 19), sample_point(m2, 1, 20)};
    ProductTangent v{random_horizontal(p.first, 21), random_horizontal(p.second, 22)};

    SUBCASE("zero tangent fixes the point") {
        ProductTangent zero{{p.first, DenseMatrix::Zero(5, 2)},
                            {p.second, DenseMatrix::Zero(3, 1)}};
        ProductPoint q = product_exp(p, zero, 1.0);
        CHECK((q.first.C - p.first.C).norm() < 1e-14);
        CHECK((q.second.C - p.second.C).norm() < 1e-14);
    }

    SUBCASE("one zero component moves only the other factor") {
        ProductTangent half{{p.first, DenseMatrix::Zero(5, 2)}, v.second};
        ProductPoint q = product_exp(p, half, 0.7);
        CHECK((q.first.C - p.first.C).norm() < 1e-14);
        CHECK((q.second.C - p.second.C).norm() > 1e-3);
    }

    SUBCASE("norm adds in squares") {
        const double total = product_inner(p, v, v);
        const double parts = inner(p.first, v.first, v.first) +
                             inner(p.second, v.second, v.second);
        CHECK(std::abs(total - parts) < 1e-12 * (1.0 + parts));
        CHECK(product_norm(p, v) == doctest::Approx(std::sqrt(parts)).epsilon(1e-12));
    }
}

TEST_CASE("reorthonormalize") {
    std::mt19937_64 rng(35);
    MetricPtr m = make_metric(random_spd(5, rng));
    GrassmannPoint pt = sample_point(m, 2, 23);

    SUBCASE("feasible input keeps its span") {
        GrassmannPoint out = reorthonormalize(pt);
        CHECK(feasibility_residual(out) < 1e-12);
        CHECK((class_projector(out.C, m->S) - class_projector(pt.C, m->S)).norm() < 1e-12);
    }

    SUBCASE("uniform scaling is repaired exactly") {
        GrassmannPoint drifted{m, 1.001 * pt.C};
        GrassmannPoint out = reorthonormalize(drifted);
        CHECK(feasibility_residual(out) < 1e-12);
        CHECK((class_projector(out.C, m->S) - class_projector(pt.C, m->S)).norm() < 1e-10);
    }

    SUBCASE("small perturbations keep the span close") {
        GrassmannPoint drifted{m, pt.C + 1e-5 * random_matrix(5, 2, rng)};
        GrassmannPoint out = reorthonormalize(drifted);
        CHECK(feasibility_residual(out) < 1e-12);
        CHECK((class_projector(out.C, m->S) - class_projector(drifted.C, m->S)).norm() < 1e-4);
    }

    SUBCASE("tangent transform stays horizontal") {
        GrassmannPoint drifted{m, pt.C + 1e-6 * random_matrix(5, 2, rng)};
        DenseMatrix raw = random_matrix(5, 2, rng);
        // Oblique projection makes eta exactly horizontal at the drifted
        // representative even though its Gram matrix is off identity.
        const DenseMatrix G = drifted.C.transpose() * m->S * drifted.C;
        DenseMatrix eta =
            raw - drifted.C * G.ldlt().solve((m->S * drifted.C).transpose() * raw);
        CHECK((drifted.C.transpose() * m->S * eta).norm() < 1e-12);
        auto [out, T] = reorthonormalize_with_transform(drifted);
        CHECK((out.C.transpose() * m->S * (eta * T)).norm() < 1e-10);
    }

    SUBCASE("rank deficiency is an error") {
        DenseMatrix C = pt.C;
        C.col(1) = C.col(0);
        GrassmannPoint broken{m, C};
        CHECK_THROWS_AS((void)reorthonormalize(broken), std::domain_error);
    }
}

TEST_CASE("seeded generators are deterministic and valid") {
    std::mt19937_64 rng(36);
    MetricPtr m = make_metric(random_spd(6, rng));
    GrassmannPoint a = random_point(m, 3, 42);
    GrassmannPoint b = random_point(m, 3, 42);
    CHECK((a.C - b.C).norm() == 0.0);
    CHECK(feasibility_residual(a) < 1e-10);

    HorizontalTangent h1 = random_horizontal(a, 43);
    HorizontalTangent h2 = random_horizontal(a, 43);
    CHECK((h1.eta - h2.eta).norm() == 0.0);
    CHECK((a.C.transpose() * m->S * h1.eta).norm() < 1e-10);

    GrassmannPoint c = random_point(m, 3, 44);
    CHECK((a.C - c.C).norm() > 1e-6);
}
