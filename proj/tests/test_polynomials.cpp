#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "mz/kernels.hpp"
#include "mz/polynomials.hpp"
#include "mz/util.hpp"

using namespace mz;

namespace {

const ManifoldModel kCircle = ManifoldModel::circle();
const ManifoldModel kSphere = ManifoldModel::sphere2();

std::shared_ptr<const SpectralBasis> make_basis(const ManifoldModel& m, double L) {
    return std::make_shared<const SpectralBasis>(eigen_system(m, L));
}

DiffusionPolynomial unit_coeff(const std::shared_ptr<const SpectralBasis>& b, double L,
                               std::size_t which) {
    std::vector<double> c(b->dim_at(L), 0.0);
    c[which] = 1.0;
    return DiffusionPolynomial(b, L, c);
}

}  // namespace

TEST_CASE("norms of basic polynomials") {
    auto b = make_basis(kCircle, 4.0);
    ReferenceQuadrature rule = reference_quadrature(kCircle, 4.0);
    DiffusionPolynomial one = unit_coeff(b, 4.0, 0);
    for (double p : {1.0, 2.0, 3.5, kInfNorm})
        CHECK(norm_p(one, rule, p) == doctest::Approx(1.0).epsilon(1e-12));

    DiffusionPolynomial cosine = unit_coeff(b, 4.0, 1);  // sqrt2 cos theta
    CHECK(norm_p(cosine, rule, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm_p(cosine, rule, kInfNorm) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK_THROWS(norm_p(cosine, rule, 0.5));
}

TEST_CASE("norm against a signed measure") {
    auto b = make_basis(kCircle, 2.0);
    DiffusionPolynomial cosine = unit_coeff(b, 2.0, 1);
    SignedMeasure nu = SignedMeasure::atomic(kCircle, {{0.0, 0}, {kPi, 0}}, {0.5, 0.5});
    CHECK(norm_p(cosine, nu, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(norm_p(cosine, nu, kInfNorm) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("parseval and p-monotonicity") {
    auto b = make_basis(kCircle, 12.0);
    ReferenceQuadrature rule = reference_quadrature(kCircle, 12.0);
    for (int t = 0; t < 20; ++t) {
        DiffusionPolynomial P = random_polynomial(b, 12.0, 500 + t);
        double sq = 0.0;
        for (double c : P.coeff()) sq += c * c;
        CHECK(norm_p(P, rule, 2.0) == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
        // monotone in p for a probability measure
        double n1 = norm_p(P, rule, 1.0);
        double n2 = norm_p(P, rule, 2.0);
        double n4 = norm_p(P, rule, 4.0);
        double ni = norm_p(P, rule, kInfNorm);
        CHECK(n1 <= n2 * (1.0 + 1e-12));
        CHECK(n2 <= n4 * (1.0 + 1e-12));
        CHECK(n4 <= ni * (1.0 + 1e-9));
    }
}

TEST_CASE("gradient norms") {
    auto b = make_basis(kCircle, 3.0);
    DiffusionPolynomial cosine = unit_coeff(b, 3.0, 1);
    CHECK(gradient_norm_at(cosine, {kPi / 2.0, 0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    DiffusionPolynomial one = unit_coeff(b, 3.0, 0);
    CHECK(gradient_norm_at(one, {1.0, 0}) == 0.0);

    // sphere: degree-1 zonal harmonic is critical at the pole
    auto bs = make_basis(kSphere, 2.0);
    std::size_t zonal = 0;
    for (std::size_t k = 0; k < bs->dim(); ++k)
        if (bs->entries()[k].i1 == 1 && bs->entries()[k].i2 == 0) zonal = k;
    DiffusionPolynomial Z = unit_coeff(bs, 2.0, zonal);
    CHECK(gradient_norm_at(Z, {0.0, 0.0}) < 1e-6);
}

TEST_CASE("christoffel sums") {
    SpectralBasis cb = eigen_system(kCircle, 64.0);
    for (int L = 1; L <= 64; ++L)
        CHECK(christoffel(cb, L, {0.37 * L, 0}) == doctest::Approx(2.0 * L + 1.0).epsilon(1e-12));

    SpectralBasis sb = eigen_system(kSphere, 6.0);
    // rotation invariance: equal at any two points
    Rng rng(11);
    double ref = christoffel(sb, 6.0, random_point(kSphere, rng));
    for (int i = 0; i < 10; ++i) {
        double v = christoffel(sb, 6.0, random_point(kSphere, rng));
        CHECK(v == doctest::Approx(ref).epsilon(1e-8));
    }
    // L = 2 keeps degrees 0 and 1: 1 + 3 squared harmonics
    CHECK(christoffel(sb, 2.0, {1.0, 2.0}) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("random polynomial determinism and energy") {
    auto b = make_basis(kCircle, 1.0);
    CHECK(b->dim_at(1.0) == 3);
    DiffusionPolynomial P1 = random_polynomial(b, 1.0, 99);
    DiffusionPolynomial P2 = random_polynomial(b, 1.0, 99);
    CHECK(P1.coeff() == P2.coeff());

    auto b8 = make_basis(kCircle, 8.0);
    double dim = static_cast<double>(b8->dim_at(8.0));
    double mean = 0.0;
    for (int t = 0; t < 200; ++t) {
        DiffusionPolynomial P = random_polynomial(b8, 8.0, 7000 + t);
        double sq = 0.0;
        for (double c : P.coeff()) sq += c * c;
        mean += sq;
    }
    mean /= 200.0;
    CHECK(std::abs(mean - dim) / dim < 0.10);
}

TEST_CASE("nikolskii ratios and growth exponent") {
    CHECK_THROWS(nikolskii_ratio(kCircle, {8.0}, 2.0, 2.0, 4, 1));
    NikolskiiReport rep = nikolskii_ratio(kCircle, {8.0, 16.0, 32.0, 64.0, 128.0}, 2.0, kInfNorm,
                                          10, 2024);
    CHECK(rep.claimed_exponent == doctest::Approx(0.5));
    CHECK(rep.slope == doctest::Approx(0.5).epsilon(0.3));  // within 0.15 absolute
    CHECK(std::abs(rep.slope - 0.5) <= 0.15);
    for (double v : rep.worst_ratio) CHECK(v >= 1.0 - 1e-12);

    // constant polynomial: every ratio is exactly one
    auto b = make_basis(kCircle, 4.0);
    ReferenceQuadrature rule = reference_quadrature(kCircle, 4.0);
    DiffusionPolynomial one = unit_coeff(b, 4.0, 0);
    CHECK(norm_p(one, rule, kInfNorm) / norm_p(one, rule, 1.0) == doctest::Approx(1.0).epsilon(1e-10));

    // p < 1 branch runs with quasi-norms and is flagged
    NikolskiiReport quasi = nikolskii_ratio(kCircle, {8.0, 16.0}, 0.5, 2.0, 4, 5);
    CHECK(quasi.quasi_norm);
    CHECK(quasi.claimed_exponent == doctest::Approx(kCircle.alpha * (2.0 - 0.5)));
}

TEST_CASE("bernstein inequality is sharp on the circle") {
    for (double L : {8.0, 16.0, 32.0}) {
        auto b = make_basis(kCircle, L);
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            DiffusionPolynomial P = random_polynomial(b, L, 31000 + t);
            // sup norms of P and P' via dense grid + golden refinement
            std::size_t n = static_cast<std::size_t>(64.0 * L);
            double np = 0.0, nd = 0.0;
            double best_p = 0.0, best_d = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double theta = kTwoPi * i / static_cast<double>(n);
                double vp = std::abs(P.eval({theta, 0}));
                double vd = std::abs(P.derivative_circle({theta, 0}));
                if (vp > np) {
                    np = vp;
                    best_p = theta;
                }
                if (vd > nd) {
                    nd = vd;
                    best_d = theta;
                }
            }
            double h = kTwoPi / static_cast<double>(n);
            np = std::max(np, golden_max([&](double x) { return std::abs(P.eval({x, 0})); },
                                         best_p - h, best_p + h));
            nd = std::max(nd, golden_max([&](double x) { return std::abs(P.derivative_circle({x, 0})); },
                                         best_d - h, best_d + h));
            worst = std::max(worst, nd / (L * np));
        }
        CHECK(worst <= 1.0 + 1e-6);
        // the extremal cos(L theta) attains the constant exactly
        std::vector<double> c(make_basis(kCircle, L)->dim_at(L), 0.0);
        c[c.size() - 2] = 1.0;  // sqrt2 cos(L theta)
        DiffusionPolynomial ext(make_basis(kCircle, L), L, c);
        double ratio = std::abs(ext.derivative_circle({kPi / (2.0 * L), 0})) /
                       (L * std::sqrt(2.0));
        CHECK(ratio >= 1.0 - 1e-9);
        CHECK(ratio <= 1.0 + 1e-6);
    }
}

TEST_CASE("product closure on circle and sphere") {
    // circle: trigonometric products close exactly at twice the degree
    auto b = make_basis(kCircle, 16.0);
    ReferenceQuadrature rule = reference_quadrature(kCircle, 0.5 * (2.0 + 2.0) * 16.0);
    for (int t = 0; t < 10; ++t) {
        DiffusionPolynomial Q = random_polynomial(b, 16.0, 900 + t);
        DiffusionPolynomial R = random_polynomial(b, 16.0, 1900 + t);
        ProductLeakage leak = product_leakage(Q, R, 2.0, rule);
        CHECK(leak.l2_relative <= 1e-12);
        CHECK(leak.grid_inf_residual <= 1e-10);
    }
    // constants leak nothing
    DiffusionPolynomial one = unit_coeff(b, 16.0, 0);
    CHECK(product_leakage(one, one, 2.0, rule).l2_relative <= 1e-14);

    // sphere: Gaunt closure at degree 3
    auto bs = make_basis(kSphere, 3.0);
    ReferenceQuadrature srule = reference_quadrature(kSphere, 0.5 * (2.0 + 2.0) * 3.0);
    for (int t = 0; t < 5; ++t) {
        DiffusionPolynomial Q = random_polynomial(bs, 3.0, 700 + t);
        DiffusionPolynomial R = random_polynomial(bs, 3.0, 1700 + t);
        ProductLeakage leak = product_leakage(Q, R, 2.0, srule);
        CHECK(leak.l2_relative <= 1e-10);
    }
    CHECK_THROWS(product_leakage(random_polynomial(b, 16.0, 1), random_polynomial(b, 16.0, 2),
                                 2.0, reference_quadrature(kCircle, 4.0)));
}
