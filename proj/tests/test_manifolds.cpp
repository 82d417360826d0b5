#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mz/basis.hpp"
#include "mz/geometry.hpp"
#include "mz/util.hpp"

using namespace mz;

namespace {

const ManifoldModel kAll[] = {ManifoldModel::circle(), ManifoldModel::sphere2(),
                              ManifoldModel::torus2()};

}  // namespace

TEST_CASE("geodesic distance closed forms") {
    ManifoldModel c = ManifoldModel::circle();
    CHECK(geodesic_distance(c, {0.0, 0.0}, {kPi, 0.0}) == doctest::Approx(kPi).epsilon(1e-14));
    CHECK(geodesic_distance(c, {1.3, 0.0}, {1.3, 0.0}) == 0.0);

    ManifoldModel s = ManifoldModel::sphere2();
    Point north{0.0, 0.0};
    Point equator{kPi / 2.0, 1.0};
    CHECK(geodesic_distance(s, north, equator) == doctest::Approx(kPi / 2.0).epsilon(1e-14));

    ManifoldModel t = ManifoldModel::torus2();
    CHECK(geodesic_distance(t, {0.0, 0.0}, {kPi, kPi}) ==
          doctest::Approx(kPi * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("distance is symmetric and vanishes on the diagonal") {
    Rng rng(11);
    for (const ManifoldModel& m : kAll) {
        for (int i = 0; i < 200; ++i) {
            Point x = random_point(m, rng);
            Point y = random_point(m, rng);
            double dxy = geodesic_distance(m, x, y);
            CHECK(dxy == doctest::Approx(geodesic_distance(m, y, x)).epsilon(1e-14));
            CHECK(dxy >= 0.0);
            CHECK(dxy <= m.diameter + 1e-12);
            CHECK(geodesic_distance(m, x, x) == 0.0);
        }
    }
}

TEST_CASE("triangle inequality on random triples") {
    Rng rng(17);
    for (const ManifoldModel& m : kAll) {
        for (int i = 0; i < 1000; ++i) {
            Point x = random_point(m, rng);
            Point y = random_point(m, rng);
            Point z = random_point(m, rng);
            double xz = geodesic_distance(m, x, z);
            double xy = geodesic_distance(m, x, y);
            double yz = geodesic_distance(m, y, z);
            CHECK(xz <= xy + yz + 1e-12);
        }
    }
}

TEST_CASE("ball measure closed forms") {
    ManifoldModel c = ManifoldModel::circle();
    CHECK(ball_measure(c, {0.3, 0.0}, kPi / 4.0) == doctest::Approx(0.25).epsilon(1e-14));
    ManifoldModel s = ManifoldModel::sphere2();
    CHECK(ball_measure(s, {1.0, 2.0}, kPi / 2.0) == doctest::Approx(0.5).epsilon(1e-14));
    for (const ManifoldModel& m : kAll) {
        CHECK(ball_measure(m, {0.1, 0.2}, m.diameter) == 1.0);
        CHECK(ball_measure(m, {0.1, 0.2}, 2.0 * m.diameter) == 1.0);
    }
}

TEST_CASE("torus ball measure agrees with counting") {
    ManifoldModel t = ManifoldModel::torus2();
    auto grid = grid_torus(600);
    Point x{1.1, 4.9};
    for (double r : {0.4, 1.0, kPi - 0.1, 3.5, 4.0}) {
        std::size_t inside = 0;
        for (const Point& p : grid)
            if (geodesic_distance(t, x, p) <= r) ++inside;
        double counted = static_cast<double>(inside) / static_cast<double>(grid.size());
        CHECK(ball_measure(t, x, r) == doctest::Approx(counted).epsilon(0.0).scale(1.0).epsilon(0.01));
    }
}

TEST_CASE("ball growth: kappa1 upper bound and fitted lower band") {
    Rng rng(23);
    for (const ManifoldModel& m : kAll) {
        double c_lo = 1e300;
        for (int i = 0; i < 200; ++i) {
            Point x = random_point(m, rng);
            double r = rng.uniform(1e-3, 1.0);
            double ratio = ball_measure(m, x, r) / std::pow(r, m.alpha);
            CHECK(ratio <= m.kappa.k1 * (1.0 + 1e-12));
            c_lo = std::min(c_lo, ratio);
        }
        CHECK(c_lo > 0.0);
        MESSAGE(m.name(), " ball growth band: [", c_lo, ", ", m.kappa.k1, "]");
    }
}

TEST_CASE("doubling condition with one global constant") {
    Rng rng(29);
    for (const ManifoldModel& m : {ManifoldModel::circle(), ManifoldModel::sphere2()}) {
        double c_fit = 0.0;
        for (int i = 0; i < 500; ++i) {
            Point x = random_point(m, rng);
            double r = rng.uniform(1e-3, 1.0);
            double R = rng.uniform(r, m.diameter);
            double lhs = ball_measure(m, x, R);
            double rhs = std::pow(R / r, m.alpha) * ball_measure(m, x, r);
            c_fit = std::max(c_fit, lhs / rhs);
        }
        CHECK(c_fit <= 16.0);
        MESSAGE(m.name(), " doubling constant: ", c_fit);
    }
}

TEST_CASE("eigen_system dimensions") {
    ManifoldModel c = ManifoldModel::circle();
    CHECK(eigen_system(c, 2.0).dim() == 5);
    CHECK(eigen_system(c, 1.0).dim() == 3);
    // sphere, L = 2: degrees 0 and 1 pass, sqrt(6) > 2 excluded
    ManifoldModel s = ManifoldModel::sphere2();
    SpectralBasis bs = eigen_system(s, 2.0);
    CHECK(bs.dim() == 4);
    // brute-force the cut: count (2l+1) over l = 0 or l(l+1) <= L^2
    std::size_t expect = 0;
    for (int l = 0; l <= 10; ++l) {
        double ell = (l == 0) ? 1.0 : std::sqrt(static_cast<double>(l) * (l + 1));
        if (ell <= 2.0) expect += 2 * l + 1;
    }
    CHECK(bs.dim() == expect);
    CHECK_THROWS(eigen_system(c, 0.5));
}

TEST_CASE("frequencies start at one and are nondecreasing") {
    for (const ManifoldModel& m : kAll) {
        SpectralBasis b = eigen_system(m, 6.0);
        CHECK(b.ell(0) == 1.0);
        CHECK(b.eval(0, {0.7, 0.3}) == doctest::Approx(1.0).epsilon(1e-15));
        for (std::size_t k = 1; k < b.dim(); ++k) CHECK(b.ell(k) >= b.ell(k - 1));
        CHECK(b.ell(b.dim() - 1) <= 6.0);
    }
}

TEST_CASE("reference quadrature basics") {
    ManifoldModel c = ManifoldModel::circle();
    ReferenceQuadrature rule = reference_quadrature(c, 4.0);
    CHECK(rule.nodes.size() >= 21);
    CHECK(rule.exact_degree >= 10.0);
    for (double w : rule.weights) CHECK(w == doctest::Approx(1.0 / rule.nodes.size()));
    // integral of each basis function is delta_j0
    SpectralBasis b = eigen_system(c, 4.0);
    for (std::size_t j = 0; j < b.dim(); ++j) {
        double integral = rule.integrate([&](const Point& p) { return b.eval(j, p); });
        CHECK(std::abs(integral - (j == 0 ? 1.0 : 0.0)) < 1e-14);
    }
    // constant function integrates to one
    CHECK(rule.integrate([](const Point&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sphere rule kills degree-1 harmonics") {
    ManifoldModel s = ManifoldModel::sphere2();
    ReferenceQuadrature rule = reference_quadrature(s, 2.0);
    SpectralBasis b = eigen_system(s, 2.0);
    for (std::size_t j = 1; j < b.dim(); ++j) {
        double integral = rule.integrate([&](const Point& p) { return b.eval(j, p); });
        CHECK(std::abs(integral) < 1e-12);
    }
}

TEST_CASE("gram of eigen system is the identity under the reference rule") {
    for (const ManifoldModel& m : kAll) {
        double L = (m.kind == ManifoldKind::Circle) ? 8.0 : 4.0;
        SpectralBasis b = eigen_system(m, L);
        ReferenceQuadrature rule = reference_quadrature(m, L);
        std::vector<double> vals;
        std::vector<std::vector<double>> g(b.dim(), std::vector<double>(b.dim(), 0.0));
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            b.eval_all(rule.nodes[i], vals);
            for (std::size_t j = 0; j < b.dim(); ++j)
                for (std::size_t k = j; k < b.dim(); ++k)
                    g[j][k] += rule.weights[i] * vals[j] * vals[k];
        }
        for (std::size_t j = 0; j < b.dim(); ++j)
            for (std::size_t k = j; k < b.dim(); ++k)
                CHECK(std::abs(g[j][k] - (j == k ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("basis gradient norms") {
    ManifoldModel c = ManifoldModel::circle();
    SpectralBasis b = eigen_system(c, 3.0);
    // entry 1 is sqrt2 cos theta; gradient norm at pi/2 is sqrt2
    CHECK(b.gradient_norm(1, {kPi / 2.0, 0.0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(b.gradient_norm(0, {0.4, 0.0}) == 0.0);

    // sphere: gradient of the degree-1 zonal harmonic vanishes at the pole
    ManifoldModel s = ManifoldModel::sphere2();
    SpectralBasis bs = eigen_system(s, 2.0);
    // find the (l=1, m=0) entry
    std::size_t zonal = 0;
    for (std::size_t k = 0; k < bs.dim(); ++k)
        if (bs.entries()[k].i1 == 1 && bs.entries()[k].i2 == 0) zonal = k;
    CHECK(bs.gradient_norm(zonal, {0.0, 0.0}) < 1e-6);
    // and equals sqrt3 * sin(colat) gradient magnitude at the equator
    CHECK(bs.gradient_norm(zonal, {kPi / 2.0, 1.0}) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-6));
}

TEST_CASE("neighbor grid agrees with linear scan") {
    Rng rng(41);
    for (const ManifoldModel& m : kAll) {
        std::vector<Point> pts;
        for (int i = 0; i < 500; ++i) pts.push_back(random_point(m, rng));
        NeighborGrid grid(m, pts, 0.15);
        std::vector<std::size_t> hit;
        for (int q = 0; q < 100; ++q) {
            Point p = random_point(m, rng);
            double r = rng.uniform(0.01, 1.2);
            grid.query(p, r, hit);
            std::vector<std::size_t> expect;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (geodesic_distance(m, p, pts[i]) <= r) expect.push_back(i);
            CHECK(hit == expect);
            auto [ni, nd] = grid.nearest(p);
            double best = 1e300;
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                double d = geodesic_distance(m, p, pts[i]);
                if (d < best) {
                    best = d;
                    best_i = i;
                }
            }
            CHECK(ni == best_i);
            CHECK(nd == doctest::Approx(best).epsilon(1e-14));
        }
    }
}

TEST_CASE("canonical coordinates identify equal points") {
    ManifoldModel c = ManifoldModel::circle();
    Point p = canonical(c.kind, {kTwoPi + 0.25, 0.0});
    CHECK(p.a == doctest::Approx(0.25).epsilon(1e-14));
    ManifoldModel t = ManifoldModel::torus2();
    Point q = canonical(t.kind, {-0.5, 7.0});
    CHECK(q.a == doctest::Approx(kTwoPi - 0.5).epsilon(1e-14));
    CHECK(q.b == doctest::Approx(7.0 - kTwoPi).epsilon(1e-14));
    ManifoldModel s = ManifoldModel::sphere2();
    Point r = canonical(s.kind, {0.0, 2.2});
    CHECK(r.b == 0.0);  // poles get a fixed longitude
}
