#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "mz/pointsets.hpp"
#include "mz/util.hpp"

using namespace mz;

namespace {

const ManifoldModel kCircle = ManifoldModel::circle();

SignedMeasure unit_atoms(const ManifoldModel& m, const std::vector<Point>& pts, double w = 1.0) {
    return SignedMeasure::atomic(m, pts, std::vector<double>(pts.size(), w));
}

}  // namespace

TEST_CASE("max separated subset on the circle") {
    // eps = pi: two points survive.  oracle: no 3 circle points are pairwise
    // pi-separated (the three arcs between consecutive points add to 2 pi, so
    // some pairwise distance is < pi unless exactly antipodal)
    auto dense = grid_circle(720);
    for (std::size_t i = 0; i < 720; ++i)
        for (std::size_t j = i + 1; j < 720; ++j) {
            if (geodesic_distance(kCircle, dense[i], dense[j]) < kPi) continue;
            for (std::size_t k = j + 1; k < 720; ++k) {
                bool all_pi = geodesic_distance(kCircle, dense[i], dense[k]) >= kPi &&
                              geodesic_distance(kCircle, dense[j], dense[k]) >= kPi;
                REQUIRE(!all_pi);
            }
        }
    PointSet sep = max_separated_subset(PointSet{kCircle, dense}, kPi);
    CHECK(sep.pts.size() == 2);

    // eps beyond the diameter: single point
    PointSet one = max_separated_subset(PointSet{kCircle, dense}, kPi + 0.5);
    CHECK(one.pts.size() == 1);

    // already separated input is kept verbatim
    auto eight = grid_circle(8);
    PointSet kept = max_separated_subset(PointSet{kCircle, eight}, kTwoPi / 8.0);
    CHECK(kept.pts.size() == 8);

    CHECK_THROWS(max_separated_subset(PointSet{kCircle, {}}, 0.1));
}

TEST_CASE("max separated subset: separation and maximality") {
    Rng rng(3);
    for (const ManifoldModel& m : {ManifoldModel::sphere2(), ManifoldModel::torus2()}) {
        std::vector<Point> cloud;
        for (int i = 0; i < 2000; ++i) cloud.push_back(random_point(m, rng));
        double eps = 0.35;
        PointSet sub = max_separated_subset(PointSet{m, cloud}, eps);
        CHECK(min_separation(sub) >= eps);
        for (const Point& p : cloud) {
            double dmin = 1e300;
            for (const Point& c : sub.pts) dmin = std::min(dmin, geodesic_distance(m, p, c));
            CHECK(dmin < eps);
        }
    }
}

TEST_CASE("greedy subset ignores appended duplicates") {
    Rng rng(31);
    std::vector<Point> cloud;
    for (int i = 0; i < 300; ++i) cloud.push_back(random_point(kCircle, rng));
    PointSet a = max_separated_subset(PointSet{kCircle, cloud}, 0.2);
    std::vector<Point> doubled = cloud;
    doubled.insert(doubled.end(), cloud.begin(), cloud.end());
    PointSet b = max_separated_subset(PointSet{kCircle, doubled}, 0.2);
    REQUIRE(a.pts.size() == b.pts.size());
    for (std::size_t i = 0; i < a.pts.size(); ++i)
        CHECK(geodesic_distance(kCircle, a.pts[i], b.pts[i]) == 0.0);
}

TEST_CASE("mesh norm") {
    auto fine = grid_circle(4096);
    PointSet four{kCircle, grid_circle(4)};
    CHECK(mesh_norm(four, fine) == doctest::Approx(kPi / 4.0).epsilon(1e-3));
    PointSet self{kCircle, grid_circle(64)};
    CHECK(mesh_norm(self, self.pts) == 0.0);
    PointSet single{kCircle, {{0.0, 0}}};
    CHECK(mesh_norm(single, fine) == doctest::Approx(kPi).epsilon(1e-3));
    CHECK_THROWS(mesh_norm(PointSet{kCircle, {}}, fine));
}

TEST_CASE("min separation") {
    PointSet eight{kCircle, grid_circle(8)};
    CHECK(min_separation(eight) == doctest::Approx(kTwoPi / 8.0).epsilon(1e-14));
    PointSet anti{kCircle, {{0.0, 0}, {kPi, 0}}};
    CHECK(min_separation(anti) == doctest::Approx(kPi).epsilon(1e-14));
    PointSet dup{kCircle, {{0.5, 0}, {0.5, 0}, {2.0, 0}}};
    CHECK(min_separation(dup) == 0.0);
    CHECK_THROWS(min_separation(PointSet{kCircle, {{0.1, 0}}}));
    // with a grid: q(C)/2 <= delta(C) sanity holds for equispaced sets
    CHECK(min_separation(eight, grid_circle(2048)) == doctest::Approx(kTwoPi / 8.0));
}

TEST_CASE("overlap count") {
    PointSet eight{kCircle, grid_circle(8)};
    auto dense = grid_circle(4096);
    double q = kTwoPi / 8.0;
    CHECK(overlap_count(eight, q / 4.0, dense) == 1);
    CHECK(overlap_count(eight, kPi, dense) == 8);
    // radius q: an atom plus both neighbors; oracle by brute force
    int oracle = 0;
    for (const Point& p : dense) {
        int c = 0;
        for (const Point& a : eight.pts)
            if (geodesic_distance(kCircle, p, a) <= q) ++c;
        oracle = std::max(oracle, c);
    }
    CHECK(oracle == 3);
    CHECK(overlap_count(eight, q, dense) == 3);
}

TEST_CASE("base partition: first-index cells") {
    CellComplex cells = CellComplex::base(kCircle, {{0.0, 0}, {kPi, 0}}, kPi / 2.0 + 0.1);
    // any point within the radius of center 0 belongs to cell 0
    CHECK(cells.cell_of({0.3, 0}) == 0);
    CHECK(cells.cell_of({kPi / 2.0 + 0.05, 0}) == 0);   // overlap resolved to lower index
    CHECK(cells.cell_of({kPi - 0.2, 0}) == 1);
    // exhaustive: the labels partition a probe grid
    auto probe = grid_circle(1000);
    cells.validate_cover(probe);
    for (const Point& p : probe) {
        int c = cells.cell_of(p);
        CHECK(c >= 0);
        CHECK(c < 2);
        // membership matches the spelled-out rule
        int expect = (geodesic_distance(kCircle, p, {0.0, 0}) <= kPi / 2.0 + 0.1) ? 0 : 1;
        CHECK(c == expect);
    }
    // radius below the mesh norm leaves orphans
    CellComplex tight = CellComplex::base(kCircle, {{0.0, 0}, {kPi, 0}}, 1.0);
    CHECK_THROWS_AS(tight.validate_cover(probe), std::domain_error);
}

TEST_CASE("merge partition: no-op when all cells are heavy") {
    auto centers = grid_circle(16);
    CellComplex cells = CellComplex::base(kCircle, centers, kTwoPi / 32.0 * 1.05);
    SignedMeasure mu = SignedMeasure::volume(kCircle, 200.0);
    auto [merged, info] = merge_partition(cells, mu, cells.containment_radius());
    CHECK(merged.cell_count() == 16);
    for (std::size_t k = 0; k < 16; ++k) CHECK(info.phi[k] == static_cast<int>(k));
    // tau mass is preserved cell-wise
    double total = 0.0;
    for (double v : info.cell_mass_after) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("merge partition: empty cell is absorbed") {
    // two centers, second ball entirely inside the first cell's claim:
    // stage-1 leaves the second cell empty so it must merge into the first
    CellComplex cells = CellComplex::base(kCircle, {{0.0, 0}, {0.3, 0}}, 1.2);
    SignedMeasure mu = SignedMeasure::volume(kCircle, 300.0);
    // cell 1 = B(0.3, 1.2) minus B(0, 1.2) = (1.2, 1.5]: nonempty. shrink:
    CellComplex cells2 = CellComplex::base(kCircle, {{0.0, 0}, {0.1, 0}}, kPi);
    auto [merged, info] = merge_partition(cells2, mu, kPi);
    CHECK(merged.cell_count() == 1);
    CHECK(info.phi[1] == 0);
    CHECK(info.cell_mass_after[0] == doctest::Approx(1.0).epsilon(1e-12));
    (void)cells;
}

TEST_CASE("merge partition: 3R containment verified on a dense grid") {
    auto centers = grid_circle(16);
    double r = kTwoPi / 16.0;
    CellComplex base = CellComplex::base(kCircle, centers, r);
    SignedMeasure mu = SignedMeasure::volume(kCircle, 400.0);
    auto [merged, info] = merge_partition(base, mu, r);
    auto probe = grid_circle(20000);
    for (const Point& p : probe) {
        int c = merged.cell_of(p);
        REQUIRE(c >= 0);
        CHECK(geodesic_distance(kCircle, p, merged.center(static_cast<std::size_t>(c))) <=
              3.0 * r + 1e-12);
    }
    CHECK(merged.containment_radius() <= 3.0 * r + 1e-12);
}

TEST_CASE("merge partition: tau not dominant raises") {
    // atoms only near zero; balls about far centers are empty
    CellComplex cells = CellComplex::base(kCircle, grid_circle(8), 1.0);
    SignedMeasure half = unit_atoms(kCircle, {{0.0, 0}, {0.05, 0}});
    CHECK_THROWS_WITH_AS(merge_partition(cells, half, 1.0),
                         "merge_partition: tau not dominant at scale", std::domain_error);
}

TEST_CASE("build_mz_partition on circle atoms with full audit") {
    std::size_t n = 400;
    SignedMeasure nu = unit_atoms(kCircle, grid_circle(n));
    double d = 1.0 / 81.0;
    auto grid = grid_circle(10000);
    Partition part = build_mz_partition(nu, d, grid);

    CHECK(part.size() > 0);
    CHECK(part.band_lo > 0.0);
    MESSAGE("circle partition: ", part.size(), " cells, band [", part.band_lo, ", ", part.band_hi,
            "]");

    // disjoint cover + containment audit on the grid
    for (const Point& p : grid) {
        int c = part.cell_of(p);
        REQUIRE(c >= 0);
        CHECK(geodesic_distance(kCircle, p, part.final_centers[static_cast<std::size_t>(c)]) <=
              81.0 * d + 1e-12);
    }
    // x_k in Y_k
    for (std::size_t k = 0; k < part.size(); ++k)
        CHECK(part.cell_of(part.final_centers[k]) == static_cast<int>(k));
    // every cell holds nu mass
    for (double v : part.nu_mass) CHECK(v > 0.0);
    // arcs replay the predicate
    for (const Point& p : grid) {
        int c = part.cell_of(p);
        bool inside = false;
        for (auto [a, b] : part.circle_arcs[static_cast<std::size_t>(c)])
            if (p.a >= a - 1e-12 && p.a < b + 1e-12) inside = true;
        CHECK(inside);
    }
    // arc masses sum to one
    double s = 0.0;
    for (double v : part.mu_mass) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("build_mz_partition with full-support density") {
    SignedMeasure mu = SignedMeasure::volume(kCircle, 600.0);
    auto grid = grid_circle(10000);
    Partition part = build_mz_partition(mu, 0.01, grid);
    for (double v : part.nu_mass) CHECK(v > 0.0);
    for (std::size_t k = 0; k < part.size(); ++k)
        CHECK(part.cell_of(part.final_centers[k]) == static_cast<int>(k));
    CHECK(part.band_hi / part.band_lo <= 100.0);
}

TEST_CASE("build_mz_partition rejects sparse support and bad scales") {
    auto grid = grid_circle(4096);
    // half circle: support mesh norm ~ pi/2 >> d
    std::vector<Point> half;
    for (int i = 0; i < 50; ++i) half.push_back({kPi * i / 50.0, 0});
    SignedMeasure nu = unit_atoms(kCircle, half);
    CHECK_THROWS_AS(build_mz_partition(nu, 0.01, grid), std::domain_error);

    SignedMeasure dense = unit_atoms(kCircle, grid_circle(2000));
    CHECK_THROWS_AS(build_mz_partition(dense, 0.05, grid), std::invalid_argument);  // d > 1/81
    PartitionOptions relax;
    relax.relax_d = true;
    CHECK_NOTHROW(build_mz_partition(dense, 0.05, grid, relax));
    CHECK_THROWS_AS(build_mz_partition(SignedMeasure::zero(kCircle), 0.01, grid),
                    std::invalid_argument);
}

TEST_CASE("merge preserves total tau mass through the pipeline") {
    SignedMeasure nu = unit_atoms(kCircle, grid_circle(500));
    auto grid = grid_circle(8192);
    Partition part = build_mz_partition(nu, 0.012, grid);
    double total = 0.0;
    for (double v : part.nu_mass) total += v;
    CHECK(total == doctest::Approx(nu.total_variation()).epsilon(1e-10));
}

TEST_CASE("torus partition at a modest scale") {
    ManifoldModel t = ManifoldModel::torus2();
    auto cloud = grid_torus(220);
    SignedMeasure nu = unit_atoms(t, cloud);
    auto grid = grid_torus(100);
    PartitionOptions opts;
    opts.relax_d = true;
    opts.mu_proxy_nodes = 400'000;
    Partition part = build_mz_partition(nu, 0.1, grid, opts);
    CHECK(part.size() > 10);
    for (double v : part.nu_mass) CHECK(v > 0.0);
    CHECK(part.band_lo > 0.0);
    for (const Point& p : grid) {
        int c = part.cell_of(p);
        REQUIRE(c >= 0);
        CHECK(geodesic_distance(t, p, part.final_centers[static_cast<std::size_t>(c)]) <=
              81.0 * 0.1);
    }
    MESSAGE("torus partition: ", part.size(), " cells, band ratio ",
            part.band_hi / part.band_lo);
}

TEST_CASE("trivial partition: one atom per cell") {
    std::size_t n = 17;
    SignedMeasure nu = SignedMeasure::atomic(kCircle, grid_circle(n),
                                             std::vector<double>(n, 1.0 / n));
    Partition part = trivial_partition(nu, grid_circle(4096));
    REQUIRE(part.size() == n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(part.nu_mass[k] == doctest::Approx(1.0 / n));
        // first-come cells are near-Voronoi arcs, equal up to the radius slack
        CHECK(part.mu_mass[k] > 0.85 / n);
        CHECK(part.mu_mass[k] < 1.20 / n);
        total += part.mu_mass[k];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}
