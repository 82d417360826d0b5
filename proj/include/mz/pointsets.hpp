#pragma once

// Geodesic point-set geometry and measure-adapted partitions.
//
// The partition pipeline mirrors the constructive proof it implements:
//   stage 1: a maximal (d/2)-separated subset G1 of supp(nu); cell k of the
//            base partition is B(y_k, r1) minus all earlier balls, r1 = 3d/2
//            (covers the whole space because the support mesh norm is < d),
//   stage 2: merge cells whose mu-mass is below (1/N) min_z mu(B(z, r1)),
//   stage 3: the same merge driven by |nu|,
//   stage 4: the same merge driven by unit atoms on G3, which forces every
//            final cell to contain a member of G3; that member becomes x_k.
// Each merge sends a dropped center's cell to the neighbor whose cell grabs
// the largest share of the ball mass (lowest index on ties), so cells stay
// inside B(center, 3R) for merge radius R, and the final containment radius
// telescopes to 27 r1 = 40.5 d <= 81 d.
//
// Cells are predicates: a point is owned by the lowest-index stage-1 center
// within r1, then the owner is pushed through the merge maps.  Membership of
// any point is replayable in O(neighbors); no cell is ever stored as a point
// list.  On the circle the final cells are also computed exactly as unions of
// arcs, which gives exact per-cell masses.

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mz/geometry.hpp"
#include "mz/measures.hpp"

namespace mz {

struct PointSet {
    ManifoldModel m;
    std::vector<Point> pts;
};

// Greedy maximal eps-separated subset, scanned in input order.
PointSet max_separated_subset(const PointSet& samples, double eps);

// sup over K of the distance to C (covering radius of C with respect to K)
double mesh_norm(const PointSet& C, const std::vector<Point>& K);

// min pairwise distance; 0 is reported for duplicate points.  When a grid is
// supplied, also asserts q(C)/2 <= delta(C, grid).
double min_separation(const PointSet& C);
double min_separation(const PointSet& C, const std::vector<Point>& grid);

// max over samples of #{c in C : rho(sample, c) <= radius}
int overlap_count(const PointSet& C, double radius, const std::vector<Point>& samples);

// Immutable partition predicate: stage-1 cells plus a chain of merges.
class CellComplex {
  public:
    CellComplex() = default;

    // stage-1 cells Z_k = B(y_k, radius) \ union of earlier balls
    static CellComplex base(const ManifoldModel& m, std::vector<Point> centers, double radius);

    std::size_t cell_count() const;
    std::size_t base_count() const;
    const ManifoldModel& manifold() const;
    double base_radius() const;
    // every cell lies inside B(center, containment_radius())
    double containment_radius() const;
    // active cell label -> index into the base center list
    const std::vector<int>& active_base() const;
    // base index -> active cell, -1 if the base center was never active
    const std::vector<int>& owner_map() const;
    const std::vector<Point>& base_points() const;
    Point center(std::size_t cell) const;

    // active cell owning p, or -1 when p is not covered
    int cell_of(const Point& p) const;
    // stage-1 owner of p (base index), or -1
    int base_owner(const Point& p) const;

    // throws if some probe point is uncovered
    void validate_cover(const std::vector<Point>& probe) const;

    // rebuilds a complex from dumped parts (see io.hpp)
    static CellComplex from_parts(const ManifoldModel& m, std::vector<Point> base_centers,
                                  double base_radius, std::vector<int> owner,
                                  std::vector<int> active_base, double containment_radius);

    struct Impl;

  private:
    std::shared_ptr<const Impl> impl_;
};

struct MergeInfo {
    double min_ball_mass = 0.0;   // m = min_z tau(B(z, R))
    double threshold = 0.0;       // c = 1 / overlap
    int overlap = 0;              // max balls B(., 2R) around one center
    double ball_radius = 0.0;     // R
    std::vector<int> phi;         // old active cell -> old active cell it merged into
    std::vector<int> kept;        // surviving old active cells, in order
    std::vector<double> cell_mass_after;  // tau(Y_y) per new cell
};

// One application of the merge lemma.  tau is used through |tau|; R must be
// at least the containment radius of Z.  Throws "tau not dominant at scale"
// when some ball B(z, R) carries no tau mass.
std::pair<CellComplex, MergeInfo> merge_partition(const CellComplex& Z, const SignedMeasure& tau,
                                                  double ball_radius);

// A cell of the final partition, as arcs, circle only: list of [lo, hi)
// subintervals of [0, 2pi).
using ArcList = std::vector<std::pair<double, double>>;

// exact arc decomposition of the active cells of a circle complex
std::vector<ArcList> circle_cell_arcs(const CellComplex& cells);

struct Partition {
    ManifoldModel m;
    double d = 0.0;                     // construction scale
    CellComplex cells;                  // composed predicate (4 stages)
    std::vector<Point> final_centers;   // x_k, one per cell, x_k in Y_k
    std::vector<int> final_center_base; // base index of x_k in G1
    std::size_t g1_size = 0, g2_size = 0, g3_size = 0, g4_size = 0;
    double stage_radius[3] = {0, 0, 0};
    std::vector<double> mu_mass;        // mu(Y_k)
    std::vector<double> nu_mass;        // |nu|(Y_k)
    double band_lo = 0.0, band_hi = 0.0;          // range of mu(Y_k)/d^alpha
    double min_nu_quarter_ball = 0.0;   // min over G3 of |nu|(B(x, d/4))
    double nu_floor_constant = 0.0;     // min_k nu_mass / min_nu_quarter_ball
    std::uint64_t nu_fingerprint = 0;
    std::vector<ArcList> circle_arcs;   // exact cells on the circle, else empty

    std::size_t size() const { return final_centers.size(); }
    int cell_of(const Point& p) const { return cells.cell_of(p); }
};

struct PartitionOptions {
    bool relax_d = false;            // lift the d <= 1/81 bound (warns on stderr)
    std::size_t mu_proxy_nodes = 0;  // merge-stage volume proxy, 0 = resolution default
    unsigned threads = 0;
    std::size_t stat_samples = 3000;  // cap samples per stage-1 cell for mu(Y_k) stats
};

// The full pipeline.  Requires delta(supp nu) < d and (unless relaxed)
// d <= 1/81.  The grid supplies the cover audit and the mesh-norm estimates.
Partition build_mz_partition(const SignedMeasure& nu, double d, const std::vector<Point>& grid,
                             const PartitionOptions& opts = {});

// One-atom-per-cell partition for well-separated atomic measures
// (requires delta(C) < q(C); cells are first-come nearest arcs).
Partition trivial_partition(const SignedMeasure& atoms, const std::vector<Point>& grid);

}  // namespace mz
