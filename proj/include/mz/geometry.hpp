#pragma once

// Model manifolds: unit circle, unit 2-sphere, flat 2-torus.
//
// Conventions shared by the whole library:
//   * the volume measure mu is normalized to a probability measure,
//   * geodesic balls B(x, r) are closed (rho(x, y) <= r),
//   * alpha is the ball-growth exponent: mu(B(x, r)) <= kappa1 r^alpha.
//
// Coordinates:
//   circle  : a = angle theta in [0, 2pi), b unused
//   sphere2 : a = colatitude in [0, pi], b = longitude in [0, 2pi)
//   torus2  : a, b = angles in [0, 2pi)

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mz/util.hpp"

namespace mz {

enum class ManifoldKind { Circle, Sphere2, Torus2 };

std::string manifold_name(ManifoldKind kind);
ManifoldKind manifold_from_name(const std::string& name);

struct Point {
    double a = 0.0;
    double b = 0.0;
};

// kappa1 is analytic per manifold; kappa2..kappa4 are heat-kernel constants
// fitted by the kernel probe report (see kernels.hpp) and stored here for
// reference only.
struct KappaConstants {
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
    double k4 = 0.0;
};

struct ManifoldModel {
    ManifoldKind kind = ManifoldKind::Circle;
    double alpha = 1.0;
    double diameter = kPi;
    KappaConstants kappa;

    static ManifoldModel circle();
    static ManifoldModel sphere2();
    static ManifoldModel torus2();
    static ManifoldModel make(ManifoldKind kind);

    std::string name() const { return manifold_name(kind); }
};

// Reduce coordinates to the canonical ranges above. Two points with equal
// canonical coordinates are the same point.
Point canonical(ManifoldKind kind, Point p);

double geodesic_distance(const ManifoldModel& m, const Point& x, const Point& y);

// mu(B(x, r)), closed ball. Analytic on all three manifolds:
//   circle : min(1, r/pi)
//   sphere : (1 - cos r)/2 capped at 1
//   torus  : flat disc area, minus the four wrap-around segments when r > pi
double ball_measure(const ManifoldModel& m, const Point& x, double r);

// Unit-vector embedding of a sphere point, and back.
std::array<double, 3> sphere_to_vec(const Point& p);
Point vec_to_sphere(const std::array<double, 3>& v);

// Deterministic sample grids.
std::vector<Point> grid_circle(std::size_t n);                   // equispaced angles
std::vector<Point> grid_sphere_fibonacci(std::size_t n);         // spherical Fibonacci lattice
std::vector<Point> grid_torus(std::size_t n_per_axis);           // tensor equispaced
// Roughly n points spread over the manifold, whatever its kind.
std::vector<Point> default_grid(const ManifoldModel& m, std::size_t n);

// Uniform random points (area-uniform on the sphere).
Point random_point(const ManifoldModel& m, Rng& rng);

// Bucketed neighbor lookup for radius queries on point lists. Buckets are
// sized to the requested resolution; sphere buckets are latitude bands split
// into longitude sectors proportional to sin(colat).
class NeighborGrid {
  public:
    NeighborGrid() = default;
    NeighborGrid(const ManifoldModel& m, std::shared_ptr<const std::vector<Point>> pts,
                 double cell_size);
    // convenience overload, copies the points
    NeighborGrid(const ManifoldModel& m, const std::vector<Point>& pts, double cell_size);

    // Indices of stored points with rho(p, pts[i]) <= r, in increasing index order.
    void query(const Point& p, double r, std::vector<std::size_t>& out) const;

    // Visits every stored point with rho(p, pts[i]) <= r in bucket order
    // (deterministic, not index-sorted); no allocation.
    void for_each_within(const Point& p, double r,
                         const std::function<void(std::size_t, double)>& fn) const;

    std::size_t count_within(const Point& p, double r) const;

    // Index of the nearest stored point (lowest index wins ties) and its distance.
    std::pair<std::size_t, double> nearest(const Point& p) const;

    bool empty() const { return n_ == 0; }

  private:
    void bucket_of(const Point& p, long& i, long& j) const;
    std::size_t bucket_index(long i, long j) const;

    ManifoldModel m_;
    std::shared_ptr<const std::vector<Point>> pts_;
    std::size_t n_ = 0;
    double h_ = 0.0;
    long ni_ = 0;                       // bands (sphere) or primary-axis cells
    std::vector<long> nj_;              // sectors per band (sphere); single row otherwise
    std::vector<std::size_t> row_offset_;
    std::vector<std::vector<std::size_t>> buckets_;
};

}  // namespace mz
