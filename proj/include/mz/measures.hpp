#pragma once

// Signed Borel measures in the three concrete shapes the library works with:
// finite atom lists, densities sampled on a reference quadrature, and sums of
// weighted ball averages (lowered to densities at construction).  Internally
// every measure is a finite list of (point, signed mass) pairs, so total
// variation, ball masses, and integrals are plain sums.
//
// Regularity certificates estimate the scale norms
//   R(nu, d) = sup_x |nu|(B(x, d)) / d^alpha      (d-regular)
//   D(nu, d) = ( inf_x |nu|(B(x, d)) / d^alpha )^-1   (d-dominant)
// over a finite probe grid; the grid and its resolution are recorded in the
// certificate since the true sup/inf range over all x.

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mz/basis.hpp"
#include "mz/geometry.hpp"

namespace mz {

enum class MeasureKind { Zero, Atomic, Density, BallAverage };

class SignedMeasure {
  public:
    SignedMeasure() = default;

    static SignedMeasure zero(const ManifoldModel& m);
    static SignedMeasure atomic(const ManifoldModel& m, std::vector<Point> atoms,
                                std::vector<double> weights, std::string descriptor = "atomic");
    // density sampled on a reference quadrature; mass_i = w_i * values_i
    static SignedMeasure density(const ManifoldModel& m, std::shared_ptr<const ReferenceQuadrature> rule,
                                 std::vector<double> values, std::string descriptor = "density");
    // d nu = (sum_y weight_y * indicator of B(center_y, radius_y)) d mu
    static SignedMeasure ball_average(const ManifoldModel& m,
                                      std::shared_ptr<const ReferenceQuadrature> rule,
                                      const std::vector<Point>& centers,
                                      const std::vector<double>& radii,
                                      const std::vector<double>& weights,
                                      std::string descriptor = "ball_average");
    // the volume measure itself, sampled on a rule of the given level
    static SignedMeasure volume(const ManifoldModel& m, double level);

    const ManifoldModel& manifold() const { return m_; }
    MeasureKind kind() const { return kind_; }
    const std::string& descriptor() const { return descriptor_; }
    bool is_zero() const;

    std::size_t atom_count() const { return pts_ ? pts_->size() : 0; }
    const std::vector<Point>& points() const { return *pts_; }
    const std::vector<double>& masses() const { return w_; }

    // points carrying mass (atoms with w != 0; nodes with |density| > 1e-12)
    const std::vector<Point>& support() const { return *support_; }
    // resolution of the support representation (0 for atomic measures)
    double node_resolution() const { return node_resolution_; }
    // sampling rule of a density/ball-average measure (null for atomic)
    std::shared_ptr<const ReferenceQuadrature> rule() const { return rule_; }

    double total_variation() const;
    // |nu|(B(x, r)), closed ball
    double ball_mass(const Point& x, double r) const;

    // sum_i w_i f(x_i) and sum_i |w_i| f(x_i)
    template <typename F>
    double integrate(F&& f) const {
        double s = 0.0;
        const std::vector<Point>& pts = *pts_;
        for (std::size_t i = 0; i < pts.size(); ++i) s += w_[i] * f(pts[i]);
        return s;
    }
    template <typename F>
    double integrate_abs(F&& f) const {
        double s = 0.0;
        const std::vector<Point>& pts = *pts_;
        for (std::size_t i = 0; i < pts.size(); ++i) s += std::abs(w_[i]) * f(pts[i]);
        return s;
    }

    // stable content fingerprint, used to pair partitions with their measure
    std::uint64_t fingerprint() const { return fingerprint_; }

    const NeighborGrid& point_grid() const { return grid_all_; }
    const NeighborGrid& support_grid() const { return grid_supp_; }

  private:
    void finalize(std::vector<Point> pts, std::vector<Point> support, double grid_cell);

    ManifoldModel m_;
    MeasureKind kind_ = MeasureKind::Zero;
    std::string descriptor_ = "zero";
    std::shared_ptr<const std::vector<Point>> pts_;
    std::vector<double> w_;
    std::shared_ptr<const std::vector<Point>> support_;
    std::shared_ptr<const ReferenceQuadrature> rule_;
    double node_resolution_ = 0.0;
    std::uint64_t fingerprint_ = 0;
    NeighborGrid grid_all_;
    NeighborGrid grid_supp_;
};

struct RegularityCertificate {
    double d = 0.0;
    double r_norm = 0.0;                 // sup estimate of |nu|(B(x,d))/d^alpha
    double d_norm = 0.0;                 // (inf estimate)^-1, meaningful if !d_infinite
    bool d_infinite = false;             // some probed ball had zero mass
    std::size_t n_centers = 0;
    std::string center_source;
    double min_ball_mass = 0.0;
    double max_ball_mass = 0.0;
};

double total_variation(const SignedMeasure& nu);
double ball_mass(const SignedMeasure& nu, const Point& x, double r);

// sup over probe points of the distance to the nearest support point.
// Throws on the zero measure ("empty support").
double support_mesh_norm(const SignedMeasure& nu, const std::vector<Point>& probe);

RegularityCertificate regularity_norm(const SignedMeasure& nu, double d,
                                      const std::vector<Point>& centers,
                                      const std::string& center_source = "grid");
RegularityCertificate dominance_norm(const SignedMeasure& nu, double d,
                                     const std::vector<Point>& centers,
                                     const std::string& center_source = "grid");

}  // namespace mz
