#pragma once

// Orthonormal eigen-systems on the model manifolds and the reference
// quadrature that realizes integrals against mu.
//
// Frequencies follow the convention ell_0 = 1, phi_0 = 1:
//   circle  : phi of frequency k has ell = max(1, k)
//   sphere2 : degree-l harmonics have ell = max(1, sqrt(l(l+1)))
//   torus2  : lattice mode (m1, m2) has ell = max(1, |m|_2)
//
// Pi_L = span{ phi_j : ell_j <= L }.  All bases are real and orthonormal
// with respect to the probability measure mu.

#include <cstddef>
#include <memory>
#include <vector>

#include "mz/geometry.hpp"

namespace mz {

struct BasisEntry {
    double ell = 1.0;
    int i1 = 0;  // circle: frequency; sphere: degree l; torus: m1
    int i2 = 0;  // sphere: order m; torus: m2
    int i3 = 0;  // trig selector(s); see basis.cpp
};

class SpectralBasis {
  public:
    static SpectralBasis build(const ManifoldModel& m, double L);

    const ManifoldModel& manifold() const { return m_; }
    double level() const { return L_; }
    std::size_t dim() const { return entries_.size(); }
    const std::vector<BasisEntry>& entries() const { return entries_; }
    double ell(std::size_t k) const { return entries_[k].ell; }

    // Number of entries with ell <= L (entries are sorted by ell).
    std::size_t dim_at(double L) const;

    double eval(std::size_t k, const Point& p) const;
    void eval_all(const Point& p, std::vector<double>& out) const;

    // Riemannian gradient norm |||grad phi_k|||_p. Analytic on circle and
    // torus; central finite differences (step 1e-5) along orthonormal tangent
    // directions on the sphere.
    double gradient_norm(std::size_t k, const Point& p) const;

    // d/dtheta of phi_k, circle only.
    double circle_derivative(std::size_t k, const Point& p) const;

  private:
    ManifoldModel m_;
    double L_ = 1.0;
    std::vector<BasisEntry> entries_;
};

SpectralBasis eigen_system(const ManifoldModel& m, double L);

struct ReferenceQuadrature {
    ManifoldModel manifold;
    std::vector<Point> nodes;
    std::vector<double> weights;  // nonnegative, sum to 1
    double exact_degree = 0.0;    // pairs from Pi_exact_degree integrate exactly

    // sum w_i f(x_i)
    template <typename F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

// Rule with exact_degree >= 2L + 2.  Circle: >= 4L+5 equispaced nodes with
// equal weights.  Sphere: Gauss-Legendre in cos(colatitude) crossed with
// equispaced longitudes.  Torus: tensor equispaced.
ReferenceQuadrature reference_quadrature(const ManifoldModel& m, double L);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace mz
