#pragma once

// Diffusion polynomials: coefficient vectors over a spectral basis, norms
// against mu or a signed measure, gradients, and the classical-inequality
// probes (Nikolskii, Bernstein, Christoffel, product closure).

#include <limits>
#include <memory>
#include <vector>

#include "mz/basis.hpp"
#include "mz/measures.hpp"

namespace mz {

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

class DiffusionPolynomial {
  public:
    DiffusionPolynomial() = default;
    DiffusionPolynomial(std::shared_ptr<const SpectralBasis> basis, double L,
                        std::vector<double> coeff);

    double degree() const { return L_; }
    const std::vector<double>& coeff() const { return coeff_; }
    const SpectralBasis& basis() const { return *basis_; }
    std::shared_ptr<const SpectralBasis> basis_ptr() const { return basis_; }

    double eval(const Point& p) const;
    double operator()(const Point& p) const { return eval(p); }

    // |P'(theta)|, circle only
    double derivative_circle(const Point& p) const;

  private:
    std::shared_ptr<const SpectralBasis> basis_;
    double L_ = 1.0;
    std::vector<double> coeff_;  // length = basis.dim_at(L)
};

// |||grad P|||_x: analytic on circle/torus, tangent finite differences on the
// sphere (step 1e-5)
double gradient_norm_at(const DiffusionPolynomial& P, const Point& x);

// ||P||_{mu;p} via the reference rule (p = 2 is exact by Parseval); the
// sup norm uses a dense grid with golden-section refinement on the circle.
// p must be >= 1 or kInfNorm.
double norm_p(const DiffusionPolynomial& P, const ReferenceQuadrature& rule, double p);
// ||P||_{nu;p}: plain sums against |nu|; sup norm over the support
double norm_p(const DiffusionPolynomial& P, const SignedMeasure& nu, double p);

// raw integral (sum) without the norm guard, used by the p < 1 probes
double quasi_norm_p(const DiffusionPolynomial& P, const ReferenceQuadrature& rule, double p);

double christoffel(const SpectralBasis& basis, double L, const Point& x);

DiffusionPolynomial random_polynomial(std::shared_ptr<const SpectralBasis> basis, double L,
                                      std::uint64_t seed);

struct NikolskiiReport {
    double p = 0.0, r = 0.0;
    std::vector<double> levels;
    std::vector<double> worst_ratio;  // per level, max of ||P||_r / ||P||_p
    double slope = 0.0;               // log-log fit across levels
    double claimed_exponent = 0.0;    // alpha (1/p - 1/r)
    bool quasi_norm = false;          // p < 1 branch: reported, not a norm
};

// Worst ratio over `trials` random polynomials plus the localized-kernel
// extremal, per level; slope fitted across levels.  Requires 0 < p < r.
NikolskiiReport nikolskii_ratio(const ManifoldModel& m, const std::vector<double>& levels,
                                double p, double r, int trials, std::uint64_t seed);

struct ProductLeakage {
    double l2_relative = 0.0;    // ||QR - S_{A*L}(QR)||_2 / ||QR||_2
    double grid_inf_residual = 0.0;  // max residual on the rule nodes / max |QR|
};

// Relative energy of QR outside Pi_{Astar*L}; the rule must integrate
// pairs up to degree (2 + Astar) L / 2 exactly.
ProductLeakage product_leakage(const DiffusionPolynomial& Q, const DiffusionPolynomial& R,
                               double Astar, const ReferenceQuadrature& rule);
// convenience: builds a sufficient rule internally
ProductLeakage product_leakage(const DiffusionPolynomial& Q, const DiffusionPolynomial& R,
                               double Astar);

}  // namespace mz
