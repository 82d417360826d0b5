#pragma once

// The smooth cutoff h, the localized kernel Phi_L, the smoothing operator
// sigma_L and its measure-discretized version, the truncated heat kernel, and
// the probe report that fits the kernel constants.
//
// h is 1 on [-1/2, 1/2], 0 outside (-1, 1), and on (1/2, 1) equals the
// normalized right tail of the bump u -> exp(-1/((u-1/2)(1-u))), so all
// derivatives match at the seams.
//
//   Phi_L(x, y)   = sum_j h(ell_j / L) phi_j(x) phi_j(y)
//   sigma_L(f)    = sum_j h(ell_j / L) f_hat(j) phi_j
//   sigma_L(nu;f) = integral of Phi_L(., y) f(y) dnu(y)
//   K_t(x, y)     = sum_k exp(-ell_k^2 t) phi_k(x) phi_k(y)

#include <cstdint>
#include <vector>

#include "mz/basis.hpp"
#include "mz/measures.hpp"
#include "mz/polynomials.hpp"

namespace mz {

double cutoff_h(double t);

// number of derivatives whose one-sided finite-difference estimates vanish
// consistently at both seams (capped at max_order)
int cutoff_smoothness_witness(int max_order = 6);

struct CutoffFunction {
    double operator()(double t) const { return cutoff_h(t); }
    int smoothness_witness = 0;
    static CutoffFunction probe(int max_order = 6) {
        return CutoffFunction{cutoff_smoothness_witness(max_order)};
    }
};

// Phi_L against a fixed basis, with the filter weights precomputed.
class LocalizedKernel {
  public:
    LocalizedKernel(const SpectralBasis& basis, double L);

    double eval(const Point& x, const Point& y) const;
    double diagonal(const Point& x) const;
    const std::vector<double>& weights() const { return w_; }  // h(ell_j / L)
    double level() const { return L_; }

    // Phi_L(x, .) as a diffusion polynomial over `basis`
    DiffusionPolynomial at(std::shared_ptr<const SpectralBasis> basis, const Point& x) const;

  private:
    const SpectralBasis* basis_;
    double L_;
    std::vector<double> w_;
};

double phi_kernel(const SpectralBasis& basis, double L, const Point& x, const Point& y);

// sigma_L(f) from samples of f on the reference rule; the rule must hold
// exact_degree >= L so that coefficients of polynomials up to L/2 are exact
DiffusionPolynomial sigma_op(std::shared_ptr<const SpectralBasis> basis, double L,
                             const ReferenceQuadrature& rule, const std::vector<double>& f_samples);

// sigma_L(nu; f): f given at the atoms of nu (values aligned with nu.points())
DiffusionPolynomial sigma_discrete(std::shared_ptr<const SpectralBasis> basis, double L,
                                   const SignedMeasure& nu, const std::vector<double>& f_values);

struct HeatValue {
    double value = 0.0;
    std::size_t terms = 0;     // basis entries actually summed
    double tail_bound = 0.0;   // certified remainder
};

// Truncated heat kernel with a Christoffel-growth tail bound; throws when the
// basis cannot reach the requested tolerance.
HeatValue heat_kernel(const SpectralBasis& basis, double t, const Point& x, const Point& y,
                      double tol);

struct KernelProbeReport {
    ManifoldModel manifold;
    std::vector<double> levels;
    std::vector<int> s_values;
    // c_loc[si][li]: fitted envelope c in |Phi_L| <= c L^alpha / max(1,(L rho)^S)
    std::vector<std::vector<double>> c_loc;
    std::vector<double> sup_l1;  // per level: sup_x integral of |Phi_L(x,.)| dmu
    double kappa2 = 0.0, kappa3 = 0.0;  // |K_t| <= k2 t^{-a/2} exp(-k3 rho^2/t)
    double kappa4 = 0.0;                // K_t(x,x) >= k4 t^{-a/2}
    double gauss_violation_rate = 0.0;  // fraction of probes above the fitted envelope
    double beta_hat = 0.0;              // |Phi_L(x,y)| >= Phi_L(x,x)/2 for rho <= beta/L
    // with ell_0 = 1 the raw heat integral is exp(-t); both the raw value and
    // the exp(t)-rescaled one are recorded at t = 0.1
    double heat_integral_raw = 0.0;
    double heat_integral_rescaled = 0.0;
};

struct KernelProbeOptions {
    int probes_per_inverse_level = 16;  // >= 8 required
    int t_grid_size = 4;
    unsigned threads = 0;
};

KernelProbeReport localization_report(const ManifoldModel& m, const std::vector<double>& levels,
                                      const std::vector<int>& s_values,
                                      const KernelProbeOptions& opts = {});

}  // namespace mz
