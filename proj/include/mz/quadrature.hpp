#pragma once

// Positive quadrature construction over partition-cell functionals, posed as
// a linear feasibility/optimization problem:
//
//   find W >= 0 with  sum_k W_k x_k*(phi_j) = delta_{j0}  for ell_j <= L,
//
// where x_k* is either evaluation at the cell center or the |nu|-average
// over the cell.  Two solver routes are built in:
//   LP_maximin : maximize t subject to W_k >= t mu(Y_k), via a dense
//                two-phase simplex with Bland's rule (deterministic),
//   NNLS       : Lawson-Hanson active-set least squares, accepted when the
//                moment residual stays within tolerance.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mz/mzanalysis.hpp"
#include "mz/pointsets.hpp"
#include "mz/polynomials.hpp"

namespace mz {

enum class FunctionalKind { PointEvaluation, CellAverage };
enum class SolveMode { LPMaximin, NNLS };

struct QuadratureRule {
    ManifoldModel manifold;
    double order = 0.0;  // exact on Pi_order (up to `residual`)
    FunctionalKind kind = FunctionalKind::CellAverage;
    std::vector<double> weights;  // W_k >= 0
    // one functional per weight: list of (point, fraction) pairs; fractions
    // sum to 1 (a single pair for point evaluation)
    std::vector<std::vector<std::pair<Point, double>>> functionals;
    double residual = 0.0;
    double min_weight_ratio = 0.0;  // min_k W_k / mu(Y_k)
    double maximin_t = 0.0;         // LP objective when applicable

    double apply(std::size_t k, const DiffusionPolynomial& P) const;
    // the rule as an atomic measure (functional atoms carry W_k * fraction)
    SignedMeasure as_measure() const;
};

struct MomentVector {
    std::vector<double> values;  // delta_{j0} by orthonormality
};

// analytic moments, cross-checked against the reference rule to 1e-12
MomentVector moments(const SpectralBasis& basis, double L);

struct InfeasibilityCertificate {
    std::vector<double> direction;  // y with y^T A <= 0 on all functionals, y^T m > 0
    double violation = 0.0;         // y^T m
};

struct QuadratureSolve {
    bool feasible = false;
    std::optional<QuadratureRule> rule;
    std::optional<InfeasibilityCertificate> certificate;
    std::string message;
};

QuadratureSolve solve_positive_quadrature(const SignedMeasure& nu, const Partition& part,
                                          std::shared_ptr<const SpectralBasis> basis, double L,
                                          SolveMode mode,
                                          FunctionalKind kind = FunctionalKind::CellAverage);

// partition-free variant: point evaluations at the support atoms (used for
// measures whose support cannot carry a covering partition, e.g. the
// negative controls); the maximin floor is measured against 1/M
QuadratureSolve solve_positive_quadrature(const SignedMeasure& nu,
                                          std::shared_ptr<const SpectralBasis> basis, double L,
                                          SolveMode mode);

// max_j |sum_k W_k x_k*(phi_j) - delta_{j0}| over ell_j <= L_test
double quadrature_residual(const QuadratureRule& rule, const SpectralBasis& basis, double L_test);

struct QuadratureMZReport {
    MZReport mz;
    double product_error = 0.0;      // worst |int P1 P2 dmu - dtau| / (||P1|| ||P2||)
    double sigma_reconstruction = 0.0;  // worst L ||sigma_2L(tau;P) - P||_inf / ||P||_2
};

// MZ constants of the rule-as-measure on Pi_L plus the product-error and
// sigma-reconstruction diagnostics; requires order >= 2 Astar L.
QuadratureMZReport verify_quadrature_mz(const QuadratureRule& rule,
                                        std::shared_ptr<const SpectralBasis> basis, double L,
                                        double p, int trials, double Astar = 2.0,
                                        std::uint64_t seed = 0x9d2u);

// Embedded dense solvers (exposed for tests).
struct SimplexResult {
    enum class Status { Optimal, Infeasible, Unbounded } status = Status::Optimal;
    std::vector<double> x;
    double objective = 0.0;
    std::vector<double> farkas;  // infeasibility multipliers
};

// minimize c^T x subject to A x = b, x >= 0 (dense, Bland's rule)
SimplexResult simplex_solve(const std::vector<std::vector<double>>& A,
                            const std::vector<double>& b, const std::vector<double>& c);

// Lawson-Hanson nonnegative least squares: minimize ||A x - b||_2, x >= 0
std::vector<double> nnls_solve(const std::vector<std::vector<double>>& A,
                               const std::vector<double>& b, double tol = 1e-12,
                               int max_iter = 0);

}  // namespace mz
