#pragma once

// Norm-equivalence constants between a signed measure and the volume measure
// on the band-limited classes Pi_L, plus the verification procedures that tie
// them to the geometry of the measure:
//
//   c1 ||P||_{mu;p} <= ||P||_{nu;p} <= c2 ||P||_{mu;p},  P in Pi_L.
//
// At p = 2 the optimal constants are the extreme eigenvalues of the Gram
// matrix of the basis under |nu| (Rayleigh quotients); for other p the module
// reports inner (sampled) bounds over random polynomials plus the localized-
// kernel extremals, clearly labeled as such.

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mz/measures.hpp"
#include "mz/pointsets.hpp"
#include "mz/polynomials.hpp"

namespace mz {

enum class MZMethod { GramExactP2, Sampled };

struct MZReport {
    ManifoldModel manifold;
    double L = 0.0;
    double p = 2.0;
    std::string measure_id;
    MZMethod method = MZMethod::GramExactP2;
    double c1 = 0.0;  // lower constant, p-th power scale for p < inf
    double c2 = 0.0;  // upper constant
    double eta = 0.0;  // strong-MZ error when applicable
    int trials = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> fitted;
};

// Exact p = 2 constants via the Gram eigenvalues.  dim Pi_L must stay at or
// below dim_cap.
MZReport mz_constants_p2(const SignedMeasure& nu, const SpectralBasis& basis, double L,
                         std::size_t dim_cap = 2048);

// Sampled inner bounds for 1 <= p <= inf: min/max over trial polynomials of
// ||P||_{nu;p}^p / ||P||_{mu;p}^p (ratio of sup norms at p = inf).
MZReport mz_ratio_bounds(const SignedMeasure& nu, std::shared_ptr<const SpectralBasis> basis,
                         double L, double p, int trials, std::uint64_t seed);

struct StrongMZReport {
    double eta_observed = 0.0;      // cell-wise discretization error / ||P||_p^p
    double eta_pointwise = 0.0;     // ball-oscillation variant (atomic measures)
    double gradient_overlap = 0.0;  // sum mu(X_k) sup_ball |grad P|^p / ||P||_p^p
    double L = 0.0, p = 2.0, d = 0.0;
    int trials = 0;
};

// Worst relative cell-wise error between integrating |P|^p against mu and
// against the renormalized |nu| over the partition cells.
StrongMZReport verify_strong_mz(const SignedMeasure& nu, const Partition& part,
                                std::shared_ptr<const SpectralBasis> basis, double L, double p,
                                int trials, std::uint64_t seed);

struct SupNormGapReport {
    double worst_gap = 0.0;     // | ||P||_{nu;inf} - ||P||_{mu;inf} | / ||P||_{mu;inf}
    double delta_supp_L = 0.0;  // delta(supp nu) * L, the scaling variable
    int trials = 0;
};

SupNormGapReport sup_norm_gap(const SignedMeasure& nu, std::shared_ptr<const SpectralBasis> basis,
                              double L, int trials, std::uint64_t seed);

struct CharacterizationReport {
    double L = 0.0, p = 2.0;
    double c1 = 0.0, c2 = 0.0;           // measured constants
    MZMethod method = MZMethod::GramExactP2;
    RegularityCertificate regularity;    // at d = 1/L
    RegularityCertificate dominance;     // at d = 1/L
    double r_norm_ratio = 0.0;           // R(nu)/R(mu) at d = 1/L
    double d_norm_ratio = 0.0;           // D(nu)/D(mu) at d = 1/L
    double upper_fit = 0.0;              // c2 / R-ratio
    double upper_converse_fit = 0.0;     // R-ratio / c2
    double lower_fit = 0.0;              // c1 * D-ratio
    bool dominance_infinite = false;
    // converse dominance scale sweep: S -> (d(S), D_norm at d(S))
    std::vector<std::pair<int, double>> converse_scale;
    std::vector<double> dominance_at_converse;
};

// Four-way consistency check between the measured MZ constants and the
// regularity/dominance certificates at the matching scales.
CharacterizationReport characterization_roundtrip(const SignedMeasure& nu,
                                                  std::shared_ptr<const SpectralBasis> basis,
                                                  double L, double p,
                                                  const std::vector<Point>& centers);

}  // namespace mz
