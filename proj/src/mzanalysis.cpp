#include "mz/mzanalysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mz/kernels.hpp"
#include "mz/util.hpp"

namespace mz {

namespace {

// trial family: seeded random coefficients plus localized-kernel bumps
std::vector<DiffusionPolynomial> trial_polynomials(std::shared_ptr<const SpectralBasis> basis,
                                                   double L, int trials, std::uint64_t seed) {
    std::vector<DiffusionPolynomial> out;
    out.reserve(trials + 3);
    for (int t = 0; t < trials; ++t) out.push_back(random_polynomial(basis, L, seed + 977u * t));
    LocalizedKernel kern(*basis, L);
    Rng rng(seed ^ 0xabcdefull);
    const ManifoldModel& m = basis->manifold();
    for (int i = 0; i < 3; ++i) out.push_back(kern.at(basis, random_point(m, rng)));
    return out;
}

}  // namespace

MZReport mz_constants_p2(const SignedMeasure& nu, const SpectralBasis& basis, double L,
                         std::size_t dim_cap) {
    std::size_t dim = basis.dim_at(L);
    if (dim > dim_cap) throw std::invalid_argument("mz_constants_p2: dim Pi_L exceeds cap");
    if (basis.level() + 1e-12 < L)
        throw std::invalid_argument("mz_constants_p2: basis truncated below L");
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim, dim);
    std::vector<double> vals;
    const std::vector<Point>& pts = nu.points();
    const std::vector<double>& w = nu.masses();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (w[i] == 0.0) continue;
        basis.eval_all(pts[i], vals);
        double aw = std::abs(w[i]);
        for (std::size_t j = 0; j < dim; ++j)
            for (std::size_t k = j; k < dim; ++k) G(j, k) += aw * vals[j] * vals[k];
    }
    G = G.selfadjointView<Eigen::Upper>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    MZReport rep;
    rep.manifold = basis.manifold();
    rep.L = L;
    rep.p = 2.0;
    rep.measure_id = nu.descriptor();
    rep.method = MZMethod::GramExactP2;
    rep.c1 = std::max(0.0, es.eigenvalues().minCoeff());
    rep.c2 = es.eigenvalues().maxCoeff();
    return rep;
}

MZReport mz_ratio_bounds(const SignedMeasure& nu, std::shared_ptr<const SpectralBasis> basis,
                         double L, double p, int trials, std::uint64_t seed) {
    if (p != kInfNorm && p < 1.0) throw std::invalid_argument("mz_ratio_bounds: p must be >= 1");
    ReferenceQuadrature rule = reference_quadrature(basis->manifold(), L);
    MZReport rep;
    rep.manifold = basis->manifold();
    rep.L = L;
    rep.p = p;
    rep.measure_id = nu.descriptor();
    rep.method = MZMethod::Sampled;
    rep.trials = trials;
    rep.seed = seed;
    double lo = 1e300, hi = 0.0;
    for (const DiffusionPolynomial& P : trial_polynomials(basis, L, trials, seed)) {
        double num = norm_p(P, nu, p);
        double den = norm_p(P, rule, p);
        if (den <= 0.0) continue;
        double ratio = (p == kInfNorm) ? num / den : std::pow(num / den, p);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    rep.c1 = lo;
    rep.c2 = hi;
    return rep;
}

namespace {

// integral of |P|^p over one cell, against mu
double cell_mu_integral(const Partition& part, std::size_t k, const DiffusionPolynomial& P,
                        double p, const ReferenceQuadrature* rule,
                        const std::vector<int>* node_cell) {
    if (!part.circle_arcs.empty()) {
        double s = 0.0;
        for (auto [a, b] : part.circle_arcs[k]) {
            s += integrate_adaptive(
                [&](double theta) { return std::pow(std::abs(P.eval({theta, 0.0})), p); }, a, b,
                1e-13);
        }
        return s / kTwoPi;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i)
        if ((*node_cell)[i] == static_cast<int>(k))
            s += rule->weights[i] * std::pow(std::abs(P.eval(rule->nodes[i])), p);
    return s;
}

}  // namespace

StrongMZReport verify_strong_mz(const SignedMeasure& nu, const Partition& part,
                                std::shared_ptr<const SpectralBasis> basis, double L, double p,
                                int trials, std::uint64_t seed) {
    if (nu.fingerprint() != part.nu_fingerprint)
        throw std::invalid_argument("verify_strong_mz: partition built from a different measure");
    if (p < 1.0 || p == kInfNorm)
        throw std::invalid_argument("verify_strong_mz: p must be finite and >= 1");
    const ManifoldModel& m = basis->manifold();
    ReferenceQuadrature rule = reference_quadrature(m, std::max(L, 8.0));

    // nu atoms per cell
    std::size_t n_cells = part.size();
    const std::vector<Point>& pts = nu.points();
    const std::vector<double>& w = nu.masses();
    std::vector<int> atom_cell(pts.size());
    parallel_for(pts.size(), 0, [&](std::size_t i) { atom_cell[i] = part.cell_of(pts[i]); });

    // non-circle cell integrals ride on the reference nodes
    std::vector<int> node_cell;
    if (part.circle_arcs.empty()) {
        node_cell.resize(rule.nodes.size());
        parallel_for(rule.nodes.size(), 0,
                     [&](std::size_t i) { node_cell[i] = part.cell_of(rule.nodes[i]); });
    }

    StrongMZReport rep;
    rep.L = L;
    rep.p = p;
    rep.d = part.d;
    rep.trials = trials;

    // grid samples per cell for the pointwise (oscillation) variant
    std::vector<std::vector<Point>> ball_samples(n_cells);
    {
        std::size_t n_grid = (m.kind == ManifoldKind::Circle)
                                 ? std::max<std::size_t>(20000, static_cast<std::size_t>(64.0 * L))
                                 : 20000;
        for (const Point& g : default_grid(m, n_grid)) {
            int c = part.cell_of(g);
            if (c >= 0) ball_samples[static_cast<std::size_t>(c)].push_back(g);
        }
    }

    for (const DiffusionPolynomial& P : trial_polynomials(basis, L, trials, seed)) {
        double denom = std::pow(norm_p(P, rule, p), p);
        if (denom <= 0.0) continue;
        double err = 0.0;
        for (std::size_t k = 0; k < n_cells; ++k) {
            double mu_int = cell_mu_integral(part, k, P, p, &rule, &node_cell);
            double nu_int = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (atom_cell[i] == static_cast<int>(k) && w[i] != 0.0)
                    nu_int += std::abs(w[i]) * std::pow(std::abs(P.eval(pts[i])), p);
            err += std::abs(mu_int - part.mu_mass[k] / part.nu_mass[k] * nu_int);
        }
        rep.eta_observed = std::max(rep.eta_observed, err / denom);

        // oscillation variant: cells sampled on the audit grid
        double osc = 0.0, grad = 0.0;
        for (std::size_t k = 0; k < n_cells; ++k) {
            if (ball_samples[k].empty()) continue;
            double lo = 1e300, hi = 0.0, ghi = 0.0;
            for (const Point& g : ball_samples[k]) {
                double v = std::pow(std::abs(P.eval(g)), p);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                ghi = std::max(ghi, gradient_norm_at(P, g));
            }
            osc += part.mu_mass[k] * (hi - lo);
            grad += part.mu_mass[k] * std::pow(ghi, p);
        }
        rep.eta_pointwise = std::max(rep.eta_pointwise, osc / denom);
        rep.gradient_overlap = std::max(rep.gradient_overlap, grad / denom);
    }
    return rep;
}

SupNormGapReport sup_norm_gap(const SignedMeasure& nu, std::shared_ptr<const SpectralBasis> basis,
                              double L, int trials, std::uint64_t seed) {
    const ManifoldModel& m = basis->manifold();
    ReferenceQuadrature rule = reference_quadrature(m, L);
    SupNormGapReport rep;
    rep.trials = trials;
    rep.delta_supp_L = support_mesh_norm(nu, default_grid(m, 8192)) * L;
    for (const DiffusionPolynomial& P : trial_polynomials(basis, L, trials, seed)) {
        double mu_sup = norm_p(P, rule, kInfNorm);
        double nu_sup = norm_p(P, nu, kInfNorm);
        if (mu_sup <= 0.0) continue;
        rep.worst_gap = std::max(rep.worst_gap, std::abs(nu_sup - mu_sup) / mu_sup);
    }
    return rep;
}

CharacterizationReport characterization_roundtrip(const SignedMeasure& nu,
                                                  std::shared_ptr<const SpectralBasis> basis,
                                                  double L, double p,
                                                  const std::vector<Point>& centers) {
    if (nu.is_zero()) throw std::invalid_argument("characterization_roundtrip: zero measure");
    if (p < 1.0 || p == kInfNorm)
        throw std::invalid_argument("characterization_roundtrip: p must be finite and >= 1");
    const ManifoldModel& m = basis->manifold();
    CharacterizationReport rep;
    rep.L = L;
    rep.p = p;

    double d = 1.0 / L;
    rep.regularity = regularity_norm(nu, d, centers);
    rep.dominance = dominance_norm(nu, d, centers);
    rep.dominance_infinite = rep.dominance.d_infinite;

    // baseline: the volume measure probed the same way.  Densities compare
    // against the flat density on their own rule so that the node
    // quantization of ball masses cancels in the ratios.
    SignedMeasure mu = [&] {
        if (auto rule = nu.rule()) {
            std::vector<double> ones(rule->nodes.size(), 1.0);
            return SignedMeasure::density(m, rule, std::move(ones), "mu-baseline");
        }
        std::size_t n = std::clamp<std::size_t>(4 * nu.atom_count(), 8192, 2'000'000);
        std::vector<Point> pts = default_grid(m, n);
        std::vector<double> w(pts.size(), 1.0 / static_cast<double>(pts.size()));
        return SignedMeasure::atomic(m, std::move(pts), std::move(w), "mu-baseline");
    }();
    RegularityCertificate reg_mu = regularity_norm(mu, d, centers);
    RegularityCertificate dom_mu = dominance_norm(mu, d, centers);
    rep.r_norm_ratio = rep.regularity.r_norm / reg_mu.r_norm;
    rep.d_norm_ratio = rep.dominance.d_infinite
                           ? std::numeric_limits<double>::infinity()
                           : rep.dominance.d_norm / dom_mu.d_norm;

    if (p == 2.0) {
        MZReport g = mz_constants_p2(nu, *basis, L);
        rep.c1 = g.c1;
        rep.c2 = g.c2;
        rep.method = MZMethod::GramExactP2;
    } else {
        MZReport g = mz_ratio_bounds(nu, basis, L, p, 24, 0x5151u);
        rep.c1 = g.c1;
        rep.c2 = g.c2;
        rep.method = MZMethod::Sampled;
    }

    rep.upper_fit = rep.c2 / rep.r_norm_ratio;
    rep.upper_converse_fit = rep.r_norm_ratio / rep.c2;
    rep.lower_fit = rep.dominance_infinite ? 0.0 : rep.c1 * rep.d_norm_ratio;

    // converse dominance scales d(S) = max(1, R A1)^{1/(S-alpha)} / L with
    // A1 = 1/c1 (the lower-bound constant in the norm inequality)
    if (rep.c1 > 0.0) {
        double A1 = 1.0 / rep.c1;
        int a = static_cast<int>(m.alpha);
        for (int S = a + 1; S <= a + 6; ++S) {
            double scale =
                std::pow(std::max(1.0, rep.regularity.r_norm * A1),
                         1.0 / (static_cast<double>(S) - m.alpha)) /
                L;
            rep.converse_scale.emplace_back(S, scale);
            RegularityCertificate dc = dominance_norm(nu, scale, centers);
            rep.dominance_at_converse.push_back(
                dc.d_infinite ? std::numeric_limits<double>::infinity() : dc.d_norm);
        }
    }
    return rep;
}

}  // namespace mz
