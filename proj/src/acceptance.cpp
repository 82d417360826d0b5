#include "mz/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>
#include <sstream>

#include "mz/kernels.hpp"
#include "mz/mzanalysis.hpp"
#include "mz/pointsets.hpp"
#include "mz/quadrature.hpp"
#include "mz/util.hpp"

namespace mz::acceptance {

namespace {

const ManifoldModel kCircle = ManifoldModel::circle();
const ManifoldModel kSphere = ManifoldModel::sphere2();

std::shared_ptr<const SpectralBasis> circle_basis(double L) {
    return std::make_shared<const SpectralBasis>(eigen_system(kCircle, L));
}

struct Checker {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "[FAILED: " << what << "] ";
        }
    }
    void note(const std::string& s) { detail << s; }
};

SignedMeasure equispaced(std::size_t n) {
    return SignedMeasure::atomic(kCircle, grid_circle(n), std::vector<double>(n, 1.0 / n),
                                 "equispaced-" + std::to_string(n));
}

// 1. classical exact case: equispaced nodes make the Gram the identity
CriterionResult criterion_exact_mz_p2() {
    Checker c;
    double L = 32.0;
    auto basis = circle_basis(L);
    MZReport rep = mz_constants_p2(equispaced(65), *basis, L);
    c.expect(std::abs(rep.c1 - 1.0) <= 1e-10, "c1 = 1 within 1e-10");
    c.expect(std::abs(rep.c2 - 1.0) <= 1e-10, "c2 = 1 within 1e-10");
    std::ostringstream d;
    d << "c1=" << rep.c1 << " c2=" << rep.c2;
    c.note(d.str());
    return {"exact MZ constants at p=2 (circle, L=32, 65 equispaced atoms)", c.ok, c.detail.str()};
}

// 2. positive quadrature on jittered nodes through the maximin LP
CriterionResult criterion_quadrature_existence() {
    Checker c;
    double L = 8.0;
    std::size_t n = 32;
    Rng rng(0x2b9a7e11u);
    std::vector<Point> pts;
    double gap = kTwoPi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back({gap * static_cast<double>(i) + 0.15 * gap * (2.0 * rng.uniform() - 1.0), 0});
    SignedMeasure nu = SignedMeasure::atomic(kCircle, pts, std::vector<double>(n, 1.0 / n),
                                             "jittered-32");
    PartitionOptions opts;
    opts.relax_d = true;
    Partition part = build_mz_partition(nu, gap, grid_circle(8192), opts);
    auto basis = circle_basis(L);
    QuadratureSolve sol = solve_positive_quadrature(nu, part, basis, L, SolveMode::LPMaximin);
    c.expect(sol.feasible, "LP feasible");
    if (sol.feasible) {
        c.expect(sol.rule->residual <= 1e-8, "residual <= 1e-8");
        c.expect(sol.rule->min_weight_ratio >= 0.05, "min weight ratio >= 0.05");
        bool nonneg = true;
        for (double w : sol.rule->weights) nonneg = nonneg && w >= 0.0;
        c.expect(nonneg, "all weights >= 0");
        ReferenceQuadrature ref = reference_quadrature(kCircle, L);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            DiffusionPolynomial P = random_polynomial(basis, L, 52000 + t);
            double direct = ref.integrate([&](const Point& x) { return P.eval(x); });
            double through = 0.0;
            for (std::size_t k = 0; k < sol.rule->weights.size(); ++k)
                through += sol.rule->weights[k] * sol.rule->apply(k, P);
            worst = std::max(worst, std::abs(direct - through));
        }
        c.expect(worst <= 1e-8, "exactness cross-check within 1e-8");
        std::ostringstream d;
        d << "residual=" << sol.rule->residual << " min_ratio=" << sol.rule->min_weight_ratio
          << " cross=" << worst;
        c.note(d.str());
    }
    return {"positive quadrature on jittered nodes (circle, L=8, maximin LP)", c.ok,
            c.detail.str()};
}

// 3. localization: stable envelope constants and flat L1 norms
CriterionResult criterion_kernel_localization() {
    Checker c;
    KernelProbeReport rep = localization_report(kCircle, {16.0, 32.0, 64.0, 128.0}, {5});
    double lo = 1e300, hi = 0.0;
    for (std::size_t li = 0; li < 3; ++li) {  // S=5 fit across {16,32,64}
        lo = std::min(lo, rep.c_loc[0][li]);
        hi = std::max(hi, rep.c_loc[0][li]);
    }
    c.expect(hi / lo <= 2.0, "c(5) stable within factor 2");
    double l1lo = 1e300, l1hi = 0.0;
    for (double v : rep.sup_l1) {
        l1lo = std::min(l1lo, v);
        l1hi = std::max(l1hi, v);
    }
    c.expect(l1hi / l1lo <= 1.1, "sup L1 ratio <= 1.1 across {16,32,64,128}");
    std::ostringstream d;
    d << "c(5) in [" << lo << ", " << hi << "], L1 in [" << l1lo << ", " << l1hi << "]";
    c.note(d.str());
    return {"kernel localization stability (circle, S=5)", c.ok, c.detail.str()};
}

// 4. sigma reproduces band-limited polynomials
CriterionResult criterion_reproduction() {
    Checker c;
    double worst = 0.0;
    for (double L : {8.0, 32.0}) {
        auto basis = circle_basis(2.0 * L);
        ReferenceQuadrature rule = reference_quadrature(kCircle, 2.0 * L);
        for (int t = 0; t < 50; ++t) {
            DiffusionPolynomial P = random_polynomial(basis, L, 12000 + t);
            std::vector<double> samples(rule.nodes.size());
            for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = P.eval(rule.nodes[i]);
            DiffusionPolynomial S = sigma_op(basis, 2.0 * L, rule, samples);
            double err2 = 0.0;
            for (std::size_t k = 0; k < S.coeff().size(); ++k) {
                double want = (k < P.coeff().size()) ? P.coeff()[k] : 0.0;
                err2 += (S.coeff()[k] - want) * (S.coeff()[k] - want);
            }
            worst = std::max(worst, std::sqrt(err2));
        }
    }
    c.expect(worst <= 1e-10, "||sigma_2L(P) - P||_2 <= 1e-10");
    std::ostringstream d;
    d << "worst=" << worst;
    c.note(d.str());
    return {"sigma reproduction on Pi_L (L in {8,32}, 50 random each)", c.ok, c.detail.str()};
}

// 5. products of band-limited functions close at twice the degree
CriterionResult criterion_product_closure() {
    Checker c;
    auto b = circle_basis(16.0);
    ReferenceQuadrature rule = reference_quadrature(kCircle, 32.0);
    double worst_circle = 0.0;
    for (int t = 0; t < 100; ++t) {
        DiffusionPolynomial Q = random_polynomial(b, 16.0, 61000 + t);
        DiffusionPolynomial R = random_polynomial(b, 16.0, 62000 + t);
        worst_circle = std::max(worst_circle, product_leakage(Q, R, 2.0, rule).l2_relative);
    }
    c.expect(worst_circle <= 1e-12, "circle leakage <= 1e-12");
    auto bs = std::make_shared<const SpectralBasis>(eigen_system(kSphere, 3.0));
    ReferenceQuadrature srule = reference_quadrature(kSphere, 6.0);
    double worst_sphere = 0.0;
    for (int t = 0; t < 20; ++t) {
        DiffusionPolynomial Q = random_polynomial(bs, 3.0, 63000 + t);
        DiffusionPolynomial R = random_polynomial(bs, 3.0, 64000 + t);
        worst_sphere = std::max(worst_sphere, product_leakage(Q, R, 2.0, srule).l2_relative);
    }
    c.expect(worst_sphere <= 1e-10, "sphere leakage <= 1e-10");
    std::ostringstream d;
    d << "circle=" << worst_circle << " sphere=" << worst_sphere;
    c.note(d.str());
    return {"product closure (100 circle pairs Pi_16, 20 sphere pairs Pi_3)", c.ok,
            c.detail.str()};
}

// 6. partition invariants on circle and sphere with full audits
CriterionResult criterion_partition_invariants() {
    Checker c;
    {
        double d = 1.0 / 100.0;
        SignedMeasure nu = equispaced(2000);
        auto grid = grid_circle(10000);
        Partition part = build_mz_partition(nu, d, grid);
        bool cover = true, contain = true, centers_in = true, nu_pos = true;
        for (const Point& p : grid) {
            int k = part.cell_of(p);
            if (k < 0) cover = false;
            else if (geodesic_distance(kCircle, p, part.final_centers[k]) > 81.0 * d)
                contain = false;
        }
        for (std::size_t k = 0; k < part.size(); ++k) {
            if (part.cell_of(part.final_centers[k]) != static_cast<int>(k)) centers_in = false;
            if (!(part.nu_mass[k] > 0.0)) nu_pos = false;
        }
        c.expect(cover, "circle: disjoint cover on the audit grid");
        c.expect(contain, "circle: cells inside B(x_k, 81d)");
        c.expect(centers_in, "circle: x_k in Y_k");
        c.expect(nu_pos, "circle: |nu|(Y_k) > 0");
        c.expect(part.band_hi / part.band_lo <= 100.0, "circle: band ratio <= 100");
        std::ostringstream d2;
        d2 << "circle cells=" << part.size() << " band=" << part.band_hi / part.band_lo << "; ";
        c.note(d2.str());
    }
    {
        double d = 1.0 / 81.0;
        auto cloud = grid_sphere_fibonacci(60000);
        SignedMeasure nu = SignedMeasure::atomic(kSphere, cloud,
                                                 std::vector<double>(cloud.size(), 1.0),
                                                 "fibonacci-60k");
        auto grid = grid_sphere_fibonacci(10000);
        Partition part = build_mz_partition(nu, d, grid);
        bool cover = true, contain = true, centers_in = true, nu_pos = true;
        for (const Point& p : grid) {
            int k = part.cell_of(p);
            if (k < 0) cover = false;
            else if (geodesic_distance(kSphere, p, part.final_centers[k]) > 81.0 * d)
                contain = false;
        }
        for (std::size_t k = 0; k < part.size(); ++k) {
            if (part.cell_of(part.final_centers[k]) != static_cast<int>(k)) centers_in = false;
            if (!(part.nu_mass[k] > 0.0)) nu_pos = false;
        }
        c.expect(cover, "sphere: disjoint cover on the audit grid");
        c.expect(contain, "sphere: cells inside B(x_k, 81d)");
        c.expect(centers_in, "sphere: x_k in Y_k");
        c.expect(nu_pos, "sphere: |nu|(Y_k) > 0");
        c.expect(part.band_hi / part.band_lo <= 100.0, "sphere: band ratio <= 100");
        std::ostringstream d2;
        d2 << "sphere cells=" << part.size() << " band=" << part.band_hi / part.band_lo;
        c.note(d2.str());
    }
    return {"partition invariants (circle d=1/100, sphere d=1/81)", c.ok, c.detail.str()};
}

// 7. Bernstein constant is one, attained by the highest mode
CriterionResult criterion_bernstein() {
    Checker c;
    double global = 0.0;
    for (double L : {8.0, 16.0, 32.0}) {
        auto b = circle_basis(L);
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            DiffusionPolynomial P = random_polynomial(b, L, 71000 + t);
            std::size_t n = static_cast<std::size_t>(64.0 * L);
            double np = 0.0, nd = 0.0;
            double bp = 0.0, bd = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double theta = kTwoPi * i / static_cast<double>(n);
                double vp = std::abs(P.eval({theta, 0}));
                double vd = std::abs(P.derivative_circle({theta, 0}));
                if (vp > np) { np = vp; bp = theta; }
                if (vd > nd) { nd = vd; bd = theta; }
            }
            double h = kTwoPi / static_cast<double>(n);
            np = std::max(np, golden_max([&](double x) { return std::abs(P.eval({x, 0})); },
                                         bp - h, bp + h));
            nd = std::max(nd, golden_max(
                                  [&](double x) { return std::abs(P.derivative_circle({x, 0})); },
                                  bd - h, bd + h));
            worst = std::max(worst, nd / (L * np));
        }
        // extremal cos(L theta): ratio exactly one
        std::vector<double> cf(b->dim_at(L), 0.0);
        cf[cf.size() - 2] = 1.0;
        DiffusionPolynomial ext(b, L, cf);
        double ratio = std::abs(ext.derivative_circle({kPi / (2.0 * L), 0})) / (L * std::sqrt(2.0));
        worst = std::max(worst, ratio);
        global = std::max(global, worst);
        c.expect(worst >= 1.0 - 1e-9, "extremal attains the constant");
        c.expect(worst <= 1.0 + 1e-6, "no polynomial exceeds the constant");
    }
    std::ostringstream d;
    d << "max ratio=" << global;
    c.note(d.str());
    return {"Bernstein sharpness (circle, L in {8,16,32}, 200 random + extremal)", c.ok,
            c.detail.str()};
}

// 8. strong-MZ error decays linearly in L*d
CriterionResult criterion_strong_mz_scaling() {
    Checker c;
    std::size_t n = 1200;
    // jittered family: generic first-order behavior (equispaced atoms enjoy
    // extra cancellation and decay faster than the theorem's rate)
    Rng rng(0x8715u);
    std::vector<Point> pts;
    double gap = kTwoPi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back({gap * static_cast<double>(i) + 0.15 * gap * (2.0 * rng.uniform() - 1.0), 0});
    SignedMeasure nu = SignedMeasure::atomic(kCircle, pts,
                                             std::vector<double>(n, 1.0 / n), "jittered-1200");
    double d = 4.0 * kPi / static_cast<double>(n);
    Partition part = build_mz_partition(nu, d, grid_circle(20000));
    std::ostringstream note;
    for (double p : {1.0, 2.0}) {
        std::vector<double> lx, ly;
        for (double ld : {0.1, 0.05, 0.025}) {
            double L = ld / d;
            auto basis = circle_basis(L);
            StrongMZReport rep = verify_strong_mz(nu, part, basis, L, p, 8, 88000);
            lx.push_back(std::log(ld));
            ly.push_back(std::log(rep.eta_observed));
        }
        double slope = fit_line(lx, ly).slope;
        c.expect(std::abs(slope - 1.0) <= 0.3, "slope within 1 +- 0.3 at p=" + std::to_string(p));
        note << "p=" << p << " slope=" << slope << "; ";
    }
    c.note(note.str());
    return {"strong-MZ error scaling in L*d (circle, p in {1,2})", c.ok, c.detail.str()};
}

// 9. Christoffel sums count dimensions
CriterionResult criterion_christoffel() {
    Checker c;
    SpectralBasis cb = eigen_system(kCircle, 64.0);
    bool exact = true;
    for (int L = 1; L <= 64; ++L) {
        double v = christoffel(cb, L, {0.11 * L, 0});
        if (std::abs(v - (2.0 * L + 1.0)) > 1e-10) exact = false;
    }
    c.expect(exact, "circle christoffel = 2L+1 for L = 1..64");
    SpectralBasis sb = eigen_system(kSphere, 8.0);
    Rng rng(0x91);
    double ref = christoffel(sb, 8.0, random_point(kSphere, rng));
    bool flat = true;
    for (int i = 0; i < 50; ++i) {
        double v = christoffel(sb, 8.0, random_point(kSphere, rng));
        if (std::abs(v - ref) > 1e-8 * ref) flat = false;
    }
    c.expect(flat, "sphere christoffel constant over 50 random points");
    std::ostringstream d;
    d << "sphere value=" << ref;
    c.note(d.str());
    return {"Christoffel growth (circle exact, sphere rotation-invariant)", c.ok, c.detail.str()};
}

// 10. characterization roundtrip and its directional response
CriterionResult criterion_characterization() {
    Checker c;
    double L = 16.0;
    auto basis = circle_basis(L);
    auto centers = grid_circle(4096);
    SignedMeasure mu = SignedMeasure::volume(kCircle, 64.0);
    CharacterizationReport rep = characterization_roundtrip(mu, basis, L, 2.0, centers);
    c.expect(rep.c1 >= 0.99 && rep.c1 <= 1.01, "c1 in [0.99, 1.01]");
    c.expect(rep.c2 >= 0.99 && rep.c2 <= 1.01, "c2 in [0.99, 1.01]");
    c.expect(rep.r_norm_ratio >= 0.99 && rep.r_norm_ratio <= 1.01, "R ratio in [0.99, 1.01]");
    c.expect(rep.d_norm_ratio >= 0.99 && rep.d_norm_ratio <= 1.01, "D ratio in [0.99, 1.01]");

    std::size_t n = 64;
    std::vector<double> w(n, 1.0 / n);
    SignedMeasure base = SignedMeasure::atomic(kCircle, grid_circle(n), w, "flat");
    w[5] *= 2.0;
    SignedMeasure bumped = SignedMeasure::atomic(kCircle, grid_circle(n), w, "bumped");
    CharacterizationReport a = characterization_roundtrip(base, basis, L, 2.0, centers);
    CharacterizationReport b = characterization_roundtrip(bumped, basis, L, 2.0, centers);
    c.expect((b.regularity.r_norm - a.regularity.r_norm) > 0.0 && (b.c2 - a.c2) > 0.0,
             "doubled atom moves R and c2 in the same direction");
    std::ostringstream d;
    d << "mu: c1=" << rep.c1 << " c2=" << rep.c2 << " rR=" << rep.r_norm_ratio
      << " rD=" << rep.d_norm_ratio;
    c.note(d.str());
    return {"characterization roundtrip (nu = mu, doubled-atom response)", c.ok, c.detail.str()};
}

// 11. sup-norm gap closed form at mid-gap alignment
CriterionResult criterion_sup_norm_gap() {
    Checker c;
    std::size_t N = 64;
    for (double L : {8.0, 16.0}) {
        auto b = circle_basis(L);
        std::vector<double> cf(b->dim_at(L), 0.0);
        double phase = L * kPi / static_cast<double>(N);
        cf[cf.size() - 2] = std::cos(phase) / std::sqrt(2.0);
        cf[cf.size() - 1] = std::sin(phase) / std::sqrt(2.0);
        DiffusionPolynomial P(b, L, cf);
        SignedMeasure nodes = equispaced(N);
        double gap = 1.0 - norm_p(P, nodes, kInfNorm);
        double want = 1.0 - std::cos(L * kPi / static_cast<double>(N));
        c.expect(std::abs(gap - want) <= 1e-9,
                 "gap matches 1 - cos(L pi / N) at L=" + std::to_string(static_cast<int>(L)));
    }
    return {"sup-norm gap closed form (circle, (L,N) in {(8,64),(16,64)})", c.ok, c.detail.str()};
}

// 12. negative control: three detectors fire together on half support
CriterionResult criterion_negative_control() {
    Checker c;
    std::vector<Point> pts;
    for (int i = 0; i < 128; ++i) pts.push_back({kPi * i / 128.0, 0});
    SignedMeasure nu = SignedMeasure::atomic(kCircle, pts, std::vector<double>(128, 1.0 / 128),
                                             "half-circle");
    RegularityCertificate dom = dominance_norm(nu, 0.05, grid_circle(2048));
    c.expect(dom.d_infinite, "dominance flag fires");
    auto basis = circle_basis(4.0);
    MZReport rep = mz_constants_p2(nu, *basis, 4.0);
    c.expect(rep.c1 <= 1e-3, "p=2 lower constant collapses");
    QuadratureSolve sol = solve_positive_quadrature(nu, basis, 4.0, SolveMode::LPMaximin);
    bool quad_fires = !sol.feasible || sol.rule->residual > 1e-3;
    c.expect(quad_fires, "quadrature LP infeasible or residual > 1e-3");
    std::ostringstream d;
    d << "c1=" << rep.c1 << " lp=" << (sol.feasible ? "feasible" : "infeasible");
    c.note(d.str());
    return {"negative control on half-circle support (three detectors)", c.ok, c.detail.str()};
}

CriterionResult timed(CriterionResult (*fn)(), double budget_s) {
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r = fn();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0.0 && r.seconds > budget_s) {
        r.pass = false;
        r.detail += " [FAILED: runtime " + std::to_string(r.seconds) + "s over budget " +
                    std::to_string(budget_s) + "s]";
    }
    return r;
}

}  // namespace

std::vector<CriterionResult> run_all(std::ostream& log) {
    struct Item {
        CriterionResult (*fn)();
        double budget;
    };
    const Item items[] = {
        {criterion_exact_mz_p2, 1.0},
        {criterion_quadrature_existence, 5.0},
        {criterion_kernel_localization, 10.0},
        {criterion_reproduction, 0.0},
        {criterion_product_closure, 0.0},
        {criterion_partition_invariants, 30.0},
        {criterion_bernstein, 0.0},
        {criterion_strong_mz_scaling, 0.0},
        {criterion_christoffel, 0.0},
        {criterion_characterization, 0.0},
        {criterion_sup_norm_gap, 0.0},
        {criterion_negative_control, 0.0},
    };
    std::vector<CriterionResult> out;
    int idx = 0;
    for (const Item& item : items) {
        ++idx;
        CriterionResult r = timed(item.fn, item.budget);
        log << (r.pass ? "PASS" : "FAIL") << "  " << idx << ". " << r.name;
        if (!r.detail.empty()) log << "  -- " << r.detail;
        log << "  (" << r.seconds << " s)\n";
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace mz::acceptance
