#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "mz/kernels.hpp"
#include "mz/util.hpp"

using namespace mz;

namespace {

const ManifoldModel kCircle = ManifoldModel::circle();

std::shared_ptr<const SpectralBasis> circle_basis(double L) {
    return std::make_shared<const SpectralBasis>(eigen_system(kCircle, L));
}

}  // namespace

TEST_CASE("cutoff flat regions and symmetry") {
    CHECK(cutoff_h(0.3) == 1.0);
    CHECK(cutoff_h(0.5) == 1.0);
    CHECK(cutoff_h(1.2) == 0.0);
    CHECK(cutoff_h(1.0) == 0.0);
    CHECK(cutoff_h(-0.75) == doctest::Approx(cutoff_h(0.75)).epsilon(1e-14));
    // nonincreasing on [0, inf), range [0, 1]
    double prev = 1.0;
    for (int i = 0; i <= 400; ++i) {
        double t = 1.2 * i / 400.0;
        double v = cutoff_h(t);
        CHECK(v <= 1.0);
        CHECK(v >= 0.0);
        CHECK(v <= prev + 1e-13);
        prev = v;
    }
    // interior value is strictly between the plateaus
    CHECK(cutoff_h(0.75) > 0.0);
    CHECK(cutoff_h(0.75) < 1.0);
}

TEST_CASE("cutoff smoothness witness") {
    CutoffFunction h = CutoffFunction::probe(6);
    CHECK(h.smoothness_witness >= 2);
    MESSAGE("cutoff derivatives certified: ", h.smoothness_witness);
}

TEST_CASE("phi kernel diagonal and symmetry") {
    auto basis = circle_basis(16.0);
    LocalizedKernel kern(*basis, 16.0);
    // Phi_L(x,x) = 1 + 2 sum h(k/L); at least the unfiltered half survives
    double direct = 1.0;
    for (int k = 1; k <= 16; ++k) direct += 2.0 * cutoff_h(k / 16.0);
    CHECK(kern.diagonal({0.7, 0}) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(direct >= 2.0 * 8 + 1);

    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        Point x = random_point(kCircle, rng), y = random_point(kCircle, rng);
        CHECK(kern.eval(x, y) == doctest::Approx(kern.eval(y, x)).epsilon(1e-12));
    }
    CHECK_THROWS(LocalizedKernel(*basis, 32.0));  // basis truncated below L
}

TEST_CASE("phi kernel at fractional level keeps only the filtered constant block") {
    auto basis = circle_basis(2.0);
    // L = 1.6: every retained entry has ell = 1, weight h(1/1.6)
    LocalizedKernel kern(*basis, 1.6);
    double w = cutoff_h(1.0 / 1.6);
    Point x{0.3, 0}, y{1.8, 0};
    double expect = w * (1.0 + 2.0 * std::cos(x.a - y.a));
    CHECK(kern.eval(x, y) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sigma reproduces polynomials below half level") {
    for (double L : {8.0, 32.0}) {
        auto basis2 = circle_basis(2.0 * L);
        ReferenceQuadrature rule = reference_quadrature(kCircle, 2.0 * L);
        for (int t = 0; t < 10; ++t) {
            DiffusionPolynomial P = random_polynomial(basis2, L, 100 + t);
            std::vector<double> samples(rule.nodes.size());
            for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = P.eval(rule.nodes[i]);
            DiffusionPolynomial S = sigma_op(basis2, 2.0 * L, rule, samples);
            // coefficientwise agreement on the Pi_L block, zero beyond
            double err2 = 0.0;
            for (std::size_t k = 0; k < S.coeff().size(); ++k) {
                double want = (k < P.coeff().size()) ? P.coeff()[k] : 0.0;
                err2 += (S.coeff()[k] - want) * (S.coeff()[k] - want);
            }
            CHECK(std::sqrt(err2) < 1e-10);
        }
    }
}

TEST_CASE("sigma filters single modes by h(ell/L)") {
    double L = 8.0;
    auto basis = circle_basis(2.0 * L);
    ReferenceQuadrature rule = reference_quadrature(kCircle, 2.0 * L);
    // f = phi_j with ell_j = 12 > L: sigma_L(f) = h(12/8) phi_j = 0 (12/8 >= 1... no, = 1.5)
    std::size_t j = 0;
    for (std::size_t k = 0; k < basis->dim(); ++k)
        if (basis->ell(k) == 12.0) j = k;
    REQUIRE(j > 0);
    std::vector<double> samples(rule.nodes.size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = basis->eval(j, rule.nodes[i]);
    DiffusionPolynomial S = sigma_op(basis, L, rule, samples);
    for (double c : S.coeff()) CHECK(std::abs(c) < 1e-13);

    // ell_j = 6: sigma_8 keeps it scaled by h(6/8)
    for (std::size_t k = 0; k < basis->dim(); ++k)
        if (basis->ell(k) == 6.0 && basis->entries()[k].i3 == 0) j = k;
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = basis->eval(j, rule.nodes[i]);
    S = sigma_op(basis, L, rule, samples);
    for (std::size_t k = 0; k < S.coeff().size(); ++k) {
        double want = (k == j) ? cutoff_h(6.0 / 8.0) : 0.0;
        CHECK(S.coeff()[k] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("sigma is bounded on L1, L2 and sup norms") {
    // square wave through sigma_L: one fitted constant across levels
    double c_fit = 0.0;
    for (double L : {8.0, 16.0, 32.0, 64.0}) {
        auto basis = circle_basis(L);
        ReferenceQuadrature rule = reference_quadrature(kCircle, L);
        std::vector<double> f(rule.nodes.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = rule.nodes[i].a < kPi ? 1.0 : -1.0;
        DiffusionPolynomial S = sigma_op(basis, L, rule, f);
        for (double p : {1.0, 2.0, kInfNorm}) {
            double fn;
            if (p == kInfNorm) {
                fn = 1.0;
            } else {
                double s = 0.0;
                for (std::size_t i = 0; i < f.size(); ++i)
                    s += rule.weights[i] * std::pow(std::abs(f[i]), p);
                fn = std::pow(s, 1.0 / p);
            }
            double ratio = norm_p(S, rule, p) / fn;
            c_fit = std::max(c_fit, ratio);
        }
    }
    CHECK(c_fit < 1.5);
    MESSAGE("sigma operator constant on the square wave: ", c_fit);
}

TEST_CASE("sigma discrete against atomic measures") {
    double L = 6.0;
    auto basis = circle_basis(2.0 * L);
    ReferenceQuadrature rule = reference_quadrature(kCircle, 2.0 * L);
    auto rule_sp = std::make_shared<const ReferenceQuadrature>(rule);

    // the rule viewed as an atomic measure reproduces sigma_L on Pi_L
    SignedMeasure tau = SignedMeasure::atomic(kCircle, rule.nodes,
                                              rule.weights, "rule-atoms");
    DiffusionPolynomial P = random_polynomial(basis, L, 42);
    std::vector<double> fv(tau.atom_count());
    for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = P.eval(tau.points()[i]);
    DiffusionPolynomial A = sigma_discrete(basis, 2.0 * L, tau, fv);
    Rng rng(9);
    for (int i = 0; i < 40; ++i) {
        Point x = random_point(kCircle, rng);
        CHECK(A.eval(x) == doctest::Approx(P.eval(x)).epsilon(1e-10));
    }

    // a single atom gives x -> f(y0) Phi_L(x, y0)
    SignedMeasure one = SignedMeasure::atomic(kCircle, {{2.0, 0}}, {1.0});
    DiffusionPolynomial B = sigma_discrete(basis, L, one, {3.5});
    LocalizedKernel kern(*basis, L);
    for (int i = 0; i < 20; ++i) {
        Point x = random_point(kCircle, rng);
        CHECK(B.eval(x) == doctest::Approx(3.5 * kern.eval(x, {2.0, 0})).epsilon(1e-11));
    }
    CHECK_THROWS(sigma_discrete(basis, L, one, {1.0, 2.0}));  // misaligned values
}

TEST_CASE("heat kernel basics") {
    SpectralBasis basis = eigen_system(kCircle, 128.0);
    // large t: only the ell = 1 block survives.  On the circle the
    // frequency-one pair shares ell = 1 with the constant, so
    // K_t -> exp(-t) (1 + 2 cos(dx)); at quarter separation the cosine drops
    // out and the limit is exp(-t) alone
    HeatValue hv = heat_kernel(basis, 8.0, {0.1, 0}, {0.1 + kPi / 2.0, 0}, 1e-12);
    CHECK(hv.value == doctest::Approx(std::exp(-8.0)).epsilon(1e-9));
    HeatValue hv2 = heat_kernel(basis, 8.0, {0.1, 0}, {2.0, 0}, 1e-12);
    CHECK(hv2.value ==
          doctest::Approx(std::exp(-8.0) * (1.0 + 2.0 * std::cos(1.9))).epsilon(1e-9));

    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        Point x = random_point(kCircle, rng), y = random_point(kCircle, rng);
        double a = heat_kernel(basis, 0.05, x, y, 1e-10).value;
        double b = heat_kernel(basis, 0.05, y, x, 1e-10).value;
        CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }

    // brute-force oracle at t = 0.01 on the diagonal: e^-t + 2 sum e^{-k^2 t}
    double t = 0.01;
    double oracle = std::exp(-t);
    for (int k = 1; k <= 100000; ++k) oracle += 2.0 * std::exp(-static_cast<double>(k) * k * t);
    HeatValue diag = heat_kernel(basis, t, {1.0, 0}, {1.0, 0}, 1e-8);
    CHECK(diag.value == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(diag.tail_bound <= 1e-8);

    CHECK_THROWS_AS(heat_kernel(basis, -1.0, {0, 0}, {0, 0}, 1e-8), std::invalid_argument);
    // unattainable tolerance at a tiny basis
    SpectralBasis tiny = eigen_system(kCircle, 2.0);
    CHECK_THROWS_AS(heat_kernel(tiny, 1e-4, {0, 0}, {0, 0}, 1e-12), std::domain_error);
}

TEST_CASE("localization report on the circle") {
    KernelProbeReport rep = localization_report(kCircle, {16.0, 32.0, 64.0}, {2, 5});
    // fitted localization constants stay within a factor 2 across levels
    for (std::size_t si = 0; si < rep.s_values.size(); ++si) {
        double lo = 1e300, hi = 0.0;
        for (double c : rep.c_loc[si]) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
            CHECK(c > 0.0);
            CHECK(std::isfinite(c));
        }
        CHECK(hi / lo <= 2.0);
    }
    // L1 norms flat in L
    double lo = 1e300, hi = 0.0;
    for (double v : rep.sup_l1) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi / lo <= 1.1);
    // kernel keeps half its height out to beta/L
    CHECK(rep.beta_hat >= 0.1);
    CHECK(rep.beta_hat <= 0.5);
    // Gaussian envelope fits with positive constants and no violations
    CHECK(rep.kappa2 > 0.0);
    CHECK(rep.kappa3 > 0.0);
    CHECK(rep.kappa4 > 0.0);
    CHECK(rep.gauss_violation_rate <= 0.001);
    // ell_0 = 1 normalization: raw integral exp(-t), rescaled one
    CHECK(rep.heat_integral_raw == doctest::Approx(std::exp(-0.1)).epsilon(1e-6));
    CHECK(rep.heat_integral_rescaled == doctest::Approx(1.0).epsilon(1e-6));
    MESSAGE("circle kappa = (", rep.kappa2, ", ", rep.kappa3, ", ", rep.kappa4,
            "), beta = ", rep.beta_hat);
    CHECK_THROWS(localization_report(kCircle, {16.0}, {1}));   // S <= alpha
    KernelProbeOptions coarse;
    coarse.probes_per_inverse_level = 4;
    CHECK_THROWS(localization_report(kCircle, {16.0}, {3}, coarse));
}

TEST_CASE("christoffel growth matches the dimension count") {
    // sum of squared basis values at any point, divided by L^alpha, stays in a
    // narrow band (exactly (2L+1)/L on the circle)
    SpectralBasis basis = eigen_system(kCircle, 64.0);
    for (double L : {4.0, 16.0, 64.0}) {
        double v = christoffel(basis, L, {0.9, 0});
        CHECK(v == doctest::Approx(2.0 * L + 1.0).epsilon(1e-12));
    }
}
