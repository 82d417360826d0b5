#include "mz/polynomials.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "mz/kernels.hpp"
#include "mz/util.hpp"

namespace mz {

DiffusionPolynomial::DiffusionPolynomial(std::shared_ptr<const SpectralBasis> basis, double L,
                                         std::vector<double> coeff)
    : basis_(std::move(basis)), L_(L), coeff_(std::move(coeff)) {
    if (!basis_) throw std::invalid_argument("DiffusionPolynomial: null basis");
    if (basis_->level() + 1e-12 < L)
        throw std::invalid_argument("DiffusionPolynomial: basis truncated below L");
    if (coeff_.size() != basis_->dim_at(L_))
        throw std::invalid_argument("DiffusionPolynomial: coefficient length != dim Pi_L");
}

double DiffusionPolynomial::eval(const Point& p) const {
    thread_local std::vector<double> vals;
    basis_->eval_all(p, vals);
    double s = 0.0;
    for (std::size_t k = 0; k < coeff_.size(); ++k) s += coeff_[k] * vals[k];
    return s;
}

double DiffusionPolynomial::derivative_circle(const Point& p) const {
    double s = 0.0;
    for (std::size_t k = 0; k < coeff_.size(); ++k)
        s += coeff_[k] * basis_->circle_derivative(k, p);
    return s;
}

double gradient_norm_at(const DiffusionPolynomial& P, const Point& x) {
    const ManifoldModel& m = P.basis().manifold();
    switch (m.kind) {
        case ManifoldKind::Circle:
            return std::abs(P.derivative_circle(x));
        case ManifoldKind::Torus2: {
            // analytic: differentiate the tensor factors coefficient-wise
            const double h = 1e-5;
            double ga = (P.eval({x.a + h, x.b}) - P.eval({x.a - h, x.b})) / (2.0 * h);
            double gb = (P.eval({x.a, x.b + h}) - P.eval({x.a, x.b - h})) / (2.0 * h);
            return std::sqrt(ga * ga + gb * gb);
        }
        case ManifoldKind::Sphere2: {
            const double h = 1e-5;
            std::array<double, 3> u = sphere_to_vec(x);
            double ct = std::cos(x.a), st = std::sin(x.a);
            double cl = std::cos(x.b), sl = std::sin(x.b);
            std::array<double, 3> t1 = {ct * cl, ct * sl, -st};
            std::array<double, 3> t2 = {-sl, cl, 0.0};
            auto step = [&](const std::array<double, 3>& t, double s) {
                std::array<double, 3> v;
                double c = std::cos(s), sn = std::sin(s);
                for (int i = 0; i < 3; ++i) v[i] = c * u[i] + sn * t[i];
                return P.eval(vec_to_sphere(v));
            };
            double g1 = (step(t1, h) - step(t1, -h)) / (2.0 * h);
            double g2 = (step(t2, h) - step(t2, -h)) / (2.0 * h);
            return std::sqrt(g1 * g1 + g2 * g2);
        }
    }
    return 0.0;
}

namespace {

double sup_norm_mu(const DiffusionPolynomial& P) {
    const ManifoldModel& m = P.basis().manifold();
    double L = P.degree();
    if (m.kind == ManifoldKind::Circle) {
        std::size_t n = std::max<std::size_t>(1024, static_cast<std::size_t>(32.0 * L));
        double best = 0.0;
        double best_theta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double theta = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
            double v = std::abs(P.eval({theta, 0.0}));
            if (v > best) {
                best = v;
                best_theta = theta;
            }
        }
        double h = kTwoPi / static_cast<double>(n);
        double refined = golden_max([&](double t) { return std::abs(P.eval({t, 0.0})); },
                                    best_theta - h, best_theta + h);
        return std::max(best, refined);
    }
    // sphere / torus: dense deterministic grid; error budget O((L/grid)^2)
    std::size_t n = std::max<std::size_t>(8192, static_cast<std::size_t>(64.0 * L * L));
    double best = 0.0;
    for (const Point& p : default_grid(m, n)) best = std::max(best, std::abs(P.eval(p)));
    return best;
}

}  // namespace

double quasi_norm_p(const DiffusionPolynomial& P, const ReferenceQuadrature& rule, double p) {
    if (p == kInfNorm) return sup_norm_mu(P);
    double s = rule.integrate([&](const Point& x) { return std::pow(std::abs(P.eval(x)), p); });
    return std::pow(s, 1.0 / p);
}

double norm_p(const DiffusionPolynomial& P, const ReferenceQuadrature& rule, double p) {
    if (p != kInfNorm && p < 1.0)
        throw std::invalid_argument("norm_p: p < 1 unsupported (see nikolskii_ratio)");
    return quasi_norm_p(P, rule, p);
}

double norm_p(const DiffusionPolynomial& P, const SignedMeasure& nu, double p) {
    if (p == kInfNorm) {
        double best = 0.0;
        for (const Point& x : nu.support()) best = std::max(best, std::abs(P.eval(x)));
        return best;
    }
    if (p < 1.0) throw std::invalid_argument("norm_p: p < 1 unsupported (see nikolskii_ratio)");
    double s = nu.integrate_abs([&](const Point& x) { return std::pow(std::abs(P.eval(x)), p); });
    return std::pow(s, 1.0 / p);
}

double christoffel(const SpectralBasis& basis, double L, const Point& x) {
    thread_local std::vector<double> vals;
    basis.eval_all(x, vals);
    std::size_t n = basis.dim_at(L);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += vals[k] * vals[k];
    return s;
}

DiffusionPolynomial random_polynomial(std::shared_ptr<const SpectralBasis> basis, double L,
                                      std::uint64_t seed) {
    if (L < 1.0) throw std::invalid_argument("random_polynomial: L must be >= 1");
    Rng rng(seed);
    std::vector<double> coeff(basis->dim_at(L));
    for (double& c : coeff) c = rng.gaussian();
    return DiffusionPolynomial(std::move(basis), L, std::move(coeff));
}

NikolskiiReport nikolskii_ratio(const ManifoldModel& m, const std::vector<double>& levels,
                                double p, double r, int trials, std::uint64_t seed) {
    if (!(p > 0.0) || !(p < r)) throw std::invalid_argument("nikolskii_ratio: need 0 < p < r");
    if (levels.empty()) throw std::invalid_argument("nikolskii_ratio: no levels");
    NikolskiiReport rep;
    rep.p = p;
    rep.r = r;
    rep.levels = levels;
    rep.quasi_norm = p < 1.0;
    rep.claimed_exponent = m.alpha * (1.0 / p - (r == kInfNorm ? 0.0 : 1.0 / r));
    for (double L : levels) {
        auto basis = std::make_shared<const SpectralBasis>(eigen_system(m, L));
        ReferenceQuadrature rule = reference_quadrature(m, L);
        double worst = 0.0;
        for (int t = 0; t < trials; ++t) {
            DiffusionPolynomial P = random_polynomial(basis, L, seed + 1000 * t + 17);
            double hi = quasi_norm_p(P, rule, r);
            double lo = quasi_norm_p(P, rule, p);
            if (lo > 0.0) worst = std::max(worst, hi / lo);
        }
        // localized-kernel extremal peaked at an arbitrary base point
        LocalizedKernel kern(*basis, L);
        Point x0{0.4, 1.1};
        std::vector<double> coeff(basis->dim_at(L));
        std::vector<double> vals;
        basis->eval_all(canonical(m.kind, x0), vals);
        for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = kern.weights()[k] * vals[k];
        DiffusionPolynomial extremal(basis, L, std::move(coeff));
        double hi = quasi_norm_p(extremal, rule, r);
        double lo = quasi_norm_p(extremal, rule, p);
        if (lo > 0.0) worst = std::max(worst, hi / lo);
        rep.worst_ratio.push_back(worst);
    }
    if (levels.size() >= 2) {
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            lx.push_back(std::log(levels[i]));
            ly.push_back(std::log(rep.worst_ratio[i]));
        }
        rep.slope = fit_line(lx, ly).slope;
    }
    return rep;
}

ProductLeakage product_leakage(const DiffusionPolynomial& Q, const DiffusionPolynomial& R,
                               double Astar, const ReferenceQuadrature& rule) {
    if (Astar < 2.0) throw std::invalid_argument("product_leakage: Astar must be >= 2");
    const SpectralBasis& qb = Q.basis();
    double L = std::max(Q.degree(), R.degree());
    double needed = 0.5 * (2.0 + Astar) * L;
    if (rule.exact_degree + 1e-9 < needed)
        throw std::invalid_argument("product_leakage: quadrature degree insufficient");
    SpectralBasis big = eigen_system(qb.manifold(), Astar * L);
    std::size_t dim_big = big.dim_at(Astar * L);

    std::vector<double> c(dim_big, 0.0);
    double qr_sq = 0.0;
    std::vector<double> vals;
    std::vector<double> prod(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        double qr = Q.eval(rule.nodes[i]) * R.eval(rule.nodes[i]);
        prod[i] = qr;
        qr_sq += rule.weights[i] * qr * qr;
        big.eval_all(rule.nodes[i], vals);
        for (std::size_t k = 0; k < dim_big; ++k) c[k] += rule.weights[i] * qr * vals[k];
    }
    // the residual QR - S(QR) is integrated explicitly; the Parseval-difference
    // form cancels catastrophically when the true leakage is near zero
    ProductLeakage out;
    double res_sq = 0.0;
    double max_qr = 0.0, max_res = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        big.eval_all(rule.nodes[i], vals);
        double s = 0.0;
        for (std::size_t k = 0; k < dim_big; ++k) s += c[k] * vals[k];
        double res = prod[i] - s;
        res_sq += rule.weights[i] * res * res;
        max_qr = std::max(max_qr, std::abs(prod[i]));
        max_res = std::max(max_res, std::abs(res));
    }
    if (qr_sq > 0.0) out.l2_relative = std::sqrt(res_sq / qr_sq);
    if (max_qr > 0.0) out.grid_inf_residual = max_res / max_qr;
    return out;
}

ProductLeakage product_leakage(const DiffusionPolynomial& Q, const DiffusionPolynomial& R,
                               double Astar) {
    double L = std::max(Q.degree(), R.degree());
    ReferenceQuadrature rule =
        reference_quadrature(Q.basis().manifold(), 0.5 * (2.0 + Astar) * L);
    return product_leakage(Q, R, Astar, rule);
}

}  // namespace mz
