#include "mz/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mz/util.hpp"

namespace mz {

namespace {

double bump(double u) {
    if (u <= 0.5 || u >= 1.0) return 0.0;
    return std::exp(-1.0 / ((u - 0.5) * (1.0 - u)));
}

double bump_total() {
    static const double total = integrate_adaptive(bump, 0.5, 1.0, 1e-22, 48);
    return total;
}

}  // namespace

double cutoff_h(double t) {
    t = std::abs(t);
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    double tail = integrate_adaptive(bump, t, 1.0, 1e-22, 48);
    double h = tail / bump_total();
    return std::clamp(h, 0.0, 1.0);
}

int cutoff_smoothness_witness(int max_order) {
    // k-th one-sided finite differences at both seams: certified continuous
    // when the estimates keep shrinking as the step is halved (the flat side
    // is identically 0/1, so the transition side must flatten to match)
    auto fd = [](double seam, double dir, int k, double h) {
        // forward difference of order k in direction dir
        double s = 0.0;
        double sign = 1.0;
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            s += sign * binom * cutoff_h(seam + dir * h * static_cast<double>(k - j));
            sign = -sign;
            binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
        }
        return s / std::pow(h, k);
    };
    int certified = 0;
    for (int k = 1; k <= max_order; ++k) {
        bool ok = true;
        for (double seam : {0.5, 1.0}) {
            double dir = (seam == 0.5) ? 1.0 : -1.0;  // probe into the transition
            double prev = std::abs(fd(seam, dir, k, 0.04));
            double cur = std::abs(fd(seam, dir, k, 0.02));
            double fine = std::abs(fd(seam, dir, k, 0.01));
            if (!(fine <= 0.75 * cur + 1e-9 && cur <= 0.75 * prev + 1e-9)) ok = false;
        }
        if (!ok) break;
        certified = k;
    }
    return certified;
}

LocalizedKernel::LocalizedKernel(const SpectralBasis& basis, double L) : basis_(&basis), L_(L) {
    if (basis.level() + 1e-12 < L)
        throw std::invalid_argument("LocalizedKernel: basis truncated below L");
    w_.resize(basis.dim());
    for (std::size_t k = 0; k < basis.dim(); ++k) w_[k] = cutoff_h(basis.ell(k) / L);
}

double LocalizedKernel::eval(const Point& x, const Point& y) const {
    thread_local std::vector<double> vx, vy;
    basis_->eval_all(x, vx);
    basis_->eval_all(y, vy);
    double s = 0.0;
    for (std::size_t k = 0; k < w_.size(); ++k) {
        if (w_[k] == 0.0) continue;
        s += w_[k] * vx[k] * vy[k];
    }
    return s;
}

double LocalizedKernel::diagonal(const Point& x) const {
    thread_local std::vector<double> vx;
    basis_->eval_all(x, vx);
    double s = 0.0;
    for (std::size_t k = 0; k < w_.size(); ++k) s += w_[k] * vx[k] * vx[k];
    return s;
}

DiffusionPolynomial LocalizedKernel::at(std::shared_ptr<const SpectralBasis> basis,
                                        const Point& x) const {
    std::vector<double> vals;
    basis->eval_all(canonical(basis->manifold().kind, x), vals);
    std::vector<double> coeff(basis->dim_at(L_));
    for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = w_[k] * vals[k];
    return DiffusionPolynomial(std::move(basis), L_, std::move(coeff));
}

double phi_kernel(const SpectralBasis& basis, double L, const Point& x, const Point& y) {
    return LocalizedKernel(basis, L).eval(x, y);
}

DiffusionPolynomial sigma_op(std::shared_ptr<const SpectralBasis> basis, double L,
                             const ReferenceQuadrature& rule,
                             const std::vector<double>& f_samples) {
    if (rule.nodes.size() != f_samples.size())
        throw std::invalid_argument("sigma_op: sample count != rule nodes");
    if (rule.exact_degree + 1e-9 < L)
        throw std::invalid_argument("sigma_op: reference quadrature degree below the sigma level");
    LocalizedKernel kern(*basis, L);
    std::size_t dim = basis->dim_at(L);
    std::vector<double> coeff(dim, 0.0);
    std::vector<double> vals;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        basis->eval_all(rule.nodes[i], vals);
        double wf = rule.weights[i] * f_samples[i];
        for (std::size_t k = 0; k < dim; ++k) coeff[k] += wf * vals[k];
    }
    for (std::size_t k = 0; k < dim; ++k) coeff[k] *= kern.weights()[k];
    return DiffusionPolynomial(std::move(basis), L, std::move(coeff));
}

DiffusionPolynomial sigma_discrete(std::shared_ptr<const SpectralBasis> basis, double L,
                                   const SignedMeasure& nu, const std::vector<double>& f_values) {
    if (nu.atom_count() != f_values.size())
        throw std::invalid_argument("sigma_discrete: f values not aligned with the measure atoms");
    LocalizedKernel kern(*basis, L);
    std::size_t dim = basis->dim_at(L);
    std::vector<double> coeff(dim, 0.0);
    std::vector<double> vals;
    const std::vector<Point>& pts = nu.points();
    const std::vector<double>& w = nu.masses();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (w[i] == 0.0) continue;
        basis->eval_all(pts[i], vals);
        double wf = w[i] * f_values[i];
        for (std::size_t k = 0; k < dim; ++k) coeff[k] += wf * vals[k];
    }
    for (std::size_t k = 0; k < dim; ++k) coeff[k] *= kern.weights()[k];
    return DiffusionPolynomial(std::move(basis), L, std::move(coeff));
}

namespace {

// crude upper bound for sup_x sum_{ell_j <= L} phi_j(x)^2
double christoffel_upper(const ManifoldModel& m, double L) {
    switch (m.kind) {
        case ManifoldKind::Circle: return 2.0 * L + 3.0;
        case ManifoldKind::Sphere2: return (L + 2.0) * (L + 2.0);
        case ManifoldKind::Torus2: return 4.0 * (L + 2.0) * (L + 2.0);
    }
    return 0.0;
}

double heat_tail_bound(const ManifoldModel& m, double t, double level) {
    // sum over dyadic shells [2^j level, 2^{j+1} level)
    double bound = 0.0;
    double lo = level;
    for (int j = 0; j < 64; ++j) {
        double shell = std::exp(-lo * lo * t) * christoffel_upper(m, 2.0 * lo);
        bound += shell;
        if (shell < 1e-300) break;
        lo *= 2.0;
    }
    return bound;
}

}  // namespace

HeatValue heat_kernel(const SpectralBasis& basis, double t, const Point& x, const Point& y,
                      double tol) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be positive");
    const ManifoldModel& m = basis.manifold();
    // find the smallest truncation level within the basis meeting tol
    double level = std::max(1.0, 4.0 / std::sqrt(t) / 8.0);
    while (level <= basis.level() && heat_tail_bound(m, t, level) > tol) level *= 1.25;
    if (heat_tail_bound(m, t, std::min(level, basis.level())) > tol)
        throw std::domain_error("heat_kernel: tolerance unachievable at the available truncation");
    level = std::min(level, basis.level());

    thread_local std::vector<double> vx, vy;
    basis.eval_all(x, vx);
    basis.eval_all(y, vy);
    HeatValue out;
    std::size_t n = basis.dim_at(level);
    for (std::size_t k = 0; k < n; ++k) {
        double ell = basis.ell(k);
        out.value += std::exp(-ell * ell * t) * vx[k] * vy[k];
    }
    out.terms = n;
    out.tail_bound = heat_tail_bound(m, t, level);
    return out;
}

KernelProbeReport localization_report(const ManifoldModel& m, const std::vector<double>& levels,
                                      const std::vector<int>& s_values,
                                      const KernelProbeOptions& opts) {
    if (levels.empty()) throw std::invalid_argument("localization_report: no levels");
    for (int s : s_values)
        if (static_cast<double>(s) <= m.alpha)
            throw std::invalid_argument("localization_report: S must exceed alpha");
    if (opts.probes_per_inverse_level < 8)
        throw std::invalid_argument("localization_report: probe set too coarse (< 8 per 1/L)");

    KernelProbeReport rep;
    rep.manifold = m;
    rep.levels = levels;
    rep.s_values = s_values;
    rep.c_loc.assign(s_values.size(), std::vector<double>(levels.size(), 0.0));
    rep.sup_l1.resize(levels.size());

    double Lmax = *std::max_element(levels.begin(), levels.end());
    // base points for the probes; homogeneity makes a handful enough
    std::vector<Point> bases;
    if (m.kind == ManifoldKind::Circle) {
        bases = {{0.0, 0.0}, {1.1, 0.0}, {4.0, 0.0}};
    } else if (m.kind == ManifoldKind::Sphere2) {
        bases = {{0.3, 0.2}, {kPi / 2.0, 1.0}, {2.6, 4.0}};
    } else {
        bases = {{0.2, 5.1}, {3.0, 1.4}, {5.5, 2.8}};
    }

    for (std::size_t li = 0; li < levels.size(); ++li) {
        double L = levels[li];
        SpectralBasis basis = eigen_system(m, L);
        LocalizedKernel kern(basis, L);

        // localization envelope over geodesic rays of probe points
        std::size_t n_probe = static_cast<std::size_t>(
            std::ceil(opts.probes_per_inverse_level * L * m.diameter));
        n_probe = std::max<std::size_t>(n_probe, 256);
        auto ray_point = [&](const Point& x0, double rho) {
            Point y = x0;
            if (m.kind == ManifoldKind::Torus2) {
                y.a += rho / std::sqrt(2.0);
                y.b += rho / std::sqrt(2.0);
            } else {
                y.a += rho;  // meridian ray; folding handled by canonical()
            }
            return canonical(m.kind, y);
        };
        std::vector<double> env(s_values.size(), 0.0);
        for (const Point& x0 : bases) {
            std::vector<double> kval(n_probe), rho_true(n_probe);
            parallel_for(n_probe, opts.threads, [&](std::size_t i) {
                double rho = m.diameter * (static_cast<double>(i) + 0.5) /
                             static_cast<double>(n_probe);
                Point y = ray_point(x0, rho);
                kval[i] = std::abs(kern.eval(x0, y));
                rho_true[i] = geodesic_distance(m, x0, y);
            });
            for (std::size_t i = 0; i < n_probe; ++i) {
                for (std::size_t si = 0; si < s_values.size(); ++si) {
                    double denom = std::pow(L, m.alpha) /
                                   std::max(1.0, std::pow(L * rho_true[i], s_values[si]));
                    env[si] = std::max(env[si], kval[i] / denom);
                }
            }
        }
        for (std::size_t si = 0; si < s_values.size(); ++si) rep.c_loc[si][li] = env[si];

        // sup_x of the L1 mass of Phi_L(x, .)
        ReferenceQuadrature rule = reference_quadrature(m, 2.0 * L);
        double sup = 0.0;
        for (const Point& x0 : bases) {
            std::vector<double> contrib(rule.nodes.size());
            parallel_for(rule.nodes.size(), opts.threads, [&](std::size_t i) {
                contrib[i] = rule.weights[i] * std::abs(kern.eval(x0, rule.nodes[i]));
            });
            double total = 0.0;
            for (double v : contrib) total += v;
            sup = std::max(sup, total);
        }
        rep.sup_l1[li] = sup;

        // beta_hat: widest prefix where the kernel keeps half its peak
        double beta = 0.0;
        bool alive = true;
        for (int step = 1; step <= 64 && alive; ++step) {
            double cand = 0.5 * static_cast<double>(step) / 64.0;
            for (const Point& x0 : bases) {
                Point y = ray_point(x0, cand / L);
                if (std::abs(kern.eval(x0, y)) < 0.5 * kern.diagonal(x0)) {
                    alive = false;
                    break;
                }
            }
            if (alive) beta = cand;
        }
        rep.beta_hat = (li == 0) ? beta : std::min(rep.beta_hat, beta);
    }

    // Gaussian bounds on the heat kernel over a t-grid
    {
        SpectralBasis basis = eigen_system(m, std::max(64.0, 6.0 * Lmax));
        std::vector<double> ts;
        for (int i = 0; i < opts.t_grid_size; ++i) ts.push_back(0.2 / std::pow(2.0, i));
        std::vector<double> rr, logk;  // rho^2/t and log(|K| t^{alpha/2})
        double k4 = 1e300;
        std::size_t n_viol_probes = 0;
        std::vector<double> all_ratio, all_rho2t;
        for (double t : ts) {
            for (const Point& x0 : bases) {
                double diag = heat_kernel(basis, t, x0, x0, 1e-10).value;
                k4 = std::min(k4, diag * std::pow(t, m.alpha / 2.0));
                std::size_t n_r = 48;
                for (std::size_t i = 0; i < n_r; ++i) {
                    double rho = 4.0 * std::sqrt(t) * (static_cast<double>(i) + 0.5) /
                                 static_cast<double>(n_r);
                    if (rho > m.diameter) continue;
                    Point y = x0;
                    y.a += rho;
                    y = canonical(m.kind, y);
                    double rho_true = geodesic_distance(m, x0, y);
                    double k = std::abs(heat_kernel(basis, t, x0, y, 1e-10).value);
                    if (k < 1e-14) continue;
                    all_ratio.push_back(std::log(k * std::pow(t, m.alpha / 2.0)));
                    all_rho2t.push_back(rho_true * rho_true / t);
                    ++n_viol_probes;
                }
            }
        }
        // least squares for kappa3, then raise kappa2 to the envelope
        LineFit fit = fit_line(all_rho2t, all_ratio);
        rep.kappa3 = std::max(1e-6, -fit.slope);
        double k2 = 0.0;
        std::size_t viol = 0;
        for (std::size_t i = 0; i < all_ratio.size(); ++i)
            k2 = std::max(k2, std::exp(all_ratio[i] + rep.kappa3 * all_rho2t[i]));
        for (std::size_t i = 0; i < all_ratio.size(); ++i)
            if (all_ratio[i] > std::log(k2) - rep.kappa3 * all_rho2t[i] + 1e-9) ++viol;
        rep.kappa2 = k2;
        rep.kappa4 = k4;
        rep.gauss_violation_rate =
            n_viol_probes ? static_cast<double>(viol) / static_cast<double>(n_viol_probes) : 0.0;

        // heat-integral normalization note (ell_0 = 1)
        double t0 = 0.1;
        ReferenceQuadrature rule = reference_quadrature(m, 16.0);
        double raw = rule.integrate([&](const Point& y) {
            return heat_kernel(basis, t0, bases[0], y, 1e-10).value;
        });
        rep.heat_integral_raw = raw;
        rep.heat_integral_rescaled = raw * std::exp(t0);
    }
    return rep;
}

}  // namespace mz
