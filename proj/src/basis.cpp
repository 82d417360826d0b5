#include "mz/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mz {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880168872420969808;

// Fully normalized associated Legendre values p_lm(cos theta) with
// int_0^pi p_lm^2 sin = 2, stored in a packed (l, m) table, m <= l <= lmax.
// Standard three-term recurrences, no Condon-Shortley phase.
void legendre_table(int lmax, double ct, double st, std::vector<double>& out) {
    auto idx = [](int l, int m) { return l * (l + 1) / 2 + m; };
    out.assign(static_cast<std::size_t>(idx(lmax, lmax)) + 1, 0.0);
    out[0] = 1.0;
    for (int m = 1; m <= lmax; ++m)
        out[idx(m, m)] = st * std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * out[idx(m - 1, m - 1)];
    for (int m = 0; m < lmax; ++m)
        out[idx(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * ct * out[idx(m, m)];
    for (int m = 0; m <= lmax; ++m) {
        for (int l = m + 2; l <= lmax; ++l) {
            double a = std::sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) /
                                 (static_cast<double>(l - m) * (l + m)));
            double b = std::sqrt((2.0 * l + 1.0) * (l + m - 1.0) * (l - m - 1.0) /
                                 ((2.0 * l - 3.0) * (l - m) * (l + m)));
            out[idx(l, m)] = a * ct * out[idx(l - 1, m)] - b * out[idx(l - 2, m)];
        }
    }
}

int sphere_lmax(double L) {
    int l = 0;
    while (static_cast<double>(l + 1) * (l + 2) <= L * L) ++l;
    return l;
}

}  // namespace

SpectralBasis SpectralBasis::build(const ManifoldModel& m, double L) {
    if (L < 1.0) throw std::invalid_argument("eigen_system: level must be >= 1");
    SpectralBasis b;
    b.m_ = m;
    b.L_ = L;
    switch (m.kind) {
        case ManifoldKind::Circle: {
            b.entries_.push_back({1.0, 0, 0, 0});
            int kmax = static_cast<int>(std::floor(L + 1e-12));
            for (int k = 1; k <= kmax; ++k) {
                double ell = std::max(1.0, static_cast<double>(k));
                b.entries_.push_back({ell, k, 0, 0});  // sqrt2 cos k theta
                b.entries_.push_back({ell, k, 0, 1});  // sqrt2 sin k theta
            }
            break;
        }
        case ManifoldKind::Sphere2: {
            int lmax = sphere_lmax(L);
            for (int l = 0; l <= lmax; ++l) {
                double ell = std::max(1.0, std::sqrt(static_cast<double>(l) * (l + 1)));
                b.entries_.push_back({ell, l, 0, 0});
                for (int mm = 1; mm <= l; ++mm) {
                    b.entries_.push_back({ell, l, mm, 0});  // cos(m lambda)
                    b.entries_.push_back({ell, l, mm, 1});  // sin(m lambda)
                }
            }
            break;
        }
        case ManifoldKind::Torus2: {
            int mmax = static_cast<int>(std::floor(L + 1e-12));
            struct Mode {
                double ell;
                int m1, m2, t;
            };
            std::vector<Mode> modes;
            for (int m1 = 0; m1 <= mmax; ++m1) {
                for (int m2 = 0; m2 <= mmax; ++m2) {
                    double n2 = static_cast<double>(m1) * m1 + static_cast<double>(m2) * m2;
                    if (m1 + m2 > 0 && n2 > L * L + 1e-12) continue;
                    double ell = std::max(1.0, std::sqrt(n2));
                    // t encodes the trig choice per axis: bit 0 for axis 1,
                    // bit 1 for axis 2 (0 = cos, 1 = sin); axes with m = 0
                    // contribute the constant factor only.
                    int t1max = (m1 > 0) ? 1 : 0;
                    int t2max = (m2 > 0) ? 1 : 0;
                    for (int t1 = 0; t1 <= t1max; ++t1)
                        for (int t2 = 0; t2 <= t2max; ++t2)
                            modes.push_back({ell, m1, m2, t1 | (t2 << 1)});
                }
            }
            std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& bm) {
                if (a.ell != bm.ell) return a.ell < bm.ell;
                if (a.m1 != bm.m1) return a.m1 < bm.m1;
                if (a.m2 != bm.m2) return a.m2 < bm.m2;
                return a.t < bm.t;
            });
            for (const Mode& md : modes) b.entries_.push_back({md.ell, md.m1, md.m2, md.t});
            break;
        }
    }
    std::stable_sort(b.entries_.begin(), b.entries_.end(),
                     [](const BasisEntry& x, const BasisEntry& y) { return x.ell < y.ell; });
    return b;
}

SpectralBasis eigen_system(const ManifoldModel& m, double L) { return SpectralBasis::build(m, L); }

std::size_t SpectralBasis::dim_at(double L) const {
    std::size_t n = 0;
    while (n < entries_.size() && entries_[n].ell <= L + 1e-12) ++n;
    return n;
}

double SpectralBasis::eval(std::size_t k, const Point& p) const {
    const BasisEntry& e = entries_[k];
    switch (m_.kind) {
        case ManifoldKind::Circle: {
            if (e.i1 == 0) return 1.0;
            double a = e.i1 * p.a;
            return kSqrt2 * (e.i3 ? std::sin(a) : std::cos(a));
        }
        case ManifoldKind::Sphere2: {
            std::vector<double> tbl;
            legendre_table(e.i1, std::cos(p.a), std::sin(p.a), tbl);
            auto idx = [](int l, int m) { return l * (l + 1) / 2 + m; };
            double plm = tbl[idx(e.i1, e.i2)];
            if (e.i2 == 0) return plm;
            double a = e.i2 * p.b;
            return kSqrt2 * plm * (e.i3 ? std::sin(a) : std::cos(a));
        }
        case ManifoldKind::Torus2: {
            auto axis = [](int m, int t, double ang) {
                if (m == 0) return 1.0;
                double a = m * ang;
                return kSqrt2 * (t ? std::sin(a) : std::cos(a));
            };
            return axis(e.i1, e.i3 & 1, p.a) * axis(e.i2, (e.i3 >> 1) & 1, p.b);
        }
    }
    return 0.0;
}

void SpectralBasis::eval_all(const Point& p, std::vector<double>& out) const {
    out.resize(entries_.size());
    switch (m_.kind) {
        case ManifoldKind::Circle: {
            for (std::size_t k = 0; k < entries_.size(); ++k) {
                const BasisEntry& e = entries_[k];
                if (e.i1 == 0) {
                    out[k] = 1.0;
                } else {
                    double a = e.i1 * p.a;
                    out[k] = kSqrt2 * (e.i3 ? std::sin(a) : std::cos(a));
                }
            }
            return;
        }
        case ManifoldKind::Sphere2: {
            int lmax = 0;
            for (const BasisEntry& e : entries_) lmax = std::max(lmax, e.i1);
            std::vector<double> tbl;
            legendre_table(lmax, std::cos(p.a), std::sin(p.a), tbl);
            auto idx = [](int l, int m) { return l * (l + 1) / 2 + m; };
            int mmax = lmax;
            std::vector<double> cs(mmax + 1), sn(mmax + 1);
            for (int mm = 0; mm <= mmax; ++mm) {
                cs[mm] = std::cos(mm * p.b);
                sn[mm] = std::sin(mm * p.b);
            }
            for (std::size_t k = 0; k < entries_.size(); ++k) {
                const BasisEntry& e = entries_[k];
                double plm = tbl[idx(e.i1, e.i2)];
                out[k] = (e.i2 == 0) ? plm : kSqrt2 * plm * (e.i3 ? sn[e.i2] : cs[e.i2]);
            }
            return;
        }
        case ManifoldKind::Torus2: {
            int mmax = 0;
            for (const BasisEntry& e : entries_) mmax = std::max({mmax, e.i1, e.i2});
            std::vector<double> c1(mmax + 1), s1(mmax + 1), c2(mmax + 1), s2(mmax + 1);
            for (int mm = 0; mm <= mmax; ++mm) {
                c1[mm] = std::cos(mm * p.a);
                s1[mm] = std::sin(mm * p.a);
                c2[mm] = std::cos(mm * p.b);
                s2[mm] = std::sin(mm * p.b);
            }
            for (std::size_t k = 0; k < entries_.size(); ++k) {
                const BasisEntry& e = entries_[k];
                double f1 = (e.i1 == 0) ? 1.0 : kSqrt2 * ((e.i3 & 1) ? s1[e.i1] : c1[e.i1]);
                double f2 = (e.i2 == 0) ? 1.0 : kSqrt2 * (((e.i3 >> 1) & 1) ? s2[e.i2] : c2[e.i2]);
                out[k] = f1 * f2;
            }
            return;
        }
    }
}

double SpectralBasis::circle_derivative(std::size_t k, const Point& p) const {
    if (m_.kind != ManifoldKind::Circle)
        throw std::logic_error("circle_derivative: wrong manifold");
    const BasisEntry& e = entries_[k];
    if (e.i1 == 0) return 0.0;
    double a = e.i1 * p.a;
    double m = static_cast<double>(e.i1);
    return kSqrt2 * m * (e.i3 ? std::cos(a) : -std::sin(a));
}

double SpectralBasis::gradient_norm(std::size_t k, const Point& p) const {
    switch (m_.kind) {
        case ManifoldKind::Circle:
            return std::abs(circle_derivative(k, p));
        case ManifoldKind::Torus2: {
            const BasisEntry& e = entries_[k];
            auto axis = [](int m, int t, double ang) {
                if (m == 0) return 1.0;
                double a = m * ang;
                return kSqrt2 * (t ? std::sin(a) : std::cos(a));
            };
            auto daxis = [](int m, int t, double ang) {
                if (m == 0) return 0.0;
                double a = m * ang;
                return kSqrt2 * m * (t ? std::cos(a) : -std::sin(a));
            };
            double g1 = daxis(e.i1, e.i3 & 1, p.a) * axis(e.i2, (e.i3 >> 1) & 1, p.b);
            double g2 = axis(e.i1, e.i3 & 1, p.a) * daxis(e.i2, (e.i3 >> 1) & 1, p.b);
            return std::sqrt(g1 * g1 + g2 * g2);
        }
        case ManifoldKind::Sphere2: {
            const double h = 1e-5;
            std::array<double, 3> u = sphere_to_vec(p);
            double ct = std::cos(p.a), st = std::sin(p.a);
            double cl = std::cos(p.b), sl = std::sin(p.b);
            std::array<double, 3> t1 = {ct * cl, ct * sl, -st};
            std::array<double, 3> t2 = {-sl, cl, 0.0};
            auto step = [&](const std::array<double, 3>& t, double s) {
                std::array<double, 3> v;
                double c = std::cos(s), sn = std::sin(s);
                for (int i = 0; i < 3; ++i) v[i] = c * u[i] + sn * t[i];
                return eval(k, vec_to_sphere(v));
            };
            double g1 = (step(t1, h) - step(t1, -h)) / (2.0 * h);
            double g2 = (step(t2, h) - step(t2, -h)) / (2.0 * h);
            return std::sqrt(g1 * g1 + g2 * g2);
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Reference quadrature

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
            double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

namespace {

// Exactness audit: pairs from Pi_E must integrate to delta_jk. Full check up
// to dim 400, deterministic 200-column subset beyond that.
void check_exactness(const ReferenceQuadrature& rule, double E) {
    SpectralBasis basis = SpectralBasis::build(rule.manifold, E);
    std::size_t n = basis.dim();
    std::vector<std::size_t> cols;
    if (n <= 400) {
        cols.resize(n);
        for (std::size_t j = 0; j < n; ++j) cols[j] = j;
    } else {
        Rng rng(0x5eedu);
        cols.push_back(0);
        cols.push_back(n - 1);
        while (cols.size() < 200)
            cols.push_back(static_cast<std::size_t>(rng.uniform() * (n - 1)));
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    }
    std::vector<std::vector<double>> vals(rule.nodes.size(), std::vector<double>(cols.size()));
    std::vector<double> tmp;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        basis.eval_all(rule.nodes[i], tmp);
        for (std::size_t c = 0; c < cols.size(); ++c) vals[i][c] = tmp[cols[c]];
    }
    for (std::size_t a = 0; a < cols.size(); ++a) {
        for (std::size_t b = a; b < cols.size(); ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                s += rule.weights[i] * vals[i][a] * vals[i][b];
            double want = (cols[a] == cols[b]) ? 1.0 : 0.0;
            if (std::abs(s - want) > 1e-11)
                throw std::logic_error("reference_quadrature: exactness audit failed");
        }
    }
}

}  // namespace

ReferenceQuadrature reference_quadrature(const ManifoldModel& m, double L) {
    if (L < 1.0) throw std::invalid_argument("reference_quadrature: level must be >= 1");
    ReferenceQuadrature rule;
    rule.manifold = m;
    int Lc = static_cast<int>(std::ceil(L - 1e-12));
    double E = 2.0 * Lc + 2.0;
    switch (m.kind) {
        case ManifoldKind::Circle: {
            std::size_t n = static_cast<std::size_t>(4 * Lc + 5);
            rule.nodes = grid_circle(n);
            rule.weights.assign(n, 1.0 / static_cast<double>(n));
            rule.exact_degree = std::floor((static_cast<double>(n) - 1.0) / 2.0);
            break;
        }
        case ManifoldKind::Sphere2: {
            int deg = static_cast<int>(E);
            int ngl = deg + 2;
            int nlon = 2 * deg + 4;
            std::vector<double> gx, gw;
            gauss_legendre(ngl, gx, gw);
            for (int i = 0; i < ngl; ++i) {
                double colat = std::acos(std::clamp(gx[i], -1.0, 1.0));
                for (int j = 0; j < nlon; ++j) {
                    Point p;
                    p.a = colat;
                    p.b = kTwoPi * j / nlon;
                    rule.nodes.push_back(canonical(m.kind, p));
                    rule.weights.push_back(0.5 * gw[i] / nlon);
                }
            }
            rule.exact_degree = E;
            break;
        }
        case ManifoldKind::Torus2: {
            std::size_t n = static_cast<std::size_t>(4 * Lc + 5);
            rule.nodes = grid_torus(n);
            rule.weights.assign(n * n, 1.0 / static_cast<double>(n * n));
            rule.exact_degree = std::floor((static_cast<double>(n) - 1.0) / 2.0);
            break;
        }
    }
    double wsum = 0.0;
    for (double w : rule.weights) {
        if (w < 0.0) throw std::logic_error("reference_quadrature: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::logic_error("reference_quadrature: weights do not sum to 1");
    check_exactness(rule, std::min(rule.exact_degree, E));
    return rule;
}

}  // namespace mz
