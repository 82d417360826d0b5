#include "mz/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "mz/kernels.hpp"
#include "mz/util.hpp"

namespace mz {

double QuadratureRule::apply(std::size_t k, const DiffusionPolynomial& P) const {
    double s = 0.0;
    for (const auto& [pt, frac] : functionals[k]) s += frac * P.eval(pt);
    return s;
}

SignedMeasure QuadratureRule::as_measure() const {
    std::vector<Point> pts;
    std::vector<double> w;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        for (const auto& [pt, frac] : functionals[k]) {
            pts.push_back(pt);
            w.push_back(weights[k] * frac);
        }
    }
    return SignedMeasure::atomic(manifold, std::move(pts), std::move(w), "quadrature-rule");
}

MomentVector moments(const SpectralBasis& basis, double L) {
    std::size_t dim = basis.dim_at(L);
    MomentVector mv;
    mv.values.assign(dim, 0.0);
    mv.values[0] = 1.0;
    // cross-check against the reference rule
    ReferenceQuadrature rule = reference_quadrature(basis.manifold(), L);
    std::vector<double> vals;
    std::vector<double> got(dim, 0.0);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        basis.eval_all(rule.nodes[i], vals);
        for (std::size_t j = 0; j < dim; ++j) got[j] += rule.weights[i] * vals[j];
    }
    for (std::size_t j = 0; j < dim; ++j)
        if (std::abs(got[j] - mv.values[j]) > 1e-12)
            throw std::logic_error("moments: reference-rule cross-check failed");
    return mv;
}

// ---------------------------------------------------------------------------
// dense two-phase simplex, Bland's rule

namespace {

constexpr double kPivTol = 1e-11;

struct Tableau {
    std::size_t m, n;  // constraints, variables (incl. artificials)
    std::vector<std::vector<double>> T;  // m rows of n+1 (last = rhs)
    std::vector<double> cost;            // current objective coefficients
    std::vector<std::size_t> basis;      // basic variable per row

    double reduced_cost(std::size_t j, const std::vector<double>& y) const {
        double s = cost[j];
        for (std::size_t i = 0; i < m; ++i) s -= y[i] * T[i][j];
        return s;
    }
};

// price vector y solves y = c_B applied through the (implicitly updated)
// tableau: with explicit row operations the reduced costs live in an extra
// objective row instead; we carry that row directly.
class Simplex {
  public:
    Simplex(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
            const std::vector<double>& c)
        : m_(b.size()), n_(c.size()) {
        rows_.assign(m_, std::vector<double>(n_ + m_ + 1, 0.0));
        for (std::size_t i = 0; i < m_; ++i) {
            double flip = (b[i] < 0.0) ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n_; ++j) rows_[i][j] = flip * A[i][j];
            rows_[i][n_ + i] = 1.0;  // artificial
            rows_[i].back() = flip * b[i];
        }
        basis_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i;
        orig_cost_ = c;
    }

    SimplexResult run() {
        SimplexResult out;
        // phase 1: minimize the artificial sum
        std::vector<double> cost1(n_ + m_, 0.0);
        for (std::size_t j = n_; j < n_ + m_; ++j) cost1[j] = 1.0;
        build_objective(cost1);
        iterate(n_ + m_);
        if (obj_value() > 1e-9 * (1.0 + rhs_scale())) {
            out.status = SimplexResult::Status::Infeasible;
            out.farkas = farkas_certificate();
            return out;
        }
        pivot_out_artificials();

        // phase 2 on the original columns only
        std::vector<double> cost2(n_ + m_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) cost2[j] = orig_cost_[j];
        build_objective(cost2);
        bool bounded = iterate(n_);
        if (!bounded) {
            out.status = SimplexResult::Status::Unbounded;
            return out;
        }
        out.status = SimplexResult::Status::Optimal;
        out.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) out.x[basis_[i]] = rows_[i].back();
        out.objective = 0.0;
        for (std::size_t j = 0; j < n_; ++j) out.objective += orig_cost_[j] * out.x[j];
        return out;
    }

  private:
    double rhs_scale() const {
        double s = 0.0;
        for (std::size_t i = 0; i < m_; ++i) s = std::max(s, std::abs(rows_[i].back()));
        return s;
    }

    void build_objective(const std::vector<double>& cost) {
        cost_row_.assign(n_ + m_ + 1, 0.0);
        for (std::size_t j = 0; j < n_ + m_; ++j) cost_row_[j] = cost[j];
        // subtract basic rows to zero out basic columns
        for (std::size_t i = 0; i < m_; ++i) {
            double cb = cost[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= n_ + m_; ++j) cost_row_[j] -= cb * rows_[i][j];
        }
        cost_ = cost;
    }

    double obj_value() const { return -cost_row_.back(); }

    // Bland: entering = lowest-index column with negative reduced cost
    bool iterate(std::size_t col_limit) {
        for (int guard = 0; guard < 200000; ++guard) {
            std::size_t enter = col_limit;
            for (std::size_t j = 0; j < col_limit; ++j) {
                if (cost_row_[j] < -kPivTol) {
                    enter = j;
                    break;
                }
            }
            if (enter == col_limit) return true;  // optimal
            // ratio test, ties to the lowest basic variable index
            std::size_t leave = m_;
            double best = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                double a = rows_[i][enter];
                if (a > kPivTol) {
                    double ratio = rows_[i].back() / a;
                    if (leave == m_ || ratio < best - 1e-15 ||
                        (ratio <= best + 1e-15 && basis_[i] < basis_[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == m_) return false;  // unbounded
            pivot(leave, enter);
        }
        throw std::logic_error("simplex: iteration guard tripped");
    }

    void pivot(std::size_t r, std::size_t c) {
        double piv = rows_[r][c];
        for (double& v : rows_[r]) v /= piv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double f = rows_[i][c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_ + m_; ++j) rows_[i][j] -= f * rows_[r][j];
        }
        double f = cost_row_[c];
        if (f != 0.0)
            for (std::size_t j = 0; j <= n_ + m_; ++j) cost_row_[j] -= f * rows_[r][j];
        basis_[r] = c;
    }

    void pivot_out_artificials() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            // basic artificial at level ~0; swap in any original column
            std::size_t c = n_;
            for (std::size_t j = 0; j < n_; ++j) {
                if (std::abs(rows_[i][j]) > kPivTol) {
                    c = j;
                    break;
                }
            }
            if (c < n_) pivot(i, c);
            // else: redundant row, harmless to keep
        }
    }

    std::vector<double> farkas_certificate() const {
        // rebuild y from B^T y = c_B on the phase-1 costs
        Eigen::MatrixXd B(m_, m_);
        Eigen::VectorXd cb(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            cb(i) = (basis_[i] >= n_) ? 1.0 : 0.0;
            for (std::size_t r = 0; r < m_; ++r) B(r, i) = column0_(r, basis_[i]);
        }
        Eigen::VectorXd y = B.transpose().fullPivLu().solve(cb);
        std::vector<double> out(m_);
        for (std::size_t i = 0; i < m_; ++i) out[i] = y(i) * flip0_[i];
        return out;
    }

  public:
    // snapshot of the initial (sign-flipped) columns for certificate rebuilds
    void snapshot(const std::vector<std::vector<double>>& A, const std::vector<double>& b) {
        A0_ = A;
        flip0_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) flip0_[i] = (b[i] < 0.0) ? -1.0 : 1.0;
    }

  private:
    double column0_(std::size_t r, std::size_t j) const {
        if (j >= n_) return (j - n_ == r) ? 1.0 : 0.0;
        return flip0_[r] * A0_[r][j];
    }

    std::size_t m_, n_;
    std::vector<std::vector<double>> rows_;
    std::vector<double> cost_row_;
    std::vector<double> cost_;
    std::vector<double> orig_cost_;
    std::vector<std::size_t> basis_;
    std::vector<std::vector<double>> A0_;
    std::vector<double> flip0_;
};

}  // namespace

SimplexResult simplex_solve(const std::vector<std::vector<double>>& A,
                            const std::vector<double>& b, const std::vector<double>& c) {
    if (A.size() != b.size()) throw std::invalid_argument("simplex_solve: row mismatch");
    for (const auto& row : A)
        if (row.size() != c.size()) throw std::invalid_argument("simplex_solve: column mismatch");
    Simplex s(A, b, c);
    s.snapshot(A, b);
    return s.run();
}

std::vector<double> nnls_solve(const std::vector<std::vector<double>>& A,
                               const std::vector<double>& b, double tol, int max_iter) {
    std::size_t m = A.size(), n = A.empty() ? 0 : A[0].size();
    Eigen::MatrixXd M(m, n);
    Eigen::VectorXd rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
        rhs(i) = b[i];
        for (std::size_t j = 0; j < n; ++j) M(i, j) = A[i][j];
    }
    if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);

    std::vector<char> passive(n, 0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int outer = 0; outer < max_iter; ++outer) {
        Eigen::VectorXd wdual = M.transpose() * (rhs - M * x);
        std::size_t pick = n;
        double best = tol;
        for (std::size_t j = 0; j < n; ++j) {
            if (!passive[j] && wdual(j) > best) {
                best = wdual(j);
                pick = j;
            }
        }
        if (pick == n) break;
        passive[pick] = 1;
        for (int inner = 0; inner < max_iter; ++inner) {
            std::vector<std::size_t> act;
            for (std::size_t j = 0; j < n; ++j)
                if (passive[j]) act.push_back(j);
            Eigen::MatrixXd Mp(m, act.size());
            for (std::size_t c = 0; c < act.size(); ++c) Mp.col(c) = M.col(act[c]);
            Eigen::VectorXd z = Mp.colPivHouseholderQr().solve(rhs);
            bool all_pos = true;
            for (std::size_t c = 0; c < act.size(); ++c)
                if (z(c) <= 1e-14) all_pos = false;
            if (all_pos) {
                x.setZero();
                for (std::size_t c = 0; c < act.size(); ++c) x(act[c]) = z(c);
                break;
            }
            // step back to the boundary and drop the blocking variables
            double alpha = 1.0;
            for (std::size_t c = 0; c < act.size(); ++c) {
                if (z(c) <= 1e-14) {
                    double xi = x(act[c]);
                    double denom = xi - z(c);
                    if (denom > 0.0) alpha = std::min(alpha, xi / denom);
                }
            }
            for (std::size_t c = 0; c < act.size(); ++c) {
                double nx = x(act[c]) + alpha * (z(c) - x(act[c]));
                x(act[c]) = nx;
                if (nx <= 1e-14) {
                    x(act[c]) = 0.0;
                    passive[act[c]] = 0;
                }
            }
        }
    }
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = x(j);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

QuadratureSolve solve_core(const ManifoldModel& m,
                           std::vector<std::vector<std::pair<Point, double>>> fns,
                           const std::vector<double>& mu_masses,
                           std::shared_ptr<const SpectralBasis> basis, double L, SolveMode mode,
                           FunctionalKind kind) {
    std::size_t dim = basis->dim_at(L);
    std::size_t M = fns.size();

    // moment matrix A[j][k] = x_k*(phi_j)
    std::vector<std::vector<double>> A(dim, std::vector<double>(M, 0.0));
    {
        std::vector<double> vals;
        for (std::size_t k = 0; k < M; ++k) {
            for (const auto& [pt, frac] : fns[k]) {
                basis->eval_all(pt, vals);
                for (std::size_t j = 0; j < dim; ++j) A[j][k] += frac * vals[j];
            }
        }
    }
    MomentVector mom = moments(*basis, L);

    QuadratureSolve out;
    std::vector<double> W;
    double t_opt = 0.0;
    if (mode == SolveMode::LPMaximin) {
        // variables (V_1..V_M, t): W_k = V_k + t mu(Y_k)
        std::vector<std::vector<double>> lpA(dim, std::vector<double>(M + 1, 0.0));
        for (std::size_t j = 0; j < dim; ++j) {
            double g = 0.0;
            for (std::size_t k = 0; k < M; ++k) {
                lpA[j][k] = A[j][k];
                g += A[j][k] * mu_masses[k];
            }
            lpA[j][M] = g;
        }
        std::vector<double> c(M + 1, 0.0);
        c[M] = -1.0;  // maximize t
        SimplexResult res = simplex_solve(lpA, mom.values, c);
        if (res.status == SimplexResult::Status::Infeasible) {
            out.feasible = false;
            InfeasibilityCertificate cert;
            cert.direction = res.farkas;
            for (std::size_t j = 0; j < dim; ++j) cert.violation += res.farkas[j] * mom.values[j];
            out.certificate = cert;
            out.message = "LP infeasible (simplex certificate attached)";
            return out;
        }
        if (res.status == SimplexResult::Status::Unbounded) {
            out.feasible = false;
            out.message = "LP unbounded (degenerate moment system)";
            return out;
        }
        t_opt = res.x[M];
        W.resize(M);
        for (std::size_t k = 0; k < M; ++k) W[k] = res.x[k] + t_opt * mu_masses[k];
    } else {
        W = nnls_solve(A, mom.values);
    }

    // minimum-norm polish: the simplex arithmetic carries pivot roundoff that
    // the moment equalities should not inherit.  Delta = A^T (A A^T)^-1 r
    // moves each weight by the least amount, so positivity and the maximin
    // structure are preserved.
    {
        Eigen::MatrixXd Ae(dim, M);
        Eigen::VectorXd r(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < M; ++k) {
                Ae(j, k) = A[j][k];
                s += W[k] * A[j][k];
            }
            r(j) = mom.values[j] - s;
        }
        Eigen::VectorXd y = (Ae * Ae.transpose()).ldlt().solve(r);
        Eigen::VectorXd delta = Ae.transpose() * y;
        bool ok = true;
        for (std::size_t k = 0; k < M; ++k)
            if (W[k] + delta(static_cast<Eigen::Index>(k)) < -1e-10) ok = false;
        if (ok) {
            for (std::size_t k = 0; k < M; ++k)
                W[k] = std::max(0.0, W[k] + delta(static_cast<Eigen::Index>(k)));
        }
    }

    QuadratureRule rule;
    rule.manifold = m;
    rule.order = L;
    rule.kind = kind;
    rule.weights = std::move(W);
    rule.functionals = std::move(fns);
    rule.maximin_t = t_opt;
    double res = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < M; ++k) s += rule.weights[k] * A[j][k];
        res = std::max(res, std::abs(s - mom.values[j]));
    }
    rule.residual = res;
    double ratio = 1e300;
    for (std::size_t k = 0; k < M; ++k) ratio = std::min(ratio, rule.weights[k] / mu_masses[k]);
    rule.min_weight_ratio = ratio;

    if (mode == SolveMode::NNLS && res > 1e-8) {
        out.feasible = false;
        out.message = "NNLS residual above tolerance";
        out.rule = std::move(rule);  // returned for inspection
        return out;
    }
    out.feasible = true;
    out.rule = std::move(rule);
    return out;
}

}  // namespace

QuadratureSolve solve_positive_quadrature(const SignedMeasure& nu, const Partition& part,
                                          std::shared_ptr<const SpectralBasis> basis, double L,
                                          SolveMode mode, FunctionalKind kind) {
    if (nu.fingerprint() != part.nu_fingerprint)
        throw std::invalid_argument("solve_positive_quadrature: partition/measure mismatch");
    std::size_t M = part.size();
    if (L * part.d > 2.0)
        std::cerr << "[mz] warning: L*d = " << L * part.d
                  << " is far outside the quadrature-existence regime\n";

    std::vector<std::vector<std::pair<Point, double>>> fns(M);
    if (kind == FunctionalKind::PointEvaluation) {
        for (std::size_t k = 0; k < M; ++k) fns[k] = {{part.final_centers[k], 1.0}};
    } else {
        const std::vector<Point>& pts = nu.points();
        const std::vector<double>& w = nu.masses();
        std::vector<int> cell(pts.size());
        parallel_for(pts.size(), 0, [&](std::size_t i) { cell[i] = part.cell_of(pts[i]); });
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (w[i] == 0.0 || cell[i] < 0) continue;
            fns[static_cast<std::size_t>(cell[i])].emplace_back(
                pts[i], std::abs(w[i]) / part.nu_mass[static_cast<std::size_t>(cell[i])]);
        }
    }
    return solve_core(part.m, std::move(fns), part.mu_mass, std::move(basis), L, mode, kind);
}

QuadratureSolve solve_positive_quadrature(const SignedMeasure& nu,
                                          std::shared_ptr<const SpectralBasis> basis, double L,
                                          SolveMode mode) {
    // partition-free route: point evaluations at the support atoms, with the
    // flat reference 1/M as the maximin weight floor
    const std::vector<Point>& sup = nu.support();
    if (sup.empty()) throw std::invalid_argument("solve_positive_quadrature: empty support");
    std::vector<std::vector<std::pair<Point, double>>> fns(sup.size());
    for (std::size_t k = 0; k < sup.size(); ++k) fns[k] = {{sup[k], 1.0}};
    std::vector<double> flat(sup.size(), 1.0 / static_cast<double>(sup.size()));
    return solve_core(nu.manifold(), std::move(fns), flat, std::move(basis), L, mode,
                      FunctionalKind::PointEvaluation);
}

double quadrature_residual(const QuadratureRule& rule, const SpectralBasis& basis, double L_test) {
    std::size_t dim = basis.dim_at(L_test);
    std::vector<double> acc(dim, 0.0);
    std::vector<double> vals;
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
        for (const auto& [pt, frac] : rule.functionals[k]) {
            basis.eval_all(pt, vals);
            double wf = rule.weights[k] * frac;
            for (std::size_t j = 0; j < dim; ++j) acc[j] += wf * vals[j];
        }
    }
    double res = 0.0;
    for (std::size_t j = 0; j < dim; ++j)
        res = std::max(res, std::abs(acc[j] - (j == 0 ? 1.0 : 0.0)));
    return res;
}

QuadratureMZReport verify_quadrature_mz(const QuadratureRule& rule,
                                        std::shared_ptr<const SpectralBasis> basis, double L,
                                        double p, int trials, double Astar, std::uint64_t seed) {
    if (rule.order + 1e-9 < 2.0 * Astar * L)
        throw std::invalid_argument("verify_quadrature_mz: rule order below 2 Astar L");
    SignedMeasure tau = rule.as_measure();
    QuadratureMZReport rep;
    rep.mz = (p == 2.0) ? mz_constants_p2(tau, *basis, L)
                        : mz_ratio_bounds(tau, basis, L, p, trials, seed);

    // product error on Pi_{2L} pairs
    for (int t = 0; t < trials; ++t) {
        DiffusionPolynomial P1 = random_polynomial(basis, 2.0 * L, seed + 31 * t);
        DiffusionPolynomial P2 = random_polynomial(basis, 2.0 * L, seed + 577 * t + 3);
        double exact = 0.0;  // Parseval
        for (std::size_t k = 0; k < P1.coeff().size(); ++k) exact += P1.coeff()[k] * P2.coeff()[k];
        double discrete = tau.integrate([&](const Point& x) { return P1.eval(x) * P2.eval(x); });
        double n1 = 0.0, n2 = 0.0;
        for (double c : P1.coeff()) n1 += c * c;
        for (double c : P2.coeff()) n2 += c * c;
        rep.product_error =
            std::max(rep.product_error, std::abs(discrete - exact) / std::sqrt(n1 * n2));
    }

    // sigma reconstruction through the rule: L * ||sigma_2L(tau;P) - P||_inf
    ReferenceQuadrature ref = reference_quadrature(basis->manifold(), L);
    for (int t = 0; t < std::min(trials, 8); ++t) {
        DiffusionPolynomial P = random_polynomial(basis, L, seed + 701 * t);
        std::vector<double> fv(tau.atom_count());
        for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = P.eval(tau.points()[i]);
        DiffusionPolynomial S = sigma_discrete(basis, 2.0 * L, tau, fv);
        // sup of the difference on a dense grid
        double diff = 0.0;
        for (const Point& g :
             default_grid(basis->manifold(),
                          std::max<std::size_t>(4096, static_cast<std::size_t>(64.0 * L)))) {
            diff = std::max(diff, std::abs(S.eval(g) - P.eval(g)));
        }
        double denom = norm_p(P, ref, 2.0);
        if (denom > 0.0)
            rep.sigma_reconstruction = std::max(rep.sigma_reconstruction, L * diff / denom);
    }
    return rep;
}

}  // namespace mz
