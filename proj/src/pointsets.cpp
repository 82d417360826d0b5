#include "mz/pointsets.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "mz/util.hpp"

namespace mz {

namespace {

// covering-radius bound for the library's own deterministic grids
double grid_cover_bound(const ManifoldModel& m, std::size_t n) {
    switch (m.kind) {
        case ManifoldKind::Circle:
            return kTwoPi / static_cast<double>(std::max<std::size_t>(n, 2));
        case ManifoldKind::Sphere2:
            return 2.6 / std::sqrt(static_cast<double>(std::max<std::size_t>(n, 4)));
        case ManifoldKind::Torus2:
            return m.diameter /
                   std::floor(std::sqrt(static_cast<double>(std::max<std::size_t>(n, 4))));
    }
    return m.diameter;
}

}  // namespace

PointSet max_separated_subset(const PointSet& samples, double eps) {
    if (samples.pts.empty()) throw std::invalid_argument("max_separated_subset: empty input");
    if (eps <= 0.0) throw std::invalid_argument("max_separated_subset: eps must be positive");
    const ManifoldModel& m = samples.m;
    NeighborGrid grid(m, samples.pts, std::min(eps, m.diameter / 4.0));
    std::vector<char> selected(samples.pts.size(), 0);
    std::vector<std::size_t> hit;
    PointSet out{m, {}};
    for (std::size_t i = 0; i < samples.pts.size(); ++i) {
        grid.query(samples.pts[i], eps, hit);
        bool ok = true;
        for (std::size_t j : hit) {
            if (j >= i) break;
            if (selected[j] && geodesic_distance(m, samples.pts[i], samples.pts[j]) < eps) {
                ok = false;
                break;
            }
        }
        if (ok) {
            selected[i] = 1;
            out.pts.push_back(samples.pts[i]);
        }
    }
    return out;
}

double mesh_norm(const PointSet& C, const std::vector<Point>& K) {
    if (C.pts.empty()) throw std::invalid_argument("mesh_norm: empty point set");
    NeighborGrid grid(C.m, C.pts, C.m.diameter / std::max(4.0, std::sqrt(double(C.pts.size()))));
    double worst = 0.0;
    for (const Point& p : K) worst = std::max(worst, grid.nearest(canonical(C.m.kind, p)).second);
    return worst;
}

double min_separation(const PointSet& C) {
    if (C.pts.size() < 2) throw std::invalid_argument("min_separation: need at least two points");
    NeighborGrid grid(C.m, C.pts, C.m.diameter / std::max(4.0, std::sqrt(double(C.pts.size()))));
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> hit;
    for (std::size_t i = 0; i < C.pts.size(); ++i) {
        double r = C.m.diameter / std::sqrt(double(C.pts.size()));
        while (true) {
            grid.query(C.pts[i], std::min(r, C.m.diameter), hit);
            if (hit.size() >= 2 || r >= C.m.diameter) break;
            r *= 2.0;
        }
        for (std::size_t j : hit)
            if (j != i) best = std::min(best, geodesic_distance(C.m, C.pts[i], C.pts[j]));
    }
    return best;
}

double min_separation(const PointSet& C, const std::vector<Point>& grid) {
    double q = min_separation(C);
    double delta = mesh_norm(C, grid) + grid_cover_bound(C.m, grid.size());
    if (q / 2.0 > delta * (1.0 + 1e-9) + 1e-12)
        throw std::logic_error("min_separation: q(C)/2 <= delta(C) violated");
    return q;
}

int overlap_count(const PointSet& C, double radius, const std::vector<Point>& samples) {
    if (radius <= 0.0) throw std::invalid_argument("overlap_count: radius must be positive");
    NeighborGrid grid(C.m, C.pts, std::min(radius / 3.0, C.m.diameter / 4.0));
    std::vector<std::size_t> counts(samples.size());
    parallel_for(samples.size(), 0, [&](std::size_t i) {
        counts[i] = grid.count_within(canonical(C.m.kind, samples[i]), radius);
    });
    std::size_t worst = 0;
    for (std::size_t c : counts) worst = std::max(worst, c);
    return static_cast<int>(worst);
}

// ---------------------------------------------------------------------------
// CellComplex

struct CellComplex::Impl {
    ManifoldModel m;
    std::shared_ptr<const std::vector<Point>> base_pts;
    double base_radius = 0.0;
    NeighborGrid base_grid;
    std::vector<int> owner;        // base index -> active cell (or -1)
    std::vector<int> active_base;  // active cell -> base index
    double contain_radius = 0.0;
};

CellComplex CellComplex::base(const ManifoldModel& m, std::vector<Point> centers, double radius) {
    if (centers.empty()) throw std::invalid_argument("base_partition: no centers");
    if (radius <= 0.0) throw std::invalid_argument("base_partition: radius must be positive");
    auto impl = std::make_shared<Impl>();
    impl->m = m;
    for (Point& p : centers) p = canonical(m.kind, p);
    impl->base_pts = std::make_shared<const std::vector<Point>>(std::move(centers));
    impl->base_radius = radius;
    impl->base_grid = NeighborGrid(m, impl->base_pts, std::min(radius, m.diameter / 4.0));
    impl->owner.resize(impl->base_pts->size());
    impl->active_base.resize(impl->base_pts->size());
    for (std::size_t i = 0; i < impl->owner.size(); ++i) {
        impl->owner[i] = static_cast<int>(i);
        impl->active_base[i] = static_cast<int>(i);
    }
    impl->contain_radius = radius;
    CellComplex c;
    c.impl_ = std::move(impl);
    return c;
}

CellComplex CellComplex::from_parts(const ManifoldModel& m, std::vector<Point> base_centers,
                                    double base_radius, std::vector<int> owner,
                                    std::vector<int> active_base, double containment_radius) {
    CellComplex c = base(m, std::move(base_centers), base_radius);
    auto impl = std::make_shared<Impl>(*c.impl_);
    if (owner.size() != impl->base_pts->size())
        throw std::invalid_argument("CellComplex::from_parts: owner size mismatch");
    impl->owner = std::move(owner);
    impl->active_base = std::move(active_base);
    impl->contain_radius = containment_radius;
    c.impl_ = std::move(impl);
    return c;
}

std::size_t CellComplex::cell_count() const { return impl_->active_base.size(); }
std::size_t CellComplex::base_count() const { return impl_->base_pts->size(); }
const ManifoldModel& CellComplex::manifold() const { return impl_->m; }
double CellComplex::base_radius() const { return impl_->base_radius; }
double CellComplex::containment_radius() const { return impl_->contain_radius; }
const std::vector<int>& CellComplex::active_base() const { return impl_->active_base; }
const std::vector<int>& CellComplex::owner_map() const { return impl_->owner; }
const std::vector<Point>& CellComplex::base_points() const { return *impl_->base_pts; }

Point CellComplex::center(std::size_t cell) const {
    return (*impl_->base_pts)[static_cast<std::size_t>(impl_->active_base[cell])];
}

int CellComplex::base_owner(const Point& p) const {
    const Impl& im = *impl_;
    std::size_t lowest = im.base_pts->size();
    im.base_grid.for_each_within(canonical(im.m.kind, p), im.base_radius,
                                 [&](std::size_t k, double) { lowest = std::min(lowest, k); });
    return lowest == im.base_pts->size() ? -1 : static_cast<int>(lowest);
}

int CellComplex::cell_of(const Point& p) const {
    int b = base_owner(p);
    return b < 0 ? -1 : impl_->owner[static_cast<std::size_t>(b)];
}

void CellComplex::validate_cover(const std::vector<Point>& probe) const {
    for (const Point& p : probe)
        if (cell_of(p) < 0)
            throw std::domain_error("base_partition: probe point not covered (radius below mesh norm)");
}

// ---------------------------------------------------------------------------
// merge lemma

std::pair<CellComplex, MergeInfo> merge_partition(const CellComplex& Z, const SignedMeasure& tau,
                                                  double ball_radius) {
    const ManifoldModel& m = Z.manifold();
    if (ball_radius < Z.containment_radius() * (1.0 - 1e-12))
        throw std::invalid_argument("merge_partition: ball radius below containment radius");
    std::size_t n_cells = Z.cell_count();

    // tau mass per current cell
    const std::vector<Point>& tpts = tau.points();
    const std::vector<double>& tw = tau.masses();
    std::vector<int> atom_cell(tpts.size());
    parallel_for(tpts.size(), 0, [&](std::size_t i) { atom_cell[i] = Z.cell_of(tpts[i]); });
    std::vector<double> cell_mass(n_cells, 0.0);
    for (std::size_t i = 0; i < tpts.size(); ++i) {
        if (tw[i] == 0.0) continue;
        if (atom_cell[i] < 0) throw std::domain_error("merge_partition: tau mass outside the cover");
        cell_mass[static_cast<std::size_t>(atom_cell[i])] += std::abs(tw[i]);
    }

    // m = min ball mass over the active centers
    std::vector<double> ball(n_cells);
    parallel_for(n_cells, 0, [&](std::size_t k) { ball[k] = tau.ball_mass(Z.center(k), ball_radius); });
    double min_ball = *std::min_element(ball.begin(), ball.end());
    if (min_ball <= 0.0) throw std::domain_error("merge_partition: tau not dominant at scale");

    // keep threshold c = 1/overlap: cells intersecting B(z, R) have centers
    // within 2R, so the 2R count bounds how many cells share the ball mass.
    // If a dropped cell's best neighbor still falls below the threshold it is
    // promoted instead; the floor actually achieved is reported in the info.
    std::vector<Point> centers(n_cells);
    for (std::size_t k = 0; k < n_cells; ++k) centers[k] = Z.center(k);
    int overlap = overlap_count(PointSet{m, centers}, 2.0 * ball_radius, centers);
    double c = 1.0 / static_cast<double>(std::max(1, overlap));
    double threshold = c * min_ball;

    MergeInfo info;
    info.min_ball_mass = min_ball;
    info.threshold = c;
    info.overlap = overlap;
    info.ball_radius = ball_radius;
    info.phi.assign(n_cells, -1);

    std::vector<char> kept(n_cells, 0);
    for (std::size_t k = 0; k < n_cells; ++k)
        if (cell_mass[k] >= threshold * (1.0 - 1e-12)) kept[k] = 1;

    // dropped centers hand their cell to the neighbor grabbing the largest
    // share of tau(B(z, R)); lowest cell index wins ties
    NeighborGrid tau_grid_local(m, tpts, std::min(ball_radius / 3.0, m.diameter / 4.0));
    std::vector<double> share(n_cells, 0.0);
    std::vector<std::size_t> hit;
    for (std::size_t k = 0; k < n_cells; ++k) {
        if (kept[k]) {
            info.phi[k] = static_cast<int>(k);
            continue;
        }
        tau_grid_local.query(Z.center(k), ball_radius, hit);
        std::vector<std::size_t> touched;
        for (std::size_t i : hit) {
            if (tw[i] == 0.0) continue;
            auto cell = static_cast<std::size_t>(atom_cell[i]);
            if (share[cell] == 0.0) touched.push_back(cell);
            share[cell] += std::abs(tw[i]);
        }
        std::sort(touched.begin(), touched.end());
        std::size_t best = n_cells;
        double best_mass = 0.0;
        for (std::size_t cell : touched) {
            if (share[cell] > best_mass) {
                best_mass = share[cell];
                best = cell;
            }
            share[cell] = 0.0;
        }
        if (best == n_cells) throw std::logic_error("merge_partition: empty ball despite positive mass");
        kept[best] = 1;
        info.phi[k] = static_cast<int>(best);
    }
    // promotions may happen out of scan order; re-point any cell that merged
    // into a center which itself stayed dropped (cannot happen: targets are
    // promoted on the spot), and let promoted cells map to themselves
    for (std::size_t k = 0; k < n_cells; ++k)
        if (kept[k]) info.phi[k] = static_cast<int>(k);

    // compose the new complex
    std::vector<int> new_slot(n_cells, -1);
    std::vector<int> new_active;
    for (std::size_t k = 0; k < n_cells; ++k) {
        if (kept[k]) {
            new_slot[k] = static_cast<int>(new_active.size());
            new_active.push_back(Z.active_base()[k]);
        }
    }
    for (std::size_t k = 0; k < n_cells; ++k)
        if (kept[k]) info.kept.push_back(static_cast<int>(k));

    std::vector<int> new_owner(Z.owner_map().size(), -1);
    const std::vector<int>& old_owner = Z.owner_map();
    for (std::size_t b = 0; b < new_owner.size(); ++b) {
        int oc = old_owner[b];
        if (oc < 0) continue;
        new_owner[b] = new_slot[static_cast<std::size_t>(info.phi[static_cast<std::size_t>(oc)])];
    }

    info.cell_mass_after.assign(new_active.size(), 0.0);
    for (std::size_t k = 0; k < n_cells; ++k) {
        int target = new_slot[static_cast<std::size_t>(info.phi[k])];
        info.cell_mass_after[static_cast<std::size_t>(target)] += cell_mass[k];
    }
    // realized floor (promotions can sit below c*m but stay positive)
    double floor_mass = std::numeric_limits<double>::infinity();
    for (double mass : info.cell_mass_after) floor_mass = std::min(floor_mass, mass);
    if (!(floor_mass > 0.0)) throw std::logic_error("merge_partition: post-merge cell without mass");
    info.threshold = floor_mass / min_ball;

    CellComplex merged = CellComplex::from_parts(
        m, Z.base_points(), Z.base_radius(), std::move(new_owner), std::move(new_active),
        2.0 * ball_radius + Z.containment_radius());
    return {std::move(merged), std::move(info)};
}

// ---------------------------------------------------------------------------
// exact circle cells

namespace {

// subtract [lo, hi] from each interval in `arcs` (all in unwrapped reals)
void subtract_interval(std::vector<std::pair<double, double>>& arcs, double lo, double hi) {
    std::vector<std::pair<double, double>> out;
    for (auto [a, b] : arcs) {
        if (hi <= a || lo >= b) {
            out.emplace_back(a, b);
            continue;
        }
        if (lo > a) out.emplace_back(a, std::min(lo, b));
        if (hi < b) out.emplace_back(std::max(hi, a), b);
    }
    arcs = std::move(out);
}

std::vector<ArcList> stage1_arcs(const CellComplex& cells) {
    const std::vector<Point>& base = cells.base_points();
    double r1 = cells.base_radius();
    NeighborGrid grid(cells.manifold(), base, std::min(2.0 * r1, kPi / 2.0));
    std::vector<ArcList> arcs(base.size());
    std::vector<std::size_t> hit;
    for (std::size_t k = 0; k < base.size(); ++k) {
        double y = base[k].a;
        std::vector<std::pair<double, double>> segs{{y - r1, y + r1}};
        grid.query(base[k], std::min(2.0 * r1, kPi), hit);
        for (std::size_t j : hit) {
            if (j >= k) break;
            double u = base[j].a;
            // try all wrapped representations of the earlier ball
            for (double shift : {-kTwoPi, 0.0, kTwoPi})
                subtract_interval(segs, u + shift - r1, u + shift + r1);
            if (segs.empty()) break;
        }
        arcs[k] = std::move(segs);
    }
    return arcs;
}

// wrap unwrapped segments into [0, 2pi)
ArcList wrap_arcs(const std::vector<std::pair<double, double>>& segs) {
    ArcList out;
    for (auto [a, b] : segs) {
        if (b <= a) continue;
        double shift = std::floor(a / kTwoPi) * kTwoPi;
        a -= shift;
        b -= shift;
        if (b <= kTwoPi) {
            out.emplace_back(a, b);
        } else {
            out.emplace_back(a, kTwoPi);
            out.emplace_back(0.0, b - kTwoPi);
        }
    }
    return out;
}

}  // namespace

std::vector<ArcList> circle_cell_arcs(const CellComplex& cells) {
    std::vector<ArcList> per_base = stage1_arcs(cells);
    std::vector<ArcList> out(cells.cell_count());
    const std::vector<int>& owner = cells.owner_map();
    for (std::size_t b = 0; b < per_base.size(); ++b) {
        int cell = owner[b];
        if (cell < 0) continue;
        ArcList wrapped = wrap_arcs(per_base[b]);
        auto& dst = out[static_cast<std::size_t>(cell)];
        dst.insert(dst.end(), wrapped.begin(), wrapped.end());
    }
    return out;
}

namespace {

double arc_length(const ArcList& arcs) {
    double s = 0.0;
    for (auto [a, b] : arcs) s += b - a;
    return s;
}

// mu(Z_b) for every stage-1 cell by stratified sampling of B(y_b, r1):
// a sample belongs to Z_b iff it misses every earlier ball, and only earlier
// centers within 2 r1 can interfere.  Membership tests run on raw embeddings
// (dot products on the sphere, wrapped offsets on the torus).
std::vector<double> stage1_cell_masses(const CellComplex& cells, double r1,
                                       std::size_t base_samples, unsigned threads) {
    const ManifoldModel& m = cells.manifold();
    const std::vector<Point>& base = cells.base_points();
    std::size_t n_base = base.size();
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    const double cos_g = std::cos(golden), sin_g = std::sin(golden);

    std::vector<std::array<double, 3>> uv;
    if (m.kind == ManifoldKind::Sphere2) {
        uv.resize(n_base);
        for (std::size_t i = 0; i < n_base; ++i) uv[i] = sphere_to_vec(base[i]);
    }
    NeighborGrid g1grid(m, base, std::min(r1, m.diameter / 4.0));
    std::vector<double> mass(n_base, 0.0);

    parallel_for(n_base, threads, [&](std::size_t b) {
        thread_local std::vector<std::size_t> hit;
        g1grid.query(base[b], 2.0 * r1, hit);
        thread_local std::vector<std::size_t> earlier;
        earlier.clear();
        for (std::size_t j : hit) {
            if (j >= b) break;
            earlier.push_back(j);
        }
        std::size_t n_loc = base_samples;
        for (int round = 0; round < 2; ++round) {
            std::size_t hits = 0;
            double w = 0.0;
            if (m.kind == ManifoldKind::Sphere2) {
                const std::array<double, 3>& c = uv[b];
                std::array<double, 3> e1 =
                    (std::abs(c[2]) < 0.9) ? std::array<double, 3>{-c[1], c[0], 0.0}
                                           : std::array<double, 3>{0.0, -c[2], c[1]};
                double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
                for (double& v : e1) v /= n1;
                std::array<double, 3> e2 = {c[1] * e1[2] - c[2] * e1[1],
                                            c[2] * e1[0] - c[0] * e1[2],
                                            c[0] * e1[1] - c[1] * e1[0]};
                double zmin = std::cos(r1);
                double cos_thresh = std::cos(r1);
                double ca = std::cos(0.5 * golden), sa = std::sin(0.5 * golden);
                for (std::size_t i = 0; i < n_loc; ++i) {
                    double z = 1.0 - (1.0 - zmin) * (static_cast<double>(i) + 0.5) /
                                         static_cast<double>(n_loc);
                    double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                    double vx = z * c[0] + rho * (ca * e1[0] + sa * e2[0]);
                    double vy = z * c[1] + rho * (ca * e1[1] + sa * e2[1]);
                    double vz = z * c[2] + rho * (ca * e1[2] + sa * e2[2]);
                    bool mine = true;
                    for (std::size_t j : earlier) {
                        const std::array<double, 3>& u = uv[j];
                        if (vx * u[0] + vy * u[1] + vz * u[2] >= cos_thresh) {
                            mine = false;
                            break;
                        }
                    }
                    if (mine) ++hits;
                    double ca2 = ca * cos_g - sa * sin_g;
                    sa = sa * cos_g + ca * sin_g;
                    ca = ca2;
                }
                w = 0.5 * (1.0 - zmin) / static_cast<double>(n_loc);
            } else {  // torus: flat disc
                double ca = std::cos(0.5 * golden), sa = std::sin(0.5 * golden);
                double r1sq = r1 * r1;
                for (std::size_t i = 0; i < n_loc; ++i) {
                    double rho = r1 * std::sqrt((static_cast<double>(i) + 0.5) /
                                                static_cast<double>(n_loc));
                    double pa = base[b].a + rho * ca;
                    double pb = base[b].b + rho * sa;
                    bool mine = true;
                    for (std::size_t j : earlier) {
                        double da = std::fmod(std::abs(pa - base[j].a), kTwoPi);
                        da = std::min(da, kTwoPi - da);
                        double db = std::fmod(std::abs(pb - base[j].b), kTwoPi);
                        db = std::min(db, kTwoPi - db);
                        if (da * da + db * db <= r1sq) {
                            mine = false;
                            break;
                        }
                    }
                    if (mine) ++hits;
                    double ca2 = ca * cos_g - sa * sin_g;
                    sa = sa * cos_g + ca * sin_g;
                    ca = ca2;
                }
                w = (r1 * r1 / (4.0 * kPi)) / static_cast<double>(n_loc);
            }
            mass[b] = w * static_cast<double>(hits);
            if (hits >= 64 || round == 1) break;
            n_loc *= 8;  // sliver cell: resolve it properly
        }
    });
    return mass;
}

SignedMeasure volume_proxy(const ManifoldModel& m, double d, std::size_t requested) {
    std::size_t n = requested;
    if (n == 0) {
        switch (m.kind) {
            case ManifoldKind::Circle:
                n = static_cast<std::size_t>(std::ceil(16.0 * kPi / d));
                break;
            case ManifoldKind::Sphere2:
                n = static_cast<std::size_t>(std::ceil((19.2 / d) * (19.2 / d)));
                break;
            case ManifoldKind::Torus2: {
                std::size_t per_axis = static_cast<std::size_t>(std::ceil(16.0 * kPi / d));
                n = per_axis * per_axis;
                break;
            }
        }
        n = std::min<std::size_t>(n, 6'000'000);
    }
    std::vector<Point> pts = default_grid(m, n);
    std::vector<double> w(pts.size(), 1.0 / static_cast<double>(pts.size()));
    return SignedMeasure::atomic(m, std::move(pts), std::move(w), "mu-proxy");
}

}  // namespace

// ---------------------------------------------------------------------------
// the full pipeline

namespace {

struct StageTrace {
    bool on = std::getenv("MZLAB_TRACE") != nullptr;
    std::chrono::steady_clock::time_point last = std::chrono::steady_clock::now();
    void mark(const char* what) {
        if (!on) return;
        auto now = std::chrono::steady_clock::now();
        std::fprintf(stderr, "[mz-trace] %-24s %.2fs\n", what,
                     std::chrono::duration<double>(now - last).count());
        last = now;
    }
};

}  // namespace

Partition build_mz_partition(const SignedMeasure& nu, double d, const std::vector<Point>& grid,
                             const PartitionOptions& opts) {
    const ManifoldModel& m = nu.manifold();
    if (nu.is_zero()) throw std::invalid_argument("build_mz_partition: zero measure");
    if (d <= 0.0) throw std::invalid_argument("build_mz_partition: d must be positive");
    if (d > 1.0 / 81.0) {
        if (!opts.relax_d)
            throw std::invalid_argument("build_mz_partition: d out of range (d > 1/81); use relax_d");
        std::cerr << "[mz] warning: partition scale d=" << d << " exceeds 1/81 (relaxed)\n";
    }
    StageTrace trace;
    double delta_supp = support_mesh_norm(nu, grid);
    if (delta_supp >= d)
        throw std::domain_error("build_mz_partition: support too sparse (delta(supp nu) >= d)");
    trace.mark("support mesh norm");

    Partition part;
    part.m = m;
    part.d = d;
    part.nu_fingerprint = nu.fingerprint();

    PointSet g1 = max_separated_subset(PointSet{m, nu.support()}, d / 2.0);
    part.g1_size = g1.pts.size();
    trace.mark("G1 selection");

    SignedMeasure mu_proxy = volume_proxy(m, d, opts.mu_proxy_nodes);
    trace.mark("volume proxy");

    // stage-1 radius: the true mesh norm of G1 is below 3d/2 by construction;
    // the value measured against the fine proxy grid is usually much tighter
    // and keeps stage-1 cells close to first-come Voronoi cells
    double delta1 = mesh_norm(g1, mu_proxy.points()) +
                    2.0 * grid_cover_bound(m, mu_proxy.points().size());
    double r1 = std::min(1.5 * d, delta1);
    CellComplex stage1 = CellComplex::base(m, g1.pts, r1);
    stage1.validate_cover(grid);
    trace.mark("stage-1 cells");

    auto [stage2, info2] = merge_partition(stage1, mu_proxy, r1);
    part.g2_size = stage2.cell_count();
    part.stage_radius[0] = r1;
    trace.mark("merge mu");
    auto [stage3, info3] = merge_partition(stage2, nu, 3.0 * r1);
    part.g3_size = stage3.cell_count();
    part.stage_radius[1] = 3.0 * r1;
    trace.mark("merge nu");

    std::vector<Point> g3_pts(stage3.cell_count());
    for (std::size_t k = 0; k < stage3.cell_count(); ++k) g3_pts[k] = stage3.center(k);
    SignedMeasure unit_atoms = SignedMeasure::atomic(
        m, g3_pts, std::vector<double>(g3_pts.size(), 1.0), "g3-atoms");
    auto [stage4, info4] = merge_partition(stage3, unit_atoms, 9.0 * r1);
    part.g4_size = stage4.cell_count();
    part.stage_radius[2] = 9.0 * r1;
    part.cells = stage4;
    trace.mark("merge atoms");

    // one G3 element per final cell becomes x_k (lowest base index)
    std::size_t n_cells = stage4.cell_count();
    part.final_center_base.assign(n_cells, -1);
    for (std::size_t i = 0; i < g3_pts.size(); ++i) {
        int cell = stage4.cell_of(g3_pts[i]);
        if (cell < 0) throw std::logic_error("build_mz_partition: G3 point not covered");
        int base_idx = stage3.active_base()[i];
        int& cur = part.final_center_base[static_cast<std::size_t>(cell)];
        if (cur < 0 || base_idx < cur) cur = base_idx;
    }
    part.final_centers.resize(n_cells);
    for (std::size_t k = 0; k < n_cells; ++k) {
        if (part.final_center_base[k] < 0)
            throw std::logic_error("build_mz_partition: cell without a G3 representative");
        part.final_centers[k] = stage4.base_points()[static_cast<std::size_t>(part.final_center_base[k])];
    }

    trace.mark("final centers");
    // per-cell masses
    if (m.kind == ManifoldKind::Circle) {
        part.circle_arcs = circle_cell_arcs(stage4);
        part.mu_mass.resize(n_cells);
        for (std::size_t k = 0; k < n_cells; ++k)
            part.mu_mass[k] = arc_length(part.circle_arcs[k]) / kTwoPi;
    } else {
        std::vector<double> base_mass =
            stage1_cell_masses(stage4, r1, opts.stat_samples, opts.threads);
        part.mu_mass.assign(n_cells, 0.0);
        const std::vector<int>& owner = stage4.owner_map();
        for (std::size_t b = 0; b < base_mass.size(); ++b)
            if (owner[b] >= 0) part.mu_mass[static_cast<std::size_t>(owner[b])] += base_mass[b];
    }

    trace.mark("mu stats");

    // |nu| masses per cell
    part.nu_mass.assign(n_cells, 0.0);
    {
        const std::vector<Point>& npts = nu.points();
        const std::vector<double>& nw = nu.masses();
        std::vector<int> ncell(npts.size());
        parallel_for(npts.size(), opts.threads,
                     [&](std::size_t i) { ncell[i] = stage4.cell_of(npts[i]); });
        for (std::size_t i = 0; i < npts.size(); ++i) {
            if (nw[i] == 0.0) continue;
            if (ncell[i] < 0) throw std::logic_error("build_mz_partition: nu mass outside cover");
            part.nu_mass[static_cast<std::size_t>(ncell[i])] += std::abs(nw[i]);
        }
    }

    double da = std::pow(d, m.alpha);
    part.band_lo = std::numeric_limits<double>::infinity();
    part.band_hi = 0.0;
    for (std::size_t k = 0; k < n_cells; ++k) {
        part.band_lo = std::min(part.band_lo, part.mu_mass[k] / da);
        part.band_hi = std::max(part.band_hi, part.mu_mass[k] / da);
        if (!(part.nu_mass[k] > 0.0))
            throw std::logic_error("build_mz_partition: cell with zero |nu| mass");
    }
    if (!(part.band_lo > 0.0)) throw std::logic_error("build_mz_partition: cell with zero mu mass");

    trace.mark("nu stats");

    {
        std::vector<double> quarter(g3_pts.size());
        parallel_for(g3_pts.size(), opts.threads,
                     [&](std::size_t i) { quarter[i] = nu.ball_mass(g3_pts[i], d / 4.0); });
        part.min_nu_quarter_ball = *std::min_element(quarter.begin(), quarter.end());
    }
    double min_cell_nu = *std::min_element(part.nu_mass.begin(), part.nu_mass.end());
    part.nu_floor_constant = min_cell_nu / part.min_nu_quarter_ball;
    trace.mark("quarter balls");

    // structural audits
    for (std::size_t k = 0; k < n_cells; ++k)
        if (part.cell_of(part.final_centers[k]) != static_cast<int>(k))
            throw std::logic_error("build_mz_partition: x_k not inside its own cell");
    PointSet finals{m, part.final_centers};
    if (finals.pts.size() >= 2) {
        double q = min_separation(finals);
        double delta = mesh_norm(finals, grid) + grid_cover_bound(m, grid.size());
        if (delta > 81.0 * d * (1.0 + 1e-9))
            throw std::logic_error("build_mz_partition: mesh norm of centers exceeds 81 d");
        if (q / 2.0 > delta * (1.0 + 1e-9))
            throw std::logic_error("build_mz_partition: q(C)/2 <= delta(C) violated");
        if (81.0 * d > 162.0 * q * (1.0 + 1e-9))
            throw std::logic_error("build_mz_partition: 81 d <= 162 q(C) violated");
    }
    return part;
}

Partition trivial_partition(const SignedMeasure& atoms, const std::vector<Point>& grid) {
    const ManifoldModel& m = atoms.manifold();
    if (atoms.kind() != MeasureKind::Atomic)
        throw std::invalid_argument("trivial_partition: atomic measure required");
    PointSet C{m, atoms.support()};
    if (C.pts.size() < 2) throw std::invalid_argument("trivial_partition: need at least two atoms");
    double q = min_separation(C);
    double delta = mesh_norm(C, grid) + grid_cover_bound(m, grid.size());
    double radius = delta;
    if (!(radius < q))
        throw std::domain_error("trivial_partition: atoms not separated enough for one-atom cells");
    Partition part;
    part.m = m;
    part.d = delta;
    part.nu_fingerprint = atoms.fingerprint();
    part.cells = CellComplex::base(m, C.pts, radius);
    part.cells.validate_cover(grid);
    part.g1_size = part.g2_size = part.g3_size = part.g4_size = C.pts.size();
    part.final_centers = C.pts;
    part.final_center_base.resize(C.pts.size());
    for (std::size_t k = 0; k < C.pts.size(); ++k) part.final_center_base[k] = static_cast<int>(k);

    std::size_t n_cells = C.pts.size();
    if (m.kind == ManifoldKind::Circle) {
        part.circle_arcs = circle_cell_arcs(part.cells);
        part.mu_mass.resize(n_cells);
        for (std::size_t k = 0; k < n_cells; ++k)
            part.mu_mass[k] = arc_length(part.circle_arcs[k]) / kTwoPi;
    } else {
        SignedMeasure proxy = volume_proxy(m, std::max(delta, 1e-3), 0);
        part.mu_mass.assign(n_cells, 0.0);
        const std::vector<Point>& ppts = proxy.points();
        const std::vector<double>& pw = proxy.masses();
        for (std::size_t i = 0; i < ppts.size(); ++i) {
            int c = part.cells.cell_of(ppts[i]);
            if (c >= 0) part.mu_mass[static_cast<std::size_t>(c)] += pw[i];
        }
    }
    part.nu_mass.assign(n_cells, 0.0);
    const std::vector<Point>& npts = atoms.points();
    const std::vector<double>& nw = atoms.masses();
    for (std::size_t i = 0; i < npts.size(); ++i) {
        if (nw[i] == 0.0) continue;
        int c = part.cells.cell_of(npts[i]);
        if (c < 0) throw std::logic_error("trivial_partition: atom outside cover");
        part.nu_mass[static_cast<std::size_t>(c)] += std::abs(nw[i]);
    }
    double da = std::pow(part.d, m.alpha);
    part.band_lo = std::numeric_limits<double>::infinity();
    part.band_hi = 0.0;
    for (std::size_t k = 0; k < n_cells; ++k) {
        part.band_lo = std::min(part.band_lo, part.mu_mass[k] / da);
        part.band_hi = std::max(part.band_hi, part.mu_mass[k] / da);
        if (part.cell_of(part.final_centers[k]) != static_cast<int>(k))
            throw std::logic_error("trivial_partition: atom not in its own cell");
    }
    part.min_nu_quarter_ball = *std::min_element(part.nu_mass.begin(), part.nu_mass.end());
    part.nu_floor_constant = 1.0;
    return part;
}

}  // namespace mz
