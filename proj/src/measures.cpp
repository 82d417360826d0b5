#include "mz/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mz {

namespace {

constexpr double kSupportThreshold = 1e-12;

std::uint64_t hash_doubles(std::uint64_t h, const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &data[i], sizeof bits);
        h ^= bits;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

SignedMeasure SignedMeasure::zero(const ManifoldModel& m) {
    SignedMeasure nu;
    nu.m_ = m;
    nu.kind_ = MeasureKind::Zero;
    nu.finalize({}, {}, 0.1);
    return nu;
}

SignedMeasure SignedMeasure::atomic(const ManifoldModel& m, std::vector<Point> atoms,
                                    std::vector<double> weights, std::string descriptor) {
    if (atoms.size() != weights.size())
        throw std::invalid_argument("SignedMeasure::atomic: atom/weight size mismatch");
    SignedMeasure nu;
    nu.m_ = m;
    nu.kind_ = MeasureKind::Atomic;
    nu.descriptor_ = std::move(descriptor);
    std::vector<Point> pts;
    pts.reserve(atoms.size());
    for (Point& p : atoms) pts.push_back(canonical(m.kind, p));
    nu.w_ = std::move(weights);
    std::vector<Point> support;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (nu.w_[i] != 0.0) support.push_back(pts[i]);
    // bucket size: aim for O(1) points per bucket on quasi-uniform atom sets
    double n_eff = std::pow(static_cast<double>(pts.size()) + 1.0, 1.0 / m.alpha);
    double cell = std::max(1e-5, (m.kind == ManifoldKind::Circle ? kTwoPi : m.diameter) /
                                     std::max(4.0, n_eff));
    nu.finalize(std::move(pts), std::move(support), cell);
    return nu;
}

SignedMeasure SignedMeasure::density(const ManifoldModel& m,
                                     std::shared_ptr<const ReferenceQuadrature> rule,
                                     std::vector<double> values, std::string descriptor) {
    if (!rule || rule->nodes.size() != values.size())
        throw std::invalid_argument("SignedMeasure::density: values/rule mismatch");
    SignedMeasure nu;
    nu.m_ = m;
    nu.kind_ = MeasureKind::Density;
    nu.descriptor_ = std::move(descriptor);
    nu.rule_ = rule;
    std::vector<Point> pts = rule->nodes;
    nu.w_.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) nu.w_[i] = rule->weights[i] * values[i];
    std::vector<Point> support;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (std::abs(values[i]) > kSupportThreshold) support.push_back(pts[i]);
    double n_eff = std::pow(static_cast<double>(pts.size()), 1.0 / m.alpha);
    nu.node_resolution_ = (m.kind == ManifoldKind::Circle ? kTwoPi : 2.0 * m.diameter) /
                          std::max(2.0, n_eff);
    nu.finalize(std::move(pts), std::move(support), std::max(nu.node_resolution_, 1e-5));
    return nu;
}

SignedMeasure SignedMeasure::ball_average(const ManifoldModel& m,
                                          std::shared_ptr<const ReferenceQuadrature> rule,
                                          const std::vector<Point>& centers,
                                          const std::vector<double>& radii,
                                          const std::vector<double>& weights,
                                          std::string descriptor) {
    if (centers.size() != radii.size() || centers.size() != weights.size())
        throw std::invalid_argument("SignedMeasure::ball_average: size mismatch");
    std::vector<double> values(rule->nodes.size(), 0.0);
    NeighborGrid node_grid(m, rule->nodes, std::max(1e-4, m.diameter / 256.0));
    std::vector<std::size_t> hit;
    for (std::size_t y = 0; y < centers.size(); ++y) {
        node_grid.query(canonical(m.kind, centers[y]), radii[y], hit);
        for (std::size_t i : hit) values[i] += weights[y];
    }
    SignedMeasure nu = density(m, rule, std::move(values), std::move(descriptor));
    nu.kind_ = MeasureKind::BallAverage;
    return nu;
}

SignedMeasure SignedMeasure::volume(const ManifoldModel& m, double level) {
    auto rule = std::make_shared<ReferenceQuadrature>(reference_quadrature(m, level));
    std::vector<double> ones(rule->nodes.size(), 1.0);
    return density(m, rule, std::move(ones), "mu");
}

void SignedMeasure::finalize(std::vector<Point> pts, std::vector<Point> support, double grid_cell) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double row[3] = {pts[i].a, pts[i].b, w_[i]};
        h = hash_doubles(h, row, 3);
    }
    fingerprint_ = h;
    pts_ = std::make_shared<const std::vector<Point>>(std::move(pts));
    support_ = std::make_shared<const std::vector<Point>>(std::move(support));
    grid_all_ = NeighborGrid(m_, pts_, grid_cell);
    grid_supp_ = NeighborGrid(m_, support_, grid_cell);
}

bool SignedMeasure::is_zero() const {
    for (double w : w_)
        if (w != 0.0) return false;
    return true;
}

double SignedMeasure::total_variation() const {
    double s = 0.0;
    for (double w : w_) s += std::abs(w);
    return s;
}

double SignedMeasure::ball_mass(const Point& x, double r) const {
    if (r < 0.0) throw std::invalid_argument("ball_mass: negative radius");
    if (w_.empty()) return 0.0;
    // closed ball; the absolute slack keeps algebraically-on-boundary atoms
    // inside regardless of rounding
    double s = 0.0;
    grid_all_.for_each_within(canonical(m_.kind, x), r + 1e-12 * (1.0 + r),
                              [&](std::size_t i, double) { s += std::abs(w_[i]); });
    return s;
}

double total_variation(const SignedMeasure& nu) { return nu.total_variation(); }

double ball_mass(const SignedMeasure& nu, const Point& x, double r) { return nu.ball_mass(x, r); }

double support_mesh_norm(const SignedMeasure& nu, const std::vector<Point>& probe) {
    if (nu.support().empty()) throw std::domain_error("support_mesh_norm: empty support");
    double worst = 0.0;
    for (const Point& p : probe) {
        auto [idx, dist] = nu.support_grid().nearest(canonical(nu.manifold().kind, p));
        (void)idx;
        worst = std::max(worst, dist);
    }
    return worst;
}

namespace {

RegularityCertificate probe_balls(const SignedMeasure& nu, double d, const std::vector<Point>& centers,
                                  const std::string& center_source) {
    if (d <= 0.0) throw std::invalid_argument("regularity probe: scale d must be positive");
    if (centers.empty()) throw std::invalid_argument("regularity probe: empty center grid");
    RegularityCertificate cert;
    cert.d = d;
    cert.n_centers = centers.size();
    cert.center_source = center_source;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const Point& c : centers) {
        double mass = nu.ball_mass(c, d);
        lo = std::min(lo, mass);
        hi = std::max(hi, mass);
    }
    double da = std::pow(d, nu.manifold().alpha);
    cert.min_ball_mass = lo;
    cert.max_ball_mass = hi;
    cert.r_norm = hi / da;
    if (lo <= 0.0) {
        cert.d_infinite = true;
        cert.d_norm = std::numeric_limits<double>::infinity();
    } else {
        cert.d_norm = da / lo;
    }
    return cert;
}

}  // namespace

RegularityCertificate regularity_norm(const SignedMeasure& nu, double d,
                                      const std::vector<Point>& centers,
                                      const std::string& center_source) {
    return probe_balls(nu, d, centers, center_source);
}

RegularityCertificate dominance_norm(const SignedMeasure& nu, double d,
                                     const std::vector<Point>& centers,
                                     const std::string& center_source) {
    return probe_balls(nu, d, centers, center_source);
}

}  // namespace mz
