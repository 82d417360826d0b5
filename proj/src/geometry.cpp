#include "mz/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mz {

std::string manifold_name(ManifoldKind kind) {
    switch (kind) {
        case ManifoldKind::Circle: return "circle";
        case ManifoldKind::Sphere2: return "sphere2";
        case ManifoldKind::Torus2: return "torus2";
    }
    return "?";
}

ManifoldKind manifold_from_name(const std::string& name) {
    if (name == "circle") return ManifoldKind::Circle;
    if (name == "sphere2") return ManifoldKind::Sphere2;
    if (name == "torus2") return ManifoldKind::Torus2;
    throw std::invalid_argument("unknown manifold: " + name);
}

ManifoldModel ManifoldModel::circle() {
    ManifoldModel m;
    m.kind = ManifoldKind::Circle;
    m.alpha = 1.0;
    m.diameter = kPi;
    // mu(B(x,r)) = r/pi for r <= pi, so kappa1 = 1/pi exactly.
    // kappa2..4 reproduce the `mzlab kernel` probe fits on the default cutoff.
    m.kappa = {1.0 / kPi, 0.57, 0.22, 0.28};
    return m;
}

ManifoldModel ManifoldModel::sphere2() {
    ManifoldModel m;
    m.kind = ManifoldKind::Sphere2;
    m.alpha = 2.0;
    m.diameter = kPi;
    // cap measure sin^2(r/2) <= r^2/4.
    m.kappa = {0.25, 0.30, 0.22, 0.07};
    return m;
}

ManifoldModel ManifoldModel::torus2() {
    ManifoldModel m;
    m.kind = ManifoldKind::Torus2;
    m.alpha = 2.0;
    m.diameter = kPi * std::sqrt(2.0);
    // flat disc: mu(B(x,r)) = r^2/(4pi) while the ball fits, smaller after.
    m.kappa = {1.0 / (4.0 * kPi), 0.08, 0.22, 0.07};
    return m;
}

ManifoldModel ManifoldModel::make(ManifoldKind kind) {
    switch (kind) {
        case ManifoldKind::Circle: return circle();
        case ManifoldKind::Sphere2: return sphere2();
        case ManifoldKind::Torus2: return torus2();
    }
    throw std::invalid_argument("bad manifold kind");
}

namespace {

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;  // fmod can land exactly on 2pi
    return a;
}

double circle_dist(double a, double b) {
    double d = std::abs(a - b);
    return std::min(d, kTwoPi - d);
}

}  // namespace

Point canonical(ManifoldKind kind, Point p) {
    switch (kind) {
        case ManifoldKind::Circle:
            p.a = wrap_angle(p.a);
            p.b = 0.0;
            return p;
        case ManifoldKind::Sphere2: {
            // fold colatitude into [0, pi], adjusting longitude on reflection
            double colat = std::fmod(p.a, kTwoPi);
            if (colat < 0.0) colat += kTwoPi;
            double lon = p.b;
            if (colat > kPi) {
                colat = kTwoPi - colat;
                lon += kPi;
            }
            p.a = colat;
            p.b = (colat == 0.0 || colat == kPi) ? 0.0 : wrap_angle(lon);
            return p;
        }
        case ManifoldKind::Torus2:
            p.a = wrap_angle(p.a);
            p.b = wrap_angle(p.b);
            return p;
    }
    return p;
}

double geodesic_distance(const ManifoldModel& m, const Point& x, const Point& y) {
    switch (m.kind) {
        case ManifoldKind::Circle:
            return circle_dist(x.a, y.a);
        case ManifoldKind::Sphere2: {
            // haversine form of arccos(x . y); exact on the diagonal
            double sd = std::sin(0.5 * (x.a - y.a));
            double sl = std::sin(0.5 * (x.b - y.b));
            double h = sd * sd + std::sin(x.a) * std::sin(y.a) * sl * sl;
            return 2.0 * std::asin(std::min(1.0, std::sqrt(std::max(0.0, h))));
        }
        case ManifoldKind::Torus2: {
            double d1 = circle_dist(x.a, y.a);
            double d2 = circle_dist(x.b, y.b);
            return std::sqrt(d1 * d1 + d2 * d2);
        }
    }
    return 0.0;
}

double ball_measure(const ManifoldModel& m, const Point& /*x*/, double r) {
    if (r < 0.0) throw std::invalid_argument("ball_measure: negative radius");
    if (r >= m.diameter) return 1.0;
    switch (m.kind) {
        case ManifoldKind::Circle:
            return std::min(1.0, r / kPi);
        case ManifoldKind::Sphere2:
            return 0.5 * (1.0 - std::cos(r));
        case ManifoldKind::Torus2: {
            if (r <= kPi) return r * r / (4.0 * kPi);
            // disc sticks out of the fundamental square through all four edges
            double seg = r * r * std::acos(kPi / r) - kPi * std::sqrt(r * r - kPi * kPi);
            double area = kPi * r * r - 4.0 * seg;
            return area / (4.0 * kPi * kPi);
        }
    }
    return 0.0;
}

std::array<double, 3> sphere_to_vec(const Point& p) {
    double s = std::sin(p.a);
    return {s * std::cos(p.b), s * std::sin(p.b), std::cos(p.a)};
}

Point vec_to_sphere(const std::array<double, 3>& v) {
    double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    double z = std::clamp(v[2] / n, -1.0, 1.0);
    Point p;
    p.a = std::acos(z);
    p.b = std::atan2(v[1], v[0]);
    return canonical(ManifoldKind::Sphere2, p);
}

std::vector<Point> grid_circle(std::size_t n) {
    std::vector<Point> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {kTwoPi * static_cast<double>(i) / n, 0.0};
    return pts;
}

std::vector<Point> grid_sphere_fibonacci(std::size_t n) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Point> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / static_cast<double>(n);
        Point p;
        p.a = std::acos(std::clamp(z, -1.0, 1.0));
        p.b = wrap_angle(golden * static_cast<double>(i));
        pts[i] = canonical(ManifoldKind::Sphere2, p);
    }
    return pts;
}

std::vector<Point> grid_torus(std::size_t n_per_axis) {
    std::vector<Point> pts;
    pts.reserve(n_per_axis * n_per_axis);
    for (std::size_t i = 0; i < n_per_axis; ++i)
        for (std::size_t j = 0; j < n_per_axis; ++j)
            pts.push_back({kTwoPi * static_cast<double>(i) / n_per_axis,
                           kTwoPi * static_cast<double>(j) / n_per_axis});
    return pts;
}

std::vector<Point> default_grid(const ManifoldModel& m, std::size_t n) {
    switch (m.kind) {
        case ManifoldKind::Circle: return grid_circle(n);
        case ManifoldKind::Sphere2: return grid_sphere_fibonacci(n);
        case ManifoldKind::Torus2: {
            std::size_t k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
            return grid_torus(std::max<std::size_t>(k, 2));
        }
    }
    return {};
}

Point random_point(const ManifoldModel& m, Rng& rng) {
    switch (m.kind) {
        case ManifoldKind::Circle:
            return {rng.uniform(0.0, kTwoPi), 0.0};
        case ManifoldKind::Sphere2: {
            double z = rng.uniform(-1.0, 1.0);
            Point p;
            p.a = std::acos(std::clamp(z, -1.0, 1.0));
            p.b = rng.uniform(0.0, kTwoPi);
            return canonical(m.kind, p);
        }
        case ManifoldKind::Torus2:
            return {rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)};
    }
    return {};
}

// ---------------------------------------------------------------------------
// NeighborGrid

NeighborGrid::NeighborGrid(const ManifoldModel& m, const std::vector<Point>& pts, double cell_size)
    : NeighborGrid(m, std::make_shared<const std::vector<Point>>(pts), cell_size) {}

NeighborGrid::NeighborGrid(const ManifoldModel& m, std::shared_ptr<const std::vector<Point>> pts,
                           double cell_size)
    : m_(m), pts_(std::move(pts)), n_(pts_->size()) {
    const std::vector<Point>& points = *pts_;
    h_ = std::max(cell_size, 1e-6);
    switch (m_.kind) {
        case ManifoldKind::Circle: {
            ni_ = std::max<long>(1, static_cast<long>(std::floor(kTwoPi / h_)));
            h_ = kTwoPi / static_cast<double>(ni_);
            nj_.assign(ni_, 1);
            break;
        }
        case ManifoldKind::Torus2: {
            ni_ = std::max<long>(1, static_cast<long>(std::floor(kTwoPi / h_)));
            h_ = kTwoPi / static_cast<double>(ni_);
            nj_.assign(ni_, ni_);
            break;
        }
        case ManifoldKind::Sphere2: {
            ni_ = std::max<long>(1, static_cast<long>(std::floor(kPi / h_)));
            h_ = kPi / static_cast<double>(ni_);
            nj_.resize(ni_);
            for (long i = 0; i < ni_; ++i) {
                double mid = (static_cast<double>(i) + 0.5) * h_;
                long ns = static_cast<long>(std::floor(kTwoPi * std::sin(mid) / h_));
                nj_[i] = std::max<long>(1, ns);
            }
            break;
        }
    }
    row_offset_.resize(ni_ + 1);
    row_offset_[0] = 0;
    for (long i = 0; i < ni_; ++i) row_offset_[i + 1] = row_offset_[i] + static_cast<std::size_t>(nj_[i]);
    buckets_.assign(row_offset_[ni_], {});
    for (std::size_t k = 0; k < n_; ++k) {
        long i = 0, j = 0;
        bucket_of(points[k], i, j);
        buckets_[bucket_index(i, j)].push_back(k);
    }
}

void NeighborGrid::bucket_of(const Point& p, long& i, long& j) const {
    switch (m_.kind) {
        case ManifoldKind::Circle:
            i = std::min<long>(ni_ - 1, static_cast<long>(std::floor(p.a / h_)));
            j = 0;
            return;
        case ManifoldKind::Torus2:
            i = std::min<long>(ni_ - 1, static_cast<long>(std::floor(p.a / h_)));
            j = std::min<long>(nj_[i] - 1, static_cast<long>(std::floor(p.b / h_)));
            return;
        case ManifoldKind::Sphere2: {
            i = std::min<long>(ni_ - 1, static_cast<long>(std::floor(p.a / h_)));
            double sector = kTwoPi / static_cast<double>(nj_[i]);
            j = std::min<long>(nj_[i] - 1, static_cast<long>(std::floor(p.b / sector)));
            return;
        }
    }
}

std::size_t NeighborGrid::bucket_index(long i, long j) const {
    return row_offset_[i] + static_cast<std::size_t>(j);
}

void NeighborGrid::query(const Point& p, double r, std::vector<std::size_t>& out) const {
    out.clear();
    for_each_within(p, r, [&out](std::size_t k, double) { out.push_back(k); });
    std::sort(out.begin(), out.end());
}

std::size_t NeighborGrid::count_within(const Point& p, double r) const {
    std::size_t n = 0;
    for_each_within(p, r, [&n](std::size_t, double) { ++n; });
    return n;
}

void NeighborGrid::for_each_within(const Point& p, double r,
                                   const std::function<void(std::size_t, double)>& fn) const {
    if (n_ == 0) return;
    const std::vector<Point>& pts = *pts_;
    auto scan_bucket = [&](long i, long j) {
        for (std::size_t k : buckets_[bucket_index(i, j)]) {
            double d = geodesic_distance(m_, p, pts[k]);
            if (d <= r) fn(k, d);
        }
    };
    switch (m_.kind) {
        case ManifoldKind::Circle: {
            long span = static_cast<long>(std::floor(r / h_)) + 1;
            long ci = std::min<long>(ni_ - 1, static_cast<long>(std::floor(p.a / h_)));
            if (2 * span + 1 >= ni_) {
                for (long i = 0; i < ni_; ++i) scan_bucket(i, 0);
            } else {
                for (long di = -span; di <= span; ++di) {
                    long i = ((ci + di) % ni_ + ni_) % ni_;
                    scan_bucket(i, 0);
                }
            }
            break;
        }
        case ManifoldKind::Torus2: {
            long span = static_cast<long>(std::floor(r / h_)) + 1;
            long ci = std::min<long>(ni_ - 1, static_cast<long>(std::floor(p.a / h_)));
            long cj = std::min<long>(ni_ - 1, static_cast<long>(std::floor(p.b / h_)));
            long lim = std::min<long>(span, ni_ / 2);
            std::vector<long> irange, jrange;
            if (2 * lim + 1 >= ni_) {
                for (long i = 0; i < ni_; ++i) irange.push_back(i);
            } else {
                for (long d = -lim; d <= lim; ++d) irange.push_back(((ci + d) % ni_ + ni_) % ni_);
            }
            if (2 * lim + 1 >= ni_) {
                for (long j = 0; j < ni_; ++j) jrange.push_back(j);
            } else {
                for (long d = -lim; d <= lim; ++d) jrange.push_back(((cj + d) % ni_ + ni_) % ni_);
            }
            for (long i : irange)
                for (long j : jrange) scan_bucket(i, j);
            break;
        }
        case ManifoldKind::Sphere2: {
            double lo = p.a - r, hi = p.a + r;
            long i0 = std::max<long>(0, static_cast<long>(std::floor(lo / h_)));
            long i1 = std::min<long>(ni_ - 1, static_cast<long>(std::floor(hi / h_)));
            bool near_pole = (lo <= h_ * 0.5) || (hi >= kPi - h_ * 0.5);
            double smin = near_pole ? 0.0 : std::min(std::sin(std::max(lo, 0.0)), std::sin(std::min(hi, kPi)));
            for (long i = i0; i <= i1; ++i) {
                long ns = nj_[i];
                if (near_pole || smin <= 1e-12) {
                    for (long j = 0; j < ns; ++j) scan_bucket(i, j);
                    continue;
                }
                double dlam = r / smin;
                double sector = kTwoPi / static_cast<double>(ns);
                long span = static_cast<long>(std::floor(dlam / sector)) + 1;
                if (2 * span + 1 >= ns) {
                    for (long j = 0; j < ns; ++j) scan_bucket(i, j);
                } else {
                    long cj = std::min<long>(ns - 1, static_cast<long>(std::floor(p.b / sector)));
                    for (long d = -span; d <= span; ++d) scan_bucket(i, ((cj + d) % ns + ns) % ns);
                }
            }
            break;
        }
    }
}

std::pair<std::size_t, double> NeighborGrid::nearest(const Point& p) const {
    if (n_ == 0) throw std::logic_error("NeighborGrid::nearest on empty grid");
    double r = h_;
    while (true) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_k = n_;
        for_each_within(p, r, [&](std::size_t k, double d) {
            if (d < best - 1e-15 || (d <= best + 1e-15 && k < best_k)) {
                best = d;
                best_k = k;
            }
        });
        if (best_k < n_ && (best <= r || r >= m_.diameter)) return {best_k, best};
        if (r >= m_.diameter) break;
        r = std::min(m_.diameter, 2.0 * r);
    }
    throw std::logic_error("NeighborGrid::nearest: search exhausted");
}

}  // namespace mz
