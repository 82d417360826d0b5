#include "mz/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mz/util.hpp"

namespace mz::io {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// point sets

void save_point_set(const std::string& path, const PointSet& ps) {
    std::ostringstream out;
    out << "# point set, one point per line\n";
    out << "manifold: " << ps.m.name() << "\n";
    for (const Point& p : ps.pts) {
        out << fmt(p.a);
        if (ps.m.kind != ManifoldKind::Circle) out << " " << fmt(p.b);
        out << "\n";
    }
    write_text_file(path, out.str());
}

PointSet load_point_set(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    PointSet ps{ManifoldModel::circle(), {}};
    bool have_manifold = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "manifold:") {
            std::string name;
            if (!(ls >> name))
                throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                            ": manifold name missing");
            ps.m = ManifoldModel::make(manifold_from_name(name));
            have_manifold = true;
            continue;
        }
        if (!have_manifold)
            throw std::invalid_argument(path + ": point before the manifold header");
        Point p;
        p.a = std::strtod(first.c_str(), nullptr);
        if (ps.m.kind != ManifoldKind::Circle) {
            if (!(ls >> p.b))
                throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                            ": second coordinate missing");
        }
        ps.pts.push_back(canonical(ps.m.kind, p));
    }
    return ps;
}

// ---------------------------------------------------------------------------
// measures

std::vector<std::string> density_registry() { return {"const", "sin_abs", "jump"}; }

namespace {

double registry_density(const std::string& name, const Point& p) {
    if (name == "const") return 1.0;
    if (name == "sin_abs") return std::abs(std::sin(p.a));
    if (name == "jump") return (p.a < kPi) ? 1.5 : 0.5;
    throw std::invalid_argument("unknown density weight: " + name);
}

}  // namespace

json measure_to_json(const SignedMeasure& nu) {
    json j;
    j["manifold"] = nu.manifold().name();
    j["descriptor"] = nu.descriptor();
    switch (nu.kind()) {
        case MeasureKind::Zero:
            j["type"] = "zero";
            break;
        case MeasureKind::Atomic: {
            j["type"] = "atomic";
            json atoms = json::array();
            for (std::size_t i = 0; i < nu.atom_count(); ++i) {
                const Point& p = nu.points()[i];
                if (nu.manifold().kind == ManifoldKind::Circle)
                    atoms.push_back({p.a, nu.masses()[i]});
                else
                    atoms.push_back({p.a, p.b, nu.masses()[i]});
            }
            j["atoms"] = std::move(atoms);
            break;
        }
        case MeasureKind::Density:
        case MeasureKind::BallAverage: {
            j["type"] = "density";
            // store the node values so arbitrary densities round-trip
            auto rule = nu.rule();
            double level = (rule->exact_degree - 2.0) / 2.0;
            j["level"] = level;
            json vals = json::array();
            for (std::size_t i = 0; i < nu.atom_count(); ++i)
                vals.push_back(nu.masses()[i] / rule->weights[i]);
            j["weight"] = "table";
            j["values"] = std::move(vals);
            break;
        }
    }
    return j;
}

SignedMeasure measure_from_json(const json& j) {
    ManifoldModel m = ManifoldModel::make(manifold_from_name(j.at("manifold").get<std::string>()));
    std::string type = j.at("type").get<std::string>();
    std::string desc = j.value("descriptor", type);
    if (type == "zero") return SignedMeasure::zero(m);
    if (type == "atomic") {
        std::vector<Point> pts;
        std::vector<double> w;
        for (const auto& row : j.at("atoms")) {
            Point p;
            if (m.kind == ManifoldKind::Circle) {
                p.a = row.at(0).get<double>();
                w.push_back(row.at(1).get<double>());
            } else {
                p.a = row.at(0).get<double>();
                p.b = row.at(1).get<double>();
                w.push_back(row.at(2).get<double>());
            }
            pts.push_back(p);
        }
        return SignedMeasure::atomic(m, std::move(pts), std::move(w), desc);
    }
    if (type == "density") {
        double level = j.value("level", 64.0);
        auto rule = std::make_shared<const ReferenceQuadrature>(reference_quadrature(m, level));
        std::string weight = j.value("weight", "const");
        std::vector<double> vals(rule->nodes.size());
        if (weight == "table") {
            const auto& tv = j.at("values");
            if (tv.size() != vals.size())
                throw std::invalid_argument("density table size != rule nodes");
            for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = tv.at(i).get<double>();
        } else {
            for (std::size_t i = 0; i < vals.size(); ++i)
                vals[i] = registry_density(weight, rule->nodes[i]);
        }
        return SignedMeasure::density(m, rule, std::move(vals),
                                      desc == type ? weight : desc);
    }
    if (type == "ball_average") {
        double level = j.value("level", 128.0);
        auto rule = std::make_shared<const ReferenceQuadrature>(reference_quadrature(m, level));
        std::vector<Point> centers;
        std::vector<double> radii, w;
        for (const auto& row : j.at("balls")) {
            Point p;
            p.a = row.at(0).get<double>();
            p.b = (m.kind == ManifoldKind::Circle) ? 0.0 : row.at(1).get<double>();
            std::size_t off = (m.kind == ManifoldKind::Circle) ? 1 : 2;
            centers.push_back(p);
            radii.push_back(row.at(off).get<double>());
            w.push_back(row.at(off + 1).get<double>());
        }
        return SignedMeasure::ball_average(m, rule, centers, radii, w, desc);
    }
    throw std::invalid_argument("unknown measure type: " + type);
}

void save_measure(const std::string& path, const SignedMeasure& nu) {
    write_text_file(path, measure_to_json(nu).dump(2) + "\n");
}

SignedMeasure load_measure(const std::string& path) {
    return measure_from_json(json::parse(read_text_file(path)));
}

// ---------------------------------------------------------------------------
// partitions

void save_partition(const std::string& path, const Partition& part) {
    std::ostringstream out;
    out << "mzpartition 1\n";
    out << "manifold: " << part.m.name() << "\n";
    out << "d: " << fmt(part.d) << "\n";
    out << "nu_fingerprint: " << part.nu_fingerprint << "\n";
    out << "stage_sizes: " << part.g1_size << " " << part.g2_size << " " << part.g3_size << " "
        << part.g4_size << "\n";
    out << "stage_radii: " << fmt(part.stage_radius[0]) << " " << fmt(part.stage_radius[1]) << " "
        << fmt(part.stage_radius[2]) << "\n";
    const CellComplex& c = part.cells;
    out << "base_radius: " << fmt(c.base_radius()) << "\n";
    out << "containment: " << fmt(c.containment_radius()) << "\n";
    out << "base_points: " << c.base_count() << "\n";
    for (const Point& p : c.base_points()) out << fmt(p.a) << " " << fmt(p.b) << "\n";
    out << "owner:";
    for (int v : c.owner_map()) out << " " << v;
    out << "\nactive:";
    for (int v : c.active_base()) out << " " << v;
    out << "\nfinal_center_base:";
    for (int v : part.final_center_base) out << " " << v;
    out << "\nmu_mass:";
    for (double v : part.mu_mass) out << " " << fmt(v);
    out << "\nnu_mass:";
    for (double v : part.nu_mass) out << " " << fmt(v);
    out << "\nband: " << fmt(part.band_lo) << " " << fmt(part.band_hi) << "\n";
    out << "min_nu_quarter_ball: " << fmt(part.min_nu_quarter_ball) << "\n";
    out << "nu_floor_constant: " << fmt(part.nu_floor_constant) << "\n";
    write_text_file(path, out.str());
}

namespace {

std::string expect_token(std::istream& in, const std::string& want) {
    std::string got;
    in >> got;
    if (got != want) throw std::invalid_argument("partition file: expected '" + want + "', got '" + got + "'");
    return got;
}

}  // namespace

Partition load_partition(const std::string& path) {
    std::istringstream in(read_text_file(path));
    expect_token(in, "mzpartition");
    int version;
    in >> version;
    if (version != 1) throw std::invalid_argument("partition file: unsupported version");
    Partition part;
    std::string name;
    expect_token(in, "manifold:");
    in >> name;
    part.m = ManifoldModel::make(manifold_from_name(name));
    expect_token(in, "d:");
    in >> part.d;
    expect_token(in, "nu_fingerprint:");
    in >> part.nu_fingerprint;
    expect_token(in, "stage_sizes:");
    in >> part.g1_size >> part.g2_size >> part.g3_size >> part.g4_size;
    expect_token(in, "stage_radii:");
    in >> part.stage_radius[0] >> part.stage_radius[1] >> part.stage_radius[2];
    double base_radius, containment;
    expect_token(in, "base_radius:");
    in >> base_radius;
    expect_token(in, "containment:");
    in >> containment;
    expect_token(in, "base_points:");
    std::size_t n_base;
    in >> n_base;
    std::vector<Point> base(n_base);
    for (Point& p : base) in >> p.a >> p.b;
    expect_token(in, "owner:");
    std::vector<int> owner(n_base);
    for (int& v : owner) in >> v;
    expect_token(in, "active:");
    int max_owner = -1;
    for (int v : owner) max_owner = std::max(max_owner, v);
    std::vector<int> active(static_cast<std::size_t>(max_owner + 1));
    for (int& v : active) in >> v;
    part.cells = CellComplex::from_parts(part.m, base, base_radius, owner, active, containment);
    std::size_t M = part.cells.cell_count();
    part.final_center_base.resize(M);
    expect_token(in, "final_center_base:");
    for (int& v : part.final_center_base) in >> v;
    part.final_centers.resize(M);
    for (std::size_t k = 0; k < M; ++k)
        part.final_centers[k] = base[static_cast<std::size_t>(part.final_center_base[k])];
    part.mu_mass.resize(M);
    expect_token(in, "mu_mass:");
    for (double& v : part.mu_mass) in >> v;
    part.nu_mass.resize(M);
    expect_token(in, "nu_mass:");
    for (double& v : part.nu_mass) in >> v;
    expect_token(in, "band:");
    in >> part.band_lo >> part.band_hi;
    expect_token(in, "min_nu_quarter_ball:");
    in >> part.min_nu_quarter_ball;
    expect_token(in, "nu_floor_constant:");
    in >> part.nu_floor_constant;
    if (!in) throw std::invalid_argument("partition file: truncated");
    if (part.m.kind == ManifoldKind::Circle) part.circle_arcs = circle_cell_arcs(part.cells);
    return part;
}

// ---------------------------------------------------------------------------
// quadrature rules

void save_rule(const std::string& path, const QuadratureRule& rule) {
    std::ostringstream out;
    out << "mzrule 1\n";
    out << "manifold: " << rule.manifold.name() << "\n";
    out << "order: " << fmt(rule.order) << "\n";
    out << "kind: " << (rule.kind == FunctionalKind::PointEvaluation ? "point" : "cell_average")
        << "\n";
    out << "residual: " << fmt(rule.residual) << "\n";
    out << "min_weight_ratio: " << fmt(rule.min_weight_ratio) << "\n";
    out << "maximin_t: " << fmt(rule.maximin_t) << "\n";
    out << "functionals: " << rule.weights.size() << "\n";
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
        out << k << " " << fmt(rule.weights[k]) << " " << rule.functionals[k].size();
        for (const auto& [p, frac] : rule.functionals[k])
            out << " " << fmt(p.a) << " " << fmt(p.b) << " " << fmt(frac);
        out << "\n";
    }
    write_text_file(path, out.str());
}

QuadratureRule load_rule(const std::string& path) {
    std::istringstream in(read_text_file(path));
    expect_token(in, "mzrule");
    int version;
    in >> version;
    if (version != 1) throw std::invalid_argument("rule file: unsupported version");
    QuadratureRule rule;
    std::string name, kind;
    expect_token(in, "manifold:");
    in >> name;
    rule.manifold = ManifoldModel::make(manifold_from_name(name));
    expect_token(in, "order:");
    in >> rule.order;
    expect_token(in, "kind:");
    in >> kind;
    rule.kind = (kind == "point") ? FunctionalKind::PointEvaluation : FunctionalKind::CellAverage;
    expect_token(in, "residual:");
    in >> rule.residual;
    expect_token(in, "min_weight_ratio:");
    in >> rule.min_weight_ratio;
    expect_token(in, "maximin_t:");
    in >> rule.maximin_t;
    expect_token(in, "functionals:");
    std::size_t n;
    in >> n;
    rule.weights.resize(n);
    rule.functionals.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t id, npts;
        in >> id >> rule.weights[k] >> npts;
        rule.functionals[k].resize(npts);
        for (auto& [p, frac] : rule.functionals[k]) in >> p.a >> p.b >> frac;
    }
    if (!in) throw std::invalid_argument("rule file: truncated");
    return rule;
}

// ---------------------------------------------------------------------------
// polynomials

void save_polynomial(const std::string& path, const DiffusionPolynomial& P) {
    std::ostringstream out;
    out << "mzpoly 1\n";
    out << "manifold: " << P.basis().manifold().name() << "\n";
    out << "L: " << fmt(P.degree()) << "\n";
    out << "coeff: " << P.coeff().size() << "\n";
    for (double c : P.coeff()) out << fmt(c) << "\n";
    write_text_file(path, out.str());
}

DiffusionPolynomial load_polynomial(const std::string& path) {
    std::istringstream in(read_text_file(path));
    expect_token(in, "mzpoly");
    int version;
    in >> version;
    std::string name;
    expect_token(in, "manifold:");
    in >> name;
    ManifoldModel m = ManifoldModel::make(manifold_from_name(name));
    double L;
    expect_token(in, "L:");
    in >> L;
    expect_token(in, "coeff:");
    std::size_t n;
    in >> n;
    std::vector<double> c(n);
    for (double& v : c) in >> v;
    if (!in) throw std::invalid_argument("polynomial file: truncated");
    auto basis = std::make_shared<const SpectralBasis>(eigen_system(m, L));
    return DiffusionPolynomial(basis, L, std::move(c));
}

// ---------------------------------------------------------------------------
// reports

json to_json(const MZReport& rep) {
    json j;
    j["schema"] = "mz-report/1";
    j["manifold"] = rep.manifold.name();
    j["L"] = rep.L;
    j["p"] = (rep.p == kInfNorm) ? json("inf") : json(rep.p);
    j["measure_id"] = rep.measure_id;
    j["method"] = (rep.method == MZMethod::GramExactP2) ? "gram_exact_p2" : "sampled";
    j["c1"] = rep.c1;
    j["c2"] = rep.c2;
    j["eta"] = rep.eta;
    j["trials"] = rep.trials;
    j["seed"] = rep.seed;
    json fitted;
    for (const auto& [k, v] : rep.fitted) fitted[k] = v;
    j["fitted_constants"] = std::move(fitted);
    return j;
}

json to_json(const KernelProbeReport& rep) {
    json j;
    j["schema"] = "kernel-probe/1";
    j["manifold"] = rep.manifold.name();
    j["levels"] = rep.levels;
    j["S"] = rep.s_values;
    json cs = json::array();
    for (std::size_t si = 0; si < rep.s_values.size(); ++si) {
        json row;
        row["S"] = rep.s_values[si];
        row["c"] = rep.c_loc[si];
        cs.push_back(std::move(row));
    }
    j["localization"] = std::move(cs);
    j["sup_l1"] = rep.sup_l1;
    j["kappa2"] = rep.kappa2;
    j["kappa3"] = rep.kappa3;
    j["kappa4"] = rep.kappa4;
    j["gauss_violation_rate"] = rep.gauss_violation_rate;
    j["beta_hat"] = rep.beta_hat;
    j["heat_integral_raw"] = rep.heat_integral_raw;
    j["heat_integral_rescaled"] = rep.heat_integral_rescaled;
    return j;
}

json to_json(const StrongMZReport& rep) {
    json j;
    j["schema"] = "strong-mz/1";
    j["L"] = rep.L;
    j["p"] = rep.p;
    j["d"] = rep.d;
    j["eta_observed"] = rep.eta_observed;
    j["eta_pointwise"] = rep.eta_pointwise;
    j["gradient_overlap"] = rep.gradient_overlap;
    j["trials"] = rep.trials;
    return j;
}

json to_json(const CharacterizationReport& rep) {
    json j;
    j["schema"] = "characterization/1";
    j["L"] = rep.L;
    j["p"] = rep.p;
    j["c1"] = rep.c1;
    j["c2"] = rep.c2;
    j["method"] = (rep.method == MZMethod::GramExactP2) ? "gram_exact_p2" : "sampled";
    j["r_norm"] = rep.regularity.r_norm;
    j["d_norm"] = rep.dominance_infinite ? json("inf") : json(rep.dominance.d_norm);
    j["r_norm_ratio"] = rep.r_norm_ratio;
    j["d_norm_ratio"] = rep.dominance_infinite ? json("inf") : json(rep.d_norm_ratio);
    j["upper_fit"] = rep.upper_fit;
    j["upper_converse_fit"] = rep.upper_converse_fit;
    j["lower_fit"] = rep.lower_fit;
    json sweep = json::array();
    for (std::size_t i = 0; i < rep.converse_scale.size(); ++i) {
        json row;
        row["S"] = rep.converse_scale[i].first;
        row["d"] = rep.converse_scale[i].second;
        row["d_norm"] = std::isfinite(rep.dominance_at_converse[i])
                            ? json(rep.dominance_at_converse[i])
                            : json("inf");
        sweep.push_back(std::move(row));
    }
    j["converse_dominance"] = std::move(sweep);
    return j;
}

json to_json(const QuadratureRule& rule) {
    json j;
    j["schema"] = "quadrature-rule/1";
    j["manifold"] = rule.manifold.name();
    j["order"] = rule.order;
    j["kind"] = (rule.kind == FunctionalKind::PointEvaluation) ? "point" : "cell_average";
    j["n"] = rule.weights.size();
    j["residual"] = rule.residual;
    j["min_weight_ratio"] = rule.min_weight_ratio;
    j["maximin_t"] = rule.maximin_t;
    return j;
}

// ---------------------------------------------------------------------------
// config

Config Config::parse_file(const std::string& path) {
    return parse_text(read_text_file(path), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.text_ = text;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto notspace = [](unsigned char c) { return !std::isspace(c); };
        auto b = std::find_if(line.begin(), line.end(), notspace);
        auto e = std::find_if(line.rbegin(), line.rend(), notspace).base();
        if (b >= e) continue;
        std::string s(b, e);
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                            ": unterminated section header");
            section = s.substr(1, s.size() - 2);
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = s.substr(0, eq);
        std::string val = s.substr(eq + 1);
        auto trim = [&](std::string& t) {
            auto tb = std::find_if(t.begin(), t.end(), notspace);
            auto te = std::find_if(t.rbegin(), t.rend(), notspace).base();
            t = (tb < te) ? std::string(tb, te) : std::string();
        };
        trim(key);
        trim(val);
        if (key.empty())
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.entries_.emplace_back(section.empty() ? key : section + "." + key, val);
    }
    return cfg;
}

const std::string* Config::find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

std::uint64_t Config::hash() const { return fnv1a(text_); }

std::string Config::get_string(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw std::invalid_argument("config: missing field '" + key + "'");
    return *v;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& key) const {
    std::string s = get_string(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::invalid_argument("config: field '" + key + "' is not a number: " + s);
    return v;
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    return static_cast<long long>(get_double(key));
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    std::string s = get_string(key);
    return std::strtoull(s.c_str(), nullptr, 10);
}

std::vector<double> Config::get_list(const std::string& key) const {
    std::string s = get_string(key);
    std::vector<double> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        char* end = nullptr;
        double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str())
            throw std::invalid_argument("config: field '" + key + "' has a bad list entry: " + item);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("config: field '" + key + "' is an empty list");
    return out;
}

}  // namespace mz::io
