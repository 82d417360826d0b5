// mzlab: config-driven experiment runner over the library modules.
//
// Usage: mzlab <command> --config <path> [--out <dir>] [--relax-d]
//              [--threads <n>] [--seed-override <u64>]
// Commands: points, partition, mz, quad, kernel, verify-all.
// Exit codes: 0 success, 1 usage/config error, 2 invariant or criterion
// failure.  Reports are JSON plus CSV mirrors; reruns of the same config are
// byte-identical.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mz/acceptance.hpp"
#include "mz/io.hpp"
#include "mz/kernels.hpp"
#include "mz/mzanalysis.hpp"
#include "mz/pointsets.hpp"
#include "mz/quadrature.hpp"
#include "mz/util.hpp"

namespace fs = std::filesystem;
using mz::io::Config;
using json = mz::io::json;

namespace {

struct RunContext {
    Config cfg;
    fs::path out;
    bool relax_d = false;
    std::uint64_t seed_override = 0;
    bool have_seed_override = false;

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
        if (have_seed_override) return seed_override;
        return cfg.get_u64(key, fallback);
    }

    json stamp(json j) const {
        char buf[20];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(cfg.hash()));
        j["config_hash"] = std::string(buf);
        j["version"] = mz::kLibraryVersion;
        return j;
    }

    void write_json(const std::string& name, const json& j) const {
        mz::io::write_text_file((out / name).string(), j.dump(2) + "\n");
    }
};

mz::ManifoldModel manifold_from(const Config& cfg) {
    return mz::ManifoldModel::make(
        mz::manifold_from_name(cfg.get_string("experiment.manifold", "circle")));
}

std::string level_tag(double L) {
    std::ostringstream s;
    if (L == std::floor(L))
        s << static_cast<long long>(L);
    else
        s << L;
    return s.str();
}

mz::SignedMeasure measure_from(const RunContext& ctx) {
    const Config& cfg = ctx.cfg;
    mz::ManifoldModel m = manifold_from(cfg);
    std::string type = cfg.get_string("measure.type", "atomic");
    if (type == "file") return mz::io::load_measure(cfg.get_string("measure.file"));
    if (type == "atomic") {
        std::string layout = cfg.get_string("measure.layout", "equispaced");
        auto n = static_cast<std::size_t>(cfg.get_int("measure.n", 64));
        if (n < 1) throw std::invalid_argument("config: measure.n must be positive");
        std::vector<mz::Point> pts;
        if (layout == "equispaced" || layout == "grid") {
            pts = mz::default_grid(m, n);
        } else if (layout == "jittered") {
            if (m.kind != mz::ManifoldKind::Circle)
                throw std::invalid_argument("config: jittered layout is circle-only");
            double jitter = cfg.get_double("measure.jitter", 0.15);
            mz::Rng rng(ctx.seed("measure.seed", 1u));
            double gap = mz::kTwoPi / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                pts.push_back({gap * static_cast<double>(i) +
                                   jitter * gap * (2.0 * rng.uniform() - 1.0),
                               0});
        } else if (layout == "random") {
            mz::Rng rng(ctx.seed("measure.seed", 1u));
            for (std::size_t i = 0; i < n; ++i) pts.push_back(mz::random_point(m, rng));
        } else {
            throw std::invalid_argument("config: unknown measure.layout " + layout);
        }
        double w = cfg.get_double("measure.weight", 1.0 / static_cast<double>(pts.size()));
        return mz::SignedMeasure::atomic(m, std::move(pts),
                                         std::vector<double>(n, w),
                                         "atomic-" + layout + "-" + std::to_string(n));
    }
    if (type == "density") {
        double level = cfg.get_double("measure.level", 64.0);
        std::string weight = cfg.get_string("measure.weight_fn", "const");
        json j;
        j["manifold"] = m.name();
        j["type"] = "density";
        j["level"] = level;
        j["weight"] = weight;
        return mz::io::measure_from_json(j);
    }
    throw std::invalid_argument("config: unknown measure.type " + type);
}

mz::Partition partition_from(const RunContext& ctx, const mz::SignedMeasure& nu) {
    double d = ctx.cfg.get_double("partition.d");
    if (!(d > 0.0)) throw std::invalid_argument("config: partition.d must be positive");
    mz::PartitionOptions opts;
    opts.relax_d = ctx.relax_d || ctx.cfg.get_int("partition.relax_d", 0) != 0;
    auto grid_n = static_cast<std::size_t>(ctx.cfg.get_int("partition.audit_grid", 10000));
    return mz::build_mz_partition(nu, d, mz::default_grid(nu.manifold(), grid_n), opts);
}

int cmd_points(const RunContext& ctx) {
    mz::ManifoldModel m = manifold_from(ctx.cfg);
    auto n = static_cast<std::size_t>(ctx.cfg.get_int("points.n", 256));
    double eps = ctx.cfg.get_double("points.eps", 0.0);
    mz::PointSet samples{m, mz::default_grid(m, n)};
    mz::PointSet result = samples;
    if (eps > 0.0) result = mz::max_separated_subset(samples, eps);
    auto fine = mz::default_grid(m, 8192);
    json rep;
    rep["schema"] = "points/1";
    rep["manifold"] = m.name();
    rep["n_input"] = samples.pts.size();
    rep["n_output"] = result.pts.size();
    rep["eps"] = eps;
    rep["mesh_norm"] = mz::mesh_norm(result, fine);
    if (result.pts.size() >= 2) rep["min_separation"] = mz::min_separation(result);
    if (eps > 0.0)
        rep["overlap_at_eps"] = mz::overlap_count(result, eps, fine);
    mz::io::save_point_set((ctx.out / "points.txt").string(), result);
    ctx.write_json("points_report.json", ctx.stamp(rep));
    return 0;
}

int cmd_partition(const RunContext& ctx) {
    mz::SignedMeasure nu = measure_from(ctx);
    mz::Partition part = partition_from(ctx, nu);
    mz::io::save_partition((ctx.out / "partition.txt").string(), part);
    json rep;
    rep["schema"] = "partition/1";
    rep["manifold"] = part.m.name();
    rep["d"] = part.d;
    rep["cells"] = part.size();
    rep["stage_sizes"] = {part.g1_size, part.g2_size, part.g3_size, part.g4_size};
    rep["band_lo"] = part.band_lo;
    rep["band_hi"] = part.band_hi;
    rep["band_ratio"] = part.band_hi / part.band_lo;
    rep["min_nu_quarter_ball"] = part.min_nu_quarter_ball;
    rep["nu_floor_constant"] = part.nu_floor_constant;
    ctx.write_json("partition_report.json", ctx.stamp(rep));
    std::ostringstream csv;
    csv << "cell,mu_mass,nu_mass\n";
    for (std::size_t k = 0; k < part.size(); ++k)
        csv << k << "," << part.mu_mass[k] << "," << part.nu_mass[k] << "\n";
    mz::io::write_text_file((ctx.out / "cells.csv").string(), csv.str());
    return 0;
}

int cmd_mz(const RunContext& ctx) {
    mz::SignedMeasure nu = measure_from(ctx);
    mz::ManifoldModel m = nu.manifold();
    std::vector<double> levels = ctx.cfg.get_list("mz.L");
    std::vector<double> ps = ctx.cfg.has("mz.p") ? ctx.cfg.get_list("mz.p")
                                                 : std::vector<double>{2.0};
    int trials = static_cast<int>(ctx.cfg.get_int("mz.trials", 24));
    std::uint64_t seed = ctx.seed("mz.seed", 1234u);
    std::ostringstream csv;
    csv << "manifold,L,p,method,c1,c2\n";
    for (double L : levels) {
        if (L < 1.0) throw std::invalid_argument("config: mz.L entries must be >= 1");
        auto basis = std::make_shared<const mz::SpectralBasis>(mz::eigen_system(m, L));
        for (double p : ps) {
            if (p < 1.0) throw std::invalid_argument("config: mz.p entries must be >= 1");
            mz::MZReport rep = (p == 2.0)
                                   ? mz::mz_constants_p2(nu, *basis, L)
                                   : mz::mz_ratio_bounds(nu, basis, L, p, trials, seed);
            rep.measure_id = nu.descriptor();
            std::string name = "mz_" + m.name() + "_L" + level_tag(L) + "_p" + level_tag(p) +
                               ".json";
            ctx.write_json(name, ctx.stamp(mz::io::to_json(rep)));
            csv << m.name() << "," << L << "," << p << ","
                << (rep.method == mz::MZMethod::GramExactP2 ? "gram_exact_p2" : "sampled") << ","
                << rep.c1 << "," << rep.c2 << "\n";
        }
    }
    mz::io::write_text_file((ctx.out / "mz_summary.csv").string(), csv.str());
    return 0;
}

int cmd_quad(const RunContext& ctx) {
    mz::SignedMeasure nu = measure_from(ctx);
    double L = ctx.cfg.get_double("quad.L", 8.0);
    std::string mode_s = ctx.cfg.get_string("quad.mode", "lp");
    mz::SolveMode mode = (mode_s == "nnls") ? mz::SolveMode::NNLS : mz::SolveMode::LPMaximin;
    auto basis = std::make_shared<const mz::SpectralBasis>(mz::eigen_system(nu.manifold(), L));

    mz::QuadratureSolve sol;
    std::string recheck;
    if (ctx.cfg.has("partition.d")) {
        mz::Partition part = partition_from(ctx, nu);
        sol = mz::solve_positive_quadrature(nu, part, basis, L, mode);
        if (!sol.feasible) {
            // infeasibility at a valid scale is a bug signal: re-audit the
            // partition before reporting
            recheck = "ok";
            for (std::size_t k = 0; k < part.size(); ++k) {
                if (part.cell_of(part.final_centers[k]) != static_cast<int>(k) ||
                    !(part.nu_mass[k] > 0.0))
                    recheck = "partition invariants violated";
            }
        }
    } else {
        sol = mz::solve_positive_quadrature(nu, basis, L, mode);
    }
    json rep;
    rep["schema"] = "quad/1";
    if (!recheck.empty()) rep["partition_recheck"] = recheck;
    rep["L"] = L;
    rep["mode"] = mode_s;
    rep["feasible"] = sol.feasible;
    if (sol.rule) {
        rep["rule"] = mz::io::to_json(*sol.rule);
        mz::io::save_rule((ctx.out / "rule.txt").string(), *sol.rule);
    }
    if (sol.certificate) {
        rep["violation"] = sol.certificate->violation;
        rep["certificate"] = sol.certificate->direction;
    }
    if (!sol.message.empty()) rep["message"] = sol.message;
    ctx.write_json("quad_report.json", ctx.stamp(rep));
    return sol.feasible ? 0 : 2;
}

int cmd_kernel(const RunContext& ctx) {
    mz::ManifoldModel m = manifold_from(ctx.cfg);
    std::vector<double> levels = ctx.cfg.has("kernel.levels")
                                     ? ctx.cfg.get_list("kernel.levels")
                                     : std::vector<double>{16.0, 32.0, 64.0};
    std::vector<int> svals;
    if (ctx.cfg.has("kernel.S")) {
        for (double s : ctx.cfg.get_list("kernel.S")) svals.push_back(static_cast<int>(s));
    } else {
        for (int s = static_cast<int>(m.alpha) + 1; s <= static_cast<int>(m.alpha) + 6; ++s)
            svals.push_back(s);
    }
    mz::KernelProbeReport rep = mz::localization_report(m, levels, svals);
    ctx.write_json("kernel_report.json", ctx.stamp(mz::io::to_json(rep)));
    std::ostringstream csv;
    csv << "L,sup_l1";
    for (int s : svals) csv << ",c_S" << s;
    csv << "\n";
    for (std::size_t li = 0; li < levels.size(); ++li) {
        csv << levels[li] << "," << rep.sup_l1[li];
        for (std::size_t si = 0; si < svals.size(); ++si) csv << "," << rep.c_loc[si][li];
        csv << "\n";
    }
    mz::io::write_text_file((ctx.out / "kernel_report.csv").string(), csv.str());
    return 0;
}

int cmd_verify_all(const RunContext& ctx) {
    std::ostringstream log;
    auto results = mz::acceptance::run_all(log);
    std::cout << log.str();
    bool all = true;
    json arr = json::array();
    for (const auto& r : results) {
        all = all && r.pass;
        json row;
        row["name"] = r.name;
        row["pass"] = r.pass;
        row["detail"] = r.detail;
        arr.push_back(std::move(row));
    }
    json rep;
    rep["schema"] = "acceptance/1";
    rep["criteria"] = std::move(arr);
    rep["all_passed"] = all;
    ctx.write_json("acceptance.json", ctx.stamp(rep));
    mz::io::write_text_file((ctx.out / "acceptance.txt").string(), log.str());
    return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Marcinkiewicz-Zygmund laboratory on model manifolds"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "mzlab-out";
    bool relax_d = false;
    unsigned threads = 0;
    std::string seed_override;
    app.add_option("--config", config_path, "configuration file (key = value with [sections])");
    app.add_option("--out", out_dir, "output directory for reports");
    app.add_flag("--relax-d", relax_d, "lift the d <= 1/81 partition bound");
    app.add_option("--threads", threads, "worker threads (default: MZLAB_THREADS or hardware)");
    app.add_option("--seed-override", seed_override, "override every configured seed");
    const char* names[] = {"points", "partition", "mz", "quad", "kernel", "verify-all"};
    const char* descs[] = {"point-set geometry report",
                           "build and audit a measure-adapted partition",
                           "norm-equivalence constants over Pi_L",
                           "positive quadrature solve",
                           "kernel localization and heat-kernel probe report",
                           "run the full acceptance battery"};
    for (int i = 0; i < 6; ++i) app.add_subcommand(names[i], descs[i]);

    CLI11_PARSE(app, argc, argv);

    try {
        RunContext ctx;
        ctx.cfg = config_path.empty() ? Config::parse_text("", "<none>")
                                      : Config::parse_file(config_path);
        ctx.out = out_dir;
        ctx.relax_d = relax_d;
        if (!seed_override.empty()) {
            ctx.seed_override = std::strtoull(seed_override.c_str(), nullptr, 10);
            ctx.have_seed_override = true;
        }
        if (threads > 0) {
            setenv("MZLAB_THREADS", std::to_string(threads).c_str(), 1);
        }
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + ctx.out.string());

        std::string cmd = app.get_subcommands().front()->get_name();
        try {
            if (cmd == "points") return cmd_points(ctx);
            if (cmd == "partition") return cmd_partition(ctx);
            if (cmd == "mz") return cmd_mz(ctx);
            if (cmd == "quad") return cmd_quad(ctx);
            if (cmd == "kernel") return cmd_kernel(ctx);
            if (cmd == "verify-all") return cmd_verify_all(ctx);
        } catch (const std::invalid_argument&) {
            throw;  // bad config or preconditions: usage error
        } catch (const std::domain_error&) {
            throw;
        } catch (const std::logic_error& e) {
            // invariant violations: flush a failure marker and exit 2
            json fail;
            fail["status"] = "failed";
            fail["error"] = e.what();
            ctx.write_json(cmd + "_report.json", ctx.stamp(fail));
            std::cerr << "mzlab: invariant failure: " << e.what() << "\n";
            return 2;
        }
        std::cerr << "mzlab: unknown command " << cmd << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "mzlab: " << e.what() << "\n";
        return 1;
    }
}
