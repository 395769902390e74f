// Batch front-end for the Dunkl-Schrodinger numerical lab.
//
// Subcommands: measure, potential, m-field, cubes, ops, heat, fp, hardy,
// pipeline. Exit codes: 0 success, 2 invalid configuration, 3 stage failure,
// 4 quadrature budget exhausted.

#include "dunkl/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace dunkl;

RunConfig load_config(const std::string& path) {
    if (path.empty()) {
        RunConfig c;
        c.validate();
        return c;
    }
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid(std::string("config parse error: ") + e.what());
    }
    return RunConfig::from_json(j);
}

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

struct GridSpec {
    double lo = 0, hi = 0;
    int n = 0;
};

GridSpec parse_grid(const std::string& s) {
    GridSpec g;
    std::stringstream ss(s);
    std::string tok;
    std::vector<std::string> parts;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.size() < 2) throw ConfigInvalid("grid spec must be lo:hi[:n]");
    g.lo = std::stod(parts[0]);
    g.hi = std::stod(parts[1]);
    g.n = parts.size() > 2 ? std::stoi(parts[2]) : 0;
    if (!(g.lo < g.hi)) throw ConfigInvalid("grid spec must have lo < hi");
    return g;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    artifact::write_text(out_path, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dunkl-Schrodinger numerical verification lab"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", out_file;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    double tol = 0.0;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out-dir", out_dir, "artifact directory (pipeline)");
    app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--threads", threads, "worker threads (stages are deterministic)");
    app.add_option("--tol", tol, "override the quadrature tolerance");

    // measure ball-volume
    auto* measure = app.add_subcommand("measure", "weighted measure diagnostics");
    auto* ball = measure->add_subcommand("ball-volume", "w(B(x,r)) with error estimate");
    std::string ball_x = "0";
    double ball_r = 1.0, ball_tol = 1e-8;
    ball->add_option("--x", ball_x, "center coordinates, comma separated");
    ball->add_option("--r", ball_r, "radius");
    ball->add_option("--tol", ball_tol, "relative tolerance");

    // potential check-rh
    auto* potential = app.add_subcommand("potential", "potential diagnostics");
    auto* rh = potential->add_subcommand("check-rh", "reverse Holder sweep (CSV)");
    double rh_q = 0.0;
    std::string rh_sweep = "default";
    rh->add_option("--q", rh_q, "exponent (default: config q)");
    rh->add_option("--sweep", rh_sweep, "sweep name (default only)");
    rh->add_option("--out", out_file, "output CSV path");

    // m-field
    auto* mfield = app.add_subcommand("m-field", "critical radius field on a grid (CSV)");
    std::string mf_grid = "-4:4:65";
    mfield->add_option("--grid", mf_grid, "x0:x1:n");
    mfield->add_option("--out", out_file, "output CSV path");

    // cubes build
    auto* cubes = app.add_subcommand("cubes", "stopping-time cube decomposition");
    auto* cb = cubes->add_subcommand("build", "build and export cubes.json");
    std::string cb_domain;
    int cb_depth = 0;
    cb->add_option("--domain", cb_domain, "lo:hi (default: config domain)");
    cb->add_option("--max-depth", cb_depth, "subdivision budget");
    cb->add_option("--out", out_file, "output JSON path");

    // ops
    auto* ops = app.add_subcommand("ops", "Dunkl operator diagnostics");
    auto* leib = ops->add_subcommand("check-leibniz", "Leibniz-rule residual");
    auto* qf = ops->add_subcommand("qform", "quadratic form of a Gaussian");

    // heat verify
    auto* heat = app.add_subcommand("heat", "heat kernel verification");
    auto* hv = heat->add_subcommand("verify", "normalization/symmetry/bound report");
    double hv_t = 0.5;
    std::string hv_grid = "-6:6:256";
    hv->add_option("--t", hv_t, "time");
    hv->add_option("--grid", hv_grid, "lo:hi:n grid for the engine");
    hv->add_option("--out", out_file, "output JSON path");

    // fp verify
    auto* fp = app.add_subcommand("fp", "Fefferman-Phong verification");
    auto* fpv = fp->add_subcommand("verify", "frozen family report (CSV)");
    std::string fixtures_path;
    fpv->add_option("--fixtures", fixtures_path, "frozen-constants JSON");
    fpv->add_option("--out", out_file, "output CSV path");

    // hardy atom-suite
    auto* hardy = app.add_subcommand("hardy", "Hardy space atom diagnostics");
    auto* hs = hardy->add_subcommand("atom-suite", "atom fixture with H1 norms (CSV)");
    int hs_n = 100;
    hs->add_option("--n", hs_n, "number of atoms");
    hs->add_option("--out", out_file, "output CSV path");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "run all configured stages");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (tol > 0) cfg.quad_tol = tol;
        cfg.threads = threads;

        if (ball->parsed()) {
            WeightedMeasure wm(cfg.make_root_system(), cfg.quad_tol);
            auto xs = parse_csv_doubles(ball_x);
            Vec x(static_cast<Eigen::Index>(xs.size()));
            for (std::size_t i = 0; i < xs.size(); ++i) x[static_cast<Eigen::Index>(i)] = xs[i];
            auto r = wm.integrate([](const Vec&) { return 1.0; }, Ball{x, ball_r}, ball_tol);
            nlohmann::json j{{"value", r.value}, {"est_error", r.est_error}};
            emit(out_file, j.dump(2) + "\n");
        } else if (rh->parsed()) {
            if (rh_sweep != "default") throw ConfigInvalid("unknown sweep: " + rh_sweep);
            auto pm = cfg.make_potential_measure();
            const double q = rh_q > 0 ? rh_q : cfg.q;
            std::string csv = "center,radius,lhs,rhs,ratio\n";
            const double radii[] = {0.25, 0.5, 1.0, 2.0, 4.0};
            for (const Ball& b : make_ball_sweep(cfg.domain_box(), 12, radii)) {
                const double wb = pm.measure().ball_volume(b.center, b.radius);
                const double mb = pm.mu(b);
                if (!(mb > 0)) continue;
                const double lhs = std::pow(
                    pm.measure()
                            .integrate(
                                [&](const Vec& y) { return std::pow(pm.potential()(y), q); }, b,
                                cfg.quad_tol)
                            .value /
                        wb,
                    1.0 / q);
                csv += artifact::fmt(b.center[0]) + "," + artifact::fmt(b.radius) + "," +
                       artifact::fmt(lhs) + "," + artifact::fmt(mb / wb) + "," +
                       artifact::fmt(lhs / (mb / wb)) + "\n";
            }
            emit(out_file, csv);
        } else if (mfield->parsed()) {
            auto g = parse_grid(mf_grid);
            cfg.m_grid_lo = g.lo;
            cfg.m_grid_hi = g.hi;
            if (g.n > 0) cfg.m_grid_n = g.n;
            cfg.stages = {"m-field"};
            Pipeline p(cfg, out_dir);
            p.run();
            if (!out_file.empty())
                std::filesystem::copy_file(p.out_dir() / "m.csv", out_file,
                                           std::filesystem::copy_options::overwrite_existing);
        } else if (cb->parsed()) {
            if (!cb_domain.empty()) {
                auto g = parse_grid(cb_domain);
                cfg.domain_lo = g.lo;
                cfg.domain_hi = g.hi;
            }
            if (cb_depth > 0) cfg.max_depth = cb_depth;
            cfg.validate();
            auto pm = cfg.make_potential_measure();
            auto cc = build_stopping_time(cfg.domain_box(), pm, cfg.max_depth);
            emit(out_file, cubes_to_json(cc).dump(2) + "\n");
        } else if (leib->parsed() || qf->parsed()) {
            cfg.stages = {"ops"};
            Pipeline p(cfg, out_dir);
            p.run();
            std::ifstream in(p.out_dir() / "ops_report.json");
            std::cout << in.rdbuf();
        } else if (hv->parsed()) {
            auto g = parse_grid(hv_grid);
            cfg.heat_t = hv_t;
            cfg.domain_lo = g.lo;
            cfg.domain_hi = g.hi;
            if (g.n > 0) cfg.grid_panels = std::max(8, g.n / 15);
            cfg.stages = {"heat"};
            Pipeline p(cfg, out_dir);
            p.run();
            if (out_file.empty()) {
                std::ifstream in(p.out_dir() / "heat_report.json");
                std::cout << in.rdbuf();
            } else {
                std::filesystem::copy_file(p.out_dir() / "heat_report.json", out_file,
                                           std::filesystem::copy_options::overwrite_existing);
            }
        } else if (fpv->parsed()) {
            auto pm = cfg.make_potential_measure();
            CriticalRadiusField field(pm);
            auto fam = fp_standard_family();
            Box region;
            region.lo = make_vec({cfg.domain_lo - 24.0});
            region.hi = make_vec({cfg.domain_hi + 24.0});
            std::optional<double> frozen;
            if (!fixtures_path.empty()) {
                std::ifstream in(fixtures_path);
                if (in) {
                    nlohmann::json j;
                    in >> j;
                    const std::string key = cfg.preset + "_" + cfg.potential_kind;
                    if (j.contains(key) && j[key].contains("fp_C"))
                        frozen = j[key]["fp_C"].get<double>();
                }
            }
            auto rep = fp_verify(fam, pm, field, region, frozen, 1e-6);
            std::string csv = "f_id,lhs,rhs,ratio\n";
            for (const auto& row : rep.rows)
                csv += row.f_id + "," + artifact::fmt(row.lhs) + "," + artifact::fmt(row.rhs) +
                       "," + artifact::fmt(row.ratio) + "\n";
            emit(out_file, csv);
        } else if (hs->parsed()) {
            auto pm = cfg.make_potential_measure();
            auto rs = pm.measure().context();
            if (rs.dimension() != 1) throw ConfigInvalid("atom suite runs on rank-one systems");
            auto cc = build_stopping_time(cfg.domain_box(), pm, cfg.max_depth);
            SpatialGrid grid(rs, cfg.domain_lo, cfg.domain_hi, cfg.grid_panels);
            SchrodingerKernelEngine eng(rs, cfg.make_potential(), grid, 32);
            WeightedMeasure wm(rs, cfg.quad_tol);
            auto atoms = make_atom_fixture(grid, wm, cc, hs_n, cfg.seed);
            MaximalOptions opts;
            opts.t_min = 1.0 / 16.0;
            opts.octaves = 10;
            opts.trotter_steps = 16;
            auto norms = atom_h1_norms(eng, atoms, opts);
            std::string csv = "atom_id,Q_id,r,h1_norm,valid_flags\n";
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                auto v = validate_atom(atoms[i], grid, wm, &cc);
                const std::string flags = std::string(v.support_ok ? "A" : "-") +
                                          (v.size_ok ? "B" : "-") +
                                          (!v.cancellation_required || v.cancellation_ok ? "C"
                                                                                         : "-");
                csv += atoms[i].id + "," + std::to_string(*atoms[i].cube_index) + "," +
                       artifact::fmt(atoms[i].radius) + "," + artifact::fmt(norms[i]) + "," +
                       flags + "\n";
            }
            emit(out_file, csv);
        } else if (pipe->parsed()) {
            Pipeline p(cfg, out_dir);
            p.run();
            std::cout << "pipeline complete: artifacts in " << out_dir << "\n";
        }
    } catch (const ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const QuadratureBudgetExceeded& e) {
        std::cerr << "quadrature budget exceeded: " << e.what() << "\n";
        return 4;
    } catch (const ToleranceNotReached& e) {
        std::cerr << "quadrature budget exceeded: " << e.what() << "\n";
        return 4;
    } catch (const StageFailure& e) {
        std::cerr << "stage failure [" << e.stage << "]: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
