#pragma once

// Batch pipeline: measure -> potential -> m-field -> cubes -> ops -> heat ->
// fp -> hardy, each stage writing one artifact. Stages are re-runnable from
// persisted upstream artifacts (cubes.json is reloaded when present).
// Artifacts are byte-deterministic for a fixed config and seed.

#include "dunkl/config.hpp"
#include "dunkl/critical_radius.hpp"
#include "dunkl/cubes.hpp"
#include "dunkl/dunkl_ops.hpp"
#include "dunkl/fefferman_phong.hpp"
#include "dunkl/hardy.hpp"
#include "dunkl/heat.hpp"
#include "dunkl/schrodinger.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

namespace dunkl {

struct StageFailure : std::runtime_error {
    std::string stage;
    StageFailure(std::string stage_name, const std::string& what)
        : std::runtime_error("stage " + stage_name + ": " + what), stage(std::move(stage_name)) {}
};

struct QuadratureBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace artifact {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace artifact

inline nlohmann::json cubes_to_json(const CubeCollection& cc) {
    nlohmann::json j;
    j["version"] = 1;
    j["dyadic_origin"] = "domain corner";
    j["domain"] = {cc.domain().lo[0], cc.domain().hi[0]};
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& q : cc.cubes()) {
        nlohmann::json e;
        e["level"] = q.level;
        e["index"] = q.index;
        e["side"] = q.side;
        std::vector<double> center(q.center.data(), q.center.data() + q.center.size());
        e["center"] = center;
        e["criterion_value"] = q.criterion_value;
        e["boundary_flag"] = q.boundary_flag;
        arr.push_back(std::move(e));
    }
    j["cubes"] = std::move(arr);
    return j;
}

inline CubeCollection cubes_from_json(const nlohmann::json& j, const Box& domain) {
    std::vector<DyadicCube> cubes;
    for (const auto& e : j.at("cubes")) {
        DyadicCube q;
        q.level = e.at("level").get<int>();
        q.index = e.at("index").get<std::vector<int>>();
        q.side = e.at("side").get<double>();
        const auto c = e.at("center").get<std::vector<double>>();
        q.center = Vec(static_cast<Eigen::Index>(c.size()));
        for (std::size_t i = 0; i < c.size(); ++i) q.center[static_cast<Eigen::Index>(i)] = c[i];
        q.criterion_value = e.at("criterion_value").get<double>();
        q.boundary_flag = e.at("boundary_flag").get<bool>();
        cubes.push_back(std::move(q));
    }
    return CubeCollection(domain, std::move(cubes));
}

class Pipeline {
public:
    Pipeline(RunConfig cfg, std::filesystem::path out_dir)
        : cfg_(std::move(cfg)), out_(std::move(out_dir)) {
        std::filesystem::create_directories(out_);
    }

    /// Executes the configured stages in dependency order.
    void run() {
        for (const std::string& s : cfg_.stages) run_stage(s);
    }

    void run_stage(const std::string& name) {
        try {
            if (name == "measure") return stage_measure();
            if (name == "potential") return stage_potential();
            if (name == "m-field") return stage_m_field();
            if (name == "cubes") return stage_cubes();
            if (name == "ops") return stage_ops();
            if (name == "heat") return stage_heat();
            if (name == "fp") return stage_fp();
            if (name == "hardy") return stage_hardy();
            throw std::runtime_error("unknown stage " + name);
        } catch (const ToleranceNotReached& e) {
            throw QuadratureBudgetExceeded(std::string("stage ") + name + ": " + e.what());
        } catch (const QuadratureFailure& e) {
            throw QuadratureBudgetExceeded(std::string("stage ") + name + ": " + e.what());
        } catch (const StageFailure&) {
            throw;
        } catch (const ConfigInvalid&) {
            throw;
        } catch (const std::exception& e) {
            throw StageFailure(name, e.what());
        }
    }

    std::filesystem::path out_dir() const { return out_; }

private:
    void stage_measure() {
        auto wm = WeightedMeasure(cfg_.make_root_system(), cfg_.quad_tol);
        nlohmann::json j;
        j["version"] = 1;
        const int n = wm.context().dimension();
        std::vector<std::pair<Vec, double>> sweep;
        for (int i = 0; i <= 8; ++i) {
            Vec x = Vec::Constant(n, cfg_.domain_lo + (cfg_.domain_hi - cfg_.domain_lo) * i / 8.0);
            for (double r : {0.25, 1.0, 2.0}) sweep.emplace_back(x, r);
        }
        auto rep = wm.doubling_diagnostic(sweep);
        j["doubling"] = {{"min_ratio", rep.min_ratio},
                         {"max_ratio", rep.max_ratio},
                         {"floor_2N", rep.floor_2N},
                         {"ceiling_2Nhom", rep.ceiling_2Nh}};
        double cmax = 0.0;
        for (const auto& [x, r] : sweep)
            cmax = std::max(cmax, wm.ball_volume(x, r) / wm.surrogate_ball_volume(x, r));
        j["surrogate_comparison_max"] = cmax;
        j["homogeneous_dimension"] = wm.context().homogeneous_dimension();
        artifact::write_text(out_ / "measure_report.json", j.dump(2) + "\n");
    }

    void stage_potential() {
        auto pm = cfg_.make_potential_measure();
        std::string csv = "center,radius,lhs,rhs,ratio\n";
        Box dom = cfg_.domain_box();
        const double radii[] = {0.25, 0.5, 1.0, 2.0, 4.0};
        auto balls = make_ball_sweep(dom, 12, radii);
        for (const Ball& b : balls) {
            const double wb = pm.measure().ball_volume(b.center, b.radius);
            const double mb = pm.mu(b);
            if (!(mb > 0)) continue;
            const double rhs = mb / wb;
            const double lhs = std::pow(
                pm.measure()
                        .integrate([&](const Vec& x) { return std::pow(pm.potential()(x), cfg_.q); },
                                   b, cfg_.quad_tol)
                        .value /
                    wb,
                1.0 / cfg_.q);
            csv += artifact::fmt(b.center[0]) + "," + artifact::fmt(b.radius) + "," +
                   artifact::fmt(lhs) + "," + artifact::fmt(rhs) + "," +
                   artifact::fmt(lhs / rhs) + "\n";
        }
        artifact::write_text(out_ / "potential_rh.csv", csv);
    }

    void stage_m_field() {
        auto pm = cfg_.make_potential_measure();
        CriticalRadiusField field(pm);
        const int n = pm.measure().context().dimension();
        std::string csv;
        for (int j = 0; j < n; ++j) csv += "x" + std::to_string(j) + ",";
        csv += "m,r_star,F_at_rstar\n";
        for (int i = 0; i < cfg_.m_grid_n; ++i) {
            Vec x = Vec::Zero(n);
            x[0] = cfg_.m_grid_lo +
                   (cfg_.m_grid_hi - cfg_.m_grid_lo) * i / std::max(1, cfg_.m_grid_n - 1);
            auto mp = field.detail(x);
            for (int j = 0; j < n; ++j) csv += artifact::fmt(x[j]) + ",";
            csv += artifact::fmt(mp.m) + "," + artifact::fmt(mp.r_star) + "," +
                   artifact::fmt(mp.F_at_rstar) + "\n";
        }
        artifact::write_text(out_ / "m.csv", csv);
    }

    void stage_cubes() {
        auto pm = cfg_.make_potential_measure();
        auto cc = build_stopping_time(cfg_.domain_box(), pm, cfg_.max_depth);
        artifact::write_text(out_ / "cubes.json", cubes_to_json(cc).dump(2) + "\n");
    }

    void stage_ops() {
        auto pm = cfg_.make_potential_measure();
        const auto& rs = pm.measure().context();
        nlohmann::json j;
        j["version"] = 1;
        const double half = 0.5 * (cfg_.domain_hi - cfg_.domain_lo);
        auto f = fields::gaussian(Vec::Zero(rs.dimension()), std::max(1.0, 36.0 / (half * half)));
        auto g = fields::polynomial({1.0, 0.5, 0.25}, rs.dimension());
        std::mt19937_64 rng(cfg_.seed);
        std::uniform_real_distribution<double> u(cfg_.domain_lo / 2, cfg_.domain_hi / 2);
        std::vector<Vec> pts;
        for (int i = 0; i < 200; ++i) {
            Vec x(rs.dimension());
            for (int d = 0; d < rs.dimension(); ++d) x[d] = u(rng);
            pts.push_back(x);
        }
        j["leibniz_residual"] = leibniz_residual(rs, f, g, 0, pts);
        Box region = cfg_.domain_box();
        j["qform_gaussian"] = quadratic_form(rs, f, pm, region, 1e-7);
        artifact::write_text(out_ / "ops_report.json", j.dump(2) + "\n");
    }

    void stage_heat() {
        auto rs = cfg_.make_root_system();
        if (!rs.is_product_of_rank_one() && !rs.roots().empty())
            throw StageFailure("heat", "exact kernels need A1 or a product of rank-one factors");
        HeatKernelEngine eng(rs);
        WeightedMeasure wm(rs, cfg_.quad_tol);
        nlohmann::json j;
        j["version"] = 1;
        const double t = cfg_.heat_t;
        double nerr = 0.0;
        for (double x : {0.0, 1.0, 3.0})
            nerr = std::max(nerr, eng.normalization_error(Vec::Constant(rs.dimension(), x), t, wm));
        j["normalization_error"] = nerr;
        double serr = 0.0;
        std::vector<Vec> pts;
        for (int i = 0; i <= 6; ++i)
            pts.push_back(Vec::Constant(rs.dimension(),
                                        cfg_.domain_lo / 2 + (cfg_.domain_hi - cfg_.domain_lo) * i / 12.0));
        for (const Vec& x : pts)
            for (const Vec& y : pts)
                serr = std::max(serr, std::abs(eng.heat_kernel(x, y, t) - eng.heat_kernel(y, x, t)));
        j["symmetry_error"] = serr;
        const double ts[] = {0.1, 1.0, 10.0};
        auto rep = gaussian_bound_check(eng, wm, ts, pts);
        j["gaussian_bound"] = {{"C", rep.chosen_C}, {"c", rep.chosen_c}};
        nlohmann::json scan = nlohmann::json::array();
        for (const auto& row : rep.scan)
            scan.push_back({{"c", row.c},
                            {"C_sqrt_scale", row.C_sqrt_scale},
                            {"C_linear_scale", row.C_linear_scale}});
        j["gaussian_bound"]["scan"] = std::move(scan);
        // grid semigroup error
        SpatialGrid grid(rs, cfg_.domain_lo, cfg_.domain_hi, cfg_.grid_panels);
        SchrodingerKernelEngine seng(rs, cfg_.make_potential(), grid, cfg_.trotter_steps);
        const Eigen::MatrixXd h2 =
            SchrodingerKernelEngine::compose(seng.heat_matrix(0, t / 2), seng.heat_matrix(0, t / 2),
                                             grid.axis_weights(0));
        const Eigen::MatrixXd h = seng.heat_matrix(0, t);
        double gerr = 0.0;
        const double margin = 0.25 * (cfg_.domain_hi - cfg_.domain_lo);
        for (int a = 0; a < h.rows(); ++a) {
            if (grid.axis_nodes(0)[a] - cfg_.domain_lo < margin ||
                cfg_.domain_hi - grid.axis_nodes(0)[a] < margin)
                continue;
            for (int b = 0; b < h.cols(); ++b)
                gerr = std::max(gerr, std::abs(h2(a, b) - h(a, b)));
        }
        j["semigroup_error"] = gerr / h.maxCoeff();
        artifact::write_text(out_ / "heat_report.json", j.dump(2) + "\n");
    }

    void stage_fp() {
        auto pm = cfg_.make_potential_measure();
        if (pm.measure().context().dimension() != 1)
            throw StageFailure("fp", "the frozen family is rank-one");
        CriticalRadiusField field(pm);
        auto fam = fp_standard_family();
        Box region;
        region.lo = make_vec({cfg_.domain_lo - 24.0});
        region.hi = make_vec({cfg_.domain_hi + 24.0});
        auto rep = fp_verify(fam, pm, field, region, std::nullopt, 1e-6);
        std::string csv = "f_id,lhs,rhs,ratio\n";
        for (const auto& row : rep.rows)
            csv += row.f_id + "," + artifact::fmt(row.lhs) + "," + artifact::fmt(row.rhs) + "," +
                   artifact::fmt(row.ratio) + "\n";
        artifact::write_text(out_ / "fp_report.csv", csv);
    }

    void stage_hardy() {
        auto pm = cfg_.make_potential_measure();
        auto rs = pm.measure().context();
        if (rs.dimension() != 1) throw StageFailure("hardy", "the atom suite is rank-one");
        CubeCollection cc = load_or_build_cubes(pm);
        SpatialGrid grid(rs, cfg_.domain_lo, cfg_.domain_hi, cfg_.grid_panels);
        SchrodingerKernelEngine eng(rs, cfg_.make_potential(), grid,
                                    std::min(cfg_.trotter_steps, 32));
        WeightedMeasure wm(rs, cfg_.quad_tol);
        auto atoms = make_atom_fixture(grid, wm, cc, 24, cfg_.seed);
        MaximalOptions opts;
        opts.t_min = 1.0 / 16.0;
        opts.octaves = 10;
        opts.per_octave = 4;
        opts.trotter_steps = 16;
        auto norms = atom_h1_norms(eng, atoms, opts);
        std::string csv = "atom_id,Q_id,r,h1_norm,valid_flags\n";
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            auto v = validate_atom(atoms[i], grid, wm, &cc);
            const std::string flags = std::string(v.support_ok ? "A" : "-") +
                                      (v.size_ok ? "B" : "-") +
                                      (!v.cancellation_required || v.cancellation_ok ? "C" : "-");
            csv += atoms[i].id + "," + std::to_string(*atoms[i].cube_index) + "," +
                   artifact::fmt(atoms[i].radius) + "," + artifact::fmt(norms[i]) + "," + flags +
                   "\n";
        }
        artifact::write_text(out_ / "atoms.csv", csv);
    }

    CubeCollection load_or_build_cubes(const PotentialMeasure& pm) {
        const auto path = out_ / "cubes.json";
        if (std::filesystem::exists(path)) {
            std::ifstream in(path);
            nlohmann::json j;
            in >> j;
            return cubes_from_json(j, cfg_.domain_box());
        }
        return build_stopping_time(cfg_.domain_box(), pm, cfg_.max_depth);
    }

    RunConfig cfg_;
    std::filesystem::path out_;
};

}  // namespace dunkl
