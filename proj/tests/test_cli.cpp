#include <catch2/catch_amalgamated.hpp>

#include "dunkl/config.hpp"
#include "dunkl/pipeline.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dunkl;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "dunkl_cli_out.txt";
    const std::string cmd = std::string(DUNKL_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + out.string() + ".err";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(raw);
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.stdout_text = ss.str();
    return r;
}

fs::path write_config(const nlohmann::json& j, const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << j.dump();
    return p;
}

nlohmann::json minimal_config() {
    return nlohmann::json{
        {"root_system", {{"preset", "A1"}, {"multiplicity", {1.0}}}},
        {"potential", {{"kind", "constant"}, {"params", {1.0}}, {"q", 2.0}}},
        {"domain", {-4.0, 4.0}},
        {"max_depth", 12},
        {"grid_panels", 20},
        {"trotter_steps", 16},
        {"m_grid", {{"lo", -2.0}, {"hi", 2.0}, {"n", 9}}},
        {"stages", {"measure", "m-field", "cubes"}}};
}

}  // namespace

TEST_CASE("config parsing and validation") {
    auto cfg = RunConfig::from_json(minimal_config());
    CHECK(cfg.preset == "A1");
    CHECK(cfg.make_root_system().homogeneous_dimension() == Approx(3.0));

    auto bad = minimal_config();
    bad["potential"]["q"] = 1.4;  // needs q > 1.5 for N_hom = 3
    CHECK_THROWS_AS(RunConfig::from_json(bad), ConfigInvalid);

    auto badpreset = minimal_config();
    badpreset["root_system"]["preset"] = "E8";
    CHECK_THROWS_AS(RunConfig::from_json(badpreset), ConfigInvalid);

    auto dih = minimal_config();
    dih["root_system"]["preset"] = {{"dihedral", 3}};
    dih["root_system"]["multiplicity"] = {0.5};
    dih["potential"]["q"] = 3.0;
    auto dcfg = RunConfig::from_json(dih);
    CHECK(dcfg.make_root_system().group_order() == 6);
}

TEST_CASE("cli ball-volume emits JSON") {
    auto r = run_cli("measure ball-volume --x 0 --r 1 --tol 1e-9");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.stdout_text);
    CHECK(j["value"].get<double>() == Approx(4.0 / 3.0).epsilon(1e-8));
    CHECK(j["est_error"].get<double>() < 1e-8);
}

TEST_CASE("cli exit codes") {
    auto bad = minimal_config();
    bad["potential"]["q"] = 1.2;
    const auto cfgpath = write_config(bad, "bad_q.json");
    CHECK(run_cli("--config " + cfgpath.string() + " pipeline").exit_code == 2);

    // stage failure: heat stage on a non-product system
    auto b2 = minimal_config();
    b2["root_system"]["preset"] = "B2";
    b2["root_system"]["multiplicity"] = {1.0, 1.0};
    b2["potential"]["q"] = 6.0;
    b2["stages"] = {"heat"};
    const auto b2path = write_config(b2, "b2_heat.json");
    CHECK(run_cli("--config " + b2path.string() + " pipeline").exit_code == 3);
}

TEST_CASE("minimal pipeline produces deterministic artifacts") {
    auto cfg = minimal_config();
    const auto cfgpath = write_config(cfg, "mini.json");
    const fs::path d1 = fs::temp_directory_path() / "dunkl_run1";
    const fs::path d2 = fs::temp_directory_path() / "dunkl_run2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    REQUIRE(run_cli("--config " + cfgpath.string() + " --out-dir " + d1.string() +
                    " pipeline").exit_code == 0);
    REQUIRE(run_cli("--config " + cfgpath.string() + " --out-dir " + d2.string() +
                    " pipeline").exit_code == 0);
    for (const char* name : {"measure_report.json", "m.csv", "cubes.json"}) {
        std::ifstream a(d1 / name), b(d2 / name);
        std::stringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        REQUIRE(!sa.str().empty());
        CHECK(sa.str() == sb.str());
    }
    // constant potential: the m column is identically sqrt(c) = 1
    std::ifstream mcsv(d1 / "m.csv");
    std::string line;
    std::getline(mcsv, line);  // header
    CHECK(line == "x0,m,r_star,F_at_rstar");
    int rows = 0;
    while (std::getline(mcsv, line)) {
        std::stringstream ss(line);
        std::string x, m;
        std::getline(ss, x, ',');
        std::getline(ss, m, ',');
        CHECK(std::stod(m) == Approx(1.0).epsilon(1e-6));
        ++rows;
    }
    CHECK(rows == 9);
}

TEST_CASE("cubes round-trip through JSON") {
    auto pm = PotentialMeasure(PotentialProfile::sqnorm(2.0),
                               WeightedMeasure(RootSystem::a1(1.0), 1e-9));
    Box dom;
    dom.lo = make_vec({-8.0});
    dom.hi = make_vec({8.0});
    auto cc = build_stopping_time(dom, pm, 16);
    auto j = cubes_to_json(cc);
    auto back = cubes_from_json(j, dom);
    REQUIRE(back.size() == cc.size());
    for (std::size_t i = 0; i < cc.size(); ++i) {
        CHECK(back[i].level == cc[i].level);
        CHECK(back[i].side == cc[i].side);
        CHECK(back[i].center[0] == cc[i].center[0]);
        CHECK(back[i].criterion_value == cc[i].criterion_value);
        CHECK(back[i].boundary_flag == cc[i].boundary_flag);
    }
}

TEST_CASE("cli cubes build writes the schema") {
    auto cfg = minimal_config();
    cfg["potential"] = {{"kind", "sqnorm"}, {"q", 2.0}};
    const auto cfgpath = write_config(cfg, "cubes_cfg.json");
    const fs::path out = fs::temp_directory_path() / "cli_cubes.json";
    auto r = run_cli("--config " + cfgpath.string() + " cubes build --domain -8:8 --max-depth 16 --out " +
                     out.string());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(out);
    nlohmann::json j;
    in >> j;
    CHECK(j["version"] == 1);
    REQUIRE(!j["cubes"].empty());
    for (const auto& e : j["cubes"]) {
        CHECK(e.contains("level"));
        CHECK(e.contains("index"));
        CHECK(e.contains("side"));
        CHECK(e.contains("center"));
        CHECK(e.contains("criterion_value"));
        CHECK(e.contains("boundary_flag"));
        CHECK(e["criterion_value"].get<double>() <= 1.0 + 1e-9);
    }
}

TEST_CASE("hardy stage reuses persisted cubes") {
    RunConfig cfg = RunConfig::from_json(minimal_config());
    cfg.potential_kind = "sqnorm";
    cfg.potential_params = {};
    cfg.domain_lo = -8.0;
    cfg.domain_hi = 8.0;
    cfg.max_depth = 16;
    cfg.grid_panels = 20;
    cfg.stages = {"cubes"};
    const fs::path dir = fs::temp_directory_path() / "dunkl_stage_iso";
    fs::remove_all(dir);
    Pipeline p(cfg, dir);
    p.run();
    REQUIRE(fs::exists(dir / "cubes.json"));
    // downstream stage picks the artifact up rather than rebuilding
    p.run_stage("hardy");
    CHECK(fs::exists(dir / "atoms.csv"));
    std::ifstream in(dir / "atoms.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "atom_id,Q_id,r,h1_norm,valid_flags");
    int n = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++n;
        CHECK(line.find(",ABC") != std::string::npos);
    }
    CHECK(n == 24);
}

TEST_CASE("cli quadrature budget exit code") {
    auto cfg = minimal_config();
    cfg["potential"] = {{"kind", "power"}, {"params", {0.4}}, {"q", 2.0}};
    cfg["root_system"]["multiplicity"] = {0.25};
    cfg["quad_tol"] = 1e-15;
    cfg["stages"] = {"measure"};
    const auto p = write_config(cfg, "budget.json");
    const int code = run_cli("--config " + p.string() + " pipeline").exit_code;
    CHECK(code == 4);
}

TEST_CASE("cli check-rh and heat verify schemas") {
    auto cfg = minimal_config();
    cfg["potential"] = {{"kind", "sqnorm"}, {"q", 2.0}};
    const auto p = write_config(cfg, "rh_cfg.json");
    auto r = run_cli("--config " + p.string() + " potential check-rh --q 2");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.rfind("center,radius,lhs,rhs,ratio\n", 0) == 0);
    // every ratio column is >= 1 (Jensen) and finite
    std::stringstream ss(r.stdout_text);
    std::string line;
    std::getline(ss, line);
    int rows = 0;
    while (std::getline(ss, line)) {
        const auto pos = line.rfind(',');
        const double ratio = std::stod(line.substr(pos + 1));
        CHECK(ratio >= 1.0 - 1e-9);
        CHECK(std::isfinite(ratio));
        ++rows;
    }
    CHECK(rows > 10);

    const fs::path out = fs::temp_directory_path() / "heat_report_cli.json";
    auto h = run_cli("--config " + p.string() + " heat verify --t 0.5 --grid -6:6:256 --out " +
                     out.string());
    REQUIRE(h.exit_code == 0);
    std::ifstream in(out);
    nlohmann::json j;
    in >> j;
    CHECK(j.contains("normalization_error"));
    CHECK(j.contains("symmetry_error"));
    CHECK(j["gaussian_bound"].contains("C"));
    CHECK(j["gaussian_bound"].contains("c"));
    CHECK(j["gaussian_bound"].contains("scan"));
    CHECK(j.contains("semigroup_error"));
    CHECK(j["normalization_error"].get<double>() < 1e-5);
}
