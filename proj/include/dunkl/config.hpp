#pragma once

// Run configuration: JSON schema, validation, and factories for the objects
// the pipeline stages share.

#include "dunkl/geometry.hpp"
#include "dunkl/potential.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace dunkl {

struct ConfigInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // root_system block
    std::string preset = "A1";
    int dihedral_m = 0;
    std::vector<double> multiplicity{1.0};
    // potential block
    std::string potential_kind = "constant";
    std::vector<double> potential_params{1.0};
    double q = 2.0;
    // domain and budgets
    double domain_lo = -8.0;
    double domain_hi = 8.0;
    int max_depth = 20;
    double quad_tol = 1e-8;
    // grid engines
    int grid_panels = 48;
    int trotter_steps = 64;
    // heat stage time
    double heat_t = 0.5;
    // m-field sweep
    double m_grid_lo = -4.0;
    double m_grid_hi = 4.0;
    int m_grid_n = 65;
    // run control
    std::uint64_t seed = 7;
    int threads = 1;
    std::vector<std::string> stages{"measure", "potential", "m-field", "cubes",
                                    "ops",     "heat",      "fp",      "hardy"};

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        try {
            if (j.contains("root_system")) {
                const auto& rs = j.at("root_system");
                if (rs.contains("preset")) {
                    if (rs.at("preset").is_object()) {
                        c.preset = "dihedral";
                        c.dihedral_m = rs.at("preset").at("dihedral").get<int>();
                    } else {
                        c.preset = rs.at("preset").get<std::string>();
                    }
                }
                if (rs.contains("multiplicity"))
                    c.multiplicity = rs.at("multiplicity").get<std::vector<double>>();
            }
            if (j.contains("potential")) {
                const auto& p = j.at("potential");
                if (p.contains("kind")) c.potential_kind = p.at("kind").get<std::string>();
                if (p.contains("params"))
                    c.potential_params = p.at("params").get<std::vector<double>>();
                if (p.contains("q")) c.q = p.at("q").get<double>();
            }
            if (j.contains("domain")) {
                c.domain_lo = j.at("domain").at(0).get<double>();
                c.domain_hi = j.at("domain").at(1).get<double>();
            }
            if (j.contains("max_depth")) c.max_depth = j.at("max_depth").get<int>();
            if (j.contains("quad_tol")) c.quad_tol = j.at("quad_tol").get<double>();
            if (j.contains("grid_panels")) c.grid_panels = j.at("grid_panels").get<int>();
            if (j.contains("trotter_steps")) c.trotter_steps = j.at("trotter_steps").get<int>();
            if (j.contains("heat_t")) c.heat_t = j.at("heat_t").get<double>();
            if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("threads")) c.threads = j.at("threads").get<int>();
            if (j.contains("stages")) c.stages = j.at("stages").get<std::vector<std::string>>();
            if (j.contains("m_grid")) {
                c.m_grid_lo = j.at("m_grid").at("lo").get<double>();
                c.m_grid_hi = j.at("m_grid").at("hi").get<double>();
                c.m_grid_n = j.at("m_grid").at("n").get<int>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigInvalid(std::string("malformed config: ") + e.what());
        }
        c.validate();
        return c;
    }

    void validate() const {
        if (preset != "A1" && preset != "A1xA1" && preset != "B2" && preset != "dihedral")
            throw ConfigInvalid("unknown root system preset: " + preset);
        if (preset == "dihedral" && dihedral_m < 1)
            throw ConfigInvalid("dihedral preset needs a positive order");
        for (double k : multiplicity)
            if (!(k >= 0)) throw ConfigInvalid("multiplicities must be >= 0");
        if (potential_kind != "constant" && potential_kind != "power" &&
            potential_kind != "sqnorm" && potential_kind != "polysq")
            throw ConfigInvalid("unknown potential kind: " + potential_kind);
        if (!(domain_lo < domain_hi)) throw ConfigInvalid("empty domain");
        if (max_depth < 1) throw ConfigInvalid("max_depth must be >= 1");
        if (!(quad_tol > 0)) throw ConfigInvalid("quad_tol must be positive");
        // q > max(1, N_hom/2)
        const double nh = make_root_system().homogeneous_dimension();
        if (!(q > std::max(1.0, nh / 2.0)))
            throw ConfigInvalid("reverse Holder exponent q=" + std::to_string(q) +
                                " must exceed max(1, N_hom/2)=" +
                                std::to_string(std::max(1.0, nh / 2.0)));
    }

    RootSystem make_root_system() const {
        try {
            if (preset == "A1") return RootSystem::a1(multiplicity.at(0));
            if (preset == "A1xA1") {
                std::vector<double> ks = multiplicity;
                if (ks.size() == 1) ks.push_back(ks[0]);
                return RootSystem::a1_power({ks[0], ks[1]});
            }
            if (preset == "B2") {
                const double k2 = multiplicity.size() > 1 ? multiplicity[1] : multiplicity[0];
                return RootSystem::b2(multiplicity.at(0), k2);
            }
            return RootSystem::dihedral(dihedral_m, multiplicity);
        } catch (const std::exception& e) {
            throw ConfigInvalid(std::string("root system construction failed: ") + e.what());
        }
    }

    PotentialProfile make_potential() const {
        try {
            if (potential_kind == "constant")
                return PotentialProfile::constant(potential_params.at(0), q);
            if (potential_kind == "power")
                return PotentialProfile::power(potential_params.at(0), q);
            if (potential_kind == "sqnorm") return PotentialProfile::sqnorm(q);
            return PotentialProfile::polysq(potential_params, q);
        } catch (const std::exception& e) {
            throw ConfigInvalid(std::string("potential construction failed: ") + e.what());
        }
    }

    PotentialMeasure make_potential_measure() const {
        try {
            return PotentialMeasure(make_potential(),
                                    WeightedMeasure(make_root_system(), quad_tol));
        } catch (const std::invalid_argument& e) {
            throw ConfigInvalid(e.what());
        }
    }

    Box domain_box() const {
        const int n = make_root_system().dimension();
        Box b;
        b.lo = Vec::Constant(n, domain_lo);
        b.hi = Vec::Constant(n, domain_hi);
        return b;
    }
};

}  // namespace dunkl
