#pragma once

// Numerical verification of the Fefferman-Phong inequality
//   int |f|^2 m^2 dw <= C Q(f,f)
// over a fixed, versioned test family, plus the sublevel-set measure
// estimate w({V <= eps d(Q)^{-2}} cap Q*) <= C eps^eta w(Q*).

#include "dunkl/critical_radius.hpp"
#include "dunkl/cubes.hpp"
#include "dunkl/dunkl_ops.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dunkl {

struct RatioUnbounded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FPRow {
    std::string f_id;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

struct FPReport {
    std::string family_version;
    std::vector<FPRow> rows;
    double empirical_constant = 0.0;
};

/// int |f|^2 m^2 dw over the effective support of f (intersected with the
/// given region); m through the cached critical-radius field.
inline double fp_lhs(const SmoothField& f, const CriticalRadiusField& field, const Box& region,
                     double tol) {
    Box eff = region;
    for (int j = 0; j < region.dimension(); ++j) {
        eff.lo[j] = std::max(region.lo[j], f.support_center[j] - f.support_radius);
        eff.hi[j] = std::min(region.hi[j], f.support_center[j] + f.support_radius);
        if (!(eff.lo[j] < eff.hi[j])) return 0.0;
    }
    auto integrand = [&](const Vec& x) {
        const double v = f.value(x);
        const double m = field.critical_radius(x);
        return v * v * m * m;
    };
    return field.potential_measure().measure().integrate(integrand, eff, tol).value;
}

/// The frozen 40-function family (rank one): 20 translated Gaussians,
/// 10 Gaussian-times-polynomial, 10 two-bump profiles.
inline std::vector<SmoothField> fp_standard_family() {
    std::vector<SmoothField> fam;
    int idx = 0;
    auto tag = [&idx](SmoothField f, const char* prefix) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%02d", prefix, idx++);
        f.id = buf;
        return f;
    };
    for (double a : {1.0, 2.0}) {
        for (int i = 0; i < 10; ++i) {
            const double c = 8.0 + 12.0 * i / 9.0;
            fam.push_back(tag(fields::gaussian(make_vec({c}), a), "g"));
        }
    }
    idx = 0;
    for (int i = 0; i < 5; ++i) {
        const double c = 2.5 * i;
        fam.push_back(tag(fields::gaussian_poly(make_vec({c}), 1.2, {0.0, 1.0}), "p"));
        fam.push_back(tag(fields::gaussian_poly(make_vec({c}), 1.2, {1.0, 0.0, 1.0}), "p"));
    }
    idx = 0;
    for (int i = 0; i < 5; ++i) {
        const double c = 2.0 + 4.0 * i;
        for (double a : {0.8, 1.6})
            fam.push_back(tag(fields::two_bump(make_vec({c - 1.2}), make_vec({c + 1.2}), a), "b"));
    }
    return fam;
}

inline constexpr const char* kFpFamilyVersion = "fp-family-v1";

/// Per-function (lhs, rhs = Q(f,f), ratio); optional frozen regression bound.
inline FPReport fp_verify(std::span<const SmoothField> family, const PotentialMeasure& pm,
                          const CriticalRadiusField& field, const Box& region,
                          std::optional<double> c_frozen = std::nullopt, double tol = 1e-6) {
    if (family.empty()) throw std::invalid_argument("empty test family");
    FPReport rep;
    rep.family_version = kFpFamilyVersion;
    const RootSystem& rs = pm.measure().context();
    for (const SmoothField& f : family) {
        FPRow row;
        row.f_id = f.id;
        row.lhs = fp_lhs(f, field, region, tol);
        Box eff = region;
        for (int j = 0; j < region.dimension(); ++j) {
            eff.lo[j] = std::max(region.lo[j], f.support_center[j] - f.support_radius);
            eff.hi[j] = std::min(region.hi[j], f.support_center[j] + f.support_radius);
        }
        row.rhs = quadratic_form(rs, f, pm, eff, tol);
        row.ratio = row.lhs / row.rhs;
        if (c_frozen && row.ratio > 10.0 * *c_frozen)
            throw RatioUnbounded("Fefferman-Phong ratio " + std::to_string(row.ratio) +
                                 " exceeds 10x the frozen constant for " + f.id);
        rep.empirical_constant = std::max(rep.empirical_constant, row.ratio);
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

/// w-measure of E_eps = {y in Q* : V(y) <= eps d(Q)^{-2}} (rank one: exact
/// interval decomposition of the sublevel set by scan + bisection).
inline double e_set_measure(const PotentialMeasure& pm, const DyadicCube& q, double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must lie in (0,1]");
    const Box star = q.dilated(1);
    if (star.dimension() != 1)
        throw std::invalid_argument("sublevel-set measurement is a rank-one diagnostic");
    const double level = eps / (q.side * q.side);
    const auto& V = pm.potential();
    auto g = [&](double y) { return V(make_vec({y})) - level; };

    const int scan = 4096;
    const double a = star.lo[0], b = star.hi[0];
    std::vector<double> cuts{a};
    double prev = g(a);
    for (int i = 1; i <= scan; ++i) {
        const double y = a + (b - a) * i / scan;
        const double cur = g(y);
        if ((prev <= 0) != (cur <= 0)) {
            double lo = a + (b - a) * (i - 1) / scan, hi = y;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((g(lo) <= 0) != (g(mid) <= 0))
                    hi = mid;
                else
                    lo = mid;
            }
            cuts.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }
    cuts.push_back(b);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        if (g(mid) <= 0.0) {
            Box seg;
            seg.lo = make_vec({cuts[i]});
            seg.hi = make_vec({cuts[i + 1]});
            total += pm.measure().box_volume(seg);
        }
    }
    return total;
}

struct ESetSweep {
    std::vector<std::pair<double, double>> points;  // (eps, w(E_eps))
    double fitted_eta = 0.0;
    double fitted_C = 0.0;  // envelope constant against eps^eta w(Q*)
    double w_qstar = 0.0;
};

inline ESetSweep e_set_sweep(const PotentialMeasure& pm, const DyadicCube& q,
                             std::span<const double> epsilons) {
    ESetSweep sweep;
    sweep.w_qstar = pm.measure().box_volume(q.dilated(1));
    std::vector<double> lx, ly;
    for (double e : epsilons) {
        const double w = e_set_measure(pm, q, e);
        sweep.points.emplace_back(e, w);
        if (w > 0) {
            lx.push_back(std::log(e));
            ly.push_back(std::log(w));
        }
    }
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= lx.size();
        my /= lx.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        sweep.fitted_eta = sxy / sxx;
        for (const auto& [e, w] : sweep.points)
            if (w > 0)
                sweep.fitted_C =
                    std::max(sweep.fitted_C, w / (std::pow(e, sweep.fitted_eta) * sweep.w_qstar));
    }
    return sweep;
}

}  // namespace dunkl
