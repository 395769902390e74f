#pragma once

// The auxiliary function m(x): reciprocal of the largest radius at which the
// scaled potential mass r^2 avg_{B(x,r)} V stays <= 1, plus empirical growth
// diagnostics for its Harnack-type comparability.

#include "dunkl/potential.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace dunkl {

struct BracketExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GrowthDiagnostics {
    double comparability_C = 1.0;  // two-sided constant on pairs with ||x-y|| < 1/m(x)
    double upper_C = 1.0;          // envelope constant of the fitted upper growth law
    double upper_kappa = 0.0;      // fitted growth exponent
    double lower_C = 1.0;          // envelope constant for the decay law with kappa/(1+kappa)
};

class CriticalRadiusField {
public:
    struct MPoint {
        double m = 0.0;
        double r_star = 0.0;
        double F_at_rstar = 0.0;
    };

    explicit CriticalRadiusField(PotentialMeasure pm, double r_min = 1e-4, double r_max = 1e4,
                                 double bisection_tol = 1e-6)
        : pm_(std::move(pm)), r_min_(r_min), r_max_(r_max), tol_(bisection_tol) {}

    const PotentialMeasure& potential_measure() const { return pm_; }
    double bisection_tol() const { return tol_; }

    /// F(x,r) = r^2 mu(B(x,r)) / w(B(x,r))
    double stopping_functional(const Vec& x, double r) const {
        const double wb = pm_.measure().ball_volume(x, r);
        return r * r * pm_.mu(Ball{x, r}) / wb;
    }

    double critical_radius(const Vec& x) const { return detail(x).m; }

    MPoint detail(const Vec& x) const {
        {
            std::lock_guard lock(mu_);
            auto it = cache_.find(quantize(x));
            if (it != cache_.end()) return it->second;
        }
        MPoint mp = solve(x);
        {
            std::lock_guard lock(mu_);
            cache_[quantize(x)] = mp;  // last write wins; values agree to tolerance
        }
        return mp;
    }

    std::size_t cache_size() const {
        std::lock_guard lock(mu_);
        return cache_.size();
    }

    /// Measured growth-law constants over a point-pair sample:
    /// (a) two-sided comparability for close pairs, (b) upper growth law with
    /// regressed exponent kappa, (c) lower decay law with kappa/(1+kappa).
    GrowthDiagnostics shen_growth_diagnostics(
        std::span<const std::pair<Vec, Vec>> pairs) const {
        if (pairs.empty()) throw std::invalid_argument("empty pair sample");
        GrowthDiagnostics g;
        std::vector<double> us, zs;
        for (const auto& [x, y] : pairs) {
            const double mx = critical_radius(x);
            const double my = critical_radius(y);
            const double dist = (x - y).norm();
            if (dist < 1.0 / mx)
                g.comparability_C = std::max(g.comparability_C, std::max(mx / my, my / mx));
            us.push_back(std::log1p(mx * dist));
            zs.push_back(std::log(my / mx));
        }
        // The growth law only binds where m increases: regress on that branch.
        double suu = 0.0, suz = 0.0;
        for (std::size_t i = 0; i < us.size(); ++i) {
            if (zs[i] <= 0.0 || us[i] < 0.05) continue;
            suu += us[i] * us[i];
            suz += us[i] * zs[i];
        }
        g.upper_kappa = suu > 0 ? std::max(0.0, suz / suu) : 0.0;
        for (std::size_t i = 0; i < us.size(); ++i)
            g.upper_C = std::max(g.upper_C, std::exp(zs[i] - g.upper_kappa * us[i]));
        const double dec = g.upper_kappa / (1.0 + g.upper_kappa);
        for (std::size_t i = 0; i < us.size(); ++i)
            g.lower_C = std::max(g.lower_C, std::exp(-zs[i] - dec * us[i]));
        return g;
    }

private:
    // Geometric scan (ratio 2) for the first up-crossing of F through 1,
    // continued two octaves past it; the bracket starts at the last sub-unit
    // radius seen, guarding against re-crossings.
    MPoint solve(const Vec& x) const {
        double r = r_min_;
        double last_below = -1.0;
        int remaining = 0;
        bool crossed = false;
        while (r <= r_max_ * (1 + 1e-12)) {
            const double F = stopping_functional(x, r);
            if (F <= 1.0) last_below = r;
            if (!crossed && F > 1.0) {
                crossed = true;
                remaining = 2;
            } else if (crossed && --remaining == 0) {
                break;
            }
            r *= 2.0;
        }
        if (!crossed || last_below < 0)
            throw BracketExhausted("no up-crossing of the stopping functional in the bracket");

        double lo = last_below, hi = std::min(2.0 * last_below, r_max_);
        while (hi < r_max_ && stopping_functional(x, hi) <= 1.0) {
            lo = hi;
            hi = std::min(2.0 * hi, r_max_);
        }
        while ((hi - lo) / lo > tol_) {
            const double mid = 0.5 * (lo + hi);
            if (stopping_functional(x, mid) <= 1.0)
                lo = mid;
            else
                hi = mid;
        }
        MPoint mp;
        mp.r_star = lo;
        mp.m = 1.0 / lo;
        mp.F_at_rstar = stopping_functional(x, lo);
        return mp;
    }

    using Key = std::vector<std::int64_t>;
    Key quantize(const Vec& x) const {
        Key k(x.size());
        for (Eigen::Index j = 0; j < x.size(); ++j)
            k[j] = static_cast<std::int64_t>(std::llround(x[j] / 1e-9));
        return k;
    }

    PotentialMeasure pm_;
    double r_min_, r_max_, tol_;
    mutable std::mutex mu_;
    mutable std::map<Key, MPoint> cache_;
};

}  // namespace dunkl
