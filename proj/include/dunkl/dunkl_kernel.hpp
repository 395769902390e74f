#pragma once

// The rank-one Dunkl kernel E_k(x,y): the unique analytic solution of
// T f = y f, f(0) = 1. In rank one E_k(x,y) is a function of the product
// s = x*y alone, E_k(x,y) = Etilde(s), with series coefficients
//   c_0 = 1, c_{2n+1} = c_{2n}/(2n+1+2k), c_{2n+2} = c_{2n+1}/(2n+2).
//
// Real arguments: the even/odd system u' = v, v' = u - 2k v/s is integrated
// in the exponentially scaled variables e = (u+v)e^{-s}, p = (u-v)e^{-s},
//   e' = -(k/s)(e - p),   p' = -2p + (k/s)(e - p),
// which is non-oscillatory and overflow-free; Etilde(s) = e(s)e^s and
// Etilde(-s) = p(s)e^s for s >= 0.
//
// Imaginary spectral arguments: Etilde(is) = A(s) + iB(s) solves the 2x2
// real system A' = -B, B' = A - 2kB/s; A, B are tabulated once by RK4 and
// evaluated by cubic Hermite interpolation (derivatives from the ODE).

#include "dunkl/quadrature.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace dunkl {

struct OdeStepFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class DunklKernel1D {
public:
    explicit DunklKernel1D(double k, double ode_tol = 1e-10, double initial_table_max = 64.0)
        : k_(k), ode_tol_(ode_tol) {
        if (k < 0) throw std::invalid_argument("multiplicity must be >= 0");
        norm_ = compute_normalization();
        table_.reserve(1 << 16);
        init_table();
        ensure_table(initial_table_max);
    }

    double multiplicity() const { return k_; }

    /// c_k = int e^{-x^2/2} dw(x), by quadrature.
    double normalization() const { return norm_; }

    /// E(x,y) for real arguments; |x|,|y| <= 50 (overflow guard).
    double eval(double x, double y) const {
        if (std::abs(x) > 50.0 || std::abs(y) > 50.0)
            throw std::invalid_argument("Dunkl kernel argument exceeds the |x|,|y| <= 50 guard");
        return eval_product(x * y);
    }

    /// Etilde at a real product argument.
    double eval_product(double s) const {
        const double as = std::abs(s);
        if (as <= kSeriesRadius) return series(s);
        auto [e, p] = integrate_real(as);
        const double val = (s > 0 ? e : p) * std::exp(as);
        if (!std::isfinite(val) && std::isfinite(e) && std::isfinite(p) && as < 700.0)
            throw OdeStepFailure("scaled kernel integration lost finiteness");
        return val;
    }

    /// (A,B) with Etilde(i s) = A + iB. Table-backed; extends on demand.
    std::pair<double, double> eval_imag(double s) const {
        const double as = std::abs(s);
        std::pair<double, double> ab;
        if (as <= kSeriesRadius) {
            ab = series_imag(as);
        } else {
            ensure_table(as);
            ab = interpolate(as);
        }
        if (s < 0) ab.second = -ab.second;
        return ab;
    }

    /// Power-series oracle (real argument).
    double series(double s, int terms = 250) const {
        double c = 1.0, sp = 1.0, tot = 0.0;
        for (int m = 0; m < terms; ++m) {
            tot += c * sp;
            sp *= s;
            c /= (m % 2 == 0) ? (m + 1 + 2.0 * k_) : (m + 1.0);
        }
        return tot;
    }

    /// Power-series oracle at an imaginary argument: (A,B).
    std::pair<double, double> series_imag(double s, int terms = 250) const {
        double c = 1.0, sp = 1.0, A = 0.0, B = 0.0;
        int quarter = 0;  // i^m cycle
        for (int m = 0; m < terms; ++m) {
            const double term = c * sp;
            switch (quarter) {
                case 0: A += term; break;
                case 1: B += term; break;
                case 2: A -= term; break;
                case 3: B -= term; break;
            }
            quarter = (quarter + 1) & 3;
            sp *= s;
            c /= (m % 2 == 0) ? (m + 1 + 2.0 * k_) : (m + 1.0);
        }
        return {A, B};
    }

    double table_step() const { return kStep; }
    double table_max() const {
        std::lock_guard lock(mu_);
        return kSeriesRadius + (table_.size() - 1) * kStep;
    }

    /// Extend the (A,B) table to cover |s| <= smax.
    void ensure_table(double smax) const {
        std::lock_guard lock(mu_);
        double s = kSeriesRadius + (table_.size() - 1) * kStep;
        if (s >= smax) return;
        double A = table_.back().first, B = table_.back().second;
        while (s < smax) {
            rk4_imag(s, kStep, A, B);
            s += kStep;
            if (!std::isfinite(A) || !std::isfinite(B))
                throw OdeStepFailure("imaginary-argument kernel table diverged");
            table_.emplace_back(A, B);
        }
    }

private:
    static constexpr double kSeriesRadius = 0.5;
    static constexpr double kStep = 1.0 / 256.0;

    double compute_normalization() const {
        quad::Options opt;
        opt.rel_tol = 1e-12;
        opt.max_depth = 40;
        auto r = quad::gk_adaptive(
            [this](double x) {
                return std::exp(-x * x / 2.0) * std::pow(2.0, k_) * std::pow(x, 2.0 * k_);
            },
            0.0, 14.0, opt);
        return 2.0 * r.value;
    }

    void init_table() {
        table_.clear();
        table_.push_back(series_imag(kSeriesRadius));
    }

    void rk4_imag(double s, double h, double& A, double& B) const {
        auto f = [this](double sv, double a, double b, double& da, double& db) {
            da = -b;
            db = a - 2.0 * k_ * b / sv;
        };
        double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
        f(s, A, B, k1a, k1b);
        f(s + h / 2, A + h / 2 * k1a, B + h / 2 * k1b, k2a, k2b);
        f(s + h / 2, A + h / 2 * k2a, B + h / 2 * k2b, k3a, k3b);
        f(s + h, A + h * k3a, B + h * k3b, k4a, k4b);
        A += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
        B += h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b);
    }

    std::pair<double, double> interpolate(double s) const {
        std::lock_guard lock(mu_);
        const double off = (s - kSeriesRadius) / kStep;
        std::size_t i = static_cast<std::size_t>(off);
        if (i + 1 >= table_.size()) i = table_.size() - 2;
        const double t = off - static_cast<double>(i);
        const double s0 = kSeriesRadius + i * kStep;
        const double s1 = s0 + kStep;
        const auto [a0, b0] = table_[i];
        const auto [a1, b1] = table_[i + 1];
        // Hermite data from the ODE itself
        const double da0 = -b0, db0 = a0 - 2 * k_ * b0 / s0;
        const double da1 = -b1, db1 = a1 - 2 * k_ * b1 / s1;
        auto hermite = [t](double p0, double m0, double p1, double m1, double h) {
            const double t2 = t * t, t3 = t2 * t;
            return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * h * m0 +
                   (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * h * m1;
        };
        return {hermite(a0, da0, a1, da1, kStep), hermite(b0, db0, b1, db1, kStep)};
    }

    // scaled real system from the series radius out to s
    std::pair<double, double> integrate_real(double s) const {
        const double u0 = 0.5 * (series(kSeriesRadius) + series(-kSeriesRadius));
        const double v0 = 0.5 * (series(kSeriesRadius) - series(-kSeriesRadius));
        const double damp = std::exp(-kSeriesRadius);
        double e = (u0 + v0) * damp, p = (u0 - v0) * damp;
        double sv = kSeriesRadius;
        auto f = [this](double scur, double ev, double pv, double& de, double& dp) {
            const double mix = k_ / scur * (ev - pv);
            de = -mix;
            dp = -2.0 * pv + mix;
        };
        while (sv < s) {
            double h = sv < 20.0 ? 0.002 : (sv < 100.0 ? 0.01 : 0.05);
            if (sv + h > s) h = s - sv;
            double k1e, k1p, k2e, k2p, k3e, k3p, k4e, k4p;
            f(sv, e, p, k1e, k1p);
            f(sv + h / 2, e + h / 2 * k1e, p + h / 2 * k1p, k2e, k2p);
            f(sv + h / 2, e + h / 2 * k2e, p + h / 2 * k2p, k3e, k3p);
            f(sv + h, e + h * k3e, p + h * k3p, k4e, k4p);
            e += h / 6 * (k1e + 2 * k2e + 2 * k3e + k4e);
            p += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
            sv += h;
            if (!std::isfinite(e) || !std::isfinite(p))
                throw OdeStepFailure("real-argument kernel integration diverged");
        }
        return {e, p};
    }

    double k_;
    double ode_tol_;
    double norm_ = 0.0;
    mutable std::mutex mu_;
    mutable std::vector<std::pair<double, double>> table_;
};

}  // namespace dunkl
