#pragma once

// Potential profiles V >= 0, the measure mu(A) = int_A V dw, and the
// reverse-Holder / A_p / scaling-comparison estimators.

#include "dunkl/measure.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dunkl {

struct DivisionByZeroMean : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonIntegrableNegativePower : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PotentialKind { constant, power, sqnorm, polysq, custom };

/// Closed-form potential presets. Everything tests need has a symbolic
/// oracle; arbitrary callables are allowed only through `custom`, which the
/// config layer never exposes.
class PotentialProfile {
public:
    static PotentialProfile constant(double c, double q) {
        if (c < 0) throw std::invalid_argument("constant potential must be >= 0");
        PotentialProfile p(PotentialKind::constant, {c}, q);
        p.eval_ = [c](const Vec&) { return c; };
        return p;
    }

    /// ||x||^sigma, sigma >= 0.
    static PotentialProfile power(double sigma, double q) {
        if (sigma < 0) throw std::invalid_argument("power exponent must be >= 0");
        PotentialProfile p(PotentialKind::power, {sigma}, q);
        p.eval_ = [sigma](const Vec& x) { return std::pow(x.norm(), sigma); };
        return p;
    }

    /// ||x||^2.
    static PotentialProfile sqnorm(double q) {
        PotentialProfile p(PotentialKind::sqnorm, {}, q);
        p.eval_ = [](const Vec& x) { return x.squaredNorm(); };
        return p;
    }

    /// p(x_1)^2 for a univariate polynomial p given by coefficients (low to high).
    static PotentialProfile polysq(std::vector<double> coeffs, double q) {
        if (coeffs.empty()) throw std::invalid_argument("polysq needs coefficients");
        PotentialProfile p(PotentialKind::polysq, coeffs, q);
        p.eval_ = [coeffs](const Vec& x) {
            double v = 0.0;
            for (std::size_t i = coeffs.size(); i-- > 0;) v = v * x[0] + coeffs[i];
            return v * v;
        };
        return p;
    }

    /// Arbitrary nonnegative callable; diagnostics only (not config-loadable).
    static PotentialProfile custom(std::function<double(const Vec&)> f, double q) {
        PotentialProfile p(PotentialKind::custom, {}, q);
        p.eval_ = std::move(f);
        return p;
    }

    double operator()(const Vec& x) const { return eval_(x); }
    PotentialKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    double claimed_q() const { return q_; }

    /// True when V(x) = sum_j V_j(x_j); required by the product-grid
    /// Schrodinger engine.
    bool separable() const {
        switch (kind_) {
            case PotentialKind::constant:
            case PotentialKind::sqnorm:
            case PotentialKind::polysq:
                return true;
            case PotentialKind::power:
                return false;  // handled 1D only; callers check dimension
            case PotentialKind::custom:
                return false;
        }
        return false;
    }

    /// Axis component V_j for separable kinds (constant attaches to axis 0).
    double axis_value(int axis, double u) const {
        switch (kind_) {
            case PotentialKind::constant:
                return axis == 0 ? params_[0] : 0.0;
            case PotentialKind::sqnorm:
                return u * u;
            case PotentialKind::polysq: {
                if (axis != 0) return 0.0;
                Vec x(1);
                x[0] = u;
                return eval_(x);
            }
            case PotentialKind::power: {
                Vec x(1);
                x[0] = u;
                return axis == 0 ? eval_(x) : 0.0;
            }
            case PotentialKind::custom:
                throw std::logic_error("custom potentials have no axis decomposition");
        }
        return 0.0;
    }

private:
    PotentialProfile(PotentialKind k, std::vector<double> params, double q)
        : kind_(k), params_(std::move(params)), q_(q) {
        if (!(q > 1.0)) throw std::invalid_argument("reverse Holder exponent must satisfy q > 1");
    }

    PotentialKind kind_;
    std::vector<double> params_;
    double q_;
    std::function<double(const Vec&)> eval_;
};

struct RHReport {
    double constant = 0.0;
    Ball witness;
    std::size_t excluded = 0;
    std::size_t total = 0;
};

struct ApReport {
    double constant = 0.0;
    std::vector<std::size_t> skipped_cubes;
};

struct ScalingComparison {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

class PotentialMeasure {
public:
    PotentialMeasure(PotentialProfile profile, WeightedMeasure measure)
        : profile_(std::move(profile)), measure_(std::move(measure)) {
        const double nh = measure_.context().homogeneous_dimension();
        const double qmin = std::max(1.0, nh / 2.0);
        if (!(profile_.claimed_q() > qmin))
            throw std::invalid_argument("claimed q=" + std::to_string(profile_.claimed_q()) +
                                        " must exceed max(1, N_hom/2)=" + std::to_string(qmin));
    }

    const PotentialProfile& potential() const { return profile_; }
    const WeightedMeasure& measure() const { return measure_; }

    /// mu(A) = int_A V dw
    double mu(const Region& region, double tol) const {
        return measure_.integrate([this](const Vec& x) { return profile_(x); }, region, tol).value;
    }
    double mu(const Region& region) const { return mu(region, measure_.quad_tolerance()); }

    /// Max over the sample of (avg_B V^q)^{1/q} / avg_B V, averages in dw.
    /// Balls with mu(B)=0 are excluded and counted; >10% exclusions throws.
    RHReport reverse_holder_constant(double q, std::span<const Ball> balls) const {
        if (!(q > 1.0)) throw std::invalid_argument("reverse Holder estimator needs q > 1");
        if (balls.empty()) throw std::invalid_argument("empty ball sample");
        RHReport rep;
        rep.total = balls.size();
        for (const Ball& b : balls) {
            const double wb = measure_.ball_volume(b.center, b.radius);
            const double mb = mu(b);
            if (!(mb > 1e-280 * std::max(1.0, wb))) {
                ++rep.excluded;
                continue;
            }
            const double avg_v = mb / wb;
            const double avg_vq =
                measure_.integrate([&](const Vec& x) { return std::pow(profile_(x), q); }, b,
                                   measure_.quad_tolerance())
                    .value /
                wb;
            const double ratio = std::pow(avg_vq, 1.0 / q) / avg_v;
            if (ratio > rep.constant) {
                rep.constant = ratio;
                rep.witness = b;
            }
        }
        if (10 * rep.excluded > rep.total)
            throw DivisionByZeroMean("more than 10% of sample balls have mu(B)=0");
        return rep;
    }

    double mu_doubling_constant(std::span<const std::pair<Vec, double>> sample) const {
        if (sample.empty()) throw std::invalid_argument("empty sample");
        double worst = 0.0;
        for (const auto& [x, r] : sample) {
            const double m1 = mu(Ball{x, r});
            if (!(m1 > 0)) throw DivisionByZeroMean("mu(B(x,r)) = 0 in doubling sample");
            worst = std::max(worst, mu(Ball{x, 2.0 * r}) / m1);
        }
        return worst;
    }

    /// Max over cubes of (avg_Q V) (avg_Q V^{-1/(p-1)})^{p-1}.
    ApReport ap_diagnostic(double p, std::span<const Box> cubes, bool skip_nonintegrable) const {
        if (!(p > 1.0)) throw std::invalid_argument("A_p diagnostic needs p > 1");
        ApReport rep;
        const double expnt = -1.0 / (p - 1.0);
        for (std::size_t i = 0; i < cubes.size(); ++i) {
            const Box& q = cubes[i];
            const double wq = measure_.box_volume(q);
            const double avg_v = mu(q) / wq;
            double avg_neg = 0.0;
            try {
                avg_neg = measure_.integrate(
                              [&](const Vec& x) { return std::pow(profile_(x), expnt); }, q,
                              measure_.quad_tolerance())
                              .value /
                          wq;
            } catch (const ToleranceNotReached&) {
                if (skip_nonintegrable) {
                    rep.skipped_cubes.push_back(i);
                    continue;
                }
                throw NonIntegrableNegativePower("V^{-1/(p-1)} not dw-integrable on cube " +
                                                 std::to_string(i));
            } catch (const NonFiniteIntegrand&) {
                if (skip_nonintegrable) {
                    rep.skipped_cubes.push_back(i);
                    continue;
                }
                throw NonIntegrableNegativePower("V^{-1/(p-1)} non-finite on cube " +
                                                 std::to_string(i));
            }
            rep.constant = std::max(rep.constant, avg_v * std::pow(avg_neg, p - 1.0));
        }
        return rep;
    }

    /// Two-radius scaling comparison: lhs = r1^2 avg_{B(x,r1)} V,
    /// rhs = (r1/r2)^{2 - N_hom/q} r2^2 avg_{B(x,r2)} V.
    ScalingComparison scaling_comparison(const Vec& x, double r1, double r2) const {
        if (!(0 < r1 && r1 < r2)) throw std::invalid_argument("need 0 < r1 < r2");
        const double nh = measure_.context().homogeneous_dimension();
        const double q = profile_.claimed_q();
        ScalingComparison sc;
        sc.lhs = r1 * r1 * mu(Ball{x, r1}) / measure_.ball_volume(x, r1);
        sc.rhs = std::pow(r1 / r2, 2.0 - nh / q) * r2 * r2 * mu(Ball{x, r2}) /
                 measure_.ball_volume(x, r2);
        sc.ratio = sc.lhs / sc.rhs;
        return sc;
    }

private:
    PotentialProfile profile_;
    WeightedMeasure measure_;
};

/// Deterministic lattice-by-dyadic-radii ball sweep shared by the RH and
/// doubling diagnostics.
inline std::vector<Ball> make_ball_sweep(const Box& domain, int centers_per_axis,
                                         std::span<const double> radii) {
    std::vector<Ball> out;
    const int n = domain.dimension();
    std::vector<int> idx(n, 0);
    const auto widths = domain.widths();
    while (true) {
        Vec c(n);
        for (int j = 0; j < n; ++j)
            c[j] = domain.lo[j] + (idx[j] + 0.5) * widths[j] / centers_per_axis;
        for (double r : radii) out.push_back(Ball{c, r});
        int j = 0;
        for (; j < n; ++j) {
            if (++idx[j] < centers_per_axis) break;
            idx[j] = 0;
        }
        if (j == n) break;
    }
    return out;
}

}  // namespace dunkl
