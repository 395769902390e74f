#pragma once

// The weight w, the measure dw, cubature over balls and boxes, and
// doubling/growth diagnostics.
//
// Boxes are integrated by iterated adaptive Gauss-Kronrod with exact split
// points injected along the innermost axis wherever a root hyperplane
// crosses the integration line (w is non-smooth there). Balls use polar /
// spherical coordinates with analytic angular splits, which keeps the
// integrand piecewise smooth.

#include "dunkl/geometry.hpp"
#include "dunkl/quadrature.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

namespace dunkl {

using Region = std::variant<Ball, Box>;

struct DoublingReport {
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    double floor_2N = 0.0;    // 2^N
    double ceiling_2Nh = 0.0; // 2^{homogeneous dimension}
};

class WeightedMeasure {
public:
    explicit WeightedMeasure(RootSystem ctx, double quad_tolerance = 1e-8,
                             int max_subdivisions = 22)
        : ctx_(std::move(ctx)), quad_tol_(quad_tolerance), max_subdiv_(max_subdivisions) {}

    const RootSystem& context() const { return ctx_; }
    double quad_tolerance() const { return quad_tol_; }

    /// w(x) = prod_{alpha in R} |<x,alpha>|^{k(alpha)}
    double weight(const Vec& x) const {
        double w = 1.0;
        const auto& roots = ctx_.roots();
        for (std::size_t i = 0; i < roots.size(); ++i) {
            const double k = ctx_.multiplicity(i);
            if (k == 0.0) continue;
            const double u = std::abs(x.dot(roots[i]));
            if (k == 1.0)
                w *= u;
            else if (k == 2.0)
                w *= u * u;
            else
                w *= std::pow(u, k);
        }
        return w;
    }

    /// Integral of f against dw over a ball or box, to relative tolerance tol.
    template <class F>
    quad::Result integrate(F&& f, const Region& region, double tol) const {
        if (const Box* b = std::get_if<Box>(&region)) return integrate_box(f, *b, tol);
        return integrate_ball(f, std::get<Ball>(region), tol);
    }

    quad::Result integrate(const std::function<double(const Vec&)>& f, const Region& region) const {
        return integrate(f, region, quad_tol_);
    }

    double ball_volume(const Vec& x, double r) const {
        return integrate([](const Vec&) { return 1.0; }, Ball{x, r}, quad_tol_).value;
    }

    double box_volume(const Box& b) const {
        return integrate([](const Vec&) { return 1.0; }, b, quad_tol_).value;
    }

    /// Quadrature-free two-sided surrogate for w(B(x,r)):
    /// r^N prod_{alpha}(|<x,alpha>| + r)^{k(alpha)}.
    double surrogate_ball_volume(const Vec& x, double r) const {
        double v = std::pow(r, ctx_.dimension());
        const auto& roots = ctx_.roots();
        for (std::size_t i = 0; i < roots.size(); ++i) {
            const double k = ctx_.multiplicity(i);
            if (k == 0.0) continue;
            v *= std::pow(std::abs(x.dot(roots[i])) + r, k);
        }
        return v;
    }

    DoublingReport doubling_diagnostic(std::span<const std::pair<Vec, double>> sample) const {
        DoublingReport rep;
        rep.floor_2N = std::pow(2.0, ctx_.dimension());
        rep.ceiling_2Nh = std::pow(2.0, ctx_.homogeneous_dimension());
        for (const auto& [x, r] : sample) {
            const double ratio = ball_volume(x, 2.0 * r) / ball_volume(x, r);
            rep.min_ratio = std::min(rep.min_ratio, ratio);
            rep.max_ratio = std::max(rep.max_ratio, ratio);
        }
        return rep;
    }

    /// Split points along the axis-`axis` line through `point` where a root
    /// hyperplane is crossed.
    std::vector<double> line_splits(const Vec& point, int axis) const {
        std::vector<double> out;
        const auto& roots = ctx_.roots();
        for (std::size_t i = 0; i < roots.size(); ++i) {
            if (ctx_.multiplicity(i) == 0.0) continue;
            const Vec& a = roots[i];
            if (std::abs(a[axis]) < 1e-13) continue;
            out.push_back(point[axis] - point.dot(a) / a[axis]);
        }
        return out;
    }

private:
    template <class F>
    quad::Result integrate_box(F&& f, const Box& box, double tol) const {
        const int n = box.dimension();
        quad::Options opt;
        opt.rel_tol = tol;
        opt.max_depth = max_subdiv_;
        if (n == 1) {
            Vec p(1);
            auto g = [&](double x) {
                p[0] = x;
                return f(static_cast<const Vec&>(p)) * weight(p);
            };
            return quad::gk_adaptive(g, box.lo[0], box.hi[0], line_splits(box.center(), 0), opt);
        }
        // Iterated: integrate the innermost axis (0) for fixed outer coords,
        // recursively wrapped by the outer axes.
        return integrate_box_rec(f, box, n - 1, box.center(), tol);
    }

    template <class F>
    quad::Result integrate_box_rec(F&& f, const Box& box, int axis, Vec point, double tol) const {
        quad::Options opt;
        opt.rel_tol = tol;
        opt.max_depth = max_subdiv_;
        if (axis == 0) {
            auto g = [&](double x) {
                point[0] = x;
                return f(static_cast<const Vec&>(point)) * weight(point);
            };
            return quad::gk_adaptive(g, box.lo[0], box.hi[0], line_splits(point, 0), opt);
        }
        std::size_t inner_evals = 0;
        double inner_err_rel = 0.0;
        auto g = [&](double x) {
            point[axis] = x;
            auto r = integrate_box_rec(f, box, axis - 1, point, tol * 0.25);
            inner_evals += r.evals;
            if (std::abs(r.value) > 0)
                inner_err_rel = std::max(inner_err_rel, r.est_error / std::abs(r.value));
            return r.value;
        };
        // Perpendicular roots give axis-aligned hyperplanes: exact splits here too.
        std::vector<double> splits;
        const auto& roots = ctx_.roots();
        for (std::size_t i = 0; i < roots.size(); ++i) {
            const Vec& a = roots[i];
            if (ctx_.multiplicity(i) == 0.0) continue;
            bool axis_only = std::abs(a[axis]) > 1e-13;
            for (int j = 0; j < box.dimension() && axis_only; ++j)
                if (j != axis && std::abs(a[j]) > 1e-13) axis_only = false;
            if (axis_only) splits.push_back(0.0);
        }
        auto res = quad::gk_adaptive(g, box.lo[axis], box.hi[axis], splits, opt);
        res.evals = inner_evals;
        res.est_error += inner_err_rel * std::abs(res.value);
        return res;
    }

    template <class F>
    quad::Result integrate_ball(F&& f, const Ball& ball, double tol) const {
        const int n = static_cast<int>(ball.center.size());
        quad::Options opt;
        opt.rel_tol = tol;
        opt.max_depth = max_subdiv_;
        if (n == 1) {
            Vec p(1);
            auto g = [&](double x) {
                p[0] = x;
                return f(static_cast<const Vec&>(p)) * weight(p);
            };
            return quad::gk_adaptive(g, ball.center[0] - ball.radius, ball.center[0] + ball.radius,
                                     line_splits(ball.center, 0), opt);
        }
        if (n == 2) return integrate_disk(f, ball, tol);
        if (n == 3) return integrate_ball3(f, ball, tol);
        throw std::logic_error("quadrature-backed integration is capped at dimension 3");
    }

    // Radii at which the sphere around x0 becomes tangent to a root hyperplane.
    std::vector<double> radial_splits(const Vec& x0) const {
        std::vector<double> out;
        const auto& roots = ctx_.roots();
        for (std::size_t i = 0; i < roots.size(); ++i) {
            if (ctx_.multiplicity(i) == 0.0) continue;
            out.push_back(std::abs(x0.dot(roots[i])) / roots[i].norm());
        }
        return out;
    }

    std::vector<double> angular_splits(const Vec& x0, double rho) const {
        std::vector<double> out;
        const auto& roots = ctx_.roots();
        const double twopi = 2.0 * std::numbers::pi;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            if (ctx_.multiplicity(i) == 0.0) continue;
            const Vec& a = roots[i];
            const double amp = rho * std::hypot(a[0], a[1]);
            if (amp < 1e-300) continue;
            const double cosv = -x0.dot(a) / amp;
            if (std::abs(cosv) > 1.0) continue;
            const double phi = std::atan2(a[1], a[0]);
            const double d = std::acos(cosv);
            for (double th : {phi + d, phi - d}) {
                th = std::fmod(th, twopi);
                if (th < 0) th += twopi;
                out.push_back(th);
            }
        }
        return out;
    }

    template <class F>
    quad::Result integrate_disk(F&& f, const Ball& ball, double tol) const {
        quad::Options outer_opt, inner_opt;
        outer_opt.rel_tol = tol;
        outer_opt.max_depth = max_subdiv_;
        inner_opt.rel_tol = tol * 0.25;
        inner_opt.max_depth = max_subdiv_;
        std::size_t evals = 0;
        Vec p(2);
        auto ring = [&](double rho) {
            auto g = [&](double th) {
                p[0] = ball.center[0] + rho * std::cos(th);
                p[1] = ball.center[1] + rho * std::sin(th);
                return f(static_cast<const Vec&>(p)) * weight(p);
            };
            auto r = quad::gk_adaptive(g, 0.0, 2.0 * std::numbers::pi,
                                       angular_splits(ball.center, rho), inner_opt);
            evals += r.evals;
            return rho * r.value;
        };
        auto res = quad::gk_adaptive(ring, 0.0, ball.radius, radial_splits(ball.center), outer_opt);
        res.evals = evals;
        res.est_error += tol * 0.25 * std::abs(res.value);
        return res;
    }

    template <class F>
    quad::Result integrate_ball3(F&& f, const Ball& ball, double tol) const {
        quad::Options o1, o2, o3;
        o1.rel_tol = tol;
        o2.rel_tol = tol * 0.25;
        o3.rel_tol = tol * 0.1;
        o1.max_depth = o2.max_depth = o3.max_depth = max_subdiv_;
        std::size_t evals = 0;
        Vec p(3);
        auto shell = [&](double rho) {
            auto lat = [&](double phi) {
                const double sp = std::sin(phi), cp = std::cos(phi);
                auto lon = [&](double th) {
                    p[0] = ball.center[0] + rho * sp * std::cos(th);
                    p[1] = ball.center[1] + rho * sp * std::sin(th);
                    p[2] = ball.center[2] + rho * cp;
                    return f(static_cast<const Vec&>(p)) * weight(p);
                };
                auto r = quad::gk_adaptive(lon, 0.0, 2.0 * std::numbers::pi, o3);
                evals += r.evals;
                return sp * r.value;
            };
            auto r = quad::gk_adaptive(lat, 0.0, std::numbers::pi, o2);
            return rho * rho * r.value;
        };
        auto res = quad::gk_adaptive(shell, 0.0, ball.radius, radial_splits(ball.center), o1);
        res.evals = evals;
        res.est_error += tol * 0.3 * std::abs(res.value);
        return res;
    }

    RootSystem ctx_;
    double quad_tol_;
    int max_subdiv_;
};

}  // namespace dunkl
