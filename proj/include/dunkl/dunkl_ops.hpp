#pragma once

// Dunkl operators on smooth preset fields, the Dunkl Laplacian, the
// Schrodinger quadratic form, and the Leibniz-rule residual.
//
// Difference quotients switch to Taylor form near root hyperplanes, where
// cancellation destroys the naive quotient. First-order quotients switch at
// |<alpha,x>| < 1e-8 (1+||x||); the second-order quotient in the Laplacian
// switches earlier (1e-5) because its cancellation error scales like
// eps/<alpha,x>^2.

#include "dunkl/potential.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>

namespace dunkl {

struct TruncationTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A smooth function with analytic gradient and Hessian.
struct SmoothField {
    std::string id;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
    Vec support_center;
    double support_radius = std::numeric_limits<double>::infinity();

    double operator()(const Vec& x) const { return value(x); }
};

namespace fields {

/// amplitude * exp(-a ||x - c||^2)
inline SmoothField gaussian(const Vec& c, double a, double amplitude = 1.0) {
    SmoothField f;
    f.id = "gaussian(a=" + std::to_string(a) + ")";
    f.support_center = c;
    f.support_radius = std::sqrt(34.6 / a);
    f.value = [c, a, amplitude](const Vec& x) {
        return amplitude * std::exp(-a * (x - c).squaredNorm());
    };
    f.gradient = [c, a, amplitude](const Vec& x) {
        const Vec d = x - c;
        return Vec((-2.0 * a * amplitude * std::exp(-a * d.squaredNorm())) * d);
    };
    f.hessian = [c, a, amplitude](const Vec& x) {
        const Vec d = x - c;
        const double v = amplitude * std::exp(-a * d.squaredNorm());
        Mat h = 4.0 * a * a * v * (d * d.transpose());
        h -= 2.0 * a * v * Mat::Identity(x.size(), x.size());
        return h;
    };
    return f;
}

/// Univariate polynomial in x[0], coefficients low to high. Not compactly
/// supported; for quadratic forms pair it with a Gaussian.
inline SmoothField polynomial(std::vector<double> coeffs, int dim = 1) {
    SmoothField f;
    f.id = "poly(deg=" + std::to_string(coeffs.size() - 1) + ")";
    f.support_center = Vec::Zero(dim);
    auto horner = [coeffs](double u, int deriv) {
        std::vector<double> c = coeffs;
        for (int d = 0; d < deriv; ++d) {
            for (std::size_t i = 1; i < c.size(); ++i) c[i - 1] = c[i] * static_cast<double>(i);
            if (!c.empty()) c.pop_back();
            if (c.empty()) return 0.0;
        }
        double v = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) v = v * u + c[i];
        return v;
    };
    f.value = [horner](const Vec& x) { return horner(x[0], 0); };
    f.gradient = [horner](const Vec& x) {
        Vec g = Vec::Zero(x.size());
        g[0] = horner(x[0], 1);
        return g;
    };
    f.hessian = [horner](const Vec& x) {
        Mat h = Mat::Zero(x.size(), x.size());
        h(0, 0) = horner(x[0], 2);
        return h;
    };
    return f;
}

inline SmoothField product(const SmoothField& f, const SmoothField& g) {
    SmoothField p;
    p.id = f.id + "*" + g.id;
    p.support_center = f.support_center;
    p.support_radius = std::min(f.support_radius, g.support_radius);
    p.value = [f, g](const Vec& x) { return f.value(x) * g.value(x); };
    p.gradient = [f, g](const Vec& x) {
        return Vec(f.gradient(x) * g.value(x) + g.gradient(x) * f.value(x));
    };
    p.hessian = [f, g](const Vec& x) {
        const Vec gf = f.gradient(x), gg = g.gradient(x);
        Mat h = f.hessian(x) * g.value(x) + g.hessian(x) * f.value(x);
        h += gf * gg.transpose() + gg * gf.transpose();
        return h;
    };
    return p;
}

inline SmoothField sum(const SmoothField& f, const SmoothField& g) {
    SmoothField s;
    s.id = f.id + "+" + g.id;
    s.support_center = Vec(0.5 * (f.support_center + g.support_center));
    const double spread = (f.support_center - g.support_center).norm() / 2.0;
    s.support_radius = std::max(f.support_radius, g.support_radius) + spread;
    s.value = [f, g](const Vec& x) { return f.value(x) + g.value(x); };
    s.gradient = [f, g](const Vec& x) { return Vec(f.gradient(x) + g.gradient(x)); };
    s.hessian = [f, g](const Vec& x) { return Mat(f.hessian(x) + g.hessian(x)); };
    return s;
}

inline SmoothField scale(const SmoothField& f, double lambda) {
    SmoothField s = f;
    s.id = std::to_string(lambda) + "*" + f.id;
    s.value = [f, lambda](const Vec& x) { return lambda * f.value(x); };
    s.gradient = [f, lambda](const Vec& x) { return Vec(lambda * f.gradient(x)); };
    s.hessian = [f, lambda](const Vec& x) { return Mat(lambda * f.hessian(x)); };
    return s;
}

/// gaussian(c,a) * p((x-c)[0])
inline SmoothField gaussian_poly(const Vec& c, double a, std::vector<double> coeffs) {
    SmoothField g = gaussian(c, a);
    SmoothField p = polynomial(std::move(coeffs), c.size());
    // recentre the polynomial argument
    SmoothField shifted;
    shifted.id = p.id + "(x-c)";
    shifted.support_center = c;
    shifted.value = [p, c](const Vec& x) { return p.value(Vec(x - c)); };
    shifted.gradient = [p, c](const Vec& x) { return p.gradient(Vec(x - c)); };
    shifted.hessian = [p, c](const Vec& x) { return p.hessian(Vec(x - c)); };
    SmoothField out = product(g, shifted);
    out.support_radius = g.support_radius * 1.3;  // polynomial growth margin
    return out;
}

inline SmoothField two_bump(const Vec& c1, const Vec& c2, double a) {
    return sum(gaussian(c1, a), gaussian(c2, a, 0.8));
}

}  // namespace fields

namespace detail {
inline double first_quotient(const SmoothField& f, const Vec& alpha, const Vec& x) {
    const double ip = alpha.dot(x);
    if (std::abs(ip) < 1e-8 * (1.0 + x.norm())) return f.gradient(x).dot(alpha);
    return (f.value(x) - f.value(reflect(x, alpha))) / ip;
}
}  // namespace detail

/// T_xi f(x) = d_xi f(x) + sum_alpha (k/2) <alpha,xi> (f(x)-f(sigma x)) / <alpha,x>.
/// xi is normalized internally.
inline double dunkl_derivative(const RootSystem& rs, const SmoothField& f, const Vec& xi,
                               const Vec& x) {
    const Vec u = xi.normalized();
    double out = f.gradient(x).dot(u);
    const auto& roots = rs.roots();
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const double k = rs.multiplicity(i);
        if (k == 0.0) continue;
        out += 0.5 * k * roots[i].dot(u) * detail::first_quotient(f, roots[i], x);
    }
    return out;
}

inline double dunkl_derivative_axis(const RootSystem& rs, const SmoothField& f, int j,
                                    const Vec& x) {
    Vec e = Vec::Zero(x.size());
    e[j] = 1.0;
    return dunkl_derivative(rs, f, e, x);
}

/// Dunkl Laplacian: Delta_eucl f + sum_alpha k(alpha) [ d_alpha f / <alpha,x>
/// - (f(x)-f(sigma x)) / <alpha,x>^2 ]  (||alpha||^2 = 2).
inline double dunkl_laplacian(const RootSystem& rs, const SmoothField& f, const Vec& x) {
    double out = f.hessian(x).trace();
    const auto& roots = rs.roots();
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const double k = rs.multiplicity(i);
        if (k == 0.0) continue;
        const Vec& a = roots[i];
        const double ip = a.dot(x);
        if (std::abs(ip) < 1e-5 * (1.0 + x.norm())) {
            out += k * 0.5 * a.dot(f.hessian(x) * a);
        } else {
            const double quot = f.gradient(x).dot(a) / ip;
            const double second = (f.value(x) - f.value(reflect(x, a))) / (ip * ip);
            out += k * (quot - second);
        }
    }
    return out;
}

/// Q(f,f) = sum_j int |T_j f|^2 dw + int V |f|^2 dw over the box.
/// Throws TruncationTooLarge when f has not decayed at the box boundary.
inline double quadratic_form(const RootSystem& rs, const SmoothField& f,
                             const PotentialMeasure& pm, const Box& region, double tol) {
    const int n = region.dimension();
    double peak = std::abs(f.value(f.support_center));
    peak = std::max(peak, std::abs(f.value(region.center())));
    double boundary = 0.0;
    const int probes = 9;
    for (int axis = 0; axis < n; ++axis) {
        for (int side = 0; side < 2; ++side) {
            for (int t = 0; t < probes; ++t) {
                Vec x = region.center();
                x[axis] = side ? region.hi[axis] : region.lo[axis];
                for (int j = 0; j < n; ++j) {
                    if (j == axis) continue;
                    x[j] = region.lo[j] + (t + 0.5) * (region.hi[j] - region.lo[j]) / probes;
                }
                boundary = std::max(boundary, std::abs(f.value(x)));
                peak = std::max(peak, std::abs(f.value(Vec(0.5 * (x + f.support_center)))));
            }
        }
    }
    if (boundary > 1e-10 * peak)
        throw TruncationTooLarge("field has not decayed at the quadratic-form box boundary");

    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        auto tj2 = [&](const Vec& x) {
            const double t = dunkl_derivative_axis(rs, f, j, x);
            return t * t;
        };
        total += pm.measure().integrate(tj2, region, tol).value;
    }
    auto vf2 = [&](const Vec& x) {
        const double v = f.value(x);
        return pm.potential()(x) * v * v;
    };
    total += pm.measure().integrate(vf2, region, tol).value;
    return total;
}

/// Max residual of the Dunkl Leibniz rule
///   T_j(fg) = (T_j f) g + f d_j g + sum (k/2) alpha_j f(sigma x)
///             (g(x)-g(sigma x))/<x,alpha>
/// with T_j(fg) evaluated directly on the product field.
inline double leibniz_residual(const RootSystem& rs, const SmoothField& f, const SmoothField& g,
                               int j, std::span<const Vec> sample) {
    const SmoothField fg = fields::product(f, g);
    double worst = 0.0;
    for (const Vec& x : sample) {
        const double lhs = dunkl_derivative_axis(rs, fg, j, x);
        double rhs = dunkl_derivative_axis(rs, f, j, x) * g.value(x) +
                     f.value(x) * g.gradient(x)[j];
        const auto& roots = rs.roots();
        for (std::size_t i = 0; i < roots.size(); ++i) {
            const double k = rs.multiplicity(i);
            if (k == 0.0) continue;
            const Vec& a = roots[i];
            rhs += 0.5 * k * a[j] * f.value(reflect(x, a)) * detail::first_quotient(g, a, x);
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace dunkl
