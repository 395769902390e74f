#pragma once

// Adaptive Gauss-Kronrod quadrature with caller-supplied split points.
// Deterministic: the refinement order and the final left-to-right
// compensated summation are fixed functions of the input.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

namespace dunkl {

struct ToleranceNotReached : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteIntegrand : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace quad {

struct Result {
    double value = 0.0;
    double est_error = 0.0;
    std::size_t evals = 0;
    bool converged = true;
};

struct Options {
    double rel_tol = 1e-8;
    double abs_tol = 0.0;
    int max_depth = 22;          // halvings per initial segment
    std::size_t max_panels = 500000;
    bool throw_on_failure = true;
};

namespace detail {

// Gauss-Kronrod 7-15 rule (QUADPACK DQK15 constants).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelEval {
    double value;
    double err;
};

template <class F>
PanelEval gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);
    for (int i = 0; i < 15; ++i) {
        if (!std::isfinite(fv[i])) throw NonFiniteIntegrand("non-finite integrand value");
    }
    double resk = kWgk[7] * fv[7];
    double resg = kWg[3] * fv[7];
    double resabs = kWgk[7] * std::abs(fv[7]);
    for (int i = 0; i < 7; ++i) {
        resk += kWgk[i] * (fv[i] + fv[14 - i]);
        resabs += kWgk[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
        if (i % 2 == 1) resg += kWg[i / 2] * (fv[i] + fv[14 - i]);
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[7] * std::abs(fv[7] - mean);
    for (int i = 0; i < 7; ++i)
        resasc += kWgk[i] * (std::abs(fv[i] - mean) + std::abs(fv[14 - i] - mean));
    resk *= h;
    resg *= h;
    resabs *= std::abs(h);
    resasc *= std::abs(h);
    double err = std::abs(resk - resg);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps_floor = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    err = std::max(err, eps_floor);
    return {resk, err};
}

struct Segment {
    double a, b, value, err;
    int depth;
};

struct SegmentWorse {
    bool operator()(const Segment& x, const Segment& y) const {
        if (x.err != y.err) return x.err < y.err;
        return x.a > y.a;  // deterministic tie-break
    }
};

inline double kahan_sum(std::vector<Segment>& segs) {
    std::sort(segs.begin(), segs.end(),
              [](const Segment& s, const Segment& t) { return s.a < t.a; });
    double sum = 0.0, comp = 0.0;
    for (const Segment& s : segs) {
        const double y = s.value - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace detail

/// Integrate f over [a,b]. `splits` are interior points where the integrand
/// is known to be non-smooth (root hyperplane crossings); segments never
/// straddle them.
template <class F>
Result gk_adaptive(F&& f, double a, double b, std::span<const double> splits,
                   const Options& opt = {}) {
    Result res;
    if (!(b > a)) return res;

    std::vector<double> cuts{a};
    for (double s : splits)
        if (s > a + 1e-300 && s < b - 1e-300) cuts.push_back(s);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-15 * (1 + std::abs(x)); }),
               cuts.end());

    std::priority_queue<detail::Segment, std::vector<detail::Segment>, detail::SegmentWorse> heap;
    std::vector<detail::Segment> done;
    double total = 0.0, toterr = 0.0;
    std::size_t panels = 0;

    auto push = [&](double lo, double hi, int depth) {
        auto [v, e] = detail::gk15(f, lo, hi);
        res.evals += 15;
        ++panels;
        heap.push({lo, hi, v, e, depth});
        total += v;
        toterr += e;
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) push(cuts[i], cuts[i + 1], 0);

    auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };

    while (toterr > tolerance() && !heap.empty()) {
        detail::Segment worst = heap.top();
        if (worst.depth >= opt.max_depth || panels + 2 > opt.max_panels) break;
        heap.pop();
        total -= worst.value;
        toterr -= worst.err;
        const double mid = 0.5 * (worst.a + worst.b);
        push(worst.a, mid, worst.depth + 1);
        push(mid, worst.b, worst.depth + 1);
    }

    while (!heap.empty()) {
        done.push_back(heap.top());
        heap.pop();
    }
    double err = 0.0;
    for (const auto& s : done) err += s.err;
    res.value = detail::kahan_sum(done);
    res.est_error = err;
    res.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(res.value)) * 1.000001;
    if (!res.converged && opt.throw_on_failure)
        throw ToleranceNotReached("quadrature error budget exhausted: est_error=" +
                                  std::to_string(err) + " value=" + std::to_string(res.value));
    return res;
}

template <class F>
Result gk_adaptive(F&& f, double a, double b, const Options& opt = {}) {
    return gk_adaptive(std::forward<F>(f), a, b, std::span<const double>{}, opt);
}

}  // namespace quad
}  // namespace dunkl
