#pragma once

// Atoms for the stopping-time atomic Hardy space and its local variant,
// atom validation, the dyadic-in-time maximal function, and atom H^1 norms
// on the Schrodinger grid.
//
// The sup over t > 0 is discretized on a dyadic ladder with >= 4 points per
// octave; ladders are walked by repeated kernel squaring so a batch of atoms
// shares every kernel matrix.

#include "dunkl/schrodinger.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dunkl {

struct InvalidAtomInCombination : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Atom {
    std::string id;
    Vec center;
    double radius = 0.0;
    std::optional<std::size_t> cube_index;  // atoms for the cube collection
    double local_scale = 0.0;               // local atoms: the scale T
    Eigen::VectorXd values;                 // samples on the engine grid
};

struct AtomValidation {
    bool support_ok = false;
    bool size_ok = false;
    bool cancellation_required = false;
    bool cancellation_ok = true;
    double sup_abs = 0.0;
    double size_bound = 0.0;     // w(B(x0,r))^{-1}
    double integral_abs = 0.0;   // |int a dw| on the grid
    double support_leak = 0.0;   // max |a| outside B(x0,r), relative to sup
    bool pass() const { return support_ok && size_ok && (!cancellation_required || cancellation_ok); }
};

/// Conditions (A)/(B)/(C) with quantitative margins. For cube atoms the
/// support ball must sit inside Q**** and cancellation binds iff r < d(Q);
/// local atoms use the scale T instead.
inline AtomValidation validate_atom(const Atom& a, const SpatialGrid& grid,
                                    const WeightedMeasure& wm, const CubeCollection* cc) {
    AtomValidation v;
    v.sup_abs = a.values.cwiseAbs().maxCoeff();
    v.size_bound = 1.0 / wm.ball_volume(a.center, a.radius);
    v.size_ok = v.sup_abs <= v.size_bound * (1.0 + 1e-9);

    double leak = 0.0;
    for (Eigen::Index i = 0; i < a.values.size(); ++i) {
        const Vec x = grid.point(static_cast<std::size_t>(i));
        if ((x - a.center).norm() > a.radius * (1.0 + 1e-12))
            leak = std::max(leak, std::abs(a.values[i]));
    }
    v.support_leak = v.sup_abs > 0 ? leak / v.sup_abs : 0.0;
    v.support_ok = v.support_leak < 1e-12;

    double scale = a.local_scale;
    if (a.cube_index) {
        if (!cc) throw std::invalid_argument("cube atom validated without a collection");
        const DyadicCube& q = (*cc)[*a.cube_index];
        scale = q.side;
        const double reach = (a.center - q.center).lpNorm<Eigen::Infinity>() + a.radius;
        if (reach > 8.0 * q.side * (1.0 + 1e-12)) v.support_ok = false;
    }
    v.cancellation_required = a.radius < scale;
    if (v.cancellation_required) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < a.values.size(); ++i)
            acc += a.values[i] * grid.quad_weight(static_cast<std::size_t>(i));
        v.integral_abs = std::abs(acc);
        v.cancellation_ok = v.integral_abs <= 1e-8;
    }
    return v;
}

struct MaximalOptions {
    double t_min = 1e-3;
    int octaves = 12;
    int per_octave = 4;
    bool schrodinger = true;  // false: heat semigroup
    int trotter_steps = 32;
};

/// Pointwise sup over the dyadic t-ladder of |K_t f| (or |H_t f|), shared
/// across a batch of grid functions. 1D grids.
inline std::vector<Eigen::VectorXd> maximal_function_batch(
    const SchrodingerKernelEngine& eng, std::span<const Eigen::VectorXd> fs,
    const MaximalOptions& opt) {
    if (eng.grid().dimension() != 1)
        throw std::invalid_argument("the maximal ladder operates on 1D grids");
    if (opt.per_octave < 4) throw GridTooCoarse("need at least 4 ladder points per octave");
    const auto& grid = eng.grid();
    const auto& w = grid.axis_weights(0);
    std::vector<Eigen::VectorXd> best(fs.size(),
                                      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size())));
    for (int q = 0; q < opt.per_octave; ++q) {
        const double t0 = opt.t_min * std::pow(2.0, static_cast<double>(q) / opt.per_octave);
        Eigen::MatrixXd K = opt.schrodinger
                                ? eng.schrodinger_matrix(0, t0, opt.trotter_steps)
                                : eng.power_compose(eng.heat_matrix(0, t0 / opt.trotter_steps), 0,
                                                    opt.trotter_steps);
        for (int level = 0; level < opt.octaves; ++level) {
            for (std::size_t i = 0; i < fs.size(); ++i) {
                Eigen::VectorXd g = K * w.cwiseProduct(fs[i]);
                best[i] = best[i].cwiseMax(g.cwiseAbs());
            }
            if (level + 1 < opt.octaves) K = SchrodingerKernelEngine::compose(K, K, w);
        }
    }
    return best;
}

inline Eigen::VectorXd maximal_function(const SchrodingerKernelEngine& eng,
                                        const Eigen::VectorXd& f, const MaximalOptions& opt) {
    const Eigen::VectorXd fs[] = {f};
    return maximal_function_batch(eng, fs, opt)[0];
}

/// || sup_t |K_t a| ||_{L^1(dw)} on the grid.
inline double atom_h1_norm(const SchrodingerKernelEngine& eng, const Atom& a,
                           const MaximalOptions& opt) {
    return eng.grid().l1_norm(maximal_function(eng, a.values, opt));
}

inline std::vector<double> atom_h1_norms(const SchrodingerKernelEngine& eng,
                                         std::span<const Atom> atoms, const MaximalOptions& opt) {
    std::vector<Eigen::VectorXd> fs;
    for (const Atom& a : atoms) fs.push_back(a.values);
    auto stars = maximal_function_batch(eng, fs, opt);
    std::vector<double> norms;
    for (const auto& s : stars) norms.push_back(eng.grid().l1_norm(s));
    return norms;
}

/// sum c_j a_j on the grid together with the declared atomic norm sum |c_j|.
inline std::pair<Eigen::VectorXd, double> atomic_combination(
    std::span<const double> coeffs, std::span<const Atom> atoms, const SpatialGrid& grid,
    const WeightedMeasure& wm, const CubeCollection* cc) {
    if (coeffs.size() != atoms.size())
        throw std::invalid_argument("coefficient/atom count mismatch");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    double declared = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (!validate_atom(atoms[j], grid, wm, cc).pass())
            throw InvalidAtomInCombination("atom " + atoms[j].id + " fails validation");
        f += coeffs[j] * atoms[j].values;
        declared += std::abs(coeffs[j]);
    }
    return {std::move(f), declared};
}

namespace detail {
// C^2 plateau-taper profile supported on |u| <= 1
inline double atom_bump(double u) {
    const double v = std::abs(u) * 2.0;
    if (v <= 1.0) return 1.0;
    if (v >= 2.0) return 0.0;
    const double w = 2.0 - v;
    return w * w * w * (10.0 + w * (-15.0 + 6.0 * w));
}
}  // namespace detail

/// Build one atom supported on B(x0,r); mean-removed on the grid when
/// r < scale (two nested bumps), then sup-normalized to 0.95 w(B)^{-1}.
inline Atom make_atom(const SpatialGrid& grid, const WeightedMeasure& wm, const Vec& x0, double r,
                      std::optional<std::size_t> cube_index, double scale, std::string id) {
    Atom a;
    a.id = std::move(id);
    a.center = x0;
    a.radius = r;
    a.cube_index = cube_index;
    a.local_scale = scale;
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd outer(n), inner(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = (grid.point(static_cast<std::size_t>(i)) - x0).norm();
        outer[i] = detail::atom_bump(d / r);
        inner[i] = detail::atom_bump(2.0 * d / r);
    }
    if (r < scale) {
        double io = 0.0, ii = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double qw = grid.quad_weight(static_cast<std::size_t>(i));
            io += outer[i] * qw;
            ii += inner[i] * qw;
        }
        a.values = outer - (io / ii) * inner;
    } else {
        a.values = outer;
    }
    const double sup = a.values.cwiseAbs().maxCoeff();
    a.values *= 0.95 / (wm.ball_volume(x0, r) * sup);
    return a;
}

/// Seeded pseudo-random fixture of valid cube atoms (varied Q, r, center).
inline std::vector<Atom> make_atom_fixture(const SpatialGrid& grid, const WeightedMeasure& wm,
                                           const CubeCollection& cc, int count,
                                           std::uint64_t seed) {
    std::vector<std::size_t> certified;
    for (std::size_t i = 0; i < cc.size(); ++i)
        if (!cc[i].boundary_flag) certified.push_back(i);
    if (certified.empty()) throw std::invalid_argument("no certified cubes for the fixture");

    const double min_r = 5.0 * grid.max_node_gap(0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Atom> out;
    int attempts = 0;
    while (static_cast<int>(out.size()) < count && attempts < 50 * count) {
        ++attempts;
        const std::size_t ci = certified[static_cast<std::size_t>(uni(rng) * certified.size()) %
                                         certified.size()];
        const DyadicCube& q = cc[ci];
        // radius spans sub-cancellation and super-cancellation scales
        const double rexp = -3.0 + 4.0 * uni(rng);  // r in d(Q) * [2^-3, 2]
        double r = q.side * std::pow(2.0, rexp);
        if (r < min_r) r = min_r;
        const double slack = 8.0 * q.side - r;
        if (slack <= 0) continue;
        Vec x0 = q.center;
        x0[0] += (2.0 * uni(rng) - 1.0) * slack * 0.9;
        if (x0[0] - r < grid.lo() || x0[0] + r > grid.hi()) continue;
        Atom a = make_atom(grid, wm, x0, r, ci, q.side,
                           "atom" + std::to_string(out.size()));
        if (!validate_atom(a, grid, wm, &cc).pass()) continue;
        out.push_back(std::move(a));
    }
    if (static_cast<int>(out.size()) < count)
        throw std::runtime_error("atom fixture generation exhausted its attempts");
    return out;
}

/// Negative control: a small nonnegative bump without mean removal placed in
/// a large cube, violating only the cancellation condition.
inline Atom make_noncancellative_control(const SpatialGrid& grid, const WeightedMeasure& wm,
                                         const CubeCollection& cc) {
    std::size_t big = 0;
    for (std::size_t i = 0; i < cc.size(); ++i)
        if (!cc[i].boundary_flag && cc[i].side > cc[big].side) big = i;
    const DyadicCube& q = cc[big];
    const double r = std::max(5.0 * grid.max_node_gap(0), q.side / 64.0);
    Atom a;
    a.id = "control";
    a.center = q.center;
    a.radius = r;
    a.cube_index = big;
    a.local_scale = q.side;
    const auto n = static_cast<Eigen::Index>(grid.size());
    a.values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = (grid.point(static_cast<std::size_t>(i)) - a.center).norm();
        a.values[i] = detail::atom_bump(d / r);
    }
    a.values *= 0.95 / (wm.ball_volume(a.center, r) * a.values.maxCoeff());
    return a;
}

}  // namespace dunkl
