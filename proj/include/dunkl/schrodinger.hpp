#pragma once

// Grid-based Schrodinger semigroup: Strang-split Trotter product of exact
// heat steps and multiplicative potential steps on a composite Gauss-Kronrod
// spatial grid. Product systems use per-axis 1D kernel matrices; the
// potential must then be a sum of per-axis terms.
//
// Kernel matrices hold kernel VALUES; composition of kernels is
// A o B = A * diag(quad_weights) * B. Trotter powers are formed by repeated
// squaring of S * diag(w), which keeps every step count a power of two.

#include "dunkl/cubes.hpp"
#include "dunkl/heat.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <span>
#include <vector>

namespace dunkl {

struct GridTooCoarse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tensor grid of per-axis composite GK15 panels with a forced panel
/// boundary at 0 (the root hyperplane). Axis quadrature weights include the
/// per-axis measure weight 2^{k_j}|u|^{2 k_j}.
class SpatialGrid {
public:
    SpatialGrid(const RootSystem& rs, double lo, double hi, int panels_per_axis) {
        if (!rs.is_product_of_rank_one() && !rs.roots().empty())
            throw std::invalid_argument("spatial grids require a product of rank-one factors");
        dim_ = rs.dimension();
        std::vector<double> ks(dim_, 0.0);
        if (!rs.roots().empty()) ks = rs.rank_one_multiplicities();
        for (int j = 0; j < dim_; ++j) build_axis(lo, hi, panels_per_axis, ks[j]);
        lo_ = lo;
        hi_ = hi;
    }

    int dimension() const { return dim_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    int axis_size(int j) const { return static_cast<int>(nodes_[j].size()); }
    const std::vector<double>& axis_nodes(int j) const { return nodes_[j]; }
    const Eigen::VectorXd& axis_weights(int j) const { return weights_[j]; }
    double axis_multiplicity(int j) const { return mult_[j]; }

    std::size_t size() const {
        std::size_t n = 1;
        for (int j = 0; j < dim_; ++j) n *= nodes_[j].size();
        return n;
    }

    /// Flatten with axis 0 fastest.
    Vec point(std::size_t flat) const {
        Vec x(dim_);
        for (int j = 0; j < dim_; ++j) {
            const std::size_t m = nodes_[j].size();
            x[j] = nodes_[j][flat % m];
            flat /= m;
        }
        return x;
    }

    double quad_weight(std::size_t flat) const {
        double w = 1.0;
        for (int j = 0; j < dim_; ++j) {
            const std::size_t m = nodes_[j].size();
            w *= weights_[j][static_cast<Eigen::Index>(flat % m)];
            flat /= m;
        }
        return w;
    }

    double integral(const Eigen::VectorXd& f) const {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < f.size(); ++i)
            acc += f[i] * quad_weight(static_cast<std::size_t>(i));
        return acc;
    }

    double l1_norm(const Eigen::VectorXd& f) const {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < f.size(); ++i)
            acc += std::abs(f[i]) * quad_weight(static_cast<std::size_t>(i));
        return acc;
    }

    /// Apply per-axis kernel-value matrices as an operator:
    /// (K f)(x) = sum_y prod_j K_j(x_j,y_j) w_j(y_j) f(y).
    Eigen::VectorXd apply(const std::vector<Eigen::MatrixXd>& axis_mats,
                          const Eigen::VectorXd& f) const {
        if (dim_ == 1) return axis_mats[0] * weights_[0].cwiseProduct(f).eval();
        // dim == 2: reshape as M0 x M1
        const int m0 = axis_size(0), m1 = axis_size(1);
        Eigen::Map<const Eigen::MatrixXd> F(f.data(), m0, m1);
        Eigen::MatrixXd t0 = axis_mats[0] * weights_[0].asDiagonal() * F;
        Eigen::MatrixXd out = t0 * weights_[1].asDiagonal() * axis_mats[1].transpose();
        return Eigen::Map<Eigen::VectorXd>(out.data(), out.size());
    }

    /// Largest gap between adjacent nodes on axis j.
    double max_node_gap(int j) const {
        double g = 0.0;
        for (std::size_t i = 1; i < nodes_[j].size(); ++i)
            g = std::max(g, nodes_[j][i] - nodes_[j][i - 1]);
        return g;
    }

    int nearest_node(int j, double x) const {
        const auto& ns = nodes_[j];
        auto it = std::lower_bound(ns.begin(), ns.end(), x);
        if (it == ns.end()) return static_cast<int>(ns.size()) - 1;
        if (it == ns.begin()) return 0;
        const auto prev = it - 1;
        return static_cast<int>((x - *prev <= *it - x ? prev : it) - ns.begin());
    }

private:
    void build_axis(double lo, double hi, int panels, double k) {
        std::vector<double> bounds;
        for (int p = 0; p <= panels; ++p) bounds.push_back(lo + (hi - lo) * p / panels);
        if (lo < 0.0 && hi > 0.0) {
            bounds.push_back(0.0);
            std::sort(bounds.begin(), bounds.end());
            bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
        }
        std::vector<double> ns;
        std::vector<double> ws;
        for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
            const double c = 0.5 * (bounds[p] + bounds[p + 1]);
            const double h = 0.5 * (bounds[p + 1] - bounds[p]);
            for (int i = 0; i < 15; ++i) {
                const double node = i < 7 ? c - h * quad::detail::kXgk[i]
                                          : (i == 7 ? c : c + h * quad::detail::kXgk[14 - i]);
                const double gw =
                    i == 7 ? quad::detail::kWgk[7] : quad::detail::kWgk[i < 7 ? i : 14 - i];
                ns.push_back(node);
                ws.push_back(gw * h * std::pow(2.0, k) *
                             (k == 0.0 ? 1.0 : std::pow(std::abs(node), 2.0 * k)));
            }
        }
        // panels emit nodes high-to-low within the first half; sort jointly
        std::vector<std::size_t> order(ns.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return ns[a] < ns[b]; });
        std::vector<double> ns2(ns.size());
        Eigen::VectorXd ws2(static_cast<Eigen::Index>(ws.size()));
        for (std::size_t i = 0; i < order.size(); ++i) {
            ns2[i] = ns[order[i]];
            ws2[static_cast<Eigen::Index>(i)] = ws[order[i]];
        }
        nodes_.push_back(std::move(ns2));
        weights_.push_back(std::move(ws2));
        mult_.push_back(k);
    }

    int dim_ = 0;
    double lo_ = 0.0, hi_ = 0.0;
    std::vector<std::vector<double>> nodes_;
    std::vector<Eigen::VectorXd> weights_;
    std::vector<double> mult_;
};

class SchrodingerKernelEngine {
public:
    SchrodingerKernelEngine(RootSystem rs, PotentialProfile potential, SpatialGrid grid,
                            int trotter_steps = 64)
        : heat_(std::move(rs)), potential_(std::move(potential)), grid_(std::move(grid)),
          steps_(trotter_steps) {
        if (steps_ < 16 || (steps_ & (steps_ - 1)) != 0)
            throw std::invalid_argument("trotter_steps must be a power of two >= 16");
        const int n = grid_.dimension();
        if (n > 1 && !potential_.separable())
            throw std::invalid_argument(
                "product grids require a per-axis separable potential");
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd v(grid_.axis_size(j));
            for (int i = 0; i < grid_.axis_size(j); ++i)
                v[i] = axis_potential(j, grid_.axis_nodes(j)[i]);
            axis_v_.push_back(std::move(v));
        }
    }

    const SpatialGrid& grid() const { return grid_; }
    const HeatKernelEngine& heat() const { return heat_; }
    const PotentialProfile& potential() const { return potential_; }
    int trotter_steps() const { return steps_; }

    double axis_potential(int j, double u) const {
        if (grid_.dimension() == 1) {
            Vec x(1);
            x[0] = u;
            return potential_(x);
        }
        return potential_.axis_value(j, u);
    }

    /// Spectral heat-kernel matrix on the axis grid (kernel values).
    Eigen::MatrixXd heat_matrix(int axis, double t) const {
        const int m = grid_.axis_size(axis);
        const auto& ns = grid_.axis_nodes(axis);
        double maxabs = 1.0;
        for (double u : ns) maxabs = std::max(maxabs, std::abs(u));
        const auto rule = heat_.spectral_rule(axis, t, maxabs);
        const DunklKernel1D& ker = heat_.factor(axis);

        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
        const std::size_t block = 2048;
        Eigen::MatrixXd PA(m, block), PB(m, block);
        for (std::size_t q0 = 0; q0 < rule.nodes.size(); q0 += block) {
            const std::size_t nb = std::min(block, rule.nodes.size() - q0);
            for (std::size_t q = 0; q < nb; ++q) {
                const double sw = std::sqrt(rule.weights[q0 + q]);
                for (int i = 0; i < m; ++i) {
                    const auto [a, b] = ker.eval_imag(rule.nodes[q0 + q] * ns[i]);
                    PA(i, static_cast<Eigen::Index>(q)) = a * sw;
                    PB(i, static_cast<Eigen::Index>(q)) = b * sw;
                }
            }
            auto blkA = PA.leftCols(static_cast<Eigen::Index>(nb));
            auto blkB = PB.leftCols(static_cast<Eigen::Index>(nb));
            H.noalias() += blkA * blkA.transpose();
            H.noalias() += blkB * blkB.transpose();
        }
        return H;
    }

    /// Strang-split Trotter kernel matrix for e^{-t(-Delta_axis + V_axis)}.
    Eigen::MatrixXd schrodinger_matrix(int axis, double t, int steps) const {
        if (steps < 1 || (steps & (steps - 1)) != 0)
            throw std::invalid_argument("step count must be a power of two");
        const double delta = t / steps;
        Eigen::MatrixXd S = heat_matrix(axis, delta);
        Eigen::VectorXd eh = (-0.5 * delta * axis_v_[axis].array()).exp();
        S = eh.asDiagonal() * S * eh.asDiagonal();
        return power_compose(S, axis, steps);
    }

    Eigen::MatrixXd schrodinger_matrix(int axis, double t) const {
        return schrodinger_matrix(axis, t, steps_);
    }

    /// n-fold kernel composition K o ... o K by repeated squaring of K*W.
    Eigen::MatrixXd power_compose(const Eigen::MatrixXd& K, int axis, int n) const {
        const auto& w = grid_.axis_weights(axis);
        Eigen::MatrixXd X = K * w.asDiagonal();
        int exponent = n;
        Eigen::MatrixXd acc;  // accumulates X^n
        bool have = false;
        while (exponent > 0) {
            if (exponent & 1) {
                acc = have ? Eigen::MatrixXd(acc * X) : X;
                have = true;
            }
            exponent >>= 1;
            if (exponent > 0) X = X * X;
        }
        return acc * w.cwiseInverse().asDiagonal();
    }

    static Eigen::MatrixXd compose(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const Eigen::VectorXd& w) {
        return A * w.asDiagonal() * B;
    }

    /// Max interior row-sum drift of the V==0 Trotter kernel from 1.
    double normalization_drift(double t, double boundary_margin) const {
        double worst = 0.0;
        for (int axis = 0; axis < grid_.dimension(); ++axis) {
            Eigen::MatrixXd H = power_compose(heat_matrix(axis, t / steps_), axis, steps_);
            const auto& w = grid_.axis_weights(axis);
            Eigen::VectorXd rowsum = H * w;
            const auto& ns = grid_.axis_nodes(axis);
            for (int i = 0; i < grid_.axis_size(axis); ++i) {
                if (ns[i] - grid_.lo() < boundary_margin || grid_.hi() - ns[i] < boundary_margin)
                    continue;
                worst = std::max(worst, std::abs(rowsum[i] - 1.0));
            }
        }
        return worst;
    }

    void require_grid_fine_enough(double t) const {
        if (normalization_drift(t, 6.0 * std::sqrt(t)) > 1e-3)
            throw GridTooCoarse("V==0 normalization drift exceeds 1e-3");
    }

    /// Interpolated kernel entry (product across axes, within-grid points).
    double schrodinger_kernel(const Vec& x, const Vec& y, double t) const {
        double val = 1.0;
        for (int axis = 0; axis < grid_.dimension(); ++axis) {
            const Eigen::MatrixXd& K = cached_matrix(axis, t);
            val *= interp2(K, axis, x[axis], y[axis]);
        }
        return val;
    }

    const Eigen::MatrixXd& cached_matrix(int axis, double t) const {
        const long key = std::lround(t * 1e12);
        auto it = cache_.find({axis, key});
        if (it == cache_.end())
            it = cache_.emplace(std::make_pair(axis, key), schrodinger_matrix(axis, t)).first;
        return it->second;
    }

private:
    double interp2(const Eigen::MatrixXd& K, int axis, double x, double y) const {
        const auto& ns = grid_.axis_nodes(axis);
        auto bracket = [&](double v) {
            auto it = std::upper_bound(ns.begin(), ns.end(), v);
            int hi = static_cast<int>(it - ns.begin());
            hi = std::clamp(hi, 1, static_cast<int>(ns.size()) - 1);
            return std::pair{hi - 1, hi};
        };
        auto [i0, i1] = bracket(x);
        auto [j0, j1] = bracket(y);
        const double tx = (x - ns[i0]) / (ns[i1] - ns[i0]);
        const double ty = (y - ns[j0]) / (ns[j1] - ns[j0]);
        return (1 - tx) * ((1 - ty) * K(i0, j0) + ty * K(i0, j1)) +
               tx * ((1 - ty) * K(i1, j0) + ty * K(i1, j1));
    }

    HeatKernelEngine heat_;
    PotentialProfile potential_;
    SpatialGrid grid_;
    int steps_;
    std::vector<Eigen::VectorXd> axis_v_;
    mutable std::map<std::pair<int, long>, Eigen::MatrixXd> cache_;
};

/// Max over the time list of the perturbation-identity residual
///   || H_t f - K_t f - int_0^t H_{t-s} V K_s f ds ||_inf / || H_t f ||_inf
/// with the time integral by composite Simpson on n_times intervals and K_s
/// realized by Strang steps aligned with the Simpson nodes.
inline double duhamel_residual(const SchrodingerKernelEngine& eng, const Eigen::VectorXd& f,
                               std::span<const double> times, int n_times) {
    if (eng.grid().dimension() != 1)
        throw std::invalid_argument("duhamel residual is a 1D diagnostic");
    if (n_times % 2 != 0) throw std::invalid_argument("n_times must be even for Simpson");
    const auto& grid = eng.grid();
    const auto& w = grid.axis_weights(0);
    Eigen::VectorXd vpot(grid.axis_size(0));
    for (int i = 0; i < grid.axis_size(0); ++i) vpot[i] = eng.axis_potential(0, grid.axis_nodes(0)[i]);

    double worst = 0.0;
    for (double t : times) {
        const double ds = t / n_times;
        Eigen::MatrixXd Hs = eng.heat_matrix(0, ds);
        Eigen::VectorXd ehalf = (-0.5 * ds * vpot.array()).exp();
        Eigen::MatrixXd S = ehalf.asDiagonal() * Hs * ehalf.asDiagonal();

        auto apply = [&](const Eigen::MatrixXd& K, const Eigen::VectorXd& g) {
            return Eigen::VectorXd(K * w.cwiseProduct(g));
        };
        // Simpson weights over [0, t]
        std::vector<double> sw(n_times + 1, 0.0);
        for (int i = 0; i <= n_times; ++i)
            sw[i] = (i == 0 || i == n_times) ? ds / 3.0 : (i % 2 ? 4.0 * ds / 3.0 : 2.0 * ds / 3.0);

        // evolve K_s f through the Simpson nodes; Horner-accumulate
        // sum_i sw[i] H^{n-i} [V K_{s_i} f]
        Eigen::VectorXd g = f;
        Eigen::VectorXd acc = sw[0] * vpot.cwiseProduct(g);
        Eigen::VectorXd hf = f;
        for (int i = 1; i <= n_times; ++i) {
            g = apply(S, g);
            hf = apply(Hs, hf);
            acc = apply(Hs, acc) + sw[i] * vpot.cwiseProduct(g);
        }
        const Eigen::VectorXd resid = hf - g - acc;
        worst = std::max(worst, resid.cwiseAbs().maxCoeff() / hf.cwiseAbs().maxCoeff());
    }
    return worst;
}

struct ConditionDRow {
    std::size_t cube = 0;
    int s = 0;
    double integral = 0.0;
};

struct ConditionDReport {
    std::vector<ConditionDRow> rows;
    double worst_fitted_exponent = 0.0;  // largest per-cube log-log slope
};

/// For sampled certified cubes and s = 1..s_max: sup over y in Q**** of
/// int k_{2^s d(Q)^2}(x,y) dw(x), with the kernel built once at d(Q)^2 and
/// squared up the dyadic ladder.
inline ConditionDReport condition_D_check(const SchrodingerKernelEngine& eng,
                                          const CubeCollection& cc, int s_max,
                                          std::size_t max_cubes = 6) {
    if (eng.grid().dimension() != 1)
        throw std::invalid_argument("condition (D) table is a 1D diagnostic");
    ConditionDReport rep;
    const auto& grid = eng.grid();
    const auto& w = grid.axis_weights(0);

    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < cc.size(); ++i)
        if (!cc[i].boundary_flag) picks.push_back(i);
    if (picks.size() > max_cubes) {
        std::vector<std::size_t> thin;
        for (std::size_t j = 0; j < max_cubes; ++j)
            thin.push_back(picks[j * picks.size() / max_cubes]);
        picks = std::move(thin);
    }

    rep.worst_fitted_exponent = -std::numeric_limits<double>::infinity();
    for (std::size_t ci : picks) {
        const auto& q = cc[ci];
        const double d2 = q.side * q.side;
        Eigen::MatrixXd K = eng.schrodinger_matrix(0, d2, 32);
        std::vector<int> ysample;
        for (double off : {0.0, -6.0, -1.5, 1.5, 6.0}) {
            const double y = q.center[0] + off * q.side;
            if (y > grid.lo() && y < grid.hi()) ysample.push_back(grid.nearest_node(0, y));
        }
        std::vector<double> lnI, lnS;
        for (int s = 1; s <= s_max; ++s) {
            K = SchrodingerKernelEngine::compose(K, K, w);  // doubles the time
            double sup = 0.0;
            for (int jy : ysample) {
                const double integral = K.col(jy).dot(w);
                sup = std::max(sup, integral);
            }
            rep.rows.push_back({ci, s, sup});
            if (sup > 0) {
                lnI.push_back(std::log(sup));
                lnS.push_back(std::log(static_cast<double>(s)));
            }
        }
        if (lnI.size() >= 2) {
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < lnI.size(); ++i) {
                mx += lnS[i];
                my += lnI[i];
            }
            mx /= lnI.size();
            my /= lnI.size();
            double sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < lnI.size(); ++i) {
                sxx += (lnS[i] - mx) * (lnS[i] - mx);
                sxy += (lnS[i] - mx) * (lnI[i] - my);
            }
            rep.worst_fitted_exponent = std::max(rep.worst_fitted_exponent, sxy / sxx);
        }
    }
    return rep;
}

struct ConditionKRow {
    std::size_t cube = 0;
    double t = 0.0;
    double tau = 0.0;  // t / d(Q)^2
    double lhs = 0.0;
};

struct ConditionKReport {
    std::vector<ConditionKRow> rows;
    double delta_fit = 0.0;    // pooled log-log slope of lhs vs tau
    double delta_target = 0.0;  // 1 - N_hom/(2q)
    double C_K = 0.0;          // max lhs / tau^{delta_target}: the absorption-bound constant
    bool monotone_in_t = true;
};

/// lhs(Q,t) = max over an x-sample of
///   int_0^{2t} int_{Q***} V(y) G_{2s/c}(x,y) dw(y) ds
/// (midpoint rule in s); kernel-decay constant c from the Gaussian bound.
inline ConditionKReport condition_K_check(const PotentialMeasure& pm, const CubeCollection& cc,
                                          std::span<const double> tau_grid, double c,
                                          std::size_t max_cubes = 6, int s_nodes = 16) {
    ConditionKReport rep;
    const auto& wm = pm.measure();
    GaussianMajorant G(wm);
    rep.delta_target =
        1.0 - wm.context().homogeneous_dimension() / (2.0 * pm.potential().claimed_q());

    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < cc.size(); ++i)
        if (!cc[i].boundary_flag) picks.push_back(i);
    if (picks.size() > max_cubes) {
        std::vector<std::size_t> thin;
        for (std::size_t j = 0; j < max_cubes; ++j)
            thin.push_back(picks[j * picks.size() / max_cubes]);
        picks = std::move(thin);
    }

    std::vector<double> lnTau, lnL;
    for (std::size_t ci : picks) {
        const auto& q = cc[ci];
        const Box inner = q.dilated(3);  // Q***
        std::vector<Vec> xs;
        for (double off : {0.0, -2.0, 2.0, -7.0}) {
            Vec x = q.center;
            x[0] += off * q.side;
            xs.push_back(x);
        }
        double prev = -1.0;
        for (double tau : tau_grid) {
            const double t = tau * q.side * q.side;
            double lhs = 0.0;
            for (const Vec& x : xs) {
                double acc = 0.0;
                const double ds = 2.0 * t / s_nodes;
                for (int i = 0; i < s_nodes; ++i) {
                    const double s = (i + 0.5) * ds;
                    auto integrand = [&](const Vec& y) {
                        return pm.potential()(y) * G(x, y, 2.0 * s / c);
                    };
                    acc += wm.integrate(integrand, inner, 1e-6).value * ds;
                }
                lhs = std::max(lhs, acc);
            }
            rep.rows.push_back({ci, t, tau, lhs});
            if (prev > lhs * (1 + 1e-9) && prev >= 0) rep.monotone_in_t = false;
            prev = lhs;
            if (lhs > 0) {
                lnTau.push_back(std::log(tau));
                lnL.push_back(std::log(lhs));
                rep.C_K = std::max(rep.C_K, lhs / std::pow(tau, rep.delta_target));
            }
        }
    }
    if (lnTau.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lnTau.size(); ++i) {
            mx += lnTau[i];
            my += lnL[i];
        }
        mx /= lnTau.size();
        my /= lnTau.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lnTau.size(); ++i) {
            sxx += (lnTau[i] - mx) * (lnTau[i] - mx);
            sxy += (lnTau[i] - mx) * (lnL[i] - my);
        }
        rep.delta_fit = sxy / sxx;
    }
    return rep;
}

}  // namespace dunkl
