#pragma once

// Stopping-time dyadic cube decomposition, overlap diagnostics, and the
// smooth partition of unity subordinate to it.
//
// The dyadic origin is fixed at the domain corner; the collection depends on
// that choice but every Fact-style check holds for any choice. Cubes touching
// the domain boundary (and the root itself) cannot be certified maximal and
// carry boundary_flag.

#include "dunkl/critical_radius.hpp"
#include "dunkl/potential.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace dunkl {

struct DepthExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OverlapTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DyadicCube {
    int level = 0;
    std::vector<int> index;     // lattice coordinates at this level
    double side = 0.0;          // d(Q) = base * 2^{-level}
    Vec center;
    double criterion_value = 0.0;  // d(Q)^2 mu(Q) / w(Q)
    bool boundary_flag = false;    // maximality not certifiable (root / domain edge)

    Box box() const { return Box::cube(center, side); }
    /// Concentric dilation: 1 -> Q*, 2 -> Q**, ...
    Box dilated(int stars) const { return Box::cube(center, side * std::pow(2.0, stars)); }
};

class CubeCollection {
public:
    CubeCollection(Box domain, std::vector<DyadicCube> cubes)
        : domain_(std::move(domain)), cubes_(std::move(cubes)) {
        double maxside = 0.0;
        for (const auto& q : cubes_) maxside = std::max(maxside, q.side);
        cell_ = 16.0 * maxside;  // Q**** has half-extent 8*side
        for (std::size_t i = 0; i < cubes_.size(); ++i) buckets_[bucket_key(cubes_[i].center)].push_back(i);
    }

    const Box& domain() const { return domain_; }
    const std::vector<DyadicCube>& cubes() const { return cubes_; }
    std::size_t size() const { return cubes_.size(); }
    const DyadicCube& operator[](std::size_t i) const { return cubes_[i]; }

    /// Indices of cubes whose `stars`-dilation intersects the given box.
    std::vector<std::size_t> intersecting(const Box& target, int stars) const {
        std::vector<std::size_t> out;
        const int n = domain_.dimension();
        std::vector<long> lo(n), hi(n);
        for (int j = 0; j < n; ++j) {
            lo[j] = static_cast<long>(std::floor((target.lo[j] - cell_) / cell_));
            hi[j] = static_cast<long>(std::floor((target.hi[j] + cell_) / cell_));
        }
        std::vector<long> idx(lo);
        while (true) {
            auto it = buckets_.find(idx);
            if (it != buckets_.end()) {
                for (std::size_t i : it->second) {
                    if (boxes_intersect(cubes_[i].dilated(stars), target)) out.push_back(i);
                }
            }
            int j = 0;
            for (; j < n; ++j) {
                if (++idx[j] <= hi[j]) break;
                idx[j] = lo[j];
            }
            if (j == n) break;
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Neighbor classification: cubes whose triple dilations meet Q's.
    std::vector<std::size_t> neighbors_prime(std::size_t i) const {
        return intersecting(cubes_[i].dilated(3), 3);
    }

    /// The complement: cubes whose triple dilations are disjoint from Q's.
    std::vector<std::size_t> neighbors_double_prime(std::size_t i) const {
        const auto prime = neighbors_prime(i);
        std::vector<std::size_t> out;
        std::size_t p = 0;
        for (std::size_t j = 0; j < cubes_.size(); ++j) {
            if (p < prime.size() && prime[p] == j) {
                ++p;
                continue;
            }
            out.push_back(j);
        }
        return out;
    }

    /// Index of the cube whose closed box contains x (ties resolved to the
    /// lowest index).
    std::size_t locate(const Vec& x) const {
        for (std::size_t i = 0; i < cubes_.size(); ++i)
            if (cubes_[i].box().contains(x, 1e-12)) return i;
        throw std::out_of_range("point outside the cube collection domain");
    }

    static bool boxes_intersect(const Box& a, const Box& b) {
        for (int j = 0; j < a.dimension(); ++j)
            if (a.hi[j] < b.lo[j] || b.hi[j] < a.lo[j]) return false;
        return true;
    }

private:
    std::vector<long> bucket_key(const Vec& c) const {
        std::vector<long> k(c.size());
        for (Eigen::Index j = 0; j < c.size(); ++j)
            k[j] = static_cast<long>(std::floor(c[j] / cell_));
        return k;
    }

    Box domain_;
    std::vector<DyadicCube> cubes_;
    double cell_ = 1.0;
    std::map<std::vector<long>, std::vector<std::size_t>> buckets_;
};

/// Recursive subdivision: a cube is emitted when d(Q)^2 mu(Q)/w(Q) <= 1 and
/// its parent violates the bound (or it is the root / touches the domain
/// boundary, in which case it is flagged).
inline CubeCollection build_stopping_time(const Box& domain, const PotentialMeasure& pm,
                                          int max_depth) {
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    const int n = domain.dimension();
    const auto widths = domain.widths();
    const double base = widths[0];
    for (int j = 1; j < n; ++j)
        if (std::abs(widths[j] - base) > 1e-12 * base)
            throw std::invalid_argument("stopping-time domain must be a cube");

    const double quad_tol = std::min(1e-9, pm.measure().quad_tolerance());
    auto criterion = [&](const Box& q, double side) {
        try {
            const double wq = pm.measure()
                                  .integrate([](const Vec&) { return 1.0; }, q, quad_tol)
                                  .value;
            const double muq = pm.mu(q, quad_tol);
            return side * side * muq / wq;
        } catch (const ToleranceNotReached& e) {
            throw QuadratureFailure(e.what());
        } catch (const NonFiniteIntegrand& e) {
            throw QuadratureFailure(e.what());
        }
    };

    std::vector<DyadicCube> out;
    struct Item {
        int level;
        std::vector<int> index;
    };
    std::vector<Item> stack{{0, std::vector<int>(n, 0)}};
    while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        const double side = base / std::pow(2.0, it.level);
        Vec center(n);
        bool on_boundary = it.level == 0;
        const long cells = 1L << it.level;
        for (int j = 0; j < n; ++j) {
            center[j] = domain.lo[j] + (it.index[j] + 0.5) * side;
            if (it.index[j] == 0 || it.index[j] == cells - 1) on_boundary = true;
        }
        const Box qbox = Box::cube(center, side);
        const double crit = criterion(qbox, side);
        if (crit <= 1.0) {
            DyadicCube q;
            q.level = it.level;
            q.index = it.index;
            q.side = side;
            q.center = center;
            q.criterion_value = crit;
            q.boundary_flag = on_boundary;
            out.push_back(std::move(q));
            continue;
        }
        if (it.level >= max_depth)
            throw DepthExhausted("stopping criterion not reached at depth " +
                                 std::to_string(max_depth));
        for (int child = 0; child < (1 << n); ++child) {
            Item c{it.level + 1, it.index};
            for (int j = 0; j < n; ++j) c.index[j] = 2 * it.index[j] + ((child >> j) & 1);
            stack.push_back(std::move(c));
        }
    }
    std::sort(out.begin(), out.end(), [](const DyadicCube& a, const DyadicCube& b) {
        if (a.level != b.level) return a.level < b.level;
        return a.index < b.index;
    });
    return CubeCollection(domain, std::move(out));
}

/// Fact-style audit: minimum of the stopping criterion over certified cubes
/// (bounded away from zero by the parent violation).
inline double verify_lower_bound(const CubeCollection& cc) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& q : cc.cubes())
        if (!q.boundary_flag) lo = std::min(lo, q.criterion_value);
    if (!std::isfinite(lo)) {
        // degenerate single-cube collection: report that cube's value
        for (const auto& q : cc.cubes()) lo = std::min(lo, q.criterion_value);
    }
    return lo;
}

/// Max over certified cubes and a per-cube sample of Q**** of
/// max(m(x) d(Q), 1/(m(x) d(Q))).
inline double verify_m_comparison(const CubeCollection& cc, const CriticalRadiusField& field,
                                  int samples_per_cube) {
    double worst = 1.0;
    const int n = cc.domain().dimension();
    for (const auto& q : cc.cubes()) {
        if (q.boundary_flag) continue;
        const Box big = q.dilated(4);
        const int per_axis = std::max(2, static_cast<int>(std::round(
                                             std::pow(static_cast<double>(samples_per_cube),
                                                      1.0 / n))));
        std::vector<int> idx(n, 0);
        while (true) {
            Vec x(n);
            for (int j = 0; j < n; ++j)
                x[j] = big.lo[j] + (idx[j] + 0.5) * (big.hi[j] - big.lo[j]) / per_axis;
            const double md = field.critical_radius(x) * q.side;
            worst = std::max(worst, std::max(md, 1.0 / md));
            int j = 0;
            for (; j < n; ++j) {
                if (++idx[j] < per_axis) break;
                idx[j] = 0;
            }
            if (j == n) break;
        }
    }
    return worst;
}

/// Finite-overlap constant C0: max side ratio over pairs whose Q****
/// dilations intersect.
inline double verify_finite_overlap(const CubeCollection& cc) {
    double c0 = 1.0;
    for (std::size_t i = 0; i < cc.size(); ++i) {
        const Box big = cc[i].dilated(4);
        for (std::size_t j : cc.intersecting(big, 4)) {
            const double ratio = cc[i].side / cc[j].side;
            c0 = std::max(c0, std::max(ratio, 1.0 / ratio));
        }
    }
    return c0;
}

/// Smooth partition subordinate to {Q*}: per-cube quintic plateau-taper bump
/// normalized by the local sum. C^2, supp phi_Q inside Q*.
class PartitionOfUnity {
public:
    explicit PartitionOfUnity(const CubeCollection& cc) : cc_(&cc) {
        // derivative-bound constants recorded on a fine grid per cube
        record_constants();
    }

    double value(std::size_t i, const Vec& x) const {
        const double b = bump(cc2(i), x);
        if (b == 0.0) return 0.0;
        return b / local_sum(x);
    }

    Vec gradient(std::size_t i, const Vec& x) const {
        const int n = x.size();
        const double b = bump(cc2(i), x);
        Vec gb = bump_gradient(cc2(i), x);
        if (b == 0.0 && gb.norm() == 0.0) return Vec::Zero(n);
        double s = 0.0;
        Vec gs = Vec::Zero(n);
        for (std::size_t j : neighbors(x)) {
            s += bump(cc2(j), x);
            gs += bump_gradient(cc2(j), x);
        }
        if (s < 1e-12) throw OverlapTooLarge("partition normalizer vanished inside the domain");
        return gb / s - (b / (s * s)) * gs;
    }

    double sum_at(const Vec& x) const {
        double s = 0.0;
        for (std::size_t j : neighbors(x)) s += value(j, x);
        return s;
    }

    std::vector<std::size_t> neighbors(const Vec& x) const {
        Box pt;
        pt.lo = x;
        pt.hi = x;
        return cc_->intersecting(pt, 1);
    }

    const CubeCollection& collection() const { return *cc_; }
    double gradient_bound_constant() const { return c1_; }   // sup |grad phi| d(Q)
    double second_derivative_constant() const { return c2_; } // sup |d2 phi| d(Q)^2

private:
    const DyadicCube& cc2(std::size_t i) const { return (*cc_)[i]; }

    // quintic smoothstep: C^2 ramp with S(0)=0, S(1)=1
    static double smoothstep(double w) { return w * w * w * (10.0 + w * (-15.0 + 6.0 * w)); }
    static double smoothstep_d(double w) { return 30.0 * w * w * (1.0 + w * (-2.0 + w)); }

    // per-axis profile: 1 on Q, quintic taper across Q* \ Q
    static double ramp(double v) {
        if (v <= 1.0) return 1.0;
        if (v >= 2.0) return 0.0;
        return smoothstep(2.0 - v);
    }
    static double ramp_d(double v) {
        if (v <= 1.0 || v >= 2.0) return 0.0;
        return -smoothstep_d(2.0 - v);
    }

    static double bump(const DyadicCube& q, const Vec& x) {
        double b = 1.0;
        const double h = q.side / 2.0;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            b *= ramp(std::abs(x[j] - q.center[j]) / h);
            if (b == 0.0) return 0.0;
        }
        return b;
    }

    static Vec bump_gradient(const DyadicCube& q, const Vec& x) {
        const int n = x.size();
        const double h = q.side / 2.0;
        Vec vals(n), ders(n);
        for (int j = 0; j < n; ++j) {
            const double u = x[j] - q.center[j];
            const double v = std::abs(u) / h;
            vals[j] = ramp(v);
            ders[j] = ramp_d(v) * (u >= 0 ? 1.0 : -1.0) / h;
        }
        Vec g(n);
        for (int j = 0; j < n; ++j) {
            double prod = ders[j];
            for (int l = 0; l < n; ++l)
                if (l != j) prod *= vals[l];
            g[j] = prod;
        }
        return g;
    }

    double local_sum(const Vec& x) const {
        double s = 0.0;
        for (std::size_t j : neighbors(x)) s += bump(cc2(j), x);
        if (s < 1e-12) throw OverlapTooLarge("partition normalizer vanished inside the domain");
        return s;
    }

    void record_constants() {
        c1_ = 0.0;
        c2_ = 0.0;
        const int n = cc_->domain().dimension();
        const int per_axis = n == 1 ? 64 : 12;
        for (std::size_t i = 0; i < cc_->size(); ++i) {
            const DyadicCube& q = (*cc_)[i];
            const Box star = q.dilated(1);
            std::vector<int> idx(n, 0);
            while (true) {
                Vec x(n);
                for (int j = 0; j < n; ++j)
                    x[j] = star.lo[j] + (idx[j] + 0.5) * (star.hi[j] - star.lo[j]) / per_axis;
                if (cc_->domain().contains(x)) {
                    c1_ = std::max(c1_, gradient(i, x).norm() * q.side);
                    // second derivatives by central differences, scale-aware step
                    const double h = q.side * 1e-4;
                    for (int a = 0; a < n; ++a) {
                        Vec xp = x, xm = x;
                        xp[a] += h;
                        xm[a] -= h;
                        if (!cc_->domain().contains(xp) || !cc_->domain().contains(xm)) continue;
                        const double second =
                            (value(i, xp) - 2.0 * value(i, x) + value(i, xm)) / (h * h);
                        c2_ = std::max(c2_, std::abs(second) * q.side * q.side);
                    }
                }
                int j = 0;
                for (; j < n; ++j) {
                    if (++idx[j] < per_axis) break;
                    idx[j] = 0;
                }
                if (j == n) break;
            }
        }
    }

    const CubeCollection* cc_;
    double c1_ = 0.0, c2_ = 0.0;
};

inline PartitionOfUnity build_partition(const CubeCollection& cc) { return PartitionOfUnity(cc); }

/// Max over sampled (Q, alpha, x in Q*) of |phi_Q(x) - phi_Q(sigma_alpha x)|
/// / |<x,alpha>|, normalized by d(Q)^{-1}; Taylor fallback |d_alpha phi| d(Q)
/// on the hyperplane.
inline double difference_quotient_check(const PartitionOfUnity& pu, const RootSystem& rs,
                                        int samples_per_cube) {
    double worst = 0.0;
    const auto& cc = pu.collection();
    const int n = cc.domain().dimension();
    for (std::size_t i = 0; i < cc.size(); ++i) {
        const DyadicCube& q = cc[i];
        const Box star = q.dilated(1);
        const int per_axis = std::max(2, static_cast<int>(std::round(
                                             std::pow(static_cast<double>(samples_per_cube),
                                                      1.0 / n))));
        std::vector<int> idx(n, 0);
        while (true) {
            Vec x(n);
            for (int j = 0; j < n; ++j)
                x[j] = star.lo[j] + (idx[j] + 0.5) * (star.hi[j] - star.lo[j]) / per_axis;
            if (cc.domain().contains(x)) {
                for (const Vec& alpha : rs.roots()) {
                    const double ip = x.dot(alpha);
                    double quotient;
                    if (std::abs(ip) < 1e-8) {
                        quotient = std::abs(pu.gradient(i, x).dot(alpha));
                    } else {
                        const Vec sx = reflect(x, alpha);
                        if (!cc.domain().contains(sx)) continue;
                        quotient = std::abs(pu.value(i, x) - pu.value(i, sx)) / std::abs(ip);
                    }
                    worst = std::max(worst, quotient * q.side);
                }
            }
            int j = 0;
            for (; j < n; ++j) {
                if (++idx[j] < per_axis) break;
                idx[j] = 0;
            }
            if (j == n) break;
        }
    }
    return worst;
}

}  // namespace dunkl
