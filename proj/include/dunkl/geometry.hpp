#pragma once

// Root systems, multiplicity functions, reflection groups and orbit geometry.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dunkl {

// Small dynamic vectors/matrices, stack-allocated up to dimension 8.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 8, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 8, 8>;

inline Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

struct NonNormalizedRoot : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotClosedUnderReflection : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonInvariantMultiplicity : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GroupClosureOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Reflection of x through the hyperplane orthogonal to alpha.
inline Vec reflect(const Vec& x, const Vec& alpha) {
    const double a2 = alpha.squaredNorm();
    return x - (2.0 * x.dot(alpha) / a2) * alpha;
}

/// A normalized root system (all roots of length sqrt(2)), its multiplicity
/// function and the generated reflection group. Immutable after construction.
class RootSystem {
public:
    static constexpr double kRootNormTol = 1e-12;
    static constexpr double kSetMatchTol = 1e-10;
    static constexpr std::size_t kGroupCap = 1024;

    RootSystem(std::vector<Vec> roots, std::vector<double> orbit_multiplicities)
        : roots_(std::move(roots)) {
        if (roots_.empty()) throw NonNormalizedRoot("root system must be nonempty");
        dim_ = static_cast<int>(roots_[0].size());
        validate_roots();
        build_group();
        compute_orbits();
        assign_multiplicities(orbit_multiplicities);
        check_invariance();
        homog_dim_ = dim_;
        for (double k : mult_) homog_dim_ += k;
    }

    /// Trivial system: no roots, identity group. weight == 1 everywhere.
    static RootSystem trivial(int dimension) {
        RootSystem rs;
        rs.dim_ = dimension;
        rs.group_.push_back(Mat::Identity(dimension, dimension));
        rs.homog_dim_ = dimension;
        return rs;
    }

    static RootSystem a1(double k) { return a1_power({k}); }

    /// Product A1 x ... x A1 with per-factor multiplicities.
    static RootSystem a1_power(const std::vector<double>& ks) {
        const int n = static_cast<int>(ks.size());
        if (n == 0) throw NonNormalizedRoot("A1 power needs at least one factor");
        std::vector<Vec> roots;
        const double s2 = std::numbers::sqrt2;
        for (int j = 0; j < n; ++j) {
            Vec e = Vec::Zero(n);
            e[j] = s2;
            roots.push_back(e);
            roots.push_back(-e);
        }
        return RootSystem(std::move(roots), ks);
    }

    /// Dihedral system I2(m): 2m roots at angles j*pi/m. For even m there are
    /// two orbits (even j containing the x-axis root, odd j); for odd m one.
    static RootSystem dihedral(int m, const std::vector<double>& ks) {
        if (m < 1) throw NonNormalizedRoot("dihedral order must be >= 1");
        std::vector<Vec> roots;
        const double s2 = std::numbers::sqrt2;
        for (int j = 0; j < 2 * m; ++j) {
            const double ang = j * std::numbers::pi / m;
            roots.push_back(make_vec({s2 * std::cos(ang), s2 * std::sin(ang)}));
        }
        return RootSystem(std::move(roots), ks);
    }

    /// B2 = I2(4): axis roots first orbit (k_axis), diagonal roots second (k_diag).
    static RootSystem b2(double k_axis, double k_diag) {
        return dihedral(4, {k_axis, k_diag});
    }

    int dimension() const { return dim_; }
    const std::vector<Vec>& roots() const { return roots_; }
    double multiplicity(std::size_t root_index) const { return mult_[root_index]; }
    const std::vector<double>& multiplicities() const { return mult_; }
    const std::vector<std::vector<int>>& orbits() const { return orbits_; }
    const std::vector<Mat>& group_elements() const { return group_; }
    std::size_t group_order() const { return group_.size(); }
    double homogeneous_dimension() const { return homog_dim_; }

    double sum_multiplicities() const { return homog_dim_ - dim_; }

    /// d(x, y) = min over the group of ||sigma(x) - y||.
    double orbit_distance(const Vec& x, const Vec& y) const {
        double best = std::numeric_limits<double>::infinity();
        for (const Mat& g : group_) best = std::min(best, (g * x - y).norm());
        return best;
    }

    /// True when the system is A1 or a product of A1 factors (axis roots only).
    bool is_product_of_rank_one() const {
        for (const Vec& a : roots_) {
            int nonzero = 0;
            for (int j = 0; j < dim_; ++j)
                if (std::abs(a[j]) > kSetMatchTol) ++nonzero;
            if (nonzero != 1) return false;
        }
        return true;
    }

    /// Per-axis multiplicities for product systems (0 for rootless axes).
    std::vector<double> rank_one_multiplicities() const {
        if (!is_product_of_rank_one())
            throw std::logic_error("rank_one_multiplicities: not a product of rank-one factors");
        std::vector<double> ks(dim_, 0.0);
        for (std::size_t i = 0; i < roots_.size(); ++i) {
            for (int j = 0; j < dim_; ++j)
                if (roots_[i][j] > kSetMatchTol) ks[j] = mult_[i];
        }
        return ks;
    }

    int find_root(const Vec& a, double tol = kSetMatchTol) const {
        for (std::size_t i = 0; i < roots_.size(); ++i)
            if ((roots_[i] - a).norm() < tol) return static_cast<int>(i);
        return -1;
    }

private:
    RootSystem() = default;

    void validate_roots() {
        for (const Vec& a : roots_) {
            if (static_cast<int>(a.size()) != dim_)
                throw NonNormalizedRoot("roots of mixed dimension");
            if (std::abs(a.squaredNorm() - 2.0) > kRootNormTol)
                throw NonNormalizedRoot("root norm^2 differs from 2: got " +
                                        std::to_string(a.squaredNorm()));
        }
        // R cap alpha*R = {+-alpha} and closure under every reflection.
        for (const Vec& a : roots_) {
            int on_line = 0;
            bool has_minus = false;
            for (const Vec& b : roots_) {
                const double c = std::abs(a.dot(b));
                if (std::abs(c - 2.0) < 1e-9) {
                    ++on_line;
                    if ((a + b).norm() < kSetMatchTol) has_minus = true;
                }
            }
            if (on_line != 2 || !has_minus)
                throw NonNormalizedRoot("line of a root must meet R exactly in {+alpha,-alpha}");
        }
        for (const Vec& a : roots_) {
            for (const Vec& b : roots_) {
                if (find_root(reflect(b, a)) < 0)
                    throw NotClosedUnderReflection("sigma_alpha(R) != R");
            }
        }
    }

    void build_group() {
        std::vector<Mat> gens;
        const Mat id = Mat::Identity(dim_, dim_);
        for (const Vec& a : roots_) {
            Mat s = id - (2.0 / a.squaredNorm()) * (a * a.transpose());
            gens.push_back(std::move(s));
        }
        group_.push_back(id);
        auto known = [&](const Mat& m) {
            for (const Mat& g : group_)
                if ((g - m).norm() < kSetMatchTol) return true;
            return false;
        };
        std::size_t head = 0;
        while (head < group_.size()) {
            const Mat cur = group_[head++];
            for (const Mat& g : gens) {
                Mat prod = g * cur;
                if (!known(prod)) {
                    group_.push_back(std::move(prod));
                    if (group_.size() > kGroupCap)
                        throw GroupClosureOverflow("reflection group closure exceeded cap");
                }
            }
        }
    }

    void compute_orbits() {
        const int n = static_cast<int>(roots_.size());
        std::vector<int> orbit_of(n, -1);
        for (int i = 0; i < n; ++i) {
            if (orbit_of[i] >= 0) continue;
            const int id = static_cast<int>(orbits_.size());
            std::vector<int> members;
            // Closure of root i under the full group.
            std::vector<int> frontier{i};
            orbit_of[i] = id;
            members.push_back(i);
            while (!frontier.empty()) {
                const int cur = frontier.back();
                frontier.pop_back();
                for (const Mat& g : group_) {
                    const int j = find_root(g * roots_[cur]);
                    if (j < 0) throw NotClosedUnderReflection("group image of a root is not a root");
                    if (orbit_of[j] < 0) {
                        orbit_of[j] = id;
                        members.push_back(j);
                        frontier.push_back(j);
                    }
                }
            }
            orbits_.push_back(std::move(members));
        }
    }

    // Multiplicities are supplied per orbit and expanded, preventing
    // accidental non-invariance.
    void assign_multiplicities(const std::vector<double>& per_orbit) {
        if (per_orbit.size() != orbits_.size())
            throw NonInvariantMultiplicity(
                "expected " + std::to_string(orbits_.size()) + " orbit multiplicities, got " +
                std::to_string(per_orbit.size()));
        for (double k : per_orbit) {
            if (!(k >= 0.0)) throw NonInvariantMultiplicity("multiplicities must be >= 0");
        }
        mult_.assign(roots_.size(), 0.0);
        for (std::size_t o = 0; o < orbits_.size(); ++o)
            for (int i : orbits_[o]) mult_[i] = per_orbit[o];
    }

    void check_invariance() const {
        for (const Mat& g : group_) {
            for (std::size_t i = 0; i < roots_.size(); ++i) {
                const int j = find_root(g * roots_[i]);
                if (j < 0 || std::abs(mult_[i] - mult_[j]) > 0.0)
                    throw NonInvariantMultiplicity("multiplicity is not G-invariant");
            }
        }
    }

    int dim_ = 0;
    std::vector<Vec> roots_;
    std::vector<double> mult_;
    std::vector<std::vector<int>> orbits_;
    std::vector<Mat> group_;
    double homog_dim_ = 0.0;
};

struct Box {
    Vec lo, hi;

    int dimension() const { return static_cast<int>(lo.size()); }
    Vec center() const { return 0.5 * (lo + hi); }
    Vec widths() const { return hi - lo; }
    double volume() const {
        double v = 1.0;
        for (int j = 0; j < dimension(); ++j) v *= hi[j] - lo[j];
        return v;
    }
    bool contains(const Vec& x, double tol = 0.0) const {
        for (int j = 0; j < dimension(); ++j)
            if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) return false;
        return true;
    }
    static Box cube(const Vec& center, double side) {
        Box b;
        b.lo = center.array() - side / 2.0;
        b.hi = center.array() + side / 2.0;
        return b;
    }
};

struct Ball {
    Vec center;
    double radius = 0.0;
};

/// Image of an axis-aligned box under one group element; membership testing
/// maps back through the orthogonal inverse.
struct OrientedBox {
    Mat rotation;  // sigma: base -> image
    Box base;

    bool contains(const Vec& x, double tol = 0.0) const {
        return base.contains(rotation.transpose() * x, tol);
    }
    std::vector<Vec> vertices() const {
        const int n = base.dimension();
        std::vector<Vec> out;
        for (int mask = 0; mask < (1 << n); ++mask) {
            Vec v(n);
            for (int j = 0; j < n; ++j) v[j] = (mask >> j & 1) ? base.hi[j] : base.lo[j];
            out.push_back(rotation * v);
        }
        return out;
    }
};

/// All |G| images of a box under the reflection group.
inline std::vector<OrientedBox> orbit_of_box(const RootSystem& rs, const Box& box) {
    std::vector<OrientedBox> out;
    out.reserve(rs.group_order());
    for (const Mat& g : rs.group_elements()) out.push_back(OrientedBox{g, box});
    return out;
}

}  // namespace dunkl
