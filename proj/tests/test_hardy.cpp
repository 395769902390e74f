#include <catch2/catch_amalgamated.hpp>

#include "dunkl/hardy.hpp"

#include <cmath>

using namespace dunkl;
using Catch::Approx;

namespace {

struct Setup {
    RootSystem rs = RootSystem::a1(1.0);
    WeightedMeasure wm{RootSystem::a1(1.0), 1e-8};
    PotentialMeasure pm{PotentialProfile::sqnorm(2.0), WeightedMeasure(RootSystem::a1(1.0), 1e-8)};
    SpatialGrid grid{RootSystem::a1(1.0), -8.0, 8.0, 28};
    SchrodingerKernelEngine eng{RootSystem::a1(1.0), PotentialProfile::sqnorm(2.0),
                                SpatialGrid(RootSystem::a1(1.0), -8.0, 8.0, 28), 16};
    CubeCollection cc;
    Setup()
        : cc(build_stopping_time(
              [] {
                  Box d;
                  d.lo = make_vec({-8.0});
                  d.hi = make_vec({8.0});
                  return d;
              }(),
              PotentialMeasure(PotentialProfile::sqnorm(2.0),
                               WeightedMeasure(RootSystem::a1(1.0), 1e-9)),
              16)) {}
};

MaximalOptions quick_opts(bool schrodinger = true) {
    MaximalOptions o;
    o.t_min = 1.0 / 16.0;
    o.octaves = 8;
    o.per_octave = 4;
    o.schrodinger = schrodinger;
    o.trotter_steps = 16;
    return o;
}

}  // namespace

TEST_CASE("atom validation") {
    Setup s;
    std::size_t big = 0;
    for (std::size_t i = 0; i < s.cc.size(); ++i)
        if (!s.cc[i].boundary_flag && s.cc[i].side > s.cc[big].side) big = i;
    const auto& q = s.cc[big];

    // cancellative atom below the cube scale: all three conditions pass
    Atom a = make_atom(s.grid, s.wm, q.center, q.side / 4.0, big, q.side, "a0");
    auto va = validate_atom(a, s.grid, s.wm, &s.cc);
    CHECK(va.support_ok);
    CHECK(va.size_ok);
    CHECK(va.cancellation_required);
    CHECK(va.cancellation_ok);
    CHECK(va.pass());

    // same bump without mean removal: (C) fails
    Atom bad = a;
    bad.values = bad.values.cwiseAbs();
    for (Eigen::Index i = 0; i < bad.values.size(); ++i)
        bad.values[i] = std::abs(bad.values[i]);
    Atom plain = make_atom(s.grid, s.wm, q.center, q.side / 4.0, big, 0.0, "plain");
    plain.local_scale = q.side;  // below scale yet not mean-removed
    auto vb = validate_atom(plain, s.grid, s.wm, &s.cc);
    CHECK(vb.cancellation_required);
    CHECK_FALSE(vb.cancellation_ok);
    CHECK_FALSE(vb.pass());

    // r >= d(Q): cancellation not required
    Atom wide = make_atom(s.grid, s.wm, q.center, 2.0 * q.side, big, q.side, "wide");
    auto vc = validate_atom(wide, s.grid, s.wm, &s.cc);
    CHECK_FALSE(vc.cancellation_required);
    CHECK(vc.pass());
}

TEST_CASE("maximal function basics") {
    Setup s;
    auto opts = quick_opts(false);  // heat semigroup
    // f = one heat-kernel row: the sup dominates each ladder member
    const double t0 = 0.25;
    Eigen::MatrixXd H0 = s.eng.heat_matrix(0, t0);
    const int j0 = s.grid.nearest_node(0, 1.0);
    Eigen::VectorXd f = H0.col(j0);
    auto fstar = maximal_function(s.eng, f, opts);
    Eigen::MatrixXd Hmin = s.eng.heat_matrix(0, opts.t_min);
    Eigen::VectorXd expected = s.grid.apply({Hmin}, f);
    for (Eigen::Index i = 0; i < fstar.size(); ++i)
        CHECK(fstar[i] >= expected[i] * (1.0 - 1e-9));

    // nonnegative f: the small-t ladder recovers most of the L^1 mass
    Eigen::VectorXd bump(static_cast<Eigen::Index>(s.grid.size()));
    for (Eigen::Index i = 0; i < bump.size(); ++i) {
        const Vec p = s.grid.point(static_cast<std::size_t>(i));
        bump[i] = std::exp(-4.0 * (p[0] - 0.8) * (p[0] - 0.8));
    }
    auto bstar = maximal_function(s.eng, bump, opts);
    CHECK(s.grid.l1_norm(bstar) >= 0.90 * s.grid.l1_norm(bump));

    // Schrodinger maximal function is dominated by the heat one for f >= 0
    auto bstar_k = maximal_function(s.eng, bump, quick_opts(true));
    for (Eigen::Index i = 0; i < bstar.size(); ++i)
        CHECK(bstar_k[i] <= bstar[i] * (1.0 + 1e-9) + 1e-14);

    MaximalOptions coarse = opts;
    coarse.per_octave = 2;
    CHECK_THROWS_AS(maximal_function(s.eng, bump, coarse), GridTooCoarse);
}

TEST_CASE("atom norms: scaling, fixture, negative control") {
    Setup s;
    auto opts = quick_opts();
    auto atoms = make_atom_fixture(s.grid, s.wm, s.cc, 12, 7);
    REQUIRE(atoms.size() == 12);
    auto norms = atom_h1_norms(s.eng, atoms, opts);
    double family_max = 0.0;
    for (double n : norms) {
        CHECK(std::isfinite(n));
        CHECK(n > 0.0);
        family_max = std::max(family_max, n);
    }
    CHECK(family_max < 20.0);

    // exact lambda-scaling
    Atom scaled = atoms[0];
    const double lambda = 0.37;
    scaled.values *= lambda;
    const double n0 = atom_h1_norm(s.eng, atoms[0], opts);
    const double n1 = atom_h1_norm(s.eng, scaled, opts);
    CHECK(n1 == Approx(lambda * n0).epsilon(1e-12));

    // the non-cancellative control exceeds the valid family
    Atom control = make_noncancellative_control(s.grid, s.wm, s.cc);
    auto vc = validate_atom(control, s.grid, s.wm, &s.cc);
    CHECK_FALSE(vc.pass());
    const double cn = atom_h1_norm(s.eng, control, opts);
    CHECK(cn > family_max);

    // cancellative atom beats the same-radius plain bump by a clear factor
    Atom paired = make_atom(s.grid, s.wm, control.center, control.radius,
                            control.cube_index, s.cc[*control.cube_index].side, "paired");
    const double pn = atom_h1_norm(s.eng, paired, opts);
    CHECK(cn > 3.0 * pn);
}

TEST_CASE("atomic combinations") {
    Setup s;
    auto atoms = make_atom_fixture(s.grid, s.wm, s.cc, 4, 11);
    std::vector<double> zero(atoms.size(), 0.0);
    auto [fz, nz] = atomic_combination(zero, atoms, s.grid, s.wm, &s.cc);
    CHECK(fz.cwiseAbs().maxCoeff() == 0.0);
    CHECK(nz == 0.0);

    std::vector<double> pm1{1.0, -1.0, 1.0, -1.0};
    auto [f, declared] = atomic_combination(pm1, atoms, s.grid, s.wm, &s.cc);
    CHECK(declared == Approx(4.0));
    auto opts = quick_opts();
    const double norm = s.grid.l1_norm(maximal_function(s.eng, f, opts));
    auto norms = atom_h1_norms(s.eng, atoms, opts);
    double sum = 0.0;
    for (double n : norms) sum += n;
    CHECK(norm <= sum * (1.0 + 1e-9));  // sublinearity on the grid

    Atom broken = atoms[0];
    broken.values *= 5.0;  // violates the size bound
    std::vector<Atom> badset{broken};
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(atomic_combination(one, badset, s.grid, s.wm, &s.cc),
                    InvalidAtomInCombination);
}

TEST_CASE("local and global maximal norms are comparable on atoms") {
    Setup s;
    auto atoms = make_atom_fixture(s.grid, s.wm, s.cc, 6, 3);
    for (const auto& a : atoms) {
        const double T = s.cc[*a.cube_index].side;
        MaximalOptions local = quick_opts();
        local.t_min = 1.0 / 16.0;
        // cover (t_min, T^2] only
        local.octaves = std::max(1, static_cast<int>(std::ceil(
                                         std::log2(T * T / local.t_min))));
        MaximalOptions global = local;
        global.octaves = local.octaves + 6;
        const double ln = atom_h1_norm(s.eng, a, local);
        const double gn = atom_h1_norm(s.eng, a, global);
        CHECK(gn >= ln * (1.0 - 1e-12));
        CHECK(gn <= 2.5 * ln);
    }
}

TEST_CASE("mass of the local heat maximal function concentrates near the cube") {
    Setup s;
    auto pu = build_partition(s.cc);
    // phi_Q f with f == 1: the partition member itself
    std::size_t qi = s.cc.size() / 2;
    if (s.cc[qi].boundary_flag) qi = s.cc.locate(make_vec({0.3}));
    const auto& q = s.cc[qi];
    Eigen::VectorXd pf(static_cast<Eigen::Index>(s.grid.size()));
    for (Eigen::Index i = 0; i < pf.size(); ++i)
        pf[i] = pu.value(qi, s.grid.point(static_cast<std::size_t>(i)));

    MaximalOptions opts = quick_opts(false);
    opts.t_min = 1.0 / 16.0;
    opts.octaves = std::max(1, static_cast<int>(std::ceil(std::log2(q.side * q.side / opts.t_min))));
    auto star = maximal_function(s.eng, pf, opts);

    const Box q2 = q.dilated(2);
    double outside = 0.0;
    for (Eigen::Index i = 0; i < star.size(); ++i) {
        const Vec x = s.grid.point(static_cast<std::size_t>(i));
        if (!q2.contains(x)) outside += star[i] * s.grid.quad_weight(static_cast<std::size_t>(i));
    }
    const double c_tail = outside / s.grid.l1_norm(pf);
    CHECK(std::isfinite(c_tail));
    CHECK(c_tail < 25.0);
}

TEST_CASE("local atoms carry their own scale") {
    Setup s;
    // below the local scale: cancellation binds
    Atom a = make_atom(s.grid, s.wm, make_vec({1.0}), 0.5, std::nullopt, 2.0, "loc0");
    auto v = validate_atom(a, s.grid, s.wm, nullptr);
    CHECK(v.cancellation_required);
    CHECK(v.pass());
    // at or above the scale: no cancellation requirement
    Atom b = make_atom(s.grid, s.wm, make_vec({1.0}), 2.5, std::nullopt, 2.0, "loc1");
    auto vb = validate_atom(b, s.grid, s.wm, nullptr);
    CHECK_FALSE(vb.cancellation_required);
    CHECK(vb.pass());
    // a cube atom validated without the collection is an error
    Atom c = a;
    c.cube_index = 0;
    CHECK_THROWS_AS(validate_atom(c, s.grid, s.wm, nullptr), std::invalid_argument);
}

TEST_CASE("atom norms are stable under doubling the ladder resolution") {
    Setup s;
    auto atoms = make_atom_fixture(s.grid, s.wm, s.cc, 5, 21);
    MaximalOptions coarse = quick_opts();
    MaximalOptions fine = coarse;
    fine.per_octave = 8;
    auto n4 = atom_h1_norms(s.eng, atoms, coarse);
    auto n8 = atom_h1_norms(s.eng, atoms, fine);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        CHECK(n8[i] >= n4[i] * (1.0 - 1e-12));  // finer sup can only grow
        CHECK(std::abs(n8[i] - n4[i]) <= 0.05 * n4[i]);
    }
}
