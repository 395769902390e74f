#include <catch2/catch_amalgamated.hpp>

#include "dunkl/geometry.hpp"
#include "dunkl/measure.hpp"

#include <random>

using namespace dunkl;
using Catch::Approx;

TEST_CASE("A1 preset basics") {
    auto rs = RootSystem::a1(1.0);
    REQUIRE(rs.dimension() == 1);
    REQUIRE(rs.roots().size() == 2);
    for (const auto& a : rs.roots()) CHECK(a.squaredNorm() == Approx(2.0).margin(1e-12));
    CHECK(rs.homogeneous_dimension() == Approx(3.0));  // N + sum k over both roots
    CHECK(rs.group_order() == 2);
}

TEST_CASE("zero multiplicity gives homogeneous dimension N") {
    CHECK(RootSystem::a1(0.0).homogeneous_dimension() == Approx(1.0));
    CHECK(RootSystem::b2(0.0, 0.0).homogeneous_dimension() == Approx(2.0));
    CHECK(RootSystem::trivial(3).homogeneous_dimension() == Approx(3.0));
}

TEST_CASE("B2 group closure has order 8") {
    auto rs = RootSystem::b2(1.0, 0.5);
    CHECK(rs.group_order() == 8);
    CHECK(rs.roots().size() == 8);
    CHECK(rs.orbits().size() == 2);
    CHECK(rs.homogeneous_dimension() == Approx(2.0 + 4 * 1.0 + 4 * 0.5));
}

TEST_CASE("dihedral presets") {
    auto d3 = RootSystem::dihedral(3, {0.7});
    CHECK(d3.group_order() == 6);
    CHECK(d3.orbits().size() == 1);
    CHECK(d3.homogeneous_dimension() == Approx(2.0 + 6 * 0.7));

    auto d6 = RootSystem::dihedral(6, {0.5, 1.5});
    CHECK(d6.group_order() == 12);
    CHECK(d6.orbits().size() == 2);
}

TEST_CASE("reflect") {
    auto rs = RootSystem::a1(2.0);
    const Vec alpha = rs.roots()[0];
    CHECK(reflect(make_vec({3.0}), alpha)[0] == Approx(-3.0));

    auto b2 = RootSystem::b2(1.0, 1.0);
    const Vec diag = *std::find_if(b2.roots().begin(), b2.roots().end(), [](const Vec& a) {
        return std::abs(a[0] - 1.0) < 1e-12 && std::abs(a[1] - 1.0) < 1e-12;
    });
    const Vec perp = make_vec({1.0, -1.0});  // orthogonal to (1,1)
    CHECK((reflect(perp, diag) - perp).norm() == Approx(0.0).margin(1e-14));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        const Vec x = make_vec({u(rng), u(rng)});
        CHECK((reflect(reflect(x, diag), diag) - x).norm() < 1e-13);
    }
}

TEST_CASE("orbit distance") {
    auto rs = RootSystem::a1(1.0);
    CHECK(rs.orbit_distance(make_vec({1.0}), make_vec({-1.0})) == Approx(0.0).margin(1e-14));
    CHECK(rs.orbit_distance(make_vec({2.5}), make_vec({2.5})) == 0.0);

    auto b2 = RootSystem::b2(1.0, 1.0);
    CHECK(b2.orbit_distance(make_vec({1.0, 0.0}), make_vec({0.0, 1.0})) ==
          Approx(0.0).margin(1e-13));

    // invariance under the group action, exact by the min over G
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 50; ++i) {
        const Vec x = make_vec({u(rng), u(rng)}), y = make_vec({u(rng), u(rng)});
        const double d = b2.orbit_distance(x, y);
        CHECK(d <= (x - y).norm() + 1e-15);
        for (const auto& g : b2.group_elements())
            CHECK(b2.orbit_distance(g * x, y) == Approx(d).margin(1e-12));
    }
}

TEST_CASE("orbit of box") {
    auto rs = RootSystem::a1(1.0);
    Box b;
    b.lo = make_vec({1.0});
    b.hi = make_vec({2.0});
    auto orb = orbit_of_box(rs, b);
    REQUIRE(orb.size() == 2);
    CHECK(orb[0].contains(make_vec({1.5})));
    CHECK(orb[1].contains(make_vec({-1.5})));
    CHECK_FALSE(orb[1].contains(make_vec({1.5})));

    auto triv = RootSystem::trivial(1);
    CHECK(orbit_of_box(triv, b).size() == 1);
}

TEST_CASE("orbit of box: B2 union measure bounded by |G| copies") {
    auto rs = RootSystem::b2(1.0, 0.5);
    WeightedMeasure wm(rs);
    Box b;
    b.lo = make_vec({0.1, -0.4});
    b.hi = make_vec({1.1, 0.6});
    auto orb = orbit_of_box(rs, b);
    REQUIRE(orb.size() == 8);

    const double wbox = wm.integrate([](const Vec&) { return 1.0; }, b, 1e-8).value;

    // Monte Carlo dw-volume of the union over a bounding box.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    const int n = 200000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec x = make_vec({u(rng), u(rng)});
        bool in_union = false;
        for (const auto& ob : orb)
            if (ob.contains(x)) {
                in_union = true;
                break;
            }
        if (in_union) acc += wm.weight(x);
    }
    const double vol_bounding = 2.4 * 2.4;
    const double union_dw = acc / n * vol_bounding;
    CHECK(union_dw <= 8.0 * wbox * 1.02);
    CHECK(union_dw > 0.0);
}

TEST_CASE("explicit root validation errors") {
    const double s2 = std::numbers::sqrt2;
    CHECK_THROWS_AS(RootSystem({make_vec({1.0}), make_vec({-1.0})}, {1.0}), NonNormalizedRoot);
    // missing the negative of a root
    CHECK_THROWS_AS(RootSystem({make_vec({s2, 0.0}), make_vec({-s2, 0.0}), make_vec({0.0, s2})},
                               {1.0, 1.0}),
                    NonNormalizedRoot);
    // axis pair plus one diagonal pair: not closed under the diagonal reflection
    CHECK_THROWS_AS(RootSystem({make_vec({s2, 0.0}), make_vec({-s2, 0.0}), make_vec({1.0, 1.0}),
                                make_vec({-1.0, -1.0})},
                               {1.0, 1.0}),
                    NotClosedUnderReflection);
    // wrong number of orbit multiplicities
    CHECK_THROWS_AS(RootSystem({make_vec({s2}), make_vec({-s2})}, {1.0, 2.0}),
                    NonInvariantMultiplicity);
    CHECK_THROWS_AS(RootSystem::a1(-0.5), NonInvariantMultiplicity);
}

TEST_CASE("product-of-rank-one detection") {
    CHECK(RootSystem::a1(1.0).is_product_of_rank_one());
    CHECK(RootSystem::a1_power({1.0, 0.5}).is_product_of_rank_one());
    CHECK_FALSE(RootSystem::b2(1.0, 1.0).is_product_of_rank_one());
    auto ks = RootSystem::a1_power({1.0, 0.5}).rank_one_multiplicities();
    REQUIRE(ks.size() == 2);
    CHECK(ks[0] == Approx(1.0));
    CHECK(ks[1] == Approx(0.5));
}
