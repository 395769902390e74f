#include <catch2/catch_amalgamated.hpp>

#include "dunkl/measure.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dunkl;
using Catch::Approx;

namespace {
const Vec kX0 = make_vec({0.0});
}

TEST_CASE("weight values") {
    WeightedMeasure triv(RootSystem::trivial(2));
    CHECK(triv.weight(make_vec({3.0, -4.0})) == 1.0);

    WeightedMeasure wm(RootSystem::a1(1.0));
    // product over both roots: |sqrt2*2| * |-sqrt2*2| = 8
    CHECK(wm.weight(make_vec({2.0})) == Approx(8.0));
    CHECK(wm.weight(make_vec({0.0})) == 0.0);
    CHECK(wm.weight(make_vec({-2.0})) == Approx(8.0));

    WeightedMeasure wh(RootSystem::a1(0.5));
    CHECK(wh.weight(make_vec({3.0})) == Approx(std::numbers::sqrt2 * 3.0));  // 2^k |x|^{2k}, k=1/2
}

TEST_CASE("integrate over intervals") {
    WeightedMeasure triv(RootSystem::trivial(1));
    auto one = [](const Vec&) { return 1.0; };
    CHECK(triv.integrate(one, Ball{kX0, 3.0}, 1e-10).value == Approx(6.0));

    WeightedMeasure wm(RootSystem::a1(1.0));
    // w(B(0,r)) = int 2u^2 = 4r^3/3
    CHECK(wm.integrate(one, Ball{kX0, 1.0}, 1e-10).value == Approx(4.0 / 3.0).epsilon(1e-9));

    // off-center interval, closed form 304/3 and a dense midpoint oracle
    const double closed = 304.0 / 3.0;
    double riemann = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const double u = 4.0 + (i + 0.5) * 2.0 / n;
        riemann += 2.0 * u * u;
    }
    riemann *= 2.0 / n;
    const double got = wm.integrate(one, Ball{make_vec({5.0}), 1.0}, 1e-10).value;
    CHECK(got == Approx(closed).epsilon(1e-9));
    CHECK(got == Approx(riemann).epsilon(1e-6));
}

TEST_CASE("integrate non-constant integrand with estimated error") {
    WeightedMeasure wm(RootSystem::a1(1.0));
    // int_{-1}^{1} u^2 * 2u^2 du = 4/5
    auto f = [](const Vec& x) { return x[0] * x[0]; };
    auto r = wm.integrate(f, Ball{kX0, 1.0}, 1e-10);
    CHECK(r.value == Approx(0.8).epsilon(1e-9));
    CHECK(r.est_error <= 1e-8);
    CHECK(r.converged);
}

TEST_CASE("ball volume closed forms") {
    WeightedMeasure triv(RootSystem::trivial(1));
    CHECK(triv.ball_volume(kX0, 2.5) == Approx(5.0));

    WeightedMeasure wm(RootSystem::a1(1.0));
    CHECK(wm.ball_volume(kX0, 1.0) == Approx(4.0 / 3.0).epsilon(1e-9));
    // far from the hyperplane the weight is locally constant
    CHECK(wm.ball_volume(make_vec({10.0}), 0.1) == Approx(0.2 * wm.weight(make_vec({10.0}))).epsilon(0.02));
}

TEST_CASE("ball volume in 2D") {
    // A1xA1 k=(1,1): w = 4 x^2 y^2, w(B(0,r)) = pi r^6 / 6
    WeightedMeasure wm(RootSystem::a1_power({1.0, 1.0}), 1e-9);
    const double r = 1.3;
    CHECK(wm.ball_volume(make_vec({0.0, 0.0}), r) ==
          Approx(std::numbers::pi * std::pow(r, 6) / 6.0).epsilon(1e-7));

    // box integral: int_{[0,1]x[0,2]} 4x^2y^2 = 4*(1/3)*(8/3)
    Box b;
    b.lo = make_vec({0.0, 0.0});
    b.hi = make_vec({1.0, 2.0});
    CHECK(wm.box_volume(b) == Approx(32.0 / 9.0).epsilon(1e-8));
}

TEST_CASE("surrogate ball volume") {
    WeightedMeasure triv(RootSystem::trivial(2));
    CHECK(triv.surrogate_ball_volume(make_vec({1.0, 1.0}), 0.5) == Approx(0.25));

    WeightedMeasure wm(RootSystem::a1(1.0));
    CHECK(wm.surrogate_ball_volume(kX0, 1.0) == Approx(1.0));

    // one global comparison constant over a log sweep
    double cmax = 0.0, cmin = 1e300;
    for (int ix = 0; ix <= 20; ++ix) {
        const double x = -10.0 + ix;
        for (int jr = 0; jr <= 10; ++jr) {
            const double r = 0.01 * std::pow(10.0 / 0.01, jr / 10.0);
            const double ratio =
                wm.ball_volume(make_vec({x}), r) / wm.surrogate_ball_volume(make_vec({x}), r);
            cmax = std::max(cmax, ratio);
            cmin = std::min(cmin, ratio);
        }
    }
    CHECK(cmax < 4.0);
    CHECK(cmin > 0.25);
}

TEST_CASE("doubling diagnostic") {
    WeightedMeasure triv(RootSystem::trivial(1));
    std::vector<std::pair<Vec, double>> sample{{make_vec({0.3}), 1.0}, {make_vec({-2.0}), 0.5}};
    auto rep = triv.doubling_diagnostic(sample);
    CHECK(rep.min_ratio == Approx(2.0).epsilon(1e-9));
    CHECK(rep.max_ratio == Approx(2.0).epsilon(1e-9));

    WeightedMeasure wm(RootSystem::a1(1.0));
    std::vector<std::pair<Vec, double>> sweep;
    for (int i = 0; i <= 16; ++i)
        for (double r : {0.05, 0.5, 2.0})
            sweep.emplace_back(make_vec({i * 0.5}), r);
    auto rep2 = wm.doubling_diagnostic(sweep);
    CHECK(rep2.ceiling_2Nh == Approx(8.0));
    CHECK(rep2.floor_2N == Approx(2.0));
    CHECK(rep2.max_ratio <= 8.0 * (1 + 1e-3));
    CHECK(rep2.min_ratio >= 2.0 * (1 - 1e-3));
    // exact ceiling at the origin
    CHECK(wm.ball_volume(kX0, 2.0) / wm.ball_volume(kX0, 1.0) == Approx(8.0).epsilon(1e-8));
}

TEST_CASE("scaling by homogeneous dimension") {
    WeightedMeasure wm(RootSystem::a1(1.0), 1e-9);
    const double nh = wm.context().homogeneous_dimension();
    const Vec x = make_vec({1.7});
    const double r = 0.8;
    const double base = wm.ball_volume(x, r);
    for (double t : {0.5, 2.0, 3.0}) {
        const double scaled = wm.ball_volume(Vec(t * x), t * r);
        CHECK(scaled == Approx(std::pow(t, nh) * base).epsilon(1e-6));
    }

    WeightedMeasure w2(RootSystem::a1_power({1.0, 0.5}), 1e-9);
    const double nh2 = w2.context().homogeneous_dimension();
    const Vec x2 = make_vec({0.6, -1.1});
    const double b2 = w2.ball_volume(x2, 0.7);
    for (double t : {0.5, 2.0}) {
        CHECK(w2.ball_volume(Vec(t * x2), t * 0.7) == Approx(std::pow(t, nh2) * b2).epsilon(1e-6));
    }
}

TEST_CASE("growth sandwich over radius pairs") {
    WeightedMeasure wm(RootSystem::a1(1.0));
    const double N = 1.0, Nh = 3.0;
    double cmax = 1.0;
    for (double x : {0.0, 0.4, 1.0, 5.0}) {
        for (double r1 : {0.1, 0.5, 1.0}) {
            for (double factor : {1.5, 4.0, 16.0}) {
                const double r2 = r1 * factor;
                const double ratio = wm.ball_volume(make_vec({x}), r2) / wm.ball_volume(make_vec({x}), r1);
                cmax = std::max(cmax, std::max(std::pow(factor, N) / ratio, ratio / std::pow(factor, Nh)));
            }
        }
    }
    CHECK(cmax <= 1.0 + 1e-9);  // for A1 the sandwich holds with constant 1
}

TEST_CASE("reflection invariance of ball volumes") {
    WeightedMeasure wm(RootSystem::b2(1.0, 0.5), 1e-8);
    const Vec x = make_vec({1.2, 0.4});
    const double v = wm.ball_volume(x, 0.9);
    for (const auto& g : wm.context().group_elements())
        CHECK(wm.ball_volume(Vec(g * x), 0.9) == Approx(v).epsilon(1e-7));
}

TEST_CASE("error paths") {
    WeightedMeasure wm(RootSystem::a1(1.0));
    auto bad = [](const Vec&) { return std::numeric_limits<double>::infinity(); };
    CHECK_THROWS_AS(wm.integrate(bad, Ball{kX0, 1.0}, 1e-8), NonFiniteIntegrand);

    WeightedMeasure tight(RootSystem::a1(0.25), 1e-13, 3);  // k with slow endpoint convergence
    auto one = [](const Vec&) { return 1.0; };
    CHECK_THROWS_AS(tight.integrate(one, Ball{make_vec({0.001}), 1.0}, 1e-13), ToleranceNotReached);
}

TEST_CASE("weight is invariant under the reflection group") {
    WeightedMeasure wm(RootSystem::b2(1.0, 0.5));
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 60; ++i) {
        const Vec x = make_vec({u(rng), u(rng)});
        const double w0 = wm.weight(x);
        for (const auto& g : wm.context().group_elements())
            CHECK(wm.weight(Vec(g * x)) == Approx(w0).epsilon(1e-10).margin(1e-300));
    }
}
