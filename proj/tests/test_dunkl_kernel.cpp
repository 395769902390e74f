#include <catch2/catch_amalgamated.hpp>

#include "dunkl/dunkl_kernel.hpp"

#include <cmath>
#include <numbers>

using namespace dunkl;
using Catch::Approx;

TEST_CASE("normalization constant matches the gamma closed form") {
    for (double k : {0.0, 0.5, 1.0, 2.5}) {
        DunklKernel1D ker(k);
        const double closed = std::pow(2.0, 2 * k + 0.5) * std::tgamma(k + 0.5);
        CHECK(ker.normalization() == Approx(closed).epsilon(1e-11));
    }
}

TEST_CASE("k = 0 degenerates to the exponential") {
    DunklKernel1D ker(0.0);
    for (double x : {-3.0, -0.2, 0.0, 1.0, 2.7})
        for (double y : {-1.5, 0.0, 0.4, 3.0})
            CHECK(ker.eval(x, y) == Approx(std::exp(x * y)).epsilon(1e-9));
    auto [a, b] = ker.eval_imag(2.0);
    CHECK(a == Approx(std::cos(2.0)).margin(1e-10));
    CHECK(b == Approx(std::sin(2.0)).margin(1e-10));
}

TEST_CASE("k = 1 has hyperbolic and trigonometric closed forms") {
    DunklKernel1D ker(1.0);
    // Etilde(s) = sinh(s)/s + (s cosh s - sinh s)/s^2
    for (double s : {0.3, 1.0, 2.5, 7.0, 30.0, 200.0}) {
        const double closed = std::sinh(s) / s + (s * std::cosh(s) - std::sinh(s)) / (s * s);
        CHECK(ker.eval_product(s) == Approx(closed).epsilon(1e-9));
        const double closed_neg =
            std::sinh(s) / s - (s * std::cosh(s) - std::sinh(s)) / (s * s);
        CHECK(ker.eval_product(-s) == Approx(closed_neg).epsilon(1e-8));
    }
    CHECK(ker.eval(1.0, 1.0) == Approx(std::cosh(1.0)).epsilon(1e-10));
    // A(s) = sin(s)/s, B(s) = (sin s - s cos s)/s^2
    for (double s : {0.2, 1.0, 3.7, 12.0, 55.0, 140.0}) {
        auto [a, b] = ker.eval_imag(s);
        CHECK(a == Approx(std::sin(s) / s).margin(2e-9));
        CHECK(b == Approx((std::sin(s) - s * std::cos(s)) / (s * s)).margin(2e-9));
    }
}

TEST_CASE("ODE evaluation agrees with the power-series oracle") {
    for (double k : {0.5, 1.0, 2.5}) {
        DunklKernel1D ker(k);
        for (double x = -3.0; x <= 3.01; x += 0.75) {
            for (double y = -3.0; y <= 3.01; y += 0.75) {
                const double oracle = ker.series(x * y);
                CHECK(ker.eval(x, y) == Approx(oracle).epsilon(1e-8).margin(1e-10));
            }
        }
        // imaginary branch against the series on the same range
        for (double s = 0.1; s <= 9.0; s += 0.9) {
            auto [a, b] = ker.eval_imag(s);
            auto [ao, bo] = ker.series_imag(s);
            CHECK(a == Approx(ao).margin(1e-9));
            CHECK(b == Approx(bo).margin(1e-9));
        }
    }
}

TEST_CASE("kernel axioms") {
    DunklKernel1D ker(1.5);
    // E(0,y) = E(x,0) = 1
    for (double v : {-8.0, -1.0, 0.0, 0.3, 12.0}) {
        CHECK(ker.eval(0.0, v) == 1.0);
        CHECK(ker.eval(v, 0.0) == 1.0);
    }
    // symmetry
    for (double x : {0.7, -2.0})
        for (double y : {1.9, 3.3}) CHECK(ker.eval(x, y) == Approx(ker.eval(y, x)).epsilon(1e-12));
    // boundedness on the imaginary axis: |E(i xi, x)| <= 1
    for (double s = 0.0; s <= 120.0; s += 0.37) {
        auto [a, b] = ker.eval_imag(s);
        CHECK(a * a + b * b <= 1.0 + 1e-10);
    }
    // |E(i xi, x) - 1| <= C ||x|| ||xi||: measure C over |x|,|xi| <= 2
    double cmax = 0.0;
    for (double x = 0.1; x <= 2.0; x += 0.1) {
        for (double xi = 0.1; xi <= 2.0; xi += 0.1) {
            auto [a, b] = ker.eval_imag(x * xi);
            cmax = std::max(cmax, std::hypot(a - 1.0, b) / (x * xi));
        }
    }
    CHECK(cmax < 1.5);
    CHECK(cmax > 0.0);
}

TEST_CASE("guards") {
    DunklKernel1D ker(1.0);
    CHECK_THROWS_AS(ker.eval(60.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(DunklKernel1D(-1.0), std::invalid_argument);
    // table extension is transparent
    DunklKernel1D small(0.5, 1e-10, 8.0);
    auto [a1, b1] = small.eval_imag(40.0);
    DunklKernel1D big(0.5, 1e-10, 64.0);
    auto [a2, b2] = big.eval_imag(40.0);
    CHECK(a1 == Approx(a2).margin(1e-12));
    CHECK(b1 == Approx(b2).margin(1e-12));
}
