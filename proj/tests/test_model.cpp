#include <cmath>
#include <random>

#include <doctest.h>

#include "atomtrans/model.hpp"
#include "atomtrans/units.hpp"

using namespace atomtrans;

TEST_CASE("unit system conversion constants") {
    UnitSystem sr = make_unit_system(strontium88());
    // Frozen reference values computed from CODATA constants by hand.
    CHECK(sr.energy_unit_J() == doctest::Approx(1.45972e-25).epsilon(1e-4));
    CHECK(sr.energy_from_mK(1.0) == doctest::Approx(0.0945832).epsilon(1e-5));
    CHECK(sr.epsilon() == doctest::Approx(7.22449e-4).epsilon(1e-5));
    CHECK(sr.momentum_unit_SI() == doctest::Approx(1.45972e-25).epsilon(1e-4));

    UnitSystem li = make_unit_system(lithium6());
    CHECK(li.energy_unit_J() == doctest::Approx(9.98834e-27).epsilon(1e-4));
    CHECK(li.energy_from_mK(1.0) == doctest::Approx(1.38226).epsilon(1e-5));
    CHECK(li.epsilon() == doctest::Approx(1.05580e-2).epsilon(1e-5));
}

TEST_CASE("conversions round trip") {
    UnitSystem u = make_unit_system(strontium88());
    CHECK(u.energy_to_SI(u.energy_to_internal(2.5e-26)) == doctest::Approx(2.5e-26));
    CHECK(u.energy_to_mK(u.energy_from_mK(0.73)) == doctest::Approx(0.73));
    CHECK(u.momentum_to_SI(u.momentum_to_internal(1e-26)) == doctest::Approx(1e-26));
}

TEST_CASE("trap-depth escape momentum matches the quoted SI value") {
    UnitSystem u = make_unit_system(strontium88());
    double p_td = std::sqrt(2.0 * u.energy_from_mK(1.0));  // m = 1 internally
    CHECK(u.momentum_to_SI(p_td) == doctest::Approx(0.63e-25).epsilon(0.02));
}

TEST_CASE("control interpolation and clamping") {
    ControlSignal c = make_control(2.0, 5, 0.0, -1.0);
    for (std::size_t i = 0; i < 5; ++i) c.u[i] = double(i);
    CHECK(c.u_at(0.25) == doctest::Approx(0.5));
    CHECK(c.u_at(-1.0) == doctest::Approx(0.0));
    CHECK(c.u_at(9.0) == doctest::Approx(4.0));
    CHECK(c.v_at(1.3) == doctest::Approx(-1.0));
    CHECK(c.t_f() == doctest::Approx(2.0));
}

TEST_CASE("control validation rejects malformed grids") {
    ControlSignal c;
    c.times = {0.0, 1.0};
    c.u = {0.0};
    c.v = {0.0, 0.0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.u = {0.0, 0.0};
    c.times = {0.5, 1.0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.times = {0.0, 0.0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("remesh stretches the waveform onto a new duration") {
    ControlSignal c = make_control(1.0, 11, 0.0, -1.0);
    for (std::size_t i = 0; i < 11; ++i) c.u[i] = std::sin(c.times[i]);
    ControlSignal r = remesh_control(c, 2.0, 21);
    CHECK(r.t_f() == doctest::Approx(2.0));
    // Same shape, stretched: r.u at t equals c.u at t/2.
    CHECK(r.u_at(1.0) == doctest::Approx(c.u_at(0.5)).epsilon(1e-12));
    CHECK(r.u.front() == doctest::Approx(c.u.front()));
    CHECK(r.u.back() == doctest::Approx(c.u.back()));
}

TEST_CASE("potential derivatives agree with Richardson finite differences") {
    TrapPair traps{{0.0, -0.0946, 1.5}, {10.0, -0.0946, 1.5}};
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> ux(-2.0, 12.0), uu(-1.0, 11.0), uv(-0.5, -0.05);
    auto richardson = [](auto f, double h) {
        double d1 = f(h), d2 = f(0.5 * h);
        return (4.0 * d2 - d1) / 3.0;
    };
    for (int trial = 0; trial < 200; ++trial) {
        double x = ux(rng), u = uu(rng), v = uv(rng);
        PotentialDerivs d = total_potential_derivs(x, u, v, traps);
        double h = 1e-4;

        auto dx = richardson(
            [&](double s) {
                return (total_potential_derivs(x + s, u, v, traps).U -
                        total_potential_derivs(x - s, u, v, traps).U) /
                       (2.0 * s);
            },
            h);
        CHECK(d.Ux == doctest::Approx(dx).epsilon(1e-7).scale(1.0));

        auto dxx = richardson(
            [&](double s) {
                return (total_potential_derivs(x + s, u, v, traps).Ux -
                        total_potential_derivs(x - s, u, v, traps).Ux) /
                       (2.0 * s);
            },
            h);
        CHECK(d.Uxx == doctest::Approx(dxx).epsilon(1e-7).scale(1.0));

        auto dxu = richardson(
            [&](double s) {
                return (total_potential_derivs(x, u + s, v, traps).Ux -
                        total_potential_derivs(x, u - s, v, traps).Ux) /
                       (2.0 * s);
            },
            h);
        CHECK(d.Uxu == doctest::Approx(dxu).epsilon(1e-7).scale(1.0));

        auto dxv = richardson(
            [&](double s) {
                return (total_potential_derivs(x, u, v + s, traps).Ux -
                        total_potential_derivs(x, u, v - s, traps).Ux) /
                       (2.0 * s);
            },
            h);
        CHECK(d.Uxv == doctest::Approx(dxv).epsilon(1e-7).scale(1.0));
    }
}

TEST_CASE("tweezer force maximum matches a grid search") {
    double v = -0.141875, sigma = 1.5;  // -1.5 mK in Sr internal units
    TweezerForceLimit lim = max_tweezer_force(v, sigma);
    double best = 0.0, best_x = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        double x = -5.0 + 10.0 * i / 200000.0;
        double f = std::abs(2.0 * x / (sigma * sigma) * v * std::exp(-x * x / (sigma * sigma)));
        if (f > best) {
            best = f;
            best_x = x;
        }
    }
    CHECK(lim.f_max == doctest::Approx(best).epsilon(1e-8));
    CHECK(lim.argmax_offset == doctest::Approx(std::abs(best_x)).epsilon(1e-4));
    // Frozen value for the Table-style configuration.
    CHECK(lim.f_max == doctest::Approx(0.0811305).epsilon(1e-4));
    CHECK(*lim.t_lim(10.0) == doctest::Approx(15.7008).epsilon(1e-4));
}

TEST_CASE("noise coefficients satisfy the minimal-uncertainty relation") {
    double eps = 7.22449e-4;
    NoiseParams n = noise_coefficients(1e-2, 0.0945832, eps);
    CHECK(n.d_p == doctest::Approx(1e-2 * 0.0945832));
    // Equality branch of D_p D_x >= (gamma hbar / 2)^2.
    CHECK(n.d_p * n.d_x == doctest::Approx(0.25 * 1e-4 * eps * eps).epsilon(1e-12));
    NoiseParams off = noise_coefficients(0.0, 0.1, eps);
    CHECK(off.d_p == 0.0);
    CHECK(off.d_x == 0.0);
    CHECK_THROWS_AS(noise_coefficients(-1.0, 0.1, eps), std::invalid_argument);
    CHECK_THROWS_AS(noise_coefficients(1e-2, 0.0, eps), std::invalid_argument);
}

TEST_CASE("static potential sums both wells") {
    TrapPair traps{{0.0, -1.0, 1.5}, {10.0, -1.0, 1.5}};
    CHECK(static_potential(0.0, traps) ==
          doctest::Approx(-1.0 - std::exp(-100.0 / 2.25)).epsilon(1e-12));
    CHECK(static_force(5.0, traps) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(static_force(1.0, traps) < 0.0);  // pulled back toward the left well
}
