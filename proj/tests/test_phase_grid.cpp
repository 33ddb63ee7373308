#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <doctest.h>

#include "atomtrans/field_io.hpp"
#include "atomtrans/fields.hpp"
#include "atomtrans/phase_grid.hpp"

using namespace atomtrans;

namespace {

PhaseGrid grid8() {
    PhaseGrid g;
    g.x_min = -4.0;
    g.x_max = 4.0;
    g.p_min = -4.0;
    g.p_max = 4.0;
    g.n_x = 128;
    g.n_p = 128;
    return g;
}

PhaseField blob(const PhaseGrid& g, double x0, double p0, double s) {
    return sample_field(g, FieldKind::Distribution, [&](double x, double p) {
        return std::exp(-((x - x0) * (x - x0) + (p - p0) * (p - p0)) / (2.0 * s * s));
    });
}

double max_diff(const PhaseField& a, const PhaseField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

PhaseField interior_random(const PhaseGrid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    PhaseField f(g);
    for (int i = g.n_x / 4; i < 3 * g.n_x / 4; ++i)
        for (int k = g.n_p / 4; k < 3 * g.n_p / 4; ++k) f.at(i, k) = uni(rng);
    return f;
}

}  // namespace

TEST_CASE("advection translates rows by p dt and conserves mass") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, -1.0, 0.8, 0.4);
    double mass0 = moments(f).mass;
    double dt = 0.6;
    ops.advect_x(f, dt);
    PhaseField ref = sample_field(g, FieldKind::Distribution, [&](double x, double p) {
        double xc = -1.0 + p * dt;
        return std::exp(-((x - xc) * (x - xc) + (p - 0.8) * (p - 0.8)) / 0.32);
    });
    CHECK(max_diff(f, ref) < 1e-10);
    CHECK(std::abs(moments(f).mass - mass0) / mass0 < 1e-12);
}

TEST_CASE("zero-momentum row is unchanged by advection") {
    PhaseGrid g = grid8();
    g.n_p = 129;  // odd count so p = 0 lies exactly on the grid
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, 0.5, 0.0, 0.5);
    int k0 = g.n_p / 2;
    REQUIRE(g.p(k0) == doctest::Approx(0.0).epsilon(1e-14));
    std::vector<double> row(g.n_x);
    for (int i = 0; i < g.n_x; ++i) row[i] = f.at(i, k0);
    ops.advect_x(f, 0.7);
    for (int i = 0; i < g.n_x; ++i) CHECK(f.at(i, k0) == doctest::Approx(row[i]).epsilon(1e-12));
}

TEST_CASE("two half advections equal one full advection") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField a = blob(g, 0.0, 1.0, 0.5), b = a;
    ops.advect_x(a, 0.4);
    ops.advect_x(b, 0.2);
    ops.advect_x(b, 0.2);
    CHECK(max_diff(a, b) < 1e-12);
}

TEST_CASE("advection guard rejects oversized shifts") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, 0.0, 0.0, 0.5);
    CHECK_THROWS_AS(ops.advect_x(f, 2.0), std::runtime_error);
}

TEST_CASE("classical kick shifts columns by -dU/dx dt") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, 0.0, 0.0, 0.5);
    SUBCASE("zero force is the identity") {
        PhaseField before = f;
        std::vector<double> zero(g.n_x, 0.0);
        ops.kick_p_classical(f, zero, 0.5);
        CHECK(max_diff(f, before) < 1e-13);
    }
    SUBCASE("constant force shifts uniformly") {
        std::vector<double> dudx(g.n_x, -1.2);  // force +1.2
        ops.kick_p_classical(f, dudx, 0.5);
        PhaseField ref = blob(g, 0.0, 0.6, 0.5);
        CHECK(max_diff(f, ref) < 1e-10);
    }
}

TEST_CASE("harmonic Strang composition returns after one period at O(dt^2)") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    double omega = 1.0, period = 2.0 * std::numbers::pi / omega;

    auto run = [&](int n_steps) {
        PhaseField f = blob(g, 1.0, 0.0, 0.35);
        PhaseField f0 = f;
        double dt = period / n_steps;
        std::vector<double> dudx(g.n_x);
        for (int i = 0; i < g.n_x; ++i) dudx[i] = omega * omega * g.x(i);
        for (int s = 0; s < n_steps; ++s) {
            ops.kick_p_classical(f, dudx, 0.5 * dt);
            ops.advect_x(f, dt);
            ops.kick_p_classical(f, dudx, 0.5 * dt);
        }
        return max_diff(f, f0);
    };
    double e1 = run(100), e2 = run(200);
    CHECK(e1 / e2 > 3.0);  // second order
    CHECK(e2 < 0.02);
}

TEST_CASE("Wigner kick equals classical kick for quadratic potentials") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    double k_spring = 0.9, dt = 0.4;
    for (double eps : {0.05, 0.3, 1.0}) {
        PhaseField fc = blob(g, 0.6, -0.4, 0.45), fq = fc;
        std::vector<double> dudx(g.n_x);
        for (int i = 0; i < g.n_x; ++i) dudx[i] = k_spring * g.x(i);
        ops.kick_p_classical(fc, dudx, dt);
        ops.kick_p_wigner(fq, [&](double x) { return 0.5 * k_spring * x * x; }, eps, dt);
        CHECK(max_diff(fc, fq) < 1e-10);
    }
}

TEST_CASE("Wigner kick approaches the classical kick at second order in epsilon") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    double dt = 0.3;
    auto quartic = [](double x) { return 0.05 * x * x * x * x; };
    std::vector<double> dudx(g.n_x);
    for (int i = 0; i < g.n_x; ++i) dudx[i] = 0.2 * g.x(i) * g.x(i) * g.x(i);

    auto err = [&](double eps) {
        PhaseField fc = blob(g, 0.5, 0.0, 0.5), fq = fc;
        ops.kick_p_classical(fc, dudx, dt);
        ops.kick_p_wigner(fq, quartic, eps, dt);
        double l2 = 0.0;
        for (std::size_t i = 0; i < fc.values.size(); ++i) {
            double d = fc.values[i] - fq.values[i];
            l2 += d * d;
        }
        return std::sqrt(l2);
    };
    double e1 = err(0.1), e2 = err(0.05), e3 = err(0.025);
    CHECK(e1 / e2 > 3.5);
    CHECK(e2 / e3 > 3.5);
}

TEST_CASE("constant potential makes the Wigner kick an identity") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, 0.0, 0.5, 0.5), before = f;
    ops.kick_p_wigner(f, [](double) { return 3.7; }, 0.2, 0.5);
    CHECK(max_diff(f, before) < 1e-12);
}

TEST_CASE("momentum diffusion follows the heat kernel") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, 0.0, 0.0, 0.4);
    double mass0 = moments(f).mass;
    double d_p = 0.04, dt = 0.02;
    int n = 25;
    for (int s = 0; s < n; ++s) ops.friction_diffusion(f, 0.0, d_p, 0.0, dt);
    Moments m = moments(f);
    double var = 0.0;
    for (int i = 0; i < g.n_x; ++i)
        for (int k = 0; k < g.n_p; ++k) var += f.at(i, k) * g.p(k) * g.p(k);
    var *= g.dx() * g.dp() / m.mass;
    CHECK(var == doctest::Approx(0.16 + 2.0 * d_p * n * dt).epsilon(2e-4));
    CHECK(std::abs(m.mass - mass0) / mass0 < 1e-8);
}

TEST_CASE("friction drags the mean momentum at rate 2 gamma") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, 0.0, 1.5, 0.4);
    double gamma = 0.05, dt = 0.01;
    int n = 40;
    for (int s = 0; s < n; ++s) ops.friction_diffusion(f, gamma, 0.0, 0.0, dt);
    // d<p>/dt = -2 gamma <p>  =>  exponential decay.
    CHECK(moments(f).mean_p == doctest::Approx(1.5 * std::exp(-2.0 * gamma * n * dt)).epsilon(1e-3));
}

TEST_CASE("friction-diffusion forward/adjoint discrete duality") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = interior_random(g, 3);
    PhaseField h = interior_random(g, 4);
    PhaseField ff = f, hh = h;
    double gamma = 0.03, d_p = 0.02, d_x = 0.004, dt = 0.05;
    ops.friction_diffusion(ff, gamma, d_p, d_x, dt, StepDirection::Forward);
    ops.friction_diffusion(hh, gamma, d_p, d_x, dt, StepDirection::Adjoint);
    double lhs = overlap(ff, h), rhs = overlap(f, hh);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
}

TEST_CASE("advection and kick adjoints are exact transposes") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    std::vector<double> dudx(g.n_x);
    for (int i = 0; i < g.n_x; ++i) dudx[i] = 0.4 * std::sin(g.x(i));

    PhaseField f = interior_random(g, 11), h = interior_random(g, 12);
    SUBCASE("advection") {
        PhaseField ff = f, hh = h;
        ops.advect_x(ff, 0.3, StepDirection::Forward);
        ops.advect_x(hh, 0.3, StepDirection::Adjoint);
        CHECK(overlap(ff, h) == doctest::Approx(overlap(f, hh)).epsilon(1e-11));
    }
    SUBCASE("classical kick") {
        PhaseField ff = f, hh = h;
        ops.kick_p_classical(ff, dudx, 0.3, StepDirection::Forward);
        ops.kick_p_classical(hh, dudx, 0.3, StepDirection::Adjoint);
        CHECK(overlap(ff, h) == doctest::Approx(overlap(f, hh)).epsilon(1e-11));
    }
    SUBCASE("Wigner kick") {
        PhaseField ff = f, hh = h;
        auto U = [](double x) { return 0.3 * std::cos(1.2 * x); };
        ops.kick_p_wigner(ff, U, 0.2, 0.3, StepDirection::Forward);
        ops.kick_p_wigner(hh, U, 0.2, 0.3, StepDirection::Adjoint);
        CHECK(overlap(ff, h) == doctest::Approx(overlap(f, hh)).epsilon(1e-11));
    }
}

TEST_CASE("spectral momentum derivative is accurate on smooth fields") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, 0.0, 0.3, 0.5);
    PhaseField d = ops.derivative_p(f);
    for (int i = g.n_x / 4; i < 3 * g.n_x / 4; ++i)
        for (int k = g.n_p / 4; k < 3 * g.n_p / 4; ++k) {
            double expect = -(g.p(k) - 0.3) / 0.25 * f.at(i, k);
            CHECK(d.at(i, k) == doctest::Approx(expect).epsilon(1e-6).scale(1.0));
        }
}

TEST_CASE("apply_theta reduces to mixed-derivative times dfdp for small epsilon") {
    PhaseGrid g = grid8();
    PhaseSpaceOps ops(g);
    PhaseField f = blob(g, 0.0, 0.0, 0.5);
    auto gen = [](double x) { return 0.4 * std::sin(0.9 * x); };
    PhaseField theta = ops.apply_theta(f, gen, 1e-4);
    PhaseField dfdp = ops.derivative_p(f);
    double worst = 0.0;
    for (int i = g.n_x / 4; i < 3 * g.n_x / 4; ++i)
        for (int k = g.n_p / 4; k < 3 * g.n_p / 4; ++k) {
            double classical = 0.36 * std::cos(0.9 * g.x(i)) * dfdp.at(i, k);
            worst = std::max(worst, std::abs(theta.at(i, k) - classical));
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("moments of a thermal field reproduce temperature and mass") {
    TrapSpec trap{0.5, -1.0, 1.2};
    PhaseGrid g = grid8();
    double kT = 0.06;
    PhaseField f = thermal_initial_field(trap, kT, g);
    std::vector<double> pot(g.n_x);
    for (int i = 0; i < g.n_x; ++i)
        pot[i] = gaussian_potential(g.x(i), trap.center, trap.depth, trap.width);
    Moments m = moments(f, pot, trap.width);
    CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.mean_x == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(m.mean_p == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(m.temperature == doctest::Approx(kT).epsilon(0.05));
}

TEST_CASE("overlap matches the closed-form Gaussian integral") {
    PhaseGrid g = grid8();
    double wx = 0.6, wp = 0.8;
    PhaseField t = target_field(0.0, wx, wp, g);
    // Integral of exp(-2 x^2/wx^2 - 2 p^2/wp^2) = pi wx wp / 2.
    double expect = std::numbers::pi * wx * wp / 2.0;
    CHECK(overlap(t, t) == doctest::Approx(expect).epsilon(1e-10));
    PhaseField zero(g);
    CHECK(overlap(t, zero) == 0.0);
    PhaseField scaled = t;
    for (double& v : scaled.values) v *= 2.5;
    CHECK(overlap(scaled, t) == doctest::Approx(2.5 * expect).epsilon(1e-10));
}

TEST_CASE("shifted field moves the mean exactly") {
    PhaseGrid g = grid8();
    PhaseField f = blob(g, -0.4, 0.0, 0.3);
    double m0 = moments(f).mean_x;
    PhaseSpaceOps ops(g);
    PhaseField shifted = f;
    // One time unit at p rows: use a constant-force kick then measure p mean.
    std::vector<double> dudx(g.n_x, -0.5);
    ops.kick_p_classical(shifted, dudx, 1.0);
    CHECK(moments(shifted).mean_p == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(moments(shifted).mean_x == doctest::Approx(m0).epsilon(1e-9));
}

TEST_CASE("snapshot files round trip bit exactly") {
    PhaseGrid g;
    g.x_min = -1.25;
    g.x_max = 3.5;
    g.p_min = -0.7;
    g.p_max = 0.9;
    g.n_x = 16;
    g.n_p = 12;
    PhaseField f = sample_field(g, FieldKind::Wigner, [](double x, double p) {
        return std::sin(3.0 * x) * std::cos(2.0 * p) * 1e-7;
    });
    f.time = 1.234567890123;
    auto path = std::filesystem::temp_directory_path() / "atomtrans_roundtrip.phsf";
    write_field(path, f);
    PhaseField r = read_field(path);
    std::filesystem::remove(path);
    CHECK(r.grid == f.grid);
    CHECK(r.time == f.time);
    CHECK(r.kind == f.kind);
    REQUIRE(r.values.size() == f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(r.values[i] == f.values[i]);
}
