// Throughput of the phase-space evolution operators at typical grid sizes.
#include <cmath>

#include <benchmark/benchmark.h>

#include "atomtrans/evolution.hpp"
#include "atomtrans/fields.hpp"
#include "atomtrans/phase_grid.hpp"

using namespace atomtrans;

namespace {

PhaseGrid make_grid(int n) {
    PhaseGrid g;
    g.x_min = -5.0;
    g.x_max = 15.0;
    g.p_min = -2.0;
    g.p_max = 2.0;
    g.n_x = n;
    g.n_p = n;
    return g;
}

PhaseField make_field(const PhaseGrid& g) {
    return sample_field(g, FieldKind::Distribution, [](double x, double p) {
        return std::exp(-(x * x + 4.0 * p * p));
    });
}

void bm_advect(benchmark::State& state) {
    PhaseGrid g = make_grid(int(state.range(0)));
    PhaseSpaceOps ops(g);
    PhaseField f = make_field(g);
    for (auto _ : state) ops.advect_x(f, 1e-3);
    state.SetItemsProcessed(state.iterations() * g.n_x * g.n_p);
}

void bm_kick_classical(benchmark::State& state) {
    PhaseGrid g = make_grid(int(state.range(0)));
    PhaseSpaceOps ops(g);
    PhaseField f = make_field(g);
    std::vector<double> dudx(g.n_x);
    for (int i = 0; i < g.n_x; ++i) dudx[i] = 0.1 * std::sin(g.x(i));
    for (auto _ : state) ops.kick_p_classical(f, dudx, 1e-3);
    state.SetItemsProcessed(state.iterations() * g.n_x * g.n_p);
}

void bm_kick_wigner(benchmark::State& state) {
    PhaseGrid g = make_grid(int(state.range(0)));
    PhaseSpaceOps ops(g);
    PhaseField f = make_field(g);
    auto U = [](double x) { return -0.1 * std::exp(-x * x / 2.25); };
    for (auto _ : state) ops.kick_p_wigner(f, U, 0.22, 1e-3);
    state.SetItemsProcessed(state.iterations() * g.n_x * g.n_p);
}

void bm_friction_diffusion(benchmark::State& state) {
    PhaseGrid g = make_grid(int(state.range(0)));
    PhaseSpaceOps ops(g);
    PhaseField f = make_field(g);
    for (auto _ : state) ops.friction_diffusion(f, 1e-2, 1e-3, 1e-8, 1e-3);
    state.SetItemsProcessed(state.iterations() * g.n_x * g.n_p);
}

void bm_full_step(benchmark::State& state) {
    PhaseGrid g = make_grid(int(state.range(0)));
    TrapPair traps{{0.0, -0.0946, 1.5}, {10.0, -0.0946, 1.5}};
    NoiseParams noise = noise_coefficients(1e-2, 0.00946, 7.2e-4);
    PhaseField f0 = thermal_initial_field(traps.a, 0.00946, g);
    ControlSignal c = make_control(7.4, 11, 0.0, -0.14);
    EvolutionSettings s;
    s.n_steps = 10;
    s.store_stride = 10;
    s.mass_drift_limit = 1.0;
    for (auto _ : state) {
        EvolutionRecord rec = lfp_forward(f0, c, traps, noise, s);
        benchmark::DoNotOptimize(rec.mass_drift);
    }
    state.SetItemsProcessed(state.iterations() * s.n_steps * g.n_x * g.n_p);
}

}  // namespace

BENCHMARK(bm_advect)->Arg(128)->Arg(256);
BENCHMARK(bm_kick_classical)->Arg(128)->Arg(256);
BENCHMARK(bm_kick_wigner)->Arg(128)->Arg(256);
BENCHMARK(bm_friction_diffusion)->Arg(128)->Arg(256);
BENCHMARK(bm_full_step)->Arg(128)->Arg(256);

BENCHMARK_MAIN();
