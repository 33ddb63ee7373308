#include "atomtrans/validate.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "atomtrans/ensemble_oc.hpp"
#include "atomtrans/evolution.hpp"
#include "atomtrans/fields.hpp"
#include "atomtrans/model.hpp"
#include "atomtrans/phase_grid.hpp"
#include "atomtrans/units.hpp"

namespace atomtrans {

namespace {

PhaseGrid small_grid() {
    PhaseGrid g;
    g.x_min = -4.0;
    g.x_max = 4.0;
    g.p_min = -4.0;
    g.p_max = 4.0;
    g.n_x = 64;
    g.n_p = 64;
    return g;
}

PhaseField gaussian_blob(const PhaseGrid& g, double x0, double p0, double s) {
    return sample_field(g, FieldKind::Distribution, [&](double x, double p) {
        return std::exp(-((x - x0) * (x - x0) + (p - p0) * (p - p0)) / (2.0 * s * s));
    });
}

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

CheckResult check(const std::string& name, bool ok, const std::string& detail) {
    return {name, ok, detail};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite() {
    std::vector<CheckResult> results;
    PhaseGrid g = small_grid();
    PhaseSpaceOps ops(g);

    {
        // Spectral advection translates a Gaussian exactly and conserves mass.
        PhaseField f = gaussian_blob(g, -1.0, 1.0, 0.4);
        double mass0 = moments(f).mass;
        ops.advect_x(f, 0.5);
        double err = 0.0;
        for (int i = 0; i < g.n_x; ++i)
            for (int k = 0; k < g.n_p; ++k) {
                double ref = std::exp(-((g.x(i) - (-1.0 + g.p(k) * 0.5)) *
                                            (g.x(i) - (-1.0 + g.p(k) * 0.5)) +
                                        (g.p(k) - 1.0) * (g.p(k) - 1.0)) /
                                      (2.0 * 0.16));
                err = std::max(err, std::abs(f.at(i, k) - ref));
            }
        double drift = std::abs(moments(f).mass - mass0) / mass0;
        results.push_back(check("advection translation+mass", err < 1e-8 && drift < 1e-10,
                                "max err " + num(err) + ", mass drift " + num(drift)));
    }
    {
        // Constant force shifts every column uniformly.
        PhaseField f = gaussian_blob(g, 0.0, 0.0, 0.5);
        std::vector<double> dudx(g.n_x, 1.0);  // force -1
        ops.kick_p_classical(f, dudx, 0.7);
        PhaseField ref = gaussian_blob(g, 0.0, -0.7, 0.5);
        double err = 0.0;
        for (std::size_t n = 0; n < f.values.size(); ++n)
            err = std::max(err, std::abs(f.values[n] - ref.values[n]));
        results.push_back(check("uniform kick", err < 1e-8, "max err " + num(err)));
    }
    {
        // Quadratic potentials make the Wigner kick identical to the classical
        // one for any epsilon.
        PhaseField f = gaussian_blob(g, 0.5, -0.5, 0.5);
        PhaseField fq = f;
        double k_spring = 0.8, dt = 0.3;
        std::vector<double> dudx(g.n_x);
        for (int i = 0; i < g.n_x; ++i) dudx[i] = k_spring * g.x(i);
        ops.kick_p_classical(f, dudx, dt);
        ops.kick_p_wigner(fq, [&](double x) { return 0.5 * k_spring * x * x; }, 0.5, dt);
        double err = 0.0;
        for (std::size_t n = 0; n < f.values.size(); ++n)
            err = std::max(err, std::abs(f.values[n] - fq.values[n]));
        results.push_back(check("quadratic Wigner==classical", err < 1e-9, "max err " + num(err)));
    }
    {
        // Momentum diffusion grows the variance at rate 2 D_p, mass conserved.
        PhaseField f = gaussian_blob(g, 0.0, 0.0, 0.4);
        double mass0 = moments(f).mass;
        double d_p = 0.05, dt = 0.01;
        double var0 = 0.16;
        for (int s = 0; s < 20; ++s) ops.friction_diffusion(f, 0.0, d_p, 0.0, dt);
        Moments m = moments(f);
        double var = 0.0;
        for (int i = 0; i < g.n_x; ++i)
            for (int k = 0; k < g.n_p; ++k)
                var += f.at(i, k) * (g.p(k) - m.mean_p) * (g.p(k) - m.mean_p);
        var *= g.dx() * g.dp() / m.mass;
        double expect = var0 + 2.0 * d_p * 20 * dt;
        double err = std::abs(var - expect) / expect;
        double drift = std::abs(m.mass - mass0) / mass0;
        results.push_back(check("heat-kernel variance", err < 1e-3 && drift < 1e-6,
                                "rel err " + num(err) + ", mass drift " + num(drift)));
    }
    {
        // Discrete duality of a full noisy Strang step.
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        auto bump = [&](PhaseField& f) {
            for (int i = 8; i < g.n_x - 8; ++i)
                for (int k = 8; k < g.n_p - 8; ++k) f.at(i, k) = uni(rng);
        };
        PhaseField f(g), h(g);
        bump(f);
        bump(h);
        TrapPair traps{{-1.0, -0.5, 0.8}, {1.0, -0.5, 0.8}};
        ControlSignal c = make_control(1.0, 9, 0.0, -1.0);
        NoiseParams noise = noise_coefficients(0.05, 0.2, 1e-3);
        EvolutionSettings st;
        st.n_steps = 8;
        st.store_stride = 8;
        st.mass_drift_limit = 10.0;
        EvolutionRecord fwd = evolve_forward(f, c, traps, noise, st, ops);
        EvolutionRecord adj = evolve_adjoint(h, c, traps, noise, st, ops);
        double a = overlap(fwd.terminal(), h);
        double b = overlap(f, adj.initial());
        double err = std::abs(a - b) / std::max(std::abs(a), 1e-30);
        results.push_back(check("forward/adjoint duality", err < 1e-10, "rel err " + num(err)));
    }
    {
        // p_td for the Table-style trap: sqrt(2 m k_B 1 mK) in SI.
        UnitSystem units = make_unit_system(strontium88());
        double depth = units.energy_from_mK(1.0);
        double p_td_si = units.momentum_to_SI(std::sqrt(2.0 * depth));
        double err = std::abs(p_td_si - 0.63e-25) / 0.63e-25;
        results.push_back(
            check("trap-depth momentum edge", err < 0.02, "p_td " + num(p_td_si * 1e25) +
                                                              "e-25 kg m/s, rel err " + num(err)));
    }
    {
        // Thermal field is normalized and reports its own temperature.
        // Use a grid fine enough to resolve the cold cloud (sigma ~ 0.16).
        TrapSpec trap{0.0, -1.0, 1.0};
        PhaseGrid tg;
        tg.x_min = -1.5;
        tg.x_max = 1.5;
        tg.p_min = -1.5;
        tg.p_max = 1.5;
        tg.n_x = 96;
        tg.n_p = 96;
        PhaseField f = thermal_initial_field(trap, 0.05, tg);
        std::vector<double> pot(tg.n_x);
        for (int i = 0; i < tg.n_x; ++i)
            pot[i] = gaussian_potential(tg.x(i), trap.center, trap.depth, trap.width);
        Moments m = moments(f, pot, trap.width);
        double mass_err = std::abs(m.mass - 1.0);
        double temp_err = std::abs(m.temperature - 0.05) / 0.05;
        results.push_back(check("thermal field normalization+temperature",
                                mass_err < 1e-10 && temp_err < 0.05,
                                "mass err " + num(mass_err) + ", temp rel err " + num(temp_err)));
    }
    {
        // Fidelity bounds and exact capture of an interior blob.
        PhaseField f = gaussian_blob(g, 0.0, 0.0, 0.2);
        AcceptanceBox box{3.9, 3.9};
        double fid = fidelity(f, box, 0.0);
        AcceptanceBox off{0.3, 0.3};
        double fid_off = fidelity(f, off, 3.5);
        results.push_back(check("fidelity bounds", fid > 0.999 && fid_off < 1e-6,
                                "inside " + num(fid) + ", outside " + num(fid_off)));
    }
    return results;
}

}  // namespace atomtrans
