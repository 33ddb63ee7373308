#include "atomtrans/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace atomtrans {

void EvolutionSettings::validate() const {
    if (n_steps < 1) throw std::invalid_argument("EvolutionSettings: n_steps must be >= 1");
    if (store_stride < 1 || n_steps % store_stride != 0)
        throw std::invalid_argument("EvolutionSettings: store_stride must divide n_steps");
    if (!(mass_drift_limit > 0.0))
        throw std::invalid_argument("EvolutionSettings: mass_drift_limit must be positive");
    if (epsilon < 0.0) throw std::invalid_argument("EvolutionSettings: epsilon must be >= 0");
}

namespace {

struct Stepper {
    const ControlSignal& control;
    const TrapPair& traps;
    const NoiseParams& noise;
    const EvolutionSettings& settings;
    PhaseSpaceOps& ops;
    std::vector<double> dudx;  // scratch force profile

    Stepper(const ControlSignal& c, const TrapPair& tr, const NoiseParams& nz,
            const EvolutionSettings& st, PhaseSpaceOps& o)
        : control(c), traps(tr), noise(nz), settings(st), ops(o),
          dudx(static_cast<std::size_t>(o.grid().n_x)) {}

    bool has_noise() const {
        return noise.gamma != 0.0 || noise.d_p != 0.0 || noise.d_x != 0.0;
    }

    /// One Strang step over [t, t+dt]; the same palindromic substep order
    /// serves forward and adjoint because transposition reverses it onto
    /// itself.
    void step(PhaseField& f, double t, double dt, StepDirection dir) {
        double tm = t + 0.5 * dt;
        double u = control.u_at(tm), v = control.v_at(tm);

        auto kick = [&](double kdt) {
            if (settings.epsilon > 0.0) {
                ops.kick_p_wigner(
                    f, [&](double x) { return total_potential_derivs(x, u, v, traps).U; },
                    settings.epsilon, kdt, dir);
            } else {
                const PhaseGrid& g = ops.grid();
                for (int i = 0; i < g.n_x; ++i)
                    dudx[i] = total_potential_derivs(g.x(i), u, v, traps).Ux;
                ops.kick_p_classical(f, dudx, kdt, dir);
            }
        };
        auto diffuse = [&](double ddt) {
            if (has_noise()) ops.friction_diffusion(f, noise.gamma, noise.d_p, noise.d_x, ddt, dir);
        };

        diffuse(0.5 * dt);
        kick(0.5 * dt);
        ops.advect_x(f, dt, dir);
        kick(0.5 * dt);
        diffuse(0.5 * dt);
    }
};

}  // namespace

EvolutionRecord evolve_forward(const PhaseField& f0, const ControlSignal& control,
                               const TrapPair& traps, const NoiseParams& noise,
                               const EvolutionSettings& settings, PhaseSpaceOps& ops) {
    control.validate();
    settings.validate();
    if (!(f0.grid == ops.grid()))
        throw std::invalid_argument("evolve_forward: field grid does not match workspace");

    double t_f = control.t_f();
    double dt = t_f / settings.n_steps;
    Stepper stepper{control, traps, noise, settings, ops};

    EvolutionRecord rec;
    rec.store_stride = settings.store_stride;

    PhaseField f = f0;
    f.time = 0.0;
    double mass0 = moments(f).mass;
    if (mass0 == 0.0) throw std::invalid_argument("evolve_forward: zero-mass initial field");

    auto record = [&](const PhaseField& field) {
        rec.times.push_back(field.time);
        rec.checkpoints.push_back(field);
        double mass = moments(field).mass;
        rec.mass_trace.push_back(mass);
        rec.mass_drift = std::max(rec.mass_drift, std::abs(mass - mass0) / std::abs(mass0));
        if (rec.mass_drift > settings.mass_drift_limit)
            throw std::runtime_error("evolve_forward: mass drift exceeds limit (domain too small)");
    };
    record(f);

    for (int j = 0; j < settings.n_steps; ++j) {
        stepper.step(f, j * dt, dt, StepDirection::Forward);
        f.time = (j + 1) * dt;
        if ((j + 1) % settings.store_stride == 0) record(f);
    }
    return rec;
}

EvolutionRecord evolve_adjoint(const PhaseField& h_T, const ControlSignal& control,
                               const TrapPair& traps, const NoiseParams& noise,
                               const EvolutionSettings& settings, PhaseSpaceOps& ops) {
    control.validate();
    settings.validate();
    if (!(h_T.grid == ops.grid()))
        throw std::invalid_argument("evolve_adjoint: field grid does not match workspace");

    double t_f = control.t_f();
    double dt = t_f / settings.n_steps;
    Stepper stepper{control, traps, noise, settings, ops};

    EvolutionRecord rec;
    rec.store_stride = settings.store_stride;

    PhaseField h = h_T;
    h.time = t_f;
    h.kind = FieldKind::Adjoint;
    rec.times.push_back(h.time);
    rec.checkpoints.push_back(h);
    rec.mass_trace.push_back(moments(h).mass);

    for (int j = settings.n_steps - 1; j >= 0; --j) {
        stepper.step(h, j * dt, dt, StepDirection::Adjoint);
        h.time = j * dt;
        if (j % settings.store_stride == 0) {
            rec.times.push_back(h.time);
            rec.checkpoints.push_back(h);
            rec.mass_trace.push_back(moments(h).mass);
        }
    }
    std::reverse(rec.times.begin(), rec.times.end());
    std::reverse(rec.checkpoints.begin(), rec.checkpoints.end());
    std::reverse(rec.mass_trace.begin(), rec.mass_trace.end());
    return rec;
}

EvolutionRecord lfp_forward(const PhaseField& f0, const ControlSignal& control,
                            const TrapPair& traps, const NoiseParams& noise,
                            const EvolutionSettings& settings) {
    PhaseSpaceOps ops(f0.grid);
    return evolve_forward(f0, control, traps, noise, settings, ops);
}

EvolutionRecord lfp_adjoint(const PhaseField& h_T, const ControlSignal& control,
                            const TrapPair& traps, const NoiseParams& noise,
                            const EvolutionSettings& settings) {
    PhaseSpaceOps ops(h_T.grid);
    return evolve_adjoint(h_T, control, traps, noise, settings, ops);
}

}  // namespace atomtrans
