#include "atomtrans/ensemble_oc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace atomtrans {

namespace {

/// Overlap length of [lo, hi] with [a, b].
double seg_overlap(double lo, double hi, double a, double b) {
    return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

/// Tweezer-term control derivatives as functions of x.
double tweezer_du(double x, double u, double v, double width) {
    double r = x - u, w2 = width * width;
    return v * (2.0 * r / w2) * std::exp(-r * r / w2);
}
double tweezer_dv(double x, double u, double width) {
    double r = x - u, w2 = width * width;
    return std::exp(-r * r / w2);
}

double trapezoid_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

/// Exact gradient of the control-cost quadrature (gamma y^2 + nu y'^2 with
/// one-sided end derivatives) with respect to the nodes of one channel.
void add_regulariser_gradient(const std::vector<double>& y, double gamma, double nu, double dt,
                              std::vector<double>& g) {
    const std::size_t n = y.size();
    auto deriv = [&](std::size_t i) {
        if (i == 0) return (y[1] - y[0]) / dt;
        if (i == n - 1) return (y[n - 1] - y[n - 2]) / dt;
        return (y[i + 1] - y[i - 1]) / (2.0 * dt);
    };
    for (std::size_t i = 0; i < n; ++i) {
        double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        g[i] += wi * dt * gamma * y[i];
        double c = nu * wi * dt * deriv(i);
        if (i == 0) {
            g[0] -= c / dt;
            g[1] += c / dt;
        } else if (i == n - 1) {
            g[n - 2] -= c / dt;
            g[n - 1] += c / dt;
        } else {
            g[i - 1] -= c / (2.0 * dt);
            g[i + 1] += c / (2.0 * dt);
        }
    }
}

}  // namespace

double fidelity(const PhaseField& field, const AcceptanceBox& box, double target_center) {
    box.validate();
    const PhaseGrid& g = field.grid;
    double dx = g.dx(), dp = g.dp();

    double total = moments(field).mass;
    if (total == 0.0) throw std::invalid_argument("fidelity: zero-mass field");

    double bx_lo = target_center - box.x_half_width, bx_hi = target_center + box.x_half_width;
    double bp_lo = -box.p_edge, bp_hi = box.p_edge;

    std::vector<double> wx(g.n_x), wp(g.n_p);
    for (int i = 0; i < g.n_x; ++i) {
        double lo = std::max(g.x(i) - 0.5 * dx, g.x_min);
        double hi = std::min(g.x(i) + 0.5 * dx, g.x_max);
        wx[i] = seg_overlap(lo, hi, bx_lo, bx_hi) / dx;
    }
    for (int k = 0; k < g.n_p; ++k) {
        double lo = std::max(g.p(k) - 0.5 * dp, g.p_min);
        double hi = std::min(g.p(k) + 0.5 * dp, g.p_max);
        wp[k] = seg_overlap(lo, hi, bp_lo, bp_hi) / dp;
    }

    double inside = 0.0;
    for (int i = 0; i < g.n_x; ++i) {
        if (wx[i] == 0.0) continue;
        for (int k = 0; k < g.n_p; ++k)
            inside += field.at(i, k) * wx[i] * wp[k];
    }
    inside *= dx * dp;
    return std::clamp(inside / total, 0.0, 1.0);
}

namespace {

void check_records(const EvolutionRecord& forward, const EvolutionRecord& adjoint) {
    if (forward.checkpoints.size() != adjoint.checkpoints.size() || forward.checkpoints.empty())
        throw std::invalid_argument("control_gradient: checkpoint count mismatch");
    if (!(forward.checkpoints.front().grid == adjoint.checkpoints.front().grid))
        throw std::invalid_argument("control_gradient: grid mismatch");
    double tf = forward.times.back();
    for (std::size_t k = 0; k < forward.times.size(); ++k)
        if (std::abs(forward.times[k] - adjoint.times[k]) > 1e-9 * std::max(1.0, tf))
            throw std::invalid_argument("control_gradient: time grid mismatch");
}

}  // namespace

GradientSeries control_gradient_classical(const EvolutionRecord& forward,
                                          const EvolutionRecord& adjoint,
                                          const ControlSignal& control, const TrapPair& traps,
                                          PhaseSpaceOps& ops) {
    check_records(forward, adjoint);
    const PhaseGrid& g = forward.checkpoints.front().grid;
    double dx = g.dx(), dp = g.dp();

    GradientSeries out;
    out.times = forward.times;
    out.rhs_u.resize(out.times.size());
    out.rhs_v.resize(out.times.size());

    std::vector<double> uxu(g.n_x), uxv(g.n_x);
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        double t = out.times[k];
        double u = control.u_at(t), v = control.v_at(t);
        for (int i = 0; i < g.n_x; ++i) {
            PotentialDerivs d = total_potential_derivs(g.x(i), u, v, traps);
            uxu[i] = d.Uxu;
            uxv[i] = d.Uxv;
        }
        PhaseField dfdp = ops.derivative_p(forward.checkpoints[k]);
        const PhaseField& h = adjoint.checkpoints[k];
        double su = 0.0, sv = 0.0;
        for (int i = 0; i < g.n_x; ++i) {
            double wi = trapezoid_weight(i, g.n_x);
            double row = 0.0;
            for (int j = 0; j < g.n_p; ++j)
                row += trapezoid_weight(j, g.n_p) * h.at(i, j) * dfdp.at(i, j);
            su += wi * uxu[i] * row;
            sv += wi * uxv[i] * row;
        }
        out.rhs_u[k] = su * dx * dp;
        out.rhs_v[k] = sv * dx * dp;
    }
    return out;
}

GradientSeries control_gradient_quantum(const EvolutionRecord& forward,
                                        const EvolutionRecord& adjoint,
                                        const ControlSignal& control, const TrapPair& traps,
                                        PhaseSpaceOps& ops, double epsilon) {
    check_records(forward, adjoint);
    if (!(epsilon > 0.0))
        throw std::invalid_argument("control_gradient_quantum: epsilon must be > 0");
    double width = traps.a.width;

    GradientSeries out;
    out.times = forward.times;
    out.rhs_u.resize(out.times.size());
    out.rhs_v.resize(out.times.size());

    for (std::size_t k = 0; k < out.times.size(); ++k) {
        double t = out.times[k];
        double u = control.u_at(t), v = control.v_at(t);
        const PhaseField& f = forward.checkpoints[k];
        const PhaseField& h = adjoint.checkpoints[k];
        PhaseField theta_u =
            ops.apply_theta(f, [&](double x) { return tweezer_du(x, u, v, width); }, epsilon);
        PhaseField theta_v =
            ops.apply_theta(f, [&](double x) { return tweezer_dv(x, u, width); }, epsilon);
        out.rhs_u[k] = overlap(h, theta_u);
        out.rhs_v[k] = overlap(h, theta_v);
    }
    return out;
}

double control_cost(const ControlSignal& control, const CostWeights& weights) {
    control.validate();
    const std::size_t n = control.nodes();
    double dt = control.times[1] - control.times[0];
    auto deriv = [&](const std::vector<double>& y, std::size_t i) {
        if (i == 0) return (y[1] - y[0]) / dt;
        if (i == n - 1) return (y[n - 1] - y[n - 2]) / dt;
        return (y[i + 1] - y[i - 1]) / (2.0 * dt);
    };
    double k = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double du = deriv(control.u, i), dv = deriv(control.v, i);
        double integrand = weights.gamma_u * control.u[i] * control.u[i] +
                           weights.gamma_v * control.v[i] * control.v[i] +
                           weights.nu_u * du * du + weights.nu_v * dv * dv;
        double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        k += 0.5 * integrand * w * dt;
    }
    return k;
}

void EnsembleProblem::validate() const {
    weights.validate();
    evolution.validate();
    box.validate();
    if (!(f0.grid == target.grid)) throw std::invalid_argument("EnsembleProblem: grid mismatch");
    if (optimize_v) {
        if (!(v_min < v_max)) throw std::invalid_argument("EnsembleProblem: bad depth bounds");
        if (!(weights.gamma_v > 0.0))
            throw std::invalid_argument("EnsembleProblem: gamma_v must be > 0 to optimize v");
    }
    if (max_iterations < 1 || max_backtracks < 1)
        throw std::invalid_argument("EnsembleProblem: iteration limits must be >= 1");
}

EnsembleSolution optimize_ensemble(const EnsembleProblem& prob, const ControlSignal& initial,
                                   EnsembleTier tier) {
    prob.validate();
    initial.validate();
    if (tier == EnsembleTier::Quantum && !(prob.epsilon > 0.0))
        throw std::invalid_argument("optimize_ensemble: quantum tier requires epsilon > 0");

    EvolutionSettings evo = prob.evolution;
    evo.epsilon = (tier == EnsembleTier::Quantum) ? prob.epsilon : 0.0;

    // Work on the checkpoint time grid so the gradient series and the control
    // share nodes.
    std::size_t n_nodes = static_cast<std::size_t>(evo.n_steps / evo.store_stride) + 1;
    ControlSignal control = remesh_control(initial, initial.t_f(), n_nodes);
    if (prob.optimize_v)
        for (double& v : control.v) v = std::clamp(v, prob.v_min, prob.v_max);
    double dt_grad = control.times[1] - control.times[0];

    PhaseSpaceOps ops(prob.f0.grid);
    EnsembleSolution sol;

    auto objective = [&](const ControlSignal& c, EvolutionRecord& rec_out, double& phi_out) {
        rec_out = evolve_forward(prob.f0, c, prob.traps, prob.noise, evo, ops);
        phi_out = -overlap(prob.target, rec_out.terminal());
        return phi_out + control_cost(c, prob.weights);
    };

    double phi = 0.0;
    double J = objective(control, sol.forward, phi);
    sol.cost_history.push_back(J);

    // Joint limited-memory BFGS over the control nodes (u, and v when it is
    // optimised), with the v-channel projected onto its bounds after each
    // trial step. The adjoint run supplies the terminal-objective gradient;
    // the regulariser gradient is the exact derivative of the quadrature.
    const std::size_t dim = prob.optimize_v ? 2 * n_nodes : n_nodes;
    auto gradient = [&](const ControlSignal& c, const EvolutionRecord& fwd) {
        EvolutionRecord adj = evolve_adjoint(prob.target, c, prob.traps, prob.noise, evo, ops);
        GradientSeries grad = (tier == EnsembleTier::Quantum)
                                  ? control_gradient_quantum(fwd, adj, c, prob.traps, ops,
                                                             prob.epsilon)
                                  : control_gradient_classical(fwd, adj, c, prob.traps, ops);
        std::vector<double> g(dim, 0.0);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            double wi = (i == 0 || i == n_nodes - 1) ? 0.5 : 1.0;
            g[i] = -wi * dt_grad * grad.rhs_u[i];
            if (prob.optimize_v) g[n_nodes + i] = -wi * dt_grad * grad.rhs_v[i];
        }
        std::vector<double> gu(g.begin(), g.begin() + n_nodes);
        add_regulariser_gradient(c.u, prob.weights.gamma_u, prob.weights.nu_u, dt_grad, gu);
        std::copy(gu.begin(), gu.end(), g.begin());
        if (prob.optimize_v) {
            std::vector<double> gv(g.begin() + n_nodes, g.end());
            add_regulariser_gradient(c.v, prob.weights.gamma_v, prob.weights.nu_v, dt_grad, gv);
            std::copy(gv.begin(), gv.end(), g.begin() + n_nodes);
        }
        return g;
    };

    constexpr std::size_t kMemory = 10;
    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;
    std::vector<double> g = gradient(control, sol.forward);

    for (int iter = 0; iter < prob.max_iterations; ++iter) {
        sol.iterations = iter + 1;

        // Two-loop recursion for the quasi-Newton direction d = -H g.
        std::vector<double> d = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            double sd = 0.0;
            for (std::size_t i = 0; i < dim; ++i) sd += s_hist[k][i] * d[i];
            alpha[k] = rho_hist[k] * sd;
            for (std::size_t i = 0; i < dim; ++i) d[i] -= alpha[k] * y_hist[k][i];
        }
        if (!s_hist.empty()) {
            double yy = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                yy += y_hist.back()[i] * y_hist.back()[i];
                sy += s_hist.back()[i] * y_hist.back()[i];
            }
            double h0 = sy / std::max(yy, 1e-300);
            for (std::size_t i = 0; i < dim; ++i) d[i] *= h0;
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            double yd = 0.0;
            for (std::size_t i = 0; i < dim; ++i) yd += y_hist[k][i] * d[i];
            double beta = rho_hist[k] * yd;
            for (std::size_t i = 0; i < dim; ++i) d[i] += (alpha[k] - beta) * s_hist[k][i];
        }
        double gd = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            d[i] = -d[i];
            gd += g[i] * d[i];
        }
        if (gd >= 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
        }

        double step = 1.0;
        bool accepted = false;
        ControlSignal cand = control;
        EvolutionRecord cand_rec;
        double cand_phi = 0.0, cand_J = 0.0;
        int backtracks = std::max(prob.max_backtracks, 20);
        for (int bt = 0; bt < backtracks; ++bt) {
            for (std::size_t i = 0; i < n_nodes; ++i) {
                cand.u[i] = control.u[i] + step * d[i];
                if (prob.optimize_v)
                    cand.v[i] = std::clamp(control.v[i] + step * d[n_nodes + i], prob.v_min,
                                           prob.v_max);
            }
            bool evolved = true;
            try {
                cand_J = objective(cand, cand_rec, cand_phi);
            } catch (const std::runtime_error&) {
                evolved = false;  // candidate drove mass off the grid; shrink
            }
            if (evolved && cand_J < J) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            sol.converged = true;  // no descent left along the search direction
            break;
        }

        std::vector<double> g_new = gradient(cand, cand_rec);
        std::vector<double> s(dim), y(dim);
        double sy = 0.0;
        for (std::size_t i = 0; i < n_nodes; ++i) {
            s[i] = cand.u[i] - control.u[i];
            if (prob.optimize_v) s[n_nodes + i] = cand.v[i] - control.v[i];
        }
        for (std::size_t i = 0; i < dim; ++i) {
            y[i] = g_new[i] - g[i];
            sy += s[i] * y[i];
        }
        if (sy > 1e-300) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > kMemory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }

        double dJ = J - cand_J;
        control = std::move(cand);
        sol.forward = std::move(cand_rec);
        J = cand_J;
        phi = cand_phi;
        g = std::move(g_new);
        sol.cost_history.push_back(J);
        if (dJ < prob.tolerance * std::max(std::abs(J), 1e-12)) {
            sol.converged = true;
            break;
        }
    }

    sol.control = control;
    sol.objective = J;
    sol.terminal_objective = phi;
    sol.fidelity = fidelity(sol.forward.terminal(), prob.box, prob.x_B);
    return sol;
}

std::vector<std::pair<double, double>> temperature_trace(const EvolutionRecord& record,
                                                         const TrapPair& traps,
                                                         const ControlSignal& control) {
    std::vector<std::pair<double, double>> trace;
    trace.reserve(record.checkpoints.size());
    for (std::size_t k = 0; k < record.checkpoints.size(); ++k) {
        const PhaseField& f = record.checkpoints[k];
        double t = record.times[k];
        double u = control.u_at(t), v = control.v_at(t);
        std::vector<double> pot(f.grid.n_x);
        for (int i = 0; i < f.grid.n_x; ++i)
            pot[i] = total_potential_derivs(f.grid.x(i), u, v, traps).U;
        Moments m = moments(f, pot, traps.a.width);
        trace.emplace_back(t, m.temperature);
    }
    return trace;
}

ControlSignal apply_perturbation(const ControlSignal& base, const PerturbationSpec& spec) {
    if (!std::isfinite(spec.amplitude))
        throw std::invalid_argument("apply_perturbation: amplitude must be finite");
    ControlSignal out = base;
    double tf = base.t_f();
    for (std::size_t i = 0; i < out.times.size(); ++i) {
        double t = out.times[i];
        switch (spec.kind) {
            case PerturbationSpec::Kind::LinearRamp:
                out.u[i] += spec.amplitude * t / tf;
                break;
            case PerturbationSpec::Kind::Sinusoid:
                out.u[i] += spec.amplitude * std::sin(2.0 * M_PI * spec.frequency * t);
                break;
            case PerturbationSpec::Kind::DepthOffset:
                out.v[i] += spec.amplitude;
                break;
        }
    }
    return out;
}

PerturbationResult perturb_and_evaluate(const EnsembleProblem& prob, const ControlSignal& base,
                                        const PerturbationSpec& spec) {
    prob.validate();
    PerturbationResult res;
    res.control = apply_perturbation(base, spec);
    EvolutionSettings evo = prob.evolution;
    evo.epsilon = prob.epsilon;
    PhaseSpaceOps ops(prob.f0.grid);
    EvolutionRecord rec = evolve_forward(prob.f0, res.control, prob.traps, prob.noise, evo, ops);
    res.fidelity = fidelity(rec.terminal(), prob.box, prob.x_B);
    return res;
}

}  // namespace atomtrans
