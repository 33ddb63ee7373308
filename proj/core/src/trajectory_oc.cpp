#include "atomtrans/trajectory_oc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace atomtrans {

namespace {

double force(double x, double u, double v, const TrapPair& traps) {
    return -total_potential_derivs(x, u, v, traps).Ux;
}

/// Linear interpolation on the uniform trajectory grid.
double interp_uniform(const std::vector<double>& ts, const std::vector<double>& ys, double t) {
    if (t <= ts.front()) return ys.front();
    if (t >= ts.back()) return ys.back();
    double dt = ts[1] - ts[0];
    auto i = static_cast<std::size_t>((t - ts.front()) / dt);
    i = std::min(i, ts.size() - 2);
    double w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    return (1.0 - w) * ys[i] + w * ys[i + 1];
}

}  // namespace

Trajectory integrate_forward(const ControlSignal& control, const TrapPair& traps,
                             double x0, double p0) {
    control.validate();
    const std::size_t n = control.nodes();
    Trajectory traj;
    traj.times = control.times;
    traj.x.resize(n);
    traj.p.resize(n);
    traj.x[0] = x0;
    traj.p[0] = p0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double t = control.times[i];
        double dt = control.times[i + 1] - t;
        double um = control.u_at(t + 0.5 * dt), vm = control.v_at(t + 0.5 * dt);
        double u1 = control.u[i + 1], v1 = control.v[i + 1];
        double x = traj.x[i], p = traj.p[i];

        double k1x = p, k1p = force(x, control.u[i], control.v[i], traps);
        double k2x = p + 0.5 * dt * k1p, k2p = force(x + 0.5 * dt * k1x, um, vm, traps);
        double k3x = p + 0.5 * dt * k2p, k3p = force(x + 0.5 * dt * k2x, um, vm, traps);
        double k4x = p + dt * k3p, k4p = force(x + dt * k3x, u1, v1, traps);

        traj.x[i + 1] = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        traj.p[i + 1] = p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    return traj;
}

AdjointTrajectory integrate_adjoint(const ControlSignal& control, const Trajectory& traj,
                                    const CostWeights& weights, const TrapPair& traps,
                                    double x_B) {
    control.validate();
    weights.validate();
    const std::size_t n = control.nodes();
    if (traj.x.size() != n || traj.p.size() != n)
        throw std::invalid_argument("integrate_adjoint: trajectory/control size mismatch");

    AdjointTrajectory adj;
    adj.times = control.times;
    adj.x_h.resize(n);
    adj.p_h.resize(n);
    adj.x_h[n - 1] = -weights.nu_p * traj.p[n - 1];
    adj.p_h[n - 1] = weights.nu_x * (x_B - traj.x[n - 1]);

    auto uxx_at = [&](double t) {
        double x = interp_uniform(traj.times, traj.x, t);
        return total_potential_derivs(x, control.u_at(t), control.v_at(t), traps).Uxx;
    };

    // Backward RK4: pdot_h = x_h Uxx, xdot_h = -p_h.
    for (std::size_t i = n - 1; i > 0; --i) {
        double t = control.times[i];
        double dt = control.times[i] - control.times[i - 1];
        double c0 = uxx_at(t), cm = uxx_at(t - 0.5 * dt), c1 = uxx_at(t - dt);
        double xh = adj.x_h[i], ph = adj.p_h[i];

        double k1x = -(-ph), k1p = -(xh * c0);
        double k2x = -(-(ph + 0.5 * dt * k1p)), k2p = -((xh + 0.5 * dt * k1x) * cm);
        double k3x = -(-(ph + 0.5 * dt * k2p)), k3p = -((xh + 0.5 * dt * k2x) * cm);
        double k4x = -(-(ph + dt * k3p)), k4p = -((xh + dt * k3x) * c1);

        adj.x_h[i - 1] = xh + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        adj.p_h[i - 1] = ph + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    return adj;
}

std::vector<double> neumann_bvp_solve(double nu, double gamma, const std::vector<double>& rhs,
                                      double dt) {
    const std::size_t n = rhs.size();
    if (n < 2) throw std::invalid_argument("neumann_bvp_solve: need at least two nodes");
    if (!(dt > 0.0)) throw std::invalid_argument("neumann_bvp_solve: dt must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("neumann_bvp_solve: gamma must be positive");

    std::vector<double> y(n);
    if (nu == 0.0) {
        for (std::size_t i = 0; i < n; ++i) y[i] = -rhs[i] / gamma;
        return y;
    }

    // (nu/dt^2) [y_{i-1} - 2 y_i + y_{i+1}] - gamma y_i = rhs_i, ghost points at
    // the ends enforce y' = 0.
    double a = nu / (dt * dt);
    std::vector<double> diag(n, -2.0 * a - gamma), sub(n, a), sup(n, a);
    sup[0] = 2.0 * a;
    sub[n - 1] = 2.0 * a;

    // Thomas algorithm.
    std::vector<double> cp(n), dp(n);
    cp[0] = sup[0] / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        double denom = diag[i] - sub[i] * cp[i - 1];
        cp[i] = (i + 1 < n) ? sup[i] / denom : 0.0;
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / denom;
    }
    y[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i > 0; --i) y[i - 1] = dp[i - 1] - cp[i - 1] * y[i];
    return y;
}

ControlUpdate control_update(const AdjointTrajectory& adjoint, const Trajectory& traj,
                             const ControlSignal& control, const CostWeights& weights,
                             const TrapPair& traps, bool update_v) {
    const std::size_t n = control.nodes();
    if (adjoint.x_h.size() != n || traj.x.size() != n)
        throw std::invalid_argument("control_update: size mismatch");
    double dt = control.times[1] - control.times[0];

    ControlUpdate out;
    out.rhs_u.resize(n);
    out.rhs_v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        PotentialDerivs d = total_potential_derivs(traj.x[i], control.u[i], control.v[i], traps);
        out.rhs_u[i] = -adjoint.x_h[i] * d.Uxu;
        out.rhs_v[i] = -adjoint.x_h[i] * d.Uxv;
    }
    // Stationarity: gamma u - nu u'' equals the negated gradient density
    // rhs_u, i.e. the BVP nu y'' - gamma y = -rhs_u.
    std::vector<double> neg_u(n), neg_v(n);
    for (std::size_t i = 0; i < n; ++i) {
        neg_u[i] = -out.rhs_u[i];
        neg_v[i] = -out.rhs_v[i];
    }
    out.u = neumann_bvp_solve(weights.nu_u, weights.gamma_u, neg_u, dt);
    if (update_v)
        out.v = neumann_bvp_solve(weights.nu_v, weights.gamma_v, neg_v, dt);
    else
        out.v = control.v;
    return out;
}

CostBreakdown evaluate_cost(const ControlSignal& control, const Trajectory& traj,
                            const CostWeights& weights, double x_B) {
    const std::size_t n = control.nodes();
    double dt = control.times[1] - control.times[0];

    auto deriv = [&](const std::vector<double>& y, std::size_t i) {
        if (i == 0) return (y[1] - y[0]) / dt;
        if (i == n - 1) return (y[n - 1] - y[n - 2]) / dt;
        return (y[i + 1] - y[i - 1]) / (2.0 * dt);
    };

    CostBreakdown c;
    for (std::size_t i = 0; i < n; ++i) {
        double du = deriv(control.u, i), dv = deriv(control.v, i);
        double integrand = weights.gamma_u * control.u[i] * control.u[i] +
                           weights.gamma_v * control.v[i] * control.v[i] +
                           weights.nu_u * du * du + weights.nu_v * dv * dv;
        double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        c.control += 0.5 * integrand * w * dt;
    }
    double ex = traj.x[n - 1] - x_B, ep = traj.p[n - 1];
    c.terminal = 0.5 * weights.nu_x * ex * ex + 0.5 * weights.nu_p * ep * ep;
    double tf = control.t_f();
    c.time = 0.5 * weights.nu_tf * tf * tf;
    c.total = c.terminal + c.control + c.time;
    return c;
}

double final_time_residual(const ControlSignal& control, const Trajectory& traj,
                           const CostWeights& weights, const TrapPair& traps, double x_B) {
    std::size_t n = control.nodes();
    double x = traj.x[n - 1], p = traj.p[n - 1];
    double u = control.u[n - 1], v = control.v[n - 1];
    double Ux = total_potential_derivs(x, u, v, traps).Ux;
    return weights.nu_tf * control.t_f() +
           (weights.nu_x * (x_B - x) - weights.nu_p * Ux) * p +
           0.5 * weights.gamma_u * u * u + 0.5 * weights.gamma_v * v * v;
}

ControlSignal initial_guess(const DeterministicProblem& prob, double t_f) {
    ControlSignal c = make_control(t_f, prob.n_nodes, prob.x0, prob.v_fixed);
    for (std::size_t i = 0; i < prob.n_nodes; ++i) {
        double s = c.times[i] / t_f;
        double ramp = s * s * (3.0 - 2.0 * s);
        c.u[i] = prob.x0 + (prob.x_B - prob.x0) * ramp;
    }
    return c;
}

namespace {

/// Exact gradient of the discrete cost with respect to the control nodes.
/// The trajectory-coupled part comes from the adjoint (the negated density
/// rhs_u) and the regularisation part from differentiating the trapezoidal
/// quadrature of gamma u^2 + nu u'^2 with its one-sided end derivatives.
std::vector<double> cost_gradient_u(const ControlSignal& control, const std::vector<double>& rhs_u,
                                    const CostWeights& w) {
    const std::size_t n = control.nodes();
    double dt = control.times[1] - control.times[0];
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        g[i] = wi * dt * (-rhs_u[i] + w.gamma_u * control.u[i]);
    }
    auto deriv = [&](std::size_t i) {
        if (i == 0) return (control.u[1] - control.u[0]) / dt;
        if (i == n - 1) return (control.u[n - 1] - control.u[n - 2]) / dt;
        return (control.u[i + 1] - control.u[i - 1]) / (2.0 * dt);
    };
    for (std::size_t i = 0; i < n; ++i) {
        double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        double c = w.nu_u * wi * dt * deriv(i);
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
    return g;
}

struct InnerState {
    ControlSignal control;
    Trajectory trajectory;
    CostBreakdown cost;
    bool stationary = false;  // line search stalled or step below tolerance
};

/// Minimise the fixed-horizon cost over the control nodes by limited-memory
/// BFGS with an Armijo backtracking line search. Appends one cost value per
/// iteration to `history` and charges iterations against `budget`.
InnerState minimise_fixed_horizon(const DeterministicProblem& prob, ControlSignal control,
                                  int& budget, std::vector<double>& history, int& iterations) {
    const std::size_t n = control.nodes();
    const double scale = std::max(1.0, std::abs(prob.x_B - prob.x0));
    constexpr std::size_t kMemory = 12;
    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;

    InnerState st;
    st.control = std::move(control);
    st.trajectory = integrate_forward(st.control, prob.traps, prob.x0, prob.p0);
    st.cost = evaluate_cost(st.control, st.trajectory, prob.weights, prob.x_B);

    auto gradient = [&](const ControlSignal& c, const Trajectory& t) {
        AdjointTrajectory a = integrate_adjoint(c, t, prob.weights, prob.traps, prob.x_B);
        ControlUpdate upd = control_update(a, t, c, prob.weights, prob.traps, /*update_v=*/false);
        return cost_gradient_u(c, upd.rhs_u, prob.weights);
    };
    std::vector<double> g = gradient(st.control, st.trajectory);

    while (budget > 0) {
        --budget;
        ++iterations;
        history.push_back(st.cost.total);

        // Two-loop recursion for the quasi-Newton direction d = -H g.
        std::vector<double> d = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            double sd = 0.0;
            for (std::size_t i = 0; i < n; ++i) sd += s_hist[k][i] * d[i];
            alpha[k] = rho_hist[k] * sd;
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y_hist[k][i];
        }
        if (!s_hist.empty()) {
            double yy = 0.0, sy = 0.0;
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            for (std::size_t i = 0; i < n; ++i) {
                yy += y[i] * y[i];
                sy += s[i] * y[i];
            }
            double h0 = sy / std::max(yy, 1e-300);
            for (std::size_t i = 0; i < n; ++i) d[i] *= h0;
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            double yd = 0.0;
            for (std::size_t i = 0; i < n; ++i) yd += y_hist[k][i] * d[i];
            double beta = rho_hist[k] * yd;
            for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * s_hist[k][i];
        }
        double gd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = -d[i];
            gd += g[i] * d[i];
        }
        if (gd >= 0.0) {  // not a descent direction: reset to steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            gd = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                d[i] = -g[i];
                gd -= g[i] * g[i];
            }
        }

        double step = 1.0;
        bool accepted = false;
        ControlSignal cand = st.control;
        Trajectory ctraj;
        CostBreakdown ccost;
        for (int bt = 0; bt < 50; ++bt) {
            for (std::size_t i = 0; i < n; ++i) cand.u[i] = st.control.u[i] + step * d[i];
            ctraj = integrate_forward(cand, prob.traps, prob.x0, prob.p0);
            ccost = evaluate_cost(cand, ctraj, prob.weights, prob.x_B);
            if (ccost.total <= st.cost.total + 1e-4 * step * gd) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            st.stationary = true;  // no descent left along this direction
            break;
        }

        std::vector<double> g_new = gradient(cand, ctraj);
        double du_max = 0.0, sy = 0.0;
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = cand.u[i] - st.control.u[i];
            y[i] = g_new[i] - g[i];
            sy += s[i] * y[i];
            du_max = std::max(du_max, std::abs(s[i]));
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
        st.control = std::move(cand);
        st.trajectory = std::move(ctraj);
        st.cost = ccost;
        g = std::move(g_new);

        if (du_max < prob.tolerance * scale) {
            st.stationary = true;
            break;
        }
    }
    return st;
}

}  // namespace

DeterministicSolution solve_deterministic(const DeterministicProblem& prob,
                                          const ControlSignal& guess) {
    prob.weights.validate();
    guess.validate();

    DeterministicSolution sol;
    sol.control = guess;

    const bool free_horizon = prob.optimize_tf && prob.weights.nu_tf > 0.0;
    int budget = prob.max_iterations;
    // Cap each control phase so a free horizon gets several Newton updates of
    // t_f within the overall iteration budget.
    const int phase_cap = free_horizon ? std::max(50, prob.max_iterations / 10) : budget;
    while (budget > 0) {
        int phase = std::min(budget, phase_cap);
        int phase_left = phase;
        InnerState st = minimise_fixed_horizon(prob, sol.control, phase_left, sol.cost_history,
                                               sol.iterations);
        budget -= phase - phase_left;
        sol.control = std::move(st.control);
        sol.trajectory = std::move(st.trajectory);
        sol.cost = st.cost;

        if (!free_horizon) {
            sol.converged = st.stationary;
            break;
        }

        // Damped Newton on the horizon, taken only once the control iteration
        // has settled so the stationarity residual reflects an optimal control.
        // The residual only approximates dJ/dt_f near exact inner optimality,
        // so each horizon step is additionally safeguarded by a cost-decrease
        // backtracking test (every trial re-optimises the control at the new
        // horizon); stalling in both directions means the horizon is optimal.
        double R = final_time_residual(sol.control, sol.trajectory, prob.weights, prob.traps,
                                       prob.x_B);
        double tf = sol.control.t_f();
        double newton = std::clamp(-prob.tf_relaxation * R / prob.weights.nu_tf, -0.2 * tf, 0.2 * tf);
        bool accepted = false;
        for (double direction : {1.0, -1.0}) {
            double dtf = direction * newton;
            for (int bt = 0; bt < 6 && budget > 0; ++bt) {
                if (std::abs(dtf) < prob.tolerance * std::max(1.0, tf)) break;
                ControlSignal cand = remesh_control(sol.control, tf + dtf, prob.n_nodes);
                int cand_left = std::min(budget, phase_cap);
                int cand_phase = cand_left;
                InnerState cst = minimise_fixed_horizon(prob, std::move(cand), cand_left,
                                                        sol.cost_history, sol.iterations);
                budget -= cand_phase - cand_left;
                if (cst.cost.total < sol.cost.total) {
                    sol.control = std::move(cst.control);
                    sol.trajectory = std::move(cst.trajectory);
                    sol.cost = cst.cost;
                    accepted = true;
                    break;
                }
                dtf *= 0.5;
            }
            if (accepted) break;
        }
        if (!accepted) {
            sol.converged = true;  // neither the control nor the horizon can improve
            break;
        }
    }

    sol.trajectory = integrate_forward(sol.control, prob.traps, prob.x0, prob.p0);
    sol.cost = evaluate_cost(sol.control, sol.trajectory, prob.weights, prob.x_B);
    sol.adjoint =
        integrate_adjoint(sol.control, sol.trajectory, prob.weights, prob.traps, prob.x_B);
    return sol;
}

}  // namespace atomtrans
