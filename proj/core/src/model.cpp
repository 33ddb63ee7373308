#include "atomtrans/model.hpp"

#include <algorithm>
#include <cmath>

namespace atomtrans {

namespace {
void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite input: ") + what);
}
}  // namespace

void ControlSignal::validate() const {
    if (times.size() < 2) throw std::invalid_argument("ControlSignal: need at least two samples");
    if (u.size() != times.size() || v.size() != times.size())
        throw std::invalid_argument("ControlSignal: u, v must match the time grid");
    if (times.front() != 0.0) throw std::invalid_argument("ControlSignal: times must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("ControlSignal: times must be strictly increasing");
}

namespace {
double interp(const std::vector<double>& ts, const std::vector<double>& ys, double t) {
    if (t <= ts.front()) return ys.front();
    if (t >= ts.back()) return ys.back();
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t i = static_cast<std::size_t>(it - ts.begin());
    double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return (1.0 - w) * ys[i - 1] + w * ys[i];
}
}  // namespace

double ControlSignal::u_at(double t) const { return interp(times, u, t); }
double ControlSignal::v_at(double t) const { return interp(times, v, t); }

ControlSignal make_control(double t_f, std::size_t n_nodes, double u0, double v0) {
    if (!(t_f > 0.0) || n_nodes < 2) throw std::invalid_argument("make_control: bad grid");
    ControlSignal c;
    c.times.resize(n_nodes);
    c.u.assign(n_nodes, u0);
    c.v.assign(n_nodes, v0);
    for (std::size_t i = 0; i < n_nodes; ++i)
        c.times[i] = t_f * static_cast<double>(i) / static_cast<double>(n_nodes - 1);
    c.times.back() = t_f;
    return c;
}

ControlSignal remesh_control(const ControlSignal& c, double new_tf, std::size_t n_nodes) {
    c.validate();
    if (!(new_tf > 0.0)) throw std::invalid_argument("remesh_control: t_f must be positive");
    ControlSignal out = make_control(new_tf, n_nodes, 0.0, 0.0);
    double scale = c.t_f() / new_tf;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        double t_old = out.times[i] * scale;
        out.u[i] = c.u_at(t_old);
        out.v[i] = c.v_at(t_old);
    }
    return out;
}

NoiseParams noise_coefficients(double gamma, double bath_kT, double epsilon) {
    if (gamma < 0.0) throw std::invalid_argument("noise_coefficients: gamma must be >= 0");
    if (!(bath_kT > 0.0)) throw std::invalid_argument("noise_coefficients: bath temperature must be > 0");
    NoiseParams n;
    n.gamma = gamma;
    n.bath_temperature = bath_kT;
    if (gamma > 0.0) {
        n.d_p = gamma * bath_kT;  // m = 1 in internal units
        n.d_x = gamma * gamma * epsilon * epsilon / (4.0 * n.d_p);
    }
    return n;
}

double gaussian_potential(double x, double center, double depth, double width) {
    require_finite(x, "x");
    require_finite(center, "center");
    require_finite(depth, "depth");
    if (!(width > 0.0)) throw std::invalid_argument("gaussian_potential: width must be positive");
    double s = (x - center) / width;
    return depth * std::exp(-s * s);
}

namespace {
/// Accumulates U and x-derivatives of one Gaussian term.
inline void accumulate(double x, double center, double depth, double width, PotentialDerivs& d) {
    double r = x - center;
    double w2 = width * width;
    double e = std::exp(-r * r / w2);
    d.U += depth * e;
    d.Ux += depth * (-2.0 * r / w2) * e;
    d.Uxx += depth * (4.0 * r * r / (w2 * w2) - 2.0 / w2) * e;
}
}  // namespace

PotentialDerivs total_potential_derivs(double x, double u, double v, const TrapPair& traps) {
    require_finite(x, "x");
    require_finite(u, "u");
    require_finite(v, "v");
    traps.a.validate();
    traps.b.validate();
    PotentialDerivs d;
    accumulate(x, traps.a.center, traps.a.depth, traps.a.width, d);
    accumulate(x, traps.b.center, traps.b.depth, traps.b.width, d);
    // Tweezer term, tracked separately for the mixed derivatives.
    PotentialDerivs tw;
    accumulate(x, u, v, traps.a.width, tw);
    // The tweezer width equals the trap width throughout (single-beam optics);
    // U_C depends on x - u only, so d/du = -d/dx.
    d.U += tw.U;
    d.Ux += tw.Ux;
    d.Uxx += tw.Uxx;
    d.Uxu = -tw.Uxx;
    double r = x - u;
    double w2 = traps.a.width * traps.a.width;
    d.Uxv = (-2.0 * r / w2) * std::exp(-r * r / w2);
    return d;
}

double static_potential(double x, const TrapPair& traps) {
    return gaussian_potential(x, traps.a.center, traps.a.depth, traps.a.width) +
           gaussian_potential(x, traps.b.center, traps.b.depth, traps.b.width);
}

double static_force(double x, const TrapPair& traps) {
    PotentialDerivs d;
    accumulate(x, traps.a.center, traps.a.depth, traps.a.width, d);
    accumulate(x, traps.b.center, traps.b.depth, traps.b.width, d);
    return -d.Ux;
}

TweezerForceLimit max_tweezer_force(double v, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("max_tweezer_force: width must be positive");
    TweezerForceLimit lim;
    lim.f_max = std::sqrt(2.0) * std::abs(v) / width * std::exp(-0.5);
    lim.a_max = lim.f_max;  // m = 1 internally
    lim.argmax_offset = width / std::sqrt(2.0);
    return lim;
}

namespace {

// Quintic smoothstep and its (unnormalized) second derivative.
double smooth5(double t) { return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t); }
double smooth5_accel(double t) { return 60.0 * t - 180.0 * t * t + 120.0 * t * t * t; }

}  // namespace

ControlSignal feedforward_guess(const TrapPair& traps, double x_B, double t_f,
                                double v_peak, double v_edge, double ramp_fraction,
                                std::size_t n_nodes) {
    traps.a.validate();
    traps.b.validate();
    if (!(t_f > 0.0)) throw std::invalid_argument("feedforward_guess: t_f must be positive");
    if (!(ramp_fraction > 0.0 && ramp_fraction <= 0.5))
        throw std::invalid_argument("feedforward_guess: ramp_fraction must be in (0, 0.5]");
    const double w = traps.a.width;  // tweezer width (see total_potential_derivs)
    const double x_A = traps.a.center;
    const double d = x_B - x_A;
    ControlSignal c = make_control(t_f, n_nodes, x_A, v_edge);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        double tau = c.times[i] / t_f;
        double up = tau < ramp_fraction ? smooth5(tau / ramp_fraction) : 1.0;
        double dn = tau > 1.0 - ramp_fraction ? smooth5((1.0 - tau) / ramp_fraction) : 1.0;
        c.v[i] = v_edge + (v_peak - v_edge) * std::min(up, dn);
        double x = x_A + d * smooth5(tau);
        double accel = d * smooth5_accel(tau) / (t_f * t_f);
        // Force the tweezer must supply: m * a minus the static-trap force.
        double f_req = accel - static_force(x, traps);
        double f_abs = std::abs(f_req);
        TweezerForceLimit lim = max_tweezer_force(c.v[i], w);
        double delta;
        if (std::abs(c.v[i]) < 1e-300) {
            delta = 0.0;
        } else if (f_abs >= lim.f_max) {
            delta = lim.argmax_offset;
        } else {
            // Invert F(delta) = 2|v| delta / w^2 * exp(-delta^2/w^2) on the
            // monotone branch [0, w/sqrt(2)] by bisection.
            double vm = std::abs(c.v[i]);
            double lo = 0.0, hi = lim.argmax_offset;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                double f = 2.0 * vm * mid / (w * w) * std::exp(-mid * mid / (w * w));
                (f < f_abs ? lo : hi) = mid;
            }
            delta = 0.5 * (lo + hi);
        }
        // A pulling force on the atom requires the tweezer ahead of it.
        c.u[i] = x + (f_req >= 0.0 ? delta : -delta);
    }
    return c;
}

}  // namespace atomtrans
