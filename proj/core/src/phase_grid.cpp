#include "atomtrans/phase_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "atomtrans/fft.hpp"

namespace atomtrans {

PhaseField sample_field(const PhaseGrid& grid, FieldKind kind,
                        const std::function<double(double, double)>& f) {
    PhaseField out(grid, kind);
    for (int i = 0; i < grid.n_x; ++i)
        for (int k = 0; k < grid.n_p; ++k) out.at(i, k) = f(grid.x(i), grid.p(k));
    return out;
}

namespace {
inline double trap_w(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }
}  // namespace

Moments moments(const PhaseField& field, std::span<const double> potential_on_x,
                double trap_width) {
    const PhaseGrid& g = field.grid;
    Moments m;
    double sx = 0.0, sp = 0.0, skin = 0.0, spot = 0.0;
    for (int i = 0; i < g.n_x; ++i) {
        double wx = trap_w(i, g.n_x);
        double x = g.x(i);
        double u = potential_on_x.empty() ? 0.0 : potential_on_x[i];
        for (int k = 0; k < g.n_p; ++k) {
            double w = wx * trap_w(k, g.n_p) * field.at(i, k);
            double p = g.p(k);
            m.mass += w;
            sx += w * x;
            sp += w * p;
            skin += w * 0.5 * p * p;
            spot += w * u;
        }
    }
    double cell = g.dx() * g.dp();
    m.mass *= cell;
    if (std::abs(m.mass) < 1e-300) throw std::runtime_error("moments: field has zero mass");
    m.mean_x = sx * cell / m.mass;
    m.mean_p = sp * cell / m.mass;
    m.kinetic_energy = skin * cell / m.mass;
    m.potential_energy = spot * cell / m.mass;
    if (potential_on_x.empty()) {
        m.temperature = 2.0 * m.kinetic_energy;
    } else {
        // Reference the potential to its minimum near the ensemble mean.
        double umin = std::numeric_limits<double>::infinity();
        double halo = trap_width > 0.0 ? 3.0 * trap_width
                                       : std::numeric_limits<double>::infinity();
        for (int i = 0; i < g.n_x; ++i)
            if (std::abs(g.x(i) - m.mean_x) <= halo) umin = std::min(umin, potential_on_x[i]);
        if (!std::isfinite(umin)) umin = *std::min_element(potential_on_x.begin(), potential_on_x.end());
        m.temperature = m.kinetic_energy + m.potential_energy - umin;
    }
    return m;
}

double overlap(const PhaseField& a, const PhaseField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("overlap: grid mismatch");
    const PhaseGrid& g = a.grid;
    double s = 0.0;
    for (int i = 0; i < g.n_x; ++i) {
        double wx = trap_w(i, g.n_x);
        for (int k = 0; k < g.n_p; ++k)
            s += wx * trap_w(k, g.n_p) * a.at(i, k) * b.at(i, k);
    }
    return s * g.dx() * g.dp();
}

namespace {

struct Tridiag {
    std::vector<double> sub, diag, sup;  // sub[0] and sup[n-1] unused
    int n = 0;

    void resize(int m) {
        n = m;
        sub.assign(m, 0.0);
        diag.assign(m, 0.0);
        sup.assign(m, 0.0);
    }

    // y = (I + a*B) x
    void apply_shifted(double a, const double* x, int stride, double* y) const {
        for (int i = 0; i < n; ++i) {
            double v = (1.0 + a * diag[i]) * x[static_cast<std::ptrdiff_t>(i) * stride];
            if (i > 0) v += a * sub[i] * x[static_cast<std::ptrdiff_t>(i - 1) * stride];
            if (i < n - 1) v += a * sup[i] * x[static_cast<std::ptrdiff_t>(i + 1) * stride];
            y[i] = v;
        }
    }

    // Solve (I - a*B) y = rhs (Thomas, in place on rhs buffer).
    void solve_shifted(double a, double* rhs, std::vector<double>& scratch) const {
        scratch.resize(static_cast<std::size_t>(n));
        double* c = scratch.data();
        double d0 = 1.0 - a * diag[0];
        c[0] = -a * sup[0] / d0;
        rhs[0] /= d0;
        for (int i = 1; i < n; ++i) {
            double m = 1.0 / (1.0 - a * diag[i] + a * sub[i] * c[i - 1]);
            c[i] = -a * sup[i] * m;
            rhs[i] = (rhs[i] + a * sub[i] * rhs[i - 1]) * m;
        }
        for (int i = n - 2; i >= 0; --i) rhs[i] -= c[i] * rhs[i + 1];
    }

    Tridiag transposed() const {
        Tridiag t;
        t.resize(n);
        t.diag = diag;
        for (int i = 0; i + 1 < n; ++i) {
            t.sup[i] = sub[i + 1];
            t.sub[i + 1] = sup[i];
        }
        return t;
    }
};

}  // namespace

class PhaseSpaceOps::Impl {
  public:
    Impl(const PhaseGrid& g, double pad)
        : shift_x(g.n_x, g.dx(), pad), shift_p(g.n_p, g.dp(), pad), grid(g) {}

    SpectralShifter shift_x;
    SpectralShifter shift_p;
    PhaseGrid grid;
    std::vector<double> colbuf;
    std::vector<double> scratch;
};

PhaseSpaceOps::PhaseSpaceOps(const PhaseGrid& grid, double pad_factor) : grid_(grid) {
    grid.validate();
    impl_ = std::make_shared<Impl>(grid, pad_factor);
}

void PhaseSpaceOps::advect_x(PhaseField& f, double dt, StepDirection dir) {
    if (!(f.grid == grid_)) throw std::invalid_argument("advect_x: grid mismatch");
    double sign = (dir == StepDirection::Forward) ? 1.0 : -1.0;
    double half_domain = 0.5 * (grid_.x_max - grid_.x_min);
    double max_shift = std::max(std::abs(grid_.p_min), std::abs(grid_.p_max)) * std::abs(dt);
    if (max_shift > half_domain)
        throw std::runtime_error("advect_x: shift exceeds half the x-domain; reduce dt");
    for (int k = 0; k < grid_.n_p; ++k)
        impl_->shift_x.shift(f.values.data() + k, grid_.n_p, sign * grid_.p(k) * dt);
}

void PhaseSpaceOps::kick_p_classical(PhaseField& f, std::span<const double> dUdx, double dt,
                                     StepDirection dir) {
    if (!(f.grid == grid_)) throw std::invalid_argument("kick_p_classical: grid mismatch");
    if (static_cast<int>(dUdx.size()) != grid_.n_x)
        throw std::invalid_argument("kick_p_classical: force profile size mismatch");
    double sign = (dir == StepDirection::Forward) ? 1.0 : -1.0;
    double half_domain = 0.5 * (grid_.p_max - grid_.p_min);
    for (int i = 0; i < grid_.n_x; ++i) {
        double s = -dUdx[i] * dt;
        if (std::abs(s) > half_domain)
            throw std::runtime_error("kick_p_classical: shift exceeds half the p-domain");
        impl_->shift_p.shift(f.values.data() + static_cast<std::size_t>(i) * grid_.n_p, 1,
                             sign * s);
    }
}

void PhaseSpaceOps::kick_p_wigner(PhaseField& f, const std::function<double(double)>& U,
                                  double epsilon, double dt, StepDirection dir) {
    if (!(f.grid == grid_)) throw std::invalid_argument("kick_p_wigner: grid mismatch");
    if (!(epsilon > 0.0)) throw std::invalid_argument("kick_p_wigner: epsilon must be positive");
    double sign = (dir == StepDirection::Forward) ? 1.0 : -1.0;
    for (int i = 0; i < grid_.n_x; ++i) {
        double x = grid_.x(i);
        impl_->shift_p.apply_odd_phase(
            f.values.data() + static_cast<std::size_t>(i) * grid_.n_p, 1,
            [&](double eta) {
                return sign * dt / epsilon *
                       (U(x + 0.5 * epsilon * eta) - U(x - 0.5 * epsilon * eta));
            });
    }
}

void PhaseSpaceOps::friction_diffusion(PhaseField& f, double gamma, double d_p, double d_x,
                                       double dt, StepDirection dir) {
    if (!(f.grid == grid_)) throw std::invalid_argument("friction_diffusion: grid mismatch");
    if (dt < 0.0) throw std::invalid_argument("friction_diffusion: dt must be nonnegative");
    if (gamma == 0.0 && d_p == 0.0 && d_x == 0.0) return;

    const int nx = grid_.n_x, np = grid_.n_p;
    const double a = 0.5 * dt;

    Tridiag bp;  // conservative drift + momentum diffusion, along p
    bp.resize(np);
    double dp2 = grid_.dp() * grid_.dp();
    for (int k = 0; k < np; ++k) {
        double p_lo = grid_.p_min + (k - 0.5) * grid_.dp();
        double p_hi = grid_.p_min + (k + 0.5) * grid_.dp();
        bp.sub[k] = -gamma * p_lo / grid_.dp() + d_p / dp2;
        bp.diag[k] = gamma * (p_hi - p_lo) / grid_.dp() - 2.0 * d_p / dp2;
        bp.sup[k] = gamma * p_hi / grid_.dp() + d_p / dp2;
    }
    Tridiag bx;  // spatial diffusion, along x
    bx.resize(nx);
    double dx2 = grid_.dx() * grid_.dx();
    for (int i = 0; i < nx; ++i) {
        bx.sub[i] = d_x / dx2;
        bx.diag[i] = -2.0 * d_x / dx2;
        bx.sup[i] = d_x / dx2;
    }

    auto cn_lines = [&](const Tridiag& B, double* base, int n_lines, int line_stride,
                        int elem_stride, bool transpose) {
        Tridiag bt = transpose ? B.transposed() : B;
        auto& buf = impl_->colbuf;
        buf.resize(static_cast<std::size_t>(bt.n));
        for (int l = 0; l < n_lines; ++l) {
            double* line = base + static_cast<std::ptrdiff_t>(l) * line_stride;
            if (!transpose) {
                bt.apply_shifted(a, line, elem_stride, buf.data());
                bt.solve_shifted(a, buf.data(), impl_->scratch);
            } else {
                for (int i = 0; i < bt.n; ++i) buf[i] = line[static_cast<std::ptrdiff_t>(i) * elem_stride];
                bt.solve_shifted(a, buf.data(), impl_->scratch);
                std::vector<double> tmp(buf);
                bt.apply_shifted(a, tmp.data(), 1, buf.data());
            }
            for (int i = 0; i < bt.n; ++i) line[static_cast<std::ptrdiff_t>(i) * elem_stride] = buf[i];
        }
    };

    if (dir == StepDirection::Forward) {
        if (gamma != 0.0 || d_p != 0.0) cn_lines(bp, f.values.data(), nx, np, 1, false);
        if (d_x != 0.0) cn_lines(bx, f.values.data(), np, 1, np, false);
    } else {
        if (d_x != 0.0) cn_lines(bx, f.values.data(), np, 1, np, true);
        if (gamma != 0.0 || d_p != 0.0) cn_lines(bp, f.values.data(), nx, np, 1, true);
    }
}

PhaseField PhaseSpaceOps::derivative_p(const PhaseField& f) {
    if (!(f.grid == grid_)) throw std::invalid_argument("derivative_p: grid mismatch");
    PhaseField out = f;
    for (int i = 0; i < grid_.n_x; ++i)
        impl_->shift_p.derivative(out.values.data() + static_cast<std::size_t>(i) * grid_.n_p, 1);
    return out;
}

PhaseField PhaseSpaceOps::apply_theta(const PhaseField& f,
                                      const std::function<double(double)>& g, double epsilon) {
    if (!(f.grid == grid_)) throw std::invalid_argument("apply_theta: grid mismatch");
    if (!(epsilon > 0.0)) throw std::invalid_argument("apply_theta: epsilon must be positive");
    PhaseField out = f;
    for (int i = 0; i < grid_.n_x; ++i) {
        double x = grid_.x(i);
        impl_->shift_p.apply_imag_gain(
            out.values.data() + static_cast<std::size_t>(i) * grid_.n_p, 1,
            [&](double eta) {
                return (g(x + 0.5 * epsilon * eta) - g(x - 0.5 * epsilon * eta)) / epsilon;
            });
    }
    return out;
}

}  // namespace atomtrans
