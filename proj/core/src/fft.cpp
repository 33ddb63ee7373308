#include "atomtrans/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace atomtrans {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
    if (n < 2) throw std::invalid_argument("RealFft: length must be >= 2");
    in_ = fftw_alloc_real(static_cast<std::size_t>(n_));
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(n_ / 2 + 1));
    out_ = out;
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_fwd_ = fftw_plan_dft_r2c_1d(n_, in_, out, FFTW_MEASURE);
    plan_inv_ = fftw_plan_dft_c2r_1d(n_, out, in_, FFTW_MEASURE);
    if (!plan_fwd_ || !plan_inv_) throw std::runtime_error("RealFft: plan creation failed");
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
    fftw_free(in_);
    fftw_free(static_cast<fftw_complex*>(out_));
}

void RealFft::forward() { fftw_execute(static_cast<fftw_plan>(plan_fwd_)); }

void RealFft::inverse() {
    fftw_execute(static_cast<fftw_plan>(plan_inv_));
    double inv = 1.0 / static_cast<double>(n_);
    for (int i = 0; i < n_; ++i) in_[i] *= inv;
}

int fft_friendly_size(int n) {
    for (int m = n;; ++m) {
        int r = m;
        for (int f : {2, 3, 5})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

SpectralShifter::SpectralShifter(int n, double dx, double pad_factor)
    : n_(n),
      npad_(fft_friendly_size(static_cast<int>(std::ceil(n * pad_factor)))),
      dx_(dx),
      fft_(npad_) {
    if (!(dx > 0.0)) throw std::invalid_argument("SpectralShifter: dx must be positive");
}

double SpectralShifter::freq(int bin) const {
    return 2.0 * std::numbers::pi * bin / (npad_ * dx_);
}

void SpectralShifter::load(const double* data, int stride) {
    double* buf = fft_.real_buf();
    for (int i = 0; i < n_; ++i) buf[i] = data[static_cast<std::ptrdiff_t>(i) * stride];
    for (int i = n_; i < npad_; ++i) buf[i] = 0.0;
}

void SpectralShifter::store(double* data, int stride) {
    const double* buf = fft_.real_buf();
    for (int i = 0; i < n_; ++i) data[static_cast<std::ptrdiff_t>(i) * stride] = buf[i];
}

void SpectralShifter::shift(double* data, int stride, double shift) {
    if (shift == 0.0) return;
    load(data, stride);
    fft_.forward();
    auto* spec = fft_.spec_buf();
    const int ns = fft_.spectrum_size();
    for (int b = 0; b < ns; ++b) {
        double phi = -freq(b) * shift;
        spec[b] *= std::complex<double>(std::cos(phi), std::sin(phi));
    }
    fft_.inverse();
    store(data, stride);
}

void SpectralShifter::apply_odd_phase(double* data, int stride,
                                      const std::function<double(double)>& phase) {
    load(data, stride);
    fft_.forward();
    auto* spec = fft_.spec_buf();
    const int ns = fft_.spectrum_size();
    for (int b = 0; b < ns; ++b) {
        double phi = phase(freq(b));
        spec[b] *= std::complex<double>(std::cos(phi), std::sin(phi));
    }
    fft_.inverse();
    store(data, stride);
}

void SpectralShifter::apply_imag_gain(double* data, int stride,
                                      const std::function<double(double)>& gain) {
    load(data, stride);
    fft_.forward();
    auto* spec = fft_.spec_buf();
    const int ns = fft_.spectrum_size();
    for (int b = 0; b < ns; ++b) spec[b] *= std::complex<double>(0.0, gain(freq(b)));
    if (npad_ % 2 == 0) spec[ns - 1] = 0.0;
    fft_.inverse();
    store(data, stride);
}

void SpectralShifter::derivative(double* data, int stride) {
    load(data, stride);
    fft_.forward();
    auto* spec = fft_.spec_buf();
    const int ns = fft_.spectrum_size();
    for (int b = 0; b < ns; ++b) spec[b] *= std::complex<double>(0.0, freq(b));
    if (npad_ % 2 == 0) spec[ns - 1] = 0.0;  // Nyquist bin has no odd partner
    fft_.inverse();
    store(data, stride);
}

}  // namespace atomtrans
