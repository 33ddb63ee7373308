#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace atomtrans {

/// Real-to-complex FFT of fixed length with owned, FFTW-aligned buffers.
/// One instance per thread; plan creation is internally serialized.
class RealFft {
  public:
    explicit RealFft(int n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    int size() const { return n_; }
    int spectrum_size() const { return n_ / 2 + 1; }

    double* real_buf() { return in_; }
    std::complex<double>* spec_buf() { return reinterpret_cast<std::complex<double>*>(out_); }

    /// real_buf -> spec_buf (unnormalized).
    void forward();
    /// spec_buf -> real_buf, divides by n (round trip is the identity).
    void inverse();

  private:
    int n_;
    double* in_;
    void* out_;
    void* plan_fwd_;
    void* plan_inv_;
};

/// Smallest 5-smooth integer >= n (FFTW-friendly sizes).
int fft_friendly_size(int n);

/// Translation of sampled data by an arbitrary (non-integer) physical shift,
/// evaluated spectrally on a zero-padded copy so that content leaving the
/// window is discarded instead of wrapping around. The operator is linear
/// and its transpose is the same operator with the shift negated.
class SpectralShifter {
  public:
    /// n: samples, dx: sample spacing, pad_factor >= 1.
    SpectralShifter(int n, double dx, double pad_factor = 1.25);

    /// In-place shift: out(x) = in(x - shift) with zero inflow.
    void shift(double* data, int stride, double shift);

    /// In-place multiplication by exp(i * phase(k)) in spectral space on the
    /// padded transform, where k runs over the angular frequencies conjugate
    /// to x. `phase` must be odd in k so the result stays real.
    void apply_odd_phase(double* data, int stride, const std::function<double(double)>& phase);

    /// In-place multiplication by i * gain(k) in spectral space; `gain` must
    /// be odd in k so the result stays real (d/dx is gain(k) = k).
    void apply_imag_gain(double* data, int stride, const std::function<double(double)>& gain);

    /// Spectral derivative d/dx (padded, real output).
    void derivative(double* data, int stride);

    int padded_size() const { return npad_; }
    double freq(int bin) const;  // angular frequency of half-spectrum bin

  private:
    int n_;
    int npad_;
    double dx_;
    RealFft fft_;

    void load(const double* data, int stride);
    void store(double* data, int stride);
};

}  // namespace atomtrans
