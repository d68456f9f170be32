#pragma once

// Small DSP kernels shared by the feature extractors.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ssc::dsp {

/// In-place iterative radix-2 FFT. Size must be a power of two.
void fft(std::span<std::complex<double>> data);

/// |X[k]|^2 for k in [0, n/2] of a real frame zero-padded to `n` (power of two).
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n);

std::vector<double> hamming(std::size_t n);
std::vector<double> hann(std::size_t n);

/// Triangular mel filterbank over the bins of an `fft_size` power spectrum.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t bands, std::size_t fft_size, double sample_rate, double low_hz,
                double high_hz);

  /// Band energies (linear) for a power spectrum of fft_size/2 + 1 bins.
  std::vector<double> apply(std::span<const double> power) const;
  std::size_t bands() const { return weights_.size(); }

 private:
  struct Band {
    std::size_t first = 0;
    std::vector<double> w;
  };
  std::vector<Band> weights_;
};

/// Orthonormal DCT-II of `input`, returning coefficients [first, first + count).
std::vector<double> dct2(std::span<const double> input, std::size_t first, std::size_t count);

inline double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

}  // namespace ssc::dsp
