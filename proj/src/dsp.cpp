#include "ssc/dsp.hpp"

#include <cmath>

#include "ssc/error.hpp"

namespace ssc::dsp {

void fft(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) throw InvalidArgument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = data[i + k];
        const auto v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n) {
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < frame.size() && i < n; ++i) buf[i] = frame[i];
  fft(buf);
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(buf[k]);
  return out;
}

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (n - 1));
  return w;
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1));
  return w;
}

MelFilterbank::MelFilterbank(std::size_t bands, std::size_t fft_size, double sample_rate,
                             double low_hz, double high_hz) {
  const double lo = hz_to_mel(low_hz);
  const double hi = hz_to_mel(high_hz);
  const double bin_hz = sample_rate / static_cast<double>(fft_size);
  const std::size_t bins = fft_size / 2 + 1;
  weights_.resize(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    const double left = mel_to_hz(lo + (hi - lo) * b / (bands + 1));
    const double center = mel_to_hz(lo + (hi - lo) * (b + 1) / (bands + 1));
    const double right = mel_to_hz(lo + (hi - lo) * (b + 2) / (bands + 1));
    Band band;
    band.first = bins;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > left && f <= center) w = (f - left) / (center - left);
      else if (f > center && f < right) w = (right - f) / (right - center);
      if (w > 0.0) {
        if (band.first == bins) band.first = k;
        band.w.resize(k - band.first + 1, 0.0);
        band.w[k - band.first] = w;
      }
    }
    if (band.first == bins) band.first = 0;
    weights_[b] = std::move(band);
  }
}

std::vector<double> MelFilterbank::apply(std::span<const double> power) const {
  std::vector<double> out(weights_.size());
  for (std::size_t b = 0; b < weights_.size(); ++b) {
    double acc = 0.0;
    const auto& band = weights_[b];
    for (std::size_t i = 0; i < band.w.size() && band.first + i < power.size(); ++i) {
      acc += band.w[i] * power[band.first + i];
    }
    out[b] = acc;
  }
  return out;
}

std::vector<double> dct2(std::span<const double> input, std::size_t first, std::size_t count) {
  const std::size_t n = input.size();
  std::vector<double> out(count);
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t k = first + c;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += input[i] * std::cos(M_PI * k * (i + 0.5) / n);
    out[c] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / n);
  }
  return out;
}

}  // namespace ssc::dsp
