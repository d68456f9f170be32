#include "ssc/handcrafted.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "ssc/dsp.hpp"
#include "ssc/error.hpp"

namespace ssc {

namespace {

constexpr double kYinThreshold = 0.15;
constexpr double kVoicedThreshold = 0.5;
constexpr double kSilenceGateDb = -60.0;
constexpr int kPitchRate = 8000;
constexpr std::size_t kPitchWindow = 480;  // 60 ms at 8 kHz
constexpr std::size_t kFftSize = 512;
constexpr std::size_t kMelBands = 26;
constexpr double kPowerEps = 1e-12;

double to_db(double power) {
  return std::max(10.0 * std::log10(std::max(power, 1e-10)), kEnergyFloorDb);
}

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
  double p20 = 0.0;
  double p50 = 0.0;
  double p80 = 0.0;
};

double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Values are sorted before accumulation so the result depends only on the
// multiset of values, not their order.
Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  s.p20 = percentile_sorted(values, 0.2);
  s.p50 = percentile_sorted(values, 0.5);
  s.p80 = percentile_sorted(values, 0.8);
  return s;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  return percentile_sorted(values, 0.5);
}

// Runs of frames where pred(t) holds: [first, last) pairs.
template <typename Pred>
std::vector<std::pair<std::size_t, std::size_t>> runs(std::size_t n, Pred pred) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t t = 0;
  while (t < n) {
    if (!pred(t)) {
      ++t;
      continue;
    }
    const std::size_t start = t;
    while (t < n && pred(t)) ++t;
    out.emplace_back(start, t);
  }
  return out;
}

// Fills gaps of at most `max_gap` frames between active runs, then drops runs
// shorter than `min_run` frames.
void close_and_prune(std::vector<char>& active, std::size_t max_gap, std::size_t min_run) {
  const std::size_t n = active.size();
  auto on = runs(n, [&](std::size_t t) { return active[t] != 0; });
  for (std::size_t i = 1; i < on.size(); ++i) {
    if (on[i].first - on[i - 1].second <= max_gap) {
      std::fill(active.begin() + static_cast<std::ptrdiff_t>(on[i - 1].second),
                active.begin() + static_cast<std::ptrdiff_t>(on[i].first), 1);
    }
  }
  for (auto [a, b] : runs(n, [&](std::size_t t) { return active[t] != 0; })) {
    if (b - a < min_run) {
      std::fill(active.begin() + static_cast<std::ptrdiff_t>(a),
                active.begin() + static_cast<std::ptrdiff_t>(b), 0);
    }
  }
}

// 5-frame (50 ms) centered moving average of frame power, in dB.
std::vector<double> smoothed_energy(const std::vector<double>& energy_db) {
  const std::size_t n = energy_db.size();
  std::vector<double> power(n);
  for (std::size_t t = 0; t < n; ++t) power[t] = std::pow(10.0, energy_db[t] / 10.0);
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t a = t >= 2 ? t - 2 : 0;
    const std::size_t b = std::min(n, t + 3);
    double acc = 0.0;
    for (std::size_t i = a; i < b; ++i) acc += power[i];
    out[t] = to_db(acc / static_cast<double>(b - a));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pitch

PitchEstimate estimate_f0(std::span<const float> frame, int sample_rate) {
  PitchEstimate out;
  if (sample_rate <= 0) return out;
  const std::size_t n = frame.size();
  const auto tau_max = static_cast<std::size_t>(std::ceil(sample_rate / kMinF0));
  const auto tau_min = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(sample_rate / kMaxF0)));
  if (n < 2 * tau_max || tau_min + 2 > tau_max) return out;
  const std::size_t width = n - tau_max;

  double energy = 0.0;
  for (float x : frame) energy += static_cast<double>(x) * x;
  if (energy / static_cast<double>(n) < 1e-10) return out;

  std::vector<double> cmnd(tau_max + 1, 1.0);
  double running = 0.0;
  for (std::size_t tau = 1; tau <= tau_max; ++tau) {
    double d = 0.0;
    const float* a = frame.data();
    const float* b = frame.data() + tau;
    for (std::size_t j = 0; j < width; ++j) {
      const double diff = static_cast<double>(a[j]) - b[j];
      d += diff * diff;
    }
    running += d;
    cmnd[tau] = running > 0.0 ? d * static_cast<double>(tau) / running : 1.0;
  }

  std::size_t best = 0;
  for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
    if (cmnd[tau] < kYinThreshold) {
      while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
      best = tau;
      break;
    }
  }
  if (best == 0) {
    best = tau_min;
    for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
      if (cmnd[tau] < cmnd[best]) best = tau;
    }
  }

  double shift = 0.0;
  double value = cmnd[best];
  if (best > 1 && best < tau_max) {
    const double a = cmnd[best - 1], b = cmnd[best], c = cmnd[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom > 0.0) {
      shift = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
      value = b - 0.25 * (a - c) * shift;
    }
  }
  out.voicing = std::clamp(1.0 - value, 0.0, 1.0);
  const double f0 = sample_rate / (static_cast<double>(best) + shift);
  if (out.voicing < kVoicedThreshold || f0 < kMinF0 || f0 > kMaxF0) {
    out.f0 = 0.0;
    return out;
  }
  out.f0 = f0;

  // Strongest local minimum that is not a multiple or submultiple of `best`.
  const double period = static_cast<double>(best) + shift;
  auto related = [&](double tau) {
    for (int m = 1; m <= 8; ++m) {
      if (std::abs(tau - m * period) <= 0.08 * m * period) return true;
    }
    for (int m = 2; m <= 4; ++m) {
      if (std::abs(tau - period / m) <= 0.08 * period / m) return true;
    }
    return false;
  };
  double secondary = 0.0;
  for (std::size_t tau = tau_min + 1; tau < tau_max; ++tau) {
    if (cmnd[tau] < cmnd[tau - 1] && cmnd[tau] <= cmnd[tau + 1] && !related(static_cast<double>(tau))) {
      secondary = std::max(secondary, 1.0 - cmnd[tau]);
    }
  }
  out.secondary_voicing = std::clamp(secondary, 0.0, 1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Low-level descriptors

void FrameSeries::resize(std::size_t n) {
  for (auto* v : {&f0, &voicing, &secondary_voicing, &energy, &loudness, &centroid, &flux,
                  &slope_low, &slope_high, &alpha_ratio, &hammarberg, &hnr, &flatness}) {
    v->assign(n, 0.0);
  }
  mfcc.assign(n, {});
}

FrameSeries extract_llds(const Snippet& snippet) { return extract_llds(snippet.samples); }

FrameSeries extract_llds(std::span<const float> samples) {
  FrameSeries s;
  const std::size_t n = samples.size() < kFrameLength ? 0 : (samples.size() - kFrameLength) / kFrameHop + 1;
  s.resize(n);
  if (n == 0) return s;

  static const auto window = dsp::hamming(kFrameLength);
  static const double window_power = [] {
    double acc = 0.0;
    for (double w : dsp::hamming(kFrameLength)) acc += w * w;
    return acc;
  }();
  static const dsp::MelFilterbank mel(kMelBands, kFftSize, kSampleRate, 20.0, 8000.0);
  static const auto dct = [] {
    std::vector<double> m(kMfccCount * kMelBands);
    for (std::size_t k = 0; k < kMfccCount; ++k) {
      for (std::size_t i = 0; i < kMelBands; ++i) {
        m[k * kMelBands + i] = std::sqrt(2.0 / kMelBands) *
                               std::cos(M_PI * static_cast<double>(k + 1) * (i + 0.5) / kMelBands);
      }
    }
    return m;
  }();

  const double bin_hz = static_cast<double>(kSampleRate) / kFftSize;
  const std::size_t bins = kFftSize / 2 + 1;
  auto bin_of = [&](double hz) { return std::min(bins - 1, static_cast<std::size_t>(std::ceil(hz / bin_hz))); };
  const std::size_t b50 = bin_of(50.0), b500 = bin_of(500.0), b1000 = bin_of(1000.0),
                    b1500 = bin_of(1500.0), b2000 = bin_of(2000.0), b5000 = bin_of(5000.0);

  auto regression_slope = [&](const std::vector<double>& db, std::size_t lo, std::size_t hi) {
    double mf = 0.0, md = 0.0;
    const double cnt = static_cast<double>(hi - lo + 1);
    for (std::size_t k = lo; k <= hi; ++k) {
      mf += k * bin_hz;
      md += db[k];
    }
    mf /= cnt;
    md /= cnt;
    double cov = 0.0, var = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      const double df = k * bin_hz - mf;
      cov += df * (db[k] - md);
      var += df * df;
    }
    return var > 0.0 ? cov / var : 0.0;
  };

  std::vector<double> frame(kFrameLength);
  std::vector<double> prev_mag;
  std::vector<double> db(bins);
  for (std::size_t t = 0; t < n; ++t) {
    const float* x = samples.data() + t * kFrameHop;
    double ms = 0.0;
    for (std::size_t i = 0; i < kFrameLength; ++i) {
      ms += static_cast<double>(x[i]) * x[i];
      frame[i] = x[i] * window[i];
    }
    s.energy[t] = to_db(ms / kFrameLength);

    auto power = dsp::power_spectrum(frame, kFftSize);
    double total = 0.0, weighted = 0.0, log_sum = 0.0, lin_sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      power[k] /= window_power;
      total += power[k];
      weighted += power[k] * k * bin_hz;
      db[k] = 10.0 * std::log10(power[k] + kPowerEps);
      if (k > 0) {
        log_sum += std::log(power[k] + kPowerEps);
        lin_sum += power[k] + kPowerEps;
      }
    }
    s.centroid[t] = total > kPowerEps ? weighted / total : 0.0;
    s.flatness[t] = std::exp(log_sum / (bins - 1)) / (lin_sum / (bins - 1));

    std::vector<double> mag(bins);
    double norm = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      mag[k] = std::sqrt(power[k]);
      norm += power[k];
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (auto& m : mag) m /= norm;
    }
    if (!prev_mag.empty()) {
      double flux = 0.0;
      for (std::size_t k = 0; k < bins; ++k) flux += (mag[k] - prev_mag[k]) * (mag[k] - prev_mag[k]);
      s.flux[t] = flux;
    }
    prev_mag = std::move(mag);

    s.slope_low[t] = regression_slope(db, 0, b500);
    s.slope_high[t] = regression_slope(db, b500, b1500);
    double e_low = 0.0, e_high = 0.0;
    for (std::size_t k = b50; k < b1000; ++k) e_low += power[k];
    for (std::size_t k = b1000; k < b5000; ++k) e_high += power[k];
    s.alpha_ratio[t] = 10.0 * std::log10((e_low + kPowerEps) / (e_high + kPowerEps));
    const double peak_low = *std::max_element(db.begin(), db.begin() + static_cast<std::ptrdiff_t>(b2000));
    const double peak_high = *std::max_element(db.begin() + static_cast<std::ptrdiff_t>(b2000),
                                               db.begin() + static_cast<std::ptrdiff_t>(b5000));
    s.hammarberg[t] = peak_low - peak_high;

    const auto bands = mel.apply(power);
    double loud = 0.0;
    std::array<double, kMelBands> log_bands{};
    for (std::size_t b = 0; b < kMelBands; ++b) {
      loud += std::pow(bands[b], 0.3);
      log_bands[b] = std::log(bands[b] + 1e-10);
    }
    s.loudness[t] = loud;
    for (std::size_t k = 0; k < kMfccCount; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < kMelBands; ++i) acc += dct[k * kMelBands + i] * log_bands[i];
      s.mfcc[t][k] = acc;
    }
  }

  // Pitch runs on an 8 kHz copy; windows are centered on the LLD frame centers.
  const auto low = resample(samples, kSampleRate, kPitchRate);
  std::vector<float> pitch_frame(kPitchWindow);
  for (std::size_t t = 0; t < n; ++t) {
    if (s.energy[t] < kSilenceGateDb) continue;
    const long center = static_cast<long>((t * kFrameHop + kFrameLength / 2) / 2);
    const long first = center - static_cast<long>(kPitchWindow / 2);
    for (std::size_t i = 0; i < kPitchWindow; ++i) {
      const long idx = first + static_cast<long>(i);
      pitch_frame[i] = idx >= 0 && idx < static_cast<long>(low.size()) ? low[static_cast<std::size_t>(idx)] : 0.0f;
    }
    const auto est = estimate_f0(pitch_frame, kPitchRate);
    s.f0[t] = est.f0;
    s.voicing[t] = est.voicing;
    s.secondary_voicing[t] = est.secondary_voicing;
  }
  for (std::size_t t = 0; t < n; ++t) {
    const double v = std::clamp(s.voicing[t], 1e-3, 1.0 - 1e-3);
    s.hnr[t] = 10.0 * std::log10(v / (1.0 - v));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Functionals

const std::vector<std::string>& acoustic_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    const char* contour[] = {"mean", "std", "p20", "p50", "p80", "range20_80",
                             "rise_slope_mean", "rise_slope_std", "fall_slope_mean", "fall_slope_std"};
    for (const char* fam : {"f0_hz", "loudness"}) {
      for (const char* f : contour) out.push_back(std::string(fam) + "_" + f);
    }
    for (const char* f : {"mean", "std", "p20", "p50", "p80", "range20_80"}) out.push_back(std::string("energy_db_") + f);
    out.push_back("flux_mean");
    out.push_back("flux_std");
    for (std::size_t k = 1; k <= kMfccCount; ++k) {
      out.push_back("mfcc" + std::to_string(k) + "_mean");
      out.push_back("mfcc" + std::to_string(k) + "_std");
    }
    for (const char* f : {"jitter", "shimmer_db", "hnr_db", "centroid_hz", "slope0_500", "slope500_1500",
                          "alpha_ratio_db", "hammarberg_db", "flux"}) {
      out.push_back(std::string(f) + "_voiced_mean");
      out.push_back(std::string(f) + "_voiced_std");
    }
    for (const char* f : {"centroid_hz", "slope0_500", "slope500_1500", "alpha_ratio_db", "hammarberg_db", "flux"}) {
      out.push_back(std::string(f) + "_unvoiced_mean");
    }
    out.push_back("voicing_mean");
    out.push_back("voicing_std");
    for (const char* f : {"loudness_peaks_per_sec", "voiced_segments_per_sec", "voiced_segment_len_mean",
                          "voiced_segment_len_std", "unvoiced_segment_len_mean", "unvoiced_segment_len_std"}) {
      out.push_back(f);
    }
    out.push_back("equivalent_sound_level_db");
    out.push_back("voiced_fraction");
    return out;
  }();
  return names;
}

std::vector<double> compute_functionals(const FrameSeries& series) {
  const std::size_t n = series.size();
  if (n == 0) throw InvalidArgument("compute_functionals: empty frame series");
  std::vector<double> out;
  out.reserve(kAcousticDims);
  const double dt = 1.0 / series.frame_rate;

  auto push_contour = [&](const std::vector<double>& values, const std::vector<std::vector<double>>& pieces) {
    const auto s = summarize(values);
    out.insert(out.end(), {s.mean, s.stddev, s.p20, s.p50, s.p80, s.p80 - s.p20});
    std::vector<double> rise, fall;
    for (const auto& piece : pieces) {
      for (std::size_t i = 1; i < piece.size(); ++i) {
        const double slope = (piece[i] - piece[i - 1]) / dt;
        if (slope > 0.0) rise.push_back(slope);
        if (slope < 0.0) fall.push_back(-slope);
      }
    }
    const auto r = summarize(rise);
    const auto f = summarize(fall);
    out.insert(out.end(), {r.mean, r.stddev, f.mean, f.stddev});
  };
  auto push_mean_std = [&](const std::vector<double>& values) {
    const auto s = summarize(values);
    out.push_back(s.mean);
    out.push_back(s.stddev);
  };
  auto select = [&](const std::vector<double>& values, bool voiced) {
    std::vector<double> sel;
    for (std::size_t t = 0; t < n; ++t) {
      if (series.voiced(t) == voiced) sel.push_back(values[t]);
    }
    return sel;
  };

  const auto voiced_runs = runs(n, [&](std::size_t t) { return series.voiced(t); });
  const auto unvoiced_runs = runs(n, [&](std::size_t t) { return !series.voiced(t); });

  // f0 contour over voiced frames; slopes within voiced runs only.
  std::vector<std::vector<double>> f0_pieces;
  for (auto [a, b] : voiced_runs) {
    f0_pieces.emplace_back(series.f0.begin() + static_cast<std::ptrdiff_t>(a),
                           series.f0.begin() + static_cast<std::ptrdiff_t>(b));
  }
  push_contour(select(series.f0, true), f0_pieces);
  push_contour(series.loudness, {series.loudness});

  const auto e = summarize(series.energy);
  out.insert(out.end(), {e.mean, e.stddev, e.p20, e.p50, e.p80, e.p80 - e.p20});
  push_mean_std(series.flux);
  for (std::size_t k = 0; k < kMfccCount; ++k) {
    std::vector<double> c(n);
    for (std::size_t t = 0; t < n; ++t) c[t] = series.mfcc[t][k];
    push_mean_std(c);
  }

  std::vector<double> jitter, shimmer;
  for (std::size_t t = 1; t < n; ++t) {
    if (series.voiced(t) && series.voiced(t - 1)) {
      jitter.push_back(std::abs(series.f0[t] - series.f0[t - 1]) / (0.5 * (series.f0[t] + series.f0[t - 1])));
      shimmer.push_back(std::abs(series.energy[t] - series.energy[t - 1]));
    }
  }
  push_mean_std(jitter);
  push_mean_std(shimmer);
  for (const auto* v : {&series.hnr, &series.centroid, &series.slope_low, &series.slope_high,
                        &series.alpha_ratio, &series.hammarberg, &series.flux}) {
    push_mean_std(select(*v, true));
  }
  for (const auto* v : {&series.centroid, &series.slope_low, &series.slope_high, &series.alpha_ratio,
                        &series.hammarberg, &series.flux}) {
    out.push_back(summarize(select(*v, false)).mean);
  }
  push_mean_std(series.voicing);

  const double duration = static_cast<double>(n) * dt;
  std::size_t peaks = 0;
  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (series.loudness[t] > series.loudness[t - 1] && series.loudness[t] >= series.loudness[t + 1]) ++peaks;
  }
  out.push_back(static_cast<double>(peaks) / duration);
  out.push_back(static_cast<double>(voiced_runs.size()) / duration);
  std::vector<double> vlen, ulen;
  for (auto [a, b] : voiced_runs) vlen.push_back(static_cast<double>(b - a) * dt);
  for (auto [a, b] : unvoiced_runs) ulen.push_back(static_cast<double>(b - a) * dt);
  push_mean_std(vlen);
  push_mean_std(ulen);

  std::vector<double> power(n);
  for (std::size_t t = 0; t < n; ++t) power[t] = std::pow(10.0, series.energy[t] / 10.0);
  out.push_back(to_db(summarize(power).mean));
  std::size_t voiced_frames = 0;
  for (std::size_t t = 0; t < n; ++t) voiced_frames += series.voiced(t) ? 1 : 0;
  out.push_back(static_cast<double>(voiced_frames) / static_cast<double>(n));
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation

std::vector<Segment> SegmentList::of(SegmentKind kind) const {
  std::vector<Segment> out;
  for (const auto& s : segments) {
    if (s.kind == kind) out.push_back(s);
  }
  return out;
}

SegmentList detect_speech_segments(const Snippet& snippet) {
  return detect_speech_segments(extract_llds(snippet),
                                static_cast<double>(snippet.samples.size()) / kSampleRate);
}

SegmentList detect_speech_segments(const FrameSeries& series, double duration) {
  constexpr double kMadMultiplier = 3.0;
  constexpr double kMinMarginDb = 6.0;
  constexpr double kHeadroomDb = 30.0;
  constexpr double kAbsoluteFloorDb = -75.0;
  constexpr std::size_t kHangoverFrames = 20;
  constexpr std::size_t kMinSpeechFrames = 5;
  constexpr double kOverlapSecondary = 0.6;
  constexpr double kOverlapMaxFlatness = 0.3;
  constexpr std::size_t kMinOverlapFrames = 10;

  SegmentList out;
  out.duration = duration;
  const std::size_t n = series.size();
  if (n == 0) {
    if (duration > 0.0) out.segments.push_back({0.0, duration, SegmentKind::kNonspeech, 0.0});
    return out;
  }

  const auto smooth = smoothed_energy(series.energy);
  auto sorted = smooth;
  std::sort(sorted.begin(), sorted.end());
  const double p10 = percentile_sorted(sorted, 0.1);
  const double med = percentile_sorted(sorted, 0.5);
  std::vector<double> dev(n);
  for (std::size_t t = 0; t < n; ++t) dev[t] = std::abs(smooth[t] - med);
  const double mad = median_of(dev);
  double threshold = std::min(p10 + std::max(kMadMultiplier * mad, kMinMarginDb), sorted.back() - kHeadroomDb);
  threshold = std::max(threshold, kAbsoluteFloorDb);

  std::vector<char> active(n);
  for (std::size_t t = 0; t < n; ++t) active[t] = smooth[t] > threshold ? 1 : 0;
  close_and_prune(active, kHangoverFrames, kMinSpeechFrames);

  const double dt = 1.0 / series.frame_rate;
  auto frame_time = [&](std::size_t t) { return t >= n ? duration : std::min(duration, static_cast<double>(t) * dt); };

  auto speech_runs = runs(n, [&](std::size_t t) { return active[t] != 0; });
  double cursor = 0.0;
  for (auto [a, b] : speech_runs) {
    const double start = frame_time(a);
    const double end = frame_time(b);
    if (start > cursor) out.segments.push_back({cursor, start, SegmentKind::kNonspeech, 0.0});
    std::vector<double> f0;
    for (std::size_t t = a; t < b; ++t) {
      if (series.voiced(t)) f0.push_back(series.f0[t]);
    }
    out.segments.push_back({start, end, SegmentKind::kSpeech, median_of(f0)});
    cursor = end;
  }
  if (cursor < duration) out.segments.push_back({cursor, duration, SegmentKind::kNonspeech, 0.0});

  std::vector<char> overlap(n);
  for (std::size_t t = 0; t < n; ++t) {
    overlap[t] = active[t] && series.voiced(t) && series.secondary_voicing[t] >= kOverlapSecondary &&
                 series.flatness[t] <= kOverlapMaxFlatness;
  }
  close_and_prune(overlap, 5, kMinOverlapFrames);
  for (std::size_t t = 0; t < n; ++t) overlap[t] = overlap[t] && active[t];
  for (auto [a, b] : runs(n, [&](std::size_t t) { return overlap[t] != 0; })) {
    if (b - a >= kMinOverlapFrames) out.segments.push_back({frame_time(a), frame_time(b), SegmentKind::kOverlap, 0.0});
  }
  std::stable_sort(out.segments.begin(), out.segments.end(),
                   [](const Segment& x, const Segment& y) { return x.start < y.start; });
  return out;
}

const std::vector<std::string>& duration_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const char* kind : {"speech", "nonspeech", "overlap"}) {
      for (const char* f : {"count", "total_s", "mean_s", "std_s", "median_s", "min_s", "max_s", "fraction"}) {
        out.push_back(std::string(kind) + "_" + f);
      }
    }
    out.push_back("alternation_rate_per_s");
    return out;
  }();
  return names;
}

std::vector<double> duration_stats(const SegmentList& segments) {
  std::vector<double> out;
  out.reserve(kDurationDims);
  for (auto kind : {SegmentKind::kSpeech, SegmentKind::kNonspeech, SegmentKind::kOverlap}) {
    std::vector<double> d;
    for (const auto& s : segments.of(kind)) d.push_back(s.end - s.start);
    if (d.empty()) {
      out.insert(out.end(), 8, 0.0);
      continue;
    }
    const auto sum = summarize(d);
    const double total = sum.mean * static_cast<double>(d.size());
    out.insert(out.end(), {static_cast<double>(d.size()), total, sum.mean, sum.stddev, sum.p50,
                           *std::min_element(d.begin(), d.end()), *std::max_element(d.begin(), d.end()),
                           segments.duration > 0.0 ? total / segments.duration : 0.0});
  }
  const auto speech = segments.of(SegmentKind::kSpeech);
  std::size_t alternations = 0;
  for (std::size_t i = 1; i < speech.size(); ++i) {
    const double a = speech[i - 1].pitch_hz, b = speech[i].pitch_hz;
    if (a > 0.0 && b > 0.0 && std::abs(12.0 * std::log2(b / a)) > 4.0) ++alternations;
  }
  out.push_back(segments.duration > 0.0 ? static_cast<double>(alternations) / segments.duration : 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Speaking rate

SpeakingRate speaking_rate(const Snippet& snippet, const FrameSeries& series) {
  const std::size_t expected =
      snippet.samples.size() < kFrameLength ? 0 : (snippet.samples.size() - kFrameLength) / kFrameHop + 1;
  if (expected != series.size()) {
    throw InvalidArgument("speaking_rate: frame series does not belong to this snippet");
  }
  return speaking_rate(series);
}

SpeakingRate speaking_rate(const FrameSeries& series) {
  constexpr double kProminenceDb = 2.0;
  constexpr double kPeakRangeDb = 25.0;
  const std::size_t n = series.size();
  SpeakingRate rate;
  const auto smooth = smoothed_energy(series.energy);

  double loudest = kEnergyFloorDb;
  bool any_voiced = false;
  for (std::size_t t = 0; t < n; ++t) {
    if (series.voiced(t)) {
      loudest = std::max(loudest, smooth[t]);
      any_voiced = true;
    }
  }
  if (!any_voiced) return rate;

  std::vector<char> nucleus(n, 0);
  for (auto [a, b] : runs(n, [&](std::size_t t) { return series.voiced(t); })) {
    for (std::size_t t = a + 1; t < b; ++t) {
      const bool rise = smooth[t] > smooth[t - 1];
      const bool not_falling_in = t + 1 >= b || smooth[t] >= smooth[t + 1];
      if (!rise || !not_falling_in || smooth[t] < loudest - kPeakRangeDb) continue;
      double left = smooth[t];
      for (std::size_t i = t; i-- > a;) {
        if (smooth[i] > smooth[t]) break;
        left = std::min(left, smooth[i]);
      }
      double right = smooth[t];
      for (std::size_t i = t + 1; i < b; ++i) {
        if (smooth[i] > smooth[t]) break;
        right = std::min(right, smooth[i]);
      }
      if (smooth[t] - std::max(left, right) >= kProminenceDb) nucleus[t] = 1;
    }
  }

  const auto per_window = static_cast<std::size_t>(series.frame_rate);
  std::vector<double> rates;
  for (std::size_t w = 0; w * per_window < n; ++w) {
    const std::size_t a = w * per_window;
    const std::size_t b = std::min(n, a + per_window);
    if ((b - a) * 2 < per_window) break;
    std::size_t count = 0;
    bool voiced = false;
    for (std::size_t t = a; t < b; ++t) {
      count += nucleus[t];
      voiced = voiced || series.voiced(t);
    }
    if (voiced) rates.push_back(static_cast<double>(count) * series.frame_rate / static_cast<double>(b - a));
  }
  const auto s = summarize(rates);
  rate.mean = s.mean;
  rate.stddev = s.stddev;
  return rate;
}

// ---------------------------------------------------------------------------
// Assembly

HandcraftedVector assemble_handcrafted(std::span<const double> acoustic, std::span<const double> stats,
                                       std::span<const double> rate) {
  auto check = [](std::span<const double> v, std::size_t want, const char* name) {
    if (v.size() != want) {
      throw InvalidArgument(std::string("assemble_handcrafted: component '") + name + "' has " +
                            std::to_string(v.size()) + " values, expected " + std::to_string(want));
    }
  };
  check(acoustic, kAcousticDims, "acoustic");
  check(stats, kDurationDims, "stats");
  check(rate, kRateDims, "rate");
  HandcraftedVector out;
  out.values.reserve(kHandcraftedDims);
  for (auto part : {acoustic, rate, stats}) {
    for (double v : part) {
      if (!std::isfinite(v)) throw InvalidArgument("assemble_handcrafted: non-finite value");
      out.values.push_back(static_cast<float>(v));
    }
  }
  return out;
}

HandcraftedVector extract_handcrafted(const Snippet& snippet) { return extract_handcrafted(snippet.samples); }

HandcraftedVector extract_handcrafted(std::span<const float> samples) {
  const auto series = extract_llds(samples);
  const auto acoustic = compute_functionals(series);
  const auto segments = detect_speech_segments(series, static_cast<double>(samples.size()) / kSampleRate);
  const auto stats = duration_stats(segments);
  const auto rate = speaking_rate(series);
  const double r[2] = {rate.mean, rate.stddev};
  return assemble_handcrafted(acoustic, stats, r);
}

const std::vector<std::string>& handcrafted_feature_names() {
  static const std::vector<std::string> names = [] {
    auto out = acoustic_feature_names();
    out.push_back("speaking_rate_mean");
    out.push_back("speaking_rate_std");
    const auto& d = duration_feature_names();
    out.insert(out.end(), d.begin(), d.end());
    return out;
  }();
  return names;
}

// ---------------------------------------------------------------------------
// Standardizer

Standardizer fit_standardizer(const std::vector<std::vector<float>>& vectors) {
  if (vectors.size() < 2) throw InvalidArgument("fit_standardizer: need at least 2 vectors");
  const std::size_t dims = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dims) throw InvalidArgument("fit_standardizer: vectors differ in dimension");
  }
  Standardizer s;
  s.mean.assign(dims, 0.0);
  s.stddev.assign(dims, 0.0);
  const double count = static_cast<double>(vectors.size());
  for (const auto& v : vectors) {
    for (std::size_t d = 0; d < dims; ++d) s.mean[d] += v[d];
  }
  for (auto& m : s.mean) m /= count;
  for (const auto& v : vectors) {
    for (std::size_t d = 0; d < dims; ++d) s.stddev[d] += (v[d] - s.mean[d]) * (v[d] - s.mean[d]);
  }
  for (auto& sd : s.stddev) sd = std::max(std::sqrt(sd / count), Standardizer::kEpsilon);
  return s;
}

std::vector<float> Standardizer::apply(std::span<const float> x) const {
  if (x.size() != dims()) throw InvalidArgument("Standardizer::apply: dimension mismatch");
  std::vector<float> z(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) z[d] = static_cast<float>((x[d] - mean[d]) / stddev[d]);
  return z;
}

std::vector<float> Standardizer::invert(std::span<const float> z) const {
  if (z.size() != dims()) throw InvalidArgument("Standardizer::invert: dimension mismatch");
  std::vector<float> x(z.size());
  for (std::size_t d = 0; d < z.size(); ++d) x[d] = static_cast<float>(z[d] * stddev[d] + mean[d]);
  return x;
}

}  // namespace ssc
