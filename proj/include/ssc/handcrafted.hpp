#pragma once

// 115-dimensional handcrafted feature vector per snippet:
//   [ 0, 88)  eGeMAPS-style acoustic functionals (own reimplementation)
//   [88, 90)  speaking rate mean / std
//   [90,115)  speech / non-speech / overlap-proxy duration statistics
//
// The full ordered name list is returned by handcrafted_feature_names() and
// written next to extracted feature files.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ssc/audio.hpp"

namespace ssc {

inline constexpr std::size_t kAcousticDims = 88;
inline constexpr std::size_t kRateDims = 2;
inline constexpr std::size_t kDurationDims = 25;
inline constexpr std::size_t kHandcraftedDims = 115;
inline constexpr const char* kHandcraftedSchema = "handcrafted-v1";

inline constexpr double kFrameRate = 100.0;         // 10 ms hop
inline constexpr std::size_t kFrameLength = 400;    // 25 ms at 16 kHz
inline constexpr std::size_t kFrameHop = 160;
inline constexpr std::size_t kMfccCount = 13;
inline constexpr double kMinF0 = 50.0;
inline constexpr double kMaxF0 = 500.0;
inline constexpr double kEnergyFloorDb = -100.0;

struct PitchEstimate {
  double f0 = 0.0;       // Hz, 0 when unvoiced
  double voicing = 0.0;  // 1 - aperiodicity of the chosen lag, in [0, 1]
  /// Strength of the best periodicity not harmonically related to the chosen
  /// lag; high values suggest two simultaneous voices.
  double secondary_voicing = 0.0;
};

/// YIN pitch estimate (cumulative mean normalized difference, absolute
/// threshold 0.15, parabolic refinement) over [50, 500] Hz. The frame must
/// cover at least two periods of 50 Hz. Frames with voicing < 0.5 are
/// reported unvoiced (f0 = 0).
PitchEstimate estimate_f0(std::span<const float> frame, int sample_rate);

/// Per-frame low-level descriptors at 100 frames/s. Frame t covers samples
/// [160 t, 160 t + 400); frames that would run past the snippet end are not
/// produced, so a 30 s snippet yields 2998 frames.
struct FrameSeries {
  double frame_rate = kFrameRate;
  std::vector<double> f0;              // Hz, 0 when unvoiced
  std::vector<double> voicing;         // [0, 1]
  std::vector<double> secondary_voicing;
  std::vector<double> energy;          // dB re full-scale mean square, floored
  std::vector<double> loudness;        // sum of compressed mel band energies
  std::vector<std::array<double, kMfccCount>> mfcc;  // c1..c13
  std::vector<double> centroid;        // Hz
  std::vector<double> flux;            // squared distance of unit-norm magnitude spectra
  std::vector<double> slope_low;       // dB/Hz regression slope, 0-500 Hz
  std::vector<double> slope_high;      // dB/Hz regression slope, 500-1500 Hz
  std::vector<double> alpha_ratio;     // dB, 50-1000 Hz vs 1-5 kHz
  std::vector<double> hammarberg;      // dB, peak 0-2 kHz minus peak 2-5 kHz
  std::vector<double> hnr;             // dB proxy from voicing
  std::vector<double> flatness;        // spectral flatness in (0, 1]

  std::size_t size() const { return energy.size(); }
  bool voiced(std::size_t t) const { return f0[t] > 0.0; }
  /// Resizes every series to n frames.
  void resize(std::size_t n);
};

FrameSeries extract_llds(const Snippet& snippet);
FrameSeries extract_llds(std::span<const float> samples);

/// Ordered names of the 88 acoustic functionals.
const std::vector<std::string>& acoustic_feature_names();

/// 88 acoustic functionals. With no voiced frames every pitch-derived and
/// voiced-only functional is 0 and `voiced_fraction` (index 87) is 0; that
/// index doubles as the validity flag for the pitch block.
std::vector<double> compute_functionals(const FrameSeries& series);

enum class SegmentKind { kSpeech, kNonspeech, kOverlap };

struct Segment {
  double start = 0.0;  // seconds
  double end = 0.0;
  SegmentKind kind = SegmentKind::kSpeech;
  double pitch_hz = 0.0;  // median f0 over voiced frames (speech only), 0 if none
};

struct SegmentList {
  double duration = kSnippetSeconds;
  std::vector<Segment> segments;  // sorted by start

  std::vector<Segment> of(SegmentKind kind) const;
};

/// Energy VAD: 50 ms smoothed frame energy against an adaptive threshold
/// min(p10 + max(3 MAD, 6 dB), max - 30 dB), never below -75 dB. Gaps shorter
/// than the 200 ms hangover are bridged; speech bursts under 50 ms are
/// discarded. Speech and non-speech tile [0, duration]. Overlap-proxy segments
/// (approximate) are runs of at least 100 ms of voiced frames showing a
/// second, harmonically unrelated periodicity.
SegmentList detect_speech_segments(const Snippet& snippet);
SegmentList detect_speech_segments(const FrameSeries& series, double duration);

const std::vector<std::string>& duration_feature_names();

/// For speech, nonspeech and overlap: count, total, mean, std (population),
/// median, min, max, fraction of duration; then the speaker-alternation proxy
/// rate (pitch jumps > 4 semitones between consecutive speech segments per
/// second). 25 values.
std::vector<double> duration_stats(const SegmentList& segments);

struct SpeakingRate {
  double mean = 0.0;  // syllable nuclei per second
  double stddev = 0.0;
};

/// Counts syllable nuclei (energy peaks with at least 2 dB prominence inside
/// voiced spans) in consecutive 1 s windows and summarizes the windows that
/// contain voiced frames.
SpeakingRate speaking_rate(const Snippet& snippet, const FrameSeries& series);
SpeakingRate speaking_rate(const FrameSeries& series);

struct HandcraftedVector {
  std::vector<float> values;
  std::string schema_id = kHandcraftedSchema;
};

/// Concatenates [acoustic | rate | stats]. Dimension errors name the component.
HandcraftedVector assemble_handcrafted(std::span<const double> acoustic,
                                       std::span<const double> stats,
                                       std::span<const double> rate);

/// Full extraction for one snippet.
HandcraftedVector extract_handcrafted(const Snippet& snippet);
HandcraftedVector extract_handcrafted(std::span<const float> samples);

const std::vector<std::string>& handcrafted_feature_names();

/// Per-dimension z-scoring fitted on training data.
struct Standardizer {
  static constexpr double kEpsilon = 1e-8;
  std::vector<double> mean;
  std::vector<double> stddev;  // population std, floored at kEpsilon

  std::size_t dims() const { return mean.size(); }
  std::vector<float> apply(std::span<const float> x) const;
  std::vector<float> invert(std::span<const float> z) const;
};

/// Throws InvalidArgument with fewer than two vectors or ragged input.
Standardizer fit_standardizer(const std::vector<std::vector<float>>& vectors);
inline std::vector<float> apply_standardizer(std::span<const float> x, const Standardizer& s) {
  return s.apply(x);
}

}  // namespace ssc
