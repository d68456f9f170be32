#pragma once

// Synthetic labeled corpus: tonal "speech" whose classes differ in pause
// structure, pitch variability and rhythm regularity.
//
// An episode is a sequence of voiced spans (harmonic tone with an f0 random
// walk and syllabic amplitude modulation) separated by pauses filled with
// low-level room noise. The silence budget is fixed up front, so the silence
// fraction is known exactly from the generator's own bookkeeping.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ssc/audio.hpp"
#include "ssc/corpus.hpp"

namespace ssc {

struct StyleProfile {
  std::string name;
  // Pauses: the silence fraction is drawn uniformly in [silence_min, silence_max]
  // and shared between pauses whose relative lengths are lognormal with
  // coefficient of variation pause_cv.
  double silence_min = 0.05;
  double silence_max = 0.15;
  double pause_cv = 0.15;
  // Voiced span lengths in seconds: lognormal with this mean and CV, clamped
  // to [span_min, span_max].
  double span_mean = 4.0;
  double span_cv = 0.2;
  double span_min = 1.0;
  double span_max = 8.0;
  // Pitch: per-speaker base f0 range (Hz) and random walk in semitones.
  double f0_low = 100.0;
  double f0_high = 200.0;
  double f0_walk = 0.6;       // semitones per sqrt(second)
  double f0_pull = 1.5;       // mean reversion per second
  double f0_jump = 0.5;       // semitone std of per-span base offset
  // Syllabic modulation.
  double syllable_rate = 4.5;   // Hz
  double syllable_jitter = 0.08;  // CV of syllable length
  double syllable_depth = 0.8;    // 1 - trough/peak
  double syllable_level_sd = 1.0;  // dB std of per-syllable peak level
  // Speakers and overlap.
  int speakers = 1;
  double overlap_prob = 0.0;     // per span change, chance the next voice starts early
  double overlap_min = 0.5;      // seconds
  double overlap_max = 1.5;

  static StyleProfile scripted();
  static StyleProfile spontaneous();
  /// Parameter-wise interpolation: t = 0 gives `a`, t = 1 gives `b`.
  static StyleProfile blend(const StyleProfile& a, const StyleProfile& b, double t);
};

struct EpisodeTruth {
  double duration = 0.0;          // seconds
  double silence_seconds = 0.0;   // total pause length
  double overlap_seconds = 0.0;
  std::size_t spans = 0;
  /// Voiced spans as [start, end) in seconds.
  std::vector<std::pair<double, double>> speech;

  double silence_fraction() const { return duration > 0 ? silence_seconds / duration : 0.0; }
};

struct SynthEpisode {
  AudioBuffer audio;
  EpisodeTruth truth;
};

inline constexpr double kMinEpisodeSeconds = 60.0;

/// Deterministic per seed. Throws InvalidArgument when duration < 60 s.
SynthEpisode gen_episode(const StyleProfile& profile, std::uint64_t seed, double duration);

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t scripted_episodes = 40;
  std::size_t spontaneous_episodes = 40;
  double episode_seconds = 180.0;
  /// When both are positive the class counts follow ratio_scripted :
  /// ratio_spontaneous of their sum (rounded), overriding the per-class counts.
  double ratio_scripted = 0.0;
  double ratio_spontaneous = 0.0;
  /// Share of episodes per class whose profile is blended halfway toward the
  /// other class.
  double atypical_fraction = 0.1;
  double atypical_blend = 0.5;
  std::vector<std::string> languages = {"lang-a", "lang-b"};
  std::vector<std::string> categories = {"society", "comedy"};
  StyleProfile scripted = StyleProfile::scripted();
  StyleProfile spontaneous = StyleProfile::spontaneous();

  /// Effective class counts after applying a ratio.
  std::pair<std::size_t, std::size_t> class_counts() const;
  void validate() const;

  /// Text config of `key = value` lines; unknown keys are an error.
  static SynthConfig parse(std::string_view text);
  static SynthConfig load(const std::filesystem::path& path);
  std::string to_text() const;
};

struct SynthCorpus {
  std::vector<EpisodeRecord> records;
  std::vector<EpisodeTruth> truths;
  std::filesystem::path manifest_path;
};

/// Writes `<out>/audio/<id>.wav` (16-bit PCM, 16 kHz) and `<out>/manifest.tsv`.
/// Rerunning with the same config produces identical files.
SynthCorpus gen_corpus(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace ssc
