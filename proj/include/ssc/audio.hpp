#pragma once

// Audio decoding, resampling, 30-second snippet segmentation and training
// window selection.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ssc {

inline constexpr int kSampleRate = 16000;
inline constexpr double kSnippetSeconds = 30.0;
inline constexpr std::size_t kSnippetSamples = 480000;  // 30 s at 16 kHz
inline constexpr double kMinTailSeconds = 5.0;
inline constexpr std::size_t kTrainingWindow = 25;

struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct Snippet {
  std::string episode_id;
  std::size_t index = 0;
  std::vector<float> samples;     // always kSnippetSamples long
  std::size_t padded_tail = 0;    // zero samples appended at the end
};

/// Raw WAV contents before mixdown/resampling.
struct WavData {
  int sample_rate = 0;
  int channels = 0;
  std::vector<float> interleaved;
};

/// Reads PCM WAV: 16/24/32-bit integer or 32-bit float, including
/// WAVE_FORMAT_EXTENSIBLE headers. Throws IoError on unreadable or corrupt input.
WavData read_wav(const std::filesystem::path& path);

/// Writes mono or interleaved audio as 16-bit PCM (`float_format` false) or
/// 32-bit float WAV.
void write_wav(const std::filesystem::path& path, std::span<const float> interleaved,
               int sample_rate, int channels = 1, bool float_format = false);

/// Averages interleaved channels into mono.
std::vector<float> mix_to_mono(std::span<const float> interleaved, int channels);

/// Band-limited rational-ratio resampler: polyphase Kaiser-windowed sinc.
///
/// The anti-aliasing cutoff is 0.95 of the lower Nyquist frequency, the
/// kernel spans 24 zero crossings of the cutoff sinc on each side, and the
/// Kaiser beta is 8.0 (roughly 80 dB stopband). Output length is
/// floor((n - 1) * out / in) + 1, so sample i sits at input time i * in / out.
std::vector<float> resample(std::span<const float> input, int in_rate, int out_rate);

/// Decode, mix down to mono and resample to 16 kHz. Mono 16 kHz input is
/// returned unchanged. Throws on unreadable files and zero-length audio.
AudioBuffer decode_resample(const std::filesystem::path& path);

/// Splits into 30 s snippets. A final partial snippet of at least 5 s is
/// zero-padded; a shorter remainder is dropped. A buffer shorter than 5 s
/// yields no snippets (and a warning on stderr).
std::vector<Snippet> chunk_episode(const AudioBuffer& buffer, const std::string& episode_id = {});

/// The `n` sequential snippets centered in the episode, starting at
/// floor((count - n) / 2); all snippets when there are fewer than `n`.
std::vector<Snippet> training_window(const std::vector<Snippet>& snippets,
                                     std::size_t n = kTrainingWindow);

/// Index range [first, last) selected by training_window for `count` snippets.
std::pair<std::size_t, std::size_t> training_window_range(std::size_t count,
                                                          std::size_t n = kTrainingWindow);

/// Snippet cache: raw little-endian f32 samples in `<dir>/<episode_id>.<index>.pcm`.
std::filesystem::path snippet_cache_path(const std::filesystem::path& dir, const Snippet& snippet);
void write_snippet_cache(const std::filesystem::path& dir, const Snippet& snippet);
Snippet read_snippet_cache(const std::filesystem::path& dir, const std::string& episode_id,
                           std::size_t index);

}  // namespace ssc
