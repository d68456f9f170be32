#include "ssc/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>

#include "byte_io.hpp"
#include "file_util.hpp"
#include "ssc/error.hpp"

namespace ssc {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::int32_t read_int24(const unsigned char* p) {
  std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
  if (v & 0x800000) v |= ~0xFFFFFF;
  return v;
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = detail::read_text(path);
  } catch (const IoError&) {
    throw IoError("cannot read audio file " + path.string());
  }
  const std::string where = " (" + path.string() + ")";
  detail::ByteReader in(bytes);
  std::string riff, wave;
  std::uint32_t riff_size = 0;
  if (!in.get_bytes(4, riff) || !in.get(riff_size) || !in.get_bytes(4, wave) || riff != "RIFF" ||
      wave != "WAVE") {
    throw IoError("not a RIFF/WAVE file" + where);
  }

  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::string_view payload;
  bool have_data = false;
  while (in.remaining() >= 8) {
    std::string id;
    std::uint32_t size = 0;
    in.get_bytes(4, id);
    in.get(size);
    if (id == "fmt ") {
      if (size < 16 || in.remaining() < size) throw IoError("corrupt fmt chunk" + where);
      std::uint32_t byte_rate = 0;
      in.get(format);
      in.get(channels);
      in.get(rate);
      in.get(byte_rate);
      in.get(block_align);
      in.get(bits);
      std::size_t consumed = 16;
      if (format == kFormatExtensible && size >= 40) {
        std::uint16_t cb_size = 0, valid_bits = 0, sub_format = 0;
        std::uint32_t channel_mask = 0;
        in.get(cb_size);
        in.get(valid_bits);
        in.get(channel_mask);
        in.get(sub_format);
        consumed += 10;
        format = sub_format;
      }
      in.skip(size - consumed + (size & 1u));
      have_fmt = true;
    } else if (id == "data") {
      std::size_t n = size;
      if (size == 0xFFFFFFFFu) {
        n = in.remaining();
      } else if (n > in.remaining()) {
        throw IoError("truncated data chunk" + where);
      }
      payload = std::string_view(bytes).substr(in.position(), n);
      have_data = true;
      break;
    } else {
      if (!in.skip(size + (size & 1u))) break;
    }
  }
  if (!have_fmt) throw IoError("missing fmt chunk" + where);
  if (!have_data) throw IoError("missing data chunk" + where);
  if (channels == 0 || rate == 0) throw IoError("invalid channel count or sample rate" + where);
  const std::size_t width = bits / 8;
  const bool supported = (format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32)) ||
                         (format == kFormatFloat && bits == 32);
  if (!supported) {
    throw IoError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                  std::to_string(bits) + " bits)" + where);
  }
  if (block_align != width * channels) throw IoError("inconsistent block alignment" + where);

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.channels = channels;
  const std::size_t count = payload.size() / width;
  out.interleaved.resize(count - count % channels);
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < out.interleaved.size(); ++i, p += width) {
    float v = 0.0f;
    if (format == kFormatFloat) {
      std::memcpy(&v, p, 4);
      if (!std::isfinite(v)) throw IoError("non-finite sample in float WAV" + where);
    } else if (bits == 8) {
      v = (static_cast<int>(p[0]) - 128) / 128.0f;
    } else if (bits == 16) {
      std::int16_t s;
      std::memcpy(&s, p, 2);
      v = s / 32768.0f;
    } else if (bits == 24) {
      v = static_cast<float>(read_int24(p) / 8388608.0);
    } else {
      std::int32_t s;
      std::memcpy(&s, p, 4);
      v = static_cast<float>(s / 2147483648.0);
    }
    out.interleaved[i] = v;
  }
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const float> interleaved,
               int sample_rate, int channels, bool float_format) {
  if (channels < 1 || sample_rate < 1) throw InvalidArgument("write_wav: bad rate/channels");
  const std::uint16_t bits = float_format ? 32 : 16;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint32_t data_size = static_cast<std::uint32_t>(interleaved.size() * bits / 8);
  detail::ByteWriter w;
  w.put_bytes("RIFF");
  w.put<std::uint32_t>(36 + data_size);
  w.put_bytes("WAVEfmt ");
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(float_format ? kFormatFloat : kFormatPcm);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(channels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sample_rate));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sample_rate) * block);
  w.put<std::uint16_t>(block);
  w.put<std::uint16_t>(bits);
  w.put_bytes("data");
  w.put<std::uint32_t>(data_size);
  if (float_format) {
    w.put_floats(interleaved);
  } else {
    for (float x : interleaved) {
      const double scaled = std::nearbyint(static_cast<double>(x) * 32768.0);
      w.put(static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
    }
  }
  detail::write_text(path, w.str());
}

std::vector<float> mix_to_mono(std::span<const float> interleaved, int channels) {
  if (channels <= 1) return {interleaved.begin(), interleaved.end()};
  const std::size_t frames = interleaved.size() / static_cast<std::size_t>(channels);
  std::vector<float> out(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) sum += interleaved[i * channels + c];
    out[i] = static_cast<float>(sum / channels);
  }
  return out;
}

std::vector<float> resample(std::span<const float> input, int in_rate, int out_rate) {
  if (in_rate <= 0 || out_rate <= 0) throw InvalidArgument("resample: rates must be positive");
  if (in_rate == out_rate || input.empty()) return {input.begin(), input.end()};

  const long g = std::gcd(in_rate, out_rate);
  const long up = out_rate / g;
  const long down = in_rate / g;

  constexpr double kCutoffFraction = 0.95;
  constexpr double kZeroCrossings = 24.0;
  constexpr double kKaiserBeta = 8.0;
  // Cutoff in cycles per input sample.
  const double fc = 0.5 * kCutoffFraction * std::min(1.0, static_cast<double>(out_rate) / in_rate);
  const double half_width = kZeroCrossings / (2.0 * fc);
  const long reach = static_cast<long>(std::ceil(half_width));
  const long taps = 2 * reach;
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);

  // table[phase][j] weights x[base + j - reach + 1] for output time base + phase/up.
  std::vector<float> table(static_cast<std::size_t>(up * taps));
  for (long phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / up;
    double sum = 0.0;
    std::vector<double> w(static_cast<std::size_t>(taps));
    for (long j = 0; j < taps; ++j) {
      const double x = frac - static_cast<double>(j - reach + 1);
      double h = 0.0;
      if (std::abs(x) < half_width) {
        const double u = 2.0 * fc * x;
        const double sinc = u == 0.0 ? 1.0 : std::sin(M_PI * u) / (M_PI * u);
        const double r = x / half_width;
        const double win = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
        h = 2.0 * fc * sinc * win;
      }
      w[static_cast<std::size_t>(j)] = h;
      sum += h;
    }
    for (long j = 0; j < taps; ++j) {
      table[static_cast<std::size_t>(phase * taps + j)] = static_cast<float>(w[static_cast<std::size_t>(j)] / sum);
    }
  }

  const long n_in = static_cast<long>(input.size());
  const long n_out = (n_in - 1) * up / down + 1;
  std::vector<float> out(static_cast<std::size_t>(n_out));
  for (long i = 0; i < n_out; ++i) {
    const long num = i * down;
    const long base = num / up;
    const long phase = num % up;
    const float* h = &table[static_cast<std::size_t>(phase * taps)];
    const long first = base - reach + 1;
    const long lo = std::max(0L, -first);
    const long hi = std::min(taps, n_in - first);
    double acc = 0.0;
    for (long j = lo; j < hi; ++j) acc += static_cast<double>(h[j]) * input[static_cast<std::size_t>(first + j)];
    out[static_cast<std::size_t>(i)] = static_cast<float>(acc);
  }
  return out;
}

AudioBuffer decode_resample(const std::filesystem::path& path) {
  auto wav = read_wav(path);
  if (wav.interleaved.empty()) throw IoError("zero-length audio (" + path.string() + ")");
  AudioBuffer out;
  out.sample_rate = kSampleRate;
  auto mono = mix_to_mono(wav.interleaved, wav.channels);
  out.samples = wav.sample_rate == kSampleRate ? std::move(mono)
                                               : resample(mono, wav.sample_rate, kSampleRate);
  return out;
}

std::vector<Snippet> chunk_episode(const AudioBuffer& buffer, const std::string& episode_id) {
  if (buffer.sample_rate != kSampleRate) {
    throw InvalidArgument("chunk_episode: expected 16 kHz audio, got " +
                          std::to_string(buffer.sample_rate));
  }
  const std::size_t min_tail = static_cast<std::size_t>(kMinTailSeconds * kSampleRate);
  std::vector<Snippet> out;
  if (buffer.samples.size() < min_tail) {
    std::cerr << "warning: episode '" << episode_id << "' shorter than " << kMinTailSeconds
              << " s; no snippets\n";
    return out;
  }
  const std::size_t full = buffer.samples.size() / kSnippetSamples;
  const std::size_t rem = buffer.samples.size() % kSnippetSamples;
  const std::size_t count = full + (rem >= min_tail ? 1 : 0);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Snippet s;
    s.episode_id = episode_id;
    s.index = i;
    const auto begin = buffer.samples.begin() + static_cast<std::ptrdiff_t>(i * kSnippetSamples);
    const std::size_t n = std::min(kSnippetSamples, buffer.samples.size() - i * kSnippetSamples);
    s.samples.assign(begin, begin + static_cast<std::ptrdiff_t>(n));
    s.padded_tail = kSnippetSamples - n;
    s.samples.resize(kSnippetSamples, 0.0f);
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<std::size_t, std::size_t> training_window_range(std::size_t count, std::size_t n) {
  if (count <= n) return {0, count};
  const std::size_t first = (count - n) / 2;
  return {first, first + n};
}

std::vector<Snippet> training_window(const std::vector<Snippet>& snippets, std::size_t n) {
  const auto [first, last] = training_window_range(snippets.size(), n);
  return {snippets.begin() + static_cast<std::ptrdiff_t>(first),
          snippets.begin() + static_cast<std::ptrdiff_t>(last)};
}

std::filesystem::path snippet_cache_path(const std::filesystem::path& dir, const Snippet& snippet) {
  return dir / (snippet.episode_id + "." + std::to_string(snippet.index) + ".pcm");
}

void write_snippet_cache(const std::filesystem::path& dir, const Snippet& snippet) {
  detail::ByteWriter w;
  w.put_floats(snippet.samples);
  detail::write_text(snippet_cache_path(dir, snippet), w.str());
}

Snippet read_snippet_cache(const std::filesystem::path& dir, const std::string& episode_id,
                           std::size_t index) {
  Snippet s;
  s.episode_id = episode_id;
  s.index = index;
  const auto bytes = detail::read_text(snippet_cache_path(dir, s));
  if (bytes.size() != kSnippetSamples * sizeof(float)) {
    throw IoError("snippet cache file has wrong size: " + snippet_cache_path(dir, s).string());
  }
  detail::ByteReader r(bytes);
  r.get_floats(kSnippetSamples, s.samples);
  return s;
}

}  // namespace ssc
