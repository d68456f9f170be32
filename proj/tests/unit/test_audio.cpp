#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "ssc/audio.hpp"
#include "ssc/error.hpp"

using namespace ssc;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

fs::path tmp_dir() {
  const char* env = std::getenv("SSC_TEST_TMP");
  fs::path p = fs::path(env ? env : fs::temp_directory_path().string()) / "audio";
  fs::create_directories(p);
  return p;
}

// Hand-built RIFF/WAVE file, independent of the library writer.
void put16(std::string& s, std::uint16_t v) { s.append(reinterpret_cast<const char*>(&v), 2); }
void put32(std::string& s, std::uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }

std::string wav_bytes(int rate, int channels, int bits, std::uint16_t format, const std::string& payload,
                      bool extensible = false) {
  std::string fmt;
  put16(fmt, extensible ? 0xFFFE : format);
  put16(fmt, static_cast<std::uint16_t>(channels));
  put32(fmt, static_cast<std::uint32_t>(rate));
  put32(fmt, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put16(fmt, static_cast<std::uint16_t>(channels * bits / 8));
  put16(fmt, static_cast<std::uint16_t>(bits));
  if (extensible) {
    put16(fmt, 22);
    put16(fmt, static_cast<std::uint16_t>(bits));
    put32(fmt, 0);
    put16(fmt, format);
    fmt.append("\x00\x00\x00\x00\x10\x00\x80\x00\x00\xAA\x00\x38\x9B\x71", 14);
  }
  std::string out = "RIFF";
  put32(out, static_cast<std::uint32_t>(4 + 8 + fmt.size() + 8 + payload.size()));
  out += "WAVEfmt ";
  put32(out, static_cast<std::uint32_t>(fmt.size()));
  out += fmt;
  out += "data";
  put32(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;
  return out;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Magnitude of the DTFT at `hz` (Goertzel), as an oracle independent of the FFT.
double goertzel(const std::vector<float>& x, double hz, int rate) {
  const double w = kTwoPi * hz / rate;
  const double c = 2.0 * std::cos(w);
  double s1 = 0.0, s2 = 0.0;
  for (float v : x) {
    const double s0 = v + c * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return std::sqrt(s1 * s1 + s2 * s2 - c * s1 * s2);
}

AudioBuffer seconds_of(double s) {
  AudioBuffer b;
  b.samples.assign(static_cast<std::size_t>(s * kSampleRate), 0.25f);
  return b;
}

}  // namespace

TEST_CASE("decode_resample: 48 kHz stereo 60 s gives 960000 mono samples") {
  const int rate = 48000;
  std::vector<float> stereo(static_cast<std::size_t>(60 * rate) * 2);
  for (std::size_t i = 0; i < stereo.size() / 2; ++i) {
    stereo[2 * i] = static_cast<float>(0.3 * std::sin(kTwoPi * 440.0 * i / rate));
    stereo[2 * i + 1] = static_cast<float>(0.1 * std::sin(kTwoPi * 440.0 * i / rate));
  }
  const auto path = tmp_dir() / "stereo48.wav";
  write_wav(path, stereo, rate, 2);
  const auto buf = decode_resample(path);
  CHECK(buf.sample_rate == kSampleRate);
  CHECK(buf.samples.size() == 960000);
  // Channel average of 0.3 and 0.1 amplitudes: 0.2 peak.
  float peak = 0.0f;
  for (std::size_t i = 1000; i < buf.samples.size() - 1000; ++i) peak = std::max(peak, std::abs(buf.samples[i]));
  CHECK(peak == doctest::Approx(0.2).epsilon(0.01));
}

TEST_CASE("decode_resample: mono 16 kHz passes through bit-for-bit") {
  std::vector<float> x(16000 * 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(std::sin(0.001 * i * i) * 0.7);
  const auto path = tmp_dir() / "mono16.wav";
  write_wav(path, x, kSampleRate, 1, true);
  const auto buf = decode_resample(path);
  REQUIRE(buf.samples.size() == x.size());
  CHECK(std::memcmp(buf.samples.data(), x.data(), x.size() * sizeof(float)) == 0);
}

TEST_CASE("resample: 1 kHz sine at 44.1 kHz peaks at 1 kHz +- 1 Hz") {
  const int rate = 44100;
  std::vector<float> x(static_cast<std::size_t>(5 * rate));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(0.5 * std::sin(kTwoPi * 1000.0 * i / rate));
  auto y = resample(x, rate, kSampleRate);
  CHECK(y.size() == (x.size() - 1) * 160 / 441 + 1);
  // Hann-windowed Goertzel scan 990-1010 Hz in 0.05 Hz steps.
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] *= static_cast<float>(0.5 - 0.5 * std::cos(kTwoPi * i / (y.size() - 1)));
  }
  double best_hz = 0.0, best = -1.0;
  for (double hz = 990.0; hz <= 1010.0; hz += 0.05) {
    const double m = goertzel(y, hz, kSampleRate);
    if (m > best) {
      best = m;
      best_hz = hz;
    }
  }
  CHECK(std::abs(best_hz - 1000.0) <= 1.0);
}

TEST_CASE("resample: anti-aliasing attenuates content above the new Nyquist") {
  const int rate = 48000;
  std::vector<float> x(static_cast<std::size_t>(2 * rate));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(0.5 * std::sin(kTwoPi * 11000.0 * i / rate));
  const auto y = resample(x, rate, kSampleRate);
  double rms = 0.0;
  for (std::size_t i = 500; i + 500 < y.size(); ++i) rms += y[i] * y[i];
  rms = std::sqrt(rms / static_cast<double>(y.size() - 1000));
  // 11 kHz would alias to 5 kHz; the filter must suppress it by > 60 dB.
  CHECK(20.0 * std::log10(rms / (0.5 / std::sqrt(2.0))) < -60.0);
}

TEST_CASE("resample: passband tone keeps its amplitude; length formula") {
  const int rate = 22050;
  std::vector<float> x(static_cast<std::size_t>(rate));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(0.5 * std::sin(kTwoPi * 300.0 * i / rate));
  const auto y = resample(x, rate, kSampleRate);
  CHECK(y.size() == (x.size() - 1) * 320 / 441 + 1);
  float peak = 0.0f;
  for (std::size_t i = 800; i + 800 < y.size(); ++i) peak = std::max(peak, std::abs(y[i]));
  CHECK(peak == doctest::Approx(0.5).epsilon(0.005));
  // Identity rate.
  CHECK(resample(x, rate, rate) == x);
}

TEST_CASE("read_wav: 16/24/32-bit integer, float and extensible headers") {
  const auto dir = tmp_dir();
  // Samples: 0.5, -0.25 at each depth.
  std::string p16;
  put16(p16, static_cast<std::uint16_t>(16384));
  put16(p16, static_cast<std::uint16_t>(-8192));
  write_bytes(dir / "i16.wav", wav_bytes(8000, 1, 16, 1, p16));
  std::string p24 = std::string("\x00\x00\x40", 3) + std::string("\x00\x00\xE0", 3);
  write_bytes(dir / "i24.wav", wav_bytes(8000, 1, 24, 1, p24, true));
  std::string p32;
  put32(p32, 0x40000000u);
  put32(p32, static_cast<std::uint32_t>(-0x20000000));
  write_bytes(dir / "i32.wav", wav_bytes(8000, 1, 32, 1, p32));
  std::string pf;
  const float fv[2] = {0.5f, -0.25f};
  pf.append(reinterpret_cast<const char*>(fv), 8);
  write_bytes(dir / "f32.wav", wav_bytes(8000, 1, 32, 3, pf));
  for (const char* name : {"i16.wav", "i24.wav", "i32.wav", "f32.wav"}) {
    CAPTURE(name);
    const auto w = read_wav(dir / name);
    CHECK(w.sample_rate == 8000);
    CHECK(w.channels == 1);
    REQUIRE(w.interleaved.size() == 2);
    CHECK(w.interleaved[0] == doctest::Approx(0.5));
    CHECK(w.interleaved[1] == doctest::Approx(-0.25));
  }
}

TEST_CASE("read_wav errors") {
  const auto dir = tmp_dir();
  CHECK_THROWS_AS(read_wav(dir / "does-not-exist.wav"), IoError);
  write_bytes(dir / "junk.wav", "not a wav file at all");
  CHECK_THROWS_AS(read_wav(dir / "junk.wav"), IoError);
  auto bytes = wav_bytes(8000, 1, 16, 1, std::string(4000, '\x01'));
  bytes.resize(bytes.size() - 1001);  // odd-length, truncated data chunk
  write_bytes(dir / "trunc.wav", bytes);
  CHECK_THROWS_AS(read_wav(dir / "trunc.wav"), IoError);
  write_bytes(dir / "empty.wav", wav_bytes(8000, 1, 16, 1, ""));
  CHECK_THROWS(decode_resample(dir / "empty.wav"));
  std::string nan_payload;
  const float nan = std::nanf("");
  nan_payload.append(reinterpret_cast<const char*>(&nan), 4);
  write_bytes(dir / "nan.wav", wav_bytes(8000, 1, 32, 3, nan_payload));
  CHECK_THROWS(read_wav(dir / "nan.wav"));
}

TEST_CASE("write_wav 16-bit round trip within quantization") {
  std::vector<float> x = {0.0f, 0.5f, -0.5f, 0.999f, -1.0f, 0.123f};
  const auto path = tmp_dir() / "rt16.wav";
  write_wav(path, x, kSampleRate);
  const auto w = read_wav(path);
  REQUIRE(w.interleaved.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(w.interleaved[i] - x[i]) <= 1.0 / 32768.0);
}

TEST_CASE("chunk_episode snippet counts and padding") {
  auto s75 = chunk_episode(seconds_of(75), "e");
  REQUIRE(s75.size() == 3);
  CHECK(s75[2].padded_tail == 15 * 16000);
  CHECK(s75[0].padded_tail == 0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s75[i].index == i);
    CHECK(s75[i].samples.size() == kSnippetSamples);
    CHECK(s75[i].episode_id == "e");
  }
  CHECK(s75[2].samples[kSnippetSamples - 1] == 0.0f);
  CHECK(s75[2].samples[15 * 16000 - 1] == 0.25f);

  auto s90 = chunk_episode(seconds_of(90));
  REQUIRE(s90.size() == 3);
  for (const auto& s : s90) CHECK(s.padded_tail == 0);

  CHECK(chunk_episode(seconds_of(63)).size() == 2);
  CHECK(chunk_episode(seconds_of(4)).empty());
  CHECK(chunk_episode(seconds_of(5)).size() == 1);
}

TEST_CASE("chunk_episode coverage property") {
  for (double secs : {5.0, 29.9, 30.0, 34.9, 35.0, 61.0, 125.5}) {
    const auto buf = seconds_of(secs);
    const auto snippets = chunk_episode(buf);
    std::size_t covered = 0;
    for (const auto& s : snippets) covered += kSnippetSamples - s.padded_tail;
    CAPTURE(secs);
    CHECK(covered <= buf.samples.size());
    const std::size_t rem = buf.samples.size() % kSnippetSamples;
    if (rem == 0 || rem >= static_cast<std::size_t>(kMinTailSeconds * kSampleRate)) {
      CHECK(covered == buf.samples.size());
    }
  }
}

TEST_CASE("training_window centering") {
  auto make = [](std::size_t n) {
    std::vector<Snippet> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i].index = i;
    return v;
  };
  const auto w30 = training_window(make(30));
  REQUIRE(w30.size() == 25);
  CHECK(w30.front().index == 2);
  CHECK(w30.back().index == 26);
  CHECK(training_window(make(25)).size() == 25);
  const auto w10 = training_window(make(10));
  REQUIRE(w10.size() == 10);
  CHECK(w10.front().index == 0);
  for (std::size_t n = 0; n < 80; ++n) {
    const auto [a, b] = training_window_range(n);
    CHECK(b - a == std::min<std::size_t>(n, 25));
    CHECK(b <= n);
    const auto w = training_window(make(n));
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i].index == w[i - 1].index + 1);
  }
}

TEST_CASE("snippet cache round trip") {
  Snippet s;
  s.episode_id = "ep-7";
  s.index = 3;
  s.samples.assign(kSnippetSamples, 0.0f);
  for (std::size_t i = 0; i < 100; ++i) s.samples[i] = static_cast<float>(i) * 0.01f;
  const auto dir = tmp_dir() / "cache";
  write_snippet_cache(dir, s);
  CHECK(snippet_cache_path(dir, s).filename() == "ep-7.3.pcm");
  CHECK(fs::file_size(snippet_cache_path(dir, s)) == kSnippetSamples * 4);
  const auto back = read_snippet_cache(dir, "ep-7", 3);
  CHECK(back.samples == s.samples);
  CHECK_THROWS(read_snippet_cache(dir, "ep-7", 4));
}
