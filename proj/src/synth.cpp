#include "ssc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "file_util.hpp"
#include "ssc/error.hpp"
#include "ssc/rng.hpp"
#include "ssc/version.hpp"
#include "text_util.hpp"

namespace ssc {

StyleProfile StyleProfile::scripted() {
  StyleProfile p;
  p.name = "scripted";
  p.silence_min = 0.06;
  p.silence_max = 0.14;
  p.pause_cv = 0.15;
  p.span_mean = 5.0;
  p.span_cv = 0.2;
  p.span_min = 2.0;
  p.span_max = 9.0;
  p.f0_low = 95.0;
  p.f0_high = 210.0;
  p.f0_walk = 0.8;
  p.f0_pull = 1.5;
  p.f0_jump = 0.5;
  p.syllable_rate = 4.2;
  p.syllable_jitter = 0.08;
  p.syllable_depth = 0.75;
  p.syllable_level_sd = 1.0;
  p.speakers = 1;
  p.overlap_prob = 0.0;
  return p;
}

StyleProfile StyleProfile::spontaneous() {
  StyleProfile p;
  p.name = "spontaneous";
  p.silence_min = 0.27;
  p.silence_max = 0.43;
  p.pause_cv = 0.9;
  p.span_mean = 2.6;
  p.span_cv = 0.7;
  p.span_min = 0.6;
  p.span_max = 9.0;
  p.f0_low = 95.0;
  p.f0_high = 230.0;
  p.f0_walk = 3.0;
  p.f0_pull = 1.0;
  p.f0_jump = 2.5;
  p.syllable_rate = 5.2;
  p.syllable_jitter = 0.35;
  p.syllable_depth = 0.85;
  p.syllable_level_sd = 4.0;
  p.speakers = 2;
  p.overlap_prob = 0.2;
  return p;
}

StyleProfile StyleProfile::blend(const StyleProfile& a, const StyleProfile& b, double t) {
  auto mix = [t](double x, double y) { return x + (y - x) * t; };
  StyleProfile p;
  p.name = a.name + "~" + b.name;
  p.silence_min = mix(a.silence_min, b.silence_min);
  p.silence_max = mix(a.silence_max, b.silence_max);
  p.pause_cv = mix(a.pause_cv, b.pause_cv);
  p.span_mean = mix(a.span_mean, b.span_mean);
  p.span_cv = mix(a.span_cv, b.span_cv);
  p.span_min = mix(a.span_min, b.span_min);
  p.span_max = mix(a.span_max, b.span_max);
  p.f0_low = mix(a.f0_low, b.f0_low);
  p.f0_high = mix(a.f0_high, b.f0_high);
  p.f0_walk = mix(a.f0_walk, b.f0_walk);
  p.f0_pull = mix(a.f0_pull, b.f0_pull);
  p.f0_jump = mix(a.f0_jump, b.f0_jump);
  p.syllable_rate = mix(a.syllable_rate, b.syllable_rate);
  p.syllable_jitter = mix(a.syllable_jitter, b.syllable_jitter);
  p.syllable_depth = mix(a.syllable_depth, b.syllable_depth);
  p.syllable_level_sd = mix(a.syllable_level_sd, b.syllable_level_sd);
  p.speakers = t < 0.5 ? a.speakers : b.speakers;
  p.overlap_prob = mix(a.overlap_prob, b.overlap_prob);
  p.overlap_min = mix(a.overlap_min, b.overlap_min);
  p.overlap_max = mix(a.overlap_max, b.overlap_max);
  return p;
}

namespace {

constexpr double kVoiceLevel = 0.25;
constexpr double kNoiseLevel = 1e-3;  // about -60 dBFS room tone
constexpr double kBreathLevel = 0.02;
constexpr double kMaxHarmonicHz = 3800.0;
constexpr double kEdgeFade = 0.02;   // seconds
constexpr double kMinPause = 0.25;   // seconds, above the VAD gap bridge
constexpr std::size_t kPitchStep = 160;

double lognormal(Rng& rng, double mean, double cv) {
  if (cv <= 0.0) return mean;
  const double s2 = std::log1p(cv * cv);
  return mean * std::exp(std::sqrt(s2) * rng.normal() - 0.5 * s2);
}

// Renders one voice into out[begin, end) (additive).
void render_voice(std::vector<float>& out, std::size_t begin, std::size_t end, double base_f0,
                  const StyleProfile& p, Rng& rng) {
  const double fs = kSampleRate;
  const std::size_t n = end - begin;
  if (n == 0) return;

  // Pitch contour: mean-reverting walk in semitones, one step per 10 ms.
  const std::size_t steps = n / kPitchStep + 2;
  std::vector<double> semis(steps);
  const double dt = kPitchStep / fs;
  double x = 0.0;
  for (auto& s : semis) {
    s = x;
    x += -p.f0_pull * x * dt + p.f0_walk * std::sqrt(dt) * rng.normal();
    x = std::clamp(x, -12.0, 12.0);
  }

  // Syllable envelope.
  std::vector<float> env(n);
  const double mean_syl = 1.0 / p.syllable_rate;
  std::size_t pos = 0;
  while (pos < n) {
    const double len_s = mean_syl * std::max(0.4, 1.0 + p.syllable_jitter * rng.normal());
    const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(len_s * fs));
    const double peak = std::pow(10.0, p.syllable_level_sd * rng.normal() / 20.0);
    const double trough = 1.0 - p.syllable_depth;
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double u = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
      env[pos + i] = static_cast<float>(peak * (trough + (1.0 - trough) * u * u));
    }
    pos += len;
  }
  const auto fade = std::min(n / 2, static_cast<std::size_t>(kEdgeFade * fs));
  for (std::size_t i = 0; i < fade; ++i) {
    const float g = static_cast<float>(i) / static_cast<float>(fade);
    env[i] *= g;
    env[n - 1 - i] *= g;
  }

  // Harmonic amplitudes ~ 1/h^1.2 and their running sums.
  const int max_h = static_cast<int>(kMaxHarmonicHz / 40.0) + 1;
  std::vector<double> amp(static_cast<std::size_t>(max_h) + 1, 0.0), amp_sum(amp.size(), 0.0);
  for (int h = 1; h <= max_h; ++h) {
    amp[static_cast<std::size_t>(h)] = std::pow(static_cast<double>(h), -1.2);
    amp_sum[static_cast<std::size_t>(h)] = amp_sum[static_cast<std::size_t>(h) - 1] + amp[static_cast<std::size_t>(h)];
  }

  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i / kPitchStep;
    const double frac = static_cast<double>(i % kPitchStep) / kPitchStep;
    const double st = semis[k] + (semis[k + 1] - semis[k]) * frac;
    const double f0 = base_f0 * std::exp2(st / 12.0);
    phase += 2.0 * std::numbers::pi * f0 / fs;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;

    // Harmonic sum via the sin(h phi) recurrence.
    const int harmonics = std::clamp(static_cast<int>(kMaxHarmonicHz / f0), 1, max_h);
    const double c2 = 2.0 * std::cos(phase);
    double s_prev = 0.0, s_cur = std::sin(phase), sum = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      sum += amp[static_cast<std::size_t>(h)] * s_cur;
      const double s_next = c2 * s_cur - s_prev;
      s_prev = s_cur;
      s_cur = s_next;
    }
    const double voiced = sum / amp_sum[static_cast<std::size_t>(harmonics)] * 2.0;
    const double breath = kBreathLevel * rng.normal();
    out[begin + i] += static_cast<float>(kVoiceLevel * env[i] * (voiced + breath));
  }
}

}  // namespace

SynthEpisode gen_episode(const StyleProfile& p, std::uint64_t seed, double duration) {
  if (!(duration >= kMinEpisodeSeconds)) {
    throw InvalidArgument("gen_episode: duration must be at least 60 s");
  }
  if (p.speakers < 1 || p.silence_min <= 0.0 || p.silence_max >= 1.0 || p.silence_min > p.silence_max) {
    throw InvalidArgument("gen_episode: invalid profile '" + p.name + "'");
  }
  Rng rng(seed);
  const double fs = kSampleRate;
  const auto total = static_cast<std::size_t>(std::llround(duration * fs));
  const double target = rng.uniform(p.silence_min, p.silence_max);
  const auto silence_budget = static_cast<std::size_t>(std::llround(target * static_cast<double>(total)));
  const std::size_t speech_budget = total - silence_budget;

  // Voiced span lengths filling the speech budget; a short remainder is merged.
  std::vector<std::size_t> spans;
  std::size_t used = 0;
  while (used < speech_budget) {
    const double s = std::clamp(lognormal(rng, p.span_mean, p.span_cv), p.span_min, p.span_max);
    auto len = std::min(static_cast<std::size_t>(s * fs), speech_budget - used);
    if (len < static_cast<std::size_t>(0.5 * fs) && !spans.empty()) {
      spans.back() += len;
    } else {
      spans.push_back(len);
    }
    used += len;
  }

  // Pauses before, between and after spans share the silence budget.
  const std::size_t slots = spans.size() + 1;
  std::vector<double> weights(slots);
  for (auto& w : weights) w = lognormal(rng, 1.0, p.pause_cv);
  const double min_pause =
      std::min(kMinPause * fs, 0.8 * static_cast<double>(silence_budget) / static_cast<double>(slots));
  const double spare = static_cast<double>(silence_budget) - min_pause * static_cast<double>(slots);
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  std::vector<std::size_t> pauses(slots);
  double acc = 0.0;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < slots; ++i) {
    acc += min_pause + spare * weights[i] / wsum;
    const auto upto = i + 1 == slots ? silence_budget : static_cast<std::size_t>(std::llround(acc));
    pauses[i] = upto - assigned;
    assigned = upto;
  }

  // Speakers: base f0 per voice, the second one in the upper part of the range.
  std::vector<double> voice_f0(static_cast<std::size_t>(p.speakers));
  for (std::size_t v = 0; v < voice_f0.size(); ++v) {
    const double lo = p.f0_low + (p.f0_high - p.f0_low) * static_cast<double>(v) / p.speakers;
    const double hi = p.f0_low + (p.f0_high - p.f0_low) * static_cast<double>(v + 1) / p.speakers;
    voice_f0[v] = rng.uniform(lo, hi);
  }

  SynthEpisode ep;
  ep.audio.sample_rate = kSampleRate;
  ep.audio.samples.assign(total, 0.0f);
  ep.truth.duration = static_cast<double>(total) / fs;
  ep.truth.silence_seconds = static_cast<double>(silence_budget) / fs;
  ep.truth.spans = spans.size();

  std::size_t cursor = pauses[0];
  std::size_t voice = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const std::size_t begin = cursor, end = cursor + spans[i];
    const double base = voice_f0[voice] * std::exp2(p.f0_jump * rng.normal() / 12.0);
    render_voice(ep.audio.samples, begin, end, base, p, rng);
    ep.truth.speech.emplace_back(static_cast<double>(begin) / fs, static_cast<double>(end) / fs);

    std::size_t next_voice = voice;
    if (p.speakers > 1 && rng.uniform() < 0.7) next_voice = (voice + 1 + rng.below(p.speakers - 1)) % p.speakers;
    // The next voice may cut in before this span ends.
    if (next_voice != voice && i + 1 < spans.size() && rng.uniform() < p.overlap_prob) {
      const double ov_s = rng.uniform(p.overlap_min, p.overlap_max);
      const auto ov = std::min(static_cast<std::size_t>(ov_s * fs), spans[i] / 2);
      render_voice(ep.audio.samples, end - ov, end, voice_f0[next_voice], p, rng);
      ep.truth.overlap_seconds += static_cast<double>(ov) / fs;
    }
    voice = next_voice;
    cursor = end + pauses[i + 1];
  }

  for (auto& s : ep.audio.samples) {
    s = std::clamp(static_cast<float>(s + kNoiseLevel * rng.normal()), -1.0f, 1.0f);
  }
  return ep;
}

// ---------------------------------------------------------------------------
// Corpus

std::pair<std::size_t, std::size_t> SynthConfig::class_counts() const {
  if (ratio_scripted > 0.0 && ratio_spontaneous > 0.0) {
    const auto total = scripted_episodes + spontaneous_episodes;
    const auto s = static_cast<std::size_t>(
        std::llround(static_cast<double>(total) * ratio_scripted / (ratio_scripted + ratio_spontaneous)));
    return {s, total - s};
  }
  return {scripted_episodes, spontaneous_episodes};
}

void SynthConfig::validate() const {
  const auto [s, p] = class_counts();
  if (s == 0 || p == 0) throw InvalidArgument("synth config: both classes need at least one episode");
  if (episode_seconds < kMinEpisodeSeconds) throw InvalidArgument("synth config: episode_seconds must be >= 60");
  if (atypical_fraction < 0.0 || atypical_fraction > 1.0) {
    throw InvalidArgument("synth config: atypical_fraction must be in [0, 1]");
  }
  if (ratio_scripted < 0.0 || ratio_spontaneous < 0.0) throw InvalidArgument("synth config: negative ratio");
  if ((ratio_scripted > 0.0) != (ratio_spontaneous > 0.0)) {
    throw InvalidArgument("synth config: set both ratio_scripted and ratio_spontaneous, or neither");
  }
  if (languages.empty() || categories.empty()) throw InvalidArgument("synth config: empty language/category list");
}

namespace {

struct ProfileField {
  const char* name;
  double StyleProfile::*member;
};

constexpr ProfileField kProfileFields[] = {
    {"silence_min", &StyleProfile::silence_min},
    {"silence_max", &StyleProfile::silence_max},
    {"pause_cv", &StyleProfile::pause_cv},
    {"span_mean", &StyleProfile::span_mean},
    {"span_cv", &StyleProfile::span_cv},
    {"span_min", &StyleProfile::span_min},
    {"span_max", &StyleProfile::span_max},
    {"f0_low", &StyleProfile::f0_low},
    {"f0_high", &StyleProfile::f0_high},
    {"f0_walk", &StyleProfile::f0_walk},
    {"f0_pull", &StyleProfile::f0_pull},
    {"f0_jump", &StyleProfile::f0_jump},
    {"syllable_rate", &StyleProfile::syllable_rate},
    {"syllable_jitter", &StyleProfile::syllable_jitter},
    {"syllable_depth", &StyleProfile::syllable_depth},
    {"syllable_level_sd", &StyleProfile::syllable_level_sd},
    {"overlap_prob", &StyleProfile::overlap_prob},
    {"overlap_min", &StyleProfile::overlap_min},
    {"overlap_max", &StyleProfile::overlap_max},
};

double to_double(const std::string& key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("synth config: '" + key + "' expects a number, got '" + std::string(v) + "'");
  }
}

std::uint64_t to_u64(const std::string& key, std::string_view v) {
  try {
    std::size_t used = 0;
    const auto u = std::stoull(std::string(v), &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument("trailing");
    return u;
  } catch (const std::exception&) {
    throw InvalidArgument("synth config: '" + key + "' expects an unsigned integer, got '" + std::string(v) + "'");
  }
}

std::vector<std::string> to_list(std::string_view v) {
  std::vector<std::string> out;
  for (auto& item : detail::split(v, ',')) {
    auto t = std::string(detail::trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += (out.empty() ? "" : ",") + i;
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

SynthConfig SynthConfig::parse(std::string_view text) {
  SynthConfig c;
  std::size_t line_no = 0;
  for (const auto& raw : detail::lines(text)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("synth config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key == "seed") c.seed = to_u64(key, value);
    else if (key == "scripted_episodes") c.scripted_episodes = static_cast<std::size_t>(to_double(key, value));
    else if (key == "spontaneous_episodes") c.spontaneous_episodes = static_cast<std::size_t>(to_double(key, value));
    else if (key == "episode_seconds") c.episode_seconds = to_double(key, value);
    else if (key == "ratio_scripted") c.ratio_scripted = to_double(key, value);
    else if (key == "ratio_spontaneous") c.ratio_spontaneous = to_double(key, value);
    else if (key == "atypical_fraction") c.atypical_fraction = to_double(key, value);
    else if (key == "atypical_blend") c.atypical_blend = to_double(key, value);
    else if (key == "languages") c.languages = to_list(value);
    else if (key == "categories") c.categories = to_list(value);
    else {
      const auto dot = key.find('.');
      StyleProfile* prof = nullptr;
      if (dot != std::string::npos) {
        const auto which = key.substr(0, dot);
        if (which == "scripted") prof = &c.scripted;
        else if (which == "spontaneous") prof = &c.spontaneous;
      }
      bool found = false;
      if (prof) {
        const auto field = key.substr(dot + 1);
        if (field == "speakers") {
          prof->speakers = static_cast<int>(to_double(key, value));
          found = true;
        }
        for (const auto& f : kProfileFields) {
          if (field == f.name) {
            prof->*f.member = to_double(key, value);
            found = true;
          }
        }
      }
      if (!found) throw InvalidArgument("synth config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

SynthConfig SynthConfig::load(const std::filesystem::path& path) { return parse(detail::read_text(path)); }

std::string SynthConfig::to_text() const {
  std::ostringstream out;
  out << "seed = " << seed << '\n'
      << "scripted_episodes = " << scripted_episodes << '\n'
      << "spontaneous_episodes = " << spontaneous_episodes << '\n'
      << "episode_seconds = " << num(episode_seconds) << '\n'
      << "ratio_scripted = " << num(ratio_scripted) << '\n'
      << "ratio_spontaneous = " << num(ratio_spontaneous) << '\n'
      << "atypical_fraction = " << num(atypical_fraction) << '\n'
      << "atypical_blend = " << num(atypical_blend) << '\n'
      << "languages = " << join(languages) << '\n'
      << "categories = " << join(categories) << '\n';
  for (const auto* prof : {&scripted, &spontaneous}) {
    const std::string prefix = prof == &scripted ? "scripted." : "spontaneous.";
    out << prefix << "speakers = " << prof->speakers << '\n';
    for (const auto& f : kProfileFields) out << prefix << f.name << " = " << num(prof->*f.member) << '\n';
  }
  return out.str();
}

SynthCorpus gen_corpus(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "audio", ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  const auto [n_scripted, n_spontaneous] = config.class_counts();
  SynthCorpus corpus;
  std::ostringstream truth;
  truth << "episode_id\tsilence_fraction\toverlap_seconds\tspans\tatypical\n";

  for (int cls = 0; cls < 2; ++cls) {
    const bool scripted = cls == 0;
    const std::size_t count = scripted ? n_scripted : n_spontaneous;
    const auto& own = scripted ? config.scripted : config.spontaneous;
    const auto& other = scripted ? config.spontaneous : config.scripted;

    // Atypical episodes: a seeded choice of round(fraction * count) indices.
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    Rng pick(mix_seed(config.seed, 0xA7, static_cast<std::uint64_t>(cls)));
    pick.shuffle(std::span<std::size_t>(order));
    const auto n_atypical = static_cast<std::size_t>(std::llround(config.atypical_fraction * static_cast<double>(count)));
    std::vector<bool> atypical(count, false);
    for (std::size_t i = 0; i < n_atypical; ++i) atypical[order[i]] = true;

    for (std::size_t i = 0; i < count; ++i) {
      EpisodeRecord rec;
      char id[32];
      std::snprintf(id, sizeof id, "syn-%s-%03zu", scripted ? "scr" : "spo", i);
      rec.episode_id = id;
      rec.label = scripted ? Label::kScripted : Label::kSpontaneous;
      rec.format = scripted ? "Scripted narrative" : "Discussion";
      rec.language = config.languages[i % config.languages.size()];
      rec.category = config.categories[(i / config.languages.size()) % config.categories.size()];
      rec.audio_path = (out_dir / "audio" / (rec.episode_id + ".wav")).string();

      const auto profile = atypical[i] ? StyleProfile::blend(own, other, config.atypical_blend) : own;
      const auto ep = gen_episode(profile, mix_seed(config.seed, static_cast<std::uint64_t>(cls) + 1, i),
                                  config.episode_seconds);
      write_wav(rec.audio_path, ep.audio.samples, ep.audio.sample_rate);
      truth << rec.episode_id << '\t' << num(ep.truth.silence_fraction()) << '\t' << num(ep.truth.overlap_seconds)
            << '\t' << ep.truth.spans << '\t' << (atypical[i] ? 1 : 0) << '\n';
      corpus.records.push_back(std::move(rec));
      corpus.truths.push_back(ep.truth);
    }
  }

  // Manifest paths are written relative to the manifest directory.
  auto relative = corpus.records;
  for (auto& r : relative) r.audio_path = (std::filesystem::path("audio") / std::filesystem::path(r.audio_path).filename()).string();
  corpus.manifest_path = out_dir / "manifest.tsv";
  write_manifest(corpus.manifest_path, relative);
  detail::write_text(out_dir / "truth.tsv", truth.str());
  detail::write_text(out_dir / "synth.conf",
                     "# generated by ssc " + std::string(kToolVersion) + "\n" + config.to_text());
  return corpus;
}

}  // namespace ssc
