// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance <work-dir> [criterion ...]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ssc/audio.hpp"
#include "ssc/corpus.hpp"
#include "ssc/embeddings.hpp"
#include "ssc/eval.hpp"
#include "ssc/handcrafted.hpp"
#include "ssc/model.hpp"
#include "ssc/pipeline.hpp"
#include "ssc/rng.hpp"
#include "ssc/synth.hpp"

using namespace ssc;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.283185307179586;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int worker_count() { return static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 16u)); }

RunConfig run_config(const fs::path& dir, const fs::path& manifest) {
  RunConfig c;
  c.manifest = manifest;
  c.features = dir / "features";
  c.out = dir / "run";
  c.seed = 7;
  c.jobs = worker_count();
  c.quiet = true;
  return c;
}

struct PipelineRun {
  MetricsReport report;
  TrainSummary train;
  double seconds = 0.0;
};

PipelineRun synth_to_report(const SynthConfig& synth, const fs::path& dir) {
  const auto t0 = Clock::now();
  fs::remove_all(dir);
  const auto corpus = gen_corpus(synth, dir / "corpus");
  auto cfg = run_config(dir, corpus.manifest_path);
  std::ostringstream log;
  const auto ex = cmd_extract(cfg, log);
  if (ex.exit_code != kExitOk) throw Error("extraction failed: " + log.str());
  PipelineRun r;
  r.train = cmd_train(cfg, log);
  r.report = cmd_evaluate(cfg, log);
  r.seconds = seconds_since(t0);
  return r;
}

// 1 ------------------------------------------------------------------------
Outcome end_to_end(const fs::path& work) {
  SynthConfig s;  // 40 + 40 episodes of 3 minutes
  const auto r = synth_to_report(s, work / "c1");
  const auto& rep = r.report;
  const bool pass = rep.auc.count == 5 && rep.auc.mean >= 0.95 && r.seconds < 600.0;
  return {pass, fmt("AUC %.3f +/- %.3f over %zu folds (need >= 0.95), F1 scripted %.3f, spontaneous %.3f, %.0f s (limit 600)",
                    rep.auc.mean, rep.auc.stddev, rep.auc.count, rep.f1_scripted.mean, rep.f1_spontaneous.mean,
                    r.seconds)};
}

// 2 ------------------------------------------------------------------------
Outcome imbalance(const fs::path& work) {
  SynthConfig s;
  s.ratio_scripted = 700;
  s.ratio_spontaneous = 1230;
  const auto [n_scr, n_spo] = s.class_counts();
  const auto r = synth_to_report(s, work / "c2");

  double worst = 0.0;
  bool init_ok = true;
  for (const auto& path : r.train.checkpoints) {
    const auto ck = load_checkpoint(path);
    const auto counts = ck.config.class_counts;
    const double prevalence =
        static_cast<double>(counts.scripted) / static_cast<double>(counts.scripted + counts.spontaneous);
    const double b = prior_bias(counts);
    worst = std::max(worst, std::abs(1.0 / (1.0 + std::exp(-b)) - prevalence));
    const auto init = init_params(ck.params.arch, ck.config.seed, counts);
    init_ok = init_ok && init.output_bias() == static_cast<float>(b);
  }
  const auto& rep = r.report;
  const bool pass = worst <= 1e-12 && init_ok && rep.f1_spontaneous.mean > rep.f1_scripted.mean;
  return {pass, fmt("%zu:%zu episodes; max |sigmoid(b) - prevalence| = %.1e; F1 spontaneous %.3f vs scripted %.3f; AUC %.3f",
                    n_scr, n_spo, worst, rep.f1_spontaneous.mean, rep.f1_scripted.mean, rep.auc.mean)};
}

// 3 ------------------------------------------------------------------------
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Independent loss: mean BCE from the output logit, stable when the score
// saturates (log(1 - s) would lose most digits there).
double batch_loss(const HeadParams<double>& p, const std::vector<InputView>& xs, const std::vector<int>& ys,
                  const std::vector<std::vector<std::uint8_t>>& masks, std::vector<bool>* pattern) {
  double sum = 0.0;
  if (pattern) pattern->clear();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto c = forward(p, xs[i], &masks[i], 0.2);
    if (pattern) {
      for (double z : c.z1) pattern->push_back(z > 0);
    }
    sum += ys[i] ? softplus(-c.z2) : softplus(c.z2);
  }
  return sum / static_cast<double>(xs.size());
}

double gradient_error(const HeadArchitecture& arch, std::uint64_t seed, std::size_t rows) {
  Rng rng(seed);
  HeadParams<double> p(arch);
  for (auto& v : p.flat) v = 0.4 * rng.normal();
  std::vector<std::vector<float>> data;
  std::vector<InputView> xs;
  std::vector<int> ys;
  std::vector<std::vector<std::uint8_t>> masks;
  for (int i = 0; i < 3; ++i) {
    std::vector<float> x(rows * arch.input_dim);
    for (auto& v : x) v = static_cast<float>(rng.normal());
    data.push_back(std::move(x));
    ys.push_back(i % 2);
    masks.push_back(draw_dropout_mask(arch.hidden, 0.2, rng));
  }
  for (const auto& x : data) xs.push_back({x, rows, arch.input_dim});

  std::vector<double> grad(p.flat.size(), 0.0);
  loss_and_gradient<double>(p, xs, ys, masks, 0.2, &grad);
  const double h = 1e-4;
  double worst = 0.0;
  std::vector<bool> pat_plus, pat_minus;
  for (std::size_t i = 0; i < p.flat.size(); ++i) {
    const double keep = p.flat[i];
    p.flat[i] = keep + h;
    const double lp = batch_loss(p, xs, ys, masks, &pat_plus);
    p.flat[i] = keep - h;
    const double lm = batch_loss(p, xs, ys, masks, &pat_minus);
    p.flat[i] = keep;
    if (pat_plus != pat_minus) continue;  // the difference straddles a ReLU kink
    const double numeric = (lp - lm) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
  }
  return worst;
}

Outcome gradients(const fs::path&) {
  const auto t0 = Clock::now();
  double worst_vec = 0.0, worst_mat = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    worst_vec = std::max(worst_vec, gradient_error(HeadArchitecture::vector_head(24), seed, 1));
    worst_mat = std::max(worst_mat, gradient_error(HeadArchitecture::matrix_head(6), 1000 + seed, 3));
  }
  const double secs = seconds_since(t0);
  return {worst_vec < 1e-4 && worst_mat < 1e-4 && secs < 30.0,
          fmt("max relative error vector head %.2e, matrix head %.2e (limit 1e-4); %.1f s (limit 30)", worst_vec,
              worst_mat, secs)};
}

// 4 ------------------------------------------------------------------------
Outcome auc_oracle(const fs::path&) {
  Rng rng(404);
  double worst = 0.0;
  std::size_t with_ties = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      s[i] = t % 2 ? static_cast<double>(rng.below(4)) / 3.0 : rng.uniform();
    }
    y[rng.below(n)] = 1;
    std::size_t zero = rng.below(n);
    while (y[zero] == 1 && std::count(y.begin(), y.end(), 0) == 0) {
      y[zero] = 0;
      zero = rng.below(n);
    }
    if (std::count(y.begin(), y.end(), 0) == 0 || std::count(y.begin(), y.end(), 1) == 0) continue;
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (y[i] != 1 || y[j] != 0) continue;
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
    }
    std::set<double> distinct(s.begin(), s.end());
    with_ties += distinct.size() < n;
    worst = std::max(worst, std::abs(roc_auc(y, s) - wins / pairs));
  }
  return {worst <= 1e-12 && with_ties > 0, fmt("200 cases (%zu with ties), max |rank - pairwise| = %.1e (limit 1e-12)",
                                                 with_ties, worst)};
}

// 5 ------------------------------------------------------------------------
Outcome summarizers(const fs::path&) {
  Rng rng(505);
  std::size_t mismatches = 0, bad_sums = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 1 + rng.below(60), cols = 5 + rng.below(60);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(cols, 8));
    FeatureMatrix m(rows, cols);
    for (auto& v : m.data) v = t % 3 == 0 ? static_cast<float>(rng.below(3)) : static_cast<float>(rng.uniform());
    const auto counts = class_score_top_k_counts(m, k).values;
    std::vector<float> oracle(cols, 0.0f);
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<std::size_t> idx(cols);
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return m.at(r, a) > m.at(r, b); });
      for (std::size_t i = 0; i < k; ++i) oracle[idx[i]] += 1.0f;
    }
    mismatches += counts != oracle;
    bad_sums += std::accumulate(counts.begin(), counts.end(), 0.0) != static_cast<double>(k * rows);
  }
  FeatureMatrix yam(10, kYamnetClasses);
  for (auto& v : yam.data) v = static_cast<float>(rng.uniform());
  const auto dim = class_score_summary(yam).values.size();
  return {mismatches == 0 && bad_sums == 0 && dim == 1042,
          fmt("top-k oracle mismatches %zu/100, bad sums %zu, summary dim %zu for C=521", mismatches, bad_sums, dim)};
}

// 6 ------------------------------------------------------------------------
Outcome dsp(const fs::path&) {
  double worst_f0 = 0.0;
  for (double hz = 100.0; hz <= 400.0; hz += 5.0) {
    std::vector<float> frame(960);
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = static_cast<float>(0.5 * std::sin(kTwoPi * hz * i / kSampleRate));
    worst_f0 = std::max(worst_f0, std::abs(estimate_f0(frame, kSampleRate).f0 - hz) / hz);
  }
  for (double hz : {100.0, 220.0, 400.0}) {
    std::vector<float> x(kSnippetSamples);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(0.3 * std::sin(kTwoPi * hz * i / kSampleRate));
    const auto s = extract_llds(std::span<const float>(x));
    std::vector<double> voiced;
    for (double f : s.f0) {
      if (f > 0) voiced.push_back(f);
    }
    const double med = voiced.empty() ? 0.0 : aggregate(voiced);
    worst_f0 = std::max(worst_f0, std::abs(med - hz) / hz);
  }

  Rng rng(606);
  double worst_vad = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<float> x(kSnippetSamples);
    for (auto& v : x) v = static_cast<float>(1e-3 * rng.normal());
    std::size_t pos = static_cast<std::size_t>(rng.uniform(0.2, 1.5) * kSampleRate), speech = 0;
    while (pos < kSnippetSamples) {
      const auto len =
          std::min(kSnippetSamples - pos, static_cast<std::size_t>(rng.uniform(0.5, 4.0) * kSampleRate));
      const double f = rng.uniform(100.0, 280.0), a = rng.uniform(0.1, 0.4);
      for (std::size_t i = 0; i < len; ++i) x[pos + i] += static_cast<float>(a * std::sin(kTwoPi * f * i / kSampleRate));
      speech += len;
      pos += len + static_cast<std::size_t>(rng.uniform(0.3, 2.5) * kSampleRate);
    }
    const auto segs = detect_speech_segments(Snippet{"v", 0, x, 0});
    double detected = 0.0;
    for (const auto& sg : segs.of(SegmentKind::kSpeech)) detected += sg.end - sg.start;
    worst_vad = std::max(worst_vad, std::abs(detected / kSnippetSeconds - static_cast<double>(speech) / kSnippetSamples));
  }

  std::vector<std::vector<float>> inputs;
  inputs.emplace_back(kSnippetSamples, 0.0f);
  std::vector<float> noise(kSnippetSamples), full_noise(kSnippetSamples), square(kSnippetSamples);
  for (auto& v : noise) v = static_cast<float>(0.1 * rng.normal());
  for (auto& v : full_noise) v = rng.uniform() < 0.5 ? -1.0f : 1.0f;
  for (std::size_t i = 0; i < square.size(); ++i) square[i] = (i / 40) % 2 ? 1.0f : -1.0f;
  inputs.push_back(noise);
  inputs.push_back(full_noise);
  inputs.push_back(square);
  std::size_t non_finite = 0, dims_ok = 0;
  for (const auto& x : inputs) {
    const auto v = extract_handcrafted(std::span<const float>(x));
    dims_ok += v.values.size() == kHandcraftedDims;
    for (float f : v.values) non_finite += !std::isfinite(f);
  }
  return {worst_f0 <= 0.02 && worst_vad <= 0.05 && non_finite == 0 && dims_ok == inputs.size(),
          fmt("f0 max relative error %.4f (limit 0.02); VAD max speech-fraction error %.3f (limit 0.05); "
              "%zu non-finite values over 4 x 115 features",
              worst_f0, worst_vad, non_finite)};
}

// 7 ------------------------------------------------------------------------
Outcome determinism(const fs::path& work) {
  SynthConfig s;
  s.seed = 77;
  s.scripted_episodes = 5;
  s.spontaneous_episodes = 5;
  s.episode_seconds = 90;
  std::map<std::string, std::string> files[2];
  for (int i = 0; i < 2; ++i) {
    const auto dir = work / ("c7-" + std::to_string(i));
    synth_to_report(s, dir);
    RunConfig mean_cfg = run_config(dir, dir / "corpus" / "manifest.tsv");
    mean_cfg.aggregation = Aggregation::kMean;
    std::ostringstream log;
    cmd_evaluate(mean_cfg, log);
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (!e.is_regular_file() || e.path().filename() == "extract.log") continue;
      files[i][fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
  }
  std::size_t differing = 0, ssf = 0, ckpt = 0, reports = 0;
  for (const auto& [name, bytes] : files[0]) {
    auto it = files[1].find(name);
    differing += it == files[1].end() || it->second != bytes;
    ssf += name.ends_with(".ssf");
    ckpt += name.ends_with(".ssck");
    reports += name.find("report.") != std::string::npos;
  }
  const bool pass = differing == 0 && files[0].size() == files[1].size() && ssf > 0 && ckpt == 5 && reports == 4;
  return {pass, fmt("%zu artifacts compared (%zu feature files, %zu checkpoints, %zu reports), %zu differ",
                    files[0].size(), ssf, ckpt, reports, differing)};
}

// 8 ------------------------------------------------------------------------
Outcome folds(const fs::path&) {
  Rng rng(808);
  std::size_t violations = 0, coverage_errors = 0;
  for (int t = 0; t < 1000; ++t) {
    const int k = 2 + static_cast<int>(rng.below(9));
    const std::size_t n = static_cast<std::size_t>(k) + rng.below(150);
    const std::size_t n_cat = 1 + rng.below(4), n_fmt = 1 + rng.below(4), n_lang = 1 + rng.below(5);
    std::vector<EpisodeRecord> recs(n);
    for (std::size_t i = 0; i < n; ++i) {
      recs[i].episode_id = "e" + std::to_string(i);
      recs[i].category = "c" + std::to_string(rng.below(n_cat));
      recs[i].format = "f" + std::to_string(rng.below(n_fmt));
      recs[i].language = "l" + std::to_string(rng.below(n_lang));
      recs[i].label = rng.below(2) ? Label::kScripted : Label::kSpontaneous;
    }
    const auto f = stratified_kfold(recs, k, rng.next());
    coverage_errors += f.assignment.size() != n;
    std::map<std::string, std::vector<int>> per;
    for (const auto& r : recs) {
      auto& v = per[stratum_key(r)];
      v.resize(static_cast<std::size_t>(k), 0);
      const int fold = f.fold_of(r.episode_id);
      coverage_errors += fold < 0 || fold >= k;
      ++v[static_cast<std::size_t>(fold)];
    }
    for (const auto& [key, counts] : per) {
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      violations += *hi - *lo > 1;
    }
  }
  return {violations == 0 && coverage_errors == 0,
          fmt("1000 manifests: %zu strata with spread > 1, %zu coverage errors", violations, coverage_errors)};
}

// 9 ------------------------------------------------------------------------
Outcome matrix_head(const fs::path&) {
  const auto arch = HeadArchitecture::matrix_head(kWhisperDims);
  const auto p = init_params(arch, 9, {700, 1230});
  Rng rng(909);
  std::vector<float> x(kWhisperFrames * kWhisperDims);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  const auto c = forward(p, InputView{x, kWhisperFrames, kWhisperDims});
  std::vector<std::size_t> perm(kWhisperFrames);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<float> y(x.size());
  for (std::size_t t = 0; t < kWhisperFrames; ++t) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(perm[t] * kWhisperDims), kWhisperDims,
                y.begin() + static_cast<std::ptrdiff_t>(t * kWhisperDims));
  }
  const float permuted = predict(p, InputView{y, kWhisperFrames, kWhisperDims});
  const double rel = std::abs(static_cast<double>(permuted) - c.score) / std::abs(static_cast<double>(c.score));
  const bool pass = c.pooled.size() == 100 && c.z1.size() == 50 && c.score > 0.0f && c.score < 1.0f && rel < 1e-5;
  return {pass, fmt("1500x1280 -> pooled %zu -> hidden %zu -> score %.6f; permuted relative change %.1e (limit 1e-5)",
                    c.pooled.size(), c.z1.size(), static_cast<double>(c.score), rel)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const fs::path&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <work-dir> [criterion ...]\n");
    return 2;
  }
  const fs::path work = argv[1];
  fs::create_directories(work);
  std::set<int> selected;
  for (int i = 2; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "end-to-end synthetic pipeline", end_to_end},
      {2, "class-imbalance fidelity", imbalance},
      {3, "gradient oracle", gradients},
      {4, "AUC oracle", auc_oracle},
      {5, "summarizer oracles", summarizers},
      {6, "DSP oracles", dsp},
      {7, "determinism", determinism},
      {8, "fold properties", folds},
      {9, "matrix-head shape contract", matrix_head},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run(work);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
