#include "ssc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "file_util.hpp"
#include "ssc/audio.hpp"
#include "ssc/embeddings.hpp"
#include "ssc/error.hpp"
#include "ssc/handcrafted.hpp"
#include "ssc/version.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ssc {

std::string_view kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kHandcrafted: return "handcrafted";
    case FeatureKind::kEmbeddingMatrix: return "embedding-matrix";
    case FeatureKind::kClassScoreSummary: return "classscore-summary";
    case FeatureKind::kClassScoreTopK: return "classscore-topk";
  }
  return "?";
}

FeatureKind parse_kind(std::string_view name) {
  for (auto k : {FeatureKind::kHandcrafted, FeatureKind::kEmbeddingMatrix, FeatureKind::kClassScoreSummary,
                 FeatureKind::kClassScoreTopK}) {
    if (kind_name(k) == name) return k;
  }
  throw InvalidArgument("unknown feature kind '" + std::string(name) +
                        "' (expected handcrafted, embedding-matrix, classscore-summary or classscore-topk)");
}

std::string kind_schema(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kHandcrafted: return kHandcraftedSchema;
    case FeatureKind::kEmbeddingMatrix: return "embedding-matrix";
    case FeatureKind::kClassScoreSummary: return "yamnet-summary";
    case FeatureKind::kClassScoreTopK: return "yamnet-topk";
  }
  return {};
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

fs::path kind_dir(const fs::path& features, FeatureKind kind) { return features / std::string(kind_name(kind)); }

fs::path snippet_file(const fs::path& episode_dir, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "%05zu.ssf", index);
  return episode_dir / name;
}

bool newer_or_equal(const fs::path& a, const fs::path& b) {
  std::error_code ec1, ec2;
  const auto ta = fs::last_write_time(a, ec1);
  const auto tb = fs::last_write_time(b, ec2);
  return !ec1 && !ec2 && ta >= tb;
}

std::vector<std::string> feature_names(FeatureKind kind, std::size_t classes) {
  std::vector<std::string> names;
  switch (kind) {
    case FeatureKind::kHandcrafted: return handcrafted_feature_names();
    case FeatureKind::kClassScoreSummary:
      for (std::size_t c = 0; c < classes; ++c) names.push_back("mean_" + std::to_string(c));
      for (std::size_t c = 0; c < classes; ++c) names.push_back("std_" + std::to_string(c));
      return names;
    case FeatureKind::kClassScoreTopK:
      for (std::size_t c = 0; c < classes; ++c) names.push_back("topk_" + std::to_string(c));
      return names;
    case FeatureKind::kEmbeddingMatrix: return {"<frames x dims matrix>"};
  }
  return names;
}

/// Input matrices of one episode: a single .ssf file or a directory of them.
std::vector<fs::path> source_matrices(const fs::path& path) {
  std::vector<fs::path> out;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".ssf") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
  } else if (fs::exists(path)) {
    out.push_back(path);
  }
  return out;
}

FeatureData transform_matrix(FeatureKind kind, FeatureMatrix m, std::size_t top_k) {
  switch (kind) {
    case FeatureKind::kClassScoreSummary: return class_score_summary(m);
    case FeatureKind::kClassScoreTopK: return class_score_top_k_counts(m, top_k);
    case FeatureKind::kEmbeddingMatrix:
      if (m.schema_id.empty()) m.schema_id = kind_schema(kind);
      return m;
    case FeatureKind::kHandcrafted: break;
  }
  throw InvalidArgument("handcrafted features are computed from audio, not matrices");
}

struct EpisodeOutcome {
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::vector<std::string> errors;
  bool failed = false;
  std::size_t classes = 0;
};

EpisodeOutcome extract_episode(const RunConfig& cfg, const EpisodeRecord& rec) {
  EpisodeOutcome out;
  const fs::path dir = kind_dir(cfg.features, cfg.kind) / rec.episode_id;
  const fs::path marker = dir / "episode.json";
  const bool from_audio = cfg.kind == FeatureKind::kHandcrafted;
  const fs::path source = from_audio ? fs::path(rec.audio_path) : fs::path(rec.feature_path);
  if (source.empty()) {
    out.failed = true;
    out.errors.push_back(rec.episode_id + ": no " + (from_audio ? "audio_path" : "feature_path") + " in manifest");
    return out;
  }
  if (!fs::exists(source)) {
    out.failed = true;
    out.errors.push_back(rec.episode_id + ": missing input " + source.string());
    return out;
  }

  // Up to date: marker newer than the source and every listed file present.
  if (!cfg.force && fs::exists(marker) && newer_or_equal(marker, source)) {
    try {
      const auto m = json::parse(detail::read_text(marker));
      const auto n = m.at("snippets").get<std::size_t>();
      bool complete = m.at("schema_id").get<std::string>().size() > 0;
      for (std::size_t i = 0; i < n && complete; ++i) complete = fs::exists(snippet_file(dir, i));
      if (complete && m.value("top_k", std::size_t{0}) == (cfg.kind == FeatureKind::kClassScoreTopK ? cfg.top_k : 0)) {
        out.skipped = n;
        out.classes = m.value("classes", std::size_t{0});
        return out;
      }
    } catch (const std::exception&) {
      // Unreadable marker: extract again.
    }
  }

  std::vector<FeatureData> features;
  std::string schema;
  try {
    if (from_audio) {
      const auto audio = decode_resample(source);
      const auto snippets = chunk_episode(audio, rec.episode_id);
      if (snippets.empty()) throw InvalidArgument("audio shorter than 5 s, no snippets");
      for (const auto& s : snippets) {
        auto v = extract_handcrafted(s);
        features.push_back(FeatureVector{std::move(v.values), kHandcraftedSchema});
      }
      schema = kHandcraftedSchema;
    } else {
      const auto files = source_matrices(source);
      if (files.empty()) throw InvalidArgument("no .ssf matrices under " + source.string());
      for (const auto& f : files) {
        try {
          auto m = read_feature_matrix(f);
          out.classes = m.cols;
          features.push_back(transform_matrix(cfg.kind, std::move(m), cfg.top_k));
        } catch (const std::exception& e) {
          out.errors.push_back(rec.episode_id + ": " + f.filename().string() + ": " + e.what());
        }
      }
      if (features.empty()) throw InvalidArgument("every input matrix failed");
      schema = std::visit([](const auto& d) { return d.schema_id; }, features.front());
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.errors.push_back(rec.episode_id + ": " + e.what());
    return out;
  }

  for (std::size_t i = 0; i < features.size(); ++i) {
    write_feature_file(snippet_file(dir, i), features[i]);
    ++out.written;
  }
  // Drop stale snippet files from an earlier, longer extraction.
  for (std::size_t i = features.size();; ++i) {
    const auto stale = snippet_file(dir, i);
    if (!fs::exists(stale)) break;
    fs::remove(stale);
  }
  json m{{"episode_id", rec.episode_id},
         {"snippets", features.size()},
         {"schema_id", schema},
         {"kind", kind_name(cfg.kind)},
         {"seed", cfg.seed},
         {"tool_version", kToolVersion},
         {"classes", out.classes},
         {"top_k", cfg.kind == FeatureKind::kClassScoreTopK ? cfg.top_k : 0}};
  detail::write_text(marker, m.dump() + "\n");
  return out;
}

/// Runs fn(i) for i in [0, n) on `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void say(const RunConfig& cfg, std::ostream& log, const std::string& line) {
  if (!cfg.quiet) log << line << '\n';
}

FoldAssignment load_or_make_folds(const RunConfig& cfg, const std::vector<EpisodeRecord>& records,
                                  std::ostream& log) {
  const fs::path path = cfg.folds_file.value_or(cfg.out / "folds.tsv");
  if (fs::exists(path)) {
    auto folds = read_folds(path);
    for (const auto& r : records) {
      if (!folds.assignment.count(r.episode_id)) {
        throw InvalidArgument("fold file " + path.string() + " has no entry for episode " + r.episode_id);
      }
    }
    return folds;
  }
  auto folds = stratified_kfold(records, cfg.folds, cfg.seed);
  write_folds(path, folds);
  say(cfg, log, "wrote " + path.string());
  return folds;
}

HeadArchitecture arch_for(FeatureKind kind, std::size_t dim) {
  return kind == FeatureKind::kEmbeddingMatrix ? HeadArchitecture::matrix_head(dim) : HeadArchitecture::vector_head(dim);
}

struct EpisodeInputs {
  std::vector<FeatureData> snippets;
};

EpisodeInputs load_episode(const RunConfig& cfg, const std::string& id, bool training_window_only) {
  auto files = episode_feature_files(cfg.features, cfg.kind, id);
  if (files.empty()) throw InvalidArgument("no extracted features for episode " + id + " (run extract first)");
  std::size_t first = 0, last = files.size();
  if (training_window_only) std::tie(first, last) = training_window_range(files.size());
  EpisodeInputs in;
  for (std::size_t i = first; i < last; ++i) in.snippets.push_back(read_feature_file(files[i]));
  return in;
}

std::string schema_of(const FeatureData& d) {
  return std::visit([](const auto& x) { return x.schema_id; }, d);
}

/// Flattens snippet inputs into a dataset; matrices are fitted to `rows`.
void add_to_dataset(Dataset& ds, const FeatureData& d, int label) {
  if (const auto* v = std::get_if<FeatureVector>(&d)) {
    if (ds.cols == 0) ds.cols = v->values.size();
    if (v->values.size() != ds.cols) throw InvalidArgument("feature vectors differ in length");
    ds.add(v->values, label);
    return;
  }
  const auto& m = std::get<FeatureMatrix>(d);
  if (ds.cols == 0) {
    ds.cols = m.cols;
    ds.rows = m.rows;
  }
  if (m.cols != ds.cols) throw InvalidArgument("feature matrices differ in width");
  auto fitted = fit_rows(m, ds.rows);
  ds.add(std::move(fitted.data), label);
}

std::string fold_name(int f) { return "fold-" + std::to_string(f); }

}  // namespace

std::vector<fs::path> episode_feature_files(const fs::path& features, FeatureKind kind, const std::string& episode_id) {
  const fs::path dir = kind_dir(features, kind) / episode_id;
  std::vector<fs::path> out;
  const fs::path marker = dir / "episode.json";
  if (!fs::exists(marker)) return out;
  const auto m = json::parse(detail::read_text(marker));
  const auto n = m.at("snippets").get<std::size_t>();
  for (std::size_t i = 0; i < n; ++i) out.push_back(snippet_file(dir, i));
  return out;
}

ManifestLoadResult load_run_manifest(const RunConfig& config) {
  if (config.manifest.empty()) throw InvalidArgument("--manifest is required");
  if (!fs::exists(config.manifest)) throw IoError("manifest not found: " + config.manifest.string());
  const auto mapping = config.label_map ? LabelMapping::load(*config.label_map) : LabelMapping::podcast_default();
  auto result = load_manifest(config.manifest, mapping);
  if (result.records.empty()) throw InvalidArgument("manifest has no usable records");
  return result;
}

LanguageGroup load_run_lang_groups(const RunConfig& config) {
  return config.lang_groups ? LanguageGroup::load(*config.lang_groups) : LanguageGroup::builtin_default();
}

ExtractSummary cmd_extract(const RunConfig& cfg, std::ostream& log) {
  const auto manifest = load_run_manifest(cfg);
  ExtractSummary summary;
  summary.episodes = manifest.records.size();
  for (const auto& e : manifest.errors) {
    summary.errors.push_back("manifest row " + std::to_string(e.row) + " (" + e.episode_id + "): " + e.message);
  }

  std::vector<EpisodeOutcome> outcomes(manifest.records.size());
  std::mutex log_mutex;
  parallel_for(manifest.records.size(), cfg.jobs, [&](std::size_t i) {
    outcomes[i] = extract_episode(cfg, manifest.records[i]);
    if (!cfg.quiet) {
      std::lock_guard lock(log_mutex);
      const auto& o = outcomes[i];
      log << manifest.records[i].episode_id << ": "
          << (o.failed ? "FAILED" : std::to_string(o.written) + " written, " + std::to_string(o.skipped) + " up to date")
          << '\n';
    }
  });

  std::size_t classes = 0;
  for (const auto& o : outcomes) {
    summary.files_written += o.written;
    summary.files_skipped += o.skipped;
    summary.episodes_failed += o.failed ? 1 : 0;
    summary.errors.insert(summary.errors.end(), o.errors.begin(), o.errors.end());
    if (o.classes) classes = o.classes;
  }
  summary.exit_code = summary.episodes_failed > 0 || !manifest.errors.empty() ? kExitPartial : kExitOk;

  const fs::path dir = kind_dir(cfg.features, cfg.kind);
  std::string names;
  for (const auto& n : feature_names(cfg.kind, classes)) names += n + '\n';
  if (classes || cfg.kind == FeatureKind::kHandcrafted || cfg.kind == FeatureKind::kEmbeddingMatrix) {
    detail::write_text(dir / "schema.txt", "# schema_id " + kind_schema(cfg.kind) + "\n" + names);
  }
  json entry{{"kind", kind_name(cfg.kind)},
             {"schema_id", kind_schema(cfg.kind)},
             {"seed", cfg.seed},
             {"tool_version", kToolVersion},
             {"episodes", summary.episodes},
             {"episodes_failed", summary.episodes_failed},
             {"files_written", summary.files_written},
             {"files_skipped", summary.files_skipped},
             {"errors", summary.errors}};
  fs::create_directories(dir);
  std::string previous;
  if (fs::exists(dir / "extract.log")) previous = detail::read_text(dir / "extract.log");
  detail::write_text(dir / "extract.log", previous + entry.dump() + "\n");

  for (const auto& e : summary.errors) log << "error: " << e << '\n';
  say(cfg, log,
      "extract: " + std::to_string(summary.files_written) + " written, " + std::to_string(summary.files_skipped) +
          " up to date, " + std::to_string(summary.episodes_failed) + " episode(s) failed");
  return summary;
}

FoldAssignment cmd_split(const RunConfig& cfg, std::ostream& log) {
  const auto manifest = load_run_manifest(cfg);
  const auto folds = stratified_kfold(manifest.records, cfg.folds, cfg.seed);
  const fs::path path = cfg.folds_file.value_or(cfg.out / "folds.tsv");
  write_folds(path, folds);
  std::string sizes;
  for (int f = 0; f < folds.k; ++f) sizes += (f ? " " : "") + std::to_string(folds.episodes_in(f).size());
  say(cfg, log, "split: " + std::to_string(manifest.records.size()) + " episodes into " + std::to_string(folds.k) +
                    " folds (" + sizes + ") -> " + path.string());
  return folds;
}

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto manifest = load_run_manifest(cfg);
  const auto& records = manifest.records;
  const auto folds = load_or_make_folds(cfg, records, log);

  // Training inputs come from the centered training window of each episode.
  std::map<std::string, EpisodeInputs> inputs;
  for (const auto& r : records) inputs.emplace(r.episode_id, load_episode(cfg, r.episode_id, true));
  const std::string schema = schema_of(inputs.begin()->second.snippets.front());

  TrainSummary summary;
  summary.checkpoints.resize(static_cast<std::size_t>(folds.k));
  summary.best_epochs.resize(static_cast<std::size_t>(folds.k));
  summary.val_losses.resize(static_cast<std::size_t>(folds.k));
  std::vector<std::string> messages(static_cast<std::size_t>(folds.k));
  fs::create_directories(cfg.out);

  parallel_for(static_cast<std::size_t>(folds.k), cfg.jobs, [&](std::size_t fi) {
    const int f = static_cast<int>(fi);
    const std::uint64_t fold_seed = mix_seed(cfg.seed, fi);
    std::vector<const EpisodeRecord*> train_eps, val_eps;
    for (const auto& r : records) (folds.fold_of(r.episode_id) == f ? val_eps : train_eps).push_back(&r);

    if (cfg.inner_val) {
      // 10% of the training episodes per class become the validation set.
      val_eps.clear();
      std::vector<const EpisodeRecord*> keep;
      Rng rng(mix_seed(fold_seed, 0x1A));
      for (Label cls : {Label::kScripted, Label::kSpontaneous}) {
        std::vector<const EpisodeRecord*> pool;
        for (const auto* r : train_eps) {
          if (r->label == cls) pool.push_back(r);
        }
        rng.shuffle(std::span<const EpisodeRecord*>(pool));
        const std::size_t take = pool.size() < 2 ? 0 : std::max<std::size_t>(1, (pool.size() + 5) / 10);
        val_eps.insert(val_eps.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        keep.insert(keep.end(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end());
      }
      std::sort(keep.begin(), keep.end(),
                [](const auto* a, const auto* b) { return a->episode_id < b->episode_id; });
      std::sort(val_eps.begin(), val_eps.end(),
                [](const auto* a, const auto* b) { return a->episode_id < b->episode_id; });
      train_eps = std::move(keep);
    }
    if (train_eps.empty() || val_eps.empty()) throw InvalidArgument(fold_name(f) + ": empty training or validation set");

    Dataset train_set, val_set;
    for (const auto* r : train_eps) {
      for (const auto& d : inputs.at(r->episode_id).snippets) {
        if (schema_of(d) != schema) throw InvalidArgument("mixed feature schemas in " + r->episode_id);
        add_to_dataset(train_set, d, positive(r->label));
      }
    }
    val_set.rows = train_set.rows;
    val_set.cols = train_set.cols;
    for (const auto* r : val_eps) {
      for (const auto& d : inputs.at(r->episode_id).snippets) add_to_dataset(val_set, d, positive(r->label));
    }

    std::optional<Standardizer> standardizer;
    if (cfg.kind != FeatureKind::kEmbeddingMatrix) {
      standardizer = fit_standardizer(train_set.inputs);
      for (auto& x : train_set.inputs) x = standardizer->apply(x);
      for (auto& x : val_set.inputs) x = standardizer->apply(x);
    }

    const auto arch = arch_for(cfg.kind, train_set.cols);
    auto tc = TrainConfig::defaults_for(arch.variant);
    tc.seed = fold_seed;
    if (cfg.max_epochs) tc.max_epochs = *cfg.max_epochs;
    auto result = train(train_set, val_set, arch, tc);
    result.checkpoint.standardizer = standardizer;
    result.checkpoint.schema_id = schema;

    const fs::path ckpt_path = cfg.out / (fold_name(f) + ".ssck");
    save_checkpoint(ckpt_path, result.checkpoint);
    std::ostringstream lines;
    lines << json{{"type", "meta"},         {"fold", f},
                  {"seed", cfg.seed},       {"fold_seed", fold_seed},
                  {"schema_id", schema},    {"tool_version", kToolVersion},
                  {"train_episodes", train_eps.size()}, {"val_episodes", val_eps.size()},
                  {"train_snippets", train_set.size()}, {"val_snippets", val_set.size()},
                  {"inner_val", cfg.inner_val}}
                 .dump()
          << '\n';
    for (const auto& e : result.log) {
      lines << json{{"type", "epoch"},
                    {"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"train_accuracy", e.train_accuracy},
                    {"val_loss", e.val_loss},
                    {"val_accuracy", e.val_accuracy},
                    {"val_auc", e.val_auc ? json(*e.val_auc) : json(nullptr)}}
                   .dump()
            << '\n';
    }
    lines << json{{"type", "best"}, {"epoch", result.checkpoint.epoch}, {"val_loss", result.checkpoint.val_loss}}.dump()
          << '\n';
    detail::write_text(cfg.out / (fold_name(f) + ".log.jsonl"), lines.str());

    summary.checkpoints[fi] = ckpt_path;
    summary.best_epochs[fi] = result.checkpoint.epoch;
    summary.val_losses[fi] = result.checkpoint.val_loss;
    char msg[160];
    std::snprintf(msg, sizeof msg, "%s: %zu train / %zu val snippets, best epoch %zu, val loss %.4f",
                  fold_name(f).c_str(), train_set.size(), val_set.size(), result.checkpoint.epoch,
                  result.checkpoint.val_loss);
    messages[fi] = msg;
  });
  for (const auto& m : messages) say(cfg, log, m);
  return summary;
}

namespace {

std::vector<FeatureData> inputs_for_prediction(const RunConfig& cfg, const Checkpoint& ckpt, const fs::path& input) {
  std::vector<FeatureData> out;
  const auto ext = detail::lower(input.extension().string());
  if (ext == ".wav") {
    if (ckpt.schema_id != kHandcraftedSchema) {
      throw InvalidArgument("schema mismatch: audio input needs a handcrafted checkpoint, got '" + ckpt.schema_id + "'");
    }
    const auto audio = decode_resample(input);
    for (const auto& s : chunk_episode(audio, input.stem().string())) {
      auto v = extract_handcrafted(s);
      out.push_back(FeatureVector{std::move(v.values), kHandcraftedSchema});
    }
    if (out.empty()) throw InvalidArgument("audio shorter than 5 s, no snippets");
    return out;
  }
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    files = source_matrices(input);
  } else {
    files.push_back(input);
  }
  if (files.empty()) throw InvalidArgument("no .ssf inputs under " + input.string());
  for (const auto& f : files) {
    auto d = read_feature_file(f);
    // Raw class-score matrices are summarized for summary/top-k checkpoints.
    if (auto* m = std::get_if<FeatureMatrix>(&d)) {
      if (ckpt.schema_id == "yamnet-summary") d = class_score_summary(*m);
      else if (ckpt.schema_id == "yamnet-topk") d = class_score_top_k_counts(*m, cfg.top_k);
    }
    out.push_back(std::move(d));
  }
  return out;
}

double score_feature(const Checkpoint& ckpt, const FeatureData& d) {
  if (const auto* v = std::get_if<FeatureVector>(&d)) {
    return score_input(ckpt, v->schema_id, InputView{v->values, 1, v->values.size()});
  }
  const auto& m = std::get<FeatureMatrix>(d);
  return score_input(ckpt, m.schema_id, InputView{m.data, m.rows, m.cols});
}

}  // namespace

PredictResult cmd_predict(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.checkpoint) throw InvalidArgument("--checkpoint is required");
  if (!cfg.input) throw InvalidArgument("--input is required");
  if (!fs::exists(*cfg.input)) throw IoError("input not found: " + cfg.input->string());
  const auto ckpt = load_checkpoint(*cfg.checkpoint);
  PredictResult r;
  r.schema_id = ckpt.schema_id;
  for (const auto& d : inputs_for_prediction(cfg, ckpt, *cfg.input)) r.snippet_scores.push_back(score_feature(ckpt, d));
  r.episode_score = aggregate(r.snippet_scores, cfg.aggregation);
  log << json{{"input", cfg.input->string()},
              {"schema_id", r.schema_id},
              {"aggregation", aggregation_name(cfg.aggregation)},
              {"snippet_scores", r.snippet_scores},
              {"episode_score", r.episode_score},
              {"tool_version", kToolVersion}}
             .dump()
      << '\n';
  return r;
}

namespace {

void write_report_files(const RunConfig& cfg, const MetricsReport& report,
                        std::span<const PredictionRecord> predictions, std::ostream& log) {
  const std::string agg(aggregation_name(cfg.aggregation));
  fs::create_directories(cfg.out);
  if (!predictions.empty()) detail::write_text(cfg.out / ("predictions." + agg + ".jsonl"), predictions_to_jsonl(predictions));
  detail::write_text(cfg.out / ("report." + agg + ".txt"), report_to_text(report));
  detail::write_text(cfg.out / ("report." + agg + ".jsonl"), report_to_jsonl(report));
  detail::write_text(cfg.out / ("histogram." + agg + ".csv"), histogram_csv(report));
  say(cfg, log, report_to_text(report));
}

}  // namespace

MetricsReport cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const auto manifest = load_run_manifest(cfg);
  const auto folds = load_or_make_folds(cfg, manifest.records, log);
  const fs::path ckpt_dir = cfg.checkpoint.value_or(cfg.out);

  std::vector<std::vector<PredictionRecord>> per_fold(static_cast<std::size_t>(folds.k));
  std::string schema;
  parallel_for(static_cast<std::size_t>(folds.k), cfg.jobs, [&](std::size_t fi) {
    const int f = static_cast<int>(fi);
    const auto ckpt = load_checkpoint(ckpt_dir / (fold_name(f) + ".ssck"));
    for (const auto& r : manifest.records) {
      if (folds.fold_of(r.episode_id) != f) continue;
      // Evaluation scores every snippet, not just the training window.
      const auto in = load_episode(cfg, r.episode_id, false);
      PredictionRecord p;
      p.episode_id = r.episode_id;
      p.fold = f;
      p.label = r.label;
      p.language = r.language;
      for (const auto& d : in.snippets) p.snippet_scores.push_back(score_feature(ckpt, d));
      p.episode_score = aggregate(p.snippet_scores, cfg.aggregation);
      per_fold[fi].push_back(std::move(p));
    }
    if (fi == 0) schema = ckpt.schema_id;
  });
  std::vector<PredictionRecord> predictions;
  for (auto& v : per_fold) {
    for (auto& p : v) predictions.push_back(std::move(p));
  }
  auto report = build_report(predictions, folds.k, load_run_lang_groups(cfg), cfg.aggregation, cfg.seed, schema);
  write_report_files(cfg, report, predictions, log);
  return report;
}

MetricsReport cmd_report(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.input) throw InvalidArgument("--input is required (a report or predictions .jsonl)");
  const auto text = detail::read_text(*cfg.input);
  const auto lines = detail::lines(text);
  const auto first = std::find_if(lines.begin(), lines.end(), [](const auto& l) { return !detail::trim(l).empty(); });
  if (first == lines.end()) throw InvalidArgument("empty input " + cfg.input->string());
  if (json::parse(*first).contains("type")) {
    auto report = report_from_jsonl(text);
    log << report_to_text(report);
    return report;
  }
  // Predictions: rebuild the report, e.g. with different language groups.
  const auto predictions = predictions_from_jsonl(text);
  int k = 0;
  for (const auto& p : predictions) k = std::max(k, p.fold + 1);
  auto report = build_report(predictions, k, load_run_lang_groups(cfg), cfg.aggregation, cfg.seed, "");
  write_report_files(cfg, report, {}, log);
  return report;
}

}  // namespace ssc
