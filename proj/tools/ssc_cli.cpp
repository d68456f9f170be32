// ssc: scripted vs spontaneous speech classification toolkit.
//
//   ssc synth    --out corpus/ [--config synth.conf] [--seed N]
//   ssc extract  --manifest m.tsv --features feats/ [--kind handcrafted] [--jobs 4] [--force]
//   ssc split    --manifest m.tsv --out run/ [--folds 5] [--seed N]
//   ssc train    --manifest m.tsv --features feats/ --out run/ [--inner-val]
//   ssc evaluate --manifest m.tsv --features feats/ --out run/ [--aggregation mean]
//   ssc predict  --checkpoint run/fold-0.ssck --input episode.wav
//   ssc report   --input run/report.median.jsonl
//
// Exit codes: 0 success, 1 partial extraction failure, 2 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ssc/error.hpp"
#include "ssc/pipeline.hpp"
#include "ssc/synth.hpp"
#include "ssc/version.hpp"

namespace {

struct Options {
  std::string manifest, features = "features", out, kind = "handcrafted", aggregation = "median";
  std::string label_map, lang_groups, folds_file, checkpoint, input, synth_config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int folds = 5, jobs = 1;
  bool inner_val = false, force = false, quiet = false;
  std::size_t top_k = 4, max_epochs = 0;
  std::size_t scripted = 0, spontaneous = 0;
  double duration = 0.0, skew_scripted = 0.0, skew_spontaneous = 0.0, atypical = -1.0;
};

std::optional<std::filesystem::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

ssc::RunConfig to_run_config(const Options& o) {
  ssc::RunConfig c;
  c.manifest = o.manifest;
  c.features = o.features;
  c.out = o.out.empty() ? std::filesystem::path("run") : std::filesystem::path(o.out);
  c.seed = o.seed;
  c.folds = o.folds;
  c.aggregation = ssc::parse_aggregation(o.aggregation);
  c.label_map = opt_path(o.label_map);
  c.lang_groups = opt_path(o.lang_groups);
  c.folds_file = opt_path(o.folds_file);
  c.inner_val = o.inner_val;
  c.jobs = o.jobs;
  c.force = o.force;
  c.kind = ssc::parse_kind(o.kind);
  c.checkpoint = opt_path(o.checkpoint);
  c.input = opt_path(o.input);
  c.top_k = o.top_k;
  if (o.max_epochs > 0) c.max_epochs = o.max_epochs;
  c.quiet = o.quiet;
  for (const auto* p : {&c.label_map, &c.lang_groups}) {
    if (*p && !std::filesystem::exists(**p)) throw ssc::IoError("file not found: " + (*p)->string());
  }
  return c;
}

int run_synth(const Options& o) {
  auto cfg = o.synth_config.empty() ? ssc::SynthConfig{} : ssc::SynthConfig::load(o.synth_config);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.scripted) cfg.scripted_episodes = o.scripted;
  if (o.spontaneous) cfg.spontaneous_episodes = o.spontaneous;
  if (o.duration > 0) cfg.episode_seconds = o.duration;
  if (o.skew_scripted > 0) cfg.ratio_scripted = o.skew_scripted;
  if (o.skew_spontaneous > 0) cfg.ratio_spontaneous = o.skew_spontaneous;
  if (o.atypical >= 0) cfg.atypical_fraction = o.atypical;
  if (o.out.empty()) throw ssc::InvalidArgument("--out is required");
  const auto corpus = ssc::gen_corpus(cfg, o.out);
  std::cout << "synth: " << corpus.records.size() << " episodes -> " << corpus.manifest_path.string() << '\n';
  return ssc::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scripted vs spontaneous speech classification"};
  app.set_version_flag("--version", std::string(ssc::kToolVersion));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--manifest", o.manifest, "Episode manifest (TSV/CSV with header, or JSON lines)");
    sub->add_option("--features", o.features, "Feature directory")->capture_default_str();
    sub->add_option("--out", o.out, "Output directory for folds, checkpoints and reports");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { o.seed = s; o.seed_set = true; }, "Random seed (default 0)");
    sub->add_option("--folds", o.folds, "Number of cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000));
    sub->add_option("--folds-file", o.folds_file, "Fold assignment file (default <out>/folds.tsv)");
    sub->add_option("--kind", o.kind, "handcrafted | embedding-matrix | classscore-summary | classscore-topk")
        ->capture_default_str();
    sub->add_option("--label-map", o.label_map, "Format-to-label mapping file");
    sub->add_option("--lang-groups", o.lang_groups, "Language grouping rules file");
    sub->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1, 64));
    sub->add_option("--top-k", o.top_k, "k for the class-score top-k summarizer")->capture_default_str();
    sub->add_flag("--quiet", o.quiet, "Only print errors");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--config", o.synth_config, "Synthesis config (key = value lines)");
  synth->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { o.seed = s; o.seed_set = true; }, "Random seed");
  synth->add_option("--scripted", o.scripted, "Scripted episodes");
  synth->add_option("--spontaneous", o.spontaneous, "Spontaneous episodes");
  synth->add_option("--duration", o.duration, "Episode length in seconds (>= 60)");
  synth->add_option("--skew-scripted", o.skew_scripted, "Scripted share of a skewed class ratio");
  synth->add_option("--skew-spontaneous", o.skew_spontaneous, "Spontaneous share of a skewed class ratio");
  synth->add_option("--atypical", o.atypical, "Fraction of atypical episodes per class");

  auto* extract = app.add_subcommand("extract", "Extract per-snippet features");
  common(extract);
  extract->add_flag("--force", o.force, "Rewrite up-to-date feature files");

  auto* split = app.add_subcommand("split", "Assign episodes to stratified folds");
  common(split);

  auto* train = app.add_subcommand("train", "Train one classifier head per fold");
  common(train);
  train->add_flag("--inner-val", o.inner_val, "Validate on 10% of training episodes instead of the test fold");
  train->add_option("--max-epochs", o.max_epochs, "Override the epoch count");

  auto* evaluate = app.add_subcommand("evaluate", "Score held-out folds and write reports");
  common(evaluate);
  evaluate->add_option("--aggregation", o.aggregation, "median | mean")->capture_default_str();
  evaluate->add_option("--checkpoint", o.checkpoint, "Directory with fold-<f>.ssck (default --out)");

  auto* predict = app.add_subcommand("predict", "Score a WAV file or feature file(s)");
  common(predict);
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  predict->add_option("--input", o.input, "WAV file, .ssf file or directory of .ssf files")->required();
  predict->add_option("--aggregation", o.aggregation, "median | mean")->capture_default_str();

  auto* report = app.add_subcommand("report", "Render a report or rebuild it from predictions");
  common(report);
  report->add_option("--input", o.input, "report.*.jsonl or predictions.*.jsonl")->required();
  report->add_option("--aggregation", o.aggregation, "Label for rebuilt reports")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ssc::kExitOk : ssc::kExitConfig;
  }

  try {
    if (synth->parsed()) return run_synth(o);
    const auto cfg = to_run_config(o);
    if (extract->parsed()) return ssc::cmd_extract(cfg, std::cout).exit_code;
    if (split->parsed()) ssc::cmd_split(cfg, std::cout);
    if (train->parsed()) ssc::cmd_train(cfg, std::cout);
    if (evaluate->parsed()) ssc::cmd_evaluate(cfg, std::cout);
    if (predict->parsed()) ssc::cmd_predict(cfg, std::cout);
    if (report->parsed()) ssc::cmd_report(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ssc::kExitConfig;
  }
  return ssc::kExitOk;
}
