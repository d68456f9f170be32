#pragma once

// End-to-end commands behind the CLI: extract, split, train, predict,
// evaluate, report, synth.
//
// On-disk layout under the features directory:
//   <features>/<kind>/<episode_id>/<index>.ssf   one file per snippet
//   <features>/<kind>/<episode_id>/episode.json  completion marker
//   <features>/<kind>/schema.txt                 ordered feature names
//   <features>/<kind>/extract.log                JSON lines, one per run
//
// Training writes fold-<f>.ssck and fold-<f>.log.jsonl; evaluation writes
// predictions.<agg>.jsonl, report.<agg>.{txt,jsonl} and histogram.<agg>.csv.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ssc/corpus.hpp"
#include "ssc/eval.hpp"
#include "ssc/model.hpp"

namespace ssc {

enum class FeatureKind { kHandcrafted, kEmbeddingMatrix, kClassScoreSummary, kClassScoreTopK };

std::string_view kind_name(FeatureKind kind);
FeatureKind parse_kind(std::string_view name);
/// schema_id written into feature files of this kind (matrix inputs keep
/// their own schema).
std::string kind_schema(FeatureKind kind);

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitConfig = 2 };

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path features = "features";
  std::filesystem::path out = "run";
  std::uint64_t seed = 0;
  int folds = 5;
  Aggregation aggregation = Aggregation::kMedian;
  std::optional<std::filesystem::path> label_map;
  std::optional<std::filesystem::path> lang_groups;
  std::optional<std::filesystem::path> folds_file;  // default <out>/folds.tsv
  bool inner_val = false;
  int jobs = 1;
  bool force = false;
  FeatureKind kind = FeatureKind::kHandcrafted;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> input;
  std::size_t top_k = 4;
  std::optional<std::size_t> max_epochs;  // overrides the per-variant default
  bool quiet = false;
};

struct ExtractSummary {
  std::size_t episodes = 0;
  std::size_t episodes_failed = 0;
  std::size_t files_written = 0;
  std::size_t files_skipped = 0;
  std::vector<std::string> errors;  // "episode_id: message"
  int exit_code = kExitOk;
};

struct TrainSummary {
  std::vector<std::filesystem::path> checkpoints;
  std::vector<std::size_t> best_epochs;
  std::vector<double> val_losses;
};

struct PredictResult {
  std::vector<double> snippet_scores;
  double episode_score = 0.0;
  std::string schema_id;
};

/// Loads the manifest with the configured (or podcast default) label mapping.
ManifestLoadResult load_run_manifest(const RunConfig& config);
LanguageGroup load_run_lang_groups(const RunConfig& config);

ExtractSummary cmd_extract(const RunConfig& config, std::ostream& log);
FoldAssignment cmd_split(const RunConfig& config, std::ostream& log);
TrainSummary cmd_train(const RunConfig& config, std::ostream& log);
PredictResult cmd_predict(const RunConfig& config, std::ostream& log);
MetricsReport cmd_evaluate(const RunConfig& config, std::ostream& log);
MetricsReport cmd_report(const RunConfig& config, std::ostream& log);

/// Snippet feature files of one episode, in snippet order. Empty when the
/// episode has not been extracted.
std::vector<std::filesystem::path> episode_feature_files(const std::filesystem::path& features, FeatureKind kind,
                                                         const std::string& episode_id);

}  // namespace ssc
