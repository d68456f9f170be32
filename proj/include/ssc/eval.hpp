#pragma once

// Episode-level aggregation, AUC / F1 metrics and cross-validation reports.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssc/corpus.hpp"

namespace ssc {

enum class Aggregation { kMedian, kMean };

std::string_view aggregation_name(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

/// Median (mean of the two middle values for even sizes) or mean. Throws on
/// an empty list.
double aggregate(std::span<const double> scores, Aggregation mode = Aggregation::kMedian);

/// Rank-based (Mann-Whitney) AUC with mid-ranks for ties; label 1 (scripted)
/// is the positive class. Throws "undefined AUC" when a class is missing.
double roc_auc(std::span<const int> labels, std::span<const double> scores);

struct F1Scores {
  double scripted = 0.0;
  double spontaneous = 0.0;
};

/// Prediction is scripted iff score >= threshold; F1 per class, 0 when the
/// class is never predicted nor present.
F1Scores f1_per_class(std::span<const int> labels, std::span<const double> scores, double threshold = 0.5);

struct PredictionRecord {
  std::string episode_id;
  std::vector<double> snippet_scores;
  double episode_score = 0.0;
  int fold = 0;
  Label label = Label::kSpontaneous;
  std::string language;
};

struct FoldMetrics {
  int fold = 0;
  std::size_t episodes = 0;
  std::optional<double> auc;  // undefined when the fold holds one class
  double f1_scripted = 0.0;
  double f1_spontaneous = 0.0;
};

/// Metrics over the records of one fold.
FoldMetrics fold_metrics(int fold, std::span<const PredictionRecord> records, double threshold = 0.5);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

MeanStd mean_std(std::span<const double> values);

struct LanguageRow {
  std::string group;
  std::size_t episodes = 0;
  std::vector<std::optional<double>> fold_auc;  // one entry per fold
  std::optional<double> mean_fold_auc;          // over defined folds
  std::optional<double> pooled_auc;             // all folds pooled
};

/// Per language group AUC; excluded languages are dropped, groups are sorted
/// by name. `folds` is the fold count of the run.
std::vector<LanguageRow> per_language_auc(std::span<const PredictionRecord> records, const LanguageGroup& rules,
                                          int folds);

struct HistogramBin {
  double bin_start = 0.0;
  std::size_t scripted = 0;
  std::size_t spontaneous = 0;
};

inline constexpr double kHistogramBinWidth = 0.05;

/// Episode-score histogram by true class over [0, 1] in 0.05 bins.
std::vector<HistogramBin> score_histogram(std::span<const PredictionRecord> records);

struct MetricsReport {
  std::string aggregation = "median";
  std::string schema_id;
  std::uint64_t seed = 0;
  std::string tool_version;
  int folds = 0;
  std::vector<FoldMetrics> fold_metrics;
  MeanStd auc;
  MeanStd f1_scripted;
  MeanStd f1_spontaneous;
  std::optional<double> pooled_auc;
  std::vector<LanguageRow> languages;
  std::vector<HistogramBin> histogram;
};

/// Mean and population std of each metric across folds (AUC over folds where
/// it is defined).
MetricsReport cross_val_report(const std::vector<FoldMetrics>& folds);

/// Full report from episode predictions: per-fold metrics, summary,
/// per-language table, pooled AUC and histogram.
MetricsReport build_report(std::span<const PredictionRecord> records, int folds, const LanguageGroup& rules,
                           Aggregation aggregation, std::uint64_t seed, const std::string& schema_id);

std::string report_to_text(const MetricsReport& report);
std::string report_to_jsonl(const MetricsReport& report);
MetricsReport report_from_jsonl(std::string_view text);
std::string histogram_csv(const MetricsReport& report);

std::string predictions_to_jsonl(std::span<const PredictionRecord> records);
std::vector<PredictionRecord> predictions_from_jsonl(std::string_view text);

}  // namespace ssc
