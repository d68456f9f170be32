#include "ssc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ssc/error.hpp"
#include "ssc/version.hpp"
#include "text_util.hpp"

namespace ssc {

std::string_view aggregation_name(Aggregation a) { return a == Aggregation::kMean ? "mean" : "median"; }

Aggregation parse_aggregation(std::string_view name) {
  if (name == "median") return Aggregation::kMedian;
  if (name == "mean") return Aggregation::kMean;
  throw InvalidArgument("aggregation must be 'median' or 'mean', got '" + std::string(name) + "'");
}

double aggregate(std::span<const double> scores, Aggregation mode) {
  if (scores.empty()) throw InvalidArgument("aggregate: empty score list");
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  if (mode == Aggregation::kMean) {
    double sum = 0.0;
    for (double v : s) sum += v;
    return std::clamp(sum / static_cast<double>(s.size()), s.front(), s.back());
  }
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double roc_auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw InvalidArgument("roc_auc: size mismatch");
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their mean.
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += mid;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("undefined AUC: only one class present");
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

F1Scores f1_per_class(std::span<const int> labels, std::span<const double> scores, double threshold) {
  if (labels.size() != scores.size()) throw InvalidArgument("f1_per_class: size mismatch");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = labels[i] == 1;
    if (pred && truth) ++tp;
    else if (pred) ++fp;
    else if (truth) ++fn;
    else ++tn;
  }
  auto f1 = [](std::size_t t, std::size_t false_pos, std::size_t false_neg) {
    const std::size_t denom = 2 * t + false_pos + false_neg;
    return t == 0 || denom == 0 ? 0.0 : 2.0 * static_cast<double>(t) / static_cast<double>(denom);
  };
  // For the spontaneous class the roles of the confusion cells swap.
  return {f1(tp, fp, fn), f1(tn, fn, fp)};
}

namespace {

void labels_scores(std::span<const PredictionRecord> records, std::vector<int>& labels, std::vector<double>& scores) {
  labels.clear();
  scores.clear();
  for (const auto& r : records) {
    labels.push_back(positive(r.label));
    scores.push_back(r.episode_score);
  }
}

std::optional<double> safe_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || static_cast<std::size_t>(pos) == labels.size()) return std::nullopt;
  return roc_auc(labels, scores);
}

}  // namespace

FoldMetrics fold_metrics(int fold, std::span<const PredictionRecord> records, double threshold) {
  FoldMetrics m;
  m.fold = fold;
  m.episodes = records.size();
  std::vector<int> labels;
  std::vector<double> scores;
  labels_scores(records, labels, scores);
  m.auc = safe_auc(labels, scores);
  const auto f1 = f1_per_class(labels, scores, threshold);
  m.f1_scripted = f1.scripted;
  m.f1_spontaneous = f1.spontaneous;
  return m;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

std::vector<LanguageRow> per_language_auc(std::span<const PredictionRecord> records, const LanguageGroup& rules,
                                          int folds) {
  std::map<std::string, std::vector<const PredictionRecord*>> groups;
  for (const auto& r : records) {
    if (auto g = rules.group_language(r.language)) groups[*g].push_back(&r);
  }
  std::vector<LanguageRow> out;
  for (const auto& [name, members] : groups) {
    LanguageRow row;
    row.group = name;
    row.episodes = members.size();
    row.fold_auc.assign(static_cast<std::size_t>(std::max(folds, 0)), std::nullopt);
    std::vector<double> defined;
    for (int f = 0; f < folds; ++f) {
      std::vector<int> labels;
      std::vector<double> scores;
      for (const auto* r : members) {
        if (r->fold == f) {
          labels.push_back(positive(r->label));
          scores.push_back(r->episode_score);
        }
      }
      row.fold_auc[static_cast<std::size_t>(f)] = safe_auc(labels, scores);
      if (row.fold_auc[static_cast<std::size_t>(f)]) defined.push_back(*row.fold_auc[static_cast<std::size_t>(f)]);
    }
    if (!defined.empty()) row.mean_fold_auc = mean_std(defined).mean;
    std::vector<int> labels;
    std::vector<double> scores;
    for (const auto* r : members) {
      labels.push_back(positive(r->label));
      scores.push_back(r->episode_score);
    }
    row.pooled_auc = safe_auc(labels, scores);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<HistogramBin> score_histogram(std::span<const PredictionRecord> records) {
  const auto bins = static_cast<std::size_t>(std::lround(1.0 / kHistogramBinWidth));
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b].bin_start = static_cast<double>(b) * kHistogramBinWidth;
  for (const auto& r : records) {
    auto b = static_cast<std::size_t>(std::clamp(r.episode_score, 0.0, 1.0) / kHistogramBinWidth);
    b = std::min(b, bins - 1);
    if (r.label == Label::kScripted) ++out[b].scripted;
    else ++out[b].spontaneous;
  }
  return out;
}

MetricsReport cross_val_report(const std::vector<FoldMetrics>& folds) {
  MetricsReport r;
  r.folds = static_cast<int>(folds.size());
  r.fold_metrics = folds;
  std::vector<double> auc, f1s, f1n;
  for (const auto& f : folds) {
    if (f.auc) auc.push_back(*f.auc);
    f1s.push_back(f.f1_scripted);
    f1n.push_back(f.f1_spontaneous);
  }
  r.auc = mean_std(auc);
  r.f1_scripted = mean_std(f1s);
  r.f1_spontaneous = mean_std(f1n);
  return r;
}

MetricsReport build_report(std::span<const PredictionRecord> records, int folds, const LanguageGroup& rules,
                           Aggregation aggregation, std::uint64_t seed, const std::string& schema_id) {
  std::vector<FoldMetrics> per_fold;
  for (int f = 0; f < folds; ++f) {
    std::vector<PredictionRecord> subset;
    for (const auto& r : records) {
      if (r.fold == f) subset.push_back(r);
    }
    per_fold.push_back(fold_metrics(f, subset));
  }
  auto report = cross_val_report(per_fold);
  report.aggregation = std::string(aggregation_name(aggregation));
  report.seed = seed;
  report.schema_id = schema_id;
  report.tool_version = kToolVersion;
  std::vector<int> labels;
  std::vector<double> scores;
  labels_scores(records, labels, scores);
  report.pooled_auc = safe_auc(labels, scores);
  report.languages = per_language_auc(records, rules, folds);
  report.histogram = score_histogram(records);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("undefined"); }

}  // namespace

std::string report_to_jsonl(const MetricsReport& r) {
  std::ostringstream out;
  out << json{{"type", "meta"},      {"aggregation", r.aggregation},   {"schema_id", r.schema_id},
              {"seed", r.seed},      {"tool_version", r.tool_version}, {"folds", r.folds},
              {"pooled_auc", opt(r.pooled_auc)}}
             .dump()
      << '\n';
  for (const auto& f : r.fold_metrics) {
    out << json{{"type", "fold"},
                {"fold", f.fold},
                {"episodes", f.episodes},
                {"auc", opt(f.auc)},
                {"f1_scripted", f.f1_scripted},
                {"f1_spontaneous", f.f1_spontaneous}}
               .dump()
        << '\n';
  }
  for (const auto& [name, ms] : {std::pair{"auc", &r.auc}, std::pair{"f1_scripted", &r.f1_scripted},
                                  std::pair{"f1_spontaneous", &r.f1_spontaneous}}) {
    out << json{{"type", "summary"}, {"metric", name}, {"mean", ms->mean}, {"std", ms->stddev}, {"count", ms->count}}
               .dump()
        << '\n';
  }
  for (const auto& l : r.languages) {
    json folds = json::array();
    for (const auto& a : l.fold_auc) folds.push_back(opt(a));
    out << json{{"type", "language"},
                {"group", l.group},
                {"episodes", l.episodes},
                {"fold_auc", folds},
                {"mean_fold_auc", opt(l.mean_fold_auc)},
                {"pooled_auc", opt(l.pooled_auc)}}
               .dump()
        << '\n';
  }
  for (const auto& h : r.histogram) {
    out << json{{"type", "histogram"},
                {"bin_start", h.bin_start},
                {"scripted", h.scripted},
                {"spontaneous", h.spontaneous}}
               .dump()
        << '\n';
  }
  return out.str();
}

MetricsReport report_from_jsonl(std::string_view text) {
  MetricsReport r;
  for (const auto& line : detail::lines(text)) {
    if (detail::trim(line).empty()) continue;
    const auto j = json::parse(line);
    const auto type = j.at("type").get<std::string>();
    if (type == "meta") {
      r.aggregation = j.at("aggregation").get<std::string>();
      r.schema_id = j.at("schema_id").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.tool_version = j.at("tool_version").get<std::string>();
      r.folds = j.at("folds").get<int>();
      r.pooled_auc = opt_from(j.at("pooled_auc"));
    } else if (type == "fold") {
      FoldMetrics f;
      f.fold = j.at("fold").get<int>();
      f.episodes = j.at("episodes").get<std::size_t>();
      f.auc = opt_from(j.at("auc"));
      f.f1_scripted = j.at("f1_scripted").get<double>();
      f.f1_spontaneous = j.at("f1_spontaneous").get<double>();
      r.fold_metrics.push_back(f);
    } else if (type == "summary") {
      MeanStd ms{j.at("mean").get<double>(), j.at("std").get<double>(), j.at("count").get<std::size_t>()};
      const auto metric = j.at("metric").get<std::string>();
      if (metric == "auc") r.auc = ms;
      else if (metric == "f1_scripted") r.f1_scripted = ms;
      else if (metric == "f1_spontaneous") r.f1_spontaneous = ms;
    } else if (type == "language") {
      LanguageRow l;
      l.group = j.at("group").get<std::string>();
      l.episodes = j.at("episodes").get<std::size_t>();
      for (const auto& a : j.at("fold_auc")) l.fold_auc.push_back(opt_from(a));
      l.mean_fold_auc = opt_from(j.at("mean_fold_auc"));
      l.pooled_auc = opt_from(j.at("pooled_auc"));
      r.languages.push_back(std::move(l));
    } else if (type == "histogram") {
      r.histogram.push_back(
          {j.at("bin_start").get<double>(), j.at("scripted").get<std::size_t>(), j.at("spontaneous").get<std::size_t>()});
    } else {
      throw InvalidArgument("report: unknown record type '" + type + "'");
    }
  }
  return r;
}

std::string report_to_text(const MetricsReport& r) {
  std::ostringstream out;
  out << "schema: " << r.schema_id << "   aggregation: " << r.aggregation << "   seed: " << r.seed
      << "   version: " << r.tool_version << "\n\n";
  out << "fold  episodes  AUC        F1_scripted  F1_spontaneous\n";
  for (const auto& f : r.fold_metrics) {
    char line[128];
    std::snprintf(line, sizeof line, "%-4d  %-8zu  %-9s  %-11s  %s\n", f.fold, f.episodes, fmt(f.auc).c_str(),
                  fmt(f.f1_scripted).c_str(), fmt(f.f1_spontaneous).c_str());
    out << line;
  }
  out << "\nAUC             " << fmt(r.auc.mean) << " +/- " << fmt(r.auc.stddev) << "  (" << r.auc.count
      << " folds)\n";
  out << "F1 scripted     " << fmt(r.f1_scripted.mean) << " +/- " << fmt(r.f1_scripted.stddev) << "\n";
  out << "F1 spontaneous  " << fmt(r.f1_spontaneous.mean) << " +/- " << fmt(r.f1_spontaneous.stddev) << "\n";
  out << "pooled AUC      " << fmt(r.pooled_auc) << "\n";
  if (!r.languages.empty()) {
    out << "\nlanguage group        episodes  mean-fold AUC  pooled AUC\n";
    for (const auto& l : r.languages) {
      char line[160];
      std::snprintf(line, sizeof line, "%-20s  %-8zu  %-13s  %s\n", l.group.c_str(), l.episodes,
                    fmt(l.mean_fold_auc).c_str(), fmt(l.pooled_auc).c_str());
      out << line;
    }
  }
  return out.str();
}

std::string histogram_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "bin_start,count_scripted,count_spontaneous\n";
  for (const auto& h : r.histogram) out << fmt(h.bin_start, 2) << ',' << h.scripted << ',' << h.spontaneous << '\n';
  return out.str();
}

std::string predictions_to_jsonl(std::span<const PredictionRecord> records) {
  std::ostringstream out;
  for (const auto& r : records) {
    out << json{{"episode_id", r.episode_id},
                {"fold", r.fold},
                {"label", std::string(label_name(r.label))},
                {"language", r.language},
                {"episode_score", r.episode_score},
                {"snippet_scores", r.snippet_scores}}
               .dump()
        << '\n';
  }
  return out.str();
}

std::vector<PredictionRecord> predictions_from_jsonl(std::string_view text) {
  std::vector<PredictionRecord> out;
  for (const auto& line : detail::lines(text)) {
    if (detail::trim(line).empty()) continue;
    const auto j = json::parse(line);
    PredictionRecord r;
    r.episode_id = j.at("episode_id").get<std::string>();
    r.fold = j.at("fold").get<int>();
    r.label = parse_label(j.at("label").get<std::string>());
    r.language = j.at("language").get<std::string>();
    r.episode_score = j.at("episode_score").get<double>();
    r.snippet_scores = j.at("snippet_scores").get<std::vector<double>>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ssc
