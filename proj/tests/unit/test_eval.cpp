#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssc/error.hpp"
#include "ssc/eval.hpp"
#include "ssc/rng.hpp"

using namespace ssc;

namespace {

double auc_oracle(const std::vector<int>& y, const std::vector<double>& s) {
  double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / static_cast<double>(pairs);
}

double f1(int tp, int fp, int fn) {
  const int denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * tp / denom;
}

PredictionRecord pred(std::string id, double score, Label label, int fold, std::string lang) {
  PredictionRecord r;
  r.episode_id = std::move(id);
  r.snippet_scores = {score};
  r.episode_score = score;
  r.label = label;
  r.fold = fold;
  r.language = std::move(lang);
  return r;
}

}  // namespace

TEST_CASE("aggregate examples") {
  const std::vector<double> odd = {0.2, 0.9, 0.4}, even = {0.1, 0.3};
  CHECK(aggregate(odd) == 0.4);
  CHECK(aggregate(even, Aggregation::kMedian) == doctest::Approx(0.2));
  CHECK(aggregate(even, Aggregation::kMean) == doctest::Approx(0.2));
  CHECK_THROWS_AS(aggregate(std::vector<double>{}), InvalidArgument);
  CHECK(parse_aggregation("mean") == Aggregation::kMean);
  CHECK(aggregation_name(Aggregation::kMedian) == "median");
  CHECK_THROWS(parse_aggregation("mode"));
}

TEST_CASE("aggregate stays within [min, max]") {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(1 + rng.below(12));
    for (auto& x : v) x = rng.uniform();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    for (auto mode : {Aggregation::kMedian, Aggregation::kMean}) {
      const double a = aggregate(v, mode);
      CHECK((a >= *lo && a <= *hi));
    }
  }
}

TEST_CASE("roc_auc examples") {
  CHECK(roc_auc(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.9, 0.1, 0.8, 0.4}) == 1.0);
  CHECK(roc_auc(std::vector<int>{1, 0}, std::vector<double>{0.5, 0.5}) == 0.5);
  CHECK(roc_auc(std::vector<int>{0, 1}, std::vector<double>{0.9, 0.1}) == 0.0);
  try {
    roc_auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2});
    FAIL("expected error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("undefined AUC") != std::string::npos);
  }
  CHECK_THROWS(roc_auc(std::vector<int>{1, 0}, std::vector<double>{0.1}));
}

TEST_CASE("roc_auc equals the pairwise oracle, ties included") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      s[i] = t % 2 ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(std::abs(roc_auc(y, s) - auc_oracle(y, s)) <= 1e-12);
    // Strictly increasing transform leaves AUC unchanged.
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(roc_auc(y, e) == roc_auc(y, s));
  }
}

TEST_CASE("f1_per_class examples") {
  const auto a = f1_per_class(std::vector<int>{1, 1, 0, 0}, std::vector<double>{0.9, 0.2, 0.1, 0.1});
  CHECK(a.scripted == doctest::Approx(2.0 / 3.0));
  CHECK(a.spontaneous == doctest::Approx(0.8));
  const auto b = f1_per_class(std::vector<int>{1, 0}, std::vector<double>{0.5, 0.49});
  CHECK(b.scripted == 1.0);
  CHECK(b.spontaneous == 1.0);
  // Nothing scripted predicted and none present.
  const auto c = f1_per_class(std::vector<int>{0, 0}, std::vector<double>{0.1, 0.2});
  CHECK(c.scripted == 0.0);
  CHECK(c.spontaneous == 1.0);
}

TEST_CASE("f1_per_class equals a confusion-matrix oracle") {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> y(50);
    std::vector<double> s(50);
    for (std::size_t i = 0; i < 50; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      s[i] = rng.uniform();
    }
    int tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      const bool p = s[i] >= 0.5;
      tp += p && y[i] == 1;
      fp += p && y[i] == 0;
      fn += !p && y[i] == 1;
      tn += !p && y[i] == 0;
    }
    const auto r = f1_per_class(y, s);
    CHECK(r.scripted == f1(tp, fp, fn));
    CHECK(r.spontaneous == f1(tn, fn, fp));
  }
}

TEST_CASE("cross_val_report mean and population std") {
  std::vector<FoldMetrics> same(5);
  for (int f = 0; f < 5; ++f) same[f] = {f, 10, 0.9, 0.8, 0.7};
  auto r = cross_val_report(same);
  CHECK(r.auc.mean == doctest::Approx(0.9));
  CHECK(r.auc.stddev == doctest::Approx(0.0));
  CHECK(r.folds == 5);

  std::vector<FoldMetrics> two = {{0, 4, 1.0, 1.0, 1.0}, {1, 4, 0.8, 0.6, 0.5}};
  r = cross_val_report(two);
  CHECK(r.auc.mean == doctest::Approx(0.9));
  CHECK(r.auc.stddev == doctest::Approx(0.1));
  CHECK(r.f1_scripted.stddev == doctest::Approx(0.2));

  // Undefined fold AUC is skipped for the AUC summary only.
  two.push_back({2, 3, std::nullopt, 0.0, 1.0});
  r = cross_val_report(two);
  CHECK(r.auc.count == 2);
  CHECK(r.f1_spontaneous.count == 3);
}

TEST_CASE("per-language table applies grouping and exclusions") {
  const auto rules = LanguageGroup::builtin_default();
  std::vector<PredictionRecord> recs = {
      pred("a", 0.9, Label::kScripted, 0, "hindi"),    pred("b", 0.2, Label::kSpontaneous, 0, "bengali"),
      pred("c", 0.8, Label::kScripted, 1, "bengali"),  pred("d", 0.3, Label::kSpontaneous, 1, "hindi"),
      pred("e", 0.1, Label::kScripted, 0, "catalan"),  pred("f", 0.9, Label::kSpontaneous, 0, "catalan"),
  };
  const auto rows = per_language_auc(recs, rules, 2);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].group == "indo-aryan");
  CHECK(rows[0].episodes == 4);
  REQUIRE(rows[0].fold_auc.size() == 2);
  CHECK(rows[0].fold_auc[0] == 1.0);
  CHECK(rows[0].mean_fold_auc == 1.0);
  CHECK(rows[0].pooled_auc == 1.0);
}

TEST_CASE("per-language: one class in a fold is undefined there") {
  std::vector<PredictionRecord> recs = {
      pred("a", 0.9, Label::kScripted, 0, "swedish"),
      pred("b", 0.2, Label::kSpontaneous, 0, "swedish"),
      pred("c", 0.8, Label::kScripted, 1, "swedish"),
  };
  const auto rows = per_language_auc(recs, LanguageGroup::builtin_default(), 2);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].fold_auc[0] == 1.0);
  CHECK_FALSE(rows[0].fold_auc[1].has_value());
  CHECK(rows[0].mean_fold_auc == 1.0);
}

TEST_CASE("pooled single-language AUC equals the overall AUC") {
  Rng rng(8);
  std::vector<PredictionRecord> recs;
  std::vector<int> y;
  std::vector<double> s;
  for (int i = 0; i < 40; ++i) {
    const Label l = i % 2 ? Label::kScripted : Label::kSpontaneous;
    const double score = rng.uniform();
    recs.push_back(pred("e" + std::to_string(i), score, l, i % 5, "english"));
    y.push_back(l == Label::kScripted);
    s.push_back(score);
  }
  const auto report = build_report(recs, 5, LanguageGroup::builtin_default(), Aggregation::kMedian, 1, "handcrafted-v1");
  REQUIRE(report.languages.size() == 1);
  CHECK(*report.languages[0].pooled_auc == doctest::Approx(roc_auc(y, s)).epsilon(1e-12));
  CHECK(*report.pooled_auc == doctest::Approx(roc_auc(y, s)).epsilon(1e-12));
}

TEST_CASE("histogram bins") {
  std::vector<PredictionRecord> recs = {pred("a", 0.0, Label::kScripted, 0, "x"), pred("b", 0.049, Label::kScripted, 0, "x"),
                                        pred("c", 0.05, Label::kSpontaneous, 0, "x"),
                                        pred("d", 1.0, Label::kSpontaneous, 0, "x")};
  const auto h = score_histogram(recs);
  REQUIRE(h.size() == 20);
  CHECK(h[0].scripted == 2);
  CHECK(h[1].spontaneous == 1);
  CHECK(h[19].spontaneous == 1);
  CHECK(h[19].bin_start == doctest::Approx(0.95));
}

TEST_CASE("report and predictions round trip") {
  Rng rng(31);
  std::vector<PredictionRecord> recs;
  for (int i = 0; i < 30; ++i) {
    auto r = pred("ep" + std::to_string(i), 0, i % 3 ? Label::kScripted : Label::kSpontaneous, i % 3,
                  i % 2 ? "hindi" : "tamil");
    r.snippet_scores = {rng.uniform(), rng.uniform(), rng.uniform()};
    r.episode_score = aggregate(r.snippet_scores);
    recs.push_back(r);
  }
  const auto report = build_report(recs, 3, LanguageGroup::builtin_default(), Aggregation::kMean, 42, "yamnet-topk");
  const auto back = report_from_jsonl(report_to_jsonl(report));
  CHECK(report_to_jsonl(back) == report_to_jsonl(report));
  CHECK(back.seed == 42);
  CHECK(back.aggregation == "mean");
  CHECK(back.schema_id == "yamnet-topk");
  CHECK(back.auc.mean == report.auc.mean);
  CHECK(back.languages.size() == 2);
  CHECK(report_to_text(report).find("dravidian") != std::string::npos);
  CHECK(histogram_csv(report).rfind("bin_start,count_scripted,count_spontaneous", 0) == 0);

  const auto preds = predictions_from_jsonl(predictions_to_jsonl(recs));
  REQUIRE(preds.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(preds[i].episode_id == recs[i].episode_id);
    CHECK(preds[i].snippet_scores == recs[i].snippet_scores);
    CHECK(preds[i].episode_score == recs[i].episode_score);
    CHECK(preds[i].label == recs[i].label);
    CHECK(preds[i].fold == recs[i].fold);
  }
}
