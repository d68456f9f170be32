#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ssc/corpus.hpp"
#include "ssc/error.hpp"
#include "ssc/rng.hpp"

using namespace ssc;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  const char* env = std::getenv("SSC_TEST_TMP");
  fs::path p = fs::path(env ? env : fs::temp_directory_path().string()) / "corpus";
  fs::create_directories(p);
  return p;
}

EpisodeRecord rec(std::string id, std::string cat, std::string fmt, std::string lang,
                  Label label = Label::kSpontaneous) {
  EpisodeRecord r;
  r.episode_id = std::move(id);
  r.category = std::move(cat);
  r.format = std::move(fmt);
  r.language = std::move(lang);
  r.label = label;
  return r;
}

std::vector<std::size_t> fold_sizes(const FoldAssignment& f) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(f.k), 0);
  for (const auto& [id, fold] : f.assignment) ++sizes[static_cast<std::size_t>(fold)];
  return sizes;
}

}  // namespace

TEST_CASE("labels from the podcast format mapping") {
  const auto m = LabelMapping::podcast_default();
  const auto r = parse_manifest(
      "episode_id\tformat\tlanguage\n"
      "a\tDiscussion\tEnglish\n"
      "b\tInterview\tenglish\n"
      "c\tScripted narrative\tSwedish\n"
      "d\tImprov\tgerman\n"
      "e\tCall-ins\thindi\n",
      m);
  REQUIRE(r.records.size() == 4);
  CHECK(r.records[0].label == Label::kSpontaneous);
  CHECK(r.records[0].language == "english");
  CHECK(r.records[1].label == Label::kScripted);
  CHECK(r.dropped_ambiguous == 1);
  CHECK(r.input_rows == 5);
  CHECK(r.records.size() + r.dropped_ambiguous + r.errors.size() == r.input_rows);
}

TEST_CASE("direct label wins and unknown formats are per-row errors") {
  const auto r = parse_manifest(
      "episode_id,label,format,language\n"
      "a,scripted,,english\n"
      "b,,Mystery format,english\n"
      "c,spontaneous,Scripted narrative,english\n",
      LabelMapping::podcast_default());
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].label == Label::kScripted);
  CHECK(r.records[1].label == Label::kSpontaneous);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].episode_id == "b");
  CHECK(r.errors[0].message.find("Mystery format") != std::string::npos);
  CHECK(r.records.size() + r.dropped_ambiguous + r.errors.size() == r.input_rows);
}

TEST_CASE("duplicate episode ids reject the manifest") {
  CHECK_THROWS_AS(parse_manifest("episode_id\tlabel\tlanguage\na\tscripted\ten\na\tspontaneous\ten\n",
                                 LabelMapping::podcast_default()),
                  InvalidArgument);
}

TEST_CASE("missing required columns are rejected") {
  CHECK_THROWS(parse_manifest("episode_id\tlabel\nx\tscripted\n", LabelMapping::podcast_default()));
  CHECK_THROWS(parse_manifest("episode_id\tlanguage\nx\ten\n", LabelMapping::podcast_default()));
}

TEST_CASE("line-delimited JSON manifests and path resolution") {
  const auto dir = tmp_dir();
  const auto path = dir / "m.jsonl";
  {
    std::ofstream f(path);
    f << R"({"episode_id": "j1", "format": "Discussion", "language": "Tamil", "audio_path": "a/j1.wav"})" << '\n';
    f << R"({"episode_id": "j2", "label": "scripted", "language": "catalan", "category": "news"})" << '\n';
  }
  const auto r = load_manifest(path, LabelMapping::podcast_default());
  REQUIRE(r.records.size() == 2);
  CHECK(fs::path(r.records[0].audio_path) == dir / "a/j1.wav");
  CHECK(r.records[1].category == "news");
  CHECK(r.records[1].label == Label::kScripted);
}

TEST_CASE("manifest write/load round trip") {
  std::vector<EpisodeRecord> recs = {rec("x1", "comedy", "Improv", "english"),
                                     rec("x2", "news", "Scripted narrative", "hindi", Label::kScripted)};
  recs[0].audio_path = "/abs/x1.wav";
  const auto path = tmp_dir() / "rt.tsv";
  write_manifest(path, recs);
  const auto back = load_manifest(path, LabelMapping::podcast_default());
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0].episode_id == "x1");
  CHECK(back.records[0].audio_path == "/abs/x1.wav");
  CHECK(back.records[1].label == Label::kScripted);
  CHECK(back.records[1].format == "Scripted narrative");
}

TEST_CASE("label mapping config") {
  const auto m = LabelMapping::parse(
      "# cross-domain styles\n"
      "Read speech = scripted\n"
      "conversation = spontaneous\n"
      "mixed = ambiguous  # excluded\n");
  CHECK(m.size() == 3);
  CHECK(m.lookup("read SPEECH") == FormatClass::kScripted);
  CHECK(m.lookup("Conversation") == FormatClass::kSpontaneous);
  CHECK(m.lookup("mixed") == FormatClass::kAmbiguous);
  CHECK_FALSE(m.lookup("other").has_value());
  CHECK_THROWS_AS(LabelMapping::parse("a = scripted\nA = spontaneous\n"), InvalidArgument);
  CHECK_THROWS_AS(LabelMapping::parse("a = maybe\n"), InvalidArgument);
  CHECK_THROWS_AS(LabelMapping::parse("no equals sign\n"), InvalidArgument);
}

TEST_CASE("stratified_kfold: 10 episodes in 2 strata of 5, k = 5") {
  std::vector<EpisodeRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(rec("a" + std::to_string(i), "c1", "Discussion", "english"));
  for (int i = 0; i < 5; ++i) recs.push_back(rec("b" + std::to_string(i), "c2", "Discussion", "english"));
  const auto f = stratified_kfold(recs, 5, 1);
  for (int fold = 0; fold < 5; ++fold) {
    const auto eps = f.episodes_in(fold);
    REQUIRE(eps.size() == 2);
    CHECK(eps[0][0] != eps[1][0]);  // one per stratum
  }
}

TEST_CASE("stratified_kfold: 7 episodes in one stratum") {
  std::vector<EpisodeRecord> recs;
  for (int i = 0; i < 7; ++i) recs.push_back(rec("e" + std::to_string(i), "c", "f", "l"));
  auto sizes = fold_sizes(stratified_kfold(recs, 5, 9));
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{1, 1, 1, 2, 2});
}

TEST_CASE("stratified_kfold determinism and seed sensitivity") {
  std::vector<EpisodeRecord> recs;
  for (int i = 0; i < 40; ++i) recs.push_back(rec("e" + std::to_string(i), i % 2 ? "x" : "y", "f", "l"));
  const auto a = stratified_kfold(recs, 5, 123);
  const auto b = stratified_kfold(recs, 5, 123);
  const auto c = stratified_kfold(recs, 5, 124);
  CHECK(a.assignment == b.assignment);
  CHECK(a.assignment != c.assignment);
  // Input order does not matter.
  auto shuffled = recs;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(stratified_kfold(shuffled, 5, 123).assignment == a.assignment);
}

TEST_CASE("stratified_kfold errors") {
  std::vector<EpisodeRecord> recs = {rec("a", "c", "f", "l"), rec("b", "c", "f", "l")};
  CHECK_THROWS_AS(stratified_kfold(recs, 3, 0), InvalidArgument);
  CHECK_THROWS_AS(stratified_kfold(recs, 1, 0), InvalidArgument);
  CHECK_THROWS_AS(stratified_kfold({}, 2, 0), InvalidArgument);
  CHECK_NOTHROW(stratified_kfold(recs, 2, 0));
}

TEST_CASE("stratified_kfold: singleton strata fill the smallest folds") {
  std::vector<EpisodeRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(rec("s" + std::to_string(i), "cat" + std::to_string(i), "f", "l"));
  const auto sizes = fold_sizes(stratified_kfold(recs, 5, 3));
  CHECK(sizes == std::vector<std::size_t>{1, 1, 1, 1, 1});
}

TEST_CASE("stratified_kfold: per-stratum spread <= 1 on randomized manifests") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(6));
    const std::size_t n = static_cast<std::size_t>(k) + rng.below(60);
    std::vector<EpisodeRecord> recs;
    for (std::size_t i = 0; i < n; ++i) {
      recs.push_back(rec("e" + std::to_string(i), "c" + std::to_string(rng.below(3)), "f" + std::to_string(rng.below(2)),
                         "l" + std::to_string(rng.below(3))));
    }
    const auto f = stratified_kfold(recs, k, rng.next());
    REQUIRE(f.assignment.size() == n);
    std::map<std::string, std::vector<int>> per;
    for (const auto& r : recs) {
      auto& v = per[stratum_key(r)];
      v.resize(static_cast<std::size_t>(k), 0);
      ++v[static_cast<std::size_t>(f.fold_of(r.episode_id))];
    }
    for (const auto& [key, counts] : per) {
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      CHECK(*hi - *lo <= 1);
    }
  }
}

TEST_CASE("fold file round trip") {
  std::vector<EpisodeRecord> recs;
  for (int i = 0; i < 12; ++i) recs.push_back(rec("e" + std::to_string(i), "c", "f", "l"));
  const auto f = stratified_kfold(recs, 4, 7);
  const auto path = tmp_dir() / "folds.tsv";
  write_folds(path, f);
  const auto g = read_folds(path);
  CHECK(g.k == 4);
  CHECK(g.assignment == f.assignment);
  CHECK_THROWS(f.fold_of("nope"));
}

TEST_CASE("stratum key uses the label when format is missing") {
  auto a = rec("a", "c", "", "l", Label::kScripted);
  auto b = rec("b", "c", "", "l", Label::kSpontaneous);
  CHECK(stratum_key(a) != stratum_key(b));
}

TEST_CASE("group_language examples") {
  const auto g = LanguageGroup::builtin_default();
  CHECK(g.group_language("hindi") == "indo-aryan");
  CHECK(g.group_language("bengali") == "indo-aryan");
  CHECK(g.group_language("telugu") == "dravidian");
  CHECK(g.group_language("tamil") == "dravidian");
  CHECK(g.group_language("filipino") == "malayo-polynesian");
  CHECK(g.group_language("tagalog") == "malayo-polynesian");
  CHECK(g.group_language("filipino/tagalog") == "malayo-polynesian");
  CHECK(g.group_language("indonesian") == "malayo-polynesian");
  CHECK_FALSE(g.group_language("catalan").has_value());
  CHECK(g.group_language("swedish") == "swedish");
  CHECK(g.group_language("  Hindi ") == "indo-aryan");
  // Idempotent: a group name maps to itself.
  for (const char* lang : {"hindi", "tamil", "indonesian", "swedish"}) {
    const auto once = *g.group_language(lang);
    CHECK(g.group_language(once) == once);
  }
}

TEST_CASE("language group rules from text") {
  const auto g = LanguageGroup::parse(
      "# families\n"
      "swedish/norwegian = scandinavian\n"
      "exclude welsh\n");
  CHECK(g.group_language("norwegian") == "scandinavian");
  CHECK(g.group_language("swedish") == "scandinavian");
  CHECK_FALSE(g.group_language("welsh").has_value());
  CHECK(g.group_language("hindi") == "hindi");
  CHECK_THROWS(LanguageGroup::parse("nonsense line\n"));
  CHECK(normalize_language("  Brazilian   Portuguese ") == "brazilian portuguese");
}
