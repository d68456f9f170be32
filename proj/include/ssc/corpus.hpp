#pragma once

// Corpus manifests, label assignment, language grouping and episode-level
// stratified fold splitting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ssc {

enum class Label : std::uint8_t { kScripted, kSpontaneous };

/// Parses "scripted" / "spontaneous" (case-insensitive). Throws on anything else.
Label parse_label(std::string_view text);
std::string_view label_name(Label label);

/// Scripted is the positive class everywhere (score -> 1 means scripted).
inline int positive(Label label) { return label == Label::kScripted ? 1 : 0; }

struct EpisodeRecord {
  std::string episode_id;
  std::string audio_path;
  std::string feature_path;
  Label label = Label::kSpontaneous;
  std::string language;
  std::string category;
  std::string format;
};

enum class FormatClass : std::uint8_t { kScripted, kSpontaneous, kAmbiguous };

/// Maps corpus-specific format / style names onto the two classes or "ambiguous".
/// Keys are matched after trimming and lowercasing.
class LabelMapping {
 public:
  LabelMapping() = default;

  /// The podcast format scheme: scripted narrative / non-fiction are scripted;
  /// blabbercast, discussion, improv and call-ins are spontaneous; interview
  /// and soundscape are ambiguous.
  static LabelMapping podcast_default();

  /// Reads `format = scripted|spontaneous|ambiguous` lines; `#` starts a comment.
  static LabelMapping load(const std::filesystem::path& path);
  static LabelMapping parse(std::string_view text);

  /// Throws InvalidArgument if `format` is already present.
  void add(std::string_view format, FormatClass cls);
  std::optional<FormatClass> lookup(std::string_view format) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, FormatClass> entries_;
};

struct ManifestRowError {
  std::size_t row = 0;  // 1-based data row number
  std::string episode_id;
  std::string message;
};

struct ManifestLoadResult {
  std::vector<EpisodeRecord> records;
  std::size_t dropped_ambiguous = 0;
  std::vector<ManifestRowError> errors;
  std::size_t input_rows = 0;
};

/// Loads a tabular (header row; tab- or comma-separated) or line-delimited
/// JSON manifest. Required: `episode_id`, `language`, and one of `label` or
/// `format`. A direct `label` wins over the format mapping. Rows whose format
/// maps to ambiguous are dropped and counted; unresolvable rows are reported in
/// `errors`. A duplicate episode_id rejects the whole file.
ManifestLoadResult load_manifest(const std::filesystem::path& path, const LabelMapping& mapping);
ManifestLoadResult parse_manifest(std::string_view text, const LabelMapping& mapping);

/// Writes records as a tab-separated manifest with a header row.
void write_manifest(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records);

/// Lowercases, trims and collapses internal whitespace.
std::string normalize_language(std::string_view language);

struct FoldAssignment {
  int k = 5;
  std::map<std::string, int> assignment;

  int fold_of(const std::string& episode_id) const;
  std::vector<std::string> episodes_in(int fold) const;
};

/// Joint stratification key (category x format x language). When a record has
/// no format, its label stands in for the format component.
std::string stratum_key(const EpisodeRecord& record);

/// Episode-level stratified k-fold split. Within each stratum the episodes are
/// shuffled with `seed`; each fold receives floor(n/k) of them and the n mod k
/// remaining go to the folds holding the fewest episodes so far.
FoldAssignment stratified_kfold(const std::vector<EpisodeRecord>& records, int k, std::uint64_t seed);

void write_folds(const std::filesystem::path& path, const FoldAssignment& folds);
FoldAssignment read_folds(const std::filesystem::path& path);

/// Language-family grouping rules with exclusions.
class LanguageGroup {
 public:
  LanguageGroup() = default;

  /// bengali/hindi -> indo-aryan, telugu/tamil -> dravidian,
  /// filipino/tagalog/indonesian -> malayo-polynesian; catalan excluded.
  static LanguageGroup builtin_default();

  /// Lines `language = group` or `exclude language`; `#` comments. A language
  /// written with "/" (e.g. `filipino/tagalog`) registers every spelling.
  static LanguageGroup load(const std::filesystem::path& path);
  static LanguageGroup parse(std::string_view text);

  void add_rule(std::string_view language, std::string_view group);
  void exclude(std::string_view language);

  /// Group name, or nullopt when the language is excluded. Ungrouped languages
  /// map to themselves.
  std::optional<std::string> group_language(std::string_view language) const;

 private:
  std::map<std::string, std::string> rules_;
  std::set<std::string> exclusions_;
};

}  // namespace ssc
