#include "ssc/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "file_util.hpp"
#include "ssc/error.hpp"
#include "ssc/rng.hpp"
#include "text_util.hpp"

namespace ssc {

using detail::lower;
using detail::trim;

Label parse_label(std::string_view text) {
  const auto t = lower(trim(text));
  if (t == "scripted") return Label::kScripted;
  if (t == "spontaneous") return Label::kSpontaneous;
  throw InvalidArgument("invalid label '" + std::string(text) + "'");
}

std::string_view label_name(Label label) {
  return label == Label::kScripted ? "scripted" : "spontaneous";
}

// ---------------------------------------------------------------------------
// LabelMapping

namespace {

std::string mapping_key(std::string_view format) {
  std::string out;
  bool space = false;
  for (char c : lower(trim(format))) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

FormatClass parse_format_class(std::string_view text) {
  const auto t = lower(trim(text));
  if (t == "scripted") return FormatClass::kScripted;
  if (t == "spontaneous") return FormatClass::kSpontaneous;
  if (t == "ambiguous") return FormatClass::kAmbiguous;
  throw InvalidArgument("label mapping: expected scripted|spontaneous|ambiguous, got '" +
                        std::string(text) + "'");
}

}  // namespace

LabelMapping LabelMapping::podcast_default() {
  LabelMapping m;
  m.add("Scripted narrative", FormatClass::kScripted);
  m.add("Scripted non-fiction", FormatClass::kScripted);
  m.add("Blabbercast", FormatClass::kSpontaneous);
  m.add("Discussion", FormatClass::kSpontaneous);
  m.add("Improv", FormatClass::kSpontaneous);
  m.add("Call-ins", FormatClass::kSpontaneous);
  m.add("Interview", FormatClass::kAmbiguous);
  m.add("Soundscape", FormatClass::kAmbiguous);
  return m;
}

LabelMapping LabelMapping::load(const std::filesystem::path& path) {
  return parse(detail::read_text(path));
}

LabelMapping LabelMapping::parse(std::string_view text) {
  LabelMapping m;
  std::size_t line_no = 0;
  for (const auto& raw : detail::lines(text)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.rfind('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("label mapping line " + std::to_string(line_no) + ": missing '='");
    }
    m.add(line.substr(0, eq), parse_format_class(line.substr(eq + 1)));
  }
  return m;
}

void LabelMapping::add(std::string_view format, FormatClass cls) {
  auto key = mapping_key(format);
  if (key.empty()) throw InvalidArgument("label mapping: empty format name");
  if (!entries_.emplace(key, cls).second) {
    throw InvalidArgument("label mapping: duplicate format '" + std::string(format) + "'");
  }
}

std::optional<FormatClass> LabelMapping::lookup(std::string_view format) const {
  auto it = entries_.find(mapping_key(format));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Manifest

std::string normalize_language(std::string_view language) { return mapping_key(language); }

namespace {

using Row = std::map<std::string, std::string>;

std::vector<Row> parse_tabular(const std::vector<std::string>& lines) {
  std::vector<Row> rows;
  auto it = std::find_if(lines.begin(), lines.end(),
                         [](const std::string& l) { return !trim(l).empty(); });
  if (it == lines.end()) return rows;
  const char sep = it->find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> header;
  for (auto& h : detail::split(*it, sep)) header.push_back(lower(trim(h)));
  auto has = [&](const char* c) { return std::find(header.begin(), header.end(), c) != header.end(); };
  for (const char* c : {"episode_id", "language"}) {
    if (!has(c)) throw InvalidArgument(std::string("manifest: missing required column '") + c + "'");
  }
  if (!has("label") && !has("format")) throw InvalidArgument("manifest: needs a 'label' or 'format' column");
  for (++it; it != lines.end(); ++it) {
    if (trim(*it).empty()) continue;
    auto cells = detail::split(*it, sep);
    Row row;
    for (std::size_t i = 0; i < header.size(); ++i) {
      row[header[i]] = i < cells.size() ? std::string(trim(cells[i])) : std::string();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Row> parse_jsonl(const std::vector<std::string>& lines) {
  std::vector<Row> rows;
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidArgument("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw InvalidArgument("manifest line " + std::to_string(line_no) + ": expected object");
    }
    Row row;
    for (auto& [key, value] : obj.items()) {
      row[lower(key)] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string field(const Row& row, const char* name) {
  auto it = row.find(name);
  return it == row.end() ? std::string() : std::string(trim(it->second));
}

}  // namespace

ManifestLoadResult parse_manifest(std::string_view text, const LabelMapping& mapping) {
  const auto all_lines = detail::lines(text);
  auto first = std::find_if(all_lines.begin(), all_lines.end(),
                            [](const std::string& l) { return !trim(l).empty(); });
  const bool jsonl = first != all_lines.end() && trim(*first).front() == '{';
  const auto rows = jsonl ? parse_jsonl(all_lines) : parse_tabular(all_lines);

  ManifestLoadResult result;
  result.input_rows = rows.size();
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    EpisodeRecord rec;
    rec.episode_id = field(row, "episode_id");
    rec.language = normalize_language(field(row, "language"));
    rec.format = field(row, "format");
    rec.category = field(row, "category");
    rec.audio_path = field(row, "audio_path");
    rec.feature_path = field(row, "feature_path");
    const auto direct = field(row, "label");

    auto fail = [&](std::string msg) {
      result.errors.push_back({i + 1, rec.episode_id, std::move(msg)});
    };
    if (rec.episode_id.empty()) {
      fail("missing episode_id");
      continue;
    }
    if (!seen.insert(rec.episode_id).second) {
      throw InvalidArgument("manifest: duplicate episode_id '" + rec.episode_id + "'");
    }
    if (rec.language.empty()) {
      fail("missing language");
      continue;
    }
    if (!direct.empty()) {
      try {
        rec.label = parse_label(direct);
      } catch (const InvalidArgument&) {
        fail("invalid label '" + direct + "'");
        continue;
      }
    } else if (rec.format.empty()) {
      fail("neither label nor format given");
      continue;
    } else {
      auto cls = mapping.lookup(rec.format);
      if (!cls) {
        fail("unknown format '" + rec.format + "'");
        continue;
      }
      if (*cls == FormatClass::kAmbiguous) {
        ++result.dropped_ambiguous;
        continue;
      }
      rec.label = *cls == FormatClass::kScripted ? Label::kScripted : Label::kSpontaneous;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

ManifestLoadResult load_manifest(const std::filesystem::path& path, const LabelMapping& mapping) {
  auto result = parse_manifest(detail::read_text(path), mapping);
  // Relative paths inside a manifest are resolved against its directory.
  const auto base = path.parent_path();
  for (auto& rec : result.records) {
    for (auto* p : {&rec.audio_path, &rec.feature_path}) {
      if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
    }
  }
  return result;
}

void write_manifest(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records) {
  std::ostringstream out;
  out << "episode_id\tlabel\tlanguage\tcategory\tformat\taudio_path\tfeature_path\n";
  for (const auto& r : records) {
    out << r.episode_id << '\t' << label_name(r.label) << '\t' << r.language << '\t' << r.category
        << '\t' << r.format << '\t' << r.audio_path << '\t' << r.feature_path << '\n';
  }
  detail::write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// Folds

int FoldAssignment::fold_of(const std::string& episode_id) const {
  auto it = assignment.find(episode_id);
  if (it == assignment.end()) throw InvalidArgument("no fold for episode '" + episode_id + "'");
  return it->second;
}

std::vector<std::string> FoldAssignment::episodes_in(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignment) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

std::string stratum_key(const EpisodeRecord& record) {
  const std::string format =
      record.format.empty() ? "label:" + std::string(label_name(record.label)) : lower(record.format);
  return lower(record.category) + '\x1f' + format + '\x1f' + record.language;
}

FoldAssignment stratified_kfold(const std::vector<EpisodeRecord>& records, int k,
                                std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("stratified_kfold: k must be >= 2");
  if (records.empty()) throw InvalidArgument("stratified_kfold: no records");
  if (static_cast<std::size_t>(k) > records.size()) {
    throw InvalidArgument("stratified_kfold: k=" + std::to_string(k) + " exceeds episode count " +
                          std::to_string(records.size()));
  }

  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& r : records) strata[stratum_key(r)].push_back(r.episode_id);

  Rng rng(seed);
  FoldAssignment out;
  out.k = k;
  std::vector<std::size_t> fold_size(static_cast<std::size_t>(k), 0);
  for (auto& [key, ids] : strata) {
    // Sort first so the result does not depend on manifest row order.
    std::sort(ids.begin(), ids.end());
    rng.shuffle(std::span<std::string>(ids));

    const std::size_t n = ids.size();
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fold_size[a] < fold_size[b]; });

    std::vector<int> slots;
    slots.reserve(n);
    for (int f = 0; f < k; ++f) slots.insert(slots.end(), base, f);
    for (std::size_t e = 0; e < extra; ++e) slots.push_back(order[e]);

    for (std::size_t i = 0; i < n; ++i) {
      out.assignment[ids[i]] = slots[i];
      ++fold_size[static_cast<std::size_t>(slots[i])];
    }
  }
  return out;
}

void write_folds(const std::filesystem::path& path, const FoldAssignment& folds) {
  std::ostringstream out;
  out << "# k=" << folds.k << "\n";
  out << "episode_id\tfold\n";
  for (const auto& [id, f] : folds.assignment) out << id << '\t' << f << '\n';
  detail::write_text(path, out.str());
}

FoldAssignment read_folds(const std::filesystem::path& path) {
  FoldAssignment out;
  out.k = 0;
  bool header = false;
  for (const auto& raw : detail::lines(detail::read_text(path))) {
    auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("# k=")) out.k = std::stoi(std::string(line.substr(4)));
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    auto cells = detail::split(line, '\t');
    if (cells.size() != 2) throw InvalidArgument("folds file: malformed line '" + raw + "'");
    out.assignment[cells[0]] = std::stoi(cells[1]);
  }
  if (out.k < 2) throw InvalidArgument("folds file: missing or invalid k");
  for (const auto& [id, f] : out.assignment) {
    if (f < 0 || f >= out.k) throw InvalidArgument("folds file: fold out of range for " + id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Language grouping

namespace {

std::vector<std::string> spellings(std::string_view language) {
  const auto norm = normalize_language(language);
  std::vector<std::string> out{norm};
  if (norm.find('/') != std::string::npos) {
    for (auto& part : detail::split(norm, '/')) {
      auto p = std::string(trim(part));
      if (!p.empty()) out.push_back(p);
    }
  }
  return out;
}

}  // namespace

LanguageGroup LanguageGroup::builtin_default() {
  LanguageGroup g;
  g.add_rule("bengali", "indo-aryan");
  g.add_rule("hindi", "indo-aryan");
  g.add_rule("telugu", "dravidian");
  g.add_rule("tamil", "dravidian");
  g.add_rule("filipino/tagalog", "malayo-polynesian");
  g.add_rule("indonesian", "malayo-polynesian");
  g.exclude("catalan");
  return g;
}

LanguageGroup LanguageGroup::load(const std::filesystem::path& path) {
  return parse(detail::read_text(path));
}

LanguageGroup LanguageGroup::parse(std::string_view text) {
  LanguageGroup g;
  std::size_t line_no = 0;
  for (const auto& raw : detail::lines(text)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (auto eq = line.find('='); eq != std::string_view::npos) {
      g.add_rule(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } else if (line.starts_with("exclude ")) {
      g.exclude(trim(line.substr(8)));
    } else {
      throw InvalidArgument("language groups line " + std::to_string(line_no) +
                            ": expected 'language = group' or 'exclude language'");
    }
  }
  return g;
}

void LanguageGroup::add_rule(std::string_view language, std::string_view group) {
  const auto target = normalize_language(group);
  if (target.empty()) throw InvalidArgument("language groups: empty group name");
  for (auto& s : spellings(language)) rules_[s] = target;
}

void LanguageGroup::exclude(std::string_view language) {
  for (auto& s : spellings(language)) exclusions_.insert(s);
}

std::optional<std::string> LanguageGroup::group_language(std::string_view language) const {
  const auto norm = normalize_language(language);
  if (exclusions_.contains(norm)) return std::nullopt;
  auto it = rules_.find(norm);
  return it == rules_.end() ? norm : it->second;
}

}  // namespace ssc
