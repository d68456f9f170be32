#include "ssc/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "byte_io.hpp"
#include "file_util.hpp"

namespace ssc {

namespace {

constexpr char kMagic[] = "SSF1";
// Payloads are capped at 2^31 floats (8 GiB) to reject corrupt headers early.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

using Code = FeatureFileError::Code;

void check_finite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("feature payload contains a non-finite value");
  }
}

}  // namespace

std::string encode_feature_file(const FeatureData& data) {
  const bool is_matrix = std::holds_alternative<FeatureMatrix>(data);
  const std::string& schema =
      is_matrix ? std::get<FeatureMatrix>(data).schema_id : std::get<FeatureVector>(data).schema_id;
  std::uint64_t dim0 = 0, dim1 = 1;
  std::span<const float> payload;
  if (is_matrix) {
    const auto& m = std::get<FeatureMatrix>(data);
    if (m.data.size() != m.rows * m.cols) throw InvalidArgument("feature matrix: data size != rows*cols");
    dim0 = m.rows;
    dim1 = m.cols;
    payload = m.data;
  } else {
    const auto& v = std::get<FeatureVector>(data);
    dim0 = v.values.size();
    payload = v.values;
  }
  if (dim0 == 0 || dim1 == 0) throw InvalidArgument("feature data must be non-empty");
  if (dim0 > std::numeric_limits<std::uint32_t>::max() || dim1 > std::numeric_limits<std::uint32_t>::max() ||
      dim0 * dim1 > kMaxElements) {
    throw InvalidArgument("feature data dimensions overflow the file header");
  }
  if (schema.size() > std::numeric_limits<std::uint16_t>::max()) throw InvalidArgument("schema_id too long");
  check_finite(payload);

  detail::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint16_t>(kFeatureFileVersion);
  w.put<std::uint8_t>(is_matrix ? 1 : 0);
  w.put<std::uint8_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dim0));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dim1));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(schema.size()));
  w.put_bytes(schema);
  w.put_floats(payload);
  return w.str();
}

FeatureData decode_feature_file(std::string_view bytes) {
  detail::ByteReader r(bytes);
  std::string magic;
  if (!r.get_bytes(4, magic) || magic != std::string_view(kMagic, 4)) {
    throw FeatureFileError(Code::kBadMagic, "bad magic");
  }
  std::uint16_t version = 0;
  std::uint8_t kind = 0, dtype = 0;
  std::uint32_t dim0 = 0, dim1 = 0;
  std::uint16_t schema_len = 0;
  std::string schema;
  if (!r.get(version) || !r.get(kind) || !r.get(dtype) || !r.get(dim0) || !r.get(dim1) || !r.get(schema_len) ||
      !r.get_bytes(schema_len, schema)) {
    throw FeatureFileError(Code::kTruncated, "truncated payload (header)");
  }
  if (version != kFeatureFileVersion) {
    throw FeatureFileError(Code::kUnsupported, "unsupported feature file version " + std::to_string(version));
  }
  if (dtype != 0) throw FeatureFileError(Code::kUnsupported, "unsupported dtype " + std::to_string(dtype));
  if (kind > 1) throw FeatureFileError(Code::kUnsupported, "unsupported kind " + std::to_string(kind));
  if (kind == 0 && dim1 != 1) throw FeatureFileError(Code::kUnsupported, "vector with dim1 != 1");
  const std::uint64_t elements = std::uint64_t{dim0} * dim1;
  if (dim0 == 0 || dim1 == 0 || elements > kMaxElements) {
    throw FeatureFileError(Code::kDimensionOverflow, "dimension overflow (" + std::to_string(dim0) + " x " +
                                                         std::to_string(dim1) + ")");
  }
  std::vector<float> payload;
  if (r.remaining() != elements * sizeof(float)) {
    if (r.remaining() < elements * sizeof(float)) {
      throw FeatureFileError(Code::kTruncated, "truncated payload: expected " +
                                                   std::to_string(elements * sizeof(float)) + " bytes, found " +
                                                   std::to_string(r.remaining()));
    }
    throw FeatureFileError(Code::kTruncated, "trailing bytes after payload");
  }
  r.get_floats(elements, payload);
  if (kind == 0) return FeatureVector{std::move(payload), std::move(schema)};
  FeatureMatrix m;
  m.rows = dim0;
  m.cols = dim1;
  m.data = std::move(payload);
  m.schema_id = std::move(schema);
  return m;
}

void write_feature_file(const std::filesystem::path& path, const FeatureData& data) {
  detail::write_text(path, encode_feature_file(data));
}

FeatureData read_feature_file(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = detail::read_text(path);
  } catch (const IoError& e) {
    throw FeatureFileError(Code::kIo, e.what());
  }
  return decode_feature_file(bytes);
}

FeatureVector read_feature_vector(const std::filesystem::path& path) {
  auto data = read_feature_file(path);
  if (auto* v = std::get_if<FeatureVector>(&data)) return std::move(*v);
  throw InvalidArgument("expected a vector feature file: " + path.string());
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  auto data = read_feature_file(path);
  if (auto* m = std::get_if<FeatureMatrix>(&data)) return std::move(*m);
  throw InvalidArgument("expected a matrix feature file: " + path.string());
}

FeatureVector class_score_summary(const FeatureMatrix& scores) {
  if (scores.rows == 0 || scores.cols == 0) throw InvalidArgument("class_score_summary: empty score matrix");
  const std::size_t c = scores.cols;
  FeatureVector out;
  out.schema_id = "yamnet-summary";
  out.values.resize(2 * c);
  std::vector<double> column(scores.rows);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t t = 0; t < scores.rows; ++t) column[t] = scores.at(t, j);
    // Sorted accumulation keeps the result independent of frame order.
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    const double mean = sum / static_cast<double>(scores.rows);
    double sq = 0.0;
    for (double v : column) sq += (v - mean) * (v - mean);
    out.values[j] = static_cast<float>(mean);
    out.values[c + j] = static_cast<float>(std::sqrt(sq / static_cast<double>(scores.rows)));
  }
  return out;
}

FeatureVector class_score_top_k_counts(const FeatureMatrix& scores, std::size_t k) {
  const std::size_t c = scores.cols;
  if (k == 0 || k > c) throw InvalidArgument("class_score_top_k_counts: k must be in [1, C]");
  FeatureVector out;
  out.schema_id = "yamnet-topk";
  out.values.assign(c, 0.0f);
  std::vector<std::size_t> order(c);
  for (std::size_t t = 0; t < scores.rows; ++t) {
    std::iota(order.begin(), order.end(), 0);
    const auto row = scores.row(t);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
    for (std::size_t i = 0; i < k; ++i) out.values[order[i]] += 1.0f;
  }
  return out;
}

FeatureMatrix fit_rows(const FeatureMatrix& m, std::size_t rows, bool* changed) {
  if (changed) *changed = m.rows != rows;
  if (m.rows == rows) return m;
  FeatureMatrix out(rows, m.cols, m.schema_id);
  const std::size_t keep = std::min(rows, m.rows);
  std::copy(m.data.begin(), m.data.begin() + static_cast<std::ptrdiff_t>(keep * m.cols), out.data.begin());
  return out;
}

}  // namespace ssc
