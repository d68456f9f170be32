#pragma once

// Feature files and class-score summarizers.
//
// Binary feature file layout (little-endian):
//   magic "SSF1" | u16 version | u8 kind (0 vector, 1 matrix) | u8 dtype (0 f32)
//   | u32 dim0 | u32 dim1 (1 for vectors) | u16 schema length | schema UTF-8
//   | dim0 * dim1 f32 row-major payload

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ssc/error.hpp"

namespace ssc {

inline constexpr std::uint16_t kFeatureFileVersion = 1;
inline constexpr std::size_t kYamnetClasses = 521;
inline constexpr std::size_t kWhisperFrames = 1500;
inline constexpr std::size_t kWhisperDims = 1280;

/// Row-major T x D matrix of 32-bit floats.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
  std::string schema_id;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t t, std::size_t d, std::string schema = {})
      : rows(t), cols(d), data(t * d, 0.0f), schema_id(std::move(schema)) {}

  float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const float> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

struct FeatureVector {
  std::vector<float> values;
  std::string schema_id;
};

using FeatureData = std::variant<FeatureVector, FeatureMatrix>;

class FeatureFileError : public IoError {
 public:
  enum class Code { kBadMagic, kTruncated, kDimensionOverflow, kUnsupported, kIo };
  FeatureFileError(Code code, const std::string& what) : IoError(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Serializes to bytes. Throws InvalidArgument on non-finite values or
/// dimensions that do not fit the header.
std::string encode_feature_file(const FeatureData& data);
/// Parses bytes; errors: "bad magic", "truncated payload", "dimension overflow".
FeatureData decode_feature_file(std::string_view bytes);

void write_feature_file(const std::filesystem::path& path, const FeatureData& data);
FeatureData read_feature_file(const std::filesystem::path& path);
FeatureVector read_feature_vector(const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path);

/// [per-class means | per-class population stds] over time: 2C values.
FeatureVector class_score_summary(const FeatureMatrix& scores);

/// Per-class count of frames where the class is among the k highest scores.
/// Ties at the k-th rank go to the lower class index. Throws if k > C.
FeatureVector class_score_top_k_counts(const FeatureMatrix& scores, std::size_t k = 4);

/// Truncates to / zero-pads up to `rows` frames. `changed` reports whether
/// anything was done.
FeatureMatrix fit_rows(const FeatureMatrix& m, std::size_t rows, bool* changed = nullptr);

}  // namespace ssc
