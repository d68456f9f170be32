#pragma once

// Classifier heads trained from scratch.
//
//   vector head: Dense(in -> 50) + ReLU -> Dropout(0.2) -> Dense(50 -> 1) + sigmoid
//   matrix head: Dense(D -> 100) per frame -> mean over frames -> vector head
//
// Parameters live in one flat array (see ParamLayout) so the optimizer and
// the finite-difference checks can treat them uniformly. Everything is
// templated on the scalar type: training runs in float, gradient checks in
// double.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssc/handcrafted.hpp"
#include "ssc/rng.hpp"

namespace ssc {

enum class HeadVariant : std::uint8_t { kVector, kMatrix };

std::string_view variant_name(HeadVariant v);
HeadVariant parse_variant(std::string_view name);

struct HeadArchitecture {
  HeadVariant variant = HeadVariant::kVector;
  std::size_t input_dim = 0;       // vector length, or D for matrices
  std::size_t frame_hidden = 100;  // matrix head only
  std::size_t hidden = 50;

  static HeadArchitecture vector_head(std::size_t in) { return {HeadVariant::kVector, in, 100, 50}; }
  static HeadArchitecture matrix_head(std::size_t d) { return {HeadVariant::kMatrix, d, 100, 50}; }
  /// Width of the input to the 50-unit layer.
  std::size_t pooled_dim() const { return variant == HeadVariant::kMatrix ? frame_hidden : input_dim; }
};

/// Offsets of each tensor inside the flat parameter array. w0/b0 are empty
/// for the vector head. Weight matrices are row-major [out][in].
struct ParamLayout {
  explicit ParamLayout(const HeadArchitecture& arch);
  std::size_t w0 = 0, b0 = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
  std::size_t w0_size = 0, b0_size = 0, w1_size = 0, b1_size = 0, w2_size = 0;
};

template <typename T>
struct HeadParams {
  HeadArchitecture arch;
  std::vector<T> flat;

  HeadParams() = default;
  explicit HeadParams(const HeadArchitecture& a) : arch(a), flat(ParamLayout(a).total, T{0}) {}

  T output_bias() const { return flat[ParamLayout(arch).b2]; }

  template <typename U>
  HeadParams<U> cast() const {
    HeadParams<U> out;
    out.arch = arch;
    out.flat.assign(flat.begin(), flat.end());
    return out;
  }
};

struct ClassCounts {
  std::size_t scripted = 0;
  std::size_t spontaneous = 0;
};

/// ln(n_scripted / n_spontaneous): sigmoid of it is the scripted prevalence.
double prior_bias(const ClassCounts& counts);

/// Glorot-uniform weights from `seed`, zero hidden biases, prior output bias.
/// Throws InvalidArgument when either class count is zero.
HeadParams<float> init_params(const HeadArchitecture& arch, std::uint64_t seed, const ClassCounts& counts);

/// One classifier input: `rows` x `cols` row-major (rows = 1 for vectors).
struct InputView {
  std::span<const float> data;
  std::size_t rows = 1;
  std::size_t cols = 0;
};

template <typename T>
struct ForwardCache {
  std::vector<T> pooled;      // input to the 50-unit layer
  std::vector<T> input_mean;  // matrix head: mean input frame
  std::vector<T> z1;          // pre-activation of the 50-unit layer
  std::vector<T> a1;          // after ReLU and (train mode) dropout
  std::vector<T> keep_scale;  // per-unit dropout multiplier (0 or 1/(1-p)); empty in infer mode
  T z2{};
  T score{};
};

/// Forward pass. `dropout_mask` holds one 0/1 per hidden unit (train mode);
/// nullptr means inference (no dropout). Throws on a shape mismatch.
template <typename T>
ForwardCache<T> forward(const HeadParams<T>& params, const InputView& input,
                        const std::vector<std::uint8_t>* dropout_mask = nullptr, double dropout = 0.2);

/// Inference score in (0, 1).
template <typename T>
T predict(const HeadParams<T>& params, const InputView& input);

/// Draws a keep-mask with P(keep) = 1 - rate.
std::vector<std::uint8_t> draw_dropout_mask(std::size_t units, double rate, Rng& rng);

inline constexpr double kScoreClamp = 1e-7;

/// Mean binary cross-entropy with scores clamped to [1e-7, 1 - 1e-7]. Labels
/// are 1 for scripted. Throws on NaN input or size mismatch.
template <typename T>
T bce_loss(std::span<const T> scores, std::span<const int> labels);

/// Adds d(loss)/d(params) for one example to `grad`, where the example
/// contributes `weight` * BCE to the loss (weight = 1/batch for a mean).
template <typename T>
void backward(const HeadParams<T>& params, const InputView& input, const ForwardCache<T>& cache, int label,
              T weight, std::vector<T>& grad);

/// Batch loss and gradient (mean BCE) for fixed dropout masks
/// (`masks` empty = inference mode).
template <typename T>
T loss_and_gradient(const HeadParams<T>& params, std::span<const InputView> inputs, std::span<const int> labels,
                    std::span<const std::vector<std::uint8_t>> masks, double dropout, std::vector<T>* grad);

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-7;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 40;
  double dropout = 0.2;
  std::uint64_t seed = 0;
  ClassCounts class_counts;

  /// 40 epochs for vector heads, 10 for matrix heads.
  static TrainConfig defaults_for(HeadVariant variant);
  void validate() const;
};

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, T{0}), v(n, T{0}) {}
};

/// Bias-corrected Adam update; increments the step counter.
template <typename T>
void adam_step(std::vector<T>& params, std::span<const T> grads, AdamState<T>& state, const TrainConfig& config);

/// Snippet-level training examples sharing one shape.
struct Dataset {
  std::size_t rows = 1;
  std::size_t cols = 0;
  std::vector<std::vector<float>> inputs;
  std::vector<int> labels;  // 1 = scripted

  std::size_t size() const { return inputs.size(); }
  InputView view(std::size_t i) const { return {inputs[i], rows, cols}; }
  void add(std::vector<float> x, int label);
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::optional<double> val_auc;  // undefined when the validation set has one class
};

struct Checkpoint {
  HeadParams<float> params;
  std::optional<Standardizer> standardizer;
  std::string schema_id;
  std::size_t frame_count = 0;  // matrix head: frames per training input (0 = any)
  TrainConfig config;
  std::size_t epoch = 0;  // 1-based epoch the parameters come from
  double val_loss = 0.0;
  std::string tool_version;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// Mini-batch training with per-epoch validation; returns the parameters of
/// the epoch with the lowest validation loss (earliest on ties).
TrainResult train(const Dataset& train_set, const Dataset& val_set, const HeadArchitecture& arch,
                  const TrainConfig& config);

/// Snippet-level loss/accuracy in inference mode.
double dataset_loss(const HeadParams<float>& params, const Dataset& data);

/// Checkpoint container: "SSCK" | u16 version | u32 header length | JSON header
/// | tensors (u16 name length, name, u32 rows, u32 cols, f32 payload).
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Scores one input with a checkpoint: checks the schema, applies the
/// standardizer, fits matrix inputs to the trained frame count.
float score_input(const Checkpoint& ckpt, const std::string& schema_id, const InputView& input,
                  bool* rows_adjusted = nullptr);

}  // namespace ssc
