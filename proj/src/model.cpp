#include "ssc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "byte_io.hpp"
#include "file_util.hpp"
#include "ssc/embeddings.hpp"
#include "ssc/error.hpp"
#include "ssc/eval.hpp"
#include "ssc/version.hpp"

namespace ssc {

std::string_view variant_name(HeadVariant v) { return v == HeadVariant::kMatrix ? "matrix-head" : "vector-head"; }

HeadVariant parse_variant(std::string_view name) {
  if (name == "vector-head") return HeadVariant::kVector;
  if (name == "matrix-head") return HeadVariant::kMatrix;
  throw InvalidArgument("unknown head variant '" + std::string(name) + "'");
}

ParamLayout::ParamLayout(const HeadArchitecture& arch) {
  if (arch.input_dim == 0 || arch.hidden == 0 ||
      (arch.variant == HeadVariant::kMatrix && arch.frame_hidden == 0)) {
    throw InvalidArgument("head architecture has a zero-sized layer");
  }
  if (arch.variant == HeadVariant::kMatrix) {
    w0_size = arch.frame_hidden * arch.input_dim;
    b0_size = arch.frame_hidden;
  }
  w1_size = arch.hidden * arch.pooled_dim();
  b1_size = arch.hidden;
  w2_size = arch.hidden;
  w0 = 0;
  b0 = w0 + w0_size;
  w1 = b0 + b0_size;
  b1 = w1 + w1_size;
  w2 = b1 + b1_size;
  b2 = w2 + w2_size;
  total = b2 + 1;
}

double prior_bias(const ClassCounts& counts) {
  if (counts.scripted == 0 || counts.spontaneous == 0) {
    throw InvalidArgument("bias initialization needs both classes present (counts " +
                          std::to_string(counts.scripted) + ":" + std::to_string(counts.spontaneous) + ")");
  }
  return std::log(static_cast<double>(counts.scripted) / static_cast<double>(counts.spontaneous));
}

HeadParams<float> init_params(const HeadArchitecture& arch, std::uint64_t seed, const ClassCounts& counts) {
  const double bias = prior_bias(counts);
  HeadParams<float> p(arch);
  const ParamLayout L(arch);
  Rng rng(seed);
  auto glorot = [&](std::size_t offset, std::size_t fan_out, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < fan_out * fan_in; ++i) p.flat[offset + i] = static_cast<float>(rng.uniform(-limit, limit));
  };
  if (arch.variant == HeadVariant::kMatrix) glorot(L.w0, arch.frame_hidden, arch.input_dim);
  glorot(L.w1, arch.hidden, arch.pooled_dim());
  glorot(L.w2, 1, arch.hidden);
  p.flat[L.b2] = static_cast<float>(bias);
  return p;
}

namespace {

template <typename T>
T sigmoid(T z) {
  if (z >= T{0}) return T{1} / (T{1} + std::exp(-z));
  const T e = std::exp(z);
  return e / (T{1} + e);
}

void check_input(const HeadArchitecture& arch, const InputView& input) {
  if (input.cols != arch.input_dim) {
    throw InvalidArgument("input width " + std::to_string(input.cols) + " does not match head input " +
                          std::to_string(arch.input_dim));
  }
  if (input.rows == 0 || input.data.size() != input.rows * input.cols) {
    throw InvalidArgument("input data size does not match its shape");
  }
  if (arch.variant == HeadVariant::kVector && input.rows != 1) {
    throw InvalidArgument("vector head given a matrix input");
  }
}

}  // namespace

template <typename T>
ForwardCache<T> forward(const HeadParams<T>& params, const InputView& input, const std::vector<std::uint8_t>* dropout_mask,
                        double dropout) {
  const auto& arch = params.arch;
  check_input(arch, input);
  const ParamLayout L(arch);
  const T* w = params.flat.data();
  ForwardCache<T> c;
  const std::size_t pd = arch.pooled_dim();
  c.pooled.assign(pd, T{0});

  if (arch.variant == HeadVariant::kMatrix) {
    const std::size_t d = arch.input_dim;
    for (std::size_t t = 0; t < input.rows; ++t) {
      const float* x = input.data.data() + t * d;
      for (std::size_t j = 0; j < pd; ++j) {
        const T* row = w + L.w0 + j * d;
        T acc = w[L.b0 + j];
        for (std::size_t i = 0; i < d; ++i) acc += row[i] * static_cast<T>(x[i]);
        c.pooled[j] += acc;
      }
    }
    for (auto& v : c.pooled) v /= static_cast<T>(input.rows);
    c.input_mean.assign(d, T{0});
    for (std::size_t t = 0; t < input.rows; ++t) {
      for (std::size_t i = 0; i < d; ++i) c.input_mean[i] += static_cast<T>(input.data[t * d + i]);
    }
    for (auto& v : c.input_mean) v /= static_cast<T>(input.rows);
  } else {
    for (std::size_t i = 0; i < pd; ++i) c.pooled[i] = static_cast<T>(input.data[i]);
  }

  const std::size_t h = arch.hidden;
  c.z1.assign(h, T{0});
  c.a1.assign(h, T{0});
  if (dropout_mask) {
    if (dropout_mask->size() != h) throw InvalidArgument("dropout mask size mismatch");
    c.keep_scale.assign(h, T{0});
    for (std::size_t i = 0; i < h; ++i) {
      c.keep_scale[i] = (*dropout_mask)[i] ? static_cast<T>(1.0 / (1.0 - dropout)) : T{0};
    }
  }
  for (std::size_t i = 0; i < h; ++i) {
    const T* row = w + L.w1 + i * pd;
    T acc = w[L.b1 + i];
    for (std::size_t j = 0; j < pd; ++j) acc += row[j] * c.pooled[j];
    c.z1[i] = acc;
    T a = acc > T{0} ? acc : T{0};
    if (dropout_mask) a *= c.keep_scale[i];
    c.a1[i] = a;
  }
  T z2 = w[L.b2];
  for (std::size_t i = 0; i < h; ++i) z2 += w[L.w2 + i] * c.a1[i];
  c.z2 = z2;
  c.score = sigmoid(z2);
  return c;
}

template <typename T>
T predict(const HeadParams<T>& params, const InputView& input) {
  return forward(params, input, nullptr).score;
}

std::vector<std::uint8_t> draw_dropout_mask(std::size_t units, double rate, Rng& rng) {
  std::vector<std::uint8_t> mask(units);
  for (auto& m : mask) m = rng.uniform() >= rate ? 1 : 0;
  return mask;
}

template <typename T>
T bce_loss(std::span<const T> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("bce_loss: size mismatch");
  if (scores.empty()) throw InvalidArgument("bce_loss: empty batch");
  const T lo = static_cast<T>(kScoreClamp);
  const T hi = static_cast<T>(1.0 - kScoreClamp);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw InvalidArgument("bce_loss: NaN score");
    const double s = std::clamp(scores[i], lo, hi);
    total += labels[i] ? -std::log(s) : -std::log(1.0 - s);
  }
  return static_cast<T>(total / static_cast<double>(scores.size()));
}

template <typename T>
void backward(const HeadParams<T>& params, const InputView& input, const ForwardCache<T>& c, int label, T weight,
              std::vector<T>& grad) {
  const auto& arch = params.arch;
  const ParamLayout L(arch);
  if (grad.size() != L.total) grad.assign(L.total, T{0});
  const T* w = params.flat.data();
  const T s = c.score;
  if (s < static_cast<T>(kScoreClamp) || s > static_cast<T>(1.0 - kScoreClamp)) return;  // flat region
  const T dz2 = weight * (s - static_cast<T>(label));

  const std::size_t h = arch.hidden;
  const std::size_t pd = arch.pooled_dim();
  grad[L.b2] += dz2;
  std::vector<T> dz1(h, T{0});
  for (std::size_t i = 0; i < h; ++i) {
    grad[L.w2 + i] += dz2 * c.a1[i];
    if (c.z1[i] > T{0}) {
      T da = dz2 * w[L.w2 + i];
      if (!c.keep_scale.empty()) da *= c.keep_scale[i];
      dz1[i] = da;
    }
  }
  std::vector<T> dpooled(arch.variant == HeadVariant::kMatrix ? pd : 0, T{0});
  for (std::size_t i = 0; i < h; ++i) {
    if (dz1[i] == T{0}) continue;
    grad[L.b1 + i] += dz1[i];
    T* g = grad.data() + L.w1 + i * pd;
    const T* row = w + L.w1 + i * pd;
    for (std::size_t j = 0; j < pd; ++j) {
      g[j] += dz1[i] * c.pooled[j];
      if (!dpooled.empty()) dpooled[j] += dz1[i] * row[j];
    }
  }
  if (arch.variant == HeadVariant::kMatrix) {
    // Mean pooling hands every frame the same upstream gradient dpooled / T,
    // so the frame-layer weight gradient is dpooled (x) mean frame.
    const std::size_t d = arch.input_dim;
    for (std::size_t j = 0; j < pd; ++j) {
      if (dpooled[j] == T{0}) continue;
      grad[L.b0 + j] += dpooled[j];
      T* g = grad.data() + L.w0 + j * d;
      for (std::size_t i = 0; i < d; ++i) g[i] += dpooled[j] * c.input_mean[i];
    }
  }
  (void)input;
}

template <typename T>
T loss_and_gradient(const HeadParams<T>& params, std::span<const InputView> inputs, std::span<const int> labels,
                    std::span<const std::vector<std::uint8_t>> masks, double dropout, std::vector<T>* grad) {
  if (inputs.size() != labels.size() || inputs.empty()) throw InvalidArgument("loss_and_gradient: bad batch");
  if (!masks.empty() && masks.size() != inputs.size()) throw InvalidArgument("loss_and_gradient: mask count");
  if (grad) grad->assign(ParamLayout(params.arch).total, T{0});
  std::vector<T> scores(inputs.size());
  const T weight = T{1} / static_cast<T>(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto cache = forward(params, inputs[i], masks.empty() ? nullptr : &masks[i], dropout);
    scores[i] = cache.score;
    if (grad) backward(params, inputs[i], cache, labels[i], weight, *grad);
  }
  return bce_loss<T>(scores, labels);
}

TrainConfig TrainConfig::defaults_for(HeadVariant variant) {
  TrainConfig c;
  c.max_epochs = variant == HeadVariant::kMatrix ? 10 : 40;
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1) || !(adam_epsilon > 0)) {
    throw InvalidArgument("train config: optimizer hyperparameters out of range");
  }
  if (batch_size == 0 || max_epochs == 0) throw InvalidArgument("train config: batch size and epochs must be >= 1");
  if (!(dropout >= 0 && dropout < 1)) throw InvalidArgument("train config: dropout must be in [0, 1)");
}

template <typename T>
void adam_step(std::vector<T>& params, std::span<const T> grads, AdamState<T>& state, const TrainConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InvalidArgument("adam_step: shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(config.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(config.beta2, t));
  const T lr = static_cast<T>(config.learning_rate);
  const T eps = static_cast<T>(config.adam_epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T{1} - b1) * g;
    state.v[i] = b2 * state.v[i] + (T{1} - b2) * g * g;
    const T m_hat = state.m[i] / c1;
    const T v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void Dataset::add(std::vector<float> x, int label) {
  if (x.size() != rows * cols) throw InvalidArgument("Dataset::add: input size does not match dataset shape");
  inputs.push_back(std::move(x));
  labels.push_back(label);
}

double dataset_loss(const HeadParams<float>& params, const Dataset& data) {
  std::vector<float> scores(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) scores[i] = predict(params, data.view(i));
  return bce_loss<float>(scores, data.labels);
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;
};

Evaluation evaluate_set(const HeadParams<float>& params, const Dataset& data) {
  Evaluation e;
  std::vector<float> scores(data.size());
  std::vector<double> scores_d(data.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    scores[i] = predict(params, data.view(i));
    scores_d[i] = scores[i];
    correct += (scores[i] >= 0.5f) == (data.labels[i] == 1) ? 1 : 0;
  }
  e.loss = bce_loss<float>(scores, data.labels);
  e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  const auto pos = std::count(data.labels.begin(), data.labels.end(), 1);
  if (pos > 0 && static_cast<std::size_t>(pos) < data.size()) e.auc = roc_auc(data.labels, scores_d);
  return e;
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& val_set, const HeadArchitecture& arch,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.size() == 0 || val_set.size() == 0) throw InvalidArgument("train: empty training or validation set");
  if (train_set.cols != arch.input_dim || val_set.cols != arch.input_dim) {
    throw InvalidArgument("train: dataset width does not match the head input");
  }
  TrainConfig cfg = config;
  if (cfg.class_counts.scripted == 0 && cfg.class_counts.spontaneous == 0) {
    const auto pos = static_cast<std::size_t>(std::count(train_set.labels.begin(), train_set.labels.end(), 1));
    cfg.class_counts = {pos, train_set.size() - pos};
  }

  auto params = init_params(arch, cfg.seed, cfg.class_counts);
  const ParamLayout L(arch);
  AdamState<float> adam(L.total);
  Rng rng(cfg.seed ^ 0x5DEECE66DULL);

  TrainResult result;
  result.checkpoint.params = params;
  result.checkpoint.config = cfg;
  result.checkpoint.val_loss = std::numeric_limits<double>::infinity();
  result.checkpoint.frame_count = arch.variant == HeadVariant::kMatrix ? train_set.rows : 0;
  result.checkpoint.tool_version = kToolVersion;

  std::vector<std::size_t> order(train_set.size());
  std::vector<float> grad(L.total);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const float weight = 1.0f / static_cast<float>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto mask = draw_dropout_mask(arch.hidden, cfg.dropout, rng);
        const auto cache = forward(params, train_set.view(i), &mask, cfg.dropout);
        const float s = std::clamp(cache.score, static_cast<float>(kScoreClamp), static_cast<float>(1.0 - kScoreClamp));
        const int y = train_set.labels[i];
        loss_sum += y ? -std::log(static_cast<double>(s)) : -std::log(1.0 - s);
        correct += (cache.score >= 0.5f) == (y == 1) ? 1 : 0;
        backward(params, train_set.view(i), cache, y, weight, grad);
      }
      adam_step<float>(params.flat, grad, adam, cfg);
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(train_set.size());
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
    const auto val = evaluate_set(params, val_set);
    log.val_loss = val.loss;
    log.val_accuracy = val.accuracy;
    log.val_auc = val.auc;
    result.log.push_back(log);
    if (val.loss < result.checkpoint.val_loss) {
      result.checkpoint.val_loss = val.loss;
      result.checkpoint.epoch = epoch;
      result.checkpoint.params = params;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint container

namespace {

constexpr char kCheckpointMagic[] = "SSCK";
constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
};

std::vector<NamedTensor> tensors_of(const HeadArchitecture& arch) {
  const ParamLayout L(arch);
  std::vector<NamedTensor> out;
  if (arch.variant == HeadVariant::kMatrix) {
    out.push_back({"frame_dense.weight", arch.frame_hidden, arch.input_dim, L.w0});
    out.push_back({"frame_dense.bias", arch.frame_hidden, 1, L.b0});
  }
  out.push_back({"hidden.weight", arch.hidden, arch.pooled_dim(), L.w1});
  out.push_back({"hidden.bias", arch.hidden, 1, L.b1});
  out.push_back({"output.weight", 1, arch.hidden, L.w2});
  out.push_back({"output.bias", 1, 1, L.b2});
  return out;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const auto& arch = ckpt.params.arch;
  for (float v : ckpt.params.flat) {
    if (!std::isfinite(v)) throw InvalidArgument("checkpoint has non-finite parameters");
  }
  nlohmann::json h;
  h["schema_id"] = ckpt.schema_id;
  h["variant"] = std::string(variant_name(arch.variant));
  h["input_dim"] = arch.input_dim;
  h["frame_hidden"] = arch.frame_hidden;
  h["hidden"] = arch.hidden;
  h["frame_count"] = ckpt.frame_count;
  h["epoch"] = ckpt.epoch;
  h["val_loss"] = ckpt.val_loss;
  h["seed"] = ckpt.config.seed;
  h["tool_version"] = ckpt.tool_version.empty() ? std::string(kToolVersion) : ckpt.tool_version;
  const auto& c = ckpt.config;
  h["config"] = {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},           {"beta2", c.beta2},
                 {"adam_epsilon", c.adam_epsilon},   {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
                 {"dropout", c.dropout},             {"seed", c.seed},
                 {"class_counts", {c.class_counts.scripted, c.class_counts.spontaneous}}};
  if (ckpt.standardizer) {
    h["standardizer"] = {{"mean", ckpt.standardizer->mean}, {"stddev", ckpt.standardizer->stddev}};
  } else {
    h["standardizer"] = nullptr;
  }
  const std::string header = h.dump();

  detail::ByteWriter w;
  w.put_bytes(std::string_view(kCheckpointMagic, 4));
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
  w.put_bytes(header);
  const auto tensors = tensors_of(arch);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_bytes(t.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rows));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.cols));
    w.put_floats(std::span<const float>(ckpt.params.flat.data() + t.offset, t.rows * t.cols));
  }
  return w.str();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  std::string magic, header;
  std::uint16_t version = 0;
  std::uint32_t header_len = 0;
  if (!r.get_bytes(4, magic) || magic != std::string_view(kCheckpointMagic, 4)) throw IoError("checkpoint: bad magic");
  if (!r.get(version) || version != kCheckpointVersion) throw IoError("checkpoint: unsupported version");
  if (!r.get(header_len) || !r.get_bytes(header_len, header)) throw IoError("checkpoint: truncated header");

  Checkpoint ckpt;
  try {
    const auto h = nlohmann::json::parse(header);
    HeadArchitecture arch;
    arch.variant = parse_variant(h.at("variant").get<std::string>());
    arch.input_dim = h.at("input_dim").get<std::size_t>();
    arch.frame_hidden = h.at("frame_hidden").get<std::size_t>();
    arch.hidden = h.at("hidden").get<std::size_t>();
    ckpt.params = HeadParams<float>(arch);
    ckpt.schema_id = h.at("schema_id").get<std::string>();
    ckpt.frame_count = h.at("frame_count").get<std::size_t>();
    ckpt.epoch = h.at("epoch").get<std::size_t>();
    ckpt.val_loss = h.at("val_loss").get<double>();
    ckpt.tool_version = h.at("tool_version").get<std::string>();
    const auto& c = h.at("config");
    ckpt.config.learning_rate = c.at("learning_rate").get<double>();
    ckpt.config.beta1 = c.at("beta1").get<double>();
    ckpt.config.beta2 = c.at("beta2").get<double>();
    ckpt.config.adam_epsilon = c.at("adam_epsilon").get<double>();
    ckpt.config.batch_size = c.at("batch_size").get<std::size_t>();
    ckpt.config.max_epochs = c.at("max_epochs").get<std::size_t>();
    ckpt.config.dropout = c.at("dropout").get<double>();
    ckpt.config.seed = c.at("seed").get<std::uint64_t>();
    ckpt.config.class_counts.scripted = c.at("class_counts").at(0).get<std::size_t>();
    ckpt.config.class_counts.spontaneous = c.at("class_counts").at(1).get<std::size_t>();
    if (!h.at("standardizer").is_null()) {
      Standardizer s;
      s.mean = h["standardizer"].at("mean").get<std::vector<double>>();
      s.stddev = h["standardizer"].at("stddev").get<std::vector<double>>();
      if (s.mean.size() != s.stddev.size()) throw InvalidArgument("standardizer size mismatch");
      ckpt.standardizer = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: malformed header: ") + e.what());
  }

  std::uint32_t count = 0;
  if (!r.get(count)) throw IoError("checkpoint: truncated tensor table");
  const auto expected = tensors_of(ckpt.params.arch);
  if (count != expected.size()) throw IoError("checkpoint: tensor count does not match architecture");
  for (const auto& t : expected) {
    std::uint16_t name_len = 0;
    std::string name;
    std::uint32_t rows = 0, cols = 0;
    std::vector<float> data;
    if (!r.get(name_len) || !r.get_bytes(name_len, name) || !r.get(rows) || !r.get(cols)) {
      throw IoError("checkpoint: truncated tensor header");
    }
    if (name != t.name || rows != t.rows || cols != t.cols) {
      throw IoError("checkpoint: tensor '" + name + "' does not match the architecture");
    }
    if (!r.get_floats(std::size_t{rows} * cols, data)) throw IoError("checkpoint: truncated tensor payload");
    std::copy(data.begin(), data.end(), ckpt.params.flat.begin() + static_cast<std::ptrdiff_t>(t.offset));
  }
  if (r.remaining() != 0) throw IoError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  detail::write_text(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(detail::read_text(path)); }

float score_input(const Checkpoint& ckpt, const std::string& schema_id, const InputView& input, bool* rows_adjusted) {
  if (rows_adjusted) *rows_adjusted = false;
  if (schema_id != ckpt.schema_id) {
    throw InvalidArgument("schema mismatch: input is '" + schema_id + "', checkpoint expects '" + ckpt.schema_id + "'");
  }
  const auto& arch = ckpt.params.arch;
  if (arch.variant == HeadVariant::kVector) {
    if (input.rows != 1 || input.cols != arch.input_dim) throw InvalidArgument("input shape does not match checkpoint");
    if (ckpt.standardizer) {
      const auto z = ckpt.standardizer->apply(input.data);
      return predict(ckpt.params, InputView{z, 1, z.size()});
    }
    return predict(ckpt.params, input);
  }
  if (ckpt.frame_count > 0 && input.rows != ckpt.frame_count) {
    FeatureMatrix m(input.rows, input.cols);
    std::copy(input.data.begin(), input.data.end(), m.data.begin());
    const auto fitted = fit_rows(m, ckpt.frame_count);
    if (rows_adjusted) *rows_adjusted = true;
    return predict(ckpt.params, InputView{fitted.data, fitted.rows, fitted.cols});
  }
  return predict(ckpt.params, input);
}

// Explicit instantiations: float for training, double for gradient checks.
#define SSC_INSTANTIATE(T)                                                                                          \
  template ForwardCache<T> forward<T>(const HeadParams<T>&, const InputView&, const std::vector<std::uint8_t>*,     \
                                      double);                                                                     \
  template T predict<T>(const HeadParams<T>&, const InputView&);                                                   \
  template T bce_loss<T>(std::span<const T>, std::span<const int>);                                                \
  template void backward<T>(const HeadParams<T>&, const InputView&, const ForwardCache<T>&, int, T,                \
                            std::vector<T>&);                                                                      \
  template T loss_and_gradient<T>(const HeadParams<T>&, std::span<const InputView>, std::span<const int>,          \
                                  std::span<const std::vector<std::uint8_t>>, double, std::vector<T>*);            \
  template void adam_step<T>(std::vector<T>&, std::span<const T>, AdamState<T>&, const TrainConfig&);

SSC_INSTANTIATE(float)
SSC_INSTANTIATE(double)
#undef SSC_INSTANTIATE

}  // namespace ssc
