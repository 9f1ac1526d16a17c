#include "albt/model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "albt/error.h"
#include "albt/seed.h"

namespace albt {

ModelConfig ModelConfig::tiny(int vocab_size) {
  ModelConfig c;
  c.num_layers = 2;
  c.hidden = 128;
  c.heads = 2;
  c.ff_dim = 512;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::base(int vocab_size) {
  ModelConfig c;
  c.num_layers = 12;
  c.hidden = 768;
  c.heads = 12;
  c.ff_dim = 3072;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::large(int vocab_size) {
  ModelConfig c;
  c.num_layers = 24;
  c.hidden = 1024;
  c.heads = 16;
  c.ff_dim = 4096;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::preset(std::string_view name, int vocab_size) {
  if (name == "tiny") return tiny(vocab_size);
  if (name == "base") return base(vocab_size);
  if (name == "large") return large(vocab_size);
  throw ConfigError(fmt::format("unknown model preset '{}'", name));
}

void ModelConfig::validate() const {
  if (num_layers < 1) throw ConfigError("num_layers must be at least 1");
  if (hidden < 1 || heads < 1) throw ConfigError("hidden and heads must be positive");
  if (hidden % heads != 0) {
    throw ConfigError(fmt::format("hidden ({}) is not divisible by heads ({})", hidden, heads));
  }
  if (ff_dim < 1) throw ConfigError("ff_dim must be positive");
  if (vocab_size <= kNumSpecialTokens) throw ConfigError("vocab_size must exceed the special tokens");
  if (max_positions < 1 || max_positions > kMaxPositions) {
    throw ConfigError(fmt::format("max_positions must be in [1, {}]", kMaxPositions));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must be in [0, 1)");
  if (num_classes && *num_classes < 1) throw ConfigError("num_classes must be positive");
  if (num_tags && *num_tags < 1) throw ConfigError("num_tags must be positive");
}

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& c) {
  c.validate();
  const std::int64_t h = c.hidden;
  const std::int64_t f = c.ff_dim;
  std::vector<std::pair<std::string, Shape>> out = {
      {"embeddings.token", {c.vocab_size, h}},
      {"embeddings.position", {c.max_positions, h}},
      {"embeddings.segment", {kSegmentVocab, h}},
      {"embeddings.norm.gamma", {h}},
      {"embeddings.norm.beta", {h}},
  };
  for (int i = 0; i < c.num_layers; ++i) {
    const auto p = fmt::format("layer.{}.", i);
    // No key bias: it shifts every score in a softmax row equally, so it would
    // be a parameter with no effect and an identically zero gradient.
    for (const char* proj : {"query", "key", "value", "output"}) {
      out.push_back({p + "attention." + proj + ".weight", {h, h}});
      if (std::string_view(proj) != "key") out.push_back({p + "attention." + proj + ".bias", {h}});
    }
    out.push_back({p + "attention.norm.gamma", {h}});
    out.push_back({p + "attention.norm.beta", {h}});
    out.push_back({p + "ffn.input.weight", {h, f}});
    out.push_back({p + "ffn.input.bias", {f}});
    out.push_back({p + "ffn.output.weight", {f, h}});
    out.push_back({p + "ffn.output.bias", {h}});
    out.push_back({p + "ffn.norm.gamma", {h}});
    out.push_back({p + "ffn.norm.beta", {h}});
  }
  out.push_back({"mlm.transform.weight", {h, h}});
  out.push_back({"mlm.transform.bias", {h}});
  out.push_back({"mlm.norm.gamma", {h}});
  out.push_back({"mlm.norm.beta", {h}});
  out.push_back({"mlm.output.bias", {c.vocab_size}});
  if (c.num_classes) {
    out.push_back({"classifier.weight", {h, *c.num_classes}});
    out.push_back({"classifier.bias", {*c.num_classes}});
  }
  if (c.num_tags) {
    out.push_back({"tagger.weight", {h, *c.num_tags}});
    out.push_back({"tagger.bias", {*c.num_tags}});
  }
  return out;
}

std::int64_t parameter_count(const ModelConfig& config) {
  std::int64_t n = 0;
  for (const auto& [name, shape] : parameter_shapes(config)) n += numel_of(shape);
  return n;
}

// ---------------------------------------------------------------------------
// ModelParameters

template <typename S>
void ModelParameters<S>::add(std::string name, Tensor<S> tensor) {
  if (contains(name)) throw ConfigError("duplicate parameter " + name);
  entries_.emplace_back(std::move(name), std::move(tensor));
}

template <typename S>
bool ModelParameters<S>::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.first == name; });
}

template <typename S>
const Tensor<S>& ModelParameters<S>::get(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw ConfigError(fmt::format("model has no parameter '{}'", name));
}

template <typename S>
Tensor<S>& ModelParameters<S>::get(std::string_view name) {
  return const_cast<Tensor<S>&>(std::as_const(*this).get(name));
}

template <typename S>
std::vector<Tensor<S>> ModelParameters<S>::tensors() const {
  std::vector<Tensor<S>> out;
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

template <typename S>
void ModelParameters<S>::set_requires_grad(bool flag) {
  for (auto& e : entries_) e.second.set_requires_grad(flag);
}

template <typename S>
void ModelParameters<S>::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

namespace {

bool is_gamma(const std::string& name) { return name.ends_with(".gamma"); }

template <typename S>
Tensor<S> init_tensor(const std::string& name, const Shape& shape, std::uint64_t stream) {
  if (is_gamma(name)) return Tensor<S>::constant(shape, 1.0);
  if (shape.size() == 1) return Tensor<S>::zeros(shape);
  return Tensor<S>::create(shape, init::Normal{0.0, kInitStddev, stream});
}

template <typename S>
void replace_head(ModelParameters<S>& params, const std::string& prefix, std::int64_t hidden,
                  int size, std::uint64_t seed) {
  auto& entries = params.entries();
  std::erase_if(entries, [&](const auto& e) { return e.first.starts_with(prefix + "."); });
  params.add(prefix + ".weight",
             Tensor<S>::create({hidden, size}, init::Normal{0.0, kInitStddev, derive_seed(seed, 1)}));
  params.add(prefix + ".bias", Tensor<S>::zeros({size}));
}

}  // namespace

template <typename S>
ModelParameters<S> init_parameters(const ModelConfig& config, std::uint64_t seed) {
  ModelParameters<S> params;
  std::uint64_t index = 0;
  for (const auto& [name, shape] : parameter_shapes(config)) {
    params.add(name, init_tensor<S>(name, shape, derive_seed(seed, index++)));
  }
  return params;
}

template <typename S>
void attach_classifier(ModelParameters<S>& params, ModelConfig& config, int num_classes,
                       std::uint64_t seed) {
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  replace_head(params, "classifier", config.hidden, num_classes, derive_seed(seed, 0xC1A5));
  config.num_classes = num_classes;
}

template <typename S>
void attach_tagger(ModelParameters<S>& params, ModelConfig& config, int num_tags,
                   std::uint64_t seed) {
  if (num_tags < 1) throw ConfigError("num_tags must be positive");
  replace_head(params, "tagger", config.hidden, num_tags, derive_seed(seed, 0x7A66));
  config.num_tags = num_tags;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

template <typename S>
Tensor<S> linear(const ModelParameters<S>& p, const std::string& prefix, const Tensor<S>& x) {
  return matmul(x, p.get(prefix + ".weight")) + p.get(prefix + ".bias");
}

template <typename S>
Tensor<S> norm(const ModelParameters<S>& p, const std::string& prefix, const Tensor<S>& x) {
  return layer_norm(x, p.get(prefix + ".gamma"), p.get(prefix + ".beta"));
}

void check_ids(const IdMatrix& ids, const IdMatrix& mask, const IdMatrix& segments) {
  if (mask.rows() != ids.rows() || mask.cols() != ids.cols() || segments.rows() != ids.rows() ||
      segments.cols() != ids.cols()) {
    throw ShapeMismatch("input ids, attention mask and segment ids must share one shape");
  }
  if (ids.rows() == 0 || ids.cols() == 0) throw InvalidShape("empty input batch");
}

}  // namespace

template <typename S>
Tensor<S> encode_sequence(const ModelParameters<S>& p, const ModelConfig& c,
                          const IdMatrix& input_ids, const IdMatrix& attention_mask,
                          const IdMatrix& segment_ids, const ForwardOptions<S>& options) {
  check_ids(input_ids, attention_mask, segment_ids);
  const auto t = input_ids.cols();
  if (t > c.max_positions) {
    throw SequenceTooLong(fmt::format("sequence length {} exceeds max_positions {}", t, c.max_positions));
  }
  const double rate = options.train ? c.dropout_rate : 0.0;
  std::mt19937_64 rng(options.dropout_seed);

  std::vector<std::int32_t> positions(t);
  for (std::int64_t i = 0; i < t; ++i) positions[i] = static_cast<std::int32_t>(i);
  auto x = embedding_lookup(p.get("embeddings.token"), input_ids) +
           embedding_lookup(p.get("embeddings.position"), positions, Shape{t}) +
           embedding_lookup(p.get("embeddings.segment"), segment_ids);
  x = dropout(norm(p, "embeddings.norm", x), rate, rng);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(c.hidden / c.heads));
  for (int l = 0; l < c.num_layers; ++l) {
    const auto pre = fmt::format("layer.{}.", l);
    const auto q = split_heads(linear(p, pre + "attention.query", x), c.heads);
    const auto k = split_heads(matmul(x, p.get(pre + "attention.key.weight")), c.heads);
    const auto v = split_heads(linear(p, pre + "attention.value", x), c.heads);
    const auto scores = mask_keys(scale(matmul_nt(q, k), inv_sqrt_d), attention_mask);
    const auto probs = softmax(scores);
    if (options.attention_probs) options.attention_probs->push_back(probs);
    const auto context = merge_heads(matmul(dropout(probs, rate, rng), v));
    const auto attended = dropout(linear(p, pre + "attention.output", context), rate, rng);
    x = norm(p, pre + "attention.norm", x + attended);

    const auto inner = gelu(linear(p, pre + "ffn.input", x));
    const auto ffn = dropout(linear(p, pre + "ffn.output", inner), rate, rng);
    x = norm(p, pre + "ffn.norm", x + ffn);
  }
  return x;
}

template <typename S>
Tensor<S> mlm_logits(const ModelParameters<S>& p, const Tensor<S>& hidden) {
  const auto h = norm(p, "mlm.norm", gelu(linear(p, "mlm.transform", hidden)));
  return matmul_nt(h, p.get("embeddings.token")) + p.get("mlm.output.bias");
}

template <typename S>
Tensor<S> mlm_logits_at(const ModelParameters<S>& p, const Tensor<S>& hidden,
                        std::span<const std::int64_t> rows) {
  return mlm_logits(p, gather_rows(hidden, rows));
}

template <typename S>
Tensor<S> classify_logits(const ModelParameters<S>& p, const Tensor<S>& hidden) {
  if (!p.contains("classifier.weight")) throw ConfigError("model has no classification head");
  return linear(p, "classifier", select_position(hidden, 0));
}

template <typename S>
Tensor<S> tag_logits(const ModelParameters<S>& p, const Tensor<S>& hidden) {
  if (!p.contains("tagger.weight")) throw ConfigError("model has no tagging head");
  return linear(p, "tagger", hidden);
}

std::int64_t labeled_count(Task task, const Batch& batch) {
  if (task == Task::kClassify) {
    return std::count_if(batch.sequence_labels.begin(), batch.sequence_labels.end(),
                         [](auto l) { return l != kNoLabel; });
  }
  return (batch.token_labels != kNoLabel).count();
}

template <typename S>
Tensor<S> task_loss(const ModelParameters<S>& p, const ModelConfig& c, Task task,
                    const Batch& batch, const ForwardOptions<S>& options) {
  const auto hidden =
      encode_sequence(p, c, batch.input_ids, batch.attention_mask, batch.segment_ids, options);
  switch (task) {
    case Task::kMlm: {
      std::vector<std::int64_t> rows;
      std::vector<std::int32_t> targets;
      const auto* labels = batch.token_labels.data();
      for (std::int64_t i = 0; i < batch.token_labels.size(); ++i) {
        if (labels[i] == kNoLabel) continue;
        rows.push_back(i);
        targets.push_back(labels[i]);
      }
      if (rows.empty()) {
        // Keeps the graph connected so callers can still run backward.
        return scale(sum(hidden), 0.0);
      }
      return cross_entropy(mlm_logits_at(p, hidden, rows), targets);
    }
    case Task::kClassify:
      return cross_entropy(classify_logits(p, hidden), batch.sequence_labels);
    case Task::kTag: {
      const std::span<const std::int32_t> labels(batch.token_labels.data(),
                                                 static_cast<std::size_t>(batch.token_labels.size()));
      return cross_entropy(tag_logits(p, hidden), labels);
    }
  }
  throw ConfigError("unknown task");
}

std::vector<std::int32_t> predict_classes(const ModelParameters<float>& p, const ModelConfig& c,
                                          const Batch& batch) {
  NoGradGuard guard;
  const auto logits = classify_logits(
      p, encode_sequence(p, c, batch.input_ids, batch.attention_mask, batch.segment_ids));
  const auto n = logits.dim(1);
  std::vector<std::int32_t> out(logits.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto row = logits.data().segment(r * n, n);
    Eigen::Index arg = 0;
    row.maxCoeff(&arg);
    out[r] = static_cast<std::int32_t>(arg);
  }
  return out;
}

IdMatrix predict_tags(const ModelParameters<float>& p, const ModelConfig& c, const Batch& batch) {
  NoGradGuard guard;
  const auto logits = tag_logits(
      p, encode_sequence(p, c, batch.input_ids, batch.attention_mask, batch.segment_ids));
  const auto k = logits.dim(2);
  IdMatrix out(batch.rows(), batch.cols());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    Eigen::Index arg = 0;
    logits.data().segment(i * k, k).maxCoeff(&arg);
    out.data()[i] = static_cast<std::int32_t>(arg);
  }
  return out;
}

#define ALBT_INSTANTIATE(S)                                                                        \
  template class ModelParameters<S>;                                                               \
  template ModelParameters<S> init_parameters<S>(const ModelConfig&, std::uint64_t);               \
  template void attach_classifier<S>(ModelParameters<S>&, ModelConfig&, int, std::uint64_t);       \
  template void attach_tagger<S>(ModelParameters<S>&, ModelConfig&, int, std::uint64_t);           \
  template Tensor<S> encode_sequence<S>(const ModelParameters<S>&, const ModelConfig&,             \
                                        const IdMatrix&, const IdMatrix&, const IdMatrix&,         \
                                        const ForwardOptions<S>&);                                 \
  template Tensor<S> mlm_logits<S>(const ModelParameters<S>&, const Tensor<S>&);                   \
  template Tensor<S> mlm_logits_at<S>(const ModelParameters<S>&, const Tensor<S>&,                 \
                                      std::span<const std::int64_t>);                              \
  template Tensor<S> classify_logits<S>(const ModelParameters<S>&, const Tensor<S>&);              \
  template Tensor<S> tag_logits<S>(const ModelParameters<S>&, const Tensor<S>&);                   \
  template Tensor<S> task_loss<S>(const ModelParameters<S>&, const ModelConfig&, Task,             \
                                  const Batch&, const ForwardOptions<S>&);

ALBT_INSTANTIATE(float)
ALBT_INSTANTIATE(double)

}  // namespace albt
