#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "albt/corpus.h"
#include "albt/ops.h"
#include "albt/tensor.h"

namespace albt {

inline constexpr int kMaxPositions = 512;
inline constexpr int kSegmentVocab = 2;
inline constexpr double kInitStddev = 0.02;

struct ModelConfig {
  int num_layers = 2;
  int hidden = 128;
  int heads = 2;
  int ff_dim = 512;
  int vocab_size = 8192;
  int max_positions = kMaxPositions;
  double dropout_rate = 0.1;
  std::optional<int> num_classes;
  std::optional<int> num_tags;

  static ModelConfig tiny(int vocab_size);
  static ModelConfig base(int vocab_size);
  static ModelConfig large(int vocab_size);
  // "tiny", "base" or "large"; ConfigError otherwise.
  static ModelConfig preset(std::string_view name, int vocab_size);

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Name and shape of every parameter, in canonical order. Heads whose size is
// not configured are absent.
std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& config);
std::int64_t parameter_count(const ModelConfig& config);

template <typename Scalar>
class ModelParameters {
 public:
  using Entry = std::pair<std::string, Tensor<Scalar>>;

  void add(std::string name, Tensor<Scalar> tensor);
  bool contains(std::string_view name) const;
  // Throws ConfigError for an unknown name.
  const Tensor<Scalar>& get(std::string_view name) const;
  Tensor<Scalar>& get(std::string_view name);

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, tensor] : entries_) f(name, tensor);
  }

  std::vector<Tensor<Scalar>> tensors() const;
  void set_requires_grad(bool flag);
  void zero_grad();
  // Deep copy, optionally into another precision.
  template <typename Other>
  ModelParameters<Other> cast() const {
    ModelParameters<Other> out;
    for (const auto& [name, t] : entries_) out.add(name, t.template cast<Other>());
    return out;
  }

 private:
  std::vector<Entry> entries_;
};

// Matrices ~ normal(0, 0.02), biases and layer-norm beta 0, gamma 1. Each
// tensor draws from its own stream derived from (seed, index).
template <typename Scalar>
ModelParameters<Scalar> init_parameters(const ModelConfig& config, std::uint64_t seed);

// Adds a freshly initialised classification or tagging head (replacing any
// existing one) and records its size in `config`.
template <typename Scalar>
void attach_classifier(ModelParameters<Scalar>& params, ModelConfig& config, int num_classes,
                       std::uint64_t seed);
template <typename Scalar>
void attach_tagger(ModelParameters<Scalar>& params, ModelConfig& config, int num_tags,
                   std::uint64_t seed);

template <typename Scalar>
struct ForwardOptions {
  bool train = false;
  std::uint64_t dropout_seed = 0;
  // When set, receives the attention probabilities [B, heads, T, T] per layer.
  std::vector<Tensor<Scalar>>* attention_probs = nullptr;
};

// [B, T] ids -> [B, T, H] hidden states. Post-LN BERT layers with learned
// absolute positions. Throws SequenceTooLong when T > max_positions.
template <typename Scalar>
Tensor<Scalar> encode_sequence(const ModelParameters<Scalar>& params, const ModelConfig& config,
                               const IdMatrix& input_ids, const IdMatrix& attention_mask,
                               const IdMatrix& segment_ids,
                               const ForwardOptions<Scalar>& options = {});

// [B, T, H] -> [B, T, V] through transform, GELU, layer norm and the tied
// token-embedding projection.
template <typename Scalar>
Tensor<Scalar> mlm_logits(const ModelParameters<Scalar>& params, const Tensor<Scalar>& hidden);
// Same head applied only at flat positions `rows` (b * T + t) -> [N, V].
template <typename Scalar>
Tensor<Scalar> mlm_logits_at(const ModelParameters<Scalar>& params, const Tensor<Scalar>& hidden,
                             std::span<const std::int64_t> rows);

// Position-0 hidden state through one linear map -> [B, C].
template <typename Scalar>
Tensor<Scalar> classify_logits(const ModelParameters<Scalar>& params, const Tensor<Scalar>& hidden);

// Shared linear map at every position -> [B, T, K].
template <typename Scalar>
Tensor<Scalar> tag_logits(const ModelParameters<Scalar>& params, const Tensor<Scalar>& hidden);

enum class Task { kMlm, kClassify, kTag };

// Number of targets the loss for `task` averages over in this batch.
std::int64_t labeled_count(Task task, const Batch& batch);

// Mean cross-entropy over the batch's labeled targets.
template <typename Scalar>
Tensor<Scalar> task_loss(const ModelParameters<Scalar>& params, const ModelConfig& config,
                         Task task, const Batch& batch, const ForwardOptions<Scalar>& options = {});

// Argmax predictions in eval mode: [B] class ids for classification, [B, T]
// tag ids for tagging.
std::vector<std::int32_t> predict_classes(const ModelParameters<float>& params,
                                          const ModelConfig& config, const Batch& batch);
IdMatrix predict_tags(const ModelParameters<float>& params, const ModelConfig& config,
                      const Batch& batch);

}  // namespace albt
