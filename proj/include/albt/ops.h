#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "albt/tensor.h"

namespace albt {

// Elementwise arithmetic. `b` either matches `a`'s shape, matches a trailing
// suffix of it (repeated over the leading axes), or holds a single element.
template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b);
template <typename Scalar>
Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b);
template <typename Scalar>
Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b);
template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& a, double factor);

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return add(a, b);
}
template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return sub(a, b);
}
template <typename Scalar>
Tensor<Scalar> operator*(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return mul(a, b);
}

// [..., m, k] x [k, n] -> [..., m, n], or batched when both operands share
// the same leading axes: [..., m, k] x [..., k, n].
template <typename Scalar>
Tensor<Scalar> matmul(const Tensor<Scalar>& a, const Tensor<Scalar>& b);
// a . b^T without materialising the transpose: [..., m, k] x [n, k] or
// batched [..., m, k] x [..., n, k].
template <typename Scalar>
Tensor<Scalar> matmul_nt(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

// Softmax over the last axis. Throws NumericError on NaN input.
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& x);

inline constexpr double kLayerNormEps = 1e-12;

template <typename Scalar>
Tensor<Scalar> layer_norm(const Tensor<Scalar>& x, const Tensor<Scalar>& gamma,
                          const Tensor<Scalar>& beta, double eps = kLayerNormEps);

// Exact form 0.5 * x * (1 + erf(x / sqrt(2))).
template <typename Scalar>
Tensor<Scalar> gelu(const Tensor<Scalar>& x);

// Inverted dropout: zeroes with probability `rate`, scales survivors by
// 1 / (1 - rate). Identity when rate == 0.
template <typename Scalar>
Tensor<Scalar> dropout(const Tensor<Scalar>& x, double rate, std::mt19937_64& rng);

// Gathers rows of `table` [V, H]; result is ids_shape + [H].
template <typename Scalar>
Tensor<Scalar> embedding_lookup(const Tensor<Scalar>& table,
                                std::span<const std::int32_t> ids, const Shape& ids_shape);
template <typename Scalar>
Tensor<Scalar> embedding_lookup(const Tensor<Scalar>& table, const IdMatrix& ids);

// Mean negative log-likelihood over rows whose target is not kNoLabel.
// Logits are [..., C] with one target per leading position. Zero labeled rows
// give a loss of exactly 0 and zero gradient.
template <typename Scalar>
Tensor<Scalar> cross_entropy(const Tensor<Scalar>& logits,
                             std::span<const std::int32_t> targets);

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& x, const Shape& shape);

// [B, T, H] -> [B, heads, T, H / heads] and back.
template <typename Scalar>
Tensor<Scalar> split_heads(const Tensor<Scalar>& x, std::int64_t heads);
template <typename Scalar>
Tensor<Scalar> merge_heads(const Tensor<Scalar>& x);

inline constexpr double kMaskedScore = -1e9;

// Adds kMaskedScore to attention scores [B, heads, T, T] at every key
// position whose mask entry (B x T) is zero.
template <typename Scalar>
Tensor<Scalar> mask_keys(const Tensor<Scalar>& scores, const IdMatrix& attention_mask);

// [B, T, H] -> [B, H] at sequence position `t`.
template <typename Scalar>
Tensor<Scalar> select_position(const Tensor<Scalar>& x, std::int64_t t);

// Treats x as a stack of rows of its last axis and gathers `rows` -> [N, H].
template <typename Scalar>
Tensor<Scalar> gather_rows(const Tensor<Scalar>& x, std::span<const std::int64_t> rows);

// Sum of all elements, shape [1].
template <typename Scalar>
Tensor<Scalar> sum(const Tensor<Scalar>& x);

}  // namespace albt
