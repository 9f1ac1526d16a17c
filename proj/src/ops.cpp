#include "albt/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace albt {

namespace {

using Eigen::Dynamic;

template <typename S>
using Node = detail::Node<S>;

template <typename S>
using Block = Eigen::Array<S, Dynamic, Dynamic, Eigen::RowMajor>;

template <typename S>
using ConstMatMap = Eigen::Map<const RowMatrix<S>>;
template <typename S>
using MatMap = Eigen::Map<RowMatrix<S>>;
template <typename S>
using ConstBlockMap = Eigen::Map<const Block<S>>;
template <typename S>
using BlockMap = Eigen::Map<Block<S>>;

// Column-major view used for trailing broadcast: each column is one repeat.
template <typename S>
using ColArr = Eigen::Array<S, Dynamic, Dynamic>;

template <typename S, typename Backward>
Tensor<S> finish(Shape shape, Array<S> data, const char* op,
                 std::initializer_list<Tensor<S>> inputs, Backward&& backward_fn) {
  auto node = std::make_shared<Node<S>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  const bool needs_grad =
      grad_enabled() &&
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor<S>& t) { return t.requires_grad(); });
  if (needs_grad) {
    node->requires_grad = true;
    for (const auto& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::forward<Backward>(backward_fn);
  }
  return Tensor<S>::wrap(std::move(node));
}

template <typename S>
std::int64_t last_dim(const Tensor<S>& t) {
  return t.shape().back();
}

// Returns the repeat count of `b` over `a`, validating the broadcast rule.
template <typename S>
std::int64_t broadcast_repeats(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  if (b.numel() == 1) return a.numel();
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (bs.size() <= as.size() && std::equal(bs.rbegin(), bs.rend(), as.rbegin())) {
    return a.numel() / b.numel();
  }
  throw ShapeMismatch(fmt::format("{}: cannot broadcast {} onto {}", op, shape_string(bs),
                                  shape_string(as)));
}

template <typename S>
Array<S> reduce_repeats(const Array<S>& g, std::int64_t m) {
  Eigen::Map<const ColArr<S>> G(g.data(), m, g.size() / m);
  return G.rowwise().sum();
}

template <typename S>
Tensor<S> add_or_sub(const Tensor<S>& a, const Tensor<S>& b, S sign, const char* op) {
  const auto reps = broadcast_repeats(a, b, op);
  const auto m = b.numel();
  Array<S> out(a.numel());
  Eigen::Map<ColArr<S>>(out.data(), m, reps) =
      Eigen::Map<const ColArr<S>>(a.data().data(), m, reps).colwise() + sign * b.data();
  return finish<S>(a.shape(), std::move(out), op, {a, b},
                   [pa = a.node(), pb = b.node(), m, sign](Node<S>& self) {
                     if (pa->requires_grad) pa->grad_buffer() += self.grad;
                     if (pb->requires_grad) pb->grad_buffer() += sign * reduce_repeats(self.grad, m);
                   });
}

}  // namespace

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return add_or_sub(a, b, S(1), "add");
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return add_or_sub(a, b, S(-1), "sub");
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  const auto reps = broadcast_repeats(a, b, "mul");
  const auto m = b.numel();
  Array<S> out(a.numel());
  Eigen::Map<ColArr<S>>(out.data(), m, reps) =
      Eigen::Map<const ColArr<S>>(a.data().data(), m, reps).colwise() * b.data();
  return finish<S>(a.shape(), std::move(out), "mul", {a, b},
                   [pa = a.node(), pb = b.node(), m, reps](Node<S>& self) {
                     Eigen::Map<const ColArr<S>> G(self.grad.data(), m, reps);
                     if (pa->requires_grad) {
                       Eigen::Map<ColArr<S>>(pa->grad_buffer().data(), m, reps) +=
                           G.colwise() * pb->data;
                     }
                     if (pb->requires_grad) {
                       Eigen::Map<const ColArr<S>> A(pa->data.data(), m, reps);
                       pb->grad_buffer() += (G * A).rowwise().sum();
                     }
                   });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, double factor) {
  const S f = static_cast<S>(factor);
  return finish<S>(a.shape(), a.data() * f, "scale", {a}, [pa = a.node(), f](Node<S>& self) {
    pa->grad_buffer() += f * self.grad;
  });
}

namespace {

struct MatmulDims {
  std::int64_t batch = 1;  // 1 when b is a plain matrix
  std::int64_t m = 0, k = 0, n = 0;
  bool batched = false;
  Shape out_shape;
};

template <typename S>
MatmulDims matmul_dims(const Tensor<S>& a, const Tensor<S>& b, bool transpose_b) {
  const char* op = transpose_b ? "matmul_nt" : "matmul";
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (bs.size() < 2) throw ShapeMismatch(fmt::format("{}: right operand must be a matrix", op));
  MatmulDims d;
  d.k = as.back();
  const auto bk = transpose_b ? bs[bs.size() - 1] : bs[bs.size() - 2];
  d.n = transpose_b ? bs[bs.size() - 2] : bs[bs.size() - 1];
  if (bk != d.k) {
    throw ShapeMismatch(fmt::format("{}: inner dimensions differ in {} x {}", op,
                                    shape_string(as), shape_string(bs)));
  }
  d.out_shape = as;
  d.out_shape.back() = d.n;
  if (bs.size() == 2) {
    d.m = a.numel() / d.k;
    return d;
  }
  if (as.size() != bs.size() || !std::equal(as.begin(), as.end() - 2, bs.begin())) {
    throw ShapeMismatch(fmt::format("{}: batch axes differ in {} x {}", op, shape_string(as),
                                    shape_string(bs)));
  }
  d.batched = true;
  d.m = as[as.size() - 2];
  d.batch = a.numel() / (d.m * d.k);
  return d;
}

template <typename S>
Tensor<S> matmul_impl(const Tensor<S>& a, const Tensor<S>& b, bool transpose_b) {
  const auto d = matmul_dims(a, b, transpose_b);
  Array<S> out(d.batch * d.m * d.n);
  const auto a_stride = d.m * d.k;
  const auto b_stride = d.batched ? d.k * d.n : 0;
  const auto c_stride = d.m * d.n;
  const auto b_rows = transpose_b ? d.n : d.k;
  const auto b_cols = transpose_b ? d.k : d.n;
  for (std::int64_t i = 0; i < d.batch; ++i) {
    ConstMatMap<S> A(a.data().data() + i * a_stride, d.m, d.k);
    ConstMatMap<S> B(b.data().data() + i * b_stride, b_rows, b_cols);
    MatMap<S> C(out.data() + i * c_stride, d.m, d.n);
    if (transpose_b) {
      C.noalias() = A * B.transpose();
    } else {
      C.noalias() = A * B;
    }
  }
  return finish<S>(
      d.out_shape, std::move(out), transpose_b ? "matmul_nt" : "matmul", {a, b},
      [pa = a.node(), pb = b.node(), d, a_stride, b_stride, c_stride, b_rows, b_cols,
       transpose_b](Node<S>& self) {
        S* da = pa->requires_grad ? pa->grad_buffer().data() : nullptr;
        S* db = pb->requires_grad ? pb->grad_buffer().data() : nullptr;
        for (std::int64_t i = 0; i < d.batch; ++i) {
          ConstMatMap<S> G(self.grad.data() + i * c_stride, d.m, d.n);
          ConstMatMap<S> A(pa->data.data() + i * a_stride, d.m, d.k);
          ConstMatMap<S> B(pb->data.data() + i * b_stride, b_rows, b_cols);
          if (da) {
            MatMap<S> dA(da + i * a_stride, d.m, d.k);
            if (transpose_b) {
              dA.noalias() += G * B;
            } else {
              dA.noalias() += G * B.transpose();
            }
          }
          if (db) {
            MatMap<S> dB(db + i * b_stride, b_rows, b_cols);
            if (transpose_b) {
              dB.noalias() += G.transpose() * A;
            } else {
              dB.noalias() += A.transpose() * G;
            }
          }
        }
      });
}

}  // namespace

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  return matmul_impl(a, b, false);
}

template <typename S>
Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b) {
  return matmul_impl(a, b, true);
}

template <typename S>
Tensor<S> softmax(const Tensor<S>& x) {
  if (x.data().isNaN().any()) throw NumericError("softmax: NaN input");
  const auto cols = last_dim(x);
  const auto rows = x.numel() / cols;
  ConstBlockMap<S> X(x.data().data(), rows, cols);
  Array<S> out(x.numel());
  BlockMap<S> Y(out.data(), rows, cols);
  Y = (X.colwise() - X.rowwise().maxCoeff()).exp();
  Y.colwise() /= Y.rowwise().sum();
  return finish<S>(x.shape(), std::move(out), "softmax", {x},
                   [px = x.node(), rows, cols](Node<S>& self) {
                     ConstBlockMap<S> Y(self.data.data(), rows, cols);
                     ConstBlockMap<S> G(self.grad.data(), rows, cols);
                     const Array<S> dot = (G * Y).rowwise().sum();
                     BlockMap<S>(px->grad_buffer().data(), rows, cols) +=
                         Y * (G.colwise() - dot);
                   });
}

template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     double eps) {
  const auto h = last_dim(x);
  if (gamma.numel() != h || beta.numel() != h) {
    throw ShapeMismatch(fmt::format("layer_norm: gamma/beta must have {} elements", h));
  }
  const auto rows = x.numel() / h;
  ConstBlockMap<S> X(x.data().data(), rows, h);
  const Array<S> mean = X.rowwise().mean();
  Block<S> xhat = X.colwise() - mean;
  const Array<S> var = xhat.square().rowwise().mean();
  const Array<S> rstd = (var + static_cast<S>(eps)).rsqrt();
  xhat.colwise() *= rstd;
  Array<S> out(x.numel());
  BlockMap<S> Y(out.data(), rows, h);
  Y = (xhat.rowwise() * gamma.data().transpose()).rowwise() + beta.data().transpose();
  return finish<S>(
      x.shape(), std::move(out), "layer_norm", {x, gamma, beta},
      [px = x.node(), pg = gamma.node(), pb = beta.node(), xhat = std::move(xhat), rstd, rows,
       h](Node<S>& self) {
        ConstBlockMap<S> G(self.grad.data(), rows, h);
        if (pg->requires_grad) pg->grad_buffer() += (G * xhat).colwise().sum().transpose();
        if (pb->requires_grad) pb->grad_buffer() += G.colwise().sum().transpose();
        if (px->requires_grad) {
          const Block<S> dxhat = G.rowwise() * pg->data.transpose();
          const Array<S> mean_d = dxhat.rowwise().mean();
          const Array<S> mean_dx = (dxhat * xhat).rowwise().mean();
          BlockMap<S>(px->grad_buffer().data(), rows, h) +=
              ((dxhat.colwise() - mean_d) - xhat.colwise() * mean_dx).colwise() * rstd;
        }
      });
}

template <typename S>
Tensor<S> gelu(const Tensor<S>& x) {
  const S inv_sqrt2 = static_cast<S>(1.0 / std::numbers::sqrt2);
  Array<S> out = x.data().unaryExpr(
      [inv_sqrt2](S v) { return S(0.5) * v * (S(1) + std::erf(v * inv_sqrt2)); });
  return finish<S>(x.shape(), std::move(out), "gelu", {x},
                   [px = x.node(), inv_sqrt2](Node<S>& self) {
                     const S inv_sqrt_2pi =
                         static_cast<S>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
                     const Array<S> dydx = px->data.unaryExpr([&](S v) {
                       return S(0.5) * (S(1) + std::erf(v * inv_sqrt2)) +
                              v * inv_sqrt_2pi * std::exp(S(-0.5) * v * v);
                     });
                     px->grad_buffer() += self.grad * dydx;
                   });
}

template <typename S>
Tensor<S> dropout(const Tensor<S>& x, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  if (rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const S kept = static_cast<S>(1.0 / (1.0 - rate));
  Array<S> mask(x.numel());
  for (auto& v : mask) v = keep(rng) ? kept : S(0);
  Array<S> out = x.data() * mask;
  return finish<S>(x.shape(), std::move(out), "dropout", {x},
                   [px = x.node(), mask = std::move(mask)](Node<S>& self) {
                     px->grad_buffer() += self.grad * mask;
                   });
}

template <typename S>
Tensor<S> embedding_lookup(const Tensor<S>& table, std::span<const std::int32_t> ids,
                           const Shape& ids_shape) {
  if (table.rank() != 2) throw ShapeMismatch("embedding_lookup: table must be [V, H]");
  if (numel_of(ids_shape) != static_cast<std::int64_t>(ids.size())) {
    throw ShapeMismatch("embedding_lookup: ids do not match ids_shape");
  }
  const auto vocab = table.dim(0);
  const auto h = table.dim(1);
  std::vector<std::int32_t> rows(ids.begin(), ids.end());
  for (auto id : rows) {
    if (id < 0 || id >= vocab) {
      throw IndexOutOfRange(fmt::format("embedding id {} outside [0, {})", id, vocab));
    }
  }
  const auto n = static_cast<std::int64_t>(rows.size());
  Array<S> out(n * h);
  for (std::int64_t i = 0; i < n; ++i) {
    out.segment(i * h, h) = table.data().segment(rows[i] * h, h);
  }
  Shape shape = ids_shape;
  shape.push_back(h);
  return finish<S>(std::move(shape), std::move(out), "embedding_lookup", {table},
                   [pt = table.node(), rows = std::move(rows), h](Node<S>& self) {
                     auto& g = pt->grad_buffer();
                     for (std::size_t i = 0; i < rows.size(); ++i) {
                       g.segment(rows[i] * h, h) += self.grad.segment(i * h, h);
                     }
                   });
}

template <typename S>
Tensor<S> embedding_lookup(const Tensor<S>& table, const IdMatrix& ids) {
  return embedding_lookup(table, std::span<const std::int32_t>(ids.data(), ids.size()),
                          Shape{ids.rows(), ids.cols()});
}

template <typename S>
Tensor<S> cross_entropy(const Tensor<S>& logits, std::span<const std::int32_t> targets) {
  const auto classes = last_dim(logits);
  const auto rows = logits.numel() / classes;
  if (static_cast<std::int64_t>(targets.size()) != rows) {
    throw ShapeMismatch(
        fmt::format("cross_entropy: {} targets for {} logit rows", targets.size(), rows));
  }
  std::vector<std::int64_t> labeled;
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto t = targets[r];
    if (t == kNoLabel) continue;
    if (t < 0 || t >= classes) {
      throw IndexOutOfRange(fmt::format("target {} outside [0, {})", t, classes));
    }
    labeled.push_back(r);
  }
  ConstBlockMap<S> L(logits.data().data(), rows, classes);
  const auto count = static_cast<std::int64_t>(labeled.size());
  Block<S> probs(count, classes);
  std::vector<std::int32_t> labels(count);
  S total = 0;
  for (std::int64_t i = 0; i < count; ++i) {
    const auto r = labeled[i];
    const S mx = L.row(r).maxCoeff();
    probs.row(i) = (L.row(r) - mx).exp();
    const S z = probs.row(i).sum();
    probs.row(i) /= z;
    labels[i] = targets[r];
    total += std::log(z) + mx - L(r, labels[i]);
  }
  Array<S> out(1);
  out[0] = count > 0 ? total / static_cast<S>(count) : S(0);
  return finish<S>(Shape{1}, std::move(out), "cross_entropy", {logits},
                   [pl = logits.node(), labeled = std::move(labeled), probs = std::move(probs),
                    labels = std::move(labels), rows, classes](Node<S>& self) {
                     if (labeled.empty()) {
                       pl->grad_buffer();
                       return;
                     }
                     const S g = self.grad[0] / static_cast<S>(labeled.size());
                     BlockMap<S> dL(pl->grad_buffer().data(), rows, classes);
                     for (std::size_t i = 0; i < labeled.size(); ++i) {
                       dL.row(labeled[i]) += g * probs.row(i);
                       dL(labeled[i], labels[i]) -= g;
                     }
                   });
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, const Shape& shape) {
  if (numel_of(shape) != x.numel()) {
    throw InvalidShape(fmt::format("reshape {} -> {} changes element count",
                                   shape_string(x.shape()), shape_string(shape)));
  }
  return finish<S>(shape, x.data(), "reshape", {x},
                   [px = x.node()](Node<S>& self) { px->grad_buffer() += self.grad; });
}

namespace {

// Copies between [B, T, heads*d] and [B, heads, T, d]; `forward` selects the
// direction. Both layouts are row-major.
template <typename S>
void permute_heads(const S* src, S* dst, std::int64_t b, std::int64_t t, std::int64_t heads,
                   std::int64_t d, bool split, bool accumulate) {
  for (std::int64_t ib = 0; ib < b; ++ib) {
    for (std::int64_t it = 0; it < t; ++it) {
      for (std::int64_t ih = 0; ih < heads; ++ih) {
        const auto merged = ((ib * t + it) * heads + ih) * d;
        const auto splitted = ((ib * heads + ih) * t + it) * d;
        const S* from = src + (split ? merged : splitted);
        S* to = dst + (split ? splitted : merged);
        if (accumulate) {
          for (std::int64_t j = 0; j < d; ++j) to[j] += from[j];
        } else {
          std::copy(from, from + d, to);
        }
      }
    }
  }
}

}  // namespace

template <typename S>
Tensor<S> split_heads(const Tensor<S>& x, std::int64_t heads) {
  if (x.rank() != 3 || x.dim(2) % heads != 0) {
    throw ShapeMismatch("split_heads: expected [B, T, H] with H divisible by heads");
  }
  const auto b = x.dim(0), t = x.dim(1), d = x.dim(2) / heads;
  Array<S> out(x.numel());
  permute_heads(x.data().data(), out.data(), b, t, heads, d, true, false);
  return finish<S>(Shape{b, heads, t, d}, std::move(out), "split_heads", {x},
                   [px = x.node(), b, t, heads, d](Node<S>& self) {
                     permute_heads(self.grad.data(), px->grad_buffer().data(), b, t, heads, d,
                                   false, true);
                   });
}

template <typename S>
Tensor<S> merge_heads(const Tensor<S>& x) {
  if (x.rank() != 4) throw ShapeMismatch("merge_heads: expected [B, heads, T, d]");
  const auto b = x.dim(0), heads = x.dim(1), t = x.dim(2), d = x.dim(3);
  Array<S> out(x.numel());
  permute_heads(x.data().data(), out.data(), b, t, heads, d, false, false);
  return finish<S>(Shape{b, t, heads * d}, std::move(out), "merge_heads", {x},
                   [px = x.node(), b, t, heads, d](Node<S>& self) {
                     permute_heads(self.grad.data(), px->grad_buffer().data(), b, t, heads, d,
                                   true, true);
                   });
}

template <typename S>
Tensor<S> mask_keys(const Tensor<S>& scores, const IdMatrix& attention_mask) {
  if (scores.rank() != 4 || scores.dim(0) != attention_mask.rows() ||
      scores.dim(3) != attention_mask.cols()) {
    throw ShapeMismatch("mask_keys: scores must be [B, heads, T, T] matching the mask");
  }
  const auto b = scores.dim(0);
  const auto t = scores.dim(3);
  const auto per_batch = scores.numel() / b;
  Array<S> out = scores.data();
  const S penalty = static_cast<S>(kMaskedScore);
  for (std::int64_t ib = 0; ib < b; ++ib) {
    BlockMap<S> rows(out.data() + ib * per_batch, per_batch / t, t);
    for (std::int64_t k = 0; k < t; ++k) {
      if (attention_mask(ib, k) == 0) rows.col(k) += penalty;
    }
  }
  return finish<S>(scores.shape(), std::move(out), "mask_keys", {scores},
                   [ps = scores.node()](Node<S>& self) { ps->grad_buffer() += self.grad; });
}

template <typename S>
Tensor<S> select_position(const Tensor<S>& x, std::int64_t t) {
  if (x.rank() != 3) throw ShapeMismatch("select_position: expected [B, T, H]");
  const auto b = x.dim(0), len = x.dim(1), h = x.dim(2);
  if (t < 0 || t >= len) throw IndexOutOfRange("select_position: position out of range");
  Array<S> out(b * h);
  for (std::int64_t i = 0; i < b; ++i) out.segment(i * h, h) = x.data().segment((i * len + t) * h, h);
  return finish<S>(Shape{b, h}, std::move(out), "select_position", {x},
                   [px = x.node(), b, len, h, t](Node<S>& self) {
                     auto& g = px->grad_buffer();
                     for (std::int64_t i = 0; i < b; ++i) {
                       g.segment((i * len + t) * h, h) += self.grad.segment(i * h, h);
                     }
                   });
}

template <typename S>
Tensor<S> gather_rows(const Tensor<S>& x, std::span<const std::int64_t> rows) {
  const auto h = last_dim(x);
  const auto available = x.numel() / h;
  std::vector<std::int64_t> picked(rows.begin(), rows.end());
  for (auto r : picked) {
    if (r < 0 || r >= available) throw IndexOutOfRange("gather_rows: row out of range");
  }
  if (picked.empty()) throw InvalidShape("gather_rows: no rows selected");
  const auto n = static_cast<std::int64_t>(picked.size());
  Array<S> out(n * h);
  for (std::int64_t i = 0; i < n; ++i) out.segment(i * h, h) = x.data().segment(picked[i] * h, h);
  return finish<S>(Shape{n, h}, std::move(out), "gather_rows", {x},
                   [px = x.node(), picked = std::move(picked), h](Node<S>& self) {
                     auto& g = px->grad_buffer();
                     for (std::size_t i = 0; i < picked.size(); ++i) {
                       g.segment(picked[i] * h, h) += self.grad.segment(i * h, h);
                     }
                   });
}

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  Array<S> out(1);
  out[0] = x.data().sum();
  return finish<S>(Shape{1}, std::move(out), "sum", {x},
                   [px = x.node()](Node<S>& self) { px->grad_buffer() += self.grad[0]; });
}

#define ALBT_INSTANTIATE_OPS(S)                                                              \
  template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> scale(const Tensor<S>&, double);                                        \
  template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);                             \
  template Tensor<S> matmul_nt(const Tensor<S>&, const Tensor<S>&);                          \
  template Tensor<S> softmax(const Tensor<S>&);                                              \
  template Tensor<S> layer_norm(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,        \
                                double);                                                     \
  template Tensor<S> gelu(const Tensor<S>&);                                                 \
  template Tensor<S> dropout(const Tensor<S>&, double, std::mt19937_64&);                    \
  template Tensor<S> embedding_lookup(const Tensor<S>&, std::span<const std::int32_t>,       \
                                      const Shape&);                                         \
  template Tensor<S> embedding_lookup(const Tensor<S>&, const IdMatrix&);                    \
  template Tensor<S> cross_entropy(const Tensor<S>&, std::span<const std::int32_t>);         \
  template Tensor<S> reshape(const Tensor<S>&, const Shape&);                                \
  template Tensor<S> split_heads(const Tensor<S>&, std::int64_t);                            \
  template Tensor<S> merge_heads(const Tensor<S>&);                                          \
  template Tensor<S> mask_keys(const Tensor<S>&, const IdMatrix&);                           \
  template Tensor<S> select_position(const Tensor<S>&, std::int64_t);                        \
  template Tensor<S> gather_rows(const Tensor<S>&, std::span<const std::int64_t>);           \
  template Tensor<S> sum(const Tensor<S>&);

ALBT_INSTANTIATE_OPS(float)
ALBT_INSTANTIATE_OPS(double)

#undef ALBT_INSTANTIATE_OPS

}  // namespace albt
