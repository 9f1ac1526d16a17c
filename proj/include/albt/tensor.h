#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "albt/error.h"

namespace albt {

using Shape = std::vector<std::int64_t>;

template <typename Scalar>
using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Training runs in float; the gradient checker runs the same code in double.
enum class PrecisionMode { kTrain32, kCheck64 };

template <typename Scalar>
constexpr PrecisionMode precision_of() {
  static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
  return std::is_same_v<Scalar, float> ? PrecisionMode::kTrain32
                                       : PrecisionMode::kCheck64;
}

// Token ids, labels and masks travel as row-major integer matrices (B x T).
using IdMatrix =
    Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Reserved label value meaning "no target at this position". It lies outside
// every class range, so it never collides with a real class id.
inline constexpr std::int32_t kNoLabel = -100;

std::int64_t numel_of(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace init {
struct Zeros {};
struct Constant {
  double value;
};
struct Uniform {
  double lo;
  double hi;
  std::uint64_t seed;
};
struct Normal {
  double mean;
  double stddev;
  std::uint64_t seed;
};
}  // namespace init

using Init = std::variant<init::Zeros, init::Constant, init::Uniform, init::Normal>;

namespace detail {

template <typename Scalar>
struct Node {
  Shape shape;
  Array<Scalar> data;
  Array<Scalar> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward;
  const char* op = "leaf";

  bool is_leaf() const { return !backward; }
  Array<Scalar>& grad_buffer() {
    if (grad.size() != data.size()) grad = Array<Scalar>::Zero(data.size());
    return grad;
  }
};

}  // namespace detail

// Reference-counted handle to a dense row-major array that may take part in a
// reverse-mode differentiation graph. Copies share storage.
template <typename Scalar>
class Tensor {
 public:
  using scalar_type = Scalar;
  using NodeType = detail::Node<Scalar>;

  Tensor() = default;

  static Tensor create(const Shape& shape, const Init& fill);
  static Tensor zeros(const Shape& shape) { return create(shape, init::Zeros{}); }
  static Tensor constant(const Shape& shape, double value) {
    return create(shape, init::Constant{value});
  }
  static Tensor from_data(const Shape& shape, std::vector<Scalar> values);
  static Tensor from_array(const Shape& shape, Array<Scalar> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::int64_t numel() const { return node_->data.size(); }

  const Array<Scalar>& data() const { return node_->data; }
  // In-place writes are reserved for leaves (optimizer updates, grad checks).
  Array<Scalar>& mutable_data() { return node_->data; }
  Scalar item() const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool flag);
  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  // Zero-filled view when no gradient has been accumulated yet.
  Array<Scalar> grad() const;
  void zero_grad();

  const char* op_name() const { return node_->op; }
  // Fresh leaf sharing no graph history with this tensor.
  Tensor detach() const;
  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>::from_array(shape(), data().template cast<Other>());
  }

  NodeType* node() const { return node_.get(); }
  const std::shared_ptr<NodeType>& node_ptr() const { return node_; }
  static Tensor wrap(std::shared_ptr<NodeType> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<NodeType> node_;
};

// Disables graph construction on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Accumulates d(loss)/d(leaf) into every reachable leaf that requires grad.
// Leaf gradients add up across calls; call zero_grad between steps.
template <typename Scalar>
void backward(const Tensor<Scalar>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template void backward(const Tensor<float>&);
extern template void backward(const Tensor<double>&);

}  // namespace albt
