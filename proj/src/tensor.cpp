#include "albt/tensor.h"

#include <random>
#include <unordered_set>

#include <fmt/format.h>

namespace albt {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  return fmt::format("[{}]", fmt::join(shape, ","));
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw InvalidShape("tensor shape must not be empty");
  for (auto d : shape) {
    if (d < 1) throw InvalidShape("non-positive dimension in " + shape_string(shape));
  }
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::create(const Shape& shape, const Init& fill) {
  validate_shape(shape);
  auto node = std::make_shared<NodeType>();
  node->shape = shape;
  const auto n = numel_of(shape);
  node->data.resize(n);
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, init::Zeros>) {
          node->data.setZero();
        } else if constexpr (std::is_same_v<F, init::Constant>) {
          node->data.setConstant(static_cast<Scalar>(f.value));
        } else if constexpr (std::is_same_v<F, init::Uniform>) {
          std::mt19937_64 rng(f.seed);
          std::uniform_real_distribution<double> dist(f.lo, f.hi);
          for (std::int64_t i = 0; i < n; ++i) node->data[i] = static_cast<Scalar>(dist(rng));
        } else {
          std::mt19937_64 rng(f.seed);
          std::normal_distribution<double> dist(f.mean, f.stddev);
          for (std::int64_t i = 0; i < n; ++i) node->data[i] = static_cast<Scalar>(dist(rng));
        }
      },
      fill);
  return wrap(std::move(node));
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::from_data(const Shape& shape, std::vector<Scalar> values) {
  return from_array(shape, Eigen::Map<Array<Scalar>>(values.data(), values.size()));
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::from_array(const Shape& shape, Array<Scalar> values) {
  validate_shape(shape);
  if (numel_of(shape) != values.size()) {
    throw InvalidShape(fmt::format("{} values do not fill shape {}", values.size(),
                                   shape_string(shape)));
  }
  auto node = std::make_shared<NodeType>();
  node->shape = shape;
  node->data = std::move(values);
  return wrap(std::move(node));
}

template <typename Scalar>
std::int64_t Tensor<Scalar>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw IndexOutOfRange("axis out of range");
  return node_->shape[axis];
}

template <typename Scalar>
Scalar Tensor<Scalar>::item() const {
  if (numel() != 1) throw InvalidShape("item() on non-scalar " + shape_string(shape()));
  return node_->data[0];
}

template <typename Scalar>
Tensor<Scalar>& Tensor<Scalar>::set_requires_grad(bool flag) {
  node_->requires_grad = flag;
  return *this;
}

template <typename Scalar>
Array<Scalar> Tensor<Scalar>::grad() const {
  if (has_grad()) return node_->grad;
  return Array<Scalar>::Zero(numel());
}

template <typename Scalar>
void Tensor<Scalar>::zero_grad() {
  if (has_grad()) node_->grad.setZero();
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::detach() const {
  return from_array(shape(), data());
}

template <typename Scalar>
void backward(const Tensor<Scalar>& loss) {
  using Node = detail::Node<Scalar>;
  if (!loss.defined() || loss.numel() != 1) {
    throw InvalidShape("backward() requires a scalar root");
  }
  Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; reversed, it is a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !parent->is_leaf() && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  // Interior gradients describe a single pass; only leaves accumulate.
  for (Node* node : order) {
    if (!node->is_leaf()) node->grad_buffer().setZero();
  }
  root->grad_buffer() += Scalar(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backward(**it);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace albt
