#pragma once

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "stitchvton/tensor.hpp"

namespace stitchvton::nn {

template <typename Scalar>
struct Node {
  BasicTensor<Scalar> value;
  AlignedVector<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  /// Adds `g` into this node's gradient buffer, allocating it on first use.
  void accumulate(std::span<const Scalar> g);
  AlignedVector<Scalar>& grad_buffer();
};

/// Handle to a node of the reverse-mode graph. Cheap to copy.
template <typename Scalar>
class Variable {
 public:
  Variable() = default;
  explicit Variable(std::shared_ptr<Node<Scalar>> node) : node_(std::move(node)) {}

  const BasicTensor<Scalar>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  const Node<Scalar>* id() const { return node_.get(); }
  const std::shared_ptr<Node<Scalar>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<Scalar>> node_;
};

template <typename Scalar>
Variable<Scalar> constant(BasicTensor<Scalar> value);

template <typename Scalar>
Variable<Scalar> parameter(BasicTensor<Scalar> value);

/// Gradients of a scalar loss with respect to every requires_grad leaf.
template <typename Scalar>
class Gradients {
 public:
  bool contains(const Variable<Scalar>& v) const { return grads_.count(v.id()) > 0; }
  /// Throws ContractError if `v` is not a requires_grad leaf of the graph.
  const BasicTensor<Scalar>& of(const Variable<Scalar>& v) const;
  std::size_t size() const { return grads_.size(); }

 private:
  template <typename S>
  friend Gradients<S> backprop(const Variable<S>& loss);
  std::unordered_map<const Node<Scalar>*, BasicTensor<Scalar>> grads_;
};

/// Reverse-mode sweep from a 1x1x1x1 loss. Leaves that were reached but got
/// no gradient contribution report zeros.
template <typename Scalar>
Gradients<Scalar> backprop(const Variable<Scalar>& loss);

// Differentiable ops. Shapes are NCHW; weights are (out, in, kh, kw);
// per-channel vectors (bias, gamma, beta) are any shape with `c` elements.

template <typename Scalar>
Variable<Scalar> conv2d(const Variable<Scalar>& input, const Variable<Scalar>& weight,
                        const Variable<Scalar>& bias, int stride, int padding);

template <typename Scalar>
Variable<Scalar> upsample_nearest2x(const Variable<Scalar>& x);

template <typename Scalar>
Variable<Scalar> avg_pool2x(const Variable<Scalar>& x);

template <typename Scalar>
Variable<Scalar> group_norm(const Variable<Scalar>& x, const Variable<Scalar>& gamma,
                            const Variable<Scalar>& beta, int groups, double eps = 1e-5);

template <typename Scalar>
Variable<Scalar> silu(const Variable<Scalar>& x);

/// Elementwise sum; `b` may also be (N, C, 1, 1) and is then broadcast over H x W.
template <typename Scalar>
Variable<Scalar> add(const Variable<Scalar>& a, const Variable<Scalar>& b);

template <typename Scalar>
Variable<Scalar> concat_channels(std::span<const Variable<Scalar>> parts);

template <typename Scalar>
Variable<Scalar> concat_width(std::span<const Variable<Scalar>> parts);

template <typename Scalar>
Variable<Scalar> slice_width(const Variable<Scalar>& x, int start, int length);

/// mean((a - b)^2) as a 1x1x1x1 tensor.
template <typename Scalar>
Variable<Scalar> mse(const Variable<Scalar>& a, const Variable<Scalar>& b);

template <typename Scalar>
Variable<Scalar> sum(const Variable<Scalar>& x);

using Var = Variable<float>;

}  // namespace stitchvton::nn
