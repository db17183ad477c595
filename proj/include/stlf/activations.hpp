#ifndef STLF_ACTIVATIONS_HPP
#define STLF_ACTIVATIONS_HPP

#include <Eigen/Dense>

#include "stlf/tensor.hpp"

namespace stlf {

// Element-wise activations as Eigen array expressions, so they fuse into
// surrounding arithmetic without temporaries.

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) + (-x).exp()).inverse();
}

template <typename Derived>
auto tanh(const Eigen::ArrayBase<Derived>& x) {
  return x.tanh();
}

template <typename Derived>
auto relu(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.max(Scalar(0));
}

/// dσ/dx expressed through the activation value s = σ(x).
template <typename Derived>
auto sigmoid_grad_from_output(const Eigen::ArrayBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  return s * (Scalar(1) - s);
}

/// d tanh/dx expressed through y = tanh(x).
template <typename Derived>
auto tanh_grad_from_output(const Eigen::ArrayBase<Derived>& y) {
  using Scalar = typename Derived::Scalar;
  return Scalar(1) - y.square();
}

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& x) {
  return Tensor<Scalar>(x.shape(), sigmoid(x.flat().array()).matrix());
}

template <typename Scalar>
Tensor<Scalar> tanh(const Tensor<Scalar>& x) {
  return Tensor<Scalar>(x.shape(), x.flat().array().tanh().matrix());
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  return Tensor<Scalar>(x.shape(), relu(x.flat().array()).matrix());
}

/// Backward of ReLU: passes the gradient where the forward input was positive.
template <typename Scalar>
Sequence<Scalar> relu_backward(const Sequence<Scalar>& input, const Sequence<Scalar>& grad_output) {
  return (input.array() > Scalar(0)).select(grad_output, Scalar(0));
}

}  // namespace stlf

#endif  // STLF_ACTIVATIONS_HPP
