#ifndef STLF_DENSE_HPP
#define STLF_DENSE_HPP

#include <string>

#include "stlf/tensor.hpp"

namespace stlf {

/// weights: [out × in], bias: [out].
template <typename Scalar>
struct DenseParams {
  Tensor<Scalar> weights;
  Tensor<Scalar> bias;

  DenseParams() = default;
  DenseParams(Index out, Index in) : weights({out, in}), bias({out}) {}

  Index outputs() const { return weights.dim(0); }
  Index inputs() const { return weights.dim(1); }

  void validate() const {
    if (weights.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
      throw ShapeError("dense params: weights " + shape_string(weights.shape()) + " vs bias " +
                       shape_string(bias.shape()));
    }
  }
};

/// Linear map y = W·x + b.
template <typename Scalar>
Vector<Scalar> dense_forward(const Vector<Scalar>& x, const DenseParams<Scalar>& params) {
  params.validate();
  if (x.size() != params.inputs()) {
    throw ShapeError("dense: input width " + std::to_string(x.size()) + ", expected " +
                     std::to_string(params.inputs()));
  }
  return params.weights.matrix() * x + params.bias.flat();
}

template <typename Scalar>
struct DenseGrads {
  Tensor<Scalar> weights;
  Tensor<Scalar> bias;
  Vector<Scalar> input;
};

template <typename Scalar>
DenseGrads<Scalar> dense_backward(const Vector<Scalar>& x, const DenseParams<Scalar>& params,
                                  const Vector<Scalar>& grad_output) {
  DenseGrads<Scalar> g{Tensor<Scalar>(params.weights.shape()), Tensor<Scalar>(params.bias.shape()),
                       params.weights.matrix().transpose() * grad_output};
  g.weights.matrix().noalias() = grad_output * x.transpose();
  g.bias.flat() = grad_output;
  return g;
}

}  // namespace stlf

#endif  // STLF_DENSE_HPP
