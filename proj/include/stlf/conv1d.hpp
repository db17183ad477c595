#ifndef STLF_CONV1D_HPP
#define STLF_CONV1D_HPP

#include <string>

#include "stlf/tensor.hpp"

namespace stlf {

enum class Padding { same, valid };

inline const char* to_string(Padding p) { return p == Padding::same ? "same" : "valid"; }

/// weights: [filters × in_channels × kernel], bias: [filters].
template <typename Scalar>
struct ConvParams {
  Tensor<Scalar> weights;
  Tensor<Scalar> bias;
  Padding padding = Padding::same;

  ConvParams() = default;
  ConvParams(Index filters, Index in_channels, Index kernel, Padding pad)
      : weights({filters, in_channels, kernel}), bias({filters}), padding(pad) {}

  Index filters() const { return weights.dim(0); }
  Index in_channels() const { return weights.dim(1); }
  Index kernel() const { return weights.dim(2); }

  void validate() const {
    if (weights.rank() != 3 || bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
      throw ShapeError("conv params: weights " + shape_string(weights.shape()) + " vs bias " +
                       shape_string(bias.shape()));
    }
  }
};

/// Left/right zero padding for a kernel of size M.
inline std::pair<Index, Index> conv_padding(Padding padding, Index kernel) {
  if (padding == Padding::valid) return {0, 0};
  return {(kernel - 1) / 2, kernel / 2};
}

inline Index conv_output_length(Index steps, Index kernel, Padding padding) {
  return padding == Padding::same ? steps : steps - kernel + 1;
}

namespace detail {

/// Patch matrix [T' × (C·M)] with column c·M + m holding padded_input(t + m, c).
template <typename Scalar>
RowMatrix<Scalar> conv_patches(const Sequence<Scalar>& input, Index kernel, Padding padding) {
  const auto [left, right] = conv_padding(padding, kernel);
  const Index steps = input.rows();
  const Index channels = input.cols();
  const Index out_steps = steps + left + right - kernel + 1;
  RowMatrix<Scalar> patches = RowMatrix<Scalar>::Zero(out_steps, channels * kernel);
  for (Index t = 0; t < out_steps; ++t) {
    for (Index m = 0; m < kernel; ++m) {
      const Index src = t + m - left;
      if (src < 0 || src >= steps) continue;
      for (Index c = 0; c < channels; ++c) patches(t, c * kernel + m) = input(src, c);
    }
  }
  return patches;
}

}  // namespace detail

/// 1-D cross-correlation: out(t, j) = b_j + Σ_c Σ_m w(j, c, m) · in(t + m − left, c).
template <typename Scalar>
Sequence<Scalar> conv1d_forward(const Sequence<Scalar>& input, const ConvParams<Scalar>& params) {
  params.validate();
  if (input.cols() != params.in_channels()) {
    throw ShapeError("conv1d: input has " + std::to_string(input.cols()) + " channels, expected " +
                     std::to_string(params.in_channels()));
  }
  if (params.padding == Padding::valid && input.rows() < params.kernel()) {
    throw ShapeError("conv1d: valid padding needs at least " + std::to_string(params.kernel()) +
                     " steps, got " + std::to_string(input.rows()));
  }
  const auto patches = detail::conv_patches(input, params.kernel(), params.padding);
  const auto w = params.weights.matrix(params.filters(), params.in_channels() * params.kernel());
  Sequence<Scalar> out = patches * w.transpose();
  out.rowwise() += params.bias.flat().transpose();
  return out;
}

template <typename Scalar>
struct ConvGrads {
  Tensor<Scalar> weights;
  Tensor<Scalar> bias;
  Sequence<Scalar> input;
};

template <typename Scalar>
ConvGrads<Scalar> conv1d_backward(const Sequence<Scalar>& input, const ConvParams<Scalar>& params,
                                  const Sequence<Scalar>& grad_output) {
  const Index kernel = params.kernel();
  const Index channels = params.in_channels();
  const auto patches = detail::conv_patches(input, kernel, params.padding);
  const auto w = params.weights.matrix(params.filters(), channels * kernel);

  ConvGrads<Scalar> g{Tensor<Scalar>(params.weights.shape()), Tensor<Scalar>(params.bias.shape()),
                      Sequence<Scalar>::Zero(input.rows(), channels)};
  g.weights.matrix(params.filters(), channels * kernel) = grad_output.transpose() * patches;
  g.bias.flat() = grad_output.colwise().sum().transpose();

  const RowMatrix<Scalar> grad_patches = grad_output * w;
  const Index left = conv_padding(params.padding, kernel).first;
  for (Index t = 0; t < grad_patches.rows(); ++t) {
    for (Index m = 0; m < kernel; ++m) {
      const Index src = t + m - left;
      if (src < 0 || src >= input.rows()) continue;
      for (Index c = 0; c < channels; ++c) g.input(src, c) += grad_patches(t, c * kernel + m);
    }
  }
  return g;
}

}  // namespace stlf

#endif  // STLF_CONV1D_HPP
