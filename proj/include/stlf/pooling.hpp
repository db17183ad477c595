#ifndef STLF_POOLING_HPP
#define STLF_POOLING_HPP

#include <string>

#include "stlf/tensor.hpp"

namespace stlf {

template <typename Scalar>
struct PoolResult {
  Sequence<Scalar> output;
  /// Source row in the input for every output element, used to route gradients.
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> argmax;
};

/// Non-overlapping max pooling along time with stride = pool; a trailing remainder shorter
/// than `pool` is dropped. Ties resolve to the earliest row.
template <typename Scalar>
PoolResult<Scalar> maxpool1d(const Sequence<Scalar>& input, Index pool) {
  if (pool < 1) throw ShapeError("maxpool1d: pool size must be >= 1");
  if (input.rows() < pool) {
    throw ShapeError("maxpool1d: input length " + std::to_string(input.rows()) +
                     " shorter than pool size " + std::to_string(pool));
  }
  const Index out_steps = input.rows() / pool;
  PoolResult<Scalar> r{Sequence<Scalar>(out_steps, input.cols()), {}};
  r.argmax.resize(out_steps, input.cols());
  for (Index i = 0; i < out_steps; ++i) {
    for (Index c = 0; c < input.cols(); ++c) {
      Index best = i * pool;
      for (Index k = best + 1; k < (i + 1) * pool; ++k) {
        if (input(k, c) > input(best, c)) best = k;
      }
      r.output(i, c) = input(best, c);
      r.argmax(i, c) = best;
    }
  }
  return r;
}

template <typename Scalar>
Sequence<Scalar> maxpool1d_backward(const PoolResult<Scalar>& forward, Index input_steps,
                                    const Sequence<Scalar>& grad_output) {
  Sequence<Scalar> grad = Sequence<Scalar>::Zero(input_steps, grad_output.cols());
  for (Index i = 0; i < grad_output.rows(); ++i) {
    for (Index c = 0; c < grad_output.cols(); ++c) grad(forward.argmax(i, c), c) += grad_output(i, c);
  }
  return grad;
}

}  // namespace stlf

#endif  // STLF_POOLING_HPP
