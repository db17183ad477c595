#ifndef STLF_TENSOR_HPP
#define STLF_TENSOR_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stlf/errors.hpp"

namespace stlf {

using Index = Eigen::Index;

/// Time-major activation: one row per time step, one column per channel.
template <typename Scalar>
using Sequence = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Shape = std::vector<Index>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  return os.str();
}

/// Dense rank-1..3 array stored row-major in a flat Eigen vector.
///
/// The flat storage is what optimizers, checkpoints and gradient checks walk;
/// kernels reinterpret it through `matrix()` views.
template <typename Scalar>
class Tensor {
 public:
  using Flat = Vector<Scalar>;
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_ = Flat::Zero(product(shape_));
  }

  Tensor(std::initializer_list<Index> shape) : Tensor(Shape(shape)) {}

  Tensor(Shape shape, Flat data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != product(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_.at(static_cast<std::size_t>(i)); }
  Index size() const { return data_.size(); }
  bool empty() const { return shape_.empty(); }

  Flat& flat() { return data_; }
  const Flat& flat() const { return data_; }

  Scalar& operator()(Index i) { return data_[i]; }
  Scalar operator()(Index i) const { return data_[i]; }
  Scalar& operator()(Index i, Index j) { return data_[i * shape_[1] + j]; }
  Scalar operator()(Index i, Index j) const { return data_[i * shape_[1] + j]; }
  Scalar& operator()(Index i, Index j, Index k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  Scalar operator()(Index i, Index j, Index k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Row-major view with the leading dimension as rows and everything else folded into columns.
  MatrixMap matrix() { return MatrixMap(data_.data(), shape_.front(), data_.size() / shape_.front()); }
  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), shape_.front(), data_.size() / shape_.front());
  }

  /// Row-major view with an explicit fold. rows * cols must equal size().
  MatrixMap matrix(Index rows, Index cols) {
    check_fold(rows, cols);
    return MatrixMap(data_.data(), rows, cols);
  }
  ConstMatrixMap matrix(Index rows, Index cols) const {
    check_fold(rows, cols);
    return ConstMatrixMap(data_.data(), rows, cols);
  }

  void set_zero() { data_.setZero(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static Index product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
  }

  static void validate_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 3) {
      throw ShapeError("tensor rank must be 1..3, got " + std::to_string(shape.size()));
    }
    for (Index d : shape) {
      if (d < 1) throw ShapeError("tensor dimensions must be >= 1, got " + shape_string(shape));
    }
  }

  void check_fold(Index rows, Index cols) const {
    if (rows * cols != data_.size()) {
      throw ShapeError("cannot view tensor " + shape_string(shape_) + " as " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  Shape shape_;
  Flat data_;
};

}  // namespace stlf

#endif  // STLF_TENSOR_HPP
