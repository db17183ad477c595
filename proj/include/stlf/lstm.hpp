#ifndef STLF_LSTM_HPP
#define STLF_LSTM_HPP

#include <cmath>
#include <string>

#include "stlf/activations.hpp"
#include "stlf/tensor.hpp"

namespace stlf {

/// Gate blocks are packed in the order forget, input, output, candidate.
enum class Gate : Index { forget = 0, input = 1, output = 2, candidate = 3 };
inline constexpr Index kGateCount = 4;

/// W: [4 × units × input_dim], U: [4 × units × units], b: [4 × units].
template <typename Scalar>
struct LstmParams {
  Tensor<Scalar> W;
  Tensor<Scalar> U;
  Tensor<Scalar> b;

  LstmParams() = default;
  LstmParams(Index units, Index input_dim)
      : W({kGateCount, units, input_dim}), U({kGateCount, units, units}), b({kGateCount, units}) {}

  Index units() const { return U.dim(1); }
  Index input_dim() const { return W.dim(2); }

  void validate() const {
    const bool ok = W.rank() == 3 && U.rank() == 3 && b.rank() == 2 && W.dim(0) == kGateCount &&
                    U.dim(0) == kGateCount && b.dim(0) == kGateCount && U.dim(1) == U.dim(2) &&
                    W.dim(1) == U.dim(1) && b.dim(1) == U.dim(1);
    if (!ok) {
      throw ShapeError("lstm params: W " + shape_string(W.shape()) + ", U " + shape_string(U.shape()) +
                       ", b " + shape_string(b.shape()));
    }
  }

  /// [4·units × input_dim] and [4·units × units] stacked gate matrices.
  auto input_matrix() const { return W.matrix(kGateCount * units(), input_dim()); }
  auto recurrent_matrix() const { return U.matrix(kGateCount * units(), units()); }
};

template <typename Scalar>
struct LstmState {
  Vector<Scalar> h;
  Vector<Scalar> c;
};

namespace detail {

/// Activated gates (f, i, o, c̄ packed) for one step. Shared by the cell and sequence paths
/// so both produce identical bits.
template <typename Scalar>
Vector<Scalar> lstm_gates(const Eigen::Ref<const Vector<Scalar>>& x, const Vector<Scalar>& h_prev,
                          const LstmParams<Scalar>& p) {
  const Index u = p.units();
  Vector<Scalar> z = p.input_matrix() * x;
  z.noalias() += p.recurrent_matrix() * h_prev;
  z += p.b.flat();
  Vector<Scalar> gates(kGateCount * u);
  gates.head(3 * u) = sigmoid(z.head(3 * u).array()).matrix();
  gates.tail(u) = z.tail(u).array().tanh().matrix();
  return gates;
}

template <typename Scalar>
LstmState<Scalar> lstm_state_update(const Vector<Scalar>& gates, const Vector<Scalar>& c_prev) {
  const Index u = c_prev.size();
  const auto f = gates.segment(0, u).array();
  const auto i = gates.segment(u, u).array();
  const auto o = gates.segment(2 * u, u).array();
  const auto g = gates.segment(3 * u, u).array();
  LstmState<Scalar> s;
  s.c = (f * c_prev.array() + i * g).matrix();
  s.h = (o * s.c.array().tanh()).matrix();
  return s;
}

}  // namespace detail

/// One LSTM step with sigmoid gates and a tanh candidate.
template <typename Scalar>
LstmState<Scalar> lstm_cell_forward(const Vector<Scalar>& x, const Vector<Scalar>& h_prev,
                                    const Vector<Scalar>& c_prev, const LstmParams<Scalar>& params) {
  params.validate();
  if (x.size() != params.input_dim() || h_prev.size() != params.units() ||
      c_prev.size() != params.units()) {
    throw ShapeError("lstm cell: x/h/c sizes " + std::to_string(x.size()) + "/" +
                     std::to_string(h_prev.size()) + "/" + std::to_string(c_prev.size()) +
                     " do not match params (input " + std::to_string(params.input_dim()) +
                     ", units " + std::to_string(params.units()) + ")");
  }
  return detail::lstm_state_update(detail::lstm_gates<Scalar>(x, h_prev, params), c_prev);
}

enum class Direction { forward, backward };

/// Everything BPTT needs, indexed by original time step.
template <typename Scalar>
struct LstmCache {
  Direction direction = Direction::forward;
  RowMatrix<Scalar> gates;   // [T × 4u]
  RowMatrix<Scalar> c;       // [T × u]
  RowMatrix<Scalar> h_prev;  // [T × u] state fed into step t
  RowMatrix<Scalar> c_prev;  // [T × u]
};

template <typename Scalar>
struct LstmOutput {
  Sequence<Scalar> hidden;  // [T × u], row t is h at original time t
  Vector<Scalar> final_h;
  Vector<Scalar> final_c;
};

/// Runs the cell over the sequence from zero state. The backward direction walks
/// t = T-1 .. 0 but stores each step's output at its original time index.
template <typename Scalar>
LstmOutput<Scalar> lstm_forward(const Sequence<Scalar>& seq, const LstmParams<Scalar>& params,
                                Direction direction, LstmCache<Scalar>* cache = nullptr) {
  params.validate();
  const Index steps = seq.rows();
  const Index u = params.units();
  if (steps == 0) throw ShapeError("lstm: empty sequence");
  if (seq.cols() != params.input_dim()) {
    throw ShapeError("lstm: input width " + std::to_string(seq.cols()) + " does not match " +
                     std::to_string(params.input_dim()));
  }
  if (cache) {
    cache->direction = direction;
    cache->gates.resize(steps, kGateCount * u);
    cache->c.resize(steps, u);
    cache->h_prev.resize(steps, u);
    cache->c_prev.resize(steps, u);
  }
  LstmOutput<Scalar> out{Sequence<Scalar>(steps, u), {}, {}};
  LstmState<Scalar> state{Vector<Scalar>::Zero(u), Vector<Scalar>::Zero(u)};
  for (Index k = 0; k < steps; ++k) {
    const Index t = direction == Direction::forward ? k : steps - 1 - k;
    const Vector<Scalar> x = seq.row(t).transpose();
    const Vector<Scalar> gates = detail::lstm_gates<Scalar>(x, state.h, params);
    if (cache) {
      cache->gates.row(t) = gates.transpose();
      cache->h_prev.row(t) = state.h.transpose();
      cache->c_prev.row(t) = state.c.transpose();
    }
    state = detail::lstm_state_update(gates, state.c);
    if (cache) cache->c.row(t) = state.c.transpose();
    out.hidden.row(t) = state.h.transpose();
  }
  out.final_h = std::move(state.h);
  out.final_c = std::move(state.c);
  return out;
}

template <typename Scalar>
struct LstmGrads {
  Tensor<Scalar> W;
  Tensor<Scalar> U;
  Tensor<Scalar> b;
  Sequence<Scalar> input;
};

/// BPTT over the full sequence. `grad_hidden` row t is ∂L/∂h_t at original time t.
template <typename Scalar>
LstmGrads<Scalar> lstm_backward(const Sequence<Scalar>& seq, const LstmParams<Scalar>& params,
                                const LstmCache<Scalar>& cache, const Sequence<Scalar>& grad_hidden) {
  const Index steps = seq.rows();
  const Index u = params.units();
  RowMatrix<Scalar> grad_z(steps, kGateCount * u);
  Vector<Scalar> dh_next = Vector<Scalar>::Zero(u);
  Vector<Scalar> dc_next = Vector<Scalar>::Zero(u);
  const auto recurrent = params.recurrent_matrix();

  for (Index k = steps - 1; k >= 0; --k) {
    const Index t = cache.direction == Direction::forward ? k : steps - 1 - k;
    const auto gates = cache.gates.row(t).array();
    const auto f = gates.segment(0, u);
    const auto i = gates.segment(u, u);
    const auto o = gates.segment(2 * u, u);
    const auto g = gates.segment(3 * u, u);
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> tanh_c = cache.c.row(t).array().tanh();

    const Eigen::Array<Scalar, 1, Eigen::Dynamic> dh = grad_hidden.row(t).array() + dh_next.transpose().array();
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> dc =
        dh * o * tanh_grad_from_output(tanh_c) + dc_next.transpose().array();

    auto dz = grad_z.row(t).array();
    dz.segment(0, u) = dc * cache.c_prev.row(t).array() * sigmoid_grad_from_output(f);
    dz.segment(u, u) = dc * g * sigmoid_grad_from_output(i);
    dz.segment(2 * u, u) = dh * tanh_c * sigmoid_grad_from_output(o);
    dz.segment(3 * u, u) = dc * i * tanh_grad_from_output(g);

    dc_next = (dc * f).transpose().matrix();
    dh_next.noalias() = recurrent.transpose() * grad_z.row(t).transpose();
  }

  LstmGrads<Scalar> r{Tensor<Scalar>(params.W.shape()), Tensor<Scalar>(params.U.shape()),
                      Tensor<Scalar>(params.b.shape()), {}};
  r.W.matrix(kGateCount * u, params.input_dim()).noalias() = grad_z.transpose() * seq;
  r.U.matrix(kGateCount * u, u).noalias() = grad_z.transpose() * cache.h_prev;
  r.b.flat() = grad_z.colwise().sum().transpose();
  r.input = grad_z * params.input_matrix();
  return r;
}

// ---------------------------------------------------------------------------
// Bidirectional layer

template <typename Scalar>
struct BiLstmCache {
  LstmCache<Scalar> forward;
  LstmCache<Scalar> backward;
};

/// return_sequences: [T × 2u] with row t = [h_fw(t), h_bw(t)].
/// Otherwise a [1 × 2u] row: forward state after t = T-1, backward state after t = 0.
template <typename Scalar>
Sequence<Scalar> bilstm_forward(const Sequence<Scalar>& seq, const LstmParams<Scalar>& fw,
                                const LstmParams<Scalar>& bw, bool return_sequences,
                                BiLstmCache<Scalar>* cache = nullptr) {
  if (fw.units() != bw.units()) {
    throw ShapeError("bilstm: forward units " + std::to_string(fw.units()) + " != backward units " +
                     std::to_string(bw.units()));
  }
  const Index u = fw.units();
  const auto f = lstm_forward(seq, fw, Direction::forward, cache ? &cache->forward : nullptr);
  const auto b = lstm_forward(seq, bw, Direction::backward, cache ? &cache->backward : nullptr);
  if (return_sequences) {
    Sequence<Scalar> out(seq.rows(), 2 * u);
    out << f.hidden, b.hidden;
    return out;
  }
  Sequence<Scalar> out(1, 2 * u);
  out << f.final_h.transpose(), b.final_h.transpose();
  return out;
}

template <typename Scalar>
struct BiLstmGrads {
  LstmGrads<Scalar> forward;
  LstmGrads<Scalar> backward;
  Sequence<Scalar> input;
};

template <typename Scalar>
BiLstmGrads<Scalar> bilstm_backward(const Sequence<Scalar>& seq, const LstmParams<Scalar>& fw,
                                    const LstmParams<Scalar>& bw, bool return_sequences,
                                    const BiLstmCache<Scalar>& cache,
                                    const Sequence<Scalar>& grad_output) {
  const Index steps = seq.rows();
  const Index u = fw.units();
  Sequence<Scalar> grad_fw = Sequence<Scalar>::Zero(steps, u);
  Sequence<Scalar> grad_bw = Sequence<Scalar>::Zero(steps, u);
  if (return_sequences) {
    grad_fw = grad_output.leftCols(u);
    grad_bw = grad_output.rightCols(u);
  } else {
    grad_fw.row(steps - 1) = grad_output.row(0).head(u);
    grad_bw.row(0) = grad_output.row(0).tail(u);
  }
  BiLstmGrads<Scalar> r{lstm_backward(seq, fw, cache.forward, grad_fw),
                        lstm_backward(seq, bw, cache.backward, grad_bw), {}};
  r.input = r.forward.input + r.backward.input;
  return r;
}

}  // namespace stlf

#endif  // STLF_LSTM_HPP
