#include "stlf/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "stlf/checkpoint.hpp"
#include "stlf/errors.hpp"

namespace stlf {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

MseResult mse_loss(const Eigen::Ref<const Eigen::VectorXd>& pred, const Eigen::Ref<const Eigen::VectorXd>& target) {
  if (pred.size() != target.size()) {
    throw ShapeError("mse: " + std::to_string(pred.size()) + " predictions vs " + std::to_string(target.size()) +
                     " targets");
  }
  if (pred.size() == 0) throw ShapeError("mse: empty batch");
  const auto n = static_cast<double>(pred.size());
  const Eigen::VectorXd residual = pred - target;
  return {residual.squaredNorm() / n, (2.0 / n) * residual};
}

BatchGradients loss_and_gradients(const Model& model, const Eigen::Ref<const WindowMatrix>& inputs,
                                  const Eigen::Ref<const Eigen::VectorXd>& targets) {
  const Index n = inputs.rows();
  if (targets.size() != n) throw ShapeError("batch inputs and targets disagree in length");
  std::vector<ForwardTrace> traces(static_cast<std::size_t>(n));
  BatchGradients r{0.0, Eigen::VectorXd(n), model.zero_gradients()};
  for (Index i = 0; i < n; ++i) {
    r.predictions[i] = forward(model, inputs.row(i).transpose(), &traces[static_cast<std::size_t>(i)]);
  }
  const MseResult mse = mse_loss(r.predictions, targets);
  r.loss = mse.loss;
  for (Index i = 0; i < n; ++i) backward(model, traces[static_cast<std::size_t>(i)], mse.grad[i], r.gradients);
  return r;
}

double batch_loss(const Model& model, const Eigen::Ref<const WindowMatrix>& inputs,
                  const Eigen::Ref<const Eigen::VectorXd>& targets) {
  return mse_loss(predict_batch(model, inputs), targets).loss;
}

AdamState AdamState::for_model(const Model& model) {
  AdamState s;
  s.m = model.zero_gradients();
  s.v = model.zero_gradients();
  return s;
}

void adam_step(Model& model, const Gradients& grads, AdamState& state, const TrainConfig& config) {
  auto params = model.parameters();
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam: gradient/state count does not match the model");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].size() != params[k].tensor->size()) throw ShapeError("adam: gradient shape mismatch for " + params[k].name);
    for (Index i = 0; i < grads[k].size(); ++i) {
      if (!std::isfinite(grads[k][i])) {
        throw NumericError("non-finite gradient in '" + params[k].name + "'[" + std::to_string(i) + "] at step " +
                           std::to_string(state.t + 1));
      }
    }
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    const auto g = grads[k].array();
    m = (config.beta1 * m.array() + (1.0 - config.beta1) * g).matrix();
    v = (config.beta2 * v.array() + (1.0 - config.beta2) * g.square()).matrix();
    const auto m_hat = m.array() / correction1;
    const auto v_hat = v.array() / correction2;
    params[k].tensor->flat().array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
  }
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "epoch,loss,seconds\n";
  const auto precision = out.precision(17);
  for (std::size_t e = 0; e < loss.size(); ++e) out << e + 1 << ',' << loss[e] << ',' << seconds[e] << '\n';
  out.precision(precision);
}

std::pair<Model, TrainHistory> train(Model model, const WindowedDataset& data, const TrainConfig& config,
                                     const EpochCallback& on_epoch) {
  config.validate();
  const Index n = data.size();
  if (n == 0) throw DataError("training dataset is empty");
  if (data.window != model.window() || data.inputs.cols() != model.window()) {
    throw ConfigError("dataset window " + std::to_string(data.window) + " does not match model window " +
                      std::to_string(model.window()));
  }

  // Batch-order stream, kept distinct from the parameter-initialization stream of the same seed.
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  AdamState adam = AdamState::for_model(model);
  TrainHistory history;

  WindowMatrix batch_inputs;
  Eigen::VectorXd batch_targets;
  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (Index begin = 0, batch = 0; begin < n; begin += config.batch_size, ++batch) {
      const Index size = std::min(config.batch_size, n - begin);
      batch_inputs.resize(size, data.window);
      batch_targets.resize(size);
      for (Index i = 0; i < size; ++i) {
        const Index src = order[static_cast<std::size_t>(begin + i)];
        batch_inputs.row(i) = data.inputs.row(src);
        batch_targets[i] = data.targets[src];
      }
      const BatchGradients g = loss_and_gradients(model, batch_inputs, batch_targets);
      if (!std::isfinite(g.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch + 1));
      }
      loss_sum += g.loss * static_cast<double>(size);
      adam_step(model, g.gradients, adam, config);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    history.loss.push_back(epoch_loss);
    history.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (on_epoch) on_epoch(epoch + 1, epoch_loss);
  }
  model.info().epochs_trained += config.epochs;
  history.parameter_checksum = parameter_checksum(model);
  return {std::move(model), std::move(history)};
}

GradientCheckReport gradient_check(const Model& model, const Eigen::Ref<const WindowMatrix>& inputs,
                                   const Eigen::Ref<const Eigen::VectorXd>& targets, double step,
                                   double tolerance, const GradientTamper& tamper) {
  BatchGradients analytic = loss_and_gradients(model, inputs, targets);
  if (tamper) tamper(analytic.gradients);

  Model probe = model;
  auto params = probe.parameters();
  GradientCheckReport report;
  report.tolerance = tolerance;
  report.max_relative_error = -1.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& flat = params[k].tensor->flat();
    for (Index i = 0; i < flat.size(); ++i) {
      const double original = flat[i];
      flat[i] = original + step;
      const double up = batch_loss(probe, inputs, targets);
      flat[i] = original - step;
      const double down = batch_loss(probe, inputs, targets);
      flat[i] = original;

      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.gradients[k][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
      ++report.checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = params[k].name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  report.max_relative_error = std::max(report.max_relative_error, 0.0);
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace stlf
