#ifndef STLF_TRAINING_HPP
#define STLF_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "stlf/data_pipeline.hpp"
#include "stlf/model.hpp"

namespace stlf {

/// Adam and loop settings. Defaults: the optimizer's canonical constants, batch 64, 500 epochs.
struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Index batch_size = 64;
  Index epochs = 500;
  std::uint64_t seed = 42;
  bool shuffle = true;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct MseResult {
  double loss = 0.0;
  Eigen::VectorXd grad;  // ∂loss/∂pred
};

MseResult mse_loss(const Eigen::Ref<const Eigen::VectorXd>& pred, const Eigen::Ref<const Eigen::VectorXd>& target);

using WindowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BatchGradients {
  double loss = 0.0;
  Eigen::VectorXd predictions;
  Gradients gradients;
};

/// MSE loss over the batch and its gradient with respect to every parameter tensor.
/// Per-sample contributions are accumulated in row order.
BatchGradients loss_and_gradients(const Model& model, const Eigen::Ref<const WindowMatrix>& inputs,
                                  const Eigen::Ref<const Eigen::VectorXd>& targets);

/// Batch MSE loss only (forward passes, no caches).
double batch_loss(const Model& model, const Eigen::Ref<const WindowMatrix>& inputs,
                  const Eigen::Ref<const Eigen::VectorXd>& targets);

struct AdamState {
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  std::int64_t t = 0;

  static AdamState for_model(const Model& model);
};

/// One bias-corrected Adam update. Throws NumericError naming the parameter and step if a
/// gradient entry is not finite; parameters are untouched in that case.
void adam_step(Model& model, const Gradients& grads, AdamState& state, const TrainConfig& config);

struct TrainHistory {
  std::vector<double> loss;     // mean per-sample training loss of each epoch
  std::vector<double> seconds;  // wall time of each epoch
  std::uint32_t parameter_checksum = 0;

  std::size_t epochs() const { return loss.size(); }
  /// `epoch,loss,seconds` with 1-based epochs.
  void write_csv(std::ostream& out) const;
};

using EpochCallback = std::function<void(Index epoch, double loss)>;

/// Runs epochs × ceil(N / batch) Adam steps on a copy of `model` and returns it.
std::pair<Model, TrainHistory> train(Model model, const WindowedDataset& data, const TrainConfig& config,
                                     const EpochCallback& on_epoch = {});

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  Index checked = 0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Hook to tamper with analytic gradients before comparison (fault injection in tests).
using GradientTamper = std::function<void(Gradients&)>;

/// Compares analytic gradients with central differences (L(θ+δ) − L(θ−δ)) / 2δ for every
/// scalar parameter. Relative error is |a − n| / max(|a|, |n|, 1e-12).
GradientCheckReport gradient_check(const Model& model, const Eigen::Ref<const WindowMatrix>& inputs,
                                   const Eigen::Ref<const Eigen::VectorXd>& targets, double step,
                                   double tolerance, const GradientTamper& tamper = {});

/// The reduced proposed model used for gradient checks: filters 4/8/16, 8 recurrent units.
inline constexpr ModelWidths kGradcheckWidths{4, 8, 16, 8};

}  // namespace stlf

#endif  // STLF_TRAINING_HPP
