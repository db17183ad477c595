#ifndef STLF_MODEL_HPP
#define STLF_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stlf/conv1d.hpp"
#include "stlf/data_pipeline.hpp"
#include "stlf/dense.hpp"
#include "stlf/lstm.hpp"
#include "stlf/pooling.hpp"
#include "stlf/tensor.hpp"

namespace stlf {

enum class Architecture { proposed, lstm, cnn_lstm, cnn_bilstm, custom };

std::string to_string(Architecture a);
Architecture parse_architecture(std::string_view name);

/// The four architectures compared in the benchmark report, in training order.
inline constexpr Architecture kComparedArchitectures[] = {
    Architecture::proposed, Architecture::lstm, Architecture::cnn_lstm, Architecture::cnn_bilstm};

struct Conv1dLayer {
  ConvParams<double> params;
};

struct ReluLayer {};

struct MaxPoolLayer {
  Index pool = 2;
};

struct LstmLayer {
  LstmParams<double> params;
  bool return_sequences = false;
};

struct BiLstmLayer {
  LstmParams<double> forward;
  LstmParams<double> backward;
  bool return_sequences = false;
};

/// Consumes the previous activation flattened row-major.
struct DenseLayer {
  DenseParams<double> params;
};

using Layer = std::variant<Conv1dLayer, ReluLayer, MaxPoolLayer, LstmLayer, BiLstmLayer, DenseLayer>;

std::string_view layer_kind(const Layer& layer);

/// Activation shape between layers. Non-sequence activations are a single row.
struct FeatureShape {
  Index steps = 0;
  Index width = 0;
  bool sequence = true;

  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

std::string to_string(const FeatureShape& s);

/// Filter and unit counts of the convolutional/recurrent families.
struct ModelWidths {
  Index conv1 = 64;
  Index conv2 = 128;
  Index conv3 = 256;
  Index recurrent = 256;

  friend bool operator==(const ModelWidths&, const ModelWidths&) = default;
};

/// floor(base · width_scale) for every family. Throws ConfigError if any width drops below 1.
ModelWidths scaled_widths(double width_scale);

/// Settings captured alongside the parameters so a checkpoint is self-describing.
struct ModelInfo {
  double width_scale = 1.0;
  ModelWidths widths;
  std::uint64_t seed = 0;
  Index horizon = 1;
  double split_ratio = 0.8;
  double max_mw = kDefaultMaxMw;
  Index epochs_trained = 0;
  std::optional<Scaler> scaler;
};

template <typename T>
struct ParameterRef {
  std::string name;
  T* tensor;
};

using MutableParameter = ParameterRef<Tensor<double>>;
using ConstParameter = ParameterRef<const Tensor<double>>;

/// One flat gradient vector per parameter tensor, in parameters() order.
using Gradients = std::vector<Eigen::VectorXd>;

class Model {
 public:
  /// Validates the layer chain for an input of [window × 1]; throws ShapeError on any mismatch.
  Model(Architecture architecture, Index window, std::vector<Layer> layers, ModelInfo info = {});

  Architecture architecture() const { return architecture_; }
  Index window() const { return window_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<std::string>& layer_names() const { return names_; }
  /// shapes()[0] is the input, shapes()[k+1] the output of layer k.
  const std::vector<FeatureShape>& shapes() const { return shapes_; }

  ModelInfo& info() { return info_; }
  const ModelInfo& info() const { return info_; }

  std::vector<MutableParameter> parameters();
  std::vector<ConstParameter> parameters() const;
  Index parameter_count() const;
  Gradients zero_gradients() const;

 private:
  friend void initialize_parameters(Model& model, std::uint64_t seed);
  template <typename Self, typename Ref>
  static std::vector<Ref> collect_parameters(Self& self);

  Architecture architecture_;
  Index window_;
  std::vector<Layer> layers_;
  std::vector<std::string> names_;
  std::vector<FeatureShape> shapes_;
  ModelInfo info_;
};

/// Conv(64s,k3,same)→ReLU→Pool2 ×3 with widths 64/128/256, BiLSTM(256s, sequences),
/// BiLSTM(256s, final), Dense(1). window must be divisible by 8.
Model build_proposed(Index window, double width_scale = 1.0, std::uint64_t seed = 42);
Model build_proposed(Index window, const ModelWidths& widths, std::uint64_t seed = 42);

/// lstm: LSTM(256s)→Dense(1). cnn_lstm: the proposed stack with unidirectional LSTMs.
/// cnn_bilstm: the proposed stack with a single final BiLSTM.
Model build_benchmark(Architecture kind, Index window, double width_scale = 1.0,
                      std::uint64_t seed = 42);
Model build_benchmark(Architecture kind, Index window, const ModelWidths& widths,
                      std::uint64_t seed = 42);

/// Dispatches to build_proposed / build_benchmark.
Model build_model(Architecture kind, Index window, const ModelWidths& widths, std::uint64_t seed);

/// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.
void initialize_parameters(Model& model, std::uint64_t seed);

/// Per-layer intermediate state retained for the backward pass.
using LayerCache = std::variant<std::monostate, PoolResult<double>, LstmCache<double>, BiLstmCache<double>>;

struct ForwardTrace {
  std::vector<Sequence<double>> activations;  // input of each layer, then the final output
  std::vector<LayerCache> caches;
};

/// Forward pass on one scaled window. Fills `trace` when given.
double forward(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& window,
               ForwardTrace* trace = nullptr);

/// Accumulates d(output)/dθ · grad_output into `grads`.
void backward(const Model& model, const ForwardTrace& trace, double grad_output, Gradients& grads);

double predict(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& window);

Eigen::VectorXd predict_batch(
    const Model& model,
    const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& windows);

/// Rolls the window forward, feeding each prediction back as the newest observation.
Eigen::VectorXd forecast_recursive(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& seed_window,
                                   Index steps);

}  // namespace stlf

#endif  // STLF_MODEL_HPP
