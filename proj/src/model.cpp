#include "stlf/model.hpp"

#include <cmath>
#include <map>
#include <random>

#include "stlf/activations.hpp"
#include "stlf/errors.hpp"

namespace stlf {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Index tensors_in(const Layer& layer) {
  return std::visit(overloaded{[](const Conv1dLayer&) -> Index { return 2; },
                               [](const LstmLayer&) -> Index { return 3; },
                               [](const BiLstmLayer&) -> Index { return 6; },
                               [](const DenseLayer&) -> Index { return 2; },
                               [](const auto&) -> Index { return 0; }},
                    layer);
}

[[noreturn]] void shape_fail(const std::string& layer, const std::string& what) {
  throw ShapeError("layer " + layer + ": " + what);
}

FeatureShape output_shape(const Layer& layer, const FeatureShape& in, const std::string& name) {
  auto need_sequence = [&] {
    if (!in.sequence) shape_fail(name, "expects a sequence input, got " + to_string(in));
  };
  return std::visit(
      overloaded{
          [&](const Conv1dLayer& l) {
            need_sequence();
            l.params.validate();
            if (in.width != l.params.in_channels()) {
              shape_fail(name, "input width " + std::to_string(in.width) + " != in_channels " +
                                   std::to_string(l.params.in_channels()));
            }
            if (l.params.padding == Padding::valid && in.steps < l.params.kernel()) {
              shape_fail(name, "input shorter than kernel");
            }
            return FeatureShape{conv_output_length(in.steps, l.params.kernel(), l.params.padding),
                                l.params.filters(), true};
          },
          [&](const ReluLayer&) { return in; },
          [&](const MaxPoolLayer& l) {
            need_sequence();
            if (l.pool < 1 || in.steps < l.pool) shape_fail(name, "pool larger than input");
            return FeatureShape{in.steps / l.pool, in.width, true};
          },
          [&](const LstmLayer& l) {
            need_sequence();
            l.params.validate();
            if (in.width != l.params.input_dim()) {
              shape_fail(name, "input width " + std::to_string(in.width) + " != input_dim " +
                                   std::to_string(l.params.input_dim()));
            }
            return l.return_sequences ? FeatureShape{in.steps, l.params.units(), true}
                                      : FeatureShape{1, l.params.units(), false};
          },
          [&](const BiLstmLayer& l) {
            need_sequence();
            l.forward.validate();
            l.backward.validate();
            if (l.forward.units() != l.backward.units() ||
                l.forward.input_dim() != l.backward.input_dim()) {
              shape_fail(name, "forward and backward directions disagree");
            }
            if (in.width != l.forward.input_dim()) {
              shape_fail(name, "input width " + std::to_string(in.width) + " != input_dim " +
                                   std::to_string(l.forward.input_dim()));
            }
            const Index w = 2 * l.forward.units();
            return l.return_sequences ? FeatureShape{in.steps, w, true} : FeatureShape{1, w, false};
          },
          [&](const DenseLayer& l) {
            l.params.validate();
            if (in.steps * in.width != l.params.inputs()) {
              shape_fail(name, "flattened input " + std::to_string(in.steps * in.width) +
                                   " != dense inputs " + std::to_string(l.params.inputs()));
            }
            return FeatureShape{1, l.params.outputs(), false};
          }},
      layer);
}

std::string_view name_prefix(const Layer& layer) {
  return std::visit(overloaded{[](const Conv1dLayer&) { return std::string_view("conv"); },
                               [](const ReluLayer&) { return std::string_view("relu"); },
                               [](const MaxPoolLayer&) { return std::string_view("pool"); },
                               [](const LstmLayer&) { return std::string_view("lstm"); },
                               [](const BiLstmLayer&) { return std::string_view("bilstm"); },
                               [](const DenseLayer&) { return std::string_view("dense"); }},
                    layer);
}

}  // namespace

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::proposed: return "proposed";
    case Architecture::lstm: return "lstm";
    case Architecture::cnn_lstm: return "cnn_lstm";
    case Architecture::cnn_bilstm: return "cnn_bilstm";
    case Architecture::custom: return "custom";
  }
  return "custom";
}

Architecture parse_architecture(std::string_view name) {
  for (auto a : {Architecture::proposed, Architecture::lstm, Architecture::cnn_lstm,
                 Architecture::cnn_bilstm, Architecture::custom}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(name) +
                    "' (expected proposed, lstm, cnn_lstm or cnn_bilstm)");
}

std::string_view layer_kind(const Layer& layer) {
  return std::visit(overloaded{[](const Conv1dLayer&) { return std::string_view("conv1d"); },
                               [](const ReluLayer&) { return std::string_view("relu"); },
                               [](const MaxPoolLayer&) { return std::string_view("maxpool1d"); },
                               [](const LstmLayer&) { return std::string_view("lstm"); },
                               [](const BiLstmLayer&) { return std::string_view("bilstm"); },
                               [](const DenseLayer&) { return std::string_view("dense"); }},
                    layer);
}

std::string to_string(const FeatureShape& s) {
  return s.sequence ? std::to_string(s.steps) + "x" + std::to_string(s.width) : std::to_string(s.width);
}

ModelWidths scaled_widths(double width_scale) {
  if (!(width_scale > 0.0 && width_scale <= 1.0)) throw ConfigError("width_scale must be in (0, 1]");
  auto scale = [&](Index base) {
    // The epsilon keeps exact products such as 64 * 0.0625 from flooring down.
    const auto w = static_cast<Index>(std::floor(static_cast<double>(base) * width_scale + 1e-9));
    if (w < 1) {
      throw ConfigError("width_scale " + std::to_string(width_scale) + " scales width " +
                        std::to_string(base) + " below 1");
    }
    return w;
  };
  return {scale(64), scale(128), scale(256), scale(256)};
}

Model::Model(Architecture architecture, Index window, std::vector<Layer> layers, ModelInfo info)
    : architecture_(architecture), window_(window), layers_(std::move(layers)), info_(std::move(info)) {
  if (window_ < 1) throw ShapeError("model window must be >= 1");
  if (layers_.empty()) throw ShapeError("model has no layers");
  std::map<std::string_view, int> counters;
  shapes_.push_back({window_, 1, true});
  for (const auto& layer : layers_) {
    const auto prefix = name_prefix(layer);
    names_.push_back(std::string(prefix) + std::to_string(++counters[prefix]));
    shapes_.push_back(output_shape(layer, shapes_.back(), names_.back()));
  }
  if (shapes_.back() != FeatureShape{1, 1, false}) {
    throw ShapeError("model must end in a single scalar output, got " + to_string(shapes_.back()));
  }
}

template <typename Self, typename Ref>
std::vector<Ref> Model::collect_parameters(Self& self) {
  std::vector<Ref> out;
  for (std::size_t k = 0; k < self.layers_.size(); ++k) {
    const std::string& n = self.names_[k];
    std::visit(
        [&](auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv1dLayer> || std::is_same_v<L, DenseLayer>) {
            out.push_back({n + ".weight", &l.params.weights});
            out.push_back({n + ".bias", &l.params.bias});
          } else if constexpr (std::is_same_v<L, LstmLayer>) {
            out.push_back({n + ".W", &l.params.W});
            out.push_back({n + ".U", &l.params.U});
            out.push_back({n + ".b", &l.params.b});
          } else if constexpr (std::is_same_v<L, BiLstmLayer>) {
            for (auto* dir : {&l.forward, &l.backward}) {
              const std::string d = dir == &l.forward ? ".forward" : ".backward";
              out.push_back({n + d + ".W", &dir->W});
              out.push_back({n + d + ".U", &dir->U});
              out.push_back({n + d + ".b", &dir->b});
            }
          }
        },
        self.layers_[k]);
  }
  return out;
}

std::vector<MutableParameter> Model::parameters() {
  return collect_parameters<Model, MutableParameter>(*this);
}

std::vector<ConstParameter> Model::parameters() const {
  return collect_parameters<const Model, ConstParameter>(*this);
}

Index Model::parameter_count() const {
  Index n = 0;
  for (const auto& p : parameters()) n += p.tensor->size();
  return n;
}

Gradients Model::zero_gradients() const {
  Gradients g;
  for (const auto& p : parameters()) g.push_back(Eigen::VectorXd::Zero(p.tensor->size()));
  return g;
}

namespace {

void check_window(Index window) {
  if (window < 8 || window % 8 != 0) {
    throw ConfigError("window " + std::to_string(window) +
                      " must be a positive multiple of 8 (three pool-2 stages)");
  }
}

void check_widths(const ModelWidths& w) {
  if (w.conv1 < 1 || w.conv2 < 1 || w.conv3 < 1 || w.recurrent < 1) {
    throw ConfigError("all layer widths must be >= 1");
  }
}

std::vector<Layer> cnn_front(const ModelWidths& w) {
  std::vector<Layer> layers;
  Index channels = 1;
  for (Index filters : {w.conv1, w.conv2, w.conv3}) {
    layers.emplace_back(Conv1dLayer{ConvParams<double>(filters, channels, 3, Padding::same)});
    layers.emplace_back(ReluLayer{});
    layers.emplace_back(MaxPoolLayer{2});
    channels = filters;
  }
  return layers;
}

ModelInfo info_for(double width_scale, const ModelWidths& widths, std::uint64_t seed) {
  ModelInfo info;
  info.width_scale = width_scale;
  info.widths = widths;
  info.seed = seed;
  return info;
}

Model assemble(Architecture kind, Index window, const ModelWidths& w, double width_scale,
               std::uint64_t seed) {
  check_window(window);
  check_widths(w);
  const Index u = w.recurrent;
  std::vector<Layer> layers;
  switch (kind) {
    case Architecture::proposed:
      layers = cnn_front(w);
      layers.emplace_back(BiLstmLayer{LstmParams<double>(u, w.conv3), LstmParams<double>(u, w.conv3), true});
      layers.emplace_back(BiLstmLayer{LstmParams<double>(u, 2 * u), LstmParams<double>(u, 2 * u), false});
      layers.emplace_back(DenseLayer{DenseParams<double>(1, 2 * u)});
      break;
    case Architecture::lstm:
      layers.emplace_back(LstmLayer{LstmParams<double>(u, 1), false});
      layers.emplace_back(DenseLayer{DenseParams<double>(1, u)});
      break;
    case Architecture::cnn_lstm:
      layers = cnn_front(w);
      layers.emplace_back(LstmLayer{LstmParams<double>(u, w.conv3), true});
      layers.emplace_back(LstmLayer{LstmParams<double>(u, u), false});
      layers.emplace_back(DenseLayer{DenseParams<double>(1, u)});
      break;
    case Architecture::cnn_bilstm:
      layers = cnn_front(w);
      layers.emplace_back(BiLstmLayer{LstmParams<double>(u, w.conv3), LstmParams<double>(u, w.conv3), false});
      layers.emplace_back(DenseLayer{DenseParams<double>(1, 2 * u)});
      break;
    case Architecture::custom:
      throw ConfigError("custom models are assembled from explicit layer lists");
  }
  Model model(kind, window, std::move(layers), info_for(width_scale, w, seed));
  initialize_parameters(model, seed);
  return model;
}

double nominal_scale(const ModelWidths& w) { return static_cast<double>(w.conv1) / 64.0; }

}  // namespace

Model build_proposed(Index window, double width_scale, std::uint64_t seed) {
  return assemble(Architecture::proposed, window, scaled_widths(width_scale), width_scale, seed);
}

Model build_proposed(Index window, const ModelWidths& widths, std::uint64_t seed) {
  return assemble(Architecture::proposed, window, widths, nominal_scale(widths), seed);
}

Model build_benchmark(Architecture kind, Index window, double width_scale, std::uint64_t seed) {
  if (kind == Architecture::proposed || kind == Architecture::custom) {
    throw ConfigError("unknown benchmark kind '" + to_string(kind) + "'");
  }
  return assemble(kind, window, scaled_widths(width_scale), width_scale, seed);
}

Model build_benchmark(Architecture kind, Index window, const ModelWidths& widths, std::uint64_t seed) {
  if (kind == Architecture::proposed || kind == Architecture::custom) {
    throw ConfigError("unknown benchmark kind '" + to_string(kind) + "'");
  }
  return assemble(kind, window, widths, nominal_scale(widths), seed);
}

Model build_model(Architecture kind, Index window, const ModelWidths& widths, std::uint64_t seed) {
  return assemble(kind, window, widths, nominal_scale(widths), seed);
}

void initialize_parameters(Model& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto glorot = [&](Tensor<double>& t, Index fan_in, Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index i = 0; i < t.size(); ++i) t(i) = dist(rng);
  };
  auto init_lstm = [&](LstmParams<double>& p) {
    const Index u = p.units();
    glorot(p.W, p.input_dim(), kGateCount * u);
    glorot(p.U, u, kGateCount * u);
    p.b.set_zero();
    p.b.matrix().row(static_cast<Index>(Gate::forget)).setOnes();
  };
  for (auto& layer : model.layers_) {
    std::visit(overloaded{[&](Conv1dLayer& l) {
                            const Index m = l.params.kernel();
                            glorot(l.params.weights, l.params.in_channels() * m, l.params.filters() * m);
                            l.params.bias.set_zero();
                          },
                          [&](LstmLayer& l) { init_lstm(l.params); },
                          [&](BiLstmLayer& l) {
                            init_lstm(l.forward);
                            init_lstm(l.backward);
                          },
                          [&](DenseLayer& l) {
                            glorot(l.params.weights, l.params.inputs(), l.params.outputs());
                            l.params.bias.set_zero();
                          },
                          [](auto&) {}},
               layer);
  }
}

namespace {

Eigen::VectorXd flatten(const Sequence<double>& s) {
  return Eigen::Map<const Eigen::VectorXd>(s.data(), s.size());
}

}  // namespace

double forward(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& window, ForwardTrace* trace) {
  if (window.size() != model.window()) {
    throw ShapeError("window length " + std::to_string(window.size()) + " != model window " +
                     std::to_string(model.window()));
  }
  Sequence<double> act = window;
  if (trace) {
    trace->activations.clear();
    trace->caches.clear();
    trace->activations.reserve(model.layers().size() + 1);
    trace->caches.reserve(model.layers().size());
  }
  for (const auto& layer : model.layers()) {
    LayerCache cache;
    Sequence<double> next = std::visit(
        overloaded{
            [&](const Conv1dLayer& l) -> Sequence<double> { return conv1d_forward(act, l.params); },
            [&](const ReluLayer&) -> Sequence<double> { return relu(act.array()).matrix(); },
            [&](const MaxPoolLayer& l) -> Sequence<double> {
              auto r = maxpool1d(act, l.pool);
              Sequence<double> out = std::move(r.output);
              if (trace) cache = std::move(r);
              return out;
            },
            [&](const LstmLayer& l) -> Sequence<double> {
              LstmCache<double> c;
              auto r = lstm_forward(act, l.params, Direction::forward, trace ? &c : nullptr);
              if (trace) cache = std::move(c);
              if (l.return_sequences) return std::move(r.hidden);
              return r.final_h.transpose();
            },
            [&](const BiLstmLayer& l) -> Sequence<double> {
              BiLstmCache<double> c;
              auto out = bilstm_forward(act, l.forward, l.backward, l.return_sequences, trace ? &c : nullptr);
              if (trace) cache = std::move(c);
              return out;
            },
            [&](const DenseLayer& l) -> Sequence<double> {
              return dense_forward<double>(flatten(act), l.params).transpose();
            }},
        layer);
    if (trace) {
      trace->activations.push_back(std::move(act));
      trace->caches.push_back(std::move(cache));
    }
    act = std::move(next);
  }
  const double out = act(0, 0);
  if (trace) trace->activations.push_back(std::move(act));
  return out;
}

void backward(const Model& model, const ForwardTrace& trace, double grad_output, Gradients& grads) {
  const auto& layers = model.layers();
  if (trace.activations.size() != layers.size() + 1 || trace.caches.size() != layers.size()) {
    throw ShapeError("forward trace does not match the model");
  }
  Index slot = 0;
  for (const auto& layer : layers) slot += tensors_in(layer);
  if (static_cast<Index>(grads.size()) != slot) throw ShapeError("gradient buffer does not match the model");

  Sequence<double> grad = Sequence<double>::Constant(1, 1, grad_output);
  for (std::size_t k = layers.size(); k-- > 0;) {
    slot -= tensors_in(layers[k]);
    const Sequence<double>& input = trace.activations[k];
    const LayerCache& cache = trace.caches[k];
    auto acc = [&](Index offset, const Tensor<double>& g) { grads[static_cast<std::size_t>(slot + offset)] += g.flat(); };
    grad = std::visit(
        overloaded{
            [&](const Conv1dLayer& l) -> Sequence<double> {
              auto g = conv1d_backward(input, l.params, grad);
              acc(0, g.weights);
              acc(1, g.bias);
              return std::move(g.input);
            },
            [&](const ReluLayer&) -> Sequence<double> { return relu_backward(input, grad); },
            [&](const MaxPoolLayer&) -> Sequence<double> {
              return maxpool1d_backward(std::get<PoolResult<double>>(cache), input.rows(), grad);
            },
            [&](const LstmLayer& l) -> Sequence<double> {
              Sequence<double> grad_hidden = Sequence<double>::Zero(input.rows(), l.params.units());
              if (l.return_sequences) {
                grad_hidden = grad;
              } else {
                grad_hidden.row(input.rows() - 1) = grad.row(0);
              }
              auto g = lstm_backward(input, l.params, std::get<LstmCache<double>>(cache), grad_hidden);
              acc(0, g.W);
              acc(1, g.U);
              acc(2, g.b);
              return std::move(g.input);
            },
            [&](const BiLstmLayer& l) -> Sequence<double> {
              auto g = bilstm_backward(input, l.forward, l.backward, l.return_sequences,
                                       std::get<BiLstmCache<double>>(cache), grad);
              acc(0, g.forward.W);
              acc(1, g.forward.U);
              acc(2, g.forward.b);
              acc(3, g.backward.W);
              acc(4, g.backward.U);
              acc(5, g.backward.b);
              return std::move(g.input);
            },
            [&](const DenseLayer& l) -> Sequence<double> {
              auto g = dense_backward<double>(flatten(input), l.params, grad.row(0).transpose());
              acc(0, g.weights);
              acc(1, g.bias);
              return Eigen::Map<const Sequence<double>>(g.input.data(), input.rows(), input.cols());
            }},
        layers[k]);
  }
}

double predict(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& window) {
  return forward(model, window, nullptr);
}

Eigen::VectorXd predict_batch(
    const Model& model,
    const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& windows) {
  Eigen::VectorXd out(windows.rows());
  for (Index i = 0; i < windows.rows(); ++i) out[i] = predict(model, windows.row(i).transpose());
  return out;
}

Eigen::VectorXd forecast_recursive(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& seed_window,
                                   Index steps) {
  if (steps < 1) throw ConfigError("forecast steps must be >= 1");
  Eigen::VectorXd window = seed_window;
  Eigen::VectorXd out(steps);
  for (Index k = 0; k < steps; ++k) {
    out[k] = predict(model, window);
    const Index w = window.size();
    Eigen::VectorXd next(w);
    next << window.tail(w - 1), out[k];
    window = std::move(next);
  }
  return out;
}

}  // namespace stlf
