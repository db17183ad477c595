#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stlf/dense.hpp"
#include "stlf/training.hpp"

using namespace stlf;

namespace {

WindowMatrix random_inputs(std::mt19937_64& rng, Index rows, Index window) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  WindowMatrix x(rows, window);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = d(rng);
  return x;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

/// Targets near the model's own output keep the residual small.
Eigen::VectorXd near_targets(const Model& m, const WindowMatrix& x, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-5e-4, 5e-4);
  Eigen::VectorXd t = predict_batch(m, x);
  for (Index i = 0; i < t.size(); ++i) t[i] += d(rng);
  return t;
}

Model linear_model(Index window, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DenseParams<double> p(1, window);
  oracle::fill_uniform(p.weights, rng);
  oracle::fill_uniform(p.bias, rng);
  return Model(Architecture::custom, window, {DenseLayer{p}});
}

/// Central difference of `f` with respect to every entry of `t`.
Eigen::VectorXd numeric_grad(Tensor<double>& t, const std::function<double()>& f, double h = 1e-6) {
  Eigen::VectorXd g(t.size());
  for (Index i = 0; i < t.size(); ++i) {
    const double keep = t(i);
    t(i) = keep + h;
    const double up = f();
    t(i) = keep - h;
    const double down = f();
    t(i) = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double sum_product(const Sequence<double>& a, const Sequence<double>& b) { return (a.array() * b.array()).sum(); }

}  // namespace

TEST(MseLoss, HandExample) {
  Eigen::VectorXd p(2), t(2);
  p << 1.0, 2.0;
  t << 0.0, 0.0;
  const auto r = mse_loss(p, t);
  EXPECT_DOUBLE_EQ(r.loss, 2.5);
  EXPECT_DOUBLE_EQ(r.grad[0], 1.0);
  EXPECT_DOUBLE_EQ(r.grad[1], 2.0);
}

TEST(MseLoss, QuadraticHomogeneity) {
  std::mt19937_64 rng(11);
  for (double k : {0.5, 2.0, 10.0}) {
    const auto p = random_vector(rng, 20);
    const auto t = random_vector(rng, 20);
    EXPECT_NEAR(mse_loss(k * p, k * t).loss, k * k * mse_loss(p, t).loss, 1e-12);
  }
  EXPECT_THROW(mse_loss(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), ShapeError);
}

TEST(Adam, ZeroGradientIsIdentity) {
  Model m = build_proposed(8, kGradcheckWidths, 1);
  const Model before = m;
  auto state = AdamState::for_model(m);
  adam_step(m, m.zero_gradients(), state, TrainConfig{});
  for (std::size_t k = 0; k < m.parameters().size(); ++k)
    EXPECT_EQ(*m.parameters()[k].tensor, *before.parameters()[k].tensor);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Model m = linear_model(8, 2);
  const Model before = m;
  Gradients g = m.zero_gradients();
  g[0].setConstant(0.3);
  g[0][1] = -2.0;
  g[1][0] = -0.01;
  auto state = AdamState::for_model(m);
  TrainConfig cfg;
  adam_step(m, g, state, cfg);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto delta = m.parameters()[k].tensor->flat() - before.parameters()[k].tensor->flat();
    for (Index i = 0; i < delta.size(); ++i) {
      EXPECT_NEAR(delta[i], -cfg.learning_rate * (g[k][i] > 0 ? 1.0 : -1.0), 1e-9);
    }
  }
}

TEST(Adam, OppositeGradientsOppositeUpdates) {
  Model a = linear_model(8, 3);
  Model b = a;
  const Model start = a;
  Gradients g = a.zero_gradients();
  std::mt19937_64 rng(4);
  for (auto& v : g) v = random_vector(rng, v.size()) - Eigen::VectorXd::Constant(v.size(), 0.5);
  Gradients neg = g;
  for (auto& v : neg) v = -v;
  auto sa = AdamState::for_model(a);
  auto sb = AdamState::for_model(b);
  for (int step = 0; step < 3; ++step) {
    adam_step(a, g, sa, TrainConfig{});
    adam_step(b, neg, sb, TrainConfig{});
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto da = a.parameters()[k].tensor->flat() - start.parameters()[k].tensor->flat();
    const auto db = b.parameters()[k].tensor->flat() - start.parameters()[k].tensor->flat();
    EXPECT_LT((da + db).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Model m = linear_model(8, 5);
  const Model before = m;
  Gradients g = m.zero_gradients();
  g[1][0] = std::nan("");
  auto state = AdamState::for_model(m);
  try {
    adam_step(m, g, state, TrainConfig{});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("dense1.bias"), std::string::npos) << e.what();
  }
  for (std::size_t k = 0; k < g.size(); ++k)
    EXPECT_EQ(*m.parameters()[k].tensor, *before.parameters()[k].tensor);
}

TEST(LossAndGradients, ZeroResidualZeroGradient) {
  std::mt19937_64 rng(6);
  const Model m = build_proposed(8, kGradcheckWidths, 6);
  const auto x = random_inputs(rng, 3, 8);
  const auto r = loss_and_gradients(m, x, predict_batch(m, x));
  EXPECT_EQ(r.loss, 0.0);
  for (const auto& g : r.gradients) EXPECT_TRUE(g.isZero(0.0));
}

TEST(LossAndGradients, BatchIsMeanOfSamples) {
  std::mt19937_64 rng(7);
  const Model m = build_proposed(16, kGradcheckWidths, 7);
  const auto x = random_inputs(rng, 5, 16);
  const auto t = random_vector(rng, 5);
  const auto batch = loss_and_gradients(m, x, t);
  Gradients mean = m.zero_gradients();
  double loss = 0.0;
  for (Index i = 0; i < 5; ++i) {
    const auto one = loss_and_gradients(m, x.row(i), t.segment(i, 1));
    loss += one.loss / 5;
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += one.gradients[k] / 5;
  }
  EXPECT_NEAR(batch.loss, loss, 1e-12);
  for (std::size_t k = 0; k < mean.size(); ++k)
    EXPECT_LT((batch.gradients[k] - mean[k]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LossAndGradients, RepeatedSampleMatchesSingle) {
  std::mt19937_64 rng(8);
  const Model m = build_proposed(8, kGradcheckWidths, 8);
  const auto x = random_inputs(rng, 1, 8);
  const WindowMatrix rep = x.replicate(4, 1);
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(1, 0.4);
  const auto single = loss_and_gradients(m, x, t);
  const auto many = loss_and_gradients(m, rep, t.replicate(4, 1));
  EXPECT_NEAR(single.loss, many.loss, 1e-14);
  for (std::size_t k = 0; k < single.gradients.size(); ++k)
    EXPECT_LT((single.gradients[k] - many.gradients[k]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gradcheck, LinearModelIsExact) {
  std::mt19937_64 rng(9);
  const Model m = linear_model(8, 9);
  const auto x = random_inputs(rng, 6, 8);
  const auto t = random_vector(rng, 6);
  const auto r = gradient_check(m, x, t, 1e-5, 1e-8);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  EXPECT_EQ(r.checked, 9);
}

TEST(Gradcheck, ReducedProposedModel) {
  std::mt19937_64 rng(10);
  const Model m = build_proposed(8, kGradcheckWidths, 42);
  const auto x = random_inputs(rng, 4, 8);
  const auto r = gradient_check(m, x, near_targets(m, x, rng), 1e-5, 1e-4);
  EXPECT_TRUE(r.passed) << r.max_relative_error << " at " << r.worst_parameter << "[" << r.worst_index << "]";
  EXPECT_EQ(r.checked, m.parameter_count());
}

TEST(Gradcheck, LstmThroughTime) {
  std::mt19937_64 rng(12);
  const Model m = build_benchmark(Architecture::lstm, 16, ModelWidths{4, 8, 16, 6}, 12);
  const auto x = random_inputs(rng, 3, 16);
  const auto r = gradient_check(m, x, near_targets(m, x, rng), 1e-5, 1e-4);
  EXPECT_TRUE(r.passed) << r.max_relative_error << " at " << r.worst_parameter;
}

TEST(Gradcheck, TamperedGradientFails) {
  std::mt19937_64 rng(13);
  const Model m = build_proposed(8, kGradcheckWidths, 42);
  const auto x = random_inputs(rng, 4, 8);
  const auto t = near_targets(m, x, rng);
  const auto r = gradient_check(m, x, t, 1e-5, 1e-4, [](Gradients& g) { g[2][5] *= 2.0; });
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_parameter, std::string(m.parameters()[2].name));
  EXPECT_EQ(r.worst_index, 5);
  EXPECT_NEAR(r.max_relative_error, 0.5, 1e-3);
}

TEST(KernelBackward, ConvMatchesDifferences) {
  std::mt19937_64 rng(14);
  for (Padding pad : {Padding::valid, Padding::same}) {
    ConvParams<double> p(3, 2, 3, pad);
    oracle::fill_uniform(p.weights, rng);
    oracle::fill_uniform(p.bias, rng);
    Sequence<double> x = oracle::random_sequence(rng, 7, 2);
    const auto r = oracle::random_sequence(rng, conv_output_length(7, 3, pad), 3);
    const auto g = conv1d_backward(x, p, r);
    auto f = [&] { return sum_product(conv1d_forward(x, p), r); };
    EXPECT_LT((g.weights.flat() - numeric_grad(p.weights, f)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((g.bias.flat() - numeric_grad(p.bias, f)).cwiseAbs().maxCoeff(), 1e-8);
    Tensor<double> xt({x.size()});
    for (Index i = 0; i < x.size(); ++i) xt(i) = x.data()[i];
    auto fx = [&] {
      Sequence<double> y = Eigen::Map<const Sequence<double>>(xt.flat().data(), 7, 2);
      return sum_product(conv1d_forward(y, p), r);
    };
    const Sequence<double> gx = g.input;
    EXPECT_LT((Eigen::Map<const Eigen::VectorXd>(gx.data(), gx.size()) - numeric_grad(xt, fx)).cwiseAbs().maxCoeff(),
              1e-8);
  }
}

TEST(KernelBackward, DenseMatchesDifferences) {
  std::mt19937_64 rng(15);
  DenseParams<double> p(3, 5);
  oracle::fill_uniform(p.weights, rng);
  oracle::fill_uniform(p.bias, rng);
  const Vector<double> x = random_vector(rng, 5);
  const Vector<double> r = random_vector(rng, 3);
  const auto g = dense_backward(x, p, r);
  auto f = [&] { return dense_forward(x, p).dot(r); };
  EXPECT_LT((g.weights.flat() - numeric_grad(p.weights, f)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((g.bias.flat() - numeric_grad(p.bias, f)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((g.input - p.weights.matrix().transpose() * r).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KernelBackward, LstmMatchesDifferences) {
  std::mt19937_64 rng(16);
  for (Direction dir : {Direction::forward, Direction::backward}) {
    auto p = oracle::random_lstm(rng, 3, 2);
    const Sequence<double> x = oracle::random_sequence(rng, 5, 2);
    const auto r = oracle::random_sequence(rng, 5, 3);
    LstmCache<double> cache;
    lstm_forward(x, p, dir, &cache);
    const auto g = lstm_backward(x, p, cache, r);
    auto f = [&] { return sum_product(lstm_forward(x, p, dir).hidden, r); };
    EXPECT_LT((g.W.flat() - numeric_grad(p.W, f)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((g.U.flat() - numeric_grad(p.U, f)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((g.b.flat() - numeric_grad(p.b, f)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(KernelBackward, BilstmFinalStateMatchesDifferences) {
  std::mt19937_64 rng(17);
  auto fw = oracle::random_lstm(rng, 2, 3);
  auto bw = oracle::random_lstm(rng, 2, 3);
  const Sequence<double> x = oracle::random_sequence(rng, 4, 3);
  const auto r = oracle::random_sequence(rng, 1, 4);
  BiLstmCache<double> cache;
  bilstm_forward(x, fw, bw, false, &cache);
  const auto g = bilstm_backward(x, fw, bw, false, cache, r);
  auto f = [&] { return sum_product(bilstm_forward(x, fw, bw, false), r); };
  EXPECT_LT((g.forward.W.flat() - numeric_grad(fw.W, f)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((g.backward.U.flat() - numeric_grad(bw.U, f)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  const auto data = make_windows(synthetic_series(1, 200).values / 4000.0, 8, 1);
  const Model m = build_proposed(8, kGradcheckWidths, 3);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 2;
  const auto [trained, history] = train(m, data, cfg);
  for (std::size_t k = 0; k < m.parameters().size(); ++k)
    EXPECT_EQ(*m.parameters()[k].tensor, *trained.parameters()[k].tensor);
  EXPECT_EQ(history.epochs(), 2u);
}

TEST(Train, DeterministicForSeed) {
  const auto data = make_windows(synthetic_series(2, 150).values / 4000.0, 8, 1);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  const Model m = build_proposed(8, kGradcheckWidths, 4);
  const auto a = train(m, data, cfg);
  const auto b = train(m, data, cfg);
  EXPECT_EQ(a.second.loss, b.second.loss);
  EXPECT_EQ(a.second.parameter_checksum, b.second.parameter_checksum);
  cfg.seed = 43;
  EXPECT_NE(train(m, data, cfg).second.loss, a.second.loss);
}

TEST(Train, LeavesDatasetUntouched) {
  const auto data = make_windows(synthetic_series(3, 120).values / 4000.0, 8, 1);
  const auto copy = data;
  TrainConfig cfg;
  cfg.epochs = 2;
  train(build_proposed(8, kGradcheckWidths), data, cfg);
  EXPECT_EQ(data.inputs, copy.inputs);
  EXPECT_EQ(data.targets, copy.targets);
}

TEST(Train, ConvergesOnLinearProblem) {
  std::mt19937_64 rng(18);
  WindowedDataset data;
  data.window = 8;
  data.horizon = 1;
  data.inputs = random_inputs(rng, 64, 8);
  Eigen::VectorXd w = random_vector(rng, 8);
  data.targets = data.inputs * w;
  data.targets.array() += 0.2;
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  const auto [model, history] = train(linear_model(8, 19), data, cfg);
  EXPECT_LT(history.loss.back(), 0.01 * history.loss.front());
}

TEST(Train, RejectsBadInput) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  const auto data = make_windows(synthetic_series(4, 100).values / 4000.0, 16, 1);
  EXPECT_THROW(train(build_proposed(8, kGradcheckWidths), data, TrainConfig{}), ConfigError);
}

TEST(History, CsvLayout) {
  TrainHistory h;
  h.loss = {0.5, 0.25};
  h.seconds = {1.0, 2.0};
  std::ostringstream out;
  h.write_csv(out);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,loss,seconds");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
