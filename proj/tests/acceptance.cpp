// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <bit>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "stlf/checkpoint.hpp"
#include "stlf/commands.hpp"
#include "stlf/io.hpp"

using namespace stlf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void criterion(int id, const std::string& name, double budget_seconds, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > budget_seconds) {
    o.passed = false;
    o.detail += "; over the " + fmt("%.0f", budget_seconds) + " s budget";
  }
  if (!o.passed) ++failures;
  std::printf("%s [%d] %s: %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stlf_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_synthetic(const fs::path& dir, std::size_t days) {
  std::ostringstream csv;
  write_csv(synthetic_series(42, days), csv);
  write_file_atomic(dir / "series.csv", csv.str());
  return dir / "series.csv";
}

Outcome gradient_correctness() {
  const auto r = run_gradcheck(GradcheckOptions{});
  return {r.passed && r.max_relative_error < 1e-4 && r.checked > 0,
          "max relative error " + fmt("%.3g", r.max_relative_error) + " over " + std::to_string(r.checked) +
              " parameters (worst " + r.worst_parameter + "[" + std::to_string(r.worst_index) + "])"};
}

Outcome kernel_oracles() {
  const double conv_valid = oracle::worst_conv_error(Padding::valid, 100, 101);
  const double conv_same = oracle::worst_conv_error(Padding::same, 100, 102);
  const double pool = oracle::worst_pool_error(100, 103);
  const double cell = oracle::worst_cell_error(100, 104);
  const double bilstm = oracle::worst_bilstm_error(100, 105);
  const double worst = std::max({conv_valid, conv_same, pool, cell, bilstm});
  return {worst <= 1e-12, "worst |diff| conv valid " + fmt("%.2g", conv_valid) + ", same " + fmt("%.2g", conv_same) +
                              ", pool " + fmt("%.2g", pool) + ", cell " + fmt("%.2g", cell) + ", bilstm " +
                              fmt("%.2g", bilstm)};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(201);
  std::uniform_real_distribution<double> level(2800.0, 3800.0), noise(-150.0, 150.0), pos(0.5, 5.0), k(1e-3, 1e3);
  std::vector<double> a(1000), f(1000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = level(rng);
    f[i] = a[i] + noise(rng);
  }
  const EvalSeries s{Eigen::Map<Eigen::VectorXd>(a.data(), 1000), Eigen::Map<Eigen::VectorXd>(f.data(), 1000),
                     Scale::mw};
  const auto o = oracle::metrics(a, f);
  auto rel = [](double x, long double ref) { return static_cast<double>(std::fabs((x - ref) / ref)); };
  const double worst =
      std::max({rel(mape(s), o.mape), rel(mae(s), o.mae), rel(mse(s), o.mse), rel(rmse(s), o.rmse)});
  const double square = std::abs(rmse(s) * rmse(s) - mse(s)) / mse(s);

  double invariance = 0.0;
  for (int n = 0; n < 100; ++n) {
    EvalSeries base{Eigen::VectorXd(50), Eigen::VectorXd(50), Scale::mw};
    for (Index i = 0; i < 50; ++i) {
      base.actual[i] = pos(rng);
      base.forecast[i] = pos(rng);
    }
    const double c = k(rng);
    const EvalSeries scaled{c * base.actual, c * base.forecast, Scale::mw};
    invariance = std::max(invariance, std::abs(mape(scaled) - mape(base)) / mape(base));
  }
  return {worst < 1e-9 && square < 1e-9 && invariance < 1e-9,
          "oracle rel err " + fmt("%.2g", worst) + ", |rmse^2 - mse|/mse " + fmt("%.2g", square) +
              ", rescaled MAPE drift " + fmt("%.2g", invariance)};
}

Outcome pipeline_exactness() {
  std::mt19937_64 rng(301);
  std::uniform_real_distribution<double> mw(100.0, 9000.0), coef(-40.0, 40.0);
  std::bernoulli_distribution drop(0.3);

  const Scaler scaler(2900.0, 3700.0);
  double round_trip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = mw(rng);
    round_trip = std::max(round_trip, std::abs(scaler.inverse_transform(scaler.transform(x)) - x) / x);
  }

  double affine = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double a0 = 3200.0 + coef(rng);
    const double b = coef(rng);
    std::string csv = "date,demand_mw\n";
    Date d = parse_date("2018-03-01");
    for (int i = 0; i < 90; ++i, d += std::chrono::days{1}) {
      const bool interior = i > 0 && i < 89;
      csv += format_date(d) + "," + (interior && drop(rng) ? "" : format_double(a0 + b * i)) + "\n";
    }
    std::istringstream in(csv);
    const TimeSeries filled = interpolate_missing(read_csv(in));
    for (int i = 0; i < 90; ++i) affine = std::max(affine, std::abs(filled.values[i] - (a0 + b * i)) / (a0 + b * i));
  }

  bool split_ok = true;
  const TimeSeries full = synthetic_series(7, 731);
  for (double ratio : {0.05, 0.25, 0.5, 0.8, 0.97}) {
    const auto [train, test] = chronological_split(full, ratio);
    split_ok = split_ok && train.size() + test.size() == full.size();
    for (std::size_t i = 0; split_ok && i < full.size(); ++i) {
      const bool left = i < train.size();
      const std::size_t j = left ? i : i - train.size();
      const TimeSeries& side = left ? train : test;
      split_ok = side.dates[j] == full.dates[i] && side.values[static_cast<Index>(j)] == full.values[static_cast<Index>(i)];
    }
  }

  bool windows_ok = true;
  int grid = 0;
  for (Index L = 2; L <= 60 && windows_ok; ++L) {
    const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(L, 0.0, static_cast<double>(L - 1));
    for (Index W = 1; W <= 33 && windows_ok; ++W) {
      for (Index h = 1; h <= 7 && windows_ok; ++h) {
        if (L < W + h) continue;
        const auto w = make_windows(s, W, h);
        ++grid;
        windows_ok = w.size() == L - W - h + 1 && w.targets[w.size() - 1] == static_cast<double>(L - 1) &&
                     w.inputs(0, W - 1) == static_cast<double>(W - 1);
      }
    }
  }

  return {round_trip <= 1e-12 && affine <= 1e-9 && split_ok && windows_ok,
          "scaler round trip " + fmt("%.2g", round_trip) + ", affine reconstruction " + fmt("%.2g", affine) +
              ", split identity " + (split_ok ? "ok" : "broken") + ", window count over " + std::to_string(grid) +
              " (L, W, h) cases " + (windows_ok ? "ok" : "broken")};
}

Outcome learning_surrogate() {
  RunConfig config;
  config.train.epochs = 200;
  const TimeSeries series = synthetic_series(42);
  const PreparedData data = prepare_data(series, config.window, config.horizon, config.split_ratio);
  const TrainOutcome fit = fit_and_evaluate(config, Architecture::proposed, kGradcheckWidths, data);

  const fs::path dir = scratch("compare");
  RunConfig cmp;
  cmp.input = write_synthetic(dir, 2190);
  cmp.output_dir = dir / "out";
  cmp.width_scale = 0.0625;
  cmp.train.epochs = 200;
  std::ostringstream log;
  cmd_compare(cmp, log);
  const MetricsReport report = report_from_json(read_file(cmp.output_dir / "comparison.json"));
  const std::string table = read_file(cmp.output_dir / "comparison.txt");
  bool names = true;
  for (Architecture a : kComparedArchitectures) names = names && table.find(display_name(a)) != std::string::npos;
  fs::remove_all(dir);

  const bool ok = fit.metrics.mape_pct < 5.0 && report.rows.size() == 4 && names;
  return {ok, "reduced model test MAPE " + fmt("%.3f", fit.metrics.mape_pct) + "% after 200 epochs; compare rows " +
                  std::to_string(report.rows.size()) + ", best " +
                  display_name(table_order(report.rows)[best_row(table_order(report.rows))].architecture)};
}

Outcome determinism() {
  const fs::path dir = scratch("determinism");
  RunConfig c;
  c.input = write_synthetic(dir, 400);
  c.window = 16;
  c.width_scale = 0.0625;
  c.train.epochs = 3;
  std::ostringstream log;
  c.output_dir = dir / "a";
  cmd_train(c, log);
  c.output_dir = dir / "b";
  cmd_train(c, log);
  const bool same_ckpt = read_file(dir / "a" / "model.dfc") == read_file(dir / "b" / "model.dfc");

  RunConfig e;
  e.input = c.input;
  e.output_dir = dir / "e1";
  cmd_evaluate(e, dir / "a" / "model.dfc", std::nullopt, log);
  e.output_dir = dir / "e2";
  cmd_evaluate(e, dir / "a" / "model.dfc", std::nullopt, log);
  const bool same_json = read_file(dir / "e1" / "metrics.json") == read_file(dir / "e2" / "metrics.json");
  fs::remove_all(dir);
  return {same_ckpt && same_json, std::string("checkpoints ") + (same_ckpt ? "identical" : "differ") +
                                      ", evaluate JSON " + (same_json ? "identical" : "differs")};
}

Outcome serialization() {
  const fs::path dir = scratch("serialization");
  Model m = build_proposed(32, kGradcheckWidths, 11);
  m.info().scaler = Scaler(2900.0, 3700.0);
  save_model(m, dir / "m.dfc");
  const Model back = load_model(dir / "m.dfc");

  bool bits = back.parameters().size() == m.parameters().size();
  for (std::size_t k = 0; bits && k < m.parameters().size(); ++k) {
    const auto& x = m.parameters()[k].tensor->flat();
    const auto& y = back.parameters()[k].tensor->flat();
    bits = x.size() == y.size();
    for (Index i = 0; bits && i < x.size(); ++i)
      bits = std::bit_cast<std::uint64_t>(x[i]) == std::bit_cast<std::uint64_t>(y[i]);
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  bool preds = true;
  for (int n = 0; n < 20; ++n) {
    Eigen::VectorXd w(32);
    for (Index i = 0; i < 32; ++i) w[i] = d(rng);
    preds = preds && predict(m, w) == predict(back, w);
  }

  const std::string bytes = read_file(dir / "m.dfc");
  std::string corrupt = bytes;
  corrupt[corrupt.size() - 1] = static_cast<char>(corrupt.back() ^ 0x01);
  bool crc_rejected = false;
  try {
    deserialize_model(corrupt);
  } catch (const ChecksumError&) {
    crc_rejected = true;
  }
  std::string versioned = bytes;
  const std::string key = "\"format_version\":1";
  versioned.replace(versioned.find(key), key.size(), "\"format_version\":7");
  bool version_rejected = false;
  try {
    deserialize_model(versioned);
  } catch (const VersionError&) {
    version_rejected = true;
  }
  fs::remove_all(dir);
  return {bits && preds && crc_rejected && version_rejected,
          std::string("parameters ") + (bits ? "bit-identical" : "differ") + ", predictions " +
              (preds ? "identical" : "differ") + ", bad CRC " + (crc_rejected ? "ChecksumError" : "accepted") +
              ", wrong version " + (version_rejected ? "VersionError" : "accepted")};
}

Outcome construction() {
  const Model m = build_proposed(32, 1.0);
  std::string kinds;
  for (const auto& l : m.layers()) kinds += std::string(layer_kind(l)) + " ";
  bool ok = kinds == "conv1d relu maxpool1d conv1d relu maxpool1d conv1d relu maxpool1d bilstm bilstm dense ";
  const Index filters[3] = {64, 128, 256};
  for (int k = 0; ok && k < 3; ++k) {
    const auto& c = std::get<Conv1dLayer>(m.layers()[3 * k]).params;
    ok = c.filters() == filters[k] && c.kernel() == 3 && c.padding == Padding::same &&
         std::get<MaxPoolLayer>(m.layers()[3 * k + 2]).pool == 2;
  }
  const auto& b1 = std::get<BiLstmLayer>(m.layers()[9]);
  const auto& b2 = std::get<BiLstmLayer>(m.layers()[10]);
  ok = ok && b1.forward.units() == 256 && b1.backward.units() == 256 && b1.return_sequences &&
       b2.forward.units() == 256 && !b2.return_sequences &&
       std::get<DenseLayer>(m.layers()[11]).params.outputs() == 1;

  const auto& s = m.shapes();
  std::string chain;
  for (Index k : {3, 6, 9}) chain += std::to_string(s[k].steps) + "→";
  chain.resize(chain.size() - 3);
  ok = ok && s[0].steps == 32 && s[3].steps == 16 && s[6].steps == 8 && s[9].steps == 4 && s[11].width == 512 &&
       s[12].width == 1;

  const std::string manifest = serialize_model(m);
  ok = ok && manifest.find("\"bilstm2\"") != std::string::npos;
  return {ok, "layers " + kinds + "| steps 32→" + chain + ", feature width " + std::to_string(s[11].width) + ", " +
                  std::to_string(m.parameter_count()) + " parameters"};
}

}  // namespace

int main() {
  criterion(1, "gradient correctness", 300, gradient_correctness);
  criterion(2, "kernel oracles", 60, kernel_oracles);
  criterion(3, "metric oracles", 60, metric_oracles);
  criterion(4, "pipeline exactness", 60, pipeline_exactness);
  criterion(5, "desk-scale learning surrogate", 900, learning_surrogate);
  criterion(6, "determinism", 300, determinism);
  criterion(7, "serialization", 60, serialization);
  criterion(8, "proposed-model construction", 60, construction);
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
