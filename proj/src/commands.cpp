#include "stlf/commands.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include "stlf/checkpoint.hpp"
#include "stlf/errors.hpp"
#include "stlf/io.hpp"

namespace stlf {

namespace fs = std::filesystem;

namespace {

// Rethrows the in-flight stlf error with `label` prepended, keeping its category.
[[noreturn]] void rethrow_labeled(const std::string& label) {
  try {
    throw;
  } catch (const NumericError& e) {
    throw NumericError(label + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(label + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(label + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(label + ": " + e.what());
  }
}

template <typename F>
auto stage(const std::string& label, F&& f) {
  try {
    return f();
  } catch (const Error&) {
    rethrow_labeled(label);
  }
}

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string(what) + " is required");
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MetricsReport single_report(const MetricsRow& row, const Model& model) { return {{row}, metadata_of(model)}; }

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitData;
}

int run_guarded(std::ostream& err, const std::function<int()>& command) {
  try {
    return command();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

TimeSeries load_clean_series(const fs::path& path, double max_mw) {
  ValidationResult v = validate(load_csv(path), max_mw);
  const std::size_t missing = v.series.count(PointFlag::missing);
  const std::size_t invalid = v.series.count(PointFlag::invalid);
  if (missing + invalid > 0) {
    throw DataError(path.string() + ": " + std::to_string(missing) + " missing and " + std::to_string(invalid) +
                    " invalid points; run preprocess first");
  }
  return std::move(v.series);
}

PreparedData prepare_data(const TimeSeries& series, Index window, Index horizon, double split_ratio,
                          const std::optional<Scaler>& scaler) {
  const auto min_points = static_cast<std::size_t>(window + horizon);
  auto [train, test] = chronological_split(series, split_ratio, min_points);
  const Scaler s = scaler ? *scaler : Scaler::fit(train);
  WindowedDataset train_windows = make_windows(s.transform(train.values), window, horizon);
  WindowedDataset test_windows = make_windows(s.transform(test.values), window, horizon);
  return {std::move(train), std::move(test), s, std::move(train_windows), std::move(test_windows)};
}

TrainOutcome fit_and_evaluate(const RunConfig& config, Architecture architecture, const ModelWidths& widths,
                              const PreparedData& data, const EpochCallback& on_epoch) {
  Model model = build_model(architecture, config.window, widths, config.train.seed);
  ModelInfo& info = model.info();
  info.width_scale = config.width_scale;
  info.horizon = config.horizon;
  info.split_ratio = config.split_ratio;
  info.max_mw = config.max_mw;
  info.scaler = data.scaler;
  auto [trained, history] = train(std::move(model), data.train_windows, config.train, on_epoch);
  const MetricsRow metrics = evaluate(trained, data.test_windows, data.scaler);
  return {std::move(trained), std::move(history), metrics};
}

PreprocessSummary cmd_preprocess(const RunConfig& config, const fs::path& output, std::ostream& log) {
  require_path(config.input, "--input");
  require_path(output, "--output");
  if (!(config.max_mw > 0.0)) throw ConfigError("max_mw must be positive");

  const TimeSeries raw = load_csv(config.input);
  PreprocessSummary summary;
  summary.total = raw.size();
  summary.missing = raw.count(PointFlag::missing);
  const ValidationResult checked = validate(raw, config.max_mw);
  summary.flagged = checked.series.count(PointFlag::invalid);
  const TimeSeries clean = stage("interpolate", [&] { return interpolate_missing(checked.series); });
  summary.imputed = clean.imputed_count() - raw.imputed_count();

  std::ostringstream csv;
  write_csv(clean, csv);
  write_file_atomic(output, csv.str());
  log << "total " << summary.total << ", missing " << summary.missing << ", flagged " << summary.flagged
      << ", imputed " << summary.imputed << '\n'
      << "wrote " << output.string() << '\n';
  return summary;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
  require_path(config.input, "--input");
  require_path(config.output_dir, "--out-dir");
  config.validate();
  const ModelWidths widths = scaled_widths(config.width_scale);

  const TimeSeries series = stage("load", [&] { return load_clean_series(config.input, config.max_mw); });
  const PreparedData data = stage("split", [&] {
    return prepare_data(series, config.window, config.horizon, config.split_ratio);
  });
  const Index every = std::max<Index>(1, config.train.epochs / 10);
  const TrainOutcome out = stage("train", [&] {
    return fit_and_evaluate(config, config.architecture, widths, data, [&](Index epoch, double loss) {
      if (epoch % every == 0 || epoch == config.train.epochs) log << "epoch " << epoch << " loss " << g17(loss) << '\n';
    });
  });

  const MetricsReport report = single_report(out.metrics, out.model);
  std::ostringstream history;
  out.history.write_csv(history);
  const fs::path checkpoint = config.output_dir / "model.dfc";
  StagedOutputs outputs;
  outputs.add(checkpoint, serialize_model(out.model));
  outputs.add(config.output_dir / "history.csv", history.str());
  outputs.add(config.output_dir / "metrics.json", to_json(report));
  outputs.add(config.output_dir / "metrics.txt", render_table(report));
  stage("save", [&] {
    outputs.commit();
    return 0;
  });

  log << "final loss " << g17(out.history.loss.back()) << '\n'
      << "test MAPE " << g17(out.metrics.mape_pct) << "%\n"
      << "checkpoint " << checkpoint.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& config, const fs::path& checkpoint, std::optional<Index> window,
                 std::ostream& log) {
  require_path(config.input, "--input");
  require_path(config.output_dir, "--out-dir");
  require_path(checkpoint, "--checkpoint");

  const Model model = stage("checkpoint", [&] { return load_model(checkpoint); });
  const ModelInfo& info = model.info();
  if (window && *window != model.window()) {
    throw ConfigError("checkpoint window " + std::to_string(model.window()) + " does not match requested window " +
                      std::to_string(*window));
  }
  if (!info.scaler) throw DataError(checkpoint.string() + ": checkpoint carries no scaler");

  const TimeSeries series = stage("load", [&] { return load_clean_series(config.input, info.max_mw); });
  const PreparedData data = stage("split", [&] {
    return prepare_data(series, model.window(), info.horizon, info.split_ratio, info.scaler);
  });
  const Eigen::VectorXd predictions = predict_batch(model, data.test_windows.inputs);
  const MetricsRow row =
      evaluate_predictions(model.architecture(), data.test_windows.targets, predictions, *info.scaler);
  const MetricsReport report = single_report(row, model);

  std::ostringstream points;
  write_points_csv(info.scaler->inverse_transform(data.test_windows.targets),
                   info.scaler->inverse_transform(predictions), points);
  StagedOutputs outputs;
  outputs.add(config.output_dir / "metrics.json", to_json(report));
  outputs.add(config.output_dir / "metrics.txt", render_table(report));
  outputs.add(config.output_dir / "forecast_points.csv", points.str());
  outputs.commit();

  log << render_table(report);
  return kExitOk;
}

int cmd_forecast(const RunConfig& config, const fs::path& checkpoint, Index steps, const fs::path& output,
                 std::ostream& log) {
  require_path(config.input, "--input");
  require_path(checkpoint, "--checkpoint");
  require_path(output, "--output");
  if (steps < 1) throw ConfigError("--steps must be >= 1");

  const Model model = stage("checkpoint", [&] { return load_model(checkpoint); });
  const ModelInfo& info = model.info();
  if (info.horizon != 1) {
    throw ConfigError("recursive forecasting needs a horizon-1 model, checkpoint has horizon " +
                      std::to_string(info.horizon));
  }
  if (!info.scaler) throw DataError(checkpoint.string() + ": checkpoint carries no scaler");
  const TimeSeries series = stage("load", [&] { return load_clean_series(config.input, info.max_mw); });
  const Index w = model.window();
  if (static_cast<Index>(series.size()) < w) {
    throw DataError("series has " + std::to_string(series.size()) + " points, the model needs a window of " +
                    std::to_string(w));
  }

  const Eigen::VectorXd seed_window = info.scaler->transform(series.values.tail(w));
  const Eigen::VectorXd forecast = info.scaler->inverse_transform(forecast_recursive(model, seed_window, steps));
  std::ostringstream csv;
  csv << "date,forecast_mw\n";
  for (Index k = 0; k < steps; ++k) {
    csv << format_date(series.dates.back() + std::chrono::days{static_cast<int>(k + 1)}) << ',' << format_double(forecast[k]) << '\n';
  }
  write_file_atomic(output, csv.str());
  log << "wrote " << steps << " forecast rows to " << output.string() << '\n';
  return kExitOk;
}

int cmd_compare(const RunConfig& config, std::ostream& log) {
  require_path(config.input, "--input");
  require_path(config.output_dir, "--out-dir");
  config.validate();
  const ModelWidths widths = scaled_widths(config.width_scale);

  const TimeSeries series = stage("load", [&] { return load_clean_series(config.input, config.max_mw); });
  const PreparedData data = stage("split", [&] {
    return prepare_data(series, config.window, config.horizon, config.split_ratio);
  });

  MetricsReport report;
  report.metadata = {config.window, config.horizon, config.train.seed, config.train.epochs};
  for (Architecture arch : kComparedArchitectures) {
    const TrainOutcome out = stage(to_string(arch), [&] { return fit_and_evaluate(config, arch, widths, data); });
    log << display_name(arch) << ": final loss " << g17(out.history.loss.back()) << ", test MAPE "
        << g17(out.metrics.mape_pct) << "%\n";
    report.rows.push_back(out.metrics);
  }

  const Comparison c = compare(report);
  StagedOutputs outputs;
  outputs.add(config.output_dir / "comparison.txt", c.table);
  outputs.add(config.output_dir / "comparison.json", c.json);
  outputs.commit();
  log << c.table;
  return kExitOk;
}

GradientCheckReport run_gradcheck(const GradcheckOptions& options) {
  if (options.batch < 1) throw ConfigError("gradcheck batch must be >= 1");
  if (!(options.step > 0.0)) throw ConfigError("gradcheck step must be > 0");
  if (!(options.tolerance > 0.0)) throw ConfigError("gradcheck tolerance must be > 0");
  const Model model = build_proposed(options.window, kGradcheckWidths, options.seed);

  // Separate stream from parameter initialization, which uses the raw seed.
  std::mt19937_64 rng(options.seed ^ 0xD1B54A32D192ED03ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  WindowMatrix inputs(options.batch, options.window);
  for (Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = unit(rng);
  // Small residuals keep the loss, and with it the finite-difference rounding noise, small.
  Eigen::VectorXd targets = predict_batch(model, inputs);
  for (Index i = 0; i < targets.size(); ++i) targets[i] += 1e-3 * (unit(rng) - 0.5);

  GradientTamper tamper;
  if (options.inject_fault) {
    tamper = [](Gradients& grads) {
      double* largest = &grads.front()[0];
      for (auto& g : grads) {
        for (Index i = 0; i < g.size(); ++i) {
          if (std::abs(g[i]) > std::abs(*largest)) largest = &g[i];
        }
      }
      *largest *= 2.0;
    };
  }
  return gradient_check(model, inputs, targets, options.step, options.tolerance, tamper);
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& log) {
  const GradientCheckReport r = run_gradcheck(options);
  log << "checked " << r.checked << " parameters (window " << options.window << ", batch " << options.batch
      << ", step " << format_double(options.step) << ")\n"
      << "max relative error " << g17(r.max_relative_error) << " at " << r.worst_parameter << '[' << r.worst_index
      << "] (analytic " << g17(r.analytic) << ", numeric " << g17(r.numeric) << ")\n"
      << (r.passed ? "PASS" : "FAIL") << ": tolerance " << format_double(r.tolerance) << '\n';
  return r.passed ? kExitOk : kExitNumeric;
}

}  // namespace stlf
