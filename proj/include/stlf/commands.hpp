#ifndef STLF_COMMANDS_HPP
#define STLF_COMMANDS_HPP

#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>

#include "stlf/config.hpp"
#include "stlf/metrics.hpp"
#include "stlf/training.hpp"

namespace stlf {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// ConfigError → 1, NumericError → 3, everything else → 2.
int exit_code_for(const std::exception& e);

/// Runs `command`, reporting any exception on `err` as `error: ...` and mapping it to an exit code.
int run_guarded(std::ostream& err, const std::function<int()>& command);

/// Loads a cleaned CSV and applies the anomaly check. Throws DataError if any point is still
/// missing or flagged.
TimeSeries load_clean_series(const std::filesystem::path& path, double max_mw);

struct PreparedData {
  TimeSeries train;
  TimeSeries test;
  Scaler scaler;
  WindowedDataset train_windows;
  WindowedDataset test_windows;
};

/// Chronological split, scaler fitted on the training side (unless given), windows framed
/// inside each side separately.
PreparedData prepare_data(const TimeSeries& series, Index window, Index horizon, double split_ratio,
                          const std::optional<Scaler>& scaler = std::nullopt);

struct TrainOutcome {
  Model model;
  TrainHistory history;
  MetricsRow metrics;
};

/// Builds `architecture` with `widths`, trains it and evaluates it on the test windows.
TrainOutcome fit_and_evaluate(const RunConfig& config, Architecture architecture, const ModelWidths& widths,
                              const PreparedData& data, const EpochCallback& on_epoch = {});

struct PreprocessSummary {
  std::size_t total = 0;
  std::size_t missing = 0;
  std::size_t flagged = 0;
  std::size_t imputed = 0;
};

/// load → validate → interpolate; writes the cleaned CSV to `output`.
PreprocessSummary cmd_preprocess(const RunConfig& config, const std::filesystem::path& output, std::ostream& log);

/// Writes model.dfc, history.csv, metrics.json and metrics.txt into config.output_dir.
int cmd_train(const RunConfig& config, std::ostream& log);

/// Test-split metrics of a checkpoint. Writes metrics.json, metrics.txt and forecast_points.csv.
/// Window, horizon, split and scaler come from the checkpoint; `window`, when given, must match.
int cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint, std::optional<Index> window,
                 std::ostream& log);

/// `date,forecast_mw` rows continuing the series from its final window.
int cmd_forecast(const RunConfig& config, const std::filesystem::path& checkpoint, Index steps,
                 const std::filesystem::path& output, std::ostream& log);

/// Trains and evaluates the four compared architectures; writes comparison.txt and comparison.json.
int cmd_compare(const RunConfig& config, std::ostream& log);

struct GradcheckOptions {
  std::uint64_t seed = 42;
  double tolerance = 1e-4;
  double step = 1e-5;
  Index window = 8;
  Index batch = 4;
  bool inject_fault = false;
};

/// Reduced proposed model on a seeded random batch whose targets sit within ±5e-4 of the
/// model's own predictions. `inject_fault` doubles the largest analytic gradient entry.
GradientCheckReport run_gradcheck(const GradcheckOptions& options);

/// Prints the report; returns kExitNumeric when the check fails.
int cmd_gradcheck(const GradcheckOptions& options, std::ostream& log);

}  // namespace stlf

#endif  // STLF_COMMANDS_HPP
