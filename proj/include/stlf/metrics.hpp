#ifndef STLF_METRICS_HPP
#define STLF_METRICS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stlf/data_pipeline.hpp"
#include "stlf/model.hpp"

namespace stlf {

enum class Scale { normalized, mw };

std::string to_string(Scale s);

/// Paired actual (A_t) and forecast (F_t) values on one scale.
struct EvalSeries {
  Eigen::VectorXd actual;
  Eigen::VectorXd forecast;
  Scale scale = Scale::normalized;

  Index size() const { return actual.size(); }
  /// Throws ShapeError on unequal lengths or an empty series.
  void check() const;
};

/// (1/n)·Σ|A − F|/|A| × 100. Throws DataError naming the first index with A = 0.
double mape(const EvalSeries& s);
double mae(const EvalSeries& s);
double mse(const EvalSeries& s);
/// Exactly √mse.
double rmse(const EvalSeries& s);

struct ScaleMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;

  friend bool operator==(const ScaleMetrics&, const ScaleMetrics&) = default;
};

ScaleMetrics scale_metrics(const EvalSeries& s);

/// One model's results. MSE/RMSE/MAE on both scales; MAPE on MW only.
struct MetricsRow {
  Architecture architecture = Architecture::custom;
  ScaleMetrics normalized;
  ScaleMetrics mw;
  double mape_pct = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Display name used in tables: "LSTM", "CNN-BiLSTM", "CNN-LSTM", "Proposed Method".
std::string display_name(Architecture a);

struct RunMetadata {
  Index window = 0;
  Index horizon = 0;
  std::uint64_t seed = 0;
  Index epochs = 0;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  RunMetadata metadata;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

RunMetadata metadata_of(const Model& model);

/// Metrics of scaled predictions against scaled targets; MW values come from the scaler.
MetricsRow evaluate_predictions(Architecture architecture, const Eigen::Ref<const Eigen::VectorXd>& targets,
                                const Eigen::Ref<const Eigen::VectorXd>& predictions, const Scaler& scaler);

/// One-step predictions over every test window. Throws ConfigError if the dataset was framed
/// with a different window or horizon than the model.
MetricsRow evaluate(const Model& model, const WindowedDataset& test, const Scaler& scaler);

/// `index,actual_mw,forecast_mw`
void write_points_csv(const Eigen::Ref<const Eigen::VectorXd>& actual_mw,
                      const Eigen::Ref<const Eigen::VectorXd>& forecast_mw, std::ostream& out);

/// Rows in table order: LSTM, CNN-BiLSTM, CNN-LSTM, Proposed Method, then anything else.
std::vector<MetricsRow> table_order(std::vector<MetricsRow> rows);

/// Index (in table order) of the lowest MAPE; the earliest row wins ties.
std::size_t best_row(const std::vector<MetricsRow>& ordered);

/// `{"rows":[...],"best":...,"metadata":{...}}` with one row per model and scale.
std::string to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

/// Model | MSE | RMSE | MAE | MAPE(%) at four decimals, best row marked with `*`. The first
/// table uses normalized MSE/RMSE/MAE, the second MW.
std::string render_table(const MetricsReport& report);

struct Comparison {
  std::string table;
  std::string json;
};

/// Throws DataError on an empty report.
Comparison compare(const MetricsReport& report);

}  // namespace stlf

#endif  // STLF_METRICS_HPP
