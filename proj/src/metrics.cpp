#include "stlf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <ostream>

#include "stlf/errors.hpp"

namespace stlf {

using json = nlohmann::ordered_json;

std::string to_string(Scale s) { return s == Scale::normalized ? "normalized" : "mw"; }

void EvalSeries::check() const {
  if (actual.size() != forecast.size()) {
    throw ShapeError("metrics: " + std::to_string(actual.size()) + " actual values vs " +
                     std::to_string(forecast.size()) + " forecasts");
  }
  if (actual.size() == 0) throw ShapeError("metrics: empty series");
}

double mape(const EvalSeries& s) {
  s.check();
  double sum = 0.0;
  for (Index t = 0; t < s.size(); ++t) {
    if (s.actual[t] == 0.0) throw DataError("mape: actual value is zero at index " + std::to_string(t));
    sum += std::abs(s.actual[t] - s.forecast[t]) / std::abs(s.actual[t]);
  }
  return 100.0 * sum / static_cast<double>(s.size());
}

double mae(const EvalSeries& s) {
  s.check();
  return (s.actual - s.forecast).cwiseAbs().sum() / static_cast<double>(s.size());
}

double mse(const EvalSeries& s) {
  s.check();
  return (s.actual - s.forecast).squaredNorm() / static_cast<double>(s.size());
}

double rmse(const EvalSeries& s) { return std::sqrt(mse(s)); }

ScaleMetrics scale_metrics(const EvalSeries& s) {
  const double m = mse(s);
  return {m, std::sqrt(m), mae(s)};
}

std::string display_name(Architecture a) {
  switch (a) {
    case Architecture::lstm:
      return "LSTM";
    case Architecture::cnn_bilstm:
      return "CNN-BiLSTM";
    case Architecture::cnn_lstm:
      return "CNN-LSTM";
    case Architecture::proposed:
      return "Proposed Method";
    case Architecture::custom:
      break;
  }
  return "Custom";
}

RunMetadata metadata_of(const Model& model) {
  return {model.window(), model.info().horizon, model.info().seed, model.info().epochs_trained};
}

MetricsRow evaluate_predictions(Architecture architecture, const Eigen::Ref<const Eigen::VectorXd>& targets,
                                const Eigen::Ref<const Eigen::VectorXd>& predictions, const Scaler& scaler) {
  const EvalSeries normalized{targets, predictions, Scale::normalized};
  const EvalSeries mw{scaler.inverse_transform(targets), scaler.inverse_transform(predictions), Scale::mw};
  return {architecture, scale_metrics(normalized), scale_metrics(mw), mape(mw)};
}

MetricsRow evaluate(const Model& model, const WindowedDataset& test, const Scaler& scaler) {
  if (test.window != model.window() || test.inputs.cols() != model.window()) {
    throw ConfigError("test windows have length " + std::to_string(test.window) + " but the model expects " +
                      std::to_string(model.window()));
  }
  if (test.horizon != model.info().horizon) {
    throw ConfigError("test horizon " + std::to_string(test.horizon) + " differs from the model horizon " +
                      std::to_string(model.info().horizon));
  }
  return evaluate_predictions(model.architecture(), test.targets, predict_batch(model, test.inputs), scaler);
}

void write_points_csv(const Eigen::Ref<const Eigen::VectorXd>& actual_mw,
                      const Eigen::Ref<const Eigen::VectorXd>& forecast_mw, std::ostream& out) {
  if (actual_mw.size() != forecast_mw.size()) throw ShapeError("points csv: column lengths differ");
  out << "index,actual_mw,forecast_mw\n";
  for (Index i = 0; i < actual_mw.size(); ++i) {
    out << i << ',' << format_double(actual_mw[i]) << ',' << format_double(forecast_mw[i]) << '\n';
  }
}

namespace {

int table_rank(Architecture a) {
  switch (a) {
    case Architecture::lstm:
      return 0;
    case Architecture::cnn_bilstm:
      return 1;
    case Architecture::cnn_lstm:
      return 2;
    case Architecture::proposed:
      return 3;
    case Architecture::custom:
      break;
  }
  return 4;
}

json scale_row(const MetricsRow& row, Scale scale) {
  const ScaleMetrics& m = scale == Scale::normalized ? row.normalized : row.mw;
  return {{"model", display_name(row.architecture)},
          {"architecture", to_string(row.architecture)},
          {"scale", to_string(scale)},
          {"mse", m.mse},
          {"rmse", m.rmse},
          {"mae", m.mae},
          {"mape_pct", row.mape_pct}};
}

ScaleMetrics metrics_from(const json& j) {
  return {j.at("mse").get<double>(), j.at("rmse").get<double>(), j.at("mae").get<double>()};
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void render_scale(std::string& out, const std::vector<MetricsRow>& rows, std::size_t best, Scale scale) {
  std::vector<std::vector<std::string>> cells{{"Model", "MSE", "RMSE", "MAE", "MAPE(%)"}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ScaleMetrics& m = scale == Scale::normalized ? rows[i].normalized : rows[i].mw;
    cells.push_back({display_name(rows[i].architecture) + (i == best ? "*" : ""), fixed4(m.mse), fixed4(m.rmse),
                     fixed4(m.mae), fixed4(rows[i].mape_pct)});
  }
  std::vector<std::size_t> width(5, 0);
  for (const auto& r : cells) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) out += " | ";
      const std::string pad(width[c] - r[c].size(), ' ');
      out += c == 0 ? r[c] + pad : pad + r[c];
    }
    out += '\n';
  };
  line(cells[0]);
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c > 0) out += "-+-";
    out += std::string(width[c], '-');
  }
  out += '\n';
  for (std::size_t r = 1; r < cells.size(); ++r) line(cells[r]);
}

}  // namespace

std::vector<MetricsRow> table_order(std::vector<MetricsRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return table_rank(a.architecture) < table_rank(b.architecture);
  });
  return rows;
}

std::size_t best_row(const std::vector<MetricsRow>& ordered) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].mape_pct < ordered[best].mape_pct) best = i;
  }
  return best;
}

std::string to_json(const MetricsReport& report) {
  const auto rows = table_order(report.rows);
  json j;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    j["rows"].push_back(scale_row(r, Scale::normalized));
    j["rows"].push_back(scale_row(r, Scale::mw));
  }
  j["best"] = rows.empty() ? json(nullptr) : json(display_name(rows[best_row(rows)].architecture));
  j["metadata"] = {{"window", report.metadata.window},
                   {"horizon", report.metadata.horizon},
                   {"seed", report.metadata.seed},
                   {"epochs", report.metadata.epochs}};
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    MetricsReport report;
    const auto& meta = j.at("metadata");
    report.metadata = {meta.at("window").get<Index>(), meta.at("horizon").get<Index>(),
                       meta.at("seed").get<std::uint64_t>(), meta.at("epochs").get<Index>()};
    for (const auto& r : j.at("rows")) {
      const Architecture arch = parse_architecture(r.at("architecture").get<std::string>());
      auto it = std::find_if(report.rows.begin(), report.rows.end(),
                             [&](const MetricsRow& m) { return m.architecture == arch; });
      if (it == report.rows.end()) {
        report.rows.push_back({arch, {}, {}, r.at("mape_pct").get<double>()});
        it = report.rows.end() - 1;
      }
      const auto scale = r.at("scale").get<std::string>();
      if (scale == "normalized") {
        it->normalized = metrics_from(r);
      } else if (scale == "mw") {
        it->mw = metrics_from(r);
      } else {
        throw DataError("metrics json: unknown scale '" + scale + "'");
      }
    }
    return report;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed metrics json: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("metrics json: ") + e.what());
  }
}

std::string render_table(const MetricsReport& report) {
  const auto rows = table_order(report.rows);
  if (rows.empty()) return {};
  const std::size_t best = best_row(rows);
  std::string out = "Normalized scale (MAPE on MW)\n";
  render_scale(out, rows, best, Scale::normalized);
  out += "\nMW scale\n";
  render_scale(out, rows, best, Scale::mw);
  const RunMetadata& m = report.metadata;
  out += "\nwindow " + std::to_string(m.window) + ", horizon " + std::to_string(m.horizon) + ", seed " +
         std::to_string(m.seed) + ", epochs " + std::to_string(m.epochs) + "\n";
  return out;
}

Comparison compare(const MetricsReport& report) {
  if (report.rows.empty()) throw DataError("compare: no rows");
  return {render_table(report), to_json(report)};
}

}  // namespace stlf
