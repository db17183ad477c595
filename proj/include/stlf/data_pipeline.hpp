#ifndef STLF_DATA_PIPELINE_HPP
#define STLF_DATA_PIPELINE_HPP

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stlf/tensor.hpp"

namespace stlf {

using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`. Throws DataError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

enum class PointFlag : std::uint8_t { observed, missing, invalid };

/// Daily demand observations in MW. `values` is NaN wherever the point is not observed.
struct TimeSeries {
  std::vector<Date> dates;
  Eigen::VectorXd values;
  std::vector<PointFlag> flags;
  /// Points whose value was filled by interpolate_missing.
  std::vector<bool> imputed;

  std::size_t size() const { return dates.size(); }
  std::size_t count(PointFlag flag) const;
  std::size_t imputed_count() const;
  bool fully_observed() const { return count(PointFlag::observed) == size(); }

  /// Throws DataError if lengths differ or dates are not consecutive days.
  void check_invariants() const;
};

/// Reads `date,demand_mw[,imputed]`. Rows may arrive in any order; the result is sorted and
/// every day inside the span is present. Absent days and empty cells are `missing`,
/// non-numeric cells are `invalid`.
TimeSeries load_csv(const std::filesystem::path& path);
TimeSeries read_csv(std::istream& in, const std::string& source = "<stream>");

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Writes `date,demand_mw,imputed`. Values are printed with round-trip precision.
void write_csv(const TimeSeries& series, std::ostream& out);

struct ValidationResult {
  TimeSeries series;
  std::size_t anomalies = 0;
};

inline constexpr double kDefaultMaxMw = 10000.0;

/// Re-flags observed points with value <= 0 or value > max_mw as invalid.
ValidationResult validate(TimeSeries series, double max_mw = kDefaultMaxMw);

/// Fills missing/invalid points by linear interpolation between the nearest observed
/// neighbours; points outside the first/last observation copy the nearest observed value.
TimeSeries interpolate_missing(TimeSeries series);

/// First floor(ratio·L) points train, the rest test. Each side must keep `min_points`.
std::pair<TimeSeries, TimeSeries> chronological_split(const TimeSeries& series, double ratio,
                                                      std::size_t min_points = 1);

/// Min-max scaling fitted on training data.
class Scaler {
 public:
  Scaler(double x_min, double x_max);

  static Scaler fit(const Eigen::Ref<const Eigen::VectorXd>& train);
  static Scaler fit(const TimeSeries& train) { return fit(train.values); }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double range() const { return x_max_ - x_min_; }

  double transform(double x) const { return (x - x_min_) / (x_max_ - x_min_); }
  double inverse_transform(double s) const { return s * (x_max_ - x_min_) + x_min_; }

  template <typename Derived>
  auto transform(const Eigen::MatrixBase<Derived>& x) const {
    return ((x.array() - x_min_) / (x_max_ - x_min_)).matrix();
  }

  template <typename Derived>
  auto inverse_transform(const Eigen::MatrixBase<Derived>& s) const {
    return (s.array() * (x_max_ - x_min_) + x_min_).matrix();
  }

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  double x_min_;
  double x_max_;
};

/// Supervised framing of a scaled series: row i of `inputs` is series[i, i+W),
/// `targets[i]` is series[i + W + h - 1].
struct WindowedDataset {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> inputs;
  Eigen::VectorXd targets;
  Index window = 0;
  Index horizon = 0;

  Index size() const { return targets.size(); }
};

WindowedDataset make_windows(const Eigen::Ref<const Eigen::VectorXd>& series, Index window,
                             Index horizon);

/// Deterministic daily series: yearly and weekly sines, linear trend and seeded Gaussian
/// noise, affinely mapped onto [low_mw, high_mw].
TimeSeries synthetic_series(std::uint64_t seed, std::size_t length = 2190,
                            Date start = parse_date("2016-01-01"), double low_mw = 2900.0,
                            double high_mw = 3700.0);

}  // namespace stlf

#endif  // STLF_DATA_PIPELINE_HPP
