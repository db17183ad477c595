#include "stlf/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "stlf/errors.hpp"

namespace stlf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Date parse_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  const bool shaped = text.size() == 10 && text[4] == '-' && text[7] == '-';
  if (!shaped || !parse_number(text.substr(0, 4), y) || !parse_number(text.substr(5, 2), m) ||
      !parse_number(text.substr(8, 2), d)) {
    throw DataError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
  return Date(ymd);
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd(d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::size_t TimeSeries::count(PointFlag flag) const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), flag));
}

std::size_t TimeSeries::imputed_count() const {
  return static_cast<std::size_t>(std::count(imputed.begin(), imputed.end(), true));
}

void TimeSeries::check_invariants() const {
  if (static_cast<std::size_t>(values.size()) != dates.size() || flags.size() != dates.size() ||
      imputed.size() != dates.size()) {
    throw DataError("time series field lengths disagree");
  }
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (dates[i] - dates[i - 1] != std::chrono::days{1}) {
      throw DataError("time series dates are not consecutive at " + format_date(dates[i]));
    }
  }
}

TimeSeries read_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  std::string_view header = line;
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  const auto columns = split_fields(header);
  const bool has_imputed = columns.size() == 3 && columns[2] == "imputed";
  if (columns.size() < 2 || columns[0] != "date" || columns[1] != "demand_mw" ||
      (columns.size() == 3 && !has_imputed) || columns.size() > 3) {
    throw DataError(source + ":1: expected header 'date,demand_mw'");
  }

  struct Row {
    double value;
    PointFlag flag;
    bool imputed;
  };
  std::map<Date, Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != columns.size()) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(columns.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    Date date;
    try {
      date = parse_date(fields[0]);
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Row row{kNaN, PointFlag::missing, false};
    if (!fields[1].empty()) {
      double v = 0.0;
      if (parse_number(fields[1], v) && std::isfinite(v)) {
        row = {v, PointFlag::observed, false};
      } else {
        row.flag = PointFlag::invalid;
      }
    }
    if (has_imputed) row.imputed = fields[2] == "1";
    if (!rows.emplace(date, row).second) {
      throw DataError(source + ":" + std::to_string(line_no) + ": duplicate date " +
                      format_date(date));
    }
  }
  if (rows.empty()) throw DataError(source + ": no data rows");

  const Date first = rows.begin()->first;
  const Date last = rows.rbegin()->first;
  const auto length = static_cast<std::size_t>((last - first).count()) + 1;
  TimeSeries s;
  s.dates.reserve(length);
  s.values = Eigen::VectorXd::Constant(static_cast<Index>(length), kNaN);
  s.flags.assign(length, PointFlag::missing);
  s.imputed.assign(length, false);
  for (std::size_t i = 0; i < length; ++i) s.dates.push_back(first + std::chrono::days{static_cast<int>(i)});
  for (const auto& [date, row] : rows) {
    const auto i = static_cast<std::size_t>((date - first).count());
    s.values[static_cast<Index>(i)] = row.value;
    s.flags[i] = row.flag;
    s.imputed[i] = row.imputed;
  }
  return s;
}

TimeSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  return read_csv(in, path.string());
}

void write_csv(const TimeSeries& series, std::ostream& out) {
  out << "date,demand_mw,imputed\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_date(series.dates[i]) << ',';
    if (series.flags[i] == PointFlag::observed) out << format_double(series.values[static_cast<Index>(i)]);
    out << ',' << (series.imputed[i] ? 1 : 0) << '\n';
  }
}

ValidationResult validate(TimeSeries series, double max_mw) {
  if (!(max_mw > 0.0)) throw ConfigError("max_mw must be positive");
  ValidationResult r{std::move(series), 0};
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    if (r.series.flags[i] != PointFlag::observed) continue;
    const double v = r.series.values[static_cast<Index>(i)];
    if (v <= 0.0 || v > max_mw) {
      r.series.flags[i] = PointFlag::invalid;
      ++r.anomalies;
    }
  }
  return r;
}

TimeSeries interpolate_missing(TimeSeries s) {
  std::vector<Index> known;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.flags[i] == PointFlag::observed) known.push_back(static_cast<Index>(i));
  }
  if (known.size() < 2) {
    throw DataError("interpolation needs at least 2 observed points, found " +
                    std::to_string(known.size()));
  }
  auto fill = [&](Index i, double v) {
    s.values[i] = v;
    s.flags[static_cast<std::size_t>(i)] = PointFlag::observed;
    s.imputed[static_cast<std::size_t>(i)] = true;
  };
  for (Index i = 0; i < known.front(); ++i) fill(i, s.values[known.front()]);
  for (Index i = known.back() + 1; i < static_cast<Index>(s.size()); ++i) fill(i, s.values[known.back()]);
  for (std::size_t k = 0; k + 1 < known.size(); ++k) {
    const Index x1 = known[k];
    const Index x2 = known[k + 1];
    const double y1 = s.values[x1];
    const double y2 = s.values[x2];
    for (Index x = x1 + 1; x < x2; ++x) {
      fill(x, y1 + static_cast<double>(x - x1) * (y2 - y1) / static_cast<double>(x2 - x1));
    }
  }
  return s;
}

namespace {

TimeSeries slice(const TimeSeries& s, std::size_t begin, std::size_t end) {
  TimeSeries out;
  out.dates.assign(s.dates.begin() + static_cast<std::ptrdiff_t>(begin),
                   s.dates.begin() + static_cast<std::ptrdiff_t>(end));
  out.values = s.values.segment(static_cast<Index>(begin), static_cast<Index>(end - begin));
  out.flags.assign(s.flags.begin() + static_cast<std::ptrdiff_t>(begin),
                   s.flags.begin() + static_cast<std::ptrdiff_t>(end));
  out.imputed.assign(s.imputed.begin() + static_cast<std::ptrdiff_t>(begin),
                     s.imputed.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

}  // namespace

std::pair<TimeSeries, TimeSeries> chronological_split(const TimeSeries& series, double ratio,
                                                      std::size_t min_points) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0, 1)");
  if (!series.fully_observed()) throw DataError("split requires a fully imputed series");
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(series.size())));
  const std::size_t n_test = series.size() - n_train;
  if (n_train < min_points || n_test < min_points) {
    throw DataError("split of " + std::to_string(series.size()) + " points gives train " +
                    std::to_string(n_train) + " / test " + std::to_string(n_test) +
                    "; each side needs at least " + std::to_string(min_points));
  }
  return {slice(series, 0, n_train), slice(series, n_train, series.size())};
}

Scaler::Scaler(double x_min, double x_max) : x_min_(x_min), x_max_(x_max) {
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw DataError("scaler needs x_max > x_min, got [" + format_double(x_min) + ", " +
                    format_double(x_max) + "]");
  }
}

Scaler Scaler::fit(const Eigen::Ref<const Eigen::VectorXd>& train) {
  if (train.size() == 0) throw DataError("cannot fit scaler on an empty series");
  if (!train.allFinite()) throw DataError("cannot fit scaler on non-finite values");
  return Scaler(train.minCoeff(), train.maxCoeff());
}

WindowedDataset make_windows(const Eigen::Ref<const Eigen::VectorXd>& series, Index window,
                             Index horizon) {
  if (window < 1 || horizon < 1) throw ConfigError("window and horizon must be >= 1");
  const Index length = series.size();
  if (length < window + horizon) {
    throw DataError("series of length " + std::to_string(length) + " too short for window " +
                    std::to_string(window) + " + horizon " + std::to_string(horizon) +
                    "; need at least " + std::to_string(window + horizon));
  }
  const Index n = length - window - horizon + 1;
  WindowedDataset d;
  d.window = window;
  d.horizon = horizon;
  d.inputs.resize(n, window);
  d.targets.resize(n);
  for (Index i = 0; i < n; ++i) {
    d.inputs.row(i) = series.segment(i, window).transpose();
    d.targets[i] = series[i + window + horizon - 1];
  }
  return d;
}

TimeSeries synthetic_series(std::uint64_t seed, std::size_t length, Date start, double low_mw,
                            double high_mw) {
  constexpr double kTwoPi = 6.283185307179586;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.08);
  Eigen::VectorXd raw(static_cast<Index>(length));
  for (std::size_t t = 0; t < length; ++t) {
    const double x = static_cast<double>(t);
    raw[static_cast<Index>(t)] = std::sin(kTwoPi * x / 365.0) + 0.35 * std::sin(kTwoPi * x / 7.0) +
                                 0.8 * x / static_cast<double>(length) + noise(rng);
  }
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  TimeSeries s;
  for (std::size_t t = 0; t < length; ++t) s.dates.push_back(start + std::chrono::days{static_cast<int>(t)});
  s.values = ((raw.array() - lo) / (hi - lo) * (high_mw - low_mw) + low_mw).matrix();
  s.flags.assign(length, PointFlag::observed);
  s.imputed.assign(length, false);
  return s;
}

}  // namespace stlf
