#pragma once

#include <algorithm>
#include <vector>

#include "lan/errors.hpp"

namespace lan {

// Quantile with linear interpolation between order statistics (the same
// convention as numpy's default).
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError("quantile: empty input");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  double h = (static_cast<double>(values.size()) - 1.0) * p;
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo >= values.size() - 1) return values.back();
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

struct AggregateRow {
  long timestep = 0;
  double median = 0, q1 = 0, q3 = 0;
};

// Median and quartile curves across seeds. Every series must be evaluated at
// the same timesteps.
inline std::vector<AggregateRow> aggregate_series(const std::vector<std::vector<std::pair<long, double>>>& series) {
  if (series.empty()) throw ContractError("aggregate: no series");
  std::size_t points = series[0].size();
  for (const auto& s : series)
    if (s.size() != points) throw ContractError("aggregate: series have different lengths");
  std::vector<AggregateRow> out;
  for (std::size_t i = 0; i < points; ++i) {
    long t = series[0][i].first;
    std::vector<double> values;
    for (const auto& s : series) {
      if (s[i].first != t) throw ContractError("aggregate: misaligned eval timesteps");
      values.push_back(s[i].second);
    }
    AggregateRow row;
    row.timestep = t;
    row.median = quantile(values, 0.5);
    row.q1 = quantile(values, 0.25);
    row.q3 = quantile(values, 0.75);
    out.push_back(row);
  }
  return out;
}

}  // namespace lan
