#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"

namespace atk {

// sign with sign(0) = +1, used to turn real scores into labels
inline double predicted_label(double score) { return score >= 0.0 ? 1.0 : -1.0; }

namespace detail {

inline void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw shape_error("metric: length mismatch");
  if (a.empty()) throw parameter_error("metric: empty input");
}

}  // namespace detail

// fraction of label disagreements; inputs are +-1 labels
inline double misclassification_rate(std::span<const double> predicted,
                                     std::span<const double> actual) {
  detail::check_pair(predicted, actual);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < actual.size(); ++i)
    if (predicted[i] != actual[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(actual.size());
}

// sqrt(sensitivity * specificity); needs both classes in `actual`
inline double g_mean(std::span<const double> predicted, std::span<const double> actual) {
  detail::check_pair(predicted, actual);
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 1.0)
      (predicted[i] == 1.0 ? tp : fn)++;
    else
      (predicted[i] == -1.0 ? tn : fp)++;
  }
  if (tp + fn == 0 || tn + fp == 0)
    throw metric_error("g_mean: needs both classes present");
  const double sens = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double spec = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return std::sqrt(sens * spec);
}

inline double rmse(std::span<const double> predicted, std::span<const double> actual) {
  detail::check_pair(predicted, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = predicted[i] - actual[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(actual.size()));
}

inline double mae(std::span<const double> predicted, std::span<const double> actual) {
  detail::check_pair(predicted, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(predicted[i] - actual[i]);
  return s / static_cast<double>(actual.size());
}

}  // namespace atk
