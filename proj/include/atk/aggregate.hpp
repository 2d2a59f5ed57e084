#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace atk {

enum class aggregate_kind { average, maximum, topk, atk, abk };

// k is ignored by average/maximum
struct aggregate_spec {
  aggregate_kind kind = aggregate_kind::atk;
  int k = 1;
};

inline aggregate_kind aggregate_kind_from_string(std::string_view s) {
  if (s == "average") return aggregate_kind::average;
  if (s == "maximum") return aggregate_kind::maximum;
  if (s == "topk") return aggregate_kind::topk;
  if (s == "atk") return aggregate_kind::atk;
  if (s == "abk") return aggregate_kind::abk;
  throw parameter_error("unknown aggregate kind: " + std::string(s));
}

namespace detail {

inline void check_losses(std::span<const double> losses, int k, bool need_k) {
  if (losses.empty()) throw parameter_error("aggregate: empty loss vector");
  if (need_k && (k < 1 || static_cast<std::size_t>(k) > losses.size()))
    throw parameter_error("aggregate: k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(losses.size()) + "]");
  for (double v : losses)
    if (!(v >= 0.0)) throw domain_error("aggregate: loss entries must be nonnegative");
}

inline std::vector<double> sorted_desc(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<double>());
  return s;
}

}  // namespace detail

// Sum of the k largest entries, by full descending sort. The n here is small
// (per-batch individual losses), so no partial-selection cleverness.
inline double top_k_sum_sorted(std::span<const double> losses, int k) {
  detail::check_losses(losses, k, true);
  const std::vector<double> s = detail::sorted_desc(losses);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += s[i];
  return sum;
}

struct variational_topk {
  double value = 0.0;        // k*lambda_star + sum_i [losses_i - lambda_star]_+
  double lambda_star = 0.0;  // k-th largest entry, a minimizer of the relaxation
};

// Same quantity through the threshold form
//   sum of k largest = min_{lambda >= 0} { k*lambda + sum_i [x_i - lambda]_+ }
// whose minimum is attained at lambda = x_[k].
inline variational_topk top_k_sum_variational(std::span<const double> losses, int k) {
  detail::check_losses(losses, k, true);
  const std::vector<double> s = detail::sorted_desc(losses);
  const double lambda = s[k - 1];
  double value = static_cast<double>(k) * lambda;
  for (double v : losses)
    if (v > lambda) value += v - lambda;
  return {value, lambda};
}

inline double aggregate_value(std::span<const double> losses, aggregate_spec spec) {
  const bool need_k = spec.kind == aggregate_kind::topk || spec.kind == aggregate_kind::atk ||
                      spec.kind == aggregate_kind::abk;
  detail::check_losses(losses, spec.k, need_k);
  const auto n = losses.size();
  switch (spec.kind) {
    case aggregate_kind::average:
      return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
    case aggregate_kind::maximum:
      return *std::max_element(losses.begin(), losses.end());
    case aggregate_kind::topk:
      // the k-th largest individual loss
      return detail::sorted_desc(losses)[spec.k - 1];
    case aggregate_kind::atk:
      return top_k_sum_sorted(losses, spec.k) / static_cast<double>(spec.k);
    case aggregate_kind::abk: {
      // average of the k smallest = (total - sum of the n-k largest) / k
      const double total = std::accumulate(losses.begin(), losses.end(), 0.0);
      if (static_cast<std::size_t>(spec.k) == n) return total / static_cast<double>(n);
      const double head = top_k_sum_sorted(losses, static_cast<int>(n) - spec.k);
      return (total - head) / static_cast<double>(spec.k);
    }
  }
  throw parameter_error("aggregate: unknown kind");
}

// Nested hinge collapse: for a, b >= 0,  [[a - ell]_+ - b]_+ == [a - b - ell]_+ .
// Returns the flattened right-hand side.
inline double hinge_compose(double a, double b, double ell) {
  if (!(a >= 0.0) || !(b >= 0.0))
    throw domain_error("hinge_compose: a and b must be nonnegative");
  const double v = a - b - ell;
  return v > 0.0 ? v : 0.0;
}

}  // namespace atk
