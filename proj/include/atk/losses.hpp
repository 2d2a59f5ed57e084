#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace atk {

enum class loss_kind { logistic, hinge, squared, absolute };
enum class loss_form { margin, residual };

constexpr loss_form form_of(loss_kind k) {
  return (k == loss_kind::logistic || k == loss_kind::hinge) ? loss_form::margin
                                                             : loss_form::residual;
}

constexpr const char* to_string(loss_kind k) {
  switch (k) {
    case loss_kind::logistic: return "logistic";
    case loss_kind::hinge: return "hinge";
    case loss_kind::squared: return "squared";
    case loss_kind::absolute: return "absolute";
  }
  return "?";
}

inline loss_kind loss_kind_from_string(std::string_view s) {
  if (s == "logistic") return loss_kind::logistic;
  if (s == "hinge") return loss_kind::hinge;
  if (s == "squared") return loss_kind::squared;
  if (s == "absolute") return loss_kind::absolute;
  throw parameter_error("unknown loss kind: " + std::string(s));
}

namespace detail {

// log2(1 + exp(-t)) without overflow on either tail
inline double logistic_base2(double t) {
  if (t >= 0.0) return std::log1p(std::exp(-t)) / std::numbers::ln2;
  return (-t + std::log1p(std::exp(t))) / std::numbers::ln2;
}

// d/dt log2(1 + exp(-t)) = -1 / ((1 + exp(t)) ln 2)
inline double logistic_base2_deriv(double t) {
  return -1.0 / ((1.0 + std::exp(t)) * std::numbers::ln2);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/**
 * One per-sample loss.
 *
 * Margin-form losses (logistic, hinge) act on t = y * f(x) and require
 * y in {-1,+1}; residual-form losses (squared, absolute) act on the signed
 * residual e = y - f(x). The logistic loss uses base-2 logs so that a zero
 * score costs exactly 1, putting it on the same scale as the hinge.
 *
 * All four losses are convex in their scalar argument, and their gradient
 * with respect to linear model weights is always scale * x, which is what
 * subgradient_scale() returns. At the hinge kink (argument exactly 0) and
 * at a zero residual of the absolute loss, the subgradient 0 is chosen.
 */
struct individual_loss {
  loss_kind kind = loss_kind::hinge;

  loss_form form() const { return form_of(kind); }

  // loss as a function of the margin t (margin form) or the signed
  // residual e = y - f (residual form)
  double scalar_value(double t) const {
    switch (kind) {
      case loss_kind::logistic: return detail::logistic_base2(t);
      case loss_kind::hinge: return t < 1.0 ? 1.0 - t : 0.0;
      case loss_kind::squared: return t * t;
      case loss_kind::absolute: return std::abs(t);
    }
    return 0.0;
  }

  // one element of the subdifferential of scalar_value at t
  double scalar_subgradient(double t) const {
    switch (kind) {
      case loss_kind::logistic: return detail::logistic_base2_deriv(t);
      case loss_kind::hinge: return t < 1.0 ? -1.0 : 0.0;
      case loss_kind::squared: return 2.0 * t;
      case loss_kind::absolute: return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
    }
    return 0.0;
  }

  double value(double prediction, double target) const {
    if (form() == loss_form::margin) {
      require_binary(target);
      return scalar_value(target * prediction);
    }
    return scalar_value(target - prediction);
  }

  // s such that d ell(f(x;w), y) / dw = s * x for f(x;w) = w.x
  double subgradient_scale(double prediction, double target) const {
    if (form() == loss_form::margin) {
      require_binary(target);
      return scalar_subgradient(target * prediction) * target;
    }
    return -scalar_subgradient(target - prediction);
  }

  std::vector<double> subgradient(std::span<const double> x, std::span<const double> w,
                                  double target) const {
    if (x.size() != w.size())
      throw shape_error("subgradient: feature/weight length mismatch (" +
                        std::to_string(x.size()) + " vs " + std::to_string(w.size()) + ")");
    const double s = subgradient_scale(detail::dot(w, x), target);
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = s * x[j];
    return g;
  }

 private:
  static void require_binary(double target) {
    if (target != 1.0 && target != -1.0)
      throw label_error("margin-form loss requires targets in {-1,+1}, got " +
                        std::to_string(target));
  }
};

}  // namespace atk
