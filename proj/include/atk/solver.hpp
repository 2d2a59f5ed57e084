#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "losses.hpp"
#include "rng.hpp"

namespace atk {

// Linear model plus the loss threshold that turns an average into an
// average-over-the-worst-k. No bias term: append a constant feature if an
// intercept is wanted.
struct model_state {
  std::vector<double> w;
  double lambda = 0.0;
  double C = 1.0;  // regularization: ||w||^2 / (2C) is added to the objective
};

struct train_config {
  int k = 1;
  long iterations = 1000;
  double eta0 = 0.1;        // step size eta0 / sqrt(t), t counted from 1
  std::uint64_t seed = 0;   // sample-order stream
  long record_every = 0;    // 0: record the objective only at start and end
};

struct trace_point {
  long iteration;
  double objective;
};

struct train_result {
  model_state state;
  std::vector<trace_point> trace;
};

namespace detail {

inline double predict(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
  return s;
}

inline void check_loss_task(individual_loss loss, task_kind task) {
  const bool margin = loss.form() == loss_form::margin;
  if (margin && task != task_kind::classification)
    throw parameter_error(std::string(to_string(loss.kind)) +
                          " loss applies to classification targets only");
  if (!margin && task != task_kind::regression)
    throw parameter_error(std::string(to_string(loss.kind)) +
                          " loss applies to regression targets only");
}

}  // namespace detail

/**
 * Full-batch objective
 *
 *   (1/n) sum_i [ell_i(w) - lambda]_+  +  (k/n) lambda  +  ||w||^2 / (2C)
 *
 * which for lambda at the k-th largest loss equals the average of the k
 * largest individual losses plus the ridge term. Jointly convex in
 * (w, lambda).
 */
inline double objective_value(const model_state& state, const dataset& data,
                              individual_loss loss, int k) {
  if (data.n == 0) throw parameter_error("objective_value: empty dataset");
  if (state.w.size() != data.d)
    throw shape_error("objective_value: weight dimension " + std::to_string(state.w.size()) +
                      " vs feature dimension " + std::to_string(data.d));
  if (k < 1 || static_cast<std::size_t>(k) > data.n)
    throw parameter_error("objective_value: k outside [1, n]");
  if (state.lambda < 0.0) throw parameter_error("objective_value: lambda must be nonnegative");
  detail::check_loss_task(loss, data.task);
  const double n = static_cast<double>(data.n);
  double hinge_sum = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const double ell = loss.value(detail::predict(state.w, data.row(i)), data.targets[i]);
    if (ell > state.lambda) hinge_sum += ell - state.lambda;
  }
  double reg = 0.0;
  for (double v : state.w) reg += v * v;
  return hinge_sum / n + (static_cast<double>(k) / n) * state.lambda +
         reg / (2.0 * state.C);
}

namespace detail {

// One stochastic update on sample (x, y). The indicator is evaluated at the
// incoming state, both updates use it, and lambda is clipped at zero.
inline void sgd_step_inplace(model_state& state, std::span<const double> x, double y,
                             individual_loss loss, int k, std::size_t n, double eta) {
  const double f = predict(state.w, x);
  const double ell = loss.value(f, y);
  const bool active = ell > state.lambda;
  const double inv_c = 1.0 / state.C;
  if (active) {
    const double s = loss.subgradient_scale(f, y);
    for (std::size_t j = 0; j < x.size(); ++j)
      state.w[j] -= eta * (s * x[j] + state.w[j] * inv_c);
  } else if (inv_c != 0.0) {
    for (double& wj : state.w) wj -= eta * wj * inv_c;
  }
  const double kn = static_cast<double>(k) / static_cast<double>(n);
  state.lambda -= eta * (kn - (active ? 1.0 : 0.0));
  if (state.lambda < 0.0) state.lambda = 0.0;
}

}  // namespace detail

inline model_state sgd_step(model_state state, std::span<const double> x, double y,
                            individual_loss loss, int k, std::size_t n, double eta) {
  if (state.w.size() != x.size())
    throw shape_error("sgd_step: weight/feature dimension mismatch");
  if (n == 0 || k < 1 || static_cast<std::size_t>(k) > n)
    throw parameter_error("sgd_step: k outside [1, n]");
  if (eta < 0.0) throw parameter_error("sgd_step: negative step size");
  detail::sgd_step_inplace(state, x, y, loss, k, n, eta);
  return state;
}

/**
 * Stochastic subgradient training from w = 0, lambda = 0: draw a sample
 * uniformly with replacement, take one sgd_step with eta0/sqrt(t), repeat.
 * Returns the final iterate and an objective trace (always the initial and
 * final objective; every record_every-th iteration in between if > 0).
 */
inline train_result train(const dataset& data, individual_loss loss, train_config cfg,
                          double C) {
  if (data.n == 0) throw parameter_error("train: empty dataset");
  data.validate();
  detail::check_loss_task(loss, data.task);
  if (cfg.k < 1 || static_cast<std::size_t>(cfg.k) > data.n)
    throw parameter_error("train: k = " + std::to_string(cfg.k) + " outside [1, " +
                          std::to_string(data.n) + "]");
  if (!(C > 0.0)) throw parameter_error("train: C must be positive");
  if (cfg.iterations < 1) throw parameter_error("train: iterations must be positive");
  if (!(cfg.eta0 > 0.0)) throw parameter_error("train: eta0 must be positive");
  if (cfg.record_every < 0) throw parameter_error("train: record_every must be nonnegative");

  train_result res;
  res.state.w.assign(data.d, 0.0);
  res.state.lambda = 0.0;
  res.state.C = C;
  res.trace.push_back({0, objective_value(res.state, data, loss, cfg.k)});

  rng g(stream_seed(cfg.seed, "sample-order"));
  for (long t = 1; t <= cfg.iterations; ++t) {
    const std::size_t i = static_cast<std::size_t>(g.next_below(data.n));
    const double eta = cfg.eta0 / std::sqrt(static_cast<double>(t));
    detail::sgd_step_inplace(res.state, data.row(i), data.targets[i], loss, cfg.k, data.n,
                             eta);
    if (!std::isfinite(res.state.lambda))
      throw convergence_error("train: lambda became non-finite at iteration " +
                              std::to_string(t));
    if ((t & 0xFF) == 0 || t == cfg.iterations) {
      for (double wj : res.state.w)
        if (!std::isfinite(wj))
          throw convergence_error("train: weights became non-finite at iteration " +
                                  std::to_string(t));
    }
    if (cfg.record_every > 0 && t % cfg.record_every == 0 && t != cfg.iterations)
      res.trace.push_back({t, objective_value(res.state, data, loss, cfg.k)});
  }
  res.trace.push_back({cfg.iterations, objective_value(res.state, data, loss, cfg.k)});
  return res;
}

// Smallest k whose average-top-k risk bound can sit above a target
// misclassification risk: floor(n * risk) + 1, clamped into [1, n].
inline int calibration_min_k(double estimated_risk, std::size_t n) {
  if (!(estimated_risk >= 0.0) || !(estimated_risk <= 1.0))
    throw domain_error("calibration_min_k: risk must lie in [0,1]");
  if (n == 0) throw parameter_error("calibration_min_k: n must be positive");
  const double scaled = std::floor(estimated_risk * static_cast<double>(n)) + 1.0;
  const double clamped = std::min(scaled, static_cast<double>(n));
  return clamped < 1.0 ? 1 : static_cast<int>(clamped);
}

}  // namespace atk
