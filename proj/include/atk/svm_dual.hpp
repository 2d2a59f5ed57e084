#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"

namespace atk {

enum class kernel_kind { linear, rbf };

constexpr const char* to_string(kernel_kind k) {
  return k == kernel_kind::linear ? "linear" : "rbf";
}

inline kernel_kind kernel_kind_from_string(std::string_view s) {
  if (s == "linear") return kernel_kind::linear;
  if (s == "rbf") return kernel_kind::rbf;
  throw parameter_error("unknown kernel kind: " + std::string(s));
}

struct kernel_spec {
  kernel_kind kind = kernel_kind::linear;
  double gamma = 1.0;  // rbf: exp(-gamma * ||a - b||^2)

  double operator()(std::span<const double> a, std::span<const double> b) const {
    if (a.size() != b.size()) throw shape_error("kernel: dimension mismatch");
    if (kind == kernel_kind::linear) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return s;
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = a[i] - b[i];
      d2 += diff * diff;
    }
    return std::exp(-gamma * d2);
  }
};

// dense n x n Gram matrix, row-major
inline std::vector<double> kernel_matrix(const dataset& data, kernel_spec kernel) {
  if (kernel.kind == kernel_kind::rbf && !(kernel.gamma > 0.0))
    throw parameter_error("kernel_matrix: rbf gamma must be positive");
  const std::size_t n = data.n;
  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    K[i * n + i] = kernel(data.row(i), data.row(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = kernel(data.row(i), data.row(j));
      K[i * n + j] = v;
      K[j * n + i] = v;
    }
  }
  return K;
}

/**
 * Euclidean projection onto { v : 0 <= v_i <= box_hi, sum v_i <= cap }.
 *
 * Clip first; if the clipped point already satisfies the sum constraint it
 * is the projection. Otherwise the projection is clip(v - tau) for the
 * shift tau > 0 making the sum equal cap; the sum is nonincreasing in tau,
 * so bisection pins tau down to machine precision in ~60 O(n) passes. The
 * feasible end of the final bracket is returned, which keeps the result's
 * sum at or below cap and makes re-projection a no-op.
 */
inline std::vector<double> projection_polytope(std::span<const double> v, double box_hi,
                                               double cap) {
  if (!(box_hi > 0.0)) throw parameter_error("projection_polytope: box_hi must be positive");
  if (!(cap > 0.0)) throw parameter_error("projection_polytope: cap must be positive");
  std::vector<double> x(v.size());
  double sum = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    x[i] = std::clamp(v[i], 0.0, box_hi);
    sum += x[i];
    hi = std::max(hi, v[i]);
  }
  if (sum <= cap) return x;
  double lo_tau = 0.0, hi_tau = hi;  // sum(lo) > cap, sum(hi) = 0 <= cap
  for (;;) {
    const double tau = 0.5 * (lo_tau + hi_tau);
    if (tau <= lo_tau || tau >= hi_tau) break;  // bracket exhausted in floating point
    sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) sum += std::clamp(v[i] - tau, 0.0, box_hi);
    (sum > cap ? lo_tau : hi_tau) = tau;
  }
  for (std::size_t i = 0; i < v.size(); ++i) x[i] = std::clamp(v[i] - hi_tau, 0.0, box_hi);
  return x;
}

struct dual_solution {
  std::vector<double> alpha;
  std::vector<std::size_t> support_indices;  // alpha_i > tol
  double rho = 0.0;                          // margin offset, clamped into [0,1]
  double dual_objective = 0.0;  // (1/2) a'Qa - sum a, the minimized QP value
  long iterations = 0;
  double residual = 0.0;  // final ||alpha - proj(alpha - s grad)||_inf
};

struct dual_convergence_error : convergence_error {
  dual_solution last_iterate;
  dual_convergence_error(std::string msg, dual_solution last)
      : convergence_error(std::move(msg)), last_iterate(std::move(last)) {}
};

namespace detail {

// y = Q x where Q_ij = labels_i labels_j K_ij
inline void qmatvec(const std::vector<double>& K, const std::vector<double>& labels,
                    const std::vector<double>& x, std::vector<double>& out) {
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = K.data() + i * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * labels[j] * x[j];
    out[i] = labels[i] * s;
  }
}

inline double qp_objective(const std::vector<double>& alpha, const std::vector<double>& qa) {
  double v = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) v += alpha[i] * (0.5 * qa[i] - 1.0);
  return v;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/**
 * Kernel dual of the average-worst-k hinge classifier,
 *
 *   min_a  (1/2) sum_ij a_i a_j y_i y_j K(x_i, x_j) - sum_i a_i
 *   s.t.   0 <= a_i <= C/n,   sum_i a_i <= C k/n,
 *
 * solved by projected gradient with spectral (inverse-curvature) steps and
 * a halving backstop. The acceptance test is the curvature form of
 * sufficient decrease, (1/2) d'Qd <= ||d||^2 / (2s) for the move d: both
 * sides are O(||d||^2), so the test stays meaningful arbitrarily close to
 * the optimum, where comparing two nearly equal objective values would
 * drown in rounding. Stops when the movement
 * ||a - proj(a - s grad)||_inf falls to tol; throws dual_convergence_error
 * (carrying the last iterate) when max_iters runs out first. max_iters = 0
 * means the default budget of 50 n.
 *
 * The offset rho is the median of y_i f(x_i) over free support vectors
 * (tol < a_i < C/n - tol). With none free the solution sits on a vertex and
 * any rho between the saturated and the zero margins is stationary; the
 * hinge term is flat there, so the top of the interval pays best: the
 * smallest non-support margin, floored by the largest support margin
 * against iterate noise. Clamped into [0,1], where the
 * decision threshold for the top-k hinge always lives. At k = n the sum
 * constraint coincides with the box corner and the problem is the usual
 * C-SVM dual.
 */
inline dual_solution dual_solve(const dataset& data, kernel_spec kernel, double C, int k,
                                double tol = 1e-6, long max_iters = 0) {
  data.validate();
  if (data.task != task_kind::classification)
    throw label_error("dual_solve: needs binary classification data");
  if (data.n < 2) throw parameter_error("dual_solve: need at least 2 samples");
  if (!(C > 0.0)) throw parameter_error("dual_solve: C must be positive");
  if (k < 1 || static_cast<std::size_t>(k) > data.n)
    throw parameter_error("dual_solve: k outside [1, n]");
  if (!(tol > 0.0)) throw parameter_error("dual_solve: tol must be positive");
  if (max_iters < 0) throw parameter_error("dual_solve: max_iters must be nonnegative");

  const std::size_t n = data.n;
  if (max_iters == 0) max_iters = 50 * static_cast<long>(n);
  const double box = C / static_cast<double>(n);
  const double cap = C * static_cast<double>(k) / static_cast<double>(n);
  const std::vector<double> K = kernel_matrix(data, kernel);
  const std::vector<double>& y = data.targets;

  dual_solution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> qa(n, 0.0), grad(n), shifted(n), trial(n), qtrial(n);

  // 1 / ||Q||_inf is a safe first step; backtracking takes it from there
  double row_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(K[i * n + j]);
    row_norm = std::max(row_norm, s);
  }
  double step = row_norm > 0.0 ? 1.0 / row_norm : 1.0;
  const double step_cap = step * 1e6;

  long t = 0;
  for (t = 1; t <= max_iters; ++t) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = qa[i] - 1.0;
    double curv = 0.0, dist2 = 0.0;
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) shifted[i] = sol.alpha[i] - step * grad[i];
      trial = projection_polytope(shifted, box, cap);
      detail::qmatvec(K, y, trial, qtrial);
      // Sufficient decrease in curvature form: the move d = trial - alpha
      // lowers the objective by at least ||d||^2/(2s) exactly when
      // (1/2) d'Qd <= ||d||^2/(2s). Comparing these O(||d||^2) terms avoids
      // the cancellation that an objective-difference test hits near the
      // optimum. Any step below 1/lambda_max passes, so halving terminates.
      curv = 0.0;
      dist2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = trial[i] - sol.alpha[i];
        curv += diff * (qtrial[i] - qa[i]);
        dist2 += diff * diff;
      }
      if (0.5 * curv <= dist2 / (2.0 * step) * (1.0 + 1e-12)) break;
      step *= 0.5;
      if (step < 1e-18)
        throw dual_convergence_error("dual_solve: line search step underflow", sol);
    }
    double movement = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      movement = std::max(movement, std::abs(trial[i] - sol.alpha[i]));
    sol.alpha.swap(trial);
    qa.swap(qtrial);
    sol.residual = movement;
    if (movement <= tol) break;
    // spectral step for the next round: the inverse curvature along the
    // accepted move adapts to the local eigenvalue scale far faster than
    // fixed growth, and the acceptance test above keeps it safe
    step = curv > 0.0 ? std::min(dist2 / curv, step_cap) : step_cap;
  }
  sol.iterations = std::min(t, max_iters);
  sol.dual_objective = detail::qp_objective(sol.alpha, qa);
  if (sol.residual > tol) {
    sol.support_indices.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (sol.alpha[i] > tol) sol.support_indices.push_back(i);
    throw dual_convergence_error(
        "dual_solve: no convergence after " + std::to_string(max_iters) +
            " iterations (residual " + std::to_string(sol.residual) + ")",
        sol);
  }

  for (std::size_t i = 0; i < n; ++i)
    if (sol.alpha[i] > tol) sol.support_indices.push_back(i);

  // qa_i = y_i sum_j K_ij y_j a_j is exactly the functional margin y_i f(x_i)
  std::vector<double> free_margins;
  double support_max = 0.0, off_min = 0.0;
  bool has_support = false, has_off = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double yf = qa[i];
    if (sol.alpha[i] > tol) {
      if (!has_support || yf > support_max) support_max = yf;
      has_support = true;
      if (sol.alpha[i] < box - tol) free_margins.push_back(yf);
    } else {
      if (!has_off || yf < off_min) off_min = yf;
      has_off = true;
    }
  }
  double rho = 0.0;
  if (!free_margins.empty())
    rho = detail::median(std::move(free_margins));
  else if (has_support)
    rho = has_off ? std::max(off_min, support_max) : support_max;
  sol.rho = std::clamp(rho, 0.0, 1.0);
  return sol;
}

inline double decision_function(const dual_solution& sol, const dataset& data,
                                kernel_spec kernel, std::span<const double> query) {
  if (sol.alpha.size() != data.n)
    throw shape_error("decision_function: alpha length does not match the dataset");
  if (query.size() != data.d) throw shape_error("decision_function: query dimension mismatch");
  double f = 0.0;
  for (std::size_t j : sol.support_indices)
    f += sol.alpha[j] * data.targets[j] * kernel(data.row(j), query);
  return f;
}

// Hinge objective of the kernel expansion at the recovered (f, rho):
//   (1/n) sum_i [rho - y_i f(x_i)]_+ - (k/n) rho + ||f||^2 / (2C)
inline double primal_objective(const dual_solution& sol, const dataset& data,
                               kernel_spec kernel, double C, int k) {
  if (sol.alpha.size() != data.n)
    throw shape_error("primal_objective: alpha length does not match the dataset");
  const std::size_t n = data.n;
  const std::vector<double> K = kernel_matrix(data, kernel);
  std::vector<double> qa(n);
  detail::qmatvec(K, data.targets, sol.alpha, qa);
  double hinge = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = sol.rho - qa[i];  // qa_i = y_i f(x_i)
    if (v > 0.0) hinge += v;
  }
  double norm2 = 0.0;  // ||f||^2 = a' Q a
  for (std::size_t i = 0; i < n; ++i) norm2 += sol.alpha[i] * qa[i];
  const double dn = static_cast<double>(n);
  return hinge / dn - (static_cast<double>(k) / dn) * sol.rho + norm2 / (2.0 * C);
}

// Lower bound on primal_objective implied by any feasible alpha:
//   -(QP objective)/C - k/n.
inline double dual_bound(const dual_solution& sol, double C, int k, std::size_t n) {
  return -sol.dual_objective / C - static_cast<double>(k) / static_cast<double>(n);
}

struct nu_property {
  double support_fraction = 0.0;       // |{alpha_i > tol}| / n
  double margin_error_fraction = 0.0;  // |{y_i f(x_i) < rho - tol}| / n
};

// With C = 1 and K(x,x) <= 1 the solution behaves like a nu-SVM with
// nu = k/n: margin_error_fraction <= k/n <= support_fraction.
inline nu_property nu_property_check(const dual_solution& sol, const dataset& data,
                                     kernel_spec kernel, double tol = 1e-6) {
  if (sol.alpha.size() != data.n)
    throw shape_error("nu_property_check: alpha length does not match the dataset");
  const std::size_t n = data.n;
  const std::vector<double> K = kernel_matrix(data, kernel);
  std::vector<double> qa(n);
  detail::qmatvec(K, data.targets, sol.alpha, qa);
  nu_property out;
  std::size_t sv = 0, err = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] > tol) ++sv;
    if (qa[i] < sol.rho - tol) ++err;
  }
  out.support_fraction = static_cast<double>(sv) / static_cast<double>(n);
  out.margin_error_fraction = static_cast<double>(err) / static_cast<double>(n);
  return out;
}

}  // namespace atk
