#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "solver.hpp"

namespace atk {

// round(10^(j * log10(n) / (points-1))), j = 0..points-1, deduplicated;
// always starts at 1 and ends at n
inline std::vector<int> log_k_grid(std::size_t n, int points = 15) {
  if (n == 0) throw parameter_error("log_k_grid: n must be positive");
  if (points < 2) throw parameter_error("log_k_grid: need at least 2 grid points");
  std::vector<int> grid;
  const double span = std::log10(static_cast<double>(n));
  for (int j = 0; j < points; ++j) {
    const double e = span * static_cast<double>(j) / static_cast<double>(points - 1);
    int k = static_cast<int>(std::llround(std::pow(10.0, e)));
    k = std::clamp(k, 1, static_cast<int>(n));
    if (grid.empty() || k != grid.back()) grid.push_back(k);
  }
  if (grid.back() != static_cast<int>(n)) grid.push_back(static_cast<int>(n));
  return grid;
}

// 10^lo_exp .. 10^hi_exp at integer exponents
inline std::vector<double> log_c_grid(int lo_exp = -5, int hi_exp = 5) {
  if (lo_exp > hi_exp) throw parameter_error("log_c_grid: empty exponent range");
  std::vector<double> grid;
  for (int e = lo_exp; e <= hi_exp; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

namespace detail {

inline double score_fold(const model_state& state, const dataset& data,
                         std::span<const std::size_t> idx) {
  std::vector<double> pred, actual;
  pred.reserve(idx.size());
  actual.reserve(idx.size());
  for (std::size_t i : idx) {
    const double f = predict(state.w, data.row(i));
    pred.push_back(data.task == task_kind::classification ? predicted_label(f) : f);
    actual.push_back(data.targets[i]);
  }
  return data.task == task_kind::classification ? misclassification_rate(pred, actual)
                                                : rmse(pred, actual);
}

struct moments {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

inline moments mean_std(std::span<const double> v) {
  moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

// Run `count` independent jobs on up to `jobs` threads. Each job writes only
// its own slot, so results are identical for any thread count. The first
// exception a job throws is rethrown on the calling thread after the pool
// drains.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(jobs, static_cast<int>(count));
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

struct cell_result {
  int repeat = 0;
  int k = 0;
  double C = 0.0;
  double val_score = 0.0;
};

struct repeat_selection {
  int repeat = 0;
  int k = 0;
  double C = 0.0;
  double val_score = 0.0;
  double test_score = 0.0;
};

struct grid_search_result {
  int best_k = 0;       // most frequently selected k across repeats
  double best_C = 0.0;  // its companion C
  double val_score = 0.0;  // mean validation score of the per-repeat selections
  std::vector<double> test_scores;  // one per repeat, at that repeat's selection
  double mean_test = 0.0;
  double std_test = 0.0;
  std::vector<repeat_selection> selections;
  std::vector<cell_result> cells;  // full table, ordered repeat-major
};

/**
 * Validation-driven model selection over a (k, C) grid.
 *
 * Each repeat r draws its own train/validation/test split from seed + r;
 * every (k, C) cell trains cold on the training fold with an RNG stream
 * derived from (seed, r, cell), scores on validation (misclassification for
 * classification, RMSE for regression), and the winner, with ties broken
 * toward smaller k then smaller C, is retrained and scored on test. k is
 * counted against the training fold, so it must stay within its size.
 * Cells are independent; `jobs` threads never change any number. A cell
 * whose training diverges scores +infinity and is never selected; only a
 * repeat with no surviving cell at all raises the divergence.
 */
inline grid_search_result grid_search(const dataset& data, individual_loss loss,
                                      std::span<const int> k_grid,
                                      std::span<const double> c_grid, int repeats,
                                      std::uint64_t seed, train_config base_cfg,
                                      int jobs = 1) {
  data.validate();
  if (repeats < 1) throw parameter_error("grid_search: repeats must be positive");
  if (k_grid.empty() || c_grid.empty()) throw parameter_error("grid_search: empty grid");
  const std::size_t n_train = (data.n + 1) / 2;
  for (int k : k_grid)
    if (k < 1 || static_cast<std::size_t>(k) > n_train)
      throw parameter_error("grid_search: k = " + std::to_string(k) +
                            " outside [1, " + std::to_string(n_train) +
                            "] (the training fold size)");
  for (double c : c_grid)
    if (!(c > 0.0)) throw parameter_error("grid_search: C grid entries must be positive");

  grid_search_result res;
  const std::size_t cells_per_repeat = k_grid.size() * c_grid.size();
  res.cells.resize(static_cast<std::size_t>(repeats) * cells_per_repeat);
  res.selections.resize(repeats);

  std::vector<split_plan> splits(repeats);
  std::vector<dataset> train_folds(repeats);
  for (int r = 0; r < repeats; ++r) {
    splits[r] = make_split(data.n, seed + static_cast<std::uint64_t>(r));
    train_folds[r] = subset(data, splits[r].train);
  }

  detail::parallel_for(res.cells.size(), jobs, [&](std::size_t slot) {
    const int r = static_cast<int>(slot / cells_per_repeat);
    const std::size_t cell = slot % cells_per_repeat;
    const int k = k_grid[cell / c_grid.size()];
    const double C = c_grid[cell % c_grid.size()];
    train_config cfg = base_cfg;
    cfg.k = k;
    cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(r), cell);
    // extreme corners of a wide C grid can blow up the fixed step schedule;
    // a diverged fit disqualifies its cell instead of aborting the search
    double score = std::numeric_limits<double>::infinity();
    try {
      const auto fit = train(train_folds[r], loss, cfg, C);
      score = detail::score_fold(fit.state, data, splits[r].val);
    } catch (const convergence_error&) {
    }
    res.cells[slot] = {r, k, C, score};
  });

  detail::parallel_for(static_cast<std::size_t>(repeats), jobs, [&](std::size_t ri) {
    const int r = static_cast<int>(ri);
    const cell_result* begin = res.cells.data() + ri * cells_per_repeat;
    const cell_result* best = begin;
    for (const cell_result* c = begin; c != begin + cells_per_repeat; ++c) {
      if (c->val_score < best->val_score ||
          (c->val_score == best->val_score &&
           (c->k < best->k || (c->k == best->k && c->C < best->C))))
        best = c;
    }
    if (!std::isfinite(best->val_score))
      throw convergence_error("grid_search: every cell of repeat " + std::to_string(r) +
                              " diverged");
    train_config cfg = base_cfg;
    cfg.k = best->k;
    cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(r), 0xFEEDull, 0ull);
    const auto fit = train(train_folds[r], loss, cfg, best->C);
    res.selections[ri] = {r, best->k, best->C, best->val_score,
                          detail::score_fold(fit.state, data, splits[r].test)};
  });

  // headline (k, C): the pair picked most often, smaller k then C on ties
  std::map<std::pair<int, double>, int> votes;
  for (const auto& s : res.selections) ++votes[{s.k, s.C}];
  int best_votes = 0;
  for (const auto& [kc, count] : votes) {
    if (count > best_votes) {
      best_votes = count;
      res.best_k = kc.first;
      res.best_C = kc.second;
    }
  }
  res.test_scores.reserve(repeats);
  for (const auto& s : res.selections) {
    res.val_score += s.val_score;
    res.test_scores.push_back(s.test_score);
  }
  res.val_score /= static_cast<double>(repeats);
  const auto m = detail::mean_std(res.test_scores);
  res.mean_test = m.mean;
  res.std_test = m.stddev;
  return res;
}

struct sweep_point {
  int k = 0;
  double mean_score = 0.0;
  double std_score = 0.0;
};

/**
 * Test error as a function of k at fixed C. All k values share the same
 * split per repeat (paired comparison); scoring is on the test fold.
 */
inline std::vector<sweep_point> sweep_k(const dataset& data, individual_loss loss,
                                        std::span<const int> k_values, double C, int repeats,
                                        std::uint64_t seed, train_config base_cfg,
                                        int jobs = 1) {
  data.validate();
  if (repeats < 1) throw parameter_error("sweep_k: repeats must be positive");
  if (k_values.empty()) throw parameter_error("sweep_k: empty k list");
  const std::size_t n_train = (data.n + 1) / 2;
  for (int k : k_values)
    if (k < 1 || static_cast<std::size_t>(k) > n_train)
      throw parameter_error("sweep_k: k = " + std::to_string(k) + " outside [1, " +
                            std::to_string(n_train) + "] (the training fold size)");

  std::vector<split_plan> splits(repeats);
  std::vector<dataset> train_folds(repeats);
  for (int r = 0; r < repeats; ++r) {
    splits[r] = make_split(data.n, seed + static_cast<std::uint64_t>(r));
    train_folds[r] = subset(data, splits[r].train);
  }

  std::vector<double> scores(k_values.size() * repeats);
  detail::parallel_for(scores.size(), jobs, [&](std::size_t slot) {
    const std::size_t ki = slot / repeats;
    const int r = static_cast<int>(slot % repeats);
    train_config cfg = base_cfg;
    cfg.k = k_values[ki];
    cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(r), ki);
    const auto fit = train(train_folds[r], loss, cfg, C);
    scores[slot] = detail::score_fold(fit.state, data, splits[r].test);
  });

  std::vector<sweep_point> out(k_values.size());
  for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
    const auto m = detail::mean_std(
        std::span<const double>(scores.data() + ki * repeats, repeats));
    out[ki] = {k_values[ki], m.mean, m.stddev};
  }
  return out;
}

}  // namespace atk
