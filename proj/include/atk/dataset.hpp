#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace atk {

enum class task_kind { classification, regression };

constexpr const char* to_string(task_kind t) {
  return t == task_kind::classification ? "classification" : "regression";
}

inline task_kind task_kind_from_string(std::string_view s) {
  if (s == "classification") return task_kind::classification;
  if (s == "regression") return task_kind::regression;
  throw parameter_error("unknown task kind: " + std::string(s));
}

/**
 * In-memory sample set. Features are stored dense and row-major; targets are
 * class labels in {-1,+1} or real responses depending on task. Loaders and
 * generators run validate() before handing a dataset out.
 */
struct dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> features;  // n * d, row-major
  std::vector<double> targets;   // n
  task_kind task = task_kind::classification;
  std::string name;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * d, d};
  }

  void validate() const {
    if (n == 0 || d == 0) throw data_error("dataset: empty (n and d must be positive)");
    if (features.size() != n * d)
      throw shape_error("dataset: feature storage is " + std::to_string(features.size()) +
                        ", expected " + std::to_string(n * d));
    if (targets.size() != n)
      throw shape_error("dataset: " + std::to_string(targets.size()) + " targets for " +
                        std::to_string(n) + " rows");
    for (double v : features)
      if (!std::isfinite(v)) throw data_error("dataset: non-finite feature value");
    for (double y : targets) {
      if (!std::isfinite(y)) throw data_error("dataset: non-finite target value");
      if (task == task_kind::classification && y != 1.0 && y != -1.0)
        throw label_error("dataset: classification target " + std::to_string(y) +
                          " not in {-1,+1}");
    }
  }
};

inline dataset subset(const dataset& data, std::span<const std::size_t> idx) {
  dataset out;
  out.n = idx.size();
  out.d = data.d;
  out.task = data.task;
  out.name = data.name;
  out.features.reserve(out.n * out.d);
  out.targets.reserve(out.n);
  for (std::size_t i : idx) {
    if (i >= data.n) throw parameter_error("subset: index out of range");
    const auto r = data.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.targets.push_back(data.targets[i]);
  }
  return out;
}

// Index partition into ceil(n/2) train, floor(n/4) validation, rest test.
struct split_plan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

inline split_plan make_split(std::size_t n, std::uint64_t seed) {
  if (n < 4) throw parameter_error("make_split: need at least 4 samples, got " +
                                   std::to_string(n));
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng g(stream_seed(seed, "split"));
  for (std::size_t i = n - 1; i > 0; --i) {  // Fisher-Yates
    const std::size_t j = g.next_below(i + 1);
    std::swap(perm[i], perm[j]);
  }
  const std::size_t n_train = (n + 1) / 2;
  const std::size_t n_val = n / 4;
  split_plan plan;
  plan.train.assign(perm.begin(), perm.begin() + n_train);
  plan.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  plan.test.assign(perm.begin() + n_train + n_val, perm.end());
  return plan;
}

struct target_scaling {
  double min = 0.0;
  double max = 1.0;
};

// Affine map of regression targets onto [0,1]; returns the scaling so
// predictions can be mapped back.
inline std::pair<dataset, target_scaling> normalize_targets(const dataset& data) {
  if (data.task != task_kind::regression)
    throw parameter_error("normalize_targets: regression datasets only");
  if (data.n == 0) throw parameter_error("normalize_targets: empty dataset");
  const auto [lo_it, hi_it] = std::minmax_element(data.targets.begin(), data.targets.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw domain_error("normalize_targets: degenerate target range");
  dataset out = data;
  for (double& y : out.targets) y = (y - lo) / (hi - lo);
  return {std::move(out), target_scaling{lo, hi}};
}

namespace detail {

inline double parse_number(const std::string& tok, const std::string& path, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw parse_error(path, line, "expected a number, got '" + tok + "'");
  }
  if (pos != tok.size()) throw parse_error(path, line, "trailing junk in '" + tok + "'");
  if (!std::isfinite(v)) throw parse_error(path, line, "non-finite value '" + tok + "'");
  return v;
}

inline task_kind infer_task(const std::vector<double>& targets) {
  for (double y : targets)
    if (y != 1.0 && y != -1.0) return task_kind::regression;
  return task_kind::classification;
}

// 17 significant digits: round-trips every double exactly
inline void print_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace detail

/**
 * Dense CSV: one sample per line, comma separated, last column is the target.
 * If task is not given it is inferred: all targets in {-1,+1} means
 * classification, anything else means regression.
 */
inline dataset load_dense_csv(const std::string& path,
                              std::optional<task_kind> task = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  dataset out;
  out.name = path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ','))
      fields.push_back(detail::parse_number(tok, path, line_no));
    if (fields.size() < 2)
      throw parse_error(path, line_no, "need at least one feature and the target");
    if (out.n == 0) {
      out.d = fields.size() - 1;
    } else if (fields.size() - 1 != out.d) {
      throw parse_error(path, line_no,
                        "row has " + std::to_string(fields.size() - 1) + " features, expected " +
                            std::to_string(out.d));
    }
    out.features.insert(out.features.end(), fields.begin(), fields.end() - 1);
    out.targets.push_back(fields.back());
    ++out.n;
  }
  if (out.n == 0) throw data_error(path + ": empty file");
  out.task = task ? *task : detail::infer_task(out.targets);
  out.validate();
  return out;
}

inline void save_dense_csv(const dataset& data, const std::string& path) {
  data.validate();
  std::string buf;
  buf.reserve(data.n * (data.d + 1) * 12);
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < data.d; ++j) {
      detail::print_number(buf, data.features[i * data.d + j]);
      buf += ',';
    }
    detail::print_number(buf, data.targets[i]);
    buf += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << buf;
}

/**
 * Sparse rows: "target idx:value idx:value ...", indices 1-based, absent
 * coordinates are zero. The dimensionality is the largest index seen.
 */
inline dataset load_sparse(const std::string& path,
                           std::optional<task_kind> task = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<double> targets;
  std::size_t d = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    targets.push_back(detail::parse_number(tok, path, line_no));
    std::vector<std::pair<std::size_t, double>> row;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw parse_error(path, line_no, "expected idx:value, got '" + tok + "'");
      const std::string idx_s = tok.substr(0, colon);
      std::size_t pos = 0;
      long long idx = 0;
      try {
        idx = std::stoll(idx_s, &pos);
      } catch (const std::exception&) {
        throw parse_error(path, line_no, "bad feature index '" + idx_s + "'");
      }
      if (pos != idx_s.size() || idx < 1)
        throw parse_error(path, line_no, "feature indices are 1-based integers, got '" +
                                             idx_s + "'");
      for (const auto& [seen, _] : row)
        if (seen == static_cast<std::size_t>(idx))
          throw parse_error(path, line_no, "duplicate feature index " + idx_s);
      const double v = detail::parse_number(tok.substr(colon + 1), path, line_no);
      row.emplace_back(static_cast<std::size_t>(idx), v);
      d = std::max(d, static_cast<std::size_t>(idx));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw data_error(path + ": empty file");
  if (d == 0) throw data_error(path + ": no feature entries in the whole file");
  dataset out;
  out.name = path;
  out.n = rows.size();
  out.d = d;
  out.features.assign(out.n * d, 0.0);
  out.targets = std::move(targets);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [idx, v] : rows[i]) out.features[i * d + (idx - 1)] = v;
  out.task = task ? *task : detail::infer_task(out.targets);
  out.validate();
  return out;
}

inline void save_sparse(const dataset& data, const std::string& path) {
  data.validate();
  std::string buf;
  for (std::size_t i = 0; i < data.n; ++i) {
    detail::print_number(buf, data.targets[i]);
    for (std::size_t j = 0; j < data.d; ++j) {
      const double v = data.features[i * data.d + j];
      if (v == 0.0) continue;
      buf += ' ';
      buf += std::to_string(j + 1);
      buf += ':';
      detail::print_number(buf, v);
    }
    buf += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << buf;
}

}  // namespace atk
