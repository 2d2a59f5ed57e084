#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace atk {

// sin(x)/x with the removable singularity filled in
inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(x) / x;
}

namespace detail {

struct gaussian_component {
  double label;   // -1 or +1
  double weight;  // fraction of the regular sample count
  double cx, cy;
  double sigma;   // isotropic
};

struct fixed_point {
  double label;
  double x, y;
};

struct gaussian_case {
  int id;
  int base_id;  // case whose regular points this case reuses
  const char* summary;
  std::vector<gaussian_component> components;
  std::vector<fixed_point> outliers;
};

// Frozen two-dimensional benchmark geometries for a linear score through
// the origin. The clouds overlap and sit at deliberately non-antipodal
// angles, so the rotation that maximizes margins is not the rotation that
// minimizes mistakes, and how the individual losses are weighted decides
// which one a trainer finds. Cases 2, 4 and 6 reuse the regular points of
// 1, 3 and 5 (same seed, same draws) and append the listed outliers, so
// they carry n_total + #outliers samples.
inline const std::vector<gaussian_case>& gaussian_case_table() {
  static const std::vector<gaussian_case> table = {
      {1, 1, "balanced pair of overlapping clouds, one tight and one wide",
       {{+1.0, 0.50, 1.04, 0.87, 0.55}, {-1.0, 0.50, -1.97, -0.35, 1.35}},
       {}},
      {2, 1, "case 1 plus one positive outlier deep inside the negative cloud",
       {{+1.0, 0.50, 1.04, 0.87, 0.55}, {-1.0, 0.50, -1.97, -0.35, 1.35}},
       {{+1.0, -5.8, -1.2}}},
      {3, 3, "positive class bimodal with a rare mode straddling the boundary",
       {{+1.0, 0.40, 2.08, 1.20, 0.50},
        {+1.0, 0.10, -0.75, 0.40, 0.22},
        {-1.0, 0.50, -1.39, -0.97, 0.95}},
       {}},
      {4, 3, "case 3 plus one positive outlier deep inside the negative cloud",
       {{+1.0, 0.40, 2.08, 1.20, 0.50},
        {+1.0, 0.10, -0.75, 0.40, 0.22},
        {-1.0, 0.50, -1.39, -0.97, 0.95}},
       {{+1.0, -3.0, -2.2}}},
      {5, 5, "imbalanced, a tight negative minority hugging the majority flank",
       {{+1.0, 0.85, 1.64, 1.15, 1.00}, {-1.0, 0.15, -0.61, 0.73, 0.28}},
       {}},
      {6, 5, "case 5 plus one positive outlier far out on the negative side",
       {{+1.0, 0.85, 1.64, 1.15, 1.00}, {-1.0, 0.15, -0.61, 0.73, 0.28}},
       {{+1.0, -3.8, -0.7}}},
  };
  return table;
}

// Apportion n among the component weights: floor everything, then hand the
// remaining slots to the largest fractional parts (first index wins ties).
inline std::vector<std::size_t> apportion(const std::vector<gaussian_component>& comps,
                                          std::size_t n) {
  std::vector<std::size_t> counts(comps.size());
  std::vector<double> frac(comps.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const double exact = comps[i].weight * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(exact);
    frac[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < comps.size(); ++i)
      if (frac[i] > frac[best]) best = i;
    ++counts[best];
    frac[best] = -1.0;
    ++assigned;
  }
  return counts;
}

inline void fmt_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  out += buf;
}

}  // namespace detail

/**
 * Two-dimensional Gaussian-mixture benchmark, cases 1-6:
 *   1 balanced overlapping clouds, 2 = 1 + outlier, 3 bimodal positive
 *   class with a rare mode, 4 = 3 + outlier, 5 imbalanced, 6 = 5 + outlier.
 * Outlier cases return n_total + 1 samples; the first n_total rows coincide
 * with the base case generated from the same (n_total, seed).
 */
inline dataset generate_gaussian_case(int case_id, std::size_t n_total, std::uint64_t seed) {
  const auto& table = detail::gaussian_case_table();
  const detail::gaussian_case* entry = nullptr;
  for (const auto& c : table)
    if (c.id == case_id) entry = &c;
  if (!entry) throw parameter_error("generate_gaussian_case: case must be 1..6, got " +
                                    std::to_string(case_id));
  if (n_total < 4)
    throw parameter_error("generate_gaussian_case: n_total must be at least 4");

  dataset out;
  out.task = task_kind::classification;
  out.name = "gauss-case-" + std::to_string(case_id);
  out.d = 2;
  // regular points come from the base case's stream so that e.g. case 2
  // equals case 1 plus its outlier row for the same (n_total, seed)
  rng g(mix_seed(stream_seed(seed, "gaussian-case"),
                 static_cast<std::uint64_t>(entry->base_id)));
  const auto counts = detail::apportion(entry->components, n_total);
  for (std::size_t c = 0; c < entry->components.size(); ++c) {
    const auto& comp = entry->components[c];
    for (std::size_t i = 0; i < counts[c]; ++i) {
      out.features.push_back(comp.cx + comp.sigma * g.next_gaussian());
      out.features.push_back(comp.cy + comp.sigma * g.next_gaussian());
      out.targets.push_back(comp.label);
    }
  }
  for (const auto& o : entry->outliers) {
    out.features.push_back(o.x);
    out.features.push_back(o.y);
    out.targets.push_back(o.label);
  }
  out.n = out.targets.size();
  out.validate();
  return out;
}

// The exact generator configuration as a versioned JSON document, so that
// published datasets can be reconstructed without reading this source file.
inline std::string gaussian_case_config_json() {
  std::string j = "{\n  \"config_version\": 1,\n  \"dimension\": 2,\n  \"cases\": [\n";
  const auto& table = detail::gaussian_case_table();
  for (std::size_t ci = 0; ci < table.size(); ++ci) {
    const auto& c = table[ci];
    j += "    {\"case\": " + std::to_string(c.id) +
         ", \"base_case\": " + std::to_string(c.base_id) + ", \"summary\": \"" + c.summary +
         "\",\n     \"components\": [";
    for (std::size_t i = 0; i < c.components.size(); ++i) {
      const auto& m = c.components[i];
      j += i ? ",\n                     " : "";
      j += "{\"label\": ";
      detail::fmt_num(j, m.label);
      j += ", \"weight\": ";
      detail::fmt_num(j, m.weight);
      j += ", \"center\": [";
      detail::fmt_num(j, m.cx);
      j += ", ";
      detail::fmt_num(j, m.cy);
      j += "], \"sigma\": ";
      detail::fmt_num(j, m.sigma);
      j += "}";
    }
    j += "],\n     \"outliers\": [";
    for (std::size_t i = 0; i < c.outliers.size(); ++i) {
      const auto& o = c.outliers[i];
      j += i ? ", " : "";
      j += "{\"label\": ";
      detail::fmt_num(j, o.label);
      j += ", \"point\": [";
      detail::fmt_num(j, o.x);
      j += ", ";
      detail::fmt_num(j, o.y);
      j += "]}";
    }
    j += "]}";
    j += (ci + 1 < table.size()) ? ",\n" : "\n";
  }
  j += "  ]\n}\n";
  return j;
}

// Ten radial basis centers, evenly spaced over [-10, 10] at the midpoints
// of the ten equal cells: -9, -7, ..., 9. Centering the bumps inside the
// domain keeps every sample within reach of a basis function; pinning the
// ends to +-10 instead parks two bumps where the target is flat and
// measurably worsens the best reachable fit.
inline std::vector<double> sinc_centers() {
  std::vector<double> c(10);
  for (int i = 0; i < 10; ++i) c[i] = -9.0 + 2.0 * static_cast<double>(i);
  return c;
}

/**
 * Noisy sinc regression set: x ~ U[-10,10], y = sin(x)/x + N(0, 0.2^2),
 * featurized through phi_j(x) = exp(-(x - c_j)^2) on the ten centers above.
 */
inline dataset generate_sinc(std::size_t n, std::uint64_t seed) {
  if (n < 4) throw parameter_error("generate_sinc: n must be at least 4");
  const auto centers = sinc_centers();
  dataset out;
  out.task = task_kind::regression;
  out.name = "sinc";
  out.n = n;
  out.d = centers.size();
  out.features.reserve(n * out.d);
  out.targets.reserve(n);
  rng g(stream_seed(seed, "sinc"));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g.next_uniform(-10.0, 10.0);
    for (double c : centers) out.features.push_back(std::exp(-(x - c) * (x - c)));
    out.targets.push_back(sinc(x) + 0.2 * g.next_gaussian());
  }
  out.validate();
  return out;
}

}  // namespace atk
