#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "errors.hpp"
#include "losses.hpp"
#include "solver.hpp"
#include "svm_dual.hpp"
#include "version.hpp"

namespace atk {

// Trained linear model together with everything needed to apply it.
struct linear_model {
  model_state state;
  loss_kind loss = loss_kind::hinge;
  task_kind task = task_kind::classification;
  int k = 1;
};

namespace detail {

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path, 0, e.what());
  }
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << text;
}

}  // namespace detail

inline void save_linear_model(const linear_model& model, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["type"] = "linear";
  j["loss"] = to_string(model.loss);
  j["task"] = to_string(model.task);
  j["k"] = model.k;
  j["C"] = model.state.C;
  j["lambda"] = model.state.lambda;
  j["w"] = model.state.w;
  detail::write_text(path, j.dump(2) + "\n");
}

inline linear_model load_linear_model(const std::string& path) {
  const nlohmann::json j = detail::load_json(path);
  try {
    if (j.at("format_version").get<int>() != 1)
      throw data_error(path + ": unsupported model format version");
    if (j.at("type").get<std::string>() != "linear")
      throw data_error(path + ": not a linear model file");
    linear_model m;
    m.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    m.task = task_kind_from_string(j.at("task").get<std::string>());
    m.k = j.at("k").get<int>();
    m.state.C = j.at("C").get<double>();
    m.state.lambda = j.at("lambda").get<double>();
    m.state.w = j.at("w").get<std::vector<double>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path, 0, e.what());
  }
}

// Kernel model export: support vectors are copied in so the file stands on
// its own.
inline void save_dual_model(const dual_solution& sol, const dataset& data,
                            kernel_spec kernel, double C, int k, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["type"] = "kernel";
  j["kernel"] = {{"kind", to_string(kernel.kind)}, {"gamma", kernel.gamma}};
  j["C"] = C;
  j["k"] = k;
  j["rho"] = sol.rho;
  j["dual_objective"] = sol.dual_objective;
  j["iterations"] = sol.iterations;
  j["residual"] = sol.residual;
  j["alpha"] = sol.alpha;
  j["labels"] = data.targets;
  j["support_indices"] = sol.support_indices;
  nlohmann::json sv = nlohmann::json::array();
  for (std::size_t i : sol.support_indices) {
    const auto r = data.row(i);
    sv.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["support_vectors"] = sv;
  detail::write_text(path, j.dump(2) + "\n");
}

/**
 * Record of one tool invocation: the resolved configuration, the seed, and
 * the files written. Re-running the same tool version with the stored
 * config reproduces the outputs byte for byte. Written next to the primary
 * output as <output>.manifest.json.
 */
struct run_manifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
};

inline void save_manifest(const run_manifest& m, const std::string& path) {
  nlohmann::json j;
  j["manifest_version"] = 1;
  j["tool_version"] = version_string;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["outputs"] = m.outputs;
  detail::write_text(path, j.dump(2) + "\n");
}

inline run_manifest load_manifest(const std::string& path) {
  const nlohmann::json j = detail::load_json(path);
  try {
    if (j.at("manifest_version").get<int>() != 1)
      throw data_error(path + ": unsupported manifest version");
    run_manifest m;
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path, 0, e.what());
  }
}

}  // namespace atk
