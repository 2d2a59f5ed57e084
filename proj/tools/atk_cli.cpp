// Command-line front end: dataset generation, training, evaluation, k sweeps,
// grid search, and the kernel dual solver. Every file-producing run writes a
// manifest next to its primary output so results can be reproduced exactly.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "atk/atk.hpp"

namespace {

using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_data = 3;
constexpr int exit_convergence = 4;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

atk::dataset load_any(const std::string& path, const std::string& format,
                      const std::string& task) {
  std::optional<atk::task_kind> t;
  if (task != "auto") t = atk::task_kind_from_string(task);
  if (format == "sparse") return atk::load_sparse(path, t);
  return atk::load_dense_csv(path, t);
}

void write_manifest(const atk::run_manifest& m) {
  if (m.outputs.empty()) return;
  atk::save_manifest(m, m.outputs.front() + ".manifest.json");
}

// ---------------------------------------------------------------- generate

struct generate_opts {
  int case_id = 0;
  bool sinc = false;
  std::size_t n = 200;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "dense";
  bool print_config = false;
};

int run_generate(const generate_opts& o) {
  if (o.print_config) {
    std::cout << atk::gaussian_case_config_json();
    return exit_ok;
  }
  if ((o.case_id == 0) == !o.sinc)
    throw atk::parameter_error("generate: pass exactly one of --case or --sinc");
  if (o.out.empty()) throw atk::parameter_error("generate: --out is required");
  const atk::dataset data = o.sinc ? atk::generate_sinc(o.n, o.seed)
                                   : atk::generate_gaussian_case(o.case_id, o.n, o.seed);
  if (o.format == "sparse")
    atk::save_sparse(data, o.out);
  else
    atk::save_dense_csv(data, o.out);

  atk::run_manifest m;
  m.command = "generate";
  m.seed = o.seed;
  m.config = {{"n", o.n},      {"seed", o.seed}, {"format", o.format},
              {"out", o.out},  {"sinc", o.sinc}, {"case", o.case_id}};
  m.outputs = {o.out};
  write_manifest(m);
  std::cout << "wrote " << data.n << " samples (" << data.d << " features, "
            << atk::to_string(data.task) << ") to " << o.out << "\n";
  return exit_ok;
}

// ------------------------------------------------------------------- train

struct train_opts {
  std::string data;
  std::string format = "dense";
  std::string task = "auto";
  std::string loss = "hinge";
  std::string aggregate = "atk";
  int k = 0;
  double C = 1.0;
  long iterations = 10000;
  double eta0 = 0.1;
  std::uint64_t seed = 0;
  long record_every = 0;
  std::string out;
  std::string trace;
};

int run_train(const train_opts& o) {
  const atk::dataset data = load_any(o.data, o.format, o.task);
  int k = 0;
  if (o.aggregate == "atk") {
    if (o.k <= 0)
      throw atk::parameter_error("train: --k is required with the atk aggregate");
    k = o.k;
  } else if (o.aggregate == "average") {
    if (o.k > 0) throw atk::parameter_error("train: --k conflicts with --aggregate average");
    k = static_cast<int>(data.n);
  } else if (o.aggregate == "maximum") {
    if (o.k > 0) throw atk::parameter_error("train: --k conflicts with --aggregate maximum");
    k = 1;
  } else {
    throw atk::parameter_error("train: aggregate must be atk, average, or maximum");
  }

  atk::train_config cfg;
  cfg.k = k;
  cfg.iterations = o.iterations;
  cfg.eta0 = o.eta0;
  cfg.seed = o.seed;
  cfg.record_every = o.record_every;
  if (!o.trace.empty() && cfg.record_every == 0)
    cfg.record_every = std::max<long>(1, o.iterations / 100);

  const atk::individual_loss loss{atk::loss_kind_from_string(o.loss)};
  const auto res = atk::train(data, loss, cfg, o.C);

  atk::linear_model model;
  model.state = res.state;
  model.loss = loss.kind;
  model.task = data.task;
  model.k = k;
  atk::save_linear_model(model, o.out);

  atk::run_manifest m;
  m.command = "train";
  m.seed = o.seed;
  m.config = {{"data", o.data},        {"format", o.format},
              {"task", o.task},        {"loss", o.loss},
              {"aggregate", o.aggregate}, {"k", o.k},
              {"C", o.C},              {"iterations", o.iterations},
              {"eta0", o.eta0},        {"seed", o.seed},
              {"record_every", o.record_every}, {"out", o.out},
              {"trace", o.trace}};
  m.outputs = {o.out};
  if (!o.trace.empty()) {
    std::string csv = "iteration,objective\n";
    for (const auto& p : res.trace)
      csv += std::to_string(p.iteration) + "," + fmt17(p.objective) + "\n";
    std::ofstream tf(o.trace, std::ios::binary);
    if (!tf) throw atk::data_error("cannot write " + o.trace);
    tf << csv;
    m.outputs.push_back(o.trace);
  }
  write_manifest(m);
  std::cout << "final objective " << fmt17(res.trace.back().objective) << ", lambda "
            << fmt17(res.state.lambda) << ", model in " << o.out << "\n";
  return exit_ok;
}

// -------------------------------------------------------------------- eval

struct eval_opts {
  std::string model;
  std::string data;
  std::string format = "dense";
  std::string task = "auto";
  std::string out;
};

int run_eval(const eval_opts& o) {
  const atk::linear_model model = atk::load_linear_model(o.model);
  const atk::dataset data = load_any(o.data, o.format, o.task);
  if (data.d != model.state.w.size())
    throw atk::shape_error("eval: model expects " + std::to_string(model.state.w.size()) +
                           " features, data has " + std::to_string(data.d));
  if (data.task != model.task)
    throw atk::data_error("eval: model task does not match the dataset");

  std::vector<double> scores(data.n), labels(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    double f = 0.0;
    const auto r = data.row(i);
    for (std::size_t j = 0; j < data.d; ++j) f += model.state.w[j] * r[j];
    scores[i] = f;
    labels[i] = atk::predicted_label(f);
  }

  json out;
  out["n"] = data.n;
  out["task"] = atk::to_string(data.task);
  if (data.task == atk::task_kind::classification) {
    const double err = atk::misclassification_rate(labels, data.targets);
    const double gm = atk::g_mean(labels, data.targets);
    out["misclassification"] = err;
    out["g_mean"] = gm;
    // percentages alongside the raw rates, for reading off result tables
    out["misclassification_percent"] = 100.0 * err;
    out["g_mean_percent"] = 100.0 * gm;
  } else {
    out["rmse"] = atk::rmse(scores, data.targets);
    out["mae"] = atk::mae(scores, data.targets);
  }
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw atk::data_error("cannot write " + o.out);
    f << text;
    atk::run_manifest m;
    m.command = "eval";
    m.config = {{"model", o.model}, {"data", o.data},  {"format", o.format},
                {"task", o.task},   {"out", o.out}};
    m.outputs = {o.out};
    write_manifest(m);
  }
  return exit_ok;
}

// ----------------------------------------------------------------- sweep-k

struct sweep_opts {
  std::string data;
  std::string format = "dense";
  std::string task = "auto";
  std::string loss = "hinge";
  double C = 100.0;
  int repeats = 10;
  std::uint64_t seed = 0;
  std::string k_values;
  long iterations = 10000;
  double eta0 = 0.1;
  int jobs = 1;
  std::string out;
};

std::vector<int> parse_k_list(const std::string& text) {
  std::vector<int> ks;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      const int k = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw atk::parameter_error("sweep-k: bad k value '" + tok + "'");
    }
  }
  if (ks.empty()) throw atk::parameter_error("sweep-k: empty k list");
  return ks;
}

int run_sweep(const sweep_opts& o) {
  const atk::dataset data = load_any(o.data, o.format, o.task);
  const std::size_t n_train = (data.n + 1) / 2;
  const std::vector<int> ks =
      o.k_values.empty() ? atk::log_k_grid(n_train) : parse_k_list(o.k_values);

  atk::train_config cfg;
  cfg.iterations = o.iterations;
  cfg.eta0 = o.eta0;
  const atk::individual_loss loss{atk::loss_kind_from_string(o.loss)};
  const auto points = atk::sweep_k(data, loss, ks, o.C, o.repeats, o.seed, cfg, o.jobs);

  std::string csv = "k,mean,std\n";
  for (const auto& p : points)
    csv += std::to_string(p.k) + "," + fmt17(p.mean_score) + "," + fmt17(p.std_score) + "\n";
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw atk::data_error("cannot write " + o.out);
  f << csv;

  atk::run_manifest m;
  m.command = "sweep-k";
  m.seed = o.seed;
  m.config = {{"data", o.data},   {"format", o.format}, {"task", o.task},
              {"loss", o.loss},   {"C", o.C},           {"repeats", o.repeats},
              {"seed", o.seed},   {"k_values", o.k_values},
              {"iterations", o.iterations}, {"eta0", o.eta0},
              {"jobs", o.jobs},   {"out", o.out}};
  m.outputs = {o.out};
  write_manifest(m);

  const bool cls = data.task == atk::task_kind::classification;
  for (const auto& p : points) {
    const double scale = cls ? 100.0 : 1.0;
    std::printf("k=%4d  %s %.4f (%.4f)\n", p.k,
                cls ? "test error %" : "test rmse", scale * p.mean_score,
                scale * p.std_score);
  }
  return exit_ok;
}

// -------------------------------------------------------------- gridsearch

struct grid_opts {
  std::string data;
  std::string format = "dense";
  std::string task = "auto";
  std::string loss = "hinge";
  int c_min_exp = -5;
  int c_max_exp = 5;
  int k_points = 15;
  int repeats = 10;
  std::uint64_t seed = 0;
  long iterations = 10000;
  double eta0 = 0.1;
  int jobs = 1;
  bool normalize = true;
  std::string out;
};

int run_gridsearch(const grid_opts& o) {
  atk::dataset data = load_any(o.data, o.format, o.task);
  if (data.task == atk::task_kind::regression && o.normalize)
    data = atk::normalize_targets(data).first;
  const std::size_t n_train = (data.n + 1) / 2;
  const auto k_grid = atk::log_k_grid(n_train, o.k_points);
  const auto c_grid = atk::log_c_grid(o.c_min_exp, o.c_max_exp);

  atk::train_config cfg;
  cfg.iterations = o.iterations;
  cfg.eta0 = o.eta0;
  const atk::individual_loss loss{atk::loss_kind_from_string(o.loss)};
  const auto res =
      atk::grid_search(data, loss, k_grid, c_grid, o.repeats, o.seed, cfg, o.jobs);

  const bool cls = data.task == atk::task_kind::classification;
  json j;
  j["metric"] = cls ? "misclassification" : "rmse";
  j["summary"] = {{"best_k", res.best_k},       {"best_C", res.best_C},
                  {"val_score", res.val_score}, {"mean_test", res.mean_test},
                  {"std_test", res.std_test}};
  if (cls) {
    j["summary"]["mean_test_percent"] = 100.0 * res.mean_test;
    j["summary"]["std_test_percent"] = 100.0 * res.std_test;
  }
  j["k_grid"] = k_grid;
  j["c_grid"] = c_grid;
  j["selections"] = json::array();
  for (const auto& s : res.selections)
    j["selections"].push_back({{"repeat", s.repeat},
                               {"k", s.k},
                               {"C", s.C},
                               {"val_score", s.val_score},
                               {"test_score", s.test_score}});
  j["cells"] = json::array();
  for (const auto& c : res.cells)
    j["cells"].push_back(
        {{"repeat", c.repeat}, {"k", c.k}, {"C", c.C}, {"val_score", c.val_score}});

  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw atk::data_error("cannot write " + o.out);
  f << j.dump(2) << "\n";

  atk::run_manifest m;
  m.command = "gridsearch";
  m.seed = o.seed;
  m.config = {{"data", o.data},       {"format", o.format},
              {"task", o.task},       {"loss", o.loss},
              {"c_min_exp", o.c_min_exp}, {"c_max_exp", o.c_max_exp},
              {"k_points", o.k_points},   {"repeats", o.repeats},
              {"seed", o.seed},       {"iterations", o.iterations},
              {"eta0", o.eta0},       {"jobs", o.jobs},
              {"normalize", o.normalize}, {"out", o.out}};
  m.outputs = {o.out};
  write_manifest(m);

  std::printf("selected k=%d C=%s;", res.best_k, fmt17(res.best_C).c_str());
  if (cls)
    std::printf(" mean test error %.4f%% (%.4f%%)\n", 100.0 * res.mean_test,
                100.0 * res.std_test);
  else
    std::printf(" mean test rmse %.6f (%.6f)\n", res.mean_test, res.std_test);
  return exit_ok;
}

// ---------------------------------------------------------------- svm-dual

struct svm_opts {
  std::string data;
  std::string format = "dense";
  std::string kernel = "linear";
  double gamma = 1.0;
  double C = 1.0;
  int k = 1;
  double tol = 1e-6;
  long max_iters = 0;
  std::string out;
};

int run_svm_dual(const svm_opts& o) {
  const atk::dataset data = load_any(o.data, o.format, "classification");
  atk::kernel_spec kernel{atk::kernel_kind_from_string(o.kernel), o.gamma};
  const auto sol = atk::dual_solve(data, kernel, o.C, o.k, o.tol, o.max_iters);
  atk::save_dual_model(sol, data, kernel, o.C, o.k, o.out);

  atk::run_manifest m;
  m.command = "svm-dual";
  m.config = {{"data", o.data}, {"format", o.format}, {"kernel", o.kernel},
              {"gamma", o.gamma}, {"C", o.C},          {"k", o.k},
              {"tol", o.tol},   {"max_iters", o.max_iters}, {"out", o.out}};
  m.outputs = {o.out};
  write_manifest(m);

  const auto nu = atk::nu_property_check(sol, data, kernel, o.tol);
  std::printf("converged in %ld iterations, dual objective %s, rho %s\n", sol.iterations,
              fmt17(sol.dual_objective).c_str(), fmt17(sol.rho).c_str());
  std::printf("support fraction %.4f, margin-error fraction %.4f (k/n = %.4f)\n",
              nu.support_fraction, nu.margin_error_fraction,
              static_cast<double>(o.k) / static_cast<double>(data.n));
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"average-top-k learning toolkit"};
  app.require_subcommand(1);

  generate_opts gen;
  auto* cmd_gen = app.add_subcommand("generate", "synthesize a benchmark dataset");
  cmd_gen->add_option("--case", gen.case_id, "gaussian benchmark case (1-6)");
  cmd_gen->add_flag("--sinc", gen.sinc, "noisy sinc regression set");
  cmd_gen->add_option("--n", gen.n, "sample count");
  cmd_gen->add_option("--seed", gen.seed, "generator seed");
  cmd_gen->add_option("--out", gen.out, "output dataset path");
  cmd_gen->add_option("--format", gen.format, "dense|sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  cmd_gen->add_flag("--print-config", gen.print_config,
                    "print the gaussian generator table and exit");

  train_opts tr;
  auto* cmd_tr = app.add_subcommand("train", "fit a linear model by stochastic subgradient");
  cmd_tr->add_option("--data", tr.data, "dataset path")->required();
  cmd_tr->add_option("--format", tr.format, "dense|sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  cmd_tr->add_option("--task", tr.task, "auto|classification|regression")
      ->check(CLI::IsMember({"auto", "classification", "regression"}));
  cmd_tr->add_option("--loss", tr.loss, "logistic|hinge|squared|absolute");
  cmd_tr->add_option("--aggregate", tr.aggregate, "atk|average|maximum");
  cmd_tr->add_option("--k", tr.k, "worst-k count for the atk aggregate");
  cmd_tr->add_option("--C", tr.C, "regularization parameter C");
  cmd_tr->add_option("--iterations", tr.iterations, "stochastic steps");
  cmd_tr->add_option("--eta0", tr.eta0, "step-size scale");
  cmd_tr->add_option("--seed", tr.seed, "sampling seed");
  cmd_tr->add_option("--record-every", tr.record_every, "objective trace stride");
  cmd_tr->add_option("--out", tr.out, "model output path")->required();
  cmd_tr->add_option("--trace", tr.trace, "objective trace CSV path");

  eval_opts ev;
  auto* cmd_ev = app.add_subcommand("eval", "score a trained model on a dataset");
  cmd_ev->add_option("--model", ev.model, "model JSON path")->required();
  cmd_ev->add_option("--data", ev.data, "dataset path")->required();
  cmd_ev->add_option("--format", ev.format, "dense|sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  cmd_ev->add_option("--task", ev.task, "auto|classification|regression")
      ->check(CLI::IsMember({"auto", "classification", "regression"}));
  cmd_ev->add_option("--out", ev.out, "metrics JSON path");

  sweep_opts sw;
  auto* cmd_sw = app.add_subcommand("sweep-k", "test error as a function of k at fixed C");
  cmd_sw->add_option("--data", sw.data, "dataset path")->required();
  cmd_sw->add_option("--format", sw.format, "dense|sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  cmd_sw->add_option("--task", sw.task, "auto|classification|regression")
      ->check(CLI::IsMember({"auto", "classification", "regression"}));
  cmd_sw->add_option("--loss", sw.loss, "loss kind");
  cmd_sw->add_option("--C", sw.C, "regularization parameter C");
  cmd_sw->add_option("--repeats", sw.repeats, "random split repeats");
  cmd_sw->add_option("--seed", sw.seed, "split/sampling seed");
  cmd_sw->add_option("--k-values", sw.k_values, "comma list; default log grid");
  cmd_sw->add_option("--iterations", sw.iterations, "stochastic steps per fit");
  cmd_sw->add_option("--eta0", sw.eta0, "step-size scale");
  cmd_sw->add_option("--jobs", sw.jobs, "worker threads over cells");
  cmd_sw->add_option("--out", sw.out, "sweep CSV path")->required();

  grid_opts gr;
  auto* cmd_gr = app.add_subcommand("gridsearch", "validation-driven (k, C) selection");
  cmd_gr->add_option("--data", gr.data, "dataset path")->required();
  cmd_gr->add_option("--format", gr.format, "dense|sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  cmd_gr->add_option("--task", gr.task, "auto|classification|regression")
      ->check(CLI::IsMember({"auto", "classification", "regression"}));
  cmd_gr->add_option("--loss", gr.loss, "loss kind");
  cmd_gr->add_option("--c-min-exp", gr.c_min_exp, "smallest C exponent (base 10)");
  cmd_gr->add_option("--c-max-exp", gr.c_max_exp, "largest C exponent (base 10)");
  cmd_gr->add_option("--k-points", gr.k_points, "k grid resolution");
  cmd_gr->add_option("--repeats", gr.repeats, "random split repeats");
  cmd_gr->add_option("--seed", gr.seed, "split/sampling seed");
  cmd_gr->add_option("--iterations", gr.iterations, "stochastic steps per fit");
  cmd_gr->add_option("--eta0", gr.eta0, "step-size scale");
  cmd_gr->add_option("--jobs", gr.jobs, "worker threads over cells");
  cmd_gr->add_flag("--normalize-targets,!--no-normalize-targets", gr.normalize,
                   "map regression targets onto [0,1] first (default on)");
  cmd_gr->add_option("--out", gr.out, "result JSON path")->required();

  svm_opts sv;
  auto* cmd_sv = app.add_subcommand("svm-dual", "kernel dual solver for the worst-k hinge");
  cmd_sv->add_option("--data", sv.data, "dataset path")->required();
  cmd_sv->add_option("--format", sv.format, "dense|sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  cmd_sv->add_option("--kernel", sv.kernel, "linear|rbf")
      ->check(CLI::IsMember({"linear", "rbf"}));
  cmd_sv->add_option("--gamma", sv.gamma, "rbf width");
  cmd_sv->add_option("--C", sv.C, "regularization parameter C");
  cmd_sv->add_option("--k", sv.k, "worst-k count");
  cmd_sv->add_option("--tol", sv.tol, "stationarity tolerance");
  cmd_sv->add_option("--max-iters", sv.max_iters, "iteration cap (0: 50n)");
  cmd_sv->add_option("--out", sv.out, "model JSON path")->required();

  try {
    app.parse(argc, argv);
    if (cmd_gen->parsed()) return run_generate(gen);
    if (cmd_tr->parsed()) return run_train(tr);
    if (cmd_ev->parsed()) return run_eval(ev);
    if (cmd_sw->parsed()) return run_sweep(sw);
    if (cmd_gr->parsed()) return run_gridsearch(gr);
    if (cmd_sv->parsed()) return run_svm_dual(sv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  } catch (const atk::parameter_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const atk::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_data;
  } catch (const atk::convergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_convergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_usage;
}
