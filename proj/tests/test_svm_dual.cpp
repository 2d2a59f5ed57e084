#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <vector>

#include "atk/model_io.hpp"
#include "atk/rng.hpp"
#include "atk/svm_dual.hpp"
#include "atk/synthetic.hpp"

using namespace atk;

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// random point of { 0 <= z_i <= box, sum z <= cap }: uniform in the box,
// rescaled when the sum constraint is violated (scaling keeps it in the box)
std::vector<double> random_feasible(rng& g, std::size_t n, double box, double cap) {
  std::vector<double> z(n);
  double sum = 0.0;
  for (double& v : z) {
    v = g.next_uniform(0.0, box);
    sum += v;
  }
  if (sum > cap)
    for (double& v : z) v *= cap / sum;
  return z;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// box-constrained QP baseline for the k = n case: plain projected gradient
// with a fixed conservative step and no sum cap
std::vector<double> box_only_qp(const std::vector<double>& K, const std::vector<double>& y,
                                double box, long iters) {
  const std::size_t n = y.size();
  double row_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(K[i * n + j]);
    row_norm = std::max(row_norm, s);
  }
  const double step = 1.0 / row_norm;
  std::vector<double> a(n, 0.0), qa(n, 0.0);
  for (long t = 0; t < iters; ++t) {
    detail::qmatvec(K, y, a, qa);
    for (std::size_t i = 0; i < n; ++i)
      a[i] = std::clamp(a[i] - step * (qa[i] - 1.0), 0.0, box);
  }
  return a;
}

dataset two_point_line() {
  dataset d;
  d.n = 2;
  d.d = 1;
  d.features = {1.0, -1.0};
  d.targets = {1.0, -1.0};
  d.task = task_kind::classification;
  return d;
}

dataset zero_feature_set(std::size_t n) {
  dataset d;
  d.n = n;
  d.d = 1;
  d.features.assign(n, 0.0);
  d.targets.assign(n, 1.0);
  for (std::size_t i = 0; i + 1 < n; i += 2) d.targets[i] = -1.0;
  d.task = task_kind::classification;
  return d;
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("kernel values are pinned") {
  const std::vector<double> x1{1.0, 2.0}, x2{3.0, 4.0};
  kernel_spec lin{kernel_kind::linear, 0.0};
  CHECK(lin(x1, x1) == 5.0);
  CHECK(lin(x1, x2) == 11.0);
  CHECK(lin(x2, x2) == 25.0);

  kernel_spec rbf{kernel_kind::rbf, 0.25};
  CHECK(rbf(x1, x1) == 1.0);
  // squared distance 8, gamma 1/4
  CHECK(rbf(x1, x2) == Catch::Approx(std::exp(-2.0)).margin(1e-15));

  std::vector<double> x3{1.0};
  CHECK_THROWS_AS(lin(x1, x3), shape_error);
  CHECK(to_string(kernel_kind::rbf) == std::string("rbf"));
  CHECK(kernel_kind_from_string("linear") == kernel_kind::linear);
  CHECK_THROWS_AS(kernel_kind_from_string("poly"), parameter_error);
}

TEST_CASE("gram matrices are symmetric and positive semidefinite") {
  const dataset data = generate_gaussian_case(3, 60, 7);
  for (kernel_spec kernel : {kernel_spec{kernel_kind::linear, 0.0},
                             kernel_spec{kernel_kind::rbf, 0.5}}) {
    const std::vector<double> K = kernel_matrix(data, kernel);
    REQUIRE(K.size() == data.n * data.n);
    double trace = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
      trace += K[i * data.n + i];
      for (std::size_t j = 0; j < data.n; ++j)
        CHECK(K[i * data.n + j] == K[j * data.n + i]);
    }
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> M(K.data(), static_cast<Eigen::Index>(data.n),
                               static_cast<Eigen::Index>(data.n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    REQUIRE(eig.info() == Eigen::Success);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * (1.0 + trace));
  }
  CHECK_THROWS_AS(kernel_matrix(data, kernel_spec{kernel_kind::rbf, 0.0}), parameter_error);
}

TEST_CASE("projection onto the capped box is pinned on worked examples") {
  {
    const std::vector<double> v{0.5, -0.2};
    const auto x = projection_polytope(v, 1.0, 1.0);  // cap slack: clip only
    CHECK(x[0] == 0.5);
    CHECK(x[1] == 0.0);
  }
  {
    const std::vector<double> v{1.0, 1.0};
    const auto x = projection_polytope(v, 1.0, 1.0);
    CHECK(x[0] == Catch::Approx(0.5).margin(1e-9));
    CHECK(x[1] == Catch::Approx(0.5).margin(1e-9));
  }
  {
    // shift tau = 0.2 brings the clipped sum 0.8 down onto the cap 0.6
    const std::vector<double> v{2.0, 0.3, -1.0};
    const auto x = projection_polytope(v, 0.5, 0.6);
    CHECK(x[0] == Catch::Approx(0.5).margin(1e-9));
    CHECK(x[1] == Catch::Approx(0.1).margin(1e-9));
    CHECK(x[2] == 0.0);
  }
  CHECK_THROWS_AS(projection_polytope(std::vector<double>{1.0}, 0.0, 1.0), parameter_error);
  CHECK_THROWS_AS(projection_polytope(std::vector<double>{1.0}, 1.0, -2.0), parameter_error);
}

TEST_CASE("projection beats every sampled feasible point") {
  rng g(445566);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + g.next_below(6);
    const double box = trial % 2 ? 0.3 : 1.0;
    const double cap = trial % 3 ? 0.4 : 1.2;
    std::vector<double> v(n);
    for (double& x : v) x = g.next_uniform(-1.5, 2.5);

    const auto proj = projection_polytope(v, box, cap);
    double sum = 0.0;
    for (double x : proj) {
      CHECK(x >= 0.0);
      CHECK(x <= box + 1e-12);
      sum += x;
    }
    CHECK(sum <= cap + 1e-9);

    const double best = dist2(v, proj);
    for (int c = 0; c < 300; ++c)
      CHECK(best <= dist2(v, random_feasible(g, n, box, cap)) + 1e-9);

    const auto twice = projection_polytope(proj, box, cap);
    CHECK(max_abs_diff(proj, twice) <= 1e-12);  // projections are idempotent
  }
}

TEST_CASE("two opposed points solve to the hand-computed dual") {
  const dataset data = two_point_line();
  const kernel_spec kernel{kernel_kind::linear, 0.0};
  // Q = [[1,1],[1,1]]: minimize (a1+a2)^2/2 - (a1+a2) over the box [0, 1/2]^2
  // with sum cap 1; optimum a = (1/2, 1/2), objective -1/2, f(q) = q
  const dual_solution sol = dual_solve(data, kernel, 1.0, 2, 1e-10);
  REQUIRE(sol.alpha.size() == 2);
  CHECK(sol.alpha[0] == Catch::Approx(0.5).margin(1e-6));
  CHECK(sol.alpha[1] == Catch::Approx(0.5).margin(1e-6));
  CHECK(sol.dual_objective == Catch::Approx(-0.5).margin(1e-8));
  CHECK(sol.support_indices.size() == 2);
  CHECK(sol.rho == Catch::Approx(1.0).margin(1e-6));

  CHECK(decision_function(sol, data, kernel, std::vector<double>{0.25}) ==
        Catch::Approx(0.25).margin(1e-6));
  CHECK(decision_function(sol, data, kernel, std::vector<double>{-2.0}) ==
        Catch::Approx(-2.0).margin(1e-5));

  // both alphas sit at the box and the cap: zero duality gap at the optimum
  const double primal = primal_objective(sol, data, kernel, 1.0, 2);
  CHECK(primal == Catch::Approx(-0.5).margin(1e-7));
  CHECK(primal - dual_bound(sol, 1.0, 2, 2) >= -1e-9);
  CHECK(primal - dual_bound(sol, 1.0, 2, 2) <= 1e-7);
}

TEST_CASE("uninformative features drive every alpha onto the cap") {
  const dataset data = zero_feature_set(4);
  const kernel_spec kernel{kernel_kind::linear, 0.0};
  // K = 0 so the objective is -sum(a): the cap C k/n = 1/2 saturates and the
  // symmetric projection spreads it evenly
  const dual_solution sol = dual_solve(data, kernel, 1.0, 2, 1e-10);
  double sum = 0.0;
  for (double a : sol.alpha) {
    CHECK(a == Catch::Approx(0.125).margin(1e-9));
    sum += a;
  }
  CHECK(sum == Catch::Approx(0.5).margin(1e-9));
  CHECK(sol.dual_objective == Catch::Approx(-0.5).margin(1e-9));
  CHECK(sol.rho == 0.0);
  CHECK(decision_function(sol, data, kernel, std::vector<double>{3.0}) == 0.0);
  // hinge part, cap reward, and norm all vanish: gap is exactly zero
  CHECK(primal_objective(sol, data, kernel, 1.0, 2) == Catch::Approx(0.0).margin(1e-12));
  CHECK(dual_bound(sol, 1.0, 2, 4) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("solutions are feasible with small residual and bounded gap") {
  const dataset data = generate_gaussian_case(3, 50, 11);
  for (int k : {1, 5, 25, 50}) {
    const double C = 1.0;
    const kernel_spec kernel{kernel_kind::rbf, 0.5};
    const dual_solution sol = dual_solve(data, kernel, C, k, 1e-8);
    const double box = C / static_cast<double>(data.n);
    const double cap = C * static_cast<double>(k) / static_cast<double>(data.n);
    double sum = 0.0;
    for (double a : sol.alpha) {
      CHECK(a >= 0.0);
      CHECK(a <= box + 1e-12);
      sum += a;
    }
    CHECK(sum <= cap + 1e-8);
    CHECK(sol.residual <= 1e-8);
    CHECK(sol.iterations <= 50 * static_cast<long>(data.n));
    CHECK(sol.rho >= 0.0);
    CHECK(sol.rho <= 1.0);

    const double primal = primal_objective(sol, data, kernel, C, k);
    const double bound = dual_bound(sol, C, k, data.n);
    CHECK(primal >= bound - 1e-9);  // weak duality must always hold
    CHECK(primal - bound <= 1e-4 * (1.0 + std::abs(primal)));
  }
}

TEST_CASE("k = n reduces to the plain box-constrained machine") {
  const dataset data = generate_gaussian_case(1, 30, 5);
  const kernel_spec kernel{kernel_kind::rbf, 0.5};
  const double C = 1.0;
  const dual_solution sol = dual_solve(data, kernel, C, static_cast<int>(data.n), 1e-10);

  const std::vector<double> K = kernel_matrix(data, kernel);
  const auto base = box_only_qp(K, data.targets, C / static_cast<double>(data.n), 20000);
  // rbf on distinct points makes the QP strictly convex, so alphas match
  CHECK(max_abs_diff(sol.alpha, base) <= 1e-5);
}

TEST_CASE("support and margin-error fractions bracket k over n") {
  const dataset data = generate_gaussian_case(3, 40, 3);
  const kernel_spec kernel{kernel_kind::rbf, 0.5};
  for (int k : {4, 12, 20}) {
    const dual_solution sol = dual_solve(data, kernel, 1.0, k, 1e-9);
    const nu_property nu = nu_property_check(sol, data, kernel, 1e-6);
    const double ratio = static_cast<double>(k) / static_cast<double>(data.n);
    CHECK(nu.margin_error_fraction <= ratio + 1e-12);
    CHECK(nu.support_fraction >= ratio - 1e-12);
  }
}

TEST_CASE("an exhausted iteration budget reports the last iterate") {
  const dataset data = generate_gaussian_case(1, 30, 9);
  const kernel_spec kernel{kernel_kind::rbf, 0.5};
  try {
    dual_solve(data, kernel, 10.0, 3, 1e-10, 1);
    FAIL("expected dual_convergence_error");
  } catch (const dual_convergence_error& e) {
    CHECK(e.last_iterate.alpha.size() == data.n);
    CHECK(e.last_iterate.residual > 1e-10);
    CHECK(std::string(e.what()).find("no convergence") != std::string::npos);
  }
  // the same failure must be catchable through the family base
  CHECK_THROWS_AS(dual_solve(data, kernel, 10.0, 3, 1e-10, 1), convergence_error);
}

TEST_CASE("dual solver rejects bad setups") {
  const dataset cls = generate_gaussian_case(1, 20, 1);
  const dataset reg = generate_sinc(20, 1);
  const kernel_spec kernel{kernel_kind::linear, 0.0};
  CHECK_THROWS_AS(dual_solve(reg, kernel, 1.0, 2), label_error);
  CHECK_THROWS_AS(dual_solve(cls, kernel, 0.0, 2), parameter_error);
  CHECK_THROWS_AS(dual_solve(cls, kernel, 1.0, 0), parameter_error);
  CHECK_THROWS_AS(dual_solve(cls, kernel, 1.0, 21), parameter_error);
  CHECK_THROWS_AS(dual_solve(cls, kernel, 1.0, 2, 0.0), parameter_error);
  CHECK_THROWS_AS(dual_solve(cls, kernel, 1.0, 2, 1e-6, -1), parameter_error);

  dataset one;
  one.n = 1;
  one.d = 1;
  one.features = {1.0};
  one.targets = {1.0};
  one.task = task_kind::classification;
  CHECK_THROWS_AS(dual_solve(one, kernel, 1.0, 1), parameter_error);
}

TEST_CASE("saved kernel models carry everything needed to predict") {
  const dataset data = generate_gaussian_case(1, 24, 2);
  const kernel_spec kernel{kernel_kind::rbf, 0.5};
  const double C = 1.0;
  const int k = 6;
  const dual_solution sol = dual_solve(data, kernel, C, k, 1e-8);
  const auto path = temp_path("atk_dual_model_test.json");
  save_dual_model(sol, data, kernel, C, k, path.string());

  std::ifstream in(path);
  REQUIRE(in.good());
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j.at("type") == "kernel");
  CHECK(j.at("kernel").at("kind") == "rbf");
  CHECK(j.at("k") == k);
  CHECK(j.at("alpha").size() == data.n);
  REQUIRE(j.at("support_indices").size() == sol.support_indices.size());
  REQUIRE(j.at("support_vectors").size() == sol.support_indices.size());

  // rebuild the decision function from the file alone
  const std::vector<double> query{0.7, -0.4};
  double f = 0.0;
  for (std::size_t s = 0; s < sol.support_indices.size(); ++s) {
    const std::size_t idx = j.at("support_indices")[s].get<std::size_t>();
    const std::vector<double> sv = j.at("support_vectors")[s].get<std::vector<double>>();
    const double a = j.at("alpha")[idx].get<double>();
    const double y = j.at("labels")[idx].get<double>();
    f += a * y * kernel(sv, query);
  }
  CHECK(f == Catch::Approx(decision_function(sol, data, kernel, query)).margin(1e-12));
  std::filesystem::remove(path);
}
