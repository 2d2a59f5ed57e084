#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "atk/dataset.hpp"
#include "atk/synthetic.hpp"

using namespace atk;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "atk-data-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

bool datasets_equal(const dataset& a, const dataset& b) {
  return a.n == b.n && a.d == b.d && a.features == b.features && a.targets == b.targets &&
         a.task == b.task;
}

// exact separability test for 2-d data and lines through the origin:
// a separating w exists iff all class-corrected points y_i x_i fit inside
// an open half-plane, i.e. their directions leave an angular gap > pi
bool separable_through_origin(const dataset& data) {
  std::vector<double> angles;
  angles.reserve(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto r = data.row(i);
    angles.push_back(std::atan2(data.targets[i] * r[1], data.targets[i] * r[0]));
  }
  std::sort(angles.begin(), angles.end());
  double max_gap = angles.front() + 2.0 * std::acos(-1.0) - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i)
    max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  return max_gap > std::acos(-1.0);
}

}  // namespace

TEST_CASE("split sizes follow the 1/2, 1/4, rest rule") {
  const auto p8 = make_split(8, 1);
  CHECK(p8.train.size() == 4);
  CHECK(p8.val.size() == 2);
  CHECK(p8.test.size() == 2);

  const auto p10 = make_split(10, 1);
  CHECK(p10.train.size() == 5);
  CHECK(p10.val.size() == 2);
  CHECK(p10.test.size() == 3);

  const auto p201 = make_split(201, 9);
  CHECK(p201.train.size() == 101);
  CHECK(p201.val.size() == 50);
  CHECK(p201.test.size() == 50);

  CHECK_THROWS_AS(make_split(3, 1), parameter_error);
}

TEST_CASE("splits are deterministic partitions") {
  const auto a = make_split(57, 123);
  const auto b = make_split(57, 123);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);

  const auto c = make_split(57, 124);
  CHECK(a.train != c.train);

  std::set<std::size_t> seen;
  for (auto part : {&a.train, &a.val, &a.test})
    for (std::size_t i : *part) {
      CHECK(i < 57);
      CHECK(seen.insert(i).second);  // no index twice
    }
  CHECK(seen.size() == 57);
}

TEST_CASE("target normalization maps onto [0,1] and keeps the range") {
  dataset d;
  d.n = 3;
  d.d = 1;
  d.features = {1.0, 2.0, 3.0};
  d.targets = {2.0, 4.0, 6.0};
  d.task = task_kind::regression;
  const auto [scaled, s] = normalize_targets(d);
  CHECK(scaled.targets == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(s.min == 2.0);
  CHECK(s.max == 6.0);

  dataset unit = d;
  unit.targets = {0.0, 1.0, 0.25};
  const auto [same, s2] = normalize_targets(unit);
  CHECK(same.targets == unit.targets);
  CHECK(s2.min == 0.0);
  CHECK(s2.max == 1.0);

  dataset flat = d;
  flat.targets = {3.0, 3.0, 3.0};
  CHECK_THROWS_AS(normalize_targets(flat), domain_error);

  dataset cls = d;
  cls.targets = {1.0, -1.0, 1.0};
  cls.task = task_kind::classification;
  CHECK_THROWS_AS(normalize_targets(cls), parameter_error);
}

TEST_CASE("dense CSV parses values and reports broken lines") {
  const auto p = temp_file("dense_basic.csv");
  write_file(p, "1.5,2.0,1\n-0.5,0.25,-1\n");
  const auto d = load_dense_csv(p.string());
  CHECK(d.n == 2);
  CHECK(d.d == 2);
  CHECK(d.task == task_kind::classification);
  CHECK(d.row(1)[0] == -0.5);
  CHECK(d.targets[1] == -1.0);

  write_file(p, "1.0,2.0\n0.5,oops\n");
  try {
    load_dense_csv(p.string());
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  write_file(p, "1.0,2.0,1\n1.0,1\n");
  CHECK_THROWS_AS(load_dense_csv(p.string()), parse_error);
  write_file(p, "");
  CHECK_THROWS_AS(load_dense_csv(p.string()), data_error);
  write_file(p, "1.0,2.0,0.7\n");
  CHECK(load_dense_csv(p.string()).task == task_kind::regression);
  CHECK_THROWS_AS(load_dense_csv(p.string(), task_kind::classification), label_error);
}

TEST_CASE("sparse rows fill absent coordinates with zero") {
  const auto p = temp_file("sparse_basic.txt");
  write_file(p, "+1 1:0.5 3:2.0\n-1 2:1.0\n");
  const auto d = load_sparse(p.string());
  CHECK(d.n == 2);
  CHECK(d.d == 3);
  CHECK(d.features == std::vector<double>{0.5, 0.0, 2.0, 0.0, 1.0, 0.0});
  CHECK(d.targets == std::vector<double>{1.0, -1.0});
  CHECK(d.task == task_kind::classification);

  write_file(p, "+1 0:1.0\n");
  CHECK_THROWS_AS(load_sparse(p.string()), parse_error);
  write_file(p, "+1 1:abc\n");
  CHECK_THROWS_AS(load_sparse(p.string()), parse_error);
  write_file(p, "+1 2:1.0 2:3.0\n");
  CHECK_THROWS_AS(load_sparse(p.string()), parse_error);
  write_file(p, "+1 nocolon\n");
  CHECK_THROWS_AS(load_sparse(p.string()), parse_error);
}

TEST_CASE("writers round-trip datasets exactly") {
  const auto gauss = generate_gaussian_case(3, 57, 321);
  const auto pd = temp_file("roundtrip.csv");
  save_dense_csv(gauss, pd.string());
  CHECK(datasets_equal(gauss, load_dense_csv(pd.string())));

  const auto ps = temp_file("roundtrip.sparse");
  save_sparse(gauss, ps.string());
  CHECK(datasets_equal(gauss, load_sparse(ps.string())));

  const auto sinc_set = generate_sinc(40, 5);
  const auto pr = temp_file("roundtrip_reg.csv");
  save_dense_csv(sinc_set, pr.string());
  CHECK(datasets_equal(sinc_set, load_dense_csv(pr.string())));
}

TEST_CASE("gaussian case 1 is balanced, linearly biased, not separable") {
  for (std::uint64_t seed : {1ull, 7ull, 42ull, 1000ull, 31415ull}) {
    const auto d = generate_gaussian_case(1, 200, seed);
    CHECK(d.n == 200);
    CHECK(d.d == 2);
    const auto pos = std::count(d.targets.begin(), d.targets.end(), 1.0);
    CHECK(pos == 100);

    // the line through the origin normal to the difference of the cloud
    // centers gets the bulk of the points right ...
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < d.n; ++i) {
      const auto r = d.row(i);
      if (d.targets[i] * (3.01 * r[0] + 1.22 * r[1]) <= 0.0) ++wrong;
    }
    CHECK(static_cast<double>(wrong) / static_cast<double>(d.n) < 0.12);

    // ... but the clouds overlap on purpose, so no direction gets them all
    CHECK_FALSE(separable_through_origin(d));
  }
}

TEST_CASE("outlier cases append exactly one flipped point to their base") {
  const auto base = generate_gaussian_case(1, 200, 99);
  const auto with_outlier = generate_gaussian_case(2, 200, 99);
  REQUIRE(with_outlier.n == base.n + 1);
  CHECK(std::equal(base.features.begin(), base.features.end(),
                   with_outlier.features.begin()));
  CHECK(std::equal(base.targets.begin(), base.targets.end(), with_outlier.targets.begin()));
  // the extra point is labeled positive but sits in the negative cloud
  const auto extra = with_outlier.row(base.n);
  CHECK(with_outlier.targets[base.n] == 1.0);
  CHECK(extra[0] < 0.0);
  CHECK(extra[1] < 0.0);

  for (int c : {4, 6}) {
    const auto b = generate_gaussian_case(c - 1, 100, 5);
    const auto o = generate_gaussian_case(c, 100, 5);
    CHECK(o.n == b.n + 1);
    CHECK(std::equal(b.targets.begin(), b.targets.end(), o.targets.begin()));
  }
}

TEST_CASE("case 5 keeps the negative class a small minority") {
  const auto d = generate_gaussian_case(5, 200, 3);
  const auto neg = std::count(d.targets.begin(), d.targets.end(), -1.0);
  CHECK(static_cast<double>(neg) / static_cast<double>(d.n) <= 0.2);
  CHECK(neg > 0);
}

TEST_CASE("generators are deterministic and seed-sensitive") {
  for (int c = 1; c <= 6; ++c) {
    const auto a = generate_gaussian_case(c, 60, 11);
    const auto b = generate_gaussian_case(c, 60, 11);
    CHECK(datasets_equal(a, b));
    const auto other = generate_gaussian_case(c, 60, 12);
    CHECK(a.features != other.features);
  }
  CHECK(datasets_equal(generate_sinc(50, 8), generate_sinc(50, 8)));
  CHECK(generate_sinc(50, 8).targets != generate_sinc(50, 9).targets);
  CHECK_THROWS_AS(generate_gaussian_case(7, 100, 1), parameter_error);
  CHECK_THROWS_AS(generate_gaussian_case(0, 100, 1), parameter_error);
}

TEST_CASE("sinc generator: clean function values and bounded features") {
  CHECK(sinc(0.0) == 1.0);
  CHECK(sinc(std::acos(-1.0)) == Catch::Approx(0.0).margin(1e-12));
  const auto d = generate_sinc(300, 17);
  CHECK(d.d == 10);
  CHECK(d.task == task_kind::regression);
  for (double v : d.features) {
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
  // feature j is the rbf response at center j: a sample drawn right on a
  // center would score 1; everything else decays with distance
  const auto centers = sinc_centers();
  CHECK(centers.front() == -9.0);
  CHECK(centers.back() == 9.0);
  for (std::size_t j = 1; j < centers.size(); ++j)
    CHECK(centers[j] - centers[j - 1] == 2.0);
}

TEST_CASE("generator config document is versioned json") {
  const std::string doc = gaussian_case_config_json();
  CHECK(doc.find("\"config_version\": 1") != std::string::npos);
  for (int c = 1; c <= 6; ++c)
    CHECK(doc.find("\"case\": " + std::to_string(c)) != std::string::npos);
}
