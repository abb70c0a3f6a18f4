#include <doctest.h>

#include <algorithm>
#include <random>

#include "rbr/error.hpp"
#include "rbr/sampler.hpp"
#include "test_util.hpp"

using namespace rbr;

namespace {

// Label 1 iff w.x + b >= 0.
MlpModel linear_model(const Vector& w, double b) {
  DenseLayer l{Matrix(1, w.size()), Vector::Constant(1, b)};
  l.weights.row(0) = w.transpose();
  return MlpModel({l});
}

Dataset random_dataset(std::mt19937_64& rng, int n, int p) {
  Dataset d;
  d.features.resize(n, p);
  for (int i = 0; i < n; ++i) d.features.row(i) = testutil::random_vector(rng, p, -2, 2).transpose();
  d.labels.assign(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < p; ++j) d.meta.push_back({"f" + std::to_string(j), false});
  d.scaler = Scaler::identity(p);
  return d;
}

}  // namespace

TEST_CASE("nearest counterfactuals are a prefix of the brute-force order") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const int p = 1 + static_cast<int>(rng() % 3);
    Dataset d = random_dataset(rng, 150, p);
    // Coarse grid coordinates make distance ties likely.
    d.features = (d.features * 2.0).array().round() / 2.0;
    const MlpModel m = linear_model(Vector::Ones(p), 0.0);
    const Vector x0 = Vector::Constant(p, -1.5);
    std::vector<std::pair<double, Eigen::Index>> all;
    for (Eigen::Index i = 0; i < d.rows(); ++i)
      if (m.predict_label(d.row(i)) == 1) all.emplace_back((d.row(i) - x0).cwiseAbs().sum(), i);
    std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first < b.first; });
    const std::size_t k = 1 + rng() % 40;
    const auto nc = nearest_counterfactuals(x0, d, m, k);
    REQUIRE(nc.rows.size() == std::min(k, all.size()));
    for (std::size_t j = 0; j < nc.rows.size(); ++j) CHECK(nc.rows[j] == all[j].second);
  }
}

TEST_CASE("counterfactual search on a favourable input fails") {
  std::mt19937_64 rng(1);
  const Dataset d = random_dataset(rng, 10, 2);
  const MlpModel m = linear_model(Vector::Ones(2), 0.0);
  try {
    nearest_counterfactuals(Vector::Ones(2), d, m, 3);
    FAIL("expected already favourable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::already_favorable);
  }
}

TEST_CASE("bisection lands on the favourable side of a linear boundary") {
  Vector w(2);
  w << 1.0, 0.0;
  const MlpModel m = linear_model(w, 0.0);
  Vector a(2), b(2);
  a << -1.0, 0.0;
  b << 3.0, 0.0;
  const Vector xb = boundary_bisection(a, b, m, 1e-4);
  CHECK(m.predict_label(xb) == 1);
  CHECK(std::abs(xb[0]) <= 4.0 * 1e-4 * 4.0);
  CHECK(xb[1] == 0.0);
  CHECK_THROWS_AS(boundary_bisection(a, a, m), Error);
}

TEST_CASE("select_boundary takes the first l1 minimiser") {
  std::vector<Vector> c(3, Vector::Zero(2));
  c[0] << 2, 0;
  c[1] << 0, 1;
  c[2] << 1, 0;
  CHECK(select_boundary(Vector::Zero(2), c) == c[1]);
}

TEST_CASE("uniform ball samples lie inside and fill the volume") {
  for (int p : {1, 2, 5}) {
    const Vector center = Vector::Constant(p, 0.3);
    const auto s = sample_uniform_ball(center, 0.5, 4000, 17);
    int inner = 0;
    Vector mean = Vector::Zero(p);
    for (const auto& v : s) {
      const double r = (v - center).norm();
      CHECK(r <= 0.5 + 1e-12);
      inner += r <= 0.25;
      mean += v;
    }
    mean /= 4000.0;
    // Volume fraction of the half-radius ball is 2^-p.
    CHECK(static_cast<double>(inner) / 4000.0 == doctest::Approx(std::pow(0.5, p)).epsilon(0.15));
    CHECK((mean - center).norm() < 0.05);
  }
}

TEST_CASE("local sample set is partitioned by the classifier and seeded") {
  std::mt19937_64 rng(4);
  Dataset d = random_dataset(rng, 200, 2);
  Vector w(2);
  w << 1.0, 1.0;
  const MlpModel m = linear_model(w, -0.5);
  Vector x0(2);
  x0 << -1.0, -1.0;
  SamplerConfig cfg;
  cfg.seed = 99;
  const LocalSampleSet ls = build_local_sample_set(x0, d, m, cfg);
  CHECK(ls.size() == 200);
  CHECK(ls.gamma0 + ls.gamma1 == doctest::Approx(1.0));
  CHECK(ls.gamma1 == doctest::Approx(static_cast<double>(ls.samples1.size()) / 200.0));
  for (const auto& s : ls.samples0) {
    CHECK(m.predict_label(s) == 0);
    CHECK((s - ls.x_b).norm() <= ls.radius + 1e-12);
  }
  for (const auto& s : ls.samples1) {
    CHECK(m.predict_label(s) == 1);
    CHECK((s - ls.x_b).norm() <= ls.radius + 1e-12);
  }
  CHECK(m.predict_label(ls.x_b) == 1);
  CHECK(std::abs(w.dot(ls.x_b) - 0.5) < 1e-3);
  const LocalSampleSet again = build_local_sample_set(x0, d, m, cfg);
  CHECK(again.x_b == ls.x_b);
  CHECK(again.samples0.size() == ls.samples0.size());
  CHECK(again.samples1.front() == ls.samples1.front());
}

TEST_CASE("one-sided neighbourhoods are reported") {
  LocalSampleSet ls;
  ls.x0 = Vector::Zero(2);
  ls.x_b = Vector::Zero(2);
  ls.samples1.push_back(Vector::Zero(2));
  try {
    ls.validate();
    FAIL("expected degenerate neighbourhood");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_neighborhood);
  }
}
