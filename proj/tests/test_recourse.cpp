#include <doctest.h>

#include <random>

#include "rbr/error.hpp"
#include "rbr/likelihood_bounds.hpp"
#include "rbr/recourse.hpp"
#include "test_util.hpp"

using namespace rbr;

namespace {

LocalSampleSet fixture(std::mt19937_64& rng, Eigen::Index p, int n0, int n1, double spread = 1.0) {
  LocalSampleSet ls;
  ls.x0 = Vector::Constant(p, -1.0);
  ls.x_b = Vector::Zero(p);
  for (int i = 0; i < n0; ++i) ls.samples0.push_back(testutil::random_vector(rng, p, -spread, 0.2 * spread));
  for (int i = 0; i < n1; ++i) ls.samples1.push_back(testutil::random_vector(rng, p, -0.2 * spread, spread));
  ls.gamma0 = static_cast<double>(n0) / (n0 + n1);
  ls.gamma1 = static_cast<double>(n1) / (n0 + n1);
  ls.radius = spread;
  return ls;
}

double naive_kde(const Vector& x, const LocalSampleSet& ls, double h) {
  double num = 0, den = 0;
  for (const auto& s : ls.samples0) num += std::exp(-(x - s).squaredNorm() / (2 * h * h));
  for (const auto& s : ls.samples1) den += std::exp(-(x - s).squaredNorm() / (2 * h * h));
  return num / den;
}

MlpModel linear_model(const Vector& w, double b) {
  DenseLayer l{Matrix(1, w.size()), Vector::Constant(1, b)};
  l.weights.row(0) = w.transpose();
  return MlpModel({l});
}

double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1e-12, b.norm()); }

}  // namespace

TEST_CASE("kde objective examples") {
  LocalSampleSet ls;
  ls.x0 = Vector::Zero(2);
  ls.x_b = Vector::Zero(2);
  ls.samples0 = {Vector::Constant(2, 1.0)};
  ls.samples1 = {Vector::Constant(2, -1.0)};
  ls.gamma0 = ls.gamma1 = 0.5;
  CHECK(kde_objective(Vector::Zero(2), ls, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  ls.samples0 = {Vector::Constant(2, 5.0)};
  CHECK(kde_objective(Vector::Constant(2, -1.0), ls, 1.0) < 1e-10);

  std::mt19937_64 rng(1);
  const auto f = fixture(rng, 2, 10, 10);
  for (int t = 0; t < 20; ++t) {
    const Vector x = testutil::random_vector(rng, 2, -1, 1);
    CHECK(kde_objective(x, f, 0.7) == doctest::Approx(naive_kde(x, f, 0.7)).epsilon(1e-12));
  }
  LocalSampleSet empty = f;
  empty.samples1.clear();
  CHECK_THROWS_AS(kde_objective(Vector::Zero(2), empty, 1.0), Error);
}

TEST_CASE("kde log gradient matches central differences") {
  std::mt19937_64 rng(2);
  const auto f = fixture(rng, 3, 8, 9);
  for (int t = 0; t < 10; ++t) {
    const Vector x = testutil::random_vector(rng, 3, -1, 1);
    Vector fd(3);
    for (int j = 0; j < 3; ++j) {
      Vector a = x, b = x;
      a[j] += 1e-6;
      b[j] -= 1e-6;
      fd[j] = (log_kde_objective(a, f, 0.8) - log_kde_objective(b, f, 0.8)) / 2e-6;
    }
    CHECK(rel_err(log_kde_gradient(x, f, 0.8), fd) <= 1e-6);
  }
}

TEST_CASE("robust objective collapses to kde at zero radii") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 4);
    const auto f = fixture(rng, p, 5 + static_cast<int>(rng() % 10), 5 + static_cast<int>(rng() % 10));
    RecourseConfig cfg;
    cfg.sigma = 0.5 + 0.1 * t;
    RobustObjective obj(f, cfg);
    for (int k = 0; k < 20; ++k) {
      const Vector x = testutil::random_vector(rng, p, -1.5, 1.5);
      CHECK(obj.log_value(x) == doctest::Approx(log_kde_objective(x, f, cfg.sigma)).epsilon(1e-12));
      CHECK(rel_err(obj.gradient(x), log_kde_gradient(x, f, cfg.sigma)) <= 1e-9);
    }
  }
}

TEST_CASE("robust objective is monotone in both radii") {
  std::mt19937_64 rng(4);
  const auto f = fixture(rng, 2, 10, 10);
  const Vector x = testutil::random_vector(rng, 2, -0.5, 0.5);
  double prev = -INFINITY;
  for (int k = 0; k <= 6; ++k) {
    RecourseConfig cfg;
    cfg.eps0 = 0.2 * k;
    cfg.eps1 = 0.3;
    const double v = log_robust_objective(x, f, cfg);
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
  prev = -INFINITY;
  for (int k = 0; k <= 6; ++k) {
    RecourseConfig cfg;
    cfg.eps0 = 0.3;
    cfg.eps1 = 0.2 * k;
    const double v = log_robust_objective(x, f, cfg);
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
}

TEST_CASE("robust objective dominates feasible mixture ratios") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  const auto f = fixture(rng, 2, 6, 6);
  RecourseConfig cfg;
  cfg.eps0 = cfg.eps1 = 0.5;
  const double kLog2Pi = std::log(2 * M_PI);
  auto mixture = [&](const Vector& x, const std::vector<Vector>& samples) {
    double acc = 0;
    for (const auto& s : samples) {
      Vector z(4);
      for (int j = 0; j < 4; ++j) z[j] = g(rng);
      z *= 0.5 * u(rng) / z.norm();
      const Vector mu = s + z.head(2);
      const double d1 = cfg.sigma + std::abs(z[2]), d2 = cfg.sigma + std::abs(z[3]);
      const double th = 2 * M_PI * u(rng);
      Eigen::Matrix2d v;
      v << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
      const Eigen::Matrix2d cov = v * Eigen::Vector2d(d1 * d1, d2 * d2).asDiagonal() * v.transpose();
      const Eigen::Vector2d r = x - mu;
      acc += std::exp(-0.5 * r.dot(cov.inverse() * r) - 0.5 * std::log(cov.determinant()) - kLog2Pi);
    }
    return acc / static_cast<double>(samples.size());
  };
  RobustObjective obj(f, cfg);
  for (int t = 0; t < 50; ++t) {
    const Vector x = testutil::random_vector(rng, 2, -1, 1);
    const double bound = obj.log_value(x);
    for (int k = 0; k < 20; ++k) {
      const double ratio = std::log(f.gamma0 * mixture(x, f.samples0)) - std::log(f.gamma1 * mixture(x, f.samples1));
      CHECK(ratio <= bound + 1e-9);
    }
  }
}

TEST_CASE("envelope gradient matches finite differences") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng() % 2);
    const auto f = fixture(rng, p, 8, 8);
    RecourseConfig cfg;
    cfg.eps0 = 0.3;
    cfg.eps1 = 0.4;
    RobustObjective obj(f, cfg);
    const Vector x = testutil::random_vector(rng, p, -1, 1);
    CHECK(rel_err(obj.gradient(x), obj.finite_difference_gradient(x, 1e-5)) <= 1e-3);
  }
}

TEST_CASE("gradient vanishes along a symmetry axis") {
  // Samples mirrored across x1 = 0; x on the axis.
  LocalSampleSet ls;
  ls.x0 = Vector::Zero(2);
  ls.x_b = Vector::Zero(2);
  for (double s : {-1.0, 1.0}) {
    ls.samples0.push_back((Vector(2) << s * 0.7, -0.5).finished());
    ls.samples1.push_back((Vector(2) << s * 0.4, 0.8).finished());
  }
  ls.gamma0 = ls.gamma1 = 0.5;
  RecourseConfig cfg;
  cfg.eps0 = 0.4;
  cfg.eps1 = 0.6;
  const Vector x = (Vector(2) << 0.0, 0.1).finished();
  CHECK(std::abs(robust_gradient(x, ls, cfg)[0]) <= 1e-6);
}

TEST_CASE("kde recourse stays feasible and descends") {
  std::mt19937_64 rng(7);
  const auto f = fixture(rng, 2, 10, 10);
  RecourseConfig cfg;
  cfg.sigma = 0.5;
  const auto r = kde_recourse(f.x0, f, cfg);
  CHECK(r.cost <= l1_distance(f.x0, f.x_b) + 1e-9);
  CHECK(r.cost == doctest::Approx((r.x_prime - f.x0).lpNorm<1>()).epsilon(1e-12));
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);

  // Symmetric two-sample fixture: descent moves toward the class-1 sample.
  LocalSampleSet two;
  two.x0 = (Vector(2) << -1.0, 0.0).finished();
  two.x_b = Vector::Zero(2);
  two.samples0 = {(Vector(2) << -0.5, 0.0).finished()};
  two.samples1 = {(Vector(2) << 0.5, 0.0).finished()};
  two.gamma0 = two.gamma1 = 0.5;
  cfg.delta_plus = 0.5;
  const auto r2 = kde_recourse(two.x0, two, cfg);
  CHECK(r2.objective_trace.back() < r2.objective_trace.front());
  CHECK(r2.x_prime[0] > 0.0);
}

TEST_CASE("kde recourse beats random feasible points") {
  std::mt19937_64 rng(8);
  const auto f = fixture(rng, 2, 10, 10);
  RecourseConfig cfg;
  cfg.sigma = 0.6;
  cfg.delta_plus = 0.5;
  const auto r = kde_recourse(f.x0, f, cfg);
  const FeasibleSet set = feasible_set(f.x0, f, cfg);
  const double best = log_kde_objective(r.x_prime, f, cfg.sigma);
  for (int t = 0; t < 1000; ++t) {
    const Vector y = set.project(f.x0 + testutil::random_vector(rng, 2, -set.delta, set.delta));
    CHECK(best <= log_kde_objective(y, f, cfg.sigma) + 1e-6);
  }
}

TEST_CASE("robust recourse collapses to kde recourse") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const auto f = fixture(rng, 2, 8, 8);
    RecourseConfig cfg;
    cfg.delta_plus = 0.3;
    const auto a = robust_recourse(f.x0, f, cfg);
    const auto b = kde_recourse(f.x0, f, cfg);
    CHECK((a.x_prime - b.x_prime).norm() <= 1e-6);
  }
}

TEST_CASE("robust recourse honours the frozen mask and moves deeper") {
  std::mt19937_64 rng(10);
  const MlpModel model = linear_model((Vector(2) << 1.0, 1.0).finished(), 0.0);
  LocalSampleSet ls;
  ls.x0 = (Vector(2) << -1.0, -1.0).finished();
  ls.x_b = (Vector(2) << 0.001, 0.0).finished();
  for (const auto& s : std::vector<Vector>(200, Vector::Zero(2))) {
    (void)s;
    const Vector v = ls.x_b + testutil::random_vector(rng, 2, -0.2, 0.2);
    (model.predict_label(v) ? ls.samples1 : ls.samples0).push_back(v);
  }
  ls.gamma0 = static_cast<double>(ls.samples0.size()) / 200.0;
  ls.gamma1 = static_cast<double>(ls.samples1.size()) / 200.0;
  RecourseConfig cfg;
  cfg.eps1 = 0.5;
  cfg.delta_plus = 0.5;
  const auto r = robust_recourse(ls.x0, ls, cfg, &model);
  CHECK(model.predict_proba(r.x_prime) > model.predict_proba(ls.x_b));
  CHECK(r.valid.value());
  CHECK(r.converged);
  CHECK(r.cost <= r.delta + 1e-9);

  cfg.frozen_mask = {true, false};
  const auto frozen = robust_recourse(ls.x0, ls, cfg, &model);
  CHECK(frozen.x_prime[0] == ls.x0[0]);
}

TEST_CASE("boundary-centred constraint") {
  std::mt19937_64 rng(11);
  const auto f = fixture(rng, 2, 8, 8);
  RecourseConfig cfg;
  cfg.center = ConstraintCenter::boundary;
  cfg.delta_prime = 0.25;
  const auto r = kde_recourse(f.x0, f, cfg);
  CHECK((r.x_prime - f.x_b).lpNorm<1>() <= 0.25 + 1e-9);
}

TEST_CASE("wachter on a linear score") {
  const MlpModel model = linear_model((Vector(2) << 1.0, 0.0).finished(), 0.0);
  const Vector x0 = (Vector(2) << -1.0, 0.0).finished();
  RecourseConfig cfg;
  const auto r = wachter_recourse(x0, model, cfg);
  REQUIRE(r.converged);
  CHECK(model.predict_label(r.x_prime) == 1);
  CHECK(r.x_prime[0] >= 0.0);
  CHECK(r.x_prime[0] <= 0.05);
  CHECK(std::abs(r.x_prime[1]) <= 1e-6);
  CHECK(r.cost == doctest::Approx(1.0).epsilon(0.05));
  try {
    wachter_recourse(Vector::Constant(2, 1.0), model, cfg);
    FAIL("expected already favourable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::already_favorable);
  }
}

TEST_CASE("recourse config validation") {
  RecourseConfig cfg;
  cfg.sigma = 0.0;
  CHECK_THROWS_AS(cfg.validate(2), Error);
  cfg.sigma = 1.0;
  cfg.delta_plus = -1.0;
  CHECK_THROWS_AS(cfg.validate(2), Error);
  CHECK(parse_method("rbr") == RecourseMethod::robust);
  CHECK_THROWS_AS(parse_method("roar"), Error);
}
