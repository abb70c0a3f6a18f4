// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rbr/classifier.hpp"
#include "rbr/config.hpp"
#include "rbr/harness.hpp"
#include "rbr/likelihood_bounds.hpp"
#include "rbr/projection.hpp"
#include "rbr/recourse.hpp"
#include "rbr/seeding.hpp"
#include "test_util.hpp"

using namespace rbr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Reduced objectives typed in directly from the two-variable problems.
double oracle_opt(double dist, double sigma, int p, double a, double d) {
  return std::log(d) + (dist - a) * (dist - a) / (2 * d * d) + (p - 1) * std::log(sigma);
}

double oracle_pess(double dist, double sigma, double eps, int p, double a, double d1) {
  double v = -std::log(d1) - (dist + a) * (dist + a) / (2 * d1 * d1);
  if (p > 1) {
    const double slack = std::max(eps * eps - a * a - (d1 - sigma) * (d1 - sigma), 0.0);
    v -= (p - 1) * std::log(sigma + std::sqrt(slack / (p - 1)));
  }
  return v;
}

// Minimum over a res x res polar lattice of the feasible region
// {a >= 0, d >= sigma, (a / a_max)^2 + ((d - sigma) / d_span)^2 <= 1}. Every
// lattice point is feasible and the boundary arc is sampled exactly.
double grid_min(const std::function<double(double, double)>& f, double a_max, double d_span, double sigma, int res) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < res; ++i) {
    const double rho = static_cast<double>(i) / (res - 1);
    for (int j = 0; j < res; ++j) {
      const double phi = 0.5 * std::numbers::pi * j / (res - 1);
      const double a = std::clamp(a_max * rho * std::cos(phi), 0.0, a_max);
      const double d = sigma + std::clamp(d_span * rho * std::sin(phi), 0.0, d_span);
      best = std::min(best, f(a, d));
    }
  }
  return best;
}

void criterion_subproblems() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const int dims[] = {1, 2, 3, 5, 10};
  std::uniform_real_distribution<double> ud(0, 3), ue(0, 2), us(0.3, 1.5);
  double worst = 0.0;
  int n_opt = 0, n_pess = 0;
  for (int t = 0; t < 200; ++t) {
    const int p = dims[rng() % 5];
    const double dist = ud(rng), eps = ue(rng), sigma = us(rng);
    const AmbiguityBall ball{eps, sigma, p};
    double got = 0.0, want = 0.0;
    if (t % 2 == 0) {
      ++n_opt;
      got = optimistic_alpha(dist, ball).alpha;
      want = grid_min([&](double a, double d) { return oracle_opt(dist, sigma, p, a, d); }, eps, eps, sigma, 600);
    } else {
      ++n_pess;
      got = pessimistic_alpha(dist, ball).alpha;
      want = grid_min([&](double a, double d) { return oracle_pess(dist, sigma, eps, p, a, d); }, eps,
                      eps / std::sqrt(static_cast<double>(p)), sigma, 600);
    }
    worst = std::max(worst, std::abs(got - want));
  }
  const double secs = seconds_since(t0);
  report(1, worst <= 2e-3 && secs < 60.0,
         fmt("%d optimistic + %d pessimistic, max |alpha - grid| = %.3g, %.1f s", n_opt, n_pess, worst, secs));
}

LocalSampleSet random_set(std::mt19937_64& rng, Eigen::Index p, int n0, int n1) {
  LocalSampleSet ls;
  ls.x0 = Vector::Constant(p, -1.0);
  ls.x_b = Vector::Zero(p);
  for (int i = 0; i < n0; ++i) ls.samples0.push_back(testutil::random_vector(rng, p, -1.0, 0.3));
  for (int i = 0; i < n1; ++i) ls.samples1.push_back(testutil::random_vector(rng, p, -0.3, 1.0));
  ls.gamma0 = static_cast<double>(n0) / (n0 + n1);
  ls.gamma1 = static_cast<double>(n1) / (n0 + n1);
  ls.radius = 1.0;
  return ls;
}

void criterion_collapse() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    if (t % 50 == 0) rng.discard(1);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(t % 5);
    const LocalSampleSet ls = random_set(rng, p, 3 + t % 7, 2 + t % 5);
    RecourseConfig cfg;
    cfg.sigma = 0.3 + 0.1 * (t % 10);
    const Vector x = testutil::random_vector(rng, p, -2, 2);
    worst = std::max(worst, std::abs(log_robust_objective(x, ls, cfg) - log_kde_objective(x, ls, cfg.sigma)));
  }
  report(2, worst <= 1e-9, fmt("1000 points, max |log F_robust - log F_kde| = %.3g", worst));
}

void criterion_sandwich() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int f = 0; f < 100; ++f) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(f % 6);
    std::vector<Vector> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(testutil::random_vector(rng, p, -1, 1));
    const Vector x = testutil::random_vector(rng, p, -2, 2);
    const double sigma = 0.4 + 0.1 * (f % 8);
    const double nominal = log_nominal_likelihood(x, samples, sigma);
    double prev_opt = -std::numeric_limits<double>::infinity();
    double prev_pess = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10; ++k) {
      const AmbiguityBall ball{0.2 * k, sigma, p};
      const double lo = log_pessimistic_likelihood(x, samples, ball);
      const double hi = log_optimistic_likelihood(x, samples, ball);
      worst = std::max({worst, lo - nominal, nominal - hi, prev_opt - hi, lo - prev_pess});
      prev_opt = hi;
      prev_pess = lo;
    }
  }
  report(3, worst <= 1e-9, fmt("100 fixtures x 11 radii, largest violation = %.3g", std::max(worst, 0.0)));
}

// General Bures cost, used as an independent check of ground-cost feasibility.
Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double bures(const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2) {
  const Matrix r = psd_sqrt(s2);
  const double tr = (s1 + s2 - 2.0 * psd_sqrt(r * s1 * r)).trace();
  return std::sqrt((m1 - m2).squaredNorm() + std::max(tr, 0.0));
}

double gaussian_log_density(const Vector& x, const Vector& mean, const Matrix& cov) {
  const Eigen::LLT<Matrix> llt(cov);
  const Vector z = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (z.squaredNorm() + logdet + x.size() * std::log(2.0 * std::numbers::pi));
}

void criterion_recovery() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> ue(0.05, 2.0), us(0.3, 1.5);
  double worst_rel = 0.0, worst_cost = -1.0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(t % 6);
    const Vector x = testutil::random_vector(rng, p, -2, 2);
    const Vector xh = testutil::random_vector(rng, p, -2, 2);
    const AmbiguityBall ball{ue(rng), us(rng), p};
    const double dist = (x - xh).norm();
    const bool optimistic = t % 2 == 0;
    const ComponentSolution sol = optimistic ? optimistic_alpha(dist, ball) : pessimistic_alpha(dist, ball);
    const WorstCaseComponent c = optimistic ? recover_optimistic_component(x, xh, sol, ball)
                                            : recover_pessimistic_component(x, xh, sol, ball);
    const Matrix cov = c.basis * c.eig_roots.array().square().matrix().asDiagonal() * c.basis.transpose();
    const double log_want = (optimistic ? -sol.alpha : sol.alpha) - 0.5 * p * std::log(2.0 * std::numbers::pi);
    const double log_got = gaussian_log_density(x, c.mean, cov);
    worst_rel = std::max(worst_rel, std::abs(std::expm1(log_got - log_want)));
    const double cost = bures(c.mean, cov, xh, ball.sigma * ball.sigma * Matrix::Identity(p, p));
    worst_cost = std::max(worst_cost, cost - ball.epsilon);
  }
  report(4, worst_rel <= 1e-5 && worst_cost <= 1e-6,
         fmt("200 instances, max relative density error = %.3g, max cost - eps = %.3g", worst_rel, worst_cost));
}

bool unique_inner(const Vector& x, const LocalSampleSet& ls, const RecourseConfig& cfg) {
  SubproblemOptions single = cfg.inner;
  single.multistart = false;
  const AmbiguityBall b0{cfg.eps0, cfg.sigma, x.size()};
  const AmbiguityBall b1{cfg.eps1, cfg.sigma, x.size()};
  for (const auto& s : ls.samples0) {
    const double d = (x - s).norm();
    if (std::abs(optimistic_alpha(d, b0, cfg.inner).alpha - optimistic_alpha(d, b0, single).alpha) > 1e-9) return false;
  }
  for (const auto& s : ls.samples1) {
    const double d = (x - s).norm();
    if (std::abs(pessimistic_alpha(d, b1, cfg.zeta, cfg.inner).alpha -
                 pessimistic_alpha(d, b1, cfg.zeta, single).alpha) > 1e-9)
      return false;
  }
  return true;
}

void criterion_gradients() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> ue(0.05, 1.0);
  double worst_env = 0.0;
  int accepted = 0, skipped = 0;
  while (accepted < 50) {
    const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng() % 4);
    const LocalSampleSet ls = random_set(rng, p, 8, 8);
    RecourseConfig cfg;
    cfg.eps0 = ue(rng);
    cfg.eps1 = ue(rng);
    cfg.inner.pgd.tol = 1e-13;
    cfg.inner.pgd.max_iter = 5000;
    const Vector x = testutil::random_vector(rng, p, -1.5, 1.5);
    if (!unique_inner(x, ls, cfg)) {
      ++skipped;
      continue;
    }
    RobustObjective obj(ls, cfg);
    const Vector g = obj.gradient(x);
    const Vector fd = obj.finite_difference_gradient(x, 1e-5);
    worst_env = std::max(worst_env, (g - fd).norm() / std::max(fd.norm(), 1e-8));
    ++accepted;
  }

  // Training loss gradient at a point away from ReLU kinks (random biases).
  double worst_mlp = 0.0;
  const Dataset data = generate_synthetic(60, 0.0, 7);
  MlpModel model = MlpModel::initialise(2, {8, 8}, 9);
  for (auto& layer : model.layers()) layer.bias = testutil::random_vector(rng, layer.bias.size(), -0.5, 0.5);
  MlpModel grad;
  training_loss(model, data.features, data.labels, 1e-3, &grad);
  const double h = 1e-6;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    auto& w = model.layers()[l].weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double keep = w.data()[i];
      w.data()[i] = keep + h;
      const double up = training_loss(model, data.features, data.labels, 1e-3);
      w.data()[i] = keep - h;
      const double dn = training_loss(model, data.features, data.labels, 1e-3);
      w.data()[i] = keep;
      worst_mlp = std::max(worst_mlp, std::abs((up - dn) / (2 * h) - grad.layers()[l].weights.data()[i]));
    }
    auto& b = model.layers()[l].bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double keep = b[i];
      b[i] = keep + h;
      const double up = training_loss(model, data.features, data.labels, 1e-3);
      b[i] = keep - h;
      const double dn = training_loss(model, data.features, data.labels, 1e-3);
      b[i] = keep;
      worst_mlp = std::max(worst_mlp, std::abs((up - dn) / (2 * h) - grad.layers()[l].bias[i]));
    }
  }
  report(5, worst_env <= 1e-3 && worst_mlp <= 1e-5,
         fmt("envelope rel err %.3g over 50 points (%d non-unique skipped), MLP grad err %.3g", worst_env, skipped,
             worst_mlp));
}

void criterion_classifier() {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = parse_config("version = 1\ndataset = synthetic\nmaster_seed = 2023\n");
  const PreparedData data = prepare_data(cfg);
  const MlpModel model = train_mlp(data.d1_train, current_train_config(cfg));
  const double acc = accuracy(model, data.d1_test);
  const double a = auc(predict_all(model, data.d1_test.features), data.d1_test.labels);
  const double secs = seconds_since(t0);
  report(6, acc >= 0.95 && a >= 0.98 && secs < 60.0,
         fmt("test accuracy %.3f, AUC %.4f, %.1f s", acc, a, secs));
}

const AggregateRecord* find_row(const SweepTable& t, RecourseMethod m, double e0, double e1, double dp) {
  for (const auto& r : t.aggregates)
    if (r.method == m && r.eps0 == e0 && r.eps1 == e1 && r.delta_plus == dp) return &r;
  return nullptr;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Criteria 7 and 8 from one sweep; returns the output directory for the determinism check.
std::filesystem::path criteria_trend(const ExperimentConfig& cfg) {
  const auto dir_a = testutil::temp_dir("acceptance_a");
  const auto t0 = Clock::now();
  const SweepTable table = run_sweep(cfg, dir_a);
  const double secs = seconds_since(t0);

  // Trend along the diagonal of the (eps1, delta_plus) grid.
  const double path[] = {0.0, 0.5, 1.0};
  std::vector<const AggregateRecord*> rows;
  for (double v : path) rows.push_back(find_row(table, RecourseMethod::robust, 0.0, v, v));
  bool have = true;
  for (auto* r : rows) have = have && r != nullptr && r->count > 0;
  if (!have) {
    report(7, false, "sweep lacks the (eps1, delta_plus) diagonal rows");
    report(8, false, "sweep lacks the robust (1, 1) row");
  } else {
    const double gain = rows.back()->mean_future_validity - rows.front()->mean_future_validity;
    bool monotone = true;
    std::string costs;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      costs += fmt("%s%.3f+-%.3f", k ? " -> " : "", rows[k]->mean_cost, rows[k]->se_cost);
      if (k > 0) {
        const double se = std::max(rows[k]->se_cost, rows[k - 1]->se_cost);
        monotone = monotone && rows[k]->mean_cost >= rows[k - 1]->mean_cost - se;
      }
    }
    report(7, gain >= 0.05 && monotone && secs < 900.0,
           fmt("future validity %.3f -> %.3f (gain %.3f), cost %s, n=%d, %.0f s", rows.front()->mean_future_validity,
               rows.back()->mean_future_validity, gain, costs.c_str(), rows.back()->count, secs));

    double sum = 0.0;
    int n = 0;
    for (const auto& r : table.records)
      if (r.method == RecourseMethod::wachter && r.failure_reason.empty() && r.converged) {
        sum += r.future_validity;
        ++n;
      }
    if (n == 0) {
      report(8, false, "no converged Wachter recourses to compare against");
    } else {
      const double wachter = sum / n;
      report(8, rows.back()->mean_future_validity >= wachter - 0.02,
             fmt("robust (1, 1) future validity %.3f vs Wachter converged %.3f (n=%d)",
                 rows.back()->mean_future_validity, wachter, n));
    }
  }

  return dir_a;
}

void criterion_determinism(const ExperimentConfig& cfg, const std::filesystem::path& dir_a) {
  const auto dir_b = testutil::temp_dir("acceptance_b");
  run_sweep(cfg, dir_b);
  bool same = true;
  for (const char* f : {"instances.csv", "aggregate.csv"}) {
    const std::string a = slurp(dir_a / f), b = slurp(dir_b / f);
    same = same && !a.empty() && a == b;
  }
  report(10, same, same ? "instances.csv and aggregate.csv byte-identical across two runs" : "CSV outputs differ");
}

void criterion_projections() {
  std::mt19937_64 rng(909);
  const double r = 1.0;
  // One constructed point per region, with the expected image.
  const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> cases = {
      {{0.3, 0.4}, {0.3, 0.4}},       // inside
      {{3.0, 4.0}, {0.6, 0.8}},       // beyond the arc
      {{-1.0, 2.0}, {0.0, 1.0}},      // left, above r
      {{-1.0, 0.5}, {0.0, 0.5}},      // left, within [0, r]
      {{2.0, -1.0}, {1.0, 0.0}},      // below, right of r
      {{0.5, -1.0}, {0.5, 0.0}},      // below, within [0, r]
      {{-1.0, -1.0}, {0.0, 0.0}},     // third quadrant
  };
  double worst_case = 0.0;
  for (const auto& [u, want] : cases) {
    worst_case = std::max(worst_case, (project_quarter_disk(u, r) - want).norm());
    worst_case = std::max(worst_case, (oracle::quarter_disk(u, r) - want).norm());
  }
  double worst_pair = 0.0;
  std::uniform_real_distribution<double> uu(-3, 3), ur(0.0, 2.0);
  for (int t = 0; t < 10000; ++t) {
    const double rad = ur(rng);
    const Eigen::Vector2d u(uu(rng), uu(rng)), v(uu(rng), uu(rng));
    const Eigen::Vector2d pu = project_quarter_disk(u, rad), pv = project_quarter_disk(v, rad);
    worst_pair = std::max(worst_pair, (project_quarter_disk(pu, rad) - pu).norm());
    worst_pair = std::max(worst_pair, (pu - pv).norm() - (u - v).norm());
    worst_pair = std::max(worst_pair, (pu - oracle::quarter_disk(u, rad)).norm());
  }
  double worst_l1 = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(t % 5);
    const Vector x = testutil::random_vector(rng, p, -3, 3);
    const Vector c = testutil::random_vector(rng, p, -1, 1);
    const double delta = ur(rng);
    std::vector<bool> frozen(static_cast<std::size_t>(p), false);
    if (t % 3 == 0) frozen[static_cast<std::size_t>(rng() % p)] = true;
    worst_l1 = std::max(worst_l1, (project_l1_ball(x, c, delta, frozen) - oracle::l1_ball(x, c, delta, frozen))
                                      .lpNorm<Eigen::Infinity>());
  }
  report(9, worst_case <= 1e-12 && worst_pair <= 1e-12 && worst_l1 <= 1e-6,
         fmt("7 regions err %.3g, 1e4 pairs worst %.3g, l1 vs oracle %.3g", worst_case, worst_pair, worst_l1));
}

}  // namespace

int main() {
  try {
    criterion_subproblems();
    criterion_collapse();
    criterion_sandwich();
    criterion_recovery();
    criterion_gradients();
    criterion_classifier();
    const ExperimentConfig cfg =
        load_config(std::filesystem::path(RBR_SOURCE_DIR) / "configs" / "synthetic_trend.cfg");
    const auto first = criteria_trend(cfg);
    criterion_projections();
    criterion_determinism(cfg, first);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
