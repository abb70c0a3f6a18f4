#include "rbr/likelihood_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rbr/error.hpp"
#include "rbr/projection.hpp"

namespace rbr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

void check_dist(double dist) { require(dist >= 0.0 && std::isfinite(dist), "subproblem: dist must be finite and >= 0"); }

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

struct Start2d {
  Eigen::Vector2d v;
  PgdResult<Eigen::Vector2d> res;
};

// Runs backtracking PGD from the origin and (optionally) the two outer corners
// of the quarter disk, keeping the lowest final value.
template <class F, class G>
PgdResult<Eigen::Vector2d> solve_quarter_disk(F&& f, G&& g, double r, const SubproblemOptions& opt) {
  auto proj = [r](const Eigen::Vector2d& v) { return project_quarter_disk(v, r); };
  std::vector<Eigen::Vector2d> starts{Eigen::Vector2d::Zero()};
  if (opt.multistart) {
    starts.emplace_back(0.0, r);
    starts.emplace_back(r, 0.0);
  }
  PgdResult<Eigen::Vector2d> best;
  bool have = false;
  int total_iterations = 0;
  for (const auto& s : starts) {
    auto res = projected_gradient_descent(f, g, proj, s, opt.pgd);
    total_iterations += res.iterations;
    if (!have || res.value < best.value) {
      best = std::move(res);
      have = true;
    }
  }
  best.iterations = total_iterations;
  return best;
}

}  // namespace

void AmbiguityBall::validate() const {
  require(epsilon >= 0.0 && std::isfinite(epsilon), "ambiguity ball: epsilon must be finite and >= 0");
  require(sigma > 0.0 && std::isfinite(sigma), "ambiguity ball: sigma must be positive");
  require(dim >= 1, "ambiguity ball: dimension must be positive");
}

double gaussian_ground_cost(const Vector& mean, const Vector& eig_roots, const Vector& nominal_mean, double sigma) {
  require(mean.size() == nominal_mean.size() && eig_roots.size() == mean.size(),
          "gaussian_ground_cost: dimension mismatch");
  require(sigma > 0.0, "gaussian_ground_cost: sigma must be positive");
  require((eig_roots.array() >= 0.0).all(), "gaussian_ground_cost: eigenvalue roots must be non-negative");
  return std::sqrt((mean - nominal_mean).squaredNorm() + (eig_roots.array() - sigma).square().sum());
}

double optimistic_objective(double dist, const AmbiguityBall& ball, double a, double d) {
  const double gap = dist - a;
  return std::log(d) + gap * gap / (2.0 * d * d) + static_cast<double>(ball.dim - 1) * std::log(ball.sigma);
}

double pessimistic_objective(double dist, const AmbiguityBall& ball, double a, double d1, double zeta) {
  const double reach = dist + a;
  double value = -std::log(d1) - reach * reach / (2.0 * d1 * d1);
  if (ball.dim > 1) {
    const double k = static_cast<double>(ball.dim - 1);
    const double slack = ball.epsilon * ball.epsilon - a * a - (d1 - ball.sigma) * (d1 - ball.sigma);
    value -= k * std::log(ball.sigma + std::sqrt(std::max(zeta + slack, 0.0) / k));
  }
  return value;
}

ComponentSolution optimistic_alpha(double dist, const AmbiguityBall& ball, const SubproblemOptions& opt) {
  ball.validate();
  check_dist(dist);
  const double sigma = ball.sigma;
  const double eps = ball.epsilon;
  ComponentSolution sol;
  if (eps == 0.0) {
    sol.a_star = 0.0;
    sol.d_star = sigma;
    sol.alpha = optimistic_objective(dist, ball, 0.0, sigma);
    return sol;
  }
  if (eps >= dist) {
    // Move the mean onto x: both remaining terms sit at their minima.
    sol.a_star = dist;
    sol.d_star = sigma;
    sol.alpha = static_cast<double>(ball.dim) * std::log(sigma);
    return sol;
  }
  const double const_term = static_cast<double>(ball.dim - 1) * std::log(sigma);
  auto f = [&](const Eigen::Vector2d& v) {
    const double d = v[1] + sigma;
    const double gap = dist - v[0];
    return std::log(d) + gap * gap / (2.0 * d * d) + const_term;
  };
  auto g = [&](const Eigen::Vector2d& v) {
    const double d = v[1] + sigma;
    const double gap = dist - v[0];
    return Eigen::Vector2d(-gap / (d * d), 1.0 / d - gap * gap / (d * d * d));
  };
  const auto res = solve_quarter_disk(f, g, eps, opt);
  sol.a_star = res.x[0];
  sol.d_star = res.x[1] + sigma;
  sol.alpha = res.value;
  sol.converged = res.converged();
  sol.iterations = res.iterations;
  return sol;
}

ComponentSolution pessimistic_alpha(double dist, const AmbiguityBall& ball, double zeta, const SubproblemOptions& opt) {
  ball.validate();
  check_dist(dist);
  require(zeta > 0.0 && std::isfinite(zeta), "pessimistic_alpha: zeta must be positive");
  const double sigma = ball.sigma;
  const double eps = ball.epsilon;
  ComponentSolution sol;
  if (eps == 0.0) {
    sol.a_star = 0.0;
    sol.d_star = sigma;
    sol.alpha = pessimistic_objective(dist, ball, 0.0, sigma, 0.0);
    sol.perturbed_value = pessimistic_objective(dist, ball, 0.0, sigma, zeta);
    return sol;
  }
  const double p = static_cast<double>(ball.dim);
  const double root_p = std::sqrt(p);
  const double k = p - 1.0;
  const double radius = eps / root_p;
  // Variables u = (a / sqrt(p), d1 - sigma) on the quarter disk of radius eps / sqrt(p).
  auto f = [&](const Eigen::Vector2d& u) {
    const double d = u[1] + sigma;
    const double reach = dist + root_p * u[0];
    double value = -std::log(d) - reach * reach / (2.0 * d * d);
    if (ball.dim > 1) {
      const double q = std::sqrt((zeta + eps * eps - p * u[0] * u[0] - u[1] * u[1]) / k);
      value -= k * std::log(sigma + q);
    }
    return value;
  };
  auto g = [&](const Eigen::Vector2d& u) {
    const double d = u[1] + sigma;
    const double reach = dist + root_p * u[0];
    Eigen::Vector2d grad(-root_p * reach / (d * d), -1.0 / d + reach * reach / (d * d * d));
    if (ball.dim > 1) {
      const double q = std::sqrt((zeta + eps * eps - p * u[0] * u[0] - u[1] * u[1]) / k);
      const double w = 1.0 / (q * (sigma + q));
      grad[0] += p * u[0] * w;
      grad[1] += u[1] * w;
    }
    return grad;
  };
  const auto res = solve_quarter_disk(f, g, radius, opt);
  sol.a_star = root_p * res.x[0];
  sol.d_star = res.x[1] + sigma;
  sol.perturbed_value = res.value;
  sol.alpha = pessimistic_objective(dist, ball, sol.a_star, sol.d_star, 0.0);
  sol.converged = res.converged();
  sol.iterations = res.iterations;
  return sol;
}

double log_optimistic_likelihood(const Vector& x, std::span<const Vector> samples, const AmbiguityBall& ball,
                                 const SubproblemOptions& opt, std::vector<ComponentSolution>* solutions) {
  require(!samples.empty(), "optimistic_likelihood: no samples");
  require(x.size() == ball.dim, "optimistic_likelihood: x dimension does not match the ball");
  std::vector<double> terms;
  terms.reserve(samples.size());
  if (solutions != nullptr) solutions->clear();
  for (const auto& s : samples) {
    require(s.size() == x.size(), "optimistic_likelihood: sample dimension mismatch");
    const ComponentSolution sol = optimistic_alpha((x - s).norm(), ball, opt);
    terms.push_back(-sol.alpha);
    if (solutions != nullptr) solutions->push_back(sol);
  }
  return log_sum_exp(terms) - std::log(static_cast<double>(samples.size())) -
         0.5 * static_cast<double>(ball.dim) * kLog2Pi;
}

double log_pessimistic_likelihood(const Vector& x, std::span<const Vector> samples, const AmbiguityBall& ball,
                                  double zeta, const SubproblemOptions& opt,
                                  std::vector<ComponentSolution>* solutions) {
  require(!samples.empty(), "pessimistic_likelihood: no samples");
  require(x.size() == ball.dim, "pessimistic_likelihood: x dimension does not match the ball");
  std::vector<double> terms;
  terms.reserve(samples.size());
  if (solutions != nullptr) solutions->clear();
  for (const auto& s : samples) {
    require(s.size() == x.size(), "pessimistic_likelihood: sample dimension mismatch");
    const ComponentSolution sol = pessimistic_alpha((x - s).norm(), ball, zeta, opt);
    terms.push_back(sol.alpha);
    if (solutions != nullptr) solutions->push_back(sol);
  }
  return log_sum_exp(terms) - std::log(static_cast<double>(samples.size())) -
         0.5 * static_cast<double>(ball.dim) * kLog2Pi;
}

double optimistic_likelihood(const Vector& x, std::span<const Vector> samples, const AmbiguityBall& ball,
                             const SubproblemOptions& opt) {
  return std::exp(log_optimistic_likelihood(x, samples, ball, opt));
}

double pessimistic_likelihood(const Vector& x, std::span<const Vector> samples, const AmbiguityBall& ball,
                              double zeta, const SubproblemOptions& opt) {
  return std::exp(log_pessimistic_likelihood(x, samples, ball, zeta, opt));
}

double log_nominal_likelihood(const Vector& x, std::span<const Vector> samples, double sigma) {
  require(!samples.empty(), "nominal_likelihood: no samples");
  require(sigma > 0.0, "nominal_likelihood: sigma must be positive");
  std::vector<double> terms;
  terms.reserve(samples.size());
  for (const auto& s : samples) terms.push_back(-(x - s).squaredNorm() / (2.0 * sigma * sigma));
  const double p = static_cast<double>(x.size());
  return log_sum_exp(terms) - std::log(static_cast<double>(samples.size())) - 0.5 * p * kLog2Pi -
         p * std::log(sigma);
}

// ---------------------------------------------------------------- recovery

Matrix build_orthonormal_basis(const Vector& direction, BasisColumn position) {
  const double norm = direction.norm();
  require(norm > 0.0 && std::isfinite(norm), "build_orthonormal_basis: direction must be non-zero");
  const Eigen::Index p = direction.size();
  const Eigen::Index col = position == BasisColumn::first ? 0 : p - 1;
  const Vector u = direction / norm;
  Vector w = -u;
  w[col] += 1.0;
  const double ww = w.squaredNorm();
  Matrix basis = Matrix::Identity(p, p);
  if (ww > 0.0) basis -= (2.0 / ww) * w * w.transpose();
  // The reflection maps e_col exactly onto u up to rounding; pin it.
  basis.col(col) = u;
  return basis;
}

double WorstCaseComponent::log_density(const Vector& x) const {
  const Vector r = x - mean;
  const double quad = r.dot(precision_times(r));
  return -0.5 * static_cast<double>(x.size()) * kLog2Pi - eig_roots.array().log().sum() - 0.5 * quad;
}

Vector WorstCaseComponent::precision_times(const Vector& r) const {
  Vector coords = basis.transpose() * r;
  coords.array() /= eig_roots.array().square();
  return basis * coords;
}

WorstCaseComponent recover_optimistic_component(const Vector& x, const Vector& x_hat, const ComponentSolution& sol,
                                                const AmbiguityBall& ball) {
  ball.validate();
  require(x.size() == x_hat.size() && x.size() == ball.dim, "recover_optimistic_component: dimension mismatch");
  const double dist = (x - x_hat).norm();
  WorstCaseComponent c;
  const double t = dist > 0.0 ? sol.a_star / dist : 0.0;
  c.mean = t * x + (1.0 - t) * x_hat;
  c.eig_roots = Vector::Constant(ball.dim, ball.sigma);
  c.eig_roots[ball.dim - 1] = sol.d_star;
  const Vector r = x - c.mean;
  c.basis = r.norm() > 0.0 ? build_orthonormal_basis(r, BasisColumn::last) : Matrix::Identity(ball.dim, ball.dim);
  return c;
}

WorstCaseComponent recover_pessimistic_component(const Vector& x, const Vector& x_hat, const ComponentSolution& sol,
                                                 const AmbiguityBall& ball) {
  ball.validate();
  require(x.size() == x_hat.size() && x.size() == ball.dim, "recover_pessimistic_component: dimension mismatch");
  const double dist = (x - x_hat).norm();
  WorstCaseComponent c;
  if (dist > 0.0) {
    const double t = sol.a_star / dist;
    c.mean = -t * x + (1.0 + t) * x_hat;
  } else {
    // Any unit direction is optimal when x sits on the nominal mean.
    c.mean = x_hat;
    c.mean[0] -= sol.a_star;
  }
  c.eig_roots = Vector(ball.dim);
  c.eig_roots[0] = sol.d_star;
  if (ball.dim > 1) {
    const double gap = sol.d_star - ball.sigma;
    const double slack = ball.epsilon * ball.epsilon - sol.a_star * sol.a_star - gap * gap;
    const double rest = ball.sigma + std::sqrt(std::max(slack, 0.0) / static_cast<double>(ball.dim - 1));
    c.eig_roots.tail(ball.dim - 1).setConstant(std::max(rest, ball.sigma));
  }
  const Vector r = x - c.mean;
  c.basis = r.norm() > 0.0 ? build_orthonormal_basis(r, BasisColumn::first) : Matrix::Identity(ball.dim, ball.dim);
  return c;
}

// ---------------------------------------------------------------- cache

AlphaCache::AlphaCache(Kind kind, AmbiguityBall ball, double zeta, SubproblemOptions opt)
    : kind_(kind), ball_(ball), zeta_(zeta), opt_(opt) {
  ball_.validate();
}

const ComponentSolution& AlphaCache::get(double dist) {
  const long long key = std::llround(dist * 1e12);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  if (memo_.size() > 200000) memo_.clear();
  const ComponentSolution sol =
      kind_ == Kind::optimistic ? optimistic_alpha(dist, ball_, opt_) : pessimistic_alpha(dist, ball_, zeta_, opt_);
  return memo_.emplace(key, sol).first->second;
}

}  // namespace rbr
