#pragma once

#include <Eigen/Dense>
#include <span>
#include <unordered_map>
#include <vector>

#include "rbr/pgd.hpp"

namespace rbr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Ball of Gaussian mixtures around the sigma-smoothed empirical mixture, with
// radius epsilon in type-infinity Wasserstein distance over (mean, covariance).
struct AmbiguityBall {
  double epsilon = 0.0;
  double sigma = 1.0;
  Eigen::Index dim = 1;

  void validate() const;
};

// Solution of one reduced two-variable subproblem.
struct ComponentSolution {
  double alpha = 0.0;   // optimal value (pessimistic: unperturbed objective at the perturbed argmin)
  double a_star = 0.0;  // ||mu* - x_hat||_2
  double d_star = 0.0;  // largest (optimistic) or smallest (pessimistic) eigenvalue root
  bool converged = true;
  int iterations = 0;
  double perturbed_value = 0.0;  // pessimistic only: objective of the zeta-perturbed problem
};

// One component of a worst-case mixture: N(mean, basis diag(eig_roots^2) basis^T).
struct WorstCaseComponent {
  Vector mean;
  Vector eig_roots;
  Matrix basis;

  double log_density(const Vector& x) const;
  // Sigma^{-1} r via the eigen representation.
  Vector precision_times(const Vector& r) const;
};

struct SubproblemOptions {
  PgdOptions pgd{0.5, 1.0, 1e-8, 5000, 60, false, 1e-7};
  // Extra starts at the corners (0, r) and (r, 0) besides the origin.
  bool multistart = true;
};

// Bures-type cost between N(mean, V diag(d^2) V^T) and N(nominal_mean, sigma^2 I).
double gaussian_ground_cost(const Vector& mean, const Vector& eig_roots, const Vector& nominal_mean, double sigma);

// Objectives in the original (a, d) variables.
double optimistic_objective(double dist, const AmbiguityBall& ball, double a, double d);
// zeta = 0 gives the unperturbed objective. For p = 1 the (p-1) term is absent.
double pessimistic_objective(double dist, const AmbiguityBall& ball, double a, double d1, double zeta);

ComponentSolution optimistic_alpha(double dist, const AmbiguityBall& ball, const SubproblemOptions& opt = {});
ComponentSolution pessimistic_alpha(double dist, const AmbiguityBall& ball, double zeta = 1e-8,
                                    const SubproblemOptions& opt = {});

// Log of the maximal / minimal mixture likelihood of x over the ball.
// When `solutions` is non-null it receives the per-sample subproblem solutions.
double log_optimistic_likelihood(const Vector& x, std::span<const Vector> samples, const AmbiguityBall& ball,
                                 const SubproblemOptions& opt = {}, std::vector<ComponentSolution>* solutions = nullptr);
double log_pessimistic_likelihood(const Vector& x, std::span<const Vector> samples, const AmbiguityBall& ball,
                                  double zeta = 1e-8, const SubproblemOptions& opt = {},
                                  std::vector<ComponentSolution>* solutions = nullptr);
double optimistic_likelihood(const Vector& x, std::span<const Vector> samples, const AmbiguityBall& ball,
                             const SubproblemOptions& opt = {});
double pessimistic_likelihood(const Vector& x, std::span<const Vector> samples, const AmbiguityBall& ball,
                              double zeta = 1e-8, const SubproblemOptions& opt = {});
// Likelihood under the smoothed nominal mixture (1/N) sum N(x_hat_i, sigma^2 I).
double log_nominal_likelihood(const Vector& x, std::span<const Vector> samples, double sigma);

enum class BasisColumn { first, last };

// Orthonormal matrix whose designated column is direction/||direction||,
// built as the Householder reflection taking that standard basis vector onto it.
Matrix build_orthonormal_basis(const Vector& direction, BasisColumn position);

WorstCaseComponent recover_optimistic_component(const Vector& x, const Vector& x_hat, const ComponentSolution& sol,
                                                const AmbiguityBall& ball);
WorstCaseComponent recover_pessimistic_component(const Vector& x, const Vector& x_hat, const ComponentSolution& sol,
                                                 const AmbiguityBall& ball);

struct GridResult {
  double value = 0.0;
  Eigen::Vector2d argmin = Eigen::Vector2d::Zero();
};

// Exhaustive minimum over a resolution x resolution lattice on [0,r]^2,
// skipping lattice points outside the quarter disk of radius r.
template <class Objective>
GridResult grid_oracle_2d(Objective&& f, double r, int resolution) {
  GridResult best{std::numeric_limits<double>::infinity(), Eigen::Vector2d::Zero()};
  const double h = resolution > 1 ? r / static_cast<double>(resolution - 1) : 0.0;
  const double limit = r * r * (1.0 + 1e-12);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const Eigen::Vector2d v(i * h, j * h);
      if (v.squaredNorm() > limit) continue;
      const double value = f(v);
      if (value < best.value) best = {value, v};
    }
  }
  return best;
}

// Memoised subproblem solutions keyed by dist (quantised to 1e-12) for one ball.
class AlphaCache {
 public:
  enum class Kind { optimistic, pessimistic };

  AlphaCache(Kind kind, AmbiguityBall ball, double zeta = 1e-8, SubproblemOptions opt = {});
  const ComponentSolution& get(double dist);
  const AmbiguityBall& ball() const { return ball_; }
  Kind kind() const { return kind_; }
  double zeta() const { return zeta_; }

 private:
  Kind kind_;
  AmbiguityBall ball_;
  double zeta_;
  SubproblemOptions opt_;
  std::unordered_map<long long, ComponentSolution> memo_;
};

}  // namespace rbr
