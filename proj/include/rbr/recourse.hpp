#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "rbr/classifier.hpp"
#include "rbr/likelihood_bounds.hpp"
#include "rbr/pgd.hpp"
#include "rbr/sampler.hpp"

namespace rbr {

enum class RecourseMethod { kde, robust, wachter };
std::string_view method_name(RecourseMethod m);
RecourseMethod parse_method(std::string_view name);

// Where the l1 feasible ball is centred.
enum class ConstraintCenter {
  input,     // ||x - x0||_1 <= ||x0 - x_b||_1 + delta_plus
  boundary,  // ||x - x_b||_1 <= delta_prime
};

enum class GradientMode { envelope, finite_difference };

struct WachterOptions {
  double target = 0.55;  // 0.5 plus a 0.05 margin
  double lambda0 = 0.1;
  int max_doublings = 10;
  int iterations = 1000;
  double step = 0.01;
  double huber_width = 1e-6;
};

struct RecourseConfig {
  double delta_plus = 0.0;
  double eps0 = 0.0;
  double eps1 = 0.0;
  double sigma = 1.0;  // also the KDE bandwidth h
  double zeta = 1e-8;
  PgdOptions outer{0.5, 0.1, 1e-6, 300, 60, true};
  SubproblemOptions inner{};
  std::vector<bool> frozen_mask;  // empty: all features mutable
  ConstraintCenter center = ConstraintCenter::input;
  double delta_prime = 0.0;
  GradientMode gradient = GradientMode::envelope;
  WachterOptions wachter{};

  void validate(Eigen::Index dim) const;
};

struct RecourseResult {
  RecourseMethod method = RecourseMethod::robust;
  Vector x0;
  Vector x_prime;
  double cost = 0.0;   // ||x_prime - x0||_1
  double delta = 0.0;  // radius of the feasible l1 ball actually used
  std::vector<double> objective_trace;
  int iterations = 0;
  bool optimizer_converged = false;
  std::optional<bool> valid;  // label flip under the supplied classifier, if any
  // Validity when a classifier was supplied, otherwise the optimizer flag.
  bool converged = false;
};

// Ratio of Gaussian-kernel sums, class 0 over class 1, evaluated in log space.
double log_kde_objective(const Vector& x, const LocalSampleSet& ls, double h);
double kde_objective(const Vector& x, const LocalSampleSet& ls, double h);
Vector log_kde_gradient(const Vector& x, const LocalSampleSet& ls, double h);

// log F(x) = log(gamma0 * max L(x,Q0)) - log(gamma1 * min L(x,Q1)), with
// memoised subproblems. Not thread-safe; use one instance per worker.
class RobustObjective {
 public:
  RobustObjective(const LocalSampleSet& ls, const RecourseConfig& cfg);

  double log_value(const Vector& x);
  // Envelope gradient of log F at the recovered worst-case components.
  Vector gradient(const Vector& x);
  Vector finite_difference_gradient(const Vector& x, double step = 1e-6);
  std::vector<WorstCaseComponent> worst_case_components(const Vector& x, int cls);

 private:
  const LocalSampleSet& ls_;
  AmbiguityBall ball0_;
  AmbiguityBall ball1_;
  AlphaCache opt_cache_;
  AlphaCache pess_cache_;
};

double log_robust_objective(const Vector& x, const LocalSampleSet& ls, const RecourseConfig& cfg);
double robust_objective(const Vector& x, const LocalSampleSet& ls, const RecourseConfig& cfg);
Vector robust_gradient(const Vector& x, const LocalSampleSet& ls, const RecourseConfig& cfg);

// Feasible-set projection for a request (centre, radius and frozen coordinates).
struct FeasibleSet {
  Vector center;
  double delta = 0.0;
  std::vector<bool> frozen_mask;
  Vector project(const Vector& x) const;
};
FeasibleSet feasible_set(const Vector& x0, const LocalSampleSet& ls, const RecourseConfig& cfg);

RecourseResult kde_recourse(const Vector& x0, const LocalSampleSet& ls, const RecourseConfig& cfg,
                            const MlpModel* model = nullptr);
RecourseResult robust_recourse(const Vector& x0, const LocalSampleSet& ls, const RecourseConfig& cfg,
                               const MlpModel* model = nullptr);
RecourseResult wachter_recourse(const Vector& x0, const MlpModel& model, const RecourseConfig& cfg);

}  // namespace rbr
