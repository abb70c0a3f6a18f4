#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace rbr {

struct PgdOptions {
  double theta = 0.5;  // backtracking factor, in (0,1)
  double beta = 1.0;   // initial trial step
  double tol = 1e-8;   // stop when ||x_{t+1} - x_t|| <= tol
  int max_iter = 500;
  int max_backtracks = 60;
  bool keep_trace = false;
  // When positive, convergence also needs ||x - P(x - beta g)|| / beta <= this.
  // A small accepted step alone can come from a steep cusp, not a stationary point.
  double stationarity_tol = 0.0;
};

enum class PgdStatus { converged, max_iter, stalled };

template <class Vec>
struct PgdResult {
  Vec x;
  double value = 0.0;
  PgdStatus status = PgdStatus::max_iter;
  int iterations = 0;
  std::vector<double> trace;  // objective at x0 and at every accepted iterate

  bool converged() const { return status == PgdStatus::converged; }
};

// Projected gradient descent with backtracking line search. A trial step
// s = theta^k * beta is accepted at the smallest k with
//   F(P(x - s g)) <= F(x) - ||x - P(x - s g)||^2 / (2 s)
// and additionally F(P(x - s g)) <= F(x); the latter only matters when
// rounding makes the sufficient-decrease test pass with a tiny increase.
// `x0` must already be feasible.
template <class Vec, class Objective, class Gradient, class Projector>
PgdResult<Vec> projected_gradient_descent(Objective&& f, Gradient&& grad, Projector&& proj, Vec x0,
                                          const PgdOptions& opt) {
  auto stationary = [&](const Vec& x) {
    if (opt.stationarity_tol <= 0.0) return true;
    const Vec mapped = proj(Vec(x - opt.beta * grad(x)));
    return (x - mapped).norm() / opt.beta <= opt.stationarity_tol;
  };
  PgdResult<Vec> res;
  res.x = std::move(x0);
  res.value = f(res.x);
  if (opt.keep_trace) res.trace.push_back(res.value);
  for (int t = 0; t < opt.max_iter; ++t) {
    const Vec g = grad(res.x);
    double step = opt.beta;
    bool accepted = false;
    Vec trial;
    double trial_value = 0.0;
    for (int k = 0; k <= opt.max_backtracks; ++k) {
      trial = proj(Vec(res.x - step * g));
      trial_value = f(trial);
      const double moved = (res.x - trial).squaredNorm();
      const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(res.value);
      if (trial_value <= res.value - moved / (2.0 * step) + slack && trial_value <= res.value) {
        accepted = true;
        break;
      }
      step *= opt.theta;
    }
    if (!accepted) {
      res.status = PgdStatus::stalled;
      res.iterations = t;
      return res;
    }
    const double moved = (res.x - trial).norm();
    res.x = std::move(trial);
    res.value = trial_value;
    res.iterations = t + 1;
    if (opt.keep_trace) res.trace.push_back(res.value);
    if (moved <= opt.tol && stationary(res.x)) {
      res.status = PgdStatus::converged;
      return res;
    }
  }
  res.status = PgdStatus::max_iter;
  return res;
}

}  // namespace rbr
