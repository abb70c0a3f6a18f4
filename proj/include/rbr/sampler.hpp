#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rbr/classifier.hpp"
#include "rbr/data.hpp"

namespace rbr {

double l1_distance(const Vector& a, const Vector& b);

// Synthetic neighbourhood around the decision boundary, labelled by the classifier.
struct LocalSampleSet {
  Vector x0;
  Vector x_b;
  std::vector<Vector> samples0;  // predicted class 0
  std::vector<Vector> samples1;  // predicted class 1
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  double radius = 0.0;  // radius actually used (doubled after a one-sided draw)
  std::uint64_t seed = 0;

  Eigen::Index dim() const { return x0.size(); }
  std::size_t size() const { return samples0.size() + samples1.size(); }
  // Throws degenerate_neighborhood when a class is empty, invalid_argument on shape errors.
  void validate() const;
};

struct NearestCounterfactuals {
  std::vector<Vector> points;  // ascending l1 distance to x0, ties by row index
  std::vector<Eigen::Index> rows;
  bool truncated = false;  // fewer than K favourable points were available
};

NearestCounterfactuals nearest_counterfactuals(const Vector& x0, const Dataset& data, const MlpModel& model,
                                               std::size_t k);

// Bisection on the segment [x0, x1] (x0 unfavourable, x1 favourable). Returns
// the favourable end of the final bracket, so the result is always labelled 1.
Vector boundary_bisection(const Vector& x0, const Vector& x1, const MlpModel& model, double tol = 1e-4,
                          int max_iter = 60);

// Candidate with the smallest l1 cost to x0 (first on ties).
Vector select_boundary(const Vector& x0, std::span<const Vector> candidates);

// Uniform on the l2 ball: Gaussian direction, radius r * U^(1/p).
std::vector<Vector> sample_uniform_ball(const Vector& center, double r, std::size_t n, std::uint64_t seed);

struct SamplerConfig {
  std::size_t k = 1000;  // nearest counterfactuals (capped at what exists)
  std::size_t n = 200;   // synthetic samples
  double radius = 0.2;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  // Bisect only the this many nearest counterfactuals; 0 means all of them.
  std::size_t bisect_limit = 0;
};

LocalSampleSet build_local_sample_set(const Vector& x0, const Dataset& data, const MlpModel& model,
                                      const SamplerConfig& cfg);

}  // namespace rbr
