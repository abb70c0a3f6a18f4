#include "rbr/projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rbr/error.hpp"

namespace rbr {

Eigen::Vector2d project_quarter_disk(const Eigen::Vector2d& v, double r) {
  require(r >= 0.0, "project_quarter_disk: radius must be non-negative");
  const double v1 = v[0];
  const double v2 = v[1];
  if (v1 >= 0.0 && v2 >= 0.0) {
    const double sq = v1 * v1 + v2 * v2;
    if (sq <= r * r) return v;
    return (r / std::sqrt(sq)) * v;
  }
  if (v1 < 0.0 && v2 > r) return {0.0, r};
  if (v1 < 0.0 && v2 >= 0.0) return {0.0, v2};
  if (v1 > r && v2 < 0.0) return {r, 0.0};
  if (v1 >= 0.0 && v2 < 0.0) return {v1, 0.0};
  return {0.0, 0.0};
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& x, const Eigen::VectorXd& center, double delta,
                                const std::vector<bool>& frozen_mask) {
  require(x.size() == center.size(), "project_l1_ball: dimension mismatch");
  require(delta >= 0.0, "project_l1_ball: delta must be non-negative");
  require(frozen_mask.empty() || frozen_mask.size() == static_cast<std::size_t>(x.size()),
          "project_l1_ball: mask length mismatch");
  Eigen::VectorXd y = x - center;
  for (std::size_t j = 0; j < frozen_mask.size(); ++j)
    if (frozen_mask[j]) y[static_cast<Eigen::Index>(j)] = 0.0;
  if (y.lpNorm<1>() <= delta) return center + y;

  std::vector<double> mags(static_cast<std::size_t>(y.size()));
  for (Eigen::Index j = 0; j < y.size(); ++j) mags[static_cast<std::size_t>(j)] = std::abs(y[j]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumsum = 0.0;
  // The first candidate is always admissible; with delta = 0 it zeroes everything.
  double threshold = mags.front() - delta;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumsum += mags[j];
    const double candidate = (cumsum - delta) / static_cast<double>(j + 1);
    if (mags[j] - candidate > 0.0) threshold = candidate;
  }
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double m = std::max(std::abs(y[j]) - threshold, 0.0);
    y[j] = std::copysign(m, y[j]);
  }
  return center + y;
}

}  // namespace rbr
