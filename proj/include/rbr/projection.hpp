#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rbr {

// Euclidean projection onto {v : v1 >= 0, v2 >= 0, v1^2 + v2^2 <= r^2}, by the
// closed-form seven-region case split. r == 0 maps everything to the origin.
Eigen::Vector2d project_quarter_disk(const Eigen::Vector2d& v, double r);

// Euclidean projection of the free coordinates onto the l1 ball of radius
// delta around center (sort-based simplex projection). Frozen coordinates are
// reset to center's values. An empty mask means nothing is frozen.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& x, const Eigen::VectorXd& center, double delta,
                                const std::vector<bool>& frozen_mask = {});

}  // namespace rbr
