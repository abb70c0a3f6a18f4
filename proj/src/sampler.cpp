#include "rbr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rbr/error.hpp"
#include "rbr/seeding.hpp"

namespace rbr {

double l1_distance(const Vector& a, const Vector& b) { return (a - b).lpNorm<1>(); }

void LocalSampleSet::validate() const {
  require(x0.size() >= 1 && x_b.size() == x0.size(), "sample set: x0 and x_b must share a positive dimension");
  for (const auto* set : {&samples0, &samples1})
    for (const auto& s : *set) require(s.size() == x0.size(), "sample set: sample dimension mismatch");
  if (samples0.empty() || samples1.empty()) {
    fail(Errc::degenerate_neighborhood, "sample set needs samples from both predicted classes");
  }
}

NearestCounterfactuals nearest_counterfactuals(const Vector& x0, const Dataset& data, const MlpModel& model,
                                               std::size_t k) {
  require(k >= 1, "nearest_counterfactuals: K must be positive");
  if (model.predict_label(x0) == 1) fail(Errc::already_favorable, "input is already classified favourably");
  std::vector<std::pair<double, Eigen::Index>> favourable;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Vector xi = data.row(i);
    if (model.predict_label(xi) == 1) favourable.emplace_back(l1_distance(xi, x0), i);
  }
  // Pairs compare by distance, then row index.
  std::sort(favourable.begin(), favourable.end());
  NearestCounterfactuals out;
  out.truncated = favourable.size() < k;
  const std::size_t take = std::min(k, favourable.size());
  for (std::size_t j = 0; j < take; ++j) {
    out.rows.push_back(favourable[j].second);
    out.points.push_back(data.row(favourable[j].second));
  }
  return out;
}

Vector boundary_bisection(const Vector& x0, const Vector& x1, const MlpModel& model, double tol, int max_iter) {
  require(x0.size() == x1.size(), "boundary_bisection: endpoint dimension mismatch");
  require(tol > 0.0, "boundary_bisection: tol must be positive");
  const int y0 = model.predict_label(x0);
  const int y1 = model.predict_label(x1);
  if (y0 == y1) fail(Errc::invalid_bracket, "boundary_bisection: endpoints share the same predicted label");
  // Orient so that lo is unfavourable and hi favourable.
  const Vector& from = y0 == 0 ? x0 : x1;
  const Vector& to = y0 == 0 ? x1 : x0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p = model.predict_proba(from + mid * (to - from));
    if (p >= 0.5) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (std::abs(p - 0.5) <= tol || hi - lo <= tol) break;
  }
  return from + hi * (to - from);
}

Vector select_boundary(const Vector& x0, std::span<const Vector> candidates) {
  require(!candidates.empty(), "select_boundary: no candidates");
  std::size_t best = 0;
  double best_cost = l1_distance(candidates[0], x0);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double c = l1_distance(candidates[i], x0);
    if (c < best_cost) {
      best_cost = c;
      best = i;
    }
  }
  return candidates[best];
}

std::vector<Vector> sample_uniform_ball(const Vector& center, double r, std::size_t n, std::uint64_t seed) {
  require(r > 0.0 && std::isfinite(r), "sample_uniform_ball: radius must be positive");
  require(n >= 1, "sample_uniform_ball: n must be positive");
  require(center.size() >= 1, "sample_uniform_ball: empty center");
  const Eigen::Index p = center.size();
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(n);
  while (out.size() < n) {
    Vector dir(p);
    for (Eigen::Index j = 0; j < p; ++j) dir[j] = gauss(rng);
    const double norm = dir.norm();
    const double u = unif(rng);
    if (norm == 0.0) continue;
    const double rho = r * std::pow(u, 1.0 / static_cast<double>(p));
    out.push_back(center + (rho / norm) * dir);
  }
  return out;
}

namespace {

LocalSampleSet label_samples(const Vector& x0, const Vector& xb, const MlpModel& model, double radius, std::size_t n,
                             std::uint64_t seed) {
  LocalSampleSet ls;
  ls.x0 = x0;
  ls.x_b = xb;
  ls.radius = radius;
  ls.seed = seed;
  for (auto& s : sample_uniform_ball(xb, radius, n, seed)) {
    (model.predict_label(s) == 1 ? ls.samples1 : ls.samples0).push_back(std::move(s));
  }
  const double total = static_cast<double>(ls.size());
  ls.gamma0 = static_cast<double>(ls.samples0.size()) / total;
  ls.gamma1 = static_cast<double>(ls.samples1.size()) / total;
  return ls;
}

}  // namespace

LocalSampleSet build_local_sample_set(const Vector& x0, const Dataset& data, const MlpModel& model,
                                      const SamplerConfig& cfg) {
  require(x0.size() == data.dim(), "build_local_sample_set: x0 dimension mismatch");
  const NearestCounterfactuals nearest = nearest_counterfactuals(x0, data, model, cfg.k);
  if (nearest.points.empty()) fail(Errc::degenerate_data, "no favourably classified training points");
  std::size_t limit = nearest.points.size();
  if (cfg.bisect_limit > 0) limit = std::min(limit, cfg.bisect_limit);
  std::vector<Vector> boundary;
  boundary.reserve(limit);
  for (std::size_t k = 0; k < limit; ++k) boundary.push_back(boundary_bisection(x0, nearest.points[k], model, cfg.tol));
  const Vector xb = select_boundary(x0, boundary);

  LocalSampleSet ls = label_samples(x0, xb, model, cfg.radius, cfg.n, cfg.seed);
  if (ls.samples0.empty() || ls.samples1.empty()) {
    ls = label_samples(x0, xb, model, 2.0 * cfg.radius, cfg.n, derive_seed(cfg.seed, 1));
  }
  if (ls.samples0.empty() || ls.samples1.empty()) {
    fail(Errc::degenerate_neighborhood, "local samples fall in a single predicted class even at doubled radius");
  }
  return ls;
}

}  // namespace rbr
