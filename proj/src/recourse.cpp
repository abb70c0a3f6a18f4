#include "rbr/recourse.hpp"

#include <algorithm>
#include <cmath>

#include "rbr/error.hpp"
#include "rbr/projection.hpp"

namespace rbr {

std::string_view method_name(RecourseMethod m) {
  switch (m) {
    case RecourseMethod::kde: return "kde";
    case RecourseMethod::robust: return "rbr";
    case RecourseMethod::wachter: return "wachter";
  }
  return "unknown";
}

RecourseMethod parse_method(std::string_view name) {
  if (name == "kde") return RecourseMethod::kde;
  if (name == "rbr" || name == "robust") return RecourseMethod::robust;
  if (name == "wachter") return RecourseMethod::wachter;
  fail(Errc::invalid_argument, "unknown recourse method '" + std::string(name) + "'");
}

void RecourseConfig::validate(Eigen::Index dim) const {
  require(delta_plus >= 0.0 && std::isfinite(delta_plus), "recourse config: delta_plus must be >= 0");
  require(eps0 >= 0.0 && eps1 >= 0.0, "recourse config: eps0 and eps1 must be >= 0");
  require(sigma > 0.0 && std::isfinite(sigma), "recourse config: sigma must be positive");
  require(zeta > 0.0, "recourse config: zeta must be positive");
  require(delta_prime >= 0.0, "recourse config: delta_prime must be >= 0");
  require(outer.theta > 0.0 && outer.theta < 1.0 && outer.beta > 0.0, "recourse config: need theta in (0,1), beta > 0");
  require(frozen_mask.empty() || frozen_mask.size() == static_cast<std::size_t>(dim),
          "recourse config: frozen mask length mismatch");
}

namespace {

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Softmax weights of v.
std::vector<double> softmax(const std::vector<double>& v) {
  const double lse = log_sum_exp(v);
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::exp(v[i] - lse);
  return w;
}

double kernel_log_sum(const Vector& x, const std::vector<Vector>& samples, double h) {
  std::vector<double> e;
  e.reserve(samples.size());
  for (const auto& s : samples) e.push_back(-(x - s).squaredNorm() / (2.0 * h * h));
  return log_sum_exp(e);
}

Vector kernel_log_sum_gradient(const Vector& x, const std::vector<Vector>& samples, double h) {
  std::vector<double> e;
  e.reserve(samples.size());
  for (const auto& s : samples) e.push_back(-(x - s).squaredNorm() / (2.0 * h * h));
  const auto w = softmax(e);
  Vector g = Vector::Zero(x.size());
  for (std::size_t i = 0; i < samples.size(); ++i) g -= w[i] * (x - samples[i]) / (h * h);
  return g;
}

void finish(RecourseResult& r, const MlpModel* model) {
  r.cost = l1_distance(r.x_prime, r.x0);
  if (model != nullptr) {
    r.valid = model->predict_label(r.x_prime) == 1;
    r.converged = *r.valid;
  } else {
    r.converged = r.optimizer_converged;
  }
}

template <class F, class G>
RecourseResult descend(RecourseMethod method, const Vector& x0, const LocalSampleSet& ls, const RecourseConfig& cfg,
                       F&& f, G&& g, const MlpModel* model) {
  const FeasibleSet set = feasible_set(x0, ls, cfg);
  auto proj = [&set](const Vector& x) { return set.project(x); };
  PgdOptions opt = cfg.outer;
  opt.keep_trace = true;
  auto res = projected_gradient_descent(f, g, proj, set.project(ls.x_b), opt);
  RecourseResult r;
  r.method = method;
  r.x0 = x0;
  r.x_prime = std::move(res.x);
  r.delta = set.delta;
  r.objective_trace = std::move(res.trace);
  r.iterations = res.iterations;
  r.optimizer_converged = res.converged();
  finish(r, model);
  return r;
}

}  // namespace

// ---------------------------------------------------------------- KDE

double log_kde_objective(const Vector& x, const LocalSampleSet& ls, double h) {
  ls.validate();
  require(h > 0.0, "kde_objective: bandwidth must be positive");
  require(x.size() == ls.dim(), "kde_objective: dimension mismatch");
  return kernel_log_sum(x, ls.samples0, h) - kernel_log_sum(x, ls.samples1, h);
}

double kde_objective(const Vector& x, const LocalSampleSet& ls, double h) {
  return std::exp(log_kde_objective(x, ls, h));
}

Vector log_kde_gradient(const Vector& x, const LocalSampleSet& ls, double h) {
  ls.validate();
  require(h > 0.0, "kde_gradient: bandwidth must be positive");
  return kernel_log_sum_gradient(x, ls.samples0, h) - kernel_log_sum_gradient(x, ls.samples1, h);
}

// ---------------------------------------------------------------- robust

RobustObjective::RobustObjective(const LocalSampleSet& ls, const RecourseConfig& cfg)
    : ls_(ls),
      ball0_{cfg.eps0, cfg.sigma, ls.dim()},
      ball1_{cfg.eps1, cfg.sigma, ls.dim()},
      opt_cache_(AlphaCache::Kind::optimistic, ball0_, cfg.zeta, cfg.inner),
      pess_cache_(AlphaCache::Kind::pessimistic, ball1_, cfg.zeta, cfg.inner) {
  ls_.validate();
  cfg.validate(ls.dim());
}

double RobustObjective::log_value(const Vector& x) {
  require(x.size() == ls_.dim(), "robust_objective: dimension mismatch");
  std::vector<double> num;
  num.reserve(ls_.samples0.size());
  for (const auto& s : ls_.samples0) num.push_back(-opt_cache_.get((x - s).norm()).alpha);
  std::vector<double> den;
  den.reserve(ls_.samples1.size());
  for (const auto& s : ls_.samples1) den.push_back(pess_cache_.get((x - s).norm()).alpha);
  // Normalising constants (2 pi)^{p/2} cancel; sample counts do not.
  const double log_opt = log_sum_exp(num) - std::log(static_cast<double>(num.size()));
  const double log_pess = log_sum_exp(den) - std::log(static_cast<double>(den.size()));
  return std::log(ls_.gamma0) + log_opt - std::log(ls_.gamma1) - log_pess;
}

std::vector<WorstCaseComponent> RobustObjective::worst_case_components(const Vector& x, int cls) {
  std::vector<WorstCaseComponent> out;
  const auto& samples = cls == 0 ? ls_.samples0 : ls_.samples1;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const double dist = (x - s).norm();
    if (cls == 0) {
      out.push_back(recover_optimistic_component(x, s, opt_cache_.get(dist), ball0_));
    } else {
      out.push_back(recover_pessimistic_component(x, s, pess_cache_.get(dist), ball1_));
    }
  }
  return out;
}

Vector RobustObjective::gradient(const Vector& x) {
  require(x.size() == ls_.dim(), "robust_gradient: dimension mismatch");
  // Each side is log sum_i f_i(x) over the worst-case components, so its
  // gradient is the softmax-weighted score -Sigma_i^{-1}(x - mu_i).
  auto side = [&](int cls) {
    const auto comps = worst_case_components(x, cls);
    std::vector<double> logf;
    logf.reserve(comps.size());
    for (const auto& c : comps) logf.push_back(c.log_density(x));
    const auto w = softmax(logf);
    Vector g = Vector::Zero(x.size());
    for (std::size_t i = 0; i < comps.size(); ++i) g -= w[i] * comps[i].precision_times(x - comps[i].mean);
    return g;
  };
  return side(0) - side(1);
}

Vector RobustObjective::finite_difference_gradient(const Vector& x, double step) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector hi = x;
    Vector lo = x;
    hi[j] += step;
    lo[j] -= step;
    g[j] = (log_value(hi) - log_value(lo)) / (2.0 * step);
  }
  return g;
}

double log_robust_objective(const Vector& x, const LocalSampleSet& ls, const RecourseConfig& cfg) {
  RobustObjective obj(ls, cfg);
  return obj.log_value(x);
}

double robust_objective(const Vector& x, const LocalSampleSet& ls, const RecourseConfig& cfg) {
  return std::exp(log_robust_objective(x, ls, cfg));
}

Vector robust_gradient(const Vector& x, const LocalSampleSet& ls, const RecourseConfig& cfg) {
  RobustObjective obj(ls, cfg);
  return obj.gradient(x);
}

// ---------------------------------------------------------------- feasible set

Vector FeasibleSet::project(const Vector& x) const { return project_l1_ball(x, center, delta, frozen_mask); }

FeasibleSet feasible_set(const Vector& x0, const LocalSampleSet& ls, const RecourseConfig& cfg) {
  require(x0.size() == ls.dim(), "feasible_set: dimension mismatch");
  cfg.validate(x0.size());
  FeasibleSet set;
  set.frozen_mask = cfg.frozen_mask;
  if (cfg.center == ConstraintCenter::input) {
    set.center = x0;
    set.delta = l1_distance(x0, ls.x_b) + cfg.delta_plus;
  } else {
    set.center = ls.x_b;
    for (std::size_t j = 0; j < cfg.frozen_mask.size(); ++j) {
      if (cfg.frozen_mask[j]) set.center[static_cast<Eigen::Index>(j)] = x0[static_cast<Eigen::Index>(j)];
    }
    set.delta = cfg.delta_prime;
  }
  return set;
}

RecourseResult kde_recourse(const Vector& x0, const LocalSampleSet& ls, const RecourseConfig& cfg,
                            const MlpModel* model) {
  ls.validate();
  const double h = cfg.sigma;
  return descend(
      RecourseMethod::kde, x0, ls, cfg, [&](const Vector& x) { return log_kde_objective(x, ls, h); },
      [&](const Vector& x) { return log_kde_gradient(x, ls, h); }, model);
}

RecourseResult robust_recourse(const Vector& x0, const LocalSampleSet& ls, const RecourseConfig& cfg,
                               const MlpModel* model) {
  RobustObjective obj(ls, cfg);
  auto grad = [&](const Vector& x) {
    return cfg.gradient == GradientMode::envelope ? obj.gradient(x) : obj.finite_difference_gradient(x);
  };
  return descend(
      RecourseMethod::robust, x0, ls, cfg, [&](const Vector& x) { return obj.log_value(x); }, grad, model);
}

// ---------------------------------------------------------------- Wachter

RecourseResult wachter_recourse(const Vector& x0, const MlpModel& model, const RecourseConfig& cfg) {
  cfg.validate(x0.size());
  require(x0.size() == model.input_dim(), "wachter_recourse: dimension mismatch");
  if (model.predict_label(x0) == 1) fail(Errc::already_favorable, "input is already classified favourably");
  const WachterOptions& w = cfg.wachter;
  require(w.step > 0.0 && w.iterations >= 1 && w.max_doublings >= 0 && w.huber_width > 0.0,
          "wachter_recourse: invalid options");
  auto frozen = [&](Eigen::Index j) {
    return !cfg.frozen_mask.empty() && cfg.frozen_mask[static_cast<std::size_t>(j)];
  };
  auto smooth_abs = [&](double z) {
    const double a = std::abs(z);
    return a <= w.huber_width ? 0.5 * z * z / w.huber_width + 0.5 * w.huber_width : a;
  };

  RecourseResult r;
  r.method = RecourseMethod::wachter;
  r.x0 = x0;
  r.x_prime = x0;
  double lambda = w.lambda0;
  for (int round = 0; round <= w.max_doublings; ++round, lambda *= 2.0) {
    Vector x = x0;
    std::optional<Vector> best;
    double best_cost = 0.0;
    std::vector<double> trace;
    for (int it = 0; it < w.iterations; ++it) {
      const double p = model.predict_proba(x);
      double loss = lambda * (p - w.target) * (p - w.target);
      for (Eigen::Index j = 0; j < x.size(); ++j) loss += smooth_abs(x[j] - x0[j]);
      trace.push_back(loss);
      Vector g = 2.0 * lambda * (p - w.target) * model.proba_gradient(x);
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double z = x[j] - x0[j];
        g[j] += std::abs(z) <= w.huber_width ? z / w.huber_width : (z > 0.0 ? 1.0 : -1.0);
      }
      x -= w.step * g;
      for (Eigen::Index j = 0; j < x.size(); ++j)
        if (frozen(j)) x[j] = x0[j];
      if (model.predict_label(x) == 1) {
        const double c = l1_distance(x, x0);
        if (!best || c < best_cost) {
          best = x;
          best_cost = c;
        }
      }
    }
    r.objective_trace = std::move(trace);
    r.iterations += w.iterations;
    r.x_prime = best ? *best : x;
    if (best) {
      r.optimizer_converged = true;
      break;
    }
  }
  r.delta = std::numeric_limits<double>::infinity();
  finish(r, &model);
  return r;
}

}  // namespace rbr
