#include "rbr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "rbr/error.hpp"
#include "rbr/sampler.hpp"
#include "rbr/seeding.hpp"
#include "rbr/serialize.hpp"

namespace rbr {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, count) on a small pool; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t count, int threads, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

auto record_key(const EvaluationRecord& r) {
  return std::make_tuple(static_cast<int>(r.method), r.eps0, r.eps1, r.delta_plus, r.instance_id);
}

}  // namespace

TrainConfig current_train_config(const ExperimentConfig& cfg) {
  TrainConfig t = cfg.train;
  t.seed = derive_seed(cfg.master_seed, purpose::train_current);
  return t;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  cfg.check_paths();
  PreparedData out;
  Dataset d1;
  Dataset d2;
  const bool synthetic = cfg.dataset == "synthetic";
  if (synthetic) {
    d1 = generate_synthetic(cfg.synthetic_n, 0.0, derive_seed(cfg.master_seed, purpose::synthetic_d1));
    d2 = generate_synthetic(cfg.synthetic_n, 1.0, derive_seed(cfg.master_seed, purpose::synthetic_d2));
  } else {
    const Schema schema = parse_schema(cfg.dataset);
    d1 = load_csv(cfg.d1_path, schema);
    d2 = load_csv(cfg.d2_path, schema);
  }
  SplitSpec spec{cfg.train_fraction, derive_seed(cfg.master_seed, purpose::split), !synthetic};
  std::tie(out.d1_train, out.d1_test) = split(d1, spec);
  out.d2 = apply_scaler(d2, out.d1_train.scaler);

  if (cfg.frozen.empty()) {
    out.frozen_mask = out.d1_train.frozen_mask();
  } else {
    out.frozen_mask.assign(static_cast<std::size_t>(out.d1_train.dim()), false);
    for (const auto& name : cfg.frozen) {
      const auto it = std::find_if(out.d1_train.meta.begin(), out.d1_train.meta.end(),
                                   [&](const FeatureMeta& m) { return m.name == name; });
      if (it == out.d1_train.meta.end()) fail(Errc::config, "config key 'frozen': unknown feature '" + name + "'");
      out.frozen_mask[static_cast<std::size_t>(it - out.d1_train.meta.begin())] = true;
    }
  }
  return out;
}

std::vector<MlpModel> retrain_future_models(const Dataset& d1_train, const Dataset& d2, int m, double fraction,
                                            std::uint64_t seed, const TrainConfig& base, int threads) {
  require(d2.rows() >= 1, "retrain_future_models: future data is empty");
  require(m >= 1, "retrain_future_models: need at least one model");
  require(fraction > 0.0 && fraction <= 1.0, "retrain_future_models: fraction must lie in (0,1]");
  require(d1_train.dim() == d2.dim(), "retrain_future_models: dimension mismatch");
  const auto n2 = d2.rows();
  const auto take = std::clamp<Eigen::Index>(std::llround(fraction * static_cast<double>(n2)), 1, n2);
  std::vector<MlpModel> models(static_cast<std::size_t>(m));
  parallel_for(models.size(), threads, [&](std::size_t i) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n2));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng rng(derive_seed(seed, purpose::future_subsample, i));
    // Partial Fisher-Yates: the first `take` entries are a uniform subsample.
    for (Eigen::Index j = 0; j < take; ++j) {
      const auto r = j + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n2 - j));
      std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(r)]);
    }
    idx.resize(static_cast<std::size_t>(take));
    std::sort(idx.begin(), idx.end());
    const Dataset train = concat(d1_train, subset(d2, idx));
    TrainConfig tc = base;
    tc.seed = derive_seed(seed, purpose::future_train, i);
    models[i] = train_mlp(train, tc);
  });
  return models;
}

Validity evaluate_recourse(const Vector& x_prime, const MlpModel& current, const std::vector<MlpModel>& future) {
  require(!future.empty(), "evaluate_recourse: empty future ensemble");
  require(x_prime.size() == current.input_dim(), "evaluate_recourse: dimension mismatch with current model");
  Validity v;
  v.current_valid = current.predict_label(x_prime);
  int hits = 0;
  for (const auto& m : future) {
    require(m.input_dim() == x_prime.size(), "evaluate_recourse: dimension mismatch with a future model");
    hits += m.predict_label(x_prime);
  }
  v.future_validity = static_cast<double>(hits) / static_cast<double>(future.size());
  return v;
}

Experiment prepare_experiment(const ExperimentConfig& cfg) {
  Experiment exp;
  exp.cfg = cfg;
  exp.data = prepare_data(cfg);
  exp.current = train_mlp(exp.data.d1_train, current_train_config(cfg), &exp.report);
  const auto scores = predict_all(exp.current, exp.data.d1_test.features);
  exp.test_accuracy = accuracy(exp.current, exp.data.d1_test);
  exp.test_auc = auc(scores, exp.data.d1_test.labels);
  TrainConfig base = cfg.train;
  exp.future = retrain_future_models(exp.data.d1_train, exp.data.d2, cfg.future_models, cfg.future_fraction,
                                     cfg.master_seed, base, resolve_threads(cfg.threads));
  return exp;
}

std::vector<Eigen::Index> select_instances(const ExperimentConfig& cfg, const Dataset& test, const MlpModel& model) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < test.rows(); ++i)
    if (model.predict_label(test.row(i)) == 0) idx.push_back(i);
  Rng rng(derive_seed(cfg.master_seed, purpose::instance_order));
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  if (idx.size() > static_cast<std::size_t>(cfg.instances)) idx.resize(static_cast<std::size_t>(cfg.instances));
  return idx;
}

std::vector<Eigen::Index> select_instances(const Experiment& exp) {
  return select_instances(exp.cfg, exp.data.d1_test, exp.current);
}

SweepTable pareto_sweep(const Experiment& exp) {
  const ExperimentConfig& cfg = exp.cfg;
  const auto instances = select_instances(exp);
  if (instances.empty()) fail(Errc::degenerate_data, "no test instance is labelled unfavourable by the current model");

  std::vector<std::vector<EvaluationRecord>> per_instance(instances.size());
  parallel_for(instances.size(), resolve_threads(cfg.threads), [&](std::size_t slot) {
    const int id = static_cast<int>(instances[slot]);
    const Vector x0 = exp.data.d1_test.row(instances[slot]);
    auto& out = per_instance[slot];

    auto emit = [&](RecourseMethod m, double e0, double e1, double dp, auto&& run) {
      EvaluationRecord rec;
      rec.instance_id = id;
      rec.method = m;
      rec.eps0 = e0;
      rec.eps1 = e1;
      rec.delta_plus = dp;
      try {
        const RecourseResult r = run();
        const Validity v = evaluate_recourse(r.x_prime, exp.current, exp.future);
        rec.cost = r.cost;
        rec.current_valid = v.current_valid;
        rec.future_validity = v.future_validity;
        rec.converged = r.converged;
      } catch (const Error& e) {
        rec.failure_reason = std::string(errc_name(e.code())) + ": " + e.what();
      }
      out.push_back(std::move(rec));
    };

    const bool needs_samples = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                           [](RecourseMethod m) { return m != RecourseMethod::wachter; });
    std::optional<LocalSampleSet> ls;
    std::string sample_failure;
    if (needs_samples) {
      try {
        ls = build_local_sample_set(x0, exp.data.d1_train, exp.current,
                                    sampler_config(cfg, derive_seed(cfg.master_seed, purpose::local_sampling,
                                                                    static_cast<std::uint64_t>(id))));
      } catch (const Error& e) {
        sample_failure = std::string(errc_name(e.code())) + ": " + e.what();
      }
    }
    auto with_samples = [&](auto&& fn) {
      return [&, fn]() -> RecourseResult {
        if (!ls) throw Error(Errc::degenerate_neighborhood, sample_failure);
        return fn(*ls);
      };
    };

    for (RecourseMethod m : cfg.methods) {
      if (m == RecourseMethod::robust) {
        for (double e0 : cfg.eps0_grid)
          for (double e1 : cfg.eps1_grid)
            for (double dp : cfg.delta_plus_grid) {
              const RecourseConfig rc = recourse_config(cfg, e0, e1, dp, exp.data.frozen_mask);
              emit(m, e0, e1, dp, with_samples([&, rc](const LocalSampleSet& s) {
                     return robust_recourse(x0, s, rc, &exp.current);
                   }));
            }
      } else if (m == RecourseMethod::kde) {
        for (double dp : cfg.delta_plus_grid) {
          const RecourseConfig rc = recourse_config(cfg, 0.0, 0.0, dp, exp.data.frozen_mask);
          emit(m, 0.0, 0.0, dp, with_samples([&, rc](const LocalSampleSet& s) {
                 return kde_recourse(x0, s, rc, &exp.current);
               }));
        }
      } else {
        for (double lambda : cfg.wachter_lambda_grid) {
          RecourseConfig rc = recourse_config(cfg, 0.0, 0.0, 0.0, exp.data.frozen_mask);
          rc.wachter.lambda0 = lambda;
          emit(m, 0.0, 0.0, lambda, [&, rc] { return wachter_recourse(x0, exp.current, rc); });
        }
      }
    }
  });

  SweepTable table;
  for (auto& v : per_instance)
    for (auto& r : v) table.records.push_back(std::move(r));
  std::sort(table.records.begin(), table.records.end(),
            [](const auto& a, const auto& b) { return record_key(a) < record_key(b); });
  table.aggregates = aggregate(table.records);
  return table;
}

std::vector<AggregateRecord> aggregate(const std::vector<EvaluationRecord>& records) {
  std::map<std::tuple<int, double, double, double>, std::vector<const EvaluationRecord*>> groups;
  for (const auto& r : records)
    groups[{static_cast<int>(r.method), r.eps0, r.eps1, r.delta_plus}].push_back(&r);
  std::vector<AggregateRecord> rows;
  for (const auto& [key, members] : groups) {
    AggregateRecord a;
    a.method = static_cast<RecourseMethod>(std::get<0>(key));
    a.eps0 = std::get<1>(key);
    a.eps1 = std::get<2>(key);
    a.delta_plus = std::get<3>(key);
    std::vector<double> cost;
    std::vector<double> fv;
    double cv = 0.0;
    for (const auto* r : members) {
      if (!r->failure_reason.empty()) {
        ++a.failures;
        continue;
      }
      cost.push_back(r->cost);
      fv.push_back(r->future_validity);
      cv += r->current_valid;
    }
    a.count = static_cast<int>(cost.size());
    auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
      mean = 0.0;
      se = 0.0;
      if (v.empty()) return;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      if (v.size() < 2) return;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    };
    if (a.count > 0) {
      mean_se(cost, a.mean_cost, a.se_cost);
      mean_se(fv, a.mean_future_validity, a.se_future_validity);
      a.mean_current_validity = cv / a.count;
    }
    rows.push_back(a);
  }
  mark_pareto(rows);
  return rows;
}

void mark_pareto(std::vector<AggregateRecord>& rows) {
  for (auto& a : rows) {
    a.pareto = a.count > 0;
    if (!a.pareto) continue;
    for (const auto& b : rows) {
      if (&a == &b || b.method != a.method || b.count == 0) continue;
      const bool no_worse = b.mean_cost <= a.mean_cost && b.mean_future_validity >= a.mean_future_validity;
      const bool better = b.mean_cost < a.mean_cost || b.mean_future_validity > a.mean_future_validity;
      if (no_worse && better) {
        a.pareto = false;
        break;
      }
    }
  }
}

std::string records_csv(const std::vector<EvaluationRecord>& records) {
  std::string s = "instance_id,method,eps0,eps1,delta_plus,cost,current_valid,future_validity,converged,failure_reason\n";
  for (const auto& r : records) {
    s += std::to_string(r.instance_id) + "," + std::string(method_name(r.method)) + "," + fmt(r.eps0) + "," +
         fmt(r.eps1) + "," + fmt(r.delta_plus) + "," + fmt(r.cost) + "," + std::to_string(r.current_valid) + "," +
         fmt(r.future_validity) + "," + (r.converged ? "1" : "0") + "," + csv_field(r.failure_reason) + "\n";
  }
  return s;
}

std::string aggregates_csv(const std::vector<AggregateRecord>& rows) {
  std::string s =
      "method,eps0,eps1,delta_plus,count,failures,mean_cost,se_cost,mean_current_validity,mean_future_validity,"
      "se_future_validity,pareto\n";
  for (const auto& a : rows) {
    s += std::string(method_name(a.method)) + "," + fmt(a.eps0) + "," + fmt(a.eps1) + "," + fmt(a.delta_plus) + "," +
         std::to_string(a.count) + "," + std::to_string(a.failures) + "," + fmt(a.mean_cost) + "," + fmt(a.se_cost) +
         "," + fmt(a.mean_current_validity) + "," + fmt(a.mean_future_validity) + "," + fmt(a.se_future_validity) +
         "," + (a.pareto ? "1" : "0") + "\n";
  }
  return s;
}

std::string metrics_json(const Experiment& exp) {
  nlohmann::json j;
  j["test_accuracy"] = exp.test_accuracy;
  j["test_auc"] = exp.test_auc;
  j["train_rows"] = exp.data.d1_train.rows();
  j["test_rows"] = exp.data.d1_test.rows();
  j["future_rows"] = exp.data.d2.rows();
  j["final_train_loss"] = exp.report.epoch_loss.empty() ? 0.0 : exp.report.epoch_loss.back();
  j["lr_halvings"] = exp.report.lr_halvings;
  j["future_models"] = exp.future.size();
  return j.dump(2);
}

std::string manifest_json(const Experiment& exp, const std::string& command) {
  const auto& cfg = exp.cfg;
  nlohmann::json j;
  j["command"] = command;
  j["library_version"] = kLibraryVersion;
  j["config"] = render_config(cfg);
  nlohmann::json seeds;
  seeds["master"] = cfg.master_seed;
  seeds["scheme"] = "splitmix64(splitmix64(splitmix64(master) ^ purpose) + index)";
  seeds["synthetic_d1"] = derive_seed(cfg.master_seed, purpose::synthetic_d1);
  seeds["synthetic_d2"] = derive_seed(cfg.master_seed, purpose::synthetic_d2);
  seeds["split"] = derive_seed(cfg.master_seed, purpose::split);
  seeds["train_current"] = derive_seed(cfg.master_seed, purpose::train_current);
  seeds["instance_order"] = derive_seed(cfg.master_seed, purpose::instance_order);
  seeds["purposes"] = {{"synthetic_d1", purpose::synthetic_d1}, {"synthetic_d2", purpose::synthetic_d2},
                       {"split", purpose::split}, {"train_current", purpose::train_current},
                       {"future_subsample", purpose::future_subsample}, {"future_train", purpose::future_train},
                       {"local_sampling", purpose::local_sampling}, {"instance_order", purpose::instance_order}};
  j["seeds"] = seeds;
  j["metrics"] = nlohmann::json::parse(metrics_json(exp));
  std::vector<int> mask(exp.data.frozen_mask.begin(), exp.data.frozen_mask.end());
  j["frozen_mask"] = mask;
  j["outputs"] = {"instances.csv", "aggregate.csv"};
  return j.dump(2);
}

namespace {

SweepTable run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, const char* command) {
  const Experiment exp = prepare_experiment(cfg);
  SweepTable table = pareto_sweep(exp);
  write_text_file(out_dir / "instances.csv", records_csv(table.records));
  write_text_file(out_dir / "aggregate.csv", aggregates_csv(table.aggregates));
  write_text_file(out_dir / "manifest.json", manifest_json(exp, command));
  return table;
}

}  // namespace

SweepTable run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  return run_and_write(cfg, out_dir, "sweep");
}

SweepTable run_benchmark(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  ExperimentConfig point = cfg;
  point.eps0_grid = {cfg.eps0};
  point.eps1_grid = {cfg.eps1};
  point.delta_plus_grid = {cfg.delta_plus};
  point.wachter_lambda_grid = {cfg.wachter_lambda_grid.front()};
  return run_and_write(point, out_dir, "benchmark");
}

void run_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const PreparedData data = prepare_data(cfg);
  TrainReport report;
  const MlpModel model = train_mlp(data.d1_train, current_train_config(cfg), &report);
  const auto scores = predict_all(model, data.d1_test.features);
  nlohmann::json j;
  j["test_accuracy"] = accuracy(model, data.d1_test);
  j["test_auc"] = auc(scores, data.d1_test.labels);
  j["train_accuracy"] = accuracy(model, data.d1_train);
  j["train_rows"] = data.d1_train.rows();
  j["test_rows"] = data.d1_test.rows();
  j["epoch_loss"] = report.epoch_loss;
  j["lr_halvings"] = report.lr_halvings;
  save_model(model, out_dir / "model.json");
  write_text_file(out_dir / "metrics.json", j.dump(2));
}

namespace {

struct SingleShot {
  PreparedData data;
  MlpModel model;
  Vector x0;
  std::uint64_t sample_seed = 0;
};

SingleShot single_shot(const ExperimentConfig& cfg) {
  if (cfg.model_path.empty()) fail(Errc::config, "config key 'model_path' is required for this command");
  SingleShot s;
  s.data = prepare_data(cfg);
  s.model = load_model(cfg.model_path);
  if (s.model.input_dim() != s.data.d1_train.dim())
    fail(Errc::invalid_argument, "model input dimension does not match the dataset");
  std::uint64_t id = 0;
  if (cfg.x0) {
    if (cfg.x0->size() != s.data.d1_train.dim()) fail(Errc::config, "config key 'x0': dimension mismatch");
    s.x0 = *cfg.x0;
  } else {
    ExperimentConfig wide = cfg;
    wide.instances = std::numeric_limits<int>::max();
    const auto idx = select_instances(wide, s.data.d1_test, s.model);
    if (static_cast<std::size_t>(cfg.instance_index) >= idx.size())
      fail(Errc::config, "config key 'instance_index': only " + std::to_string(idx.size()) +
                             " unfavourable test instances are available");
    id = static_cast<std::uint64_t>(idx[static_cast<std::size_t>(cfg.instance_index)]);
    s.x0 = s.data.d1_test.row(idx[static_cast<std::size_t>(cfg.instance_index)]);
  }
  s.sample_seed = derive_seed(cfg.master_seed, purpose::local_sampling, id);
  return s;
}

}  // namespace

LocalSampleSet run_sample(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const SingleShot s = single_shot(cfg);
  if (s.model.predict_label(s.x0) == 1) fail(Errc::already_favorable, "input is already classified favourably");
  LocalSampleSet ls = build_local_sample_set(s.x0, s.data.d1_train, s.model, sampler_config(cfg, s.sample_seed));
  write_text_file(out_dir / "sample_set.json", sample_set_to_json(ls));
  return ls;
}

RecourseResult run_recourse(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const SingleShot s = single_shot(cfg);
  const RecourseConfig rc = recourse_config(cfg, cfg.eps0, cfg.eps1, cfg.delta_plus, s.data.frozen_mask);
  RecourseResult r;
  if (cfg.method == RecourseMethod::wachter) {
    RecourseConfig wc = rc;
    wc.wachter.lambda0 = cfg.wachter_lambda_grid.front();
    r = wachter_recourse(s.x0, s.model, wc);
  } else {
    LocalSampleSet ls;
    if (!cfg.sample_path.empty()) {
      ls = sample_set_from_json(read_text_file(cfg.sample_path));
      ls.validate();
      if (ls.dim() != s.model.input_dim()) fail(Errc::invalid_argument, "sample set dimension does not match the model");
    } else {
      if (s.model.predict_label(s.x0) == 1) fail(Errc::already_favorable, "input is already classified favourably");
      ls = build_local_sample_set(s.x0, s.data.d1_train, s.model, sampler_config(cfg, s.sample_seed));
    }
    r = cfg.method == RecourseMethod::kde ? kde_recourse(ls.x0, ls, rc, &s.model) : robust_recourse(ls.x0, ls, rc, &s.model);
  }
  write_text_file(out_dir / "recourse.json", recourse_result_to_json(r, rc));
  return r;
}

}  // namespace rbr
