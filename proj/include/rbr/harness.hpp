#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rbr/classifier.hpp"
#include "rbr/config.hpp"
#include "rbr/data.hpp"
#include "rbr/recourse.hpp"

namespace rbr {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Current data split into train/test, future data in the same scaled units.
struct PreparedData {
  Dataset d1_train;
  Dataset d1_test;
  Dataset d2;
  std::vector<bool> frozen_mask;
};

PreparedData prepare_data(const ExperimentConfig& cfg);
TrainConfig current_train_config(const ExperimentConfig& cfg);

// m models, each trained on d1_train plus a fresh `fraction` subsample of d2.
std::vector<MlpModel> retrain_future_models(const Dataset& d1_train, const Dataset& d2, int m, double fraction,
                                            std::uint64_t seed, const TrainConfig& base = {}, int threads = 1);

struct Validity {
  int current_valid = 0;
  double future_validity = 0.0;
};
Validity evaluate_recourse(const Vector& x_prime, const MlpModel& current, const std::vector<MlpModel>& future);

struct Experiment {
  ExperimentConfig cfg;
  PreparedData data;
  MlpModel current;
  TrainReport report;
  double test_accuracy = 0.0;
  double test_auc = 0.0;
  std::vector<MlpModel> future;
};

Experiment prepare_experiment(const ExperimentConfig& cfg);

// Test rows the current model labels 0, in seeded order, at most cfg.instances.
std::vector<Eigen::Index> select_instances(const ExperimentConfig& cfg, const Dataset& test, const MlpModel& model);
std::vector<Eigen::Index> select_instances(const Experiment& exp);

struct EvaluationRecord {
  int instance_id = 0;
  RecourseMethod method = RecourseMethod::robust;
  double eps0 = 0.0;
  double eps1 = 0.0;
  double delta_plus = 0.0;  // Wachter rows: initial lambda of the budget
  double cost = 0.0;
  int current_valid = 0;
  double future_validity = 0.0;
  bool converged = false;
  std::string failure_reason;  // nonempty: excluded from means
};

struct AggregateRecord {
  RecourseMethod method = RecourseMethod::robust;
  double eps0 = 0.0;
  double eps1 = 0.0;
  double delta_plus = 0.0;
  int count = 0;
  int failures = 0;
  double mean_cost = 0.0;
  double se_cost = 0.0;
  double mean_current_validity = 0.0;
  double mean_future_validity = 0.0;
  double se_future_validity = 0.0;
  bool pareto = false;
};

struct SweepTable {
  std::vector<EvaluationRecord> records;
  std::vector<AggregateRecord> aggregates;
};

SweepTable pareto_sweep(const Experiment& exp);
std::vector<AggregateRecord> aggregate(const std::vector<EvaluationRecord>& records);
// Flags configurations not dominated in (lower mean cost, higher mean future validity), per method.
void mark_pareto(std::vector<AggregateRecord>& rows);

std::string records_csv(const std::vector<EvaluationRecord>& records);
std::string aggregates_csv(const std::vector<AggregateRecord>& rows);
std::string manifest_json(const Experiment& exp, const std::string& command);
std::string metrics_json(const Experiment& exp);

// Full grid; writes instances.csv, aggregate.csv and manifest.json under out_dir.
SweepTable run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
// Single configuration point (eps0, eps1, delta_plus) for every method plus classifier metrics.
SweepTable run_benchmark(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// Single-shot commands behind the CLI. Each writes JSON under out_dir.
// train: model.json and metrics.json.
void run_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
// sample: sample_set.json for x0 (or the instance_index-th selected instance) under model_path.
LocalSampleSet run_sample(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
// recourse: recourse.json for `method`; reuses sample_path when given.
RecourseResult run_recourse(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace rbr
