#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rbr/classifier.hpp"
#include "rbr/recourse.hpp"
#include "rbr/sampler.hpp"

namespace rbr {

// Experiment configuration read from a `key = value` text file. Lines starting
// with '#' are comments; lists are comma separated. `version = 1` is required
// and unknown keys are rejected with a config error naming the key.
struct ExperimentConfig {
  static constexpr int kVersion = 1;

  // data
  std::string dataset = "synthetic";  // synthetic | german | sba | gmc
  std::string d1_path;
  std::string d2_path;
  long synthetic_n = 1000;
  double train_fraction = 0.8;
  std::uint64_t master_seed = 0;

  // classifier
  TrainConfig train{};

  // sampler
  std::size_t k = 1000;
  std::size_t n_samples = 200;
  double r_p = 0.2;
  double bisect_tol = 1e-4;
  std::size_t bisect_limit = 0;

  // recourse
  std::vector<RecourseMethod> methods{RecourseMethod::robust, RecourseMethod::wachter};
  double sigma = 1.0;
  double zeta = 1e-8;
  std::vector<double> eps0_grid{0.0, 0.5, 1.0};
  std::vector<double> eps1_grid{0.0, 0.5, 1.0};
  std::vector<double> delta_plus_grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> wachter_lambda_grid{0.1};  // initial lambda; reported in the delta_plus column
  PgdOptions outer{0.5, 0.1, 1e-6, 300, 60, true};
  GradientMode gradient = GradientMode::envelope;
  ConstraintCenter center = ConstraintCenter::input;
  double delta_prime = 0.0;
  std::vector<std::string> frozen;  // feature names; empty uses the dataset metadata

  // evaluation
  int future_models = 20;
  double future_fraction = 0.2;
  int instances = 20;
  int threads = 0;  // 0: hardware concurrency

  // single-shot CLI inputs
  std::string output_dir = "out";
  std::string model_path;
  std::string sample_path;
  std::optional<Vector> x0;
  int instance_index = 0;
  RecourseMethod method = RecourseMethod::robust;
  double eps0 = 0.0;
  double eps1 = 0.0;
  double delta_plus = 0.0;

  void validate() const;
  // Referenced input files must exist at run start.
  void check_paths() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical key = value rendering; parse_config(render_config(c)) round-trips.
std::string render_config(const ExperimentConfig& cfg);

// RecourseConfig for one grid point, taking shared settings from the experiment.
RecourseConfig recourse_config(const ExperimentConfig& cfg, double eps0, double eps1, double delta_plus,
                               const std::vector<bool>& frozen_mask);
SamplerConfig sampler_config(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace rbr
