#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rbr/data.hpp"

namespace rbr {

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

// Feed-forward network: ReLU hidden layers, single sigmoid output unit.
// This is the black-box classifier C; label 1 iff predict_proba >= 0.5.
class MlpModel {
 public:
  static constexpr int kFileVersion = 1;
  static const std::vector<int>& default_hidden();

  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers);

  // Glorot-uniform initialised network with widths p -> hidden... -> 1.
  static MlpModel initialise(Eigen::Index input_dim, const std::vector<int>& hidden, std::uint64_t seed);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  Eigen::Index input_dim() const;
  std::vector<int> widths() const;

  double logit(const Vector& x) const;
  double predict_proba(const Vector& x) const;
  int predict_label(const Vector& x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }
  // d predict_proba / dx.
  Vector proba_gradient(const Vector& x) const;

 private:
  void check_chain() const;
  std::vector<DenseLayer> layers_;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double l2_penalty = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> hidden = MlpModel::default_hidden();
};

struct TrainReport {
  std::vector<double> epoch_loss;  // accepted full-data loss after each epoch (index 0 = init)
  int lr_halvings = 0;
};

// Mean binary cross-entropy plus (l2/2)*||W||^2 over weight matrices.
// When `grad` is non-null it receives the gradient with the model's shape.
double training_loss(const MlpModel& model, const Matrix& features, std::span<const int> labels, double l2_penalty,
                     MlpModel* grad = nullptr);

// Mini-batch SGD with momentum. An epoch that raises the full training loss is
// rolled back and the learning rate halved, so epoch_loss is non-increasing.
MlpModel train_mlp(const Dataset& train, const TrainConfig& cfg, TrainReport* report = nullptr);

// Probability that a random positive outranks a random negative; ties count 1/2.
double auc(std::span<const double> scores, std::span<const int> labels);
double accuracy(const MlpModel& model, const Dataset& data);
std::vector<double> predict_all(const MlpModel& model, const Matrix& features);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);
std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

}  // namespace rbr
