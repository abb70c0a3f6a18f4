#include "rbr/classifier.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "rbr/error.hpp"
#include "rbr/seeding.hpp"

namespace rbr {

namespace {

double sigmoid(double z) {
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  // Keep the output in the open interval (0,1).
  return std::clamp(s, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

const std::vector<int>& MlpModel::default_hidden() {
  static const std::vector<int> hidden{20, 50, 20};
  return hidden;
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check_chain(); }

void MlpModel::check_chain() const {
  require(!layers_.empty(), "MLP needs at least one layer");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    require(l.weights.rows() == l.bias.size(), "MLP layer " + std::to_string(k) + ": bias size mismatch");
    if (k > 0) {
      require(l.weights.cols() == layers_[k - 1].weights.rows(),
              "MLP layer " + std::to_string(k) + ": input width does not chain");
    }
  }
  require(layers_.back().weights.rows() == 1, "MLP output layer must have one unit");
}

MlpModel MlpModel::initialise(Eigen::Index input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
  require(input_dim >= 1, "MLP input dimension must be positive");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  Eigen::Index fan_in = input_dim;
  std::vector<int> outs = hidden;
  outs.push_back(1);
  for (int fan_out : outs) {
    require(fan_out >= 1, "MLP widths must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer l{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = u(rng);
    layers.push_back(std::move(l));
    fan_in = fan_out;
  }
  return MlpModel(std::move(layers));
}

Eigen::Index MlpModel::input_dim() const { return layers_.empty() ? 0 : layers_.front().weights.cols(); }

std::vector<int> MlpModel::widths() const {
  std::vector<int> w{static_cast<int>(input_dim())};
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.weights.rows()));
  return w;
}

double MlpModel::logit(const Vector& x) const {
  require(x.size() == input_dim(), "predict: expected input of dimension " + std::to_string(input_dim()) +
                                       ", got " + std::to_string(x.size()));
  Vector a = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Vector z = layers_[k].weights * a + layers_[k].bias;
    a = k + 1 < layers_.size() ? Vector(z.cwiseMax(0.0)) : z;
  }
  return a[0];
}

double MlpModel::predict_proba(const Vector& x) const { return sigmoid(logit(x)); }

Vector MlpModel::proba_gradient(const Vector& x) const {
  require(x.size() == input_dim(), "proba_gradient: dimension mismatch");
  std::vector<Vector> pre;  // pre-activations of hidden layers
  Vector a = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Vector z = layers_[k].weights * a + layers_[k].bias;
    if (k + 1 < layers_.size()) {
      pre.push_back(z);
      a = z.cwiseMax(0.0);
    } else {
      a = z;
    }
  }
  const double s = sigmoid(a[0]);
  Vector delta = Vector::Constant(1, s * (1.0 - s));
  for (std::size_t k = layers_.size(); k-- > 0;) {
    Vector back = layers_[k].weights.transpose() * delta;
    if (k == 0) return back;
    delta = back.cwiseProduct((pre[k - 1].array() > 0.0).cast<double>().matrix());
  }
  return delta;
}

// ---------------------------------------------------------------- training

double training_loss(const MlpModel& model, const Matrix& features, std::span<const int> labels, double l2_penalty,
                     MlpModel* grad) {
  const auto& layers = model.layers();
  const Eigen::Index n = features.rows();
  require(n > 0 && static_cast<std::size_t>(n) == labels.size(), "training_loss: bad batch");

  // Column-major activations: one column per example.
  std::vector<Matrix> acts{features.transpose()};
  std::vector<Matrix> pres;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Matrix z = (layers[k].weights * acts.back()).colwise() + layers[k].bias;
    pres.push_back(z);
    acts.push_back(k + 1 < layers.size() ? Matrix(z.cwiseMax(0.0)) : z);
  }
  const Eigen::RowVectorXd logits = acts.back().row(0);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) loss += softplus(logits[i]) - labels[static_cast<std::size_t>(i)] * logits[i];
  loss /= static_cast<double>(n);
  double reg = 0.0;
  for (const auto& l : layers) reg += l.weights.squaredNorm();
  loss += 0.5 * l2_penalty * reg;

  if (grad != nullptr) {
    std::vector<DenseLayer> g(layers.size());
    Matrix delta(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = logits[i];
      const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      delta(0, i) = (s - labels[static_cast<std::size_t>(i)]) / static_cast<double>(n);
    }
    for (std::size_t k = layers.size(); k-- > 0;) {
      g[k].weights = delta * acts[k].transpose() + l2_penalty * layers[k].weights;
      g[k].bias = delta.rowwise().sum();
      if (k > 0) {
        Matrix back = layers[k].weights.transpose() * delta;
        delta = back.cwiseProduct((pres[k - 1].array() > 0.0).cast<double>().matrix());
      }
    }
    *grad = MlpModel(std::move(g));
  }
  return loss;
}

MlpModel train_mlp(const Dataset& train, const TrainConfig& cfg, TrainReport* report) {
  train.validate();
  require(cfg.epochs >= 0 && cfg.batch_size >= 1, "train_mlp: epochs >= 0 and batch_size >= 1 required");
  require(cfg.learning_rate > 0.0, "train_mlp: learning_rate must be positive");
  require(cfg.l2_penalty >= 0.0, "train_mlp: l2_penalty must be >= 0");
  const auto positives = std::count(train.labels.begin(), train.labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(train.labels.size())) {
    fail(Errc::degenerate_data, "train_mlp: training data contains a single class");
  }

  Rng rng(cfg.seed);
  MlpModel model = MlpModel::initialise(train.dim(), cfg.hidden, rng());
  std::vector<DenseLayer> velocity;
  auto reset_velocity = [&] {
    velocity.clear();
    for (const auto& l : model.layers())
      velocity.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), Vector::Zero(l.bias.size())});
  };
  reset_velocity();

  const Eigen::Index n = train.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  double lr = cfg.learning_rate;
  double prev = training_loss(model, train.features, train.labels, cfg.l2_penalty);
  TrainReport rep;
  rep.epoch_loss.push_back(prev);

  Matrix xb;
  std::vector<int> yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const MlpModel snapshot = model;
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
      xb.resize(len, train.dim());
      yb.resize(static_cast<std::size_t>(len));
      for (Eigen::Index r = 0; r < len; ++r) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = train.features.row(src);
        yb[static_cast<std::size_t>(r)] = train.labels[static_cast<std::size_t>(src)];
      }
      MlpModel g;
      training_loss(model, xb, yb, cfg.l2_penalty, &g);
      auto& layers = model.layers();
      for (std::size_t k = 0; k < layers.size(); ++k) {
        velocity[k].weights = cfg.momentum * velocity[k].weights - lr * g.layers()[k].weights;
        velocity[k].bias = cfg.momentum * velocity[k].bias - lr * g.layers()[k].bias;
        layers[k].weights += velocity[k].weights;
        layers[k].bias += velocity[k].bias;
      }
    }
    const double loss = training_loss(model, train.features, train.labels, cfg.l2_penalty);
    if (loss > prev || !std::isfinite(loss)) {
      model = snapshot;
      reset_velocity();
      lr *= 0.5;
      ++rep.lr_halvings;
      rep.epoch_loss.push_back(prev);
    } else {
      prev = loss;
      rep.epoch_loss.push_back(loss);
    }
  }
  if (report != nullptr) *report = std::move(rep);
  return model;
}

// ---------------------------------------------------------------- metrics

double auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "auc: scores and labels differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with mid-ranks for ties.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      const int y = labels[idx[k]];
      require(y == 0 || y == 1, "auc: labels must be 0 or 1");
      if (y == 1) {
        rank_sum_pos += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(Errc::degenerate_data, "auc: both classes must be present");
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<double> predict_all(const MlpModel& model, const Matrix& features) {
  std::vector<double> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    out[static_cast<std::size_t>(i)] = model.predict_proba(features.row(i).transpose());
  return out;
}

double accuracy(const MlpModel& model, const Dataset& data) {
  require(data.rows() > 0, "accuracy: empty dataset");
  long hits = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    hits += model.predict_label(data.row(i)) == data.labels[static_cast<std::size_t>(i)];
  return static_cast<double>(hits) / static_cast<double>(data.rows());
}

// ---------------------------------------------------------------- persistence

std::string model_to_json(const MlpModel& model) {
  nlohmann::json j;
  j["format"] = "rbr-mlp";
  j["version"] = MlpModel::kFileVersion;
  j["widths"] = model.widths();
  j["hidden_activation"] = "relu";
  j["output_activation"] = "sigmoid";
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    layers.push_back({{"weights", w}, {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return j.dump();
}

MlpModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::malformed_file, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "rbr-mlp") fail(Errc::malformed_file, "not an rbr-mlp model file");
    const int version = j.at("version").get<int>();
    if (version != MlpModel::kFileVersion) {
      fail(Errc::version_mismatch, "model file version " + std::to_string(version) + ", expected " +
                                       std::to_string(MlpModel::kFileVersion));
    }
    const auto widths = j.at("widths").get<std::vector<int>>();
    const auto& jl = j.at("layers");
    if (widths.size() < 2 || jl.size() + 1 != widths.size()) fail(Errc::malformed_file, "layer count mismatch");
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k < jl.size(); ++k) {
      const auto w = jl[k].at("weights").get<std::vector<double>>();
      const auto b = jl[k].at("bias").get<std::vector<double>>();
      const int in = widths[k];
      const int out = widths[k + 1];
      if (in < 1 || out < 1 || w.size() != static_cast<std::size_t>(in) * static_cast<std::size_t>(out) ||
          b.size() != static_cast<std::size_t>(out)) {
        fail(Errc::malformed_file, "layer " + std::to_string(k) + " has inconsistent shape");
      }
      DenseLayer l{Matrix(out, in), Vector(out)};
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) l.weights(r, c) = w[static_cast<std::size_t>(r) * in + c];
      for (int r = 0; r < out; ++r) l.bias[r] = b[static_cast<std::size_t>(r)];
      layers.push_back(std::move(l));
    }
    return MlpModel(std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::malformed_file, std::string("model file has bad structure: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_argument) fail(Errc::malformed_file, e.what());
    throw;
  }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) fail(Errc::io, "cannot write '" + path.string() + "'");
  out << model_to_json(model) << '\n';
  if (!out) fail(Errc::io, "write failed for '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace rbr
