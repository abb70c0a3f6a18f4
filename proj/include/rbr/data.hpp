#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rbr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct FeatureMeta {
  std::string name;
  bool immutable = false;
};

struct FeatureRange {
  double min = 0.0;
  double max = 1.0;
};

// Per-feature min-max scaler. A constant column maps with unit range.
struct Scaler {
  std::vector<FeatureRange> ranges;

  static Scaler identity(Eigen::Index dim);
  static Scaler fit(const Matrix& features);

  Vector transform(const Vector& raw) const;
  Vector inverse(const Vector& scaled) const;
  Matrix transform_rows(const Matrix& raw) const;
  bool is_identity() const;
};

struct Dataset {
  Matrix features;          // n x p, one row per instance
  std::vector<int> labels;  // 0 = unfavorable, 1 = favorable
  std::vector<FeatureMeta> meta;
  Scaler scaler;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  Vector row(Eigen::Index i) const { return features.row(i).transpose(); }
  std::vector<bool> frozen_mask() const;

  // Throws invalid_argument when any structural invariant is broken.
  void validate() const;
};

enum class Schema { german, sba, gmc };

Schema parse_schema(std::string_view id);
std::string_view schema_name(Schema schema);
// Feature columns in output order; the label column is named "label"
// (gmc also accepts the raw "SeriousDlqin2yrs", which is inverted).
const std::vector<std::string>& schema_columns(Schema schema);

// Label rule of the synthetic task: 1 iff x2 >= 1 + x1 + 2x1^2 + x1^3 - x1^4 + noise.
int synthetic_label(double x1, double x2, double noise = 0.0);

// Uniform points on [-2,4] x [-2,7]; noise_std = 0 gives the present-data labeling.
Dataset generate_synthetic(long n, double noise_std, std::uint64_t seed);

Dataset load_csv(const std::filesystem::path& path, Schema schema);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool scale = true;  // false keeps native units and attaches an identity scaler
};

// Seeded permutation split; the scaler is fitted on the train side and
// applied to both.
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

Dataset subset(const Dataset& data, std::span<const Eigen::Index> rows);
Dataset concat(const Dataset& a, const Dataset& b);
// Replaces the scaler and rescales raw features with it.
Dataset apply_scaler(const Dataset& raw, const Scaler& scaler);

}  // namespace rbr
