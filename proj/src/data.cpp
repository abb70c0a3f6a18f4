#include "rbr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_map>

#include "rbr/error.hpp"
#include "rbr/seeding.hpp"

namespace rbr {

Scaler Scaler::identity(Eigen::Index dim) {
  Scaler s;
  s.ranges.assign(static_cast<std::size_t>(dim), FeatureRange{0.0, 1.0});
  return s;
}

Scaler Scaler::fit(const Matrix& features) {
  require(features.rows() > 0, "cannot fit a scaler on zero rows");
  Scaler s;
  s.ranges.resize(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    s.ranges[j] = {features.col(j).minCoeff(), features.col(j).maxCoeff()};
  }
  return s;
}

namespace {
double span_of(const FeatureRange& r) {
  const double w = r.max - r.min;
  return w > 0.0 ? w : 1.0;
}
}  // namespace

Vector Scaler::transform(const Vector& raw) const {
  require(raw.size() == static_cast<Eigen::Index>(ranges.size()), "scaler dimension mismatch");
  Vector out(raw.size());
  for (Eigen::Index j = 0; j < raw.size(); ++j) out[j] = (raw[j] - ranges[j].min) / span_of(ranges[j]);
  return out;
}

Vector Scaler::inverse(const Vector& scaled) const {
  require(scaled.size() == static_cast<Eigen::Index>(ranges.size()), "scaler dimension mismatch");
  Vector out(scaled.size());
  for (Eigen::Index j = 0; j < scaled.size(); ++j) out[j] = scaled[j] * span_of(ranges[j]) + ranges[j].min;
  return out;
}

Matrix Scaler::transform_rows(const Matrix& raw) const {
  require(raw.cols() == static_cast<Eigen::Index>(ranges.size()), "scaler dimension mismatch");
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    out.col(j) = (raw.col(j).array() - ranges[j].min) / span_of(ranges[j]);
  }
  return out;
}

bool Scaler::is_identity() const {
  return std::all_of(ranges.begin(), ranges.end(),
                     [](const FeatureRange& r) { return r.min == 0.0 && r.max == 1.0; });
}

std::vector<bool> Dataset::frozen_mask() const {
  std::vector<bool> mask(meta.size());
  for (std::size_t j = 0; j < meta.size(); ++j) mask[j] = meta[j].immutable;
  return mask;
}

void Dataset::validate() const {
  require(rows() >= 1 && dim() >= 1, "dataset must have n >= 1 and p >= 1");
  require(labels.size() == static_cast<std::size_t>(rows()), "label count does not match row count");
  require(meta.size() == static_cast<std::size_t>(dim()), "feature metadata does not match dimension");
  require(scaler.ranges.size() == static_cast<std::size_t>(dim()), "scaler does not match dimension");
  for (int y : labels) require(y == 0 || y == 1, "labels must be 0 or 1");
  require(features.allFinite(), "features must be finite");
}

// ---------------------------------------------------------------- synthetic

int synthetic_label(double x1, double x2, double noise) {
  const double x1sq = x1 * x1;
  const double rhs = 1.0 + x1 + 2.0 * x1sq + x1sq * x1 - x1sq * x1sq + noise;
  return x2 >= rhs ? 1 : 0;
}

Dataset generate_synthetic(long n, double noise_std, std::uint64_t seed) {
  require(n >= 1, "generate_synthetic: n must be positive");
  require(noise_std >= 0.0 && std::isfinite(noise_std), "generate_synthetic: noise_std must be >= 0");
  Rng rng(seed);
  std::uniform_real_distribution<double> u1(-2.0, 4.0);
  std::uniform_real_distribution<double> u2(-2.0, 7.0);
  std::normal_distribution<double> eps(0.0, 1.0);

  Dataset d;
  d.features.resize(n, 2);
  d.labels.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double x1 = u1(rng);
    const double x2 = u2(rng);
    const double e = noise_std > 0.0 ? noise_std * eps(rng) : 0.0;
    d.features(i, 0) = x1;
    d.features(i, 1) = x2;
    d.labels[static_cast<std::size_t>(i)] = synthetic_label(x1, x2, e);
  }
  d.meta = {{"x1", false}, {"x2", false}};
  d.scaler = Scaler::identity(2);
  return d;
}

// ---------------------------------------------------------------- csv

Schema parse_schema(std::string_view id) {
  if (id == "german") return Schema::german;
  if (id == "sba") return Schema::sba;
  if (id == "gmc") return Schema::gmc;
  fail(Errc::invalid_argument, "unknown dataset schema '" + std::string(id) + "'");
}

std::string_view schema_name(Schema schema) {
  switch (schema) {
    case Schema::german: return "german";
    case Schema::sba: return "sba";
    case Schema::gmc: return "gmc";
  }
  return "unknown";
}

const std::vector<std::string>& schema_columns(Schema schema) {
  static const std::vector<std::string> german{"duration", "amount", "personal_status_sex", "age"};
  static const std::vector<std::string> sba{"Term",         "NoEmp",        "CreateJob", "RetainedJob",
                                            "UrbanRural",   "ChgOffPrinGr", "GrAppv",    "SBA_Appv",
                                            "New",          "RealEstate",   "Portion",   "Recession"};
  static const std::vector<std::string> gmc{"RevolvingUtilizationOfUnsecuredLines",
                                            "age",
                                            "NumberOfTime30-59DaysPastDueNotWorse",
                                            "DebtRatio",
                                            "MonthlyIncome",
                                            "NumberOfOpenCreditLinesAndLoans",
                                            "NumberOfTimes90DaysLate",
                                            "NumberRealEstateLoansOrLines",
                                            "NumberOfTime60-89DaysPastDueNotWorse",
                                            "NumberOfDependents"};
  switch (schema) {
    case Schema::german: return german;
    case Schema::sba: return sba;
    case Schema::gmc: return gmc;
  }
  return german;
}

namespace {

bool is_categorical(Schema schema, const std::string& column) {
  return schema == Schema::german && column == "personal_status_sex";
}

bool is_immutable(Schema schema, const std::string& column) {
  return schema == Schema::german && column == "personal_status_sex";
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::optional<double> parse_real(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN"; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Maps a raw label token to {0,1} (1 = favorable) per schema convention.
std::optional<int> map_label(Schema schema, const std::string& token, bool raw_gmc_column) {
  if (raw_gmc_column) {
    if (token == "1") return 0;
    if (token == "0") return 1;
    return std::nullopt;
  }
  if (token == "1") return 1;
  if (token == "0") return 0;
  const std::string t = lower(token);
  switch (schema) {
    case Schema::german:
      if (t == "good") return 1;
      if (t == "bad" || t == "2") return 0;
      break;
    case Schema::sba:
      if (t == "p i f" || t == "pif") return 1;
      if (t == "chgoff") return 0;
      break;
    case Schema::gmc: break;
  }
  return std::nullopt;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, Schema schema) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) fail(Errc::schema, "empty file '" + path.string() + "'");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const std::vector<std::string> header = split_csv_line(line);

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto& columns = schema_columns(schema);
  std::vector<std::size_t> col_index;
  for (const auto& name : columns) {
    auto idx = find_col(name);
    if (!idx) fail(Errc::schema, "missing column '" + name + "' for schema " + std::string(schema_name(schema)));
    col_index.push_back(*idx);
  }
  bool raw_gmc = false;
  auto label_idx = find_col("label");
  if (!label_idx && schema == Schema::gmc) {
    label_idx = find_col("SeriousDlqin2yrs");
    raw_gmc = label_idx.has_value();
  }
  if (!label_idx) fail(Errc::schema, "missing column 'label' for schema " + std::string(schema_name(schema)));

  const std::size_t p = columns.size();
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<int> labels;
  std::vector<std::unordered_map<std::string, double>> categories(p);

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      fail(Errc::parse, "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " cells, found " + std::to_string(cells.size()));
    }
    std::vector<std::optional<double>> parsed(p);
    for (std::size_t j = 0; j < p; ++j) {
      const std::string& cell = cells[col_index[j]];
      if (is_categorical(schema, columns[j])) {
        auto& codes = categories[j];
        auto [it, inserted] = codes.try_emplace(cell, static_cast<double>(codes.size()));
        parsed[j] = it->second;
      } else if (!is_missing(cell)) {
        parsed[j] = parse_real(cell);
        if (!parsed[j]) {
          fail(Errc::parse, "row " + std::to_string(row) + ", column " + std::to_string(col_index[j]) + " ('" +
                                columns[j] + "'): cannot parse '" + cell + "'");
        }
      }
    }
    const auto y = map_label(schema, cells[*label_idx], raw_gmc);
    if (!y) {
      fail(Errc::parse, "row " + std::to_string(row) + ", column " + std::to_string(*label_idx) +
                            ": bad label '" + cells[*label_idx] + "'");
    }
    values.push_back(std::move(parsed));
    labels.push_back(*y);
    ++row;
  }
  if (values.empty()) fail(Errc::schema, "no data rows in '" + path.string() + "'");

  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> present;
    for (const auto& r : values) {
      if (r[j]) present.push_back(*r[j]);
    }
    if (present.empty()) fail(Errc::parse, "column '" + columns[j] + "' has no values");
    const double fill = present.size() < values.size() ? median_of(present) : 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i][j].value_or(fill);
    }
    d.meta.push_back({columns[j], is_immutable(schema, columns[j])});
  }
  d.labels = std::move(labels);
  d.scaler = Scaler::identity(static_cast<Eigen::Index>(p));
  return d;
}

// ---------------------------------------------------------------- split

Dataset subset(const Dataset& data, std::span<const Eigen::Index> rows) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.dim());
  out.labels.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] >= 0 && rows[k] < data.rows(), "subset: row index out of range");
    out.features.row(static_cast<Eigen::Index>(k)) = data.features.row(rows[k]);
    out.labels[k] = data.labels[static_cast<std::size_t>(rows[k])];
  }
  out.meta = data.meta;
  out.scaler = data.scaler;
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  require(a.dim() == b.dim(), "concat: dimension mismatch");
  Dataset out;
  out.features.resize(a.rows() + b.rows(), a.dim());
  out.features << a.features, b.features;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.meta = a.meta;
  out.scaler = a.scaler;
  return out;
}

Dataset apply_scaler(const Dataset& raw, const Scaler& scaler) {
  Dataset out = raw;
  out.features = scaler.transform_rows(raw.features);
  out.scaler = scaler;
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  require(data.rows() >= 1, "split: dataset is empty");
  require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0, "split: train_fraction must lie in (0,1)");
  const Eigen::Index n = data.rows();
  const auto n_train = static_cast<Eigen::Index>(std::llround(spec.train_fraction * static_cast<double>(n)));
  if (n_train <= 0 || n_train >= n) {
    fail(Errc::invalid_argument, "split: train_fraction " + std::to_string(spec.train_fraction) + " with n=" +
                                     std::to_string(n) + " leaves one side empty");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(spec.seed);
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  std::span<const Eigen::Index> all(order);
  Dataset train = subset(data, all.first(static_cast<std::size_t>(n_train)));
  Dataset test = subset(data, all.subspan(static_cast<std::size_t>(n_train)));
  const Scaler scaler = spec.scale ? Scaler::fit(train.features) : Scaler::identity(data.dim());
  return {apply_scaler(train, scaler), apply_scaler(test, scaler)};
}

}  // namespace rbr
