#include "rbr/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rbr/error.hpp"

namespace rbr {

using nlohmann::json;

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vecs_json(const std::vector<Vector>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(vec_json(v));
  return a;
}

std::vector<Vector> json_vecs(const json& j) {
  std::vector<Vector> out;
  for (const auto& e : j) out.push_back(json_vec(e));
  return out;
}

template <class F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(Errc::malformed_file, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string dataset_to_json(const Dataset& data) {
  json j;
  json rows = json::array();
  for (Eigen::Index i = 0; i < data.rows(); ++i) rows.push_back(vec_json(data.row(i)));
  j["features"] = rows;
  j["labels"] = data.labels;
  json meta = json::array();
  for (const auto& m : data.meta) meta.push_back({{"name", m.name}, {"immutable", m.immutable}});
  j["meta"] = meta;
  json sc = json::array();
  for (const auto& r : data.scaler.ranges) sc.push_back({{"min", r.min}, {"max", r.max}});
  j["scaler"] = sc;
  return j.dump();
}

Dataset dataset_from_json(const std::string& text) {
  Dataset d = parse_guard("dataset json", [&] {
    const json j = json::parse(text);
    Dataset out;
    const auto& rows = j.at("features");
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index p = n > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    out.features.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector r = json_vec(rows[static_cast<std::size_t>(i)]);
      if (r.size() != p) fail(Errc::malformed_file, "dataset json: ragged feature rows");
      out.features.row(i) = r.transpose();
    }
    out.labels = j.at("labels").get<std::vector<int>>();
    for (const auto& m : j.at("meta")) out.meta.push_back({m.at("name").get<std::string>(), m.at("immutable").get<bool>()});
    for (const auto& r : j.at("scaler")) out.scaler.ranges.push_back({r.at("min").get<double>(), r.at("max").get<double>()});
    return out;
  });
  try {
    d.validate();
  } catch (const Error& e) {
    fail(Errc::malformed_file, std::string("dataset json: ") + e.what());
  }
  return d;
}

std::string sample_set_to_json(const LocalSampleSet& ls) {
  json j;
  j["x0"] = vec_json(ls.x0);
  j["x_b"] = vec_json(ls.x_b);
  j["samples0"] = vecs_json(ls.samples0);
  j["samples1"] = vecs_json(ls.samples1);
  j["gamma0"] = ls.gamma0;
  j["gamma1"] = ls.gamma1;
  j["radius"] = ls.radius;
  j["seed"] = ls.seed;
  return j.dump();
}

LocalSampleSet sample_set_from_json(const std::string& text) {
  return parse_guard("sample set json", [&] {
    const json j = json::parse(text);
    LocalSampleSet ls;
    ls.x0 = json_vec(j.at("x0"));
    ls.x_b = json_vec(j.at("x_b"));
    ls.samples0 = json_vecs(j.at("samples0"));
    ls.samples1 = json_vecs(j.at("samples1"));
    ls.gamma0 = j.at("gamma0").get<double>();
    ls.gamma1 = j.at("gamma1").get<double>();
    ls.radius = j.at("radius").get<double>();
    ls.seed = j.at("seed").get<std::uint64_t>();
    return ls;
  });
}

std::string recourse_result_to_json(const RecourseResult& r, const RecourseConfig& cfg) {
  json j;
  j["method"] = std::string(method_name(r.method));
  j["x0"] = vec_json(r.x0);
  j["x_prime"] = vec_json(r.x_prime);
  j["cost"] = r.cost;
  j["delta"] = std::isfinite(r.delta) ? json(r.delta) : json(nullptr);
  j["converged"] = r.converged;
  j["optimizer_converged"] = r.optimizer_converged;
  j["valid"] = r.valid ? json(*r.valid) : json(nullptr);
  j["iterations"] = r.iterations;
  j["trace_length"] = r.objective_trace.size();
  j["objective_trace"] = r.objective_trace;
  std::vector<int> mask(cfg.frozen_mask.begin(), cfg.frozen_mask.end());
  j["config"] = {{"delta_plus", cfg.delta_plus},
                 {"eps0", cfg.eps0},
                 {"eps1", cfg.eps1},
                 {"sigma", cfg.sigma},
                 {"zeta", cfg.zeta},
                 {"theta", cfg.outer.theta},
                 {"beta", cfg.outer.beta},
                 {"tol", cfg.outer.tol},
                 {"max_iter", cfg.outer.max_iter},
                 {"frozen_mask", mask},
                 {"center", cfg.center == ConstraintCenter::input ? "input" : "boundary"},
                 {"delta_prime", cfg.delta_prime},
                 {"gradient", cfg.gradient == GradientMode::envelope ? "envelope" : "finite_difference"}};
  return j.dump(2);
}

std::string component_to_json(const WorstCaseComponent& c) {
  json j;
  j["mean"] = vec_json(c.mean);
  j["eig_roots"] = vec_json(c.eig_roots);
  json basis = json::array();
  for (Eigen::Index i = 0; i < c.basis.rows(); ++i) basis.push_back(vec_json(c.basis.row(i).transpose()));
  j["basis"] = basis;
  return j.dump();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(Errc::io, "write failed for '" + path.string() + "'");
}

}  // namespace rbr
