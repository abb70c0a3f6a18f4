#include "rbr/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rbr/data.hpp"
#include "rbr/error.hpp"
#include "rbr/serialize.hpp"

namespace rbr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    fail(Errc::config, "config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    fail(Errc::config, "config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset", [](auto& c, auto&, auto& v) { c.dataset = v; }},
      {"d1_path", [](auto& c, auto&, auto& v) { c.d1_path = v; }},
      {"d2_path", [](auto& c, auto&, auto& v) { c.d2_path = v; }},
      {"synthetic_n", [](auto& c, auto& k, auto& v) { c.synthetic_n = to_int<long>(k, v); }},
      {"train_fraction", [](auto& c, auto& k, auto& v) { c.train_fraction = to_double(k, v); }},
      {"master_seed", [](auto& c, auto& k, auto& v) { c.master_seed = to_int<std::uint64_t>(k, v); }},
      {"epochs", [](auto& c, auto& k, auto& v) { c.train.epochs = to_int<int>(k, v); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.train.batch_size = to_int<int>(k, v); }},
      {"learning_rate", [](auto& c, auto& k, auto& v) { c.train.learning_rate = to_double(k, v); }},
      {"momentum", [](auto& c, auto& k, auto& v) { c.train.momentum = to_double(k, v); }},
      {"l2_penalty", [](auto& c, auto& k, auto& v) { c.train.l2_penalty = to_double(k, v); }},
      {"hidden",
       [](auto& c, auto& k, auto& v) {
         c.train.hidden.clear();
         for (const auto& item : split_list(v)) c.train.hidden.push_back(to_int<int>(k, item));
       }},
      {"K", [](auto& c, auto& k, auto& v) { c.k = to_int<std::size_t>(k, v); }},
      {"n_samples", [](auto& c, auto& k, auto& v) { c.n_samples = to_int<std::size_t>(k, v); }},
      {"r_p", [](auto& c, auto& k, auto& v) { c.r_p = to_double(k, v); }},
      {"bisect_tol", [](auto& c, auto& k, auto& v) { c.bisect_tol = to_double(k, v); }},
      {"bisect_limit", [](auto& c, auto& k, auto& v) { c.bisect_limit = to_int<std::size_t>(k, v); }},
      {"methods",
       [](auto& c, auto& k, auto& v) {
         c.methods.clear();
         for (const auto& item : split_list(v)) {
           try {
             c.methods.push_back(parse_method(item));
           } catch (const Error&) {
             fail(Errc::config, "config key '" + k + "': unknown method '" + item + "'");
           }
         }
       }},
      {"sigma", [](auto& c, auto& k, auto& v) { c.sigma = to_double(k, v); }},
      {"zeta", [](auto& c, auto& k, auto& v) { c.zeta = to_double(k, v); }},
      {"eps0_grid", [](auto& c, auto& k, auto& v) { c.eps0_grid = to_doubles(k, v); }},
      {"eps1_grid", [](auto& c, auto& k, auto& v) { c.eps1_grid = to_doubles(k, v); }},
      {"delta_plus_grid", [](auto& c, auto& k, auto& v) { c.delta_plus_grid = to_doubles(k, v); }},
      {"wachter_lambda_grid", [](auto& c, auto& k, auto& v) { c.wachter_lambda_grid = to_doubles(k, v); }},
      {"outer_theta", [](auto& c, auto& k, auto& v) { c.outer.theta = to_double(k, v); }},
      {"outer_beta", [](auto& c, auto& k, auto& v) { c.outer.beta = to_double(k, v); }},
      {"outer_tol", [](auto& c, auto& k, auto& v) { c.outer.tol = to_double(k, v); }},
      {"outer_max_iter", [](auto& c, auto& k, auto& v) { c.outer.max_iter = to_int<int>(k, v); }},
      {"gradient",
       [](auto& c, auto& k, auto& v) {
         if (v == "envelope") c.gradient = GradientMode::envelope;
         else if (v == "finite_difference") c.gradient = GradientMode::finite_difference;
         else fail(Errc::config, "config key '" + k + "': expected envelope or finite_difference");
       }},
      {"constraint_center",
       [](auto& c, auto& k, auto& v) {
         if (v == "input") c.center = ConstraintCenter::input;
         else if (v == "boundary") c.center = ConstraintCenter::boundary;
         else fail(Errc::config, "config key '" + k + "': expected input or boundary");
       }},
      {"delta_prime", [](auto& c, auto& k, auto& v) { c.delta_prime = to_double(k, v); }},
      {"frozen", [](auto& c, auto&, auto& v) { c.frozen = split_list(v); }},
      {"future_models", [](auto& c, auto& k, auto& v) { c.future_models = to_int<int>(k, v); }},
      {"future_fraction", [](auto& c, auto& k, auto& v) { c.future_fraction = to_double(k, v); }},
      {"instances", [](auto& c, auto& k, auto& v) { c.instances = to_int<int>(k, v); }},
      {"threads", [](auto& c, auto& k, auto& v) { c.threads = to_int<int>(k, v); }},
      {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"model_path", [](auto& c, auto&, auto& v) { c.model_path = v; }},
      {"sample_path", [](auto& c, auto&, auto& v) { c.sample_path = v; }},
      {"x0",
       [](auto& c, auto& k, auto& v) {
         const auto xs = to_doubles(k, v);
         if (xs.empty()) fail(Errc::config, "config key '" + k + "': empty vector");
         c.x0 = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
       }},
      {"instance_index", [](auto& c, auto& k, auto& v) { c.instance_index = to_int<int>(k, v); }},
      {"method",
       [](auto& c, auto& k, auto& v) {
         try {
           c.method = parse_method(v);
         } catch (const Error&) {
           fail(Errc::config, "config key '" + k + "': unknown method '" + v + "'");
         }
       }},
      {"eps0", [](auto& c, auto& k, auto& v) { c.eps0 = to_double(k, v); }},
      {"eps1", [](auto& c, auto& k, auto& v) { c.eps1 = to_double(k, v); }},
      {"delta_plus", [](auto& c, auto& k, auto& v) { c.delta_plus = to_double(k, v); }},
  };
  return table;
}

void config_check(bool cond, const std::string& msg) {
  if (!cond) fail(Errc::config, msg);
}

}  // namespace

void ExperimentConfig::validate() const {
  config_check(dataset == "synthetic" || dataset == "german" || dataset == "sba" || dataset == "gmc",
               "config key 'dataset': unknown dataset '" + dataset + "'");
  if (dataset != "synthetic") config_check(!d1_path.empty() && !d2_path.empty(), "config: d1_path and d2_path are required");
  config_check(synthetic_n >= 2, "config key 'synthetic_n' must be >= 2");
  config_check(train_fraction > 0.0 && train_fraction < 1.0, "config key 'train_fraction' must lie in (0,1)");
  config_check(train.epochs >= 1 && train.batch_size >= 1 && train.learning_rate > 0.0, "config: invalid training settings");
  config_check(train.momentum >= 0.0 && train.momentum < 1.0, "config key 'momentum' must lie in [0,1)");
  for (int h : train.hidden) config_check(h >= 1, "config key 'hidden': widths must be positive");
  config_check(k >= 1 && n_samples >= 2, "config: K >= 1 and n_samples >= 2 required");
  config_check(r_p > 0.0 && bisect_tol > 0.0, "config: r_p and bisect_tol must be positive");
  config_check(!methods.empty(), "config key 'methods' must not be empty");
  config_check(sigma > 0.0 && zeta > 0.0, "config: sigma and zeta must be positive");
  config_check(!eps0_grid.empty() && !eps1_grid.empty() && !delta_plus_grid.empty() && !wachter_lambda_grid.empty(),
               "config: grids must be nonempty");
  for (double v : eps0_grid) config_check(v >= 0.0, "config key 'eps0_grid': values must be >= 0");
  for (double v : eps1_grid) config_check(v >= 0.0, "config key 'eps1_grid': values must be >= 0");
  for (double v : delta_plus_grid) config_check(v >= 0.0, "config key 'delta_plus_grid': values must be >= 0");
  for (double v : wachter_lambda_grid) config_check(v > 0.0, "config key 'wachter_lambda_grid': values must be > 0");
  config_check(outer.theta > 0.0 && outer.theta < 1.0 && outer.beta > 0.0 && outer.tol > 0.0 && outer.max_iter >= 1,
               "config: invalid outer descent settings");
  config_check(delta_prime >= 0.0, "config key 'delta_prime' must be >= 0");
  config_check(future_models >= 1, "config key 'future_models' must be >= 1");
  config_check(future_fraction > 0.0 && future_fraction <= 1.0, "config key 'future_fraction' must lie in (0,1]");
  config_check(instances >= 1, "config key 'instances' must be >= 1");
  config_check(threads >= 0, "config key 'threads' must be >= 0");
  config_check(eps0 >= 0.0 && eps1 >= 0.0 && delta_plus >= 0.0, "config: eps0, eps1, delta_plus must be >= 0");
  config_check(instance_index >= 0, "config key 'instance_index' must be >= 0");
}

void ExperimentConfig::check_paths() const {
  if (dataset == "synthetic") return;
  for (const auto& p : {d1_path, d2_path})
    if (!std::filesystem::exists(p)) fail(Errc::io, "config: file '" + p + "' does not exist");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_version = false;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(Errc::config, "config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!seen.insert(key).second) fail(Errc::config, "config key '" + key + "' given twice");
    if (key == "version") {
      if (to_int<int>(key, value) != ExperimentConfig::kVersion)
        fail(Errc::config, "config key 'version': unsupported version " + value);
      have_version = true;
      continue;
    }
    const auto it = setters().find(key);
    if (it == setters().end()) fail(Errc::config, "unknown config key '" + key + "'");
    it->second(cfg, key, value);
  }
  if (!have_version) fail(Errc::config, "config key 'version' is missing");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(Errc::io, "config file '" + path.string() + "' does not exist");
  return parse_config(read_text_file(path));
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "version = " << ExperimentConfig::kVersion << "\n";
  o << "dataset = " << c.dataset << "\n";
  if (!c.d1_path.empty()) o << "d1_path = " << c.d1_path << "\n";
  if (!c.d2_path.empty()) o << "d2_path = " << c.d2_path << "\n";
  o << "synthetic_n = " << c.synthetic_n << "\n";
  o << "train_fraction = " << fmt(c.train_fraction) << "\n";
  o << "master_seed = " << c.master_seed << "\n";
  o << "epochs = " << c.train.epochs << "\n";
  o << "batch_size = " << c.train.batch_size << "\n";
  o << "learning_rate = " << fmt(c.train.learning_rate) << "\n";
  o << "momentum = " << fmt(c.train.momentum) << "\n";
  o << "l2_penalty = " << fmt(c.train.l2_penalty) << "\n";
  o << "hidden = ";
  for (std::size_t i = 0; i < c.train.hidden.size(); ++i) o << (i ? ", " : "") << c.train.hidden[i];
  o << "\n";
  o << "K = " << c.k << "\n";
  o << "n_samples = " << c.n_samples << "\n";
  o << "r_p = " << fmt(c.r_p) << "\n";
  o << "bisect_tol = " << fmt(c.bisect_tol) << "\n";
  o << "bisect_limit = " << c.bisect_limit << "\n";
  o << "methods = ";
  for (std::size_t i = 0; i < c.methods.size(); ++i) o << (i ? ", " : "") << method_name(c.methods[i]);
  o << "\n";
  o << "sigma = " << fmt(c.sigma) << "\n";
  o << "zeta = " << fmt(c.zeta) << "\n";
  o << "eps0_grid = " << join(c.eps0_grid) << "\n";
  o << "eps1_grid = " << join(c.eps1_grid) << "\n";
  o << "delta_plus_grid = " << join(c.delta_plus_grid) << "\n";
  o << "wachter_lambda_grid = " << join(c.wachter_lambda_grid) << "\n";
  o << "outer_theta = " << fmt(c.outer.theta) << "\n";
  o << "outer_beta = " << fmt(c.outer.beta) << "\n";
  o << "outer_tol = " << fmt(c.outer.tol) << "\n";
  o << "outer_max_iter = " << c.outer.max_iter << "\n";
  o << "gradient = " << (c.gradient == GradientMode::envelope ? "envelope" : "finite_difference") << "\n";
  o << "constraint_center = " << (c.center == ConstraintCenter::input ? "input" : "boundary") << "\n";
  o << "delta_prime = " << fmt(c.delta_prime) << "\n";
  if (!c.frozen.empty()) {
    o << "frozen = ";
    for (std::size_t i = 0; i < c.frozen.size(); ++i) o << (i ? ", " : "") << c.frozen[i];
    o << "\n";
  }
  o << "future_models = " << c.future_models << "\n";
  o << "future_fraction = " << fmt(c.future_fraction) << "\n";
  o << "instances = " << c.instances << "\n";
  o << "threads = " << c.threads << "\n";
  o << "output_dir = " << c.output_dir << "\n";
  if (!c.model_path.empty()) o << "model_path = " << c.model_path << "\n";
  if (!c.sample_path.empty()) o << "sample_path = " << c.sample_path << "\n";
  if (c.x0) {
    o << "x0 = ";
    for (Eigen::Index i = 0; i < c.x0->size(); ++i) o << (i ? ", " : "") << fmt((*c.x0)[i]);
    o << "\n";
  }
  o << "instance_index = " << c.instance_index << "\n";
  o << "method = " << method_name(c.method) << "\n";
  o << "eps0 = " << fmt(c.eps0) << "\n";
  o << "eps1 = " << fmt(c.eps1) << "\n";
  o << "delta_plus = " << fmt(c.delta_plus) << "\n";
  return o.str();
}

RecourseConfig recourse_config(const ExperimentConfig& cfg, double eps0, double eps1, double delta_plus,
                               const std::vector<bool>& frozen_mask) {
  RecourseConfig rc;
  rc.delta_plus = delta_plus;
  rc.eps0 = eps0;
  rc.eps1 = eps1;
  rc.sigma = cfg.sigma;
  rc.zeta = cfg.zeta;
  rc.outer = cfg.outer;
  rc.frozen_mask = frozen_mask;
  rc.center = cfg.center;
  rc.delta_prime = cfg.delta_prime;
  rc.gradient = cfg.gradient;
  return rc;
}

SamplerConfig sampler_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  SamplerConfig sc;
  sc.k = cfg.k;
  sc.n = cfg.n_samples;
  sc.radius = cfg.r_p;
  sc.tol = cfg.bisect_tol;
  sc.seed = seed;
  sc.bisect_limit = cfg.bisect_limit;
  return sc;
}

}  // namespace rbr
