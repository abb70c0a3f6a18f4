#include "rbr/rbr.h"

#include <cstring>
#include <new>
#include <string>

#include "rbr/config.hpp"
#include "rbr/error.hpp"
#include "rbr/harness.hpp"
#include "rbr/serialize.hpp"

struct rbr_config {
  rbr::ExperimentConfig value;
};
struct rbr_dataset {
  rbr::Dataset value;
};
struct rbr_model {
  rbr::MlpModel value;
};
struct rbr_sample_set {
  rbr::LocalSampleSet value;
};
struct rbr_recourse_result {
  rbr::RecourseResult value;
  rbr::RecourseConfig config;
};

namespace {

thread_local std::string last_error;

template <class F>
rbr_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return RBR_OK;
  } catch (const rbr::Error& e) {
    last_error = e.what();
    return static_cast<rbr_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RBR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RBR_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) rbr::fail(rbr::Errc::invalid_argument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

rbr::Vector to_vector(const double* x, size_t dim) {
  need(x, "vector");
  rbr::require(dim >= 1, "vector dimension must be positive");
  return Eigen::Map<const rbr::Vector>(x, static_cast<Eigen::Index>(dim));
}

void copy_out(const rbr::Vector& v, double* out, size_t dim) {
  need(out, "output buffer");
  rbr::require(dim == static_cast<size_t>(v.size()), "output buffer has the wrong dimension");
  std::memcpy(out, v.data(), sizeof(double) * dim);
}

}  // namespace

extern "C" {

const char* rbr_version(void) { return rbr::kLibraryVersion; }
const char* rbr_last_error_message(void) { return last_error.c_str(); }

const char* rbr_status_name(rbr_status status) {
  if (status == RBR_OK) return "ok";
  if (status < RBR_ERR_INVALID_ARGUMENT || status > RBR_ERR_INTERNAL) return "unknown";
  return rbr::errc_name(static_cast<rbr::Errc>(status));
}

void rbr_string_free(char* s) { delete[] s; }

rbr_status rbr_config_load(const char* path, rbr_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rbr_config{rbr::load_config(path)};
  });
}

rbr_status rbr_config_parse(const char* text, rbr_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new rbr_config{rbr::parse_config(text)};
  });
}

rbr_status rbr_config_render(const rbr_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(rbr::render_config(cfg->value));
  });
}

rbr_status rbr_config_output_dir(const rbr_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(cfg->value.output_dir);
  });
}

void rbr_config_free(rbr_config* cfg) { delete cfg; }

rbr_status rbr_dataset_generate_synthetic(long n, double noise_std, uint64_t seed, rbr_dataset** out) {
  return guarded([&] {
    need(out, "out");
    *out = new rbr_dataset{rbr::generate_synthetic(n, noise_std, seed)};
  });
}

rbr_status rbr_dataset_load_csv(const char* path, const char* schema, rbr_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(schema, "schema");
    need(out, "out");
    *out = new rbr_dataset{rbr::load_csv(path, rbr::parse_schema(schema))};
  });
}

rbr_status rbr_dataset_split(const rbr_dataset* data, double train_fraction, uint64_t seed, int scale,
                             rbr_dataset** train, rbr_dataset** test) {
  return guarded([&] {
    need(data, "data");
    need(train, "train");
    need(test, "test");
    auto [a, b] = rbr::split(data->value, rbr::SplitSpec{train_fraction, seed, scale != 0});
    auto* ta = new rbr_dataset{std::move(a)};
    *test = new rbr_dataset{std::move(b)};
    *train = ta;
  });
}

rbr_status rbr_dataset_shape(const rbr_dataset* data, size_t* rows, size_t* dim) {
  return guarded([&] {
    need(data, "data");
    if (rows) *rows = static_cast<size_t>(data->value.rows());
    if (dim) *dim = static_cast<size_t>(data->value.dim());
  });
}

rbr_status rbr_dataset_row(const rbr_dataset* data, size_t row, double* out, size_t dim, int* label) {
  return guarded([&] {
    need(data, "data");
    rbr::require(row < static_cast<size_t>(data->value.rows()), "row index out of range");
    copy_out(data->value.row(static_cast<Eigen::Index>(row)), out, dim);
    if (label) *label = data->value.labels[row];
  });
}

rbr_status rbr_dataset_to_json(const rbr_dataset* data, char** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    *out = dup_string(rbr::dataset_to_json(data->value));
  });
}

void rbr_dataset_free(rbr_dataset* data) { delete data; }

rbr_status rbr_model_train(const rbr_dataset* train, const rbr_config* cfg, uint64_t seed, rbr_model** out) {
  return guarded([&] {
    need(train, "train");
    need(out, "out");
    rbr::TrainConfig tc = cfg ? cfg->value.train : rbr::TrainConfig{};
    tc.seed = seed;
    *out = new rbr_model{rbr::train_mlp(train->value, tc)};
  });
}

rbr_status rbr_model_save(const rbr_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    rbr::save_model(model->value, path);
  });
}

rbr_status rbr_model_load(const char* path, rbr_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rbr_model{rbr::load_model(path)};
  });
}

rbr_status rbr_model_input_dim(const rbr_model* model, size_t* dim) {
  return guarded([&] {
    need(model, "model");
    need(dim, "dim");
    *dim = static_cast<size_t>(model->value.input_dim());
  });
}

rbr_status rbr_model_predict_proba(const rbr_model* model, const double* x, size_t dim, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    rbr::require(dim == static_cast<size_t>(model->value.input_dim()), "input has the wrong dimension");
    *out = model->value.predict_proba(to_vector(x, dim));
  });
}

rbr_status rbr_model_accuracy(const rbr_model* model, const rbr_dataset* data, double* out) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(out, "out");
    *out = rbr::accuracy(model->value, data->value);
  });
}

rbr_status rbr_model_auc(const rbr_model* model, const rbr_dataset* data, double* out) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(out, "out");
    const auto scores = rbr::predict_all(model->value, data->value.features);
    *out = rbr::auc(scores, data->value.labels);
  });
}

void rbr_model_free(rbr_model* model) { delete model; }

rbr_status rbr_sample_set_build(const double* x0, size_t dim, const rbr_dataset* data, const rbr_model* model,
                                const rbr_config* cfg, uint64_t seed, rbr_sample_set** out) {
  return guarded([&] {
    need(data, "data");
    need(model, "model");
    need(out, "out");
    rbr::SamplerConfig sc = cfg ? rbr::sampler_config(cfg->value, seed) : rbr::SamplerConfig{};
    sc.seed = seed;
    *out = new rbr_sample_set{rbr::build_local_sample_set(to_vector(x0, dim), data->value, model->value, sc)};
  });
}

rbr_status rbr_sample_set_save(const rbr_sample_set* ls, const char* path) {
  return guarded([&] {
    need(ls, "sample set");
    need(path, "path");
    rbr::write_text_file(path, rbr::sample_set_to_json(ls->value));
  });
}

rbr_status rbr_sample_set_load(const char* path, rbr_sample_set** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto ls = rbr::sample_set_from_json(rbr::read_text_file(path));
    ls.validate();
    *out = new rbr_sample_set{std::move(ls)};
  });
}

rbr_status rbr_sample_set_boundary(const rbr_sample_set* ls, double* out, size_t dim) {
  return guarded([&] {
    need(ls, "sample set");
    copy_out(ls->value.x_b, out, dim);
  });
}

void rbr_sample_set_free(rbr_sample_set* ls) { delete ls; }

void rbr_recourse_params_default(rbr_recourse_params* params) {
  if (params == nullptr) return;
  const rbr::RecourseConfig rc;
  params->method = RBR_METHOD_ROBUST;
  params->delta_plus = rc.delta_plus;
  params->eps0 = rc.eps0;
  params->eps1 = rc.eps1;
  params->sigma = rc.sigma;
  params->zeta = rc.zeta;
  params->frozen_mask = nullptr;
  params->wachter_lambda = rc.wachter.lambda0;
}

rbr_status rbr_recourse(const rbr_recourse_params* params, const double* x0, size_t dim, const rbr_sample_set* ls,
                        const rbr_model* model, rbr_recourse_result** out) {
  return guarded([&] {
    need(params, "params");
    need(out, "out");
    const rbr::Vector x = to_vector(x0, dim);
    rbr::RecourseConfig rc;
    rc.delta_plus = params->delta_plus;
    rc.eps0 = params->eps0;
    rc.eps1 = params->eps1;
    rc.sigma = params->sigma;
    rc.zeta = params->zeta;
    rc.wachter.lambda0 = params->wachter_lambda;
    if (params->frozen_mask) {
      rc.frozen_mask.resize(dim);
      for (size_t j = 0; j < dim; ++j) rc.frozen_mask[j] = params->frozen_mask[j] != 0;
    }
    const rbr::MlpModel* m = model ? &model->value : nullptr;
    rbr::RecourseResult r;
    switch (params->method) {
      case RBR_METHOD_WACHTER:
        need(model, "model");
        r = rbr::wachter_recourse(x, model->value, rc);
        break;
      case RBR_METHOD_KDE:
        need(ls, "sample set");
        r = rbr::kde_recourse(x, ls->value, rc, m);
        break;
      case RBR_METHOD_ROBUST:
        need(ls, "sample set");
        r = rbr::robust_recourse(x, ls->value, rc, m);
        break;
      default:
        rbr::fail(rbr::Errc::invalid_argument, "unknown recourse method");
    }
    *out = new rbr_recourse_result{std::move(r), rc};
  });
}

rbr_status rbr_recourse_result_x_prime(const rbr_recourse_result* r, double* out, size_t dim) {
  return guarded([&] {
    need(r, "result");
    copy_out(r->value.x_prime, out, dim);
  });
}

rbr_status rbr_recourse_result_cost(const rbr_recourse_result* r, double* out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    *out = r->value.cost;
  });
}

rbr_status rbr_recourse_result_converged(const rbr_recourse_result* r, int* out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    *out = r->value.converged ? 1 : 0;
  });
}

rbr_status rbr_recourse_result_to_json(const rbr_recourse_result* r, char** out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    *out = dup_string(rbr::recourse_result_to_json(r->value, r->config));
  });
}

void rbr_recourse_result_free(rbr_recourse_result* r) { delete r; }

rbr_status rbr_run_train(const rbr_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    rbr::run_train(cfg->value, out_dir);
  });
}

rbr_status rbr_run_sample(const rbr_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    rbr::run_sample(cfg->value, out_dir);
  });
}

rbr_status rbr_run_recourse(const rbr_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    rbr::run_recourse(cfg->value, out_dir);
  });
}

rbr_status rbr_run_benchmark(const rbr_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    rbr::run_benchmark(cfg->value, out_dir);
  });
}

rbr_status rbr_run_sweep(const rbr_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    rbr::run_sweep(cfg->value, out_dir);
  });
}

}  // extern "C"
