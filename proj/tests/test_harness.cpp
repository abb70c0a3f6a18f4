#include <doctest.h>

#include <random>

#include "rbr/config.hpp"
#include "rbr/error.hpp"
#include "rbr/harness.hpp"
#include "rbr/seeding.hpp"
#include "test_util.hpp"

using namespace rbr;

namespace {

MlpModel linear_model(const Vector& w, double b) {
  DenseLayer l{Matrix(1, w.size()), Vector::Constant(1, b)};
  l.weights.row(0) = w.transpose();
  return MlpModel({l});
}

const char* kSmall =
    "version = 1\n"
    "dataset = synthetic\n"
    "synthetic_n = 200\n"
    "epochs = 30\n"
    "master_seed = 5\n"
    "methods = rbr, kde, wachter\n"
    "eps0_grid = 0\n"
    "eps1_grid = 0.5\n"
    "delta_plus_grid = 0.2\n"
    "future_models = 3\n"
    "instances = 3\n"
    "K = 50\n";

}  // namespace

TEST_CASE("config parsing and errors") {
  const ExperimentConfig c = parse_config(kSmall);
  CHECK(c.synthetic_n == 200);
  CHECK(c.methods.size() == 3);
  CHECK(c.k == 50);
  const ExperimentConfig back = parse_config(render_config(c));
  CHECK(render_config(back) == render_config(c));

  try {
    parse_config("version = 1\nbogus_key = 3\n");
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("dataset = synthetic\n"), Error);
  CHECK_THROWS_AS(parse_config("version = 2\n"), Error);
  CHECK_THROWS_AS(parse_config("version = 1\nsigma = abc\n"), Error);
  CHECK_THROWS_AS(parse_config("version = 1\neps1_grid = \n"), Error);
  CHECK_THROWS_AS(parse_config("version = 1\ndataset = german\n"), Error);
  const auto missing = parse_config("version = 1\ndataset = german\nd1_path = /nonexistent/a.csv\nd2_path = /x.csv\n");
  CHECK_THROWS_AS(missing.check_paths(), Error);
}

TEST_CASE("evaluate_recourse counts future agreement") {
  const MlpModel yes = linear_model(Vector::Ones(2), 0.0);
  const MlpModel no = linear_model(-Vector::Ones(2), 0.0);
  const Vector deep = Vector::Constant(2, 3.0);
  const auto all = evaluate_recourse(deep, yes, std::vector<MlpModel>(10, yes));
  CHECK(all.current_valid == 1);
  CHECK(all.future_validity == 1.0);
  CHECK(evaluate_recourse(deep, yes, {yes, no}).future_validity == 0.5);
  CHECK_THROWS_AS(evaluate_recourse(Vector::Ones(3), yes, {yes}), Error);
}

TEST_CASE("future models: full-data edge, distinctness, determinism") {
  const Dataset d1 = generate_synthetic(80, 0.0, 1);
  const Dataset d2 = generate_synthetic(40, 1.0, 2);
  TrainConfig base;
  base.epochs = 5;
  const auto one = retrain_future_models(d1, d2, 1, 1.0, 77, base);
  REQUIRE(one.size() == 1);
  TrainConfig tc = base;
  tc.seed = derive_seed(77, purpose::future_train, 0);
  const MlpModel direct = train_mlp(concat(d1, d2), tc);
  CHECK(one[0].layers()[1].weights == direct.layers()[1].weights);

  const auto three = retrain_future_models(d1, d2, 3, 0.2, 9, base);
  CHECK(three[0].layers()[0].weights != three[1].layers()[0].weights);
  CHECK(three[1].layers()[0].weights != three[2].layers()[0].weights);
  const auto again = retrain_future_models(d1, d2, 3, 0.2, 9, base, 2);
  for (int i = 0; i < 3; ++i) CHECK(again[i].layers()[2].weights == three[i].layers()[2].weights);
}

TEST_CASE("aggregation and pareto flags") {
  EvaluationRecord r;
  r.instance_id = 4;
  r.cost = 1.5;
  r.current_valid = 1;
  r.future_validity = 0.75;
  auto rows = aggregate({r});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_cost == 1.5);
  CHECK(rows[0].mean_future_validity == 0.75);
  CHECK(rows[0].mean_current_validity == 1.0);
  CHECK(rows[0].count == 1);

  EvaluationRecord bad = r;
  bad.instance_id = 5;
  bad.cost = 100;
  bad.failure_reason = "degenerate_neighborhood: x";
  rows = aggregate({r, bad});
  CHECK(rows[0].failures == 1);
  CHECK(rows[0].mean_cost == 1.5);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<AggregateRecord> grid;
  for (int i = 0; i < 30; ++i) {
    AggregateRecord a;
    a.delta_plus = i;
    a.count = 1;
    a.mean_cost = std::round(u(rng) * 5) / 5;
    a.mean_future_validity = std::round(u(rng) * 5) / 5;
    grid.push_back(a);
  }
  mark_pareto(grid);
  for (const auto& a : grid) {
    bool dominated = false;
    for (const auto& b : grid)
      dominated |= b.mean_cost <= a.mean_cost && b.mean_future_validity >= a.mean_future_validity &&
                   (b.mean_cost < a.mean_cost || b.mean_future_validity > a.mean_future_validity);
    CHECK(a.pareto == !dominated);
  }
}

TEST_CASE("small sweep is deterministic across thread counts") {
  ExperimentConfig c = parse_config(kSmall);
  c.threads = 1;
  const Experiment e1 = prepare_experiment(c);
  const SweepTable t1 = pareto_sweep(e1);
  c.threads = 3;
  const Experiment e2 = prepare_experiment(c);
  const SweepTable t2 = pareto_sweep(e2);
  CHECK(records_csv(t1.records) == records_csv(t2.records));
  CHECK(aggregates_csv(t1.aggregates) == aggregates_csv(t2.aggregates));
  CHECK(t1.aggregates.size() == 3);
  CHECK(records_csv(t1.records).rfind(
            "instance_id,method,eps0,eps1,delta_plus,cost,current_valid,future_validity,converged,failure_reason\n", 0) ==
        0);
  for (const auto& r : t1.records) {
    if (!r.failure_reason.empty()) continue;
    CHECK(r.future_validity >= 0.0);
    CHECK(r.future_validity <= 1.0);
  }
}
