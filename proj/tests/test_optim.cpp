#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lw2/datasets.hpp"
#include "lw2/norms.hpp"
#include "lw2/optim.hpp"

using namespace lw2;

TEST_CASE("adamw no-ops on zero gradients without decay") {
  ParamVector p;
  p.add("a", 0.7);
  p.add("b", -1.2);
  auto st = AdamWState::create(2, 0.1, 0.0);
  p.zero_grad();
  adamw_step(p, st);
  CHECK(p.values[0] == 0.7);
  CHECK(p.values[1] == -1.2);
}

TEST_CASE("first adamw step is the bias-corrected unit step") {
  ParamVector p;
  p.add("a", 0.0);
  auto st = AdamWState::create(1, 0.1, 0.0);
  p.grad[0] = 1.0;
  adamw_step(p, st);
  // mhat = 1, vhat = 1 -> step = -lr / (1 + eps)
  CHECK(p.values[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("decoupled decay acts alone when the gradient vanishes") {
  ParamVector p;
  p.add("a", 1.0);
  auto st = AdamWState::create(1, 0.02, 0.005);
  p.zero_grad();
  adamw_step(p, st);
  CHECK(p.values[0] == doctest::Approx(0.9999).epsilon(1e-12));
}

TEST_CASE("two-step hand trajectory") {
  // one parameter, gradients g1 = 0.5, g2 = -0.25, lr 0.1, wd 0.01
  const double lr = 0.1, wd = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double theta = 0.3, m = 0, v = 0;
  double g = 0.5;
  m = b1 * m + (1 - b1) * g;
  v = b2 * v + (1 - b2) * g * g;
  theta -= lr * ((m / (1 - b1)) / (std::sqrt(v / (1 - b2)) + eps) + wd * theta);
  g = -0.25;
  m = b1 * m + (1 - b1) * g;
  v = b2 * v + (1 - b2) * g * g;
  theta -= lr * ((m / (1 - std::pow(b1, 2))) / (std::sqrt(v / (1 - std::pow(b2, 2))) + eps) +
                 wd * theta);

  ParamVector p;
  p.add("a", 0.3);
  auto st = AdamWState::create(1, lr, wd);
  p.grad[0] = 0.5;
  adamw_step(p, st);
  p.grad[0] = -0.25;
  adamw_step(p, st);
  CHECK(std::abs(p.values[0] - theta) < 1e-12);
}

TEST_CASE("non-finite gradients are rejected") {
  ParamVector p;
  p.add("a", 0.0);
  auto st = AdamWState::create(1, 0.1, 0.0);
  p.grad[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS(adamw_step(p, st));
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.epochs = -1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.lr = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.delta = 0;
  CHECK_THROWS(cfg.validate());
}

namespace {

SampleSet toy_linear_data() {
  // three points, exact fit y = 2x + 1 achievable
  SampleSet s;
  s.inputs = {{0.0}, {1.0}, {2.0}};
  s.outputs = {{1.0}, {3.0}, {5.0}};
  return s;
}

}  // namespace

TEST_CASE("zero epochs return the initial parameters") {
  auto data = toy_linear_data();
  LinearGaussianModel model(1);
  Rng rng(1);
  ParamVector init = model.init_params(rng);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.loss = {LossFamily::Mse, Locality::Global};
  auto res = train(model, init, data, nullptr, cfg);
  CHECK(res.params.values == init.values);
  CHECK(res.trace.empty());
}

TEST_CASE("deterministic quadratic toy converges to the least-squares optimum") {
  auto data = toy_linear_data();
  LinearGaussianModel model(1);
  ParamVector init = model.pack({{0.0, 0.0}, {0.0, 0.0}});  // spread frozen at 0
  TrainConfig cfg;
  cfg.epochs = 1000;
  cfg.lr = 0.02;
  cfg.weight_decay = 0.0;
  cfg.loss = {LossFamily::Mse, Locality::Global};
  cfg.seed = 3;
  auto res = train(model, init, data, nullptr, cfg);
  auto p = model.unpack(res.params.values);
  CHECK(p.mean[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p.mean[1] == doctest::Approx(2.0).epsilon(1e-3));
  // spreads stay at zero: |0| has zero derivative and decay has nothing to bite
  CHECK(std::abs(p.spread_raw[0]) < 1e-6);
  CHECK(res.trace.front() > res.trace.back());
}

TEST_CASE("same seed gives bitwise-identical traces") {
  std::vector<ScalarLaw> laws{ScalarLaw::uniform(0, 1)};
  Rng drng(5);
  auto xs = sample_inputs(laws, 40, drng);
  LinearGaussianParams truth{{1.0, 2.0}, {0.1, 0.2}};
  auto data = sample_ground_truth(truth, xs, drng);
  auto idx = build_index(xs, InputNorm::homogeneous(), 0.2);

  LinearGaussianModel model(1);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.lr = 0.05;
  cfg.seed = 11;
  cfg.loss = {LossFamily::W2, Locality::Local};
  Rng r1(1), r2(1);
  auto a = train(model, model.init_params(r1), data, &idx, cfg);
  auto b = train(model, model.init_params(r2), data, &idx, cfg);
  CHECK(a.trace == b.trace);
  CHECK(a.params.values == b.params.values);

  cfg.seed = 12;
  auto c = train(model, model.init_params(r1), data, &idx, cfg);
  CHECK(a.trace != c.trace);
}

TEST_CASE("local w2 training reduces the loss on a small linear task") {
  std::vector<ScalarLaw> laws{ScalarLaw::uniform(-1, 1)};
  Rng drng(7);
  auto xs = sample_inputs(laws, 120, drng);
  LinearGaussianParams truth{{0.5, 1.5}, {0.1, 0.3}};
  auto data = sample_ground_truth(truth, xs, drng);
  auto idx = build_index(xs, InputNorm::homogeneous(), 0.1);

  LinearGaussianModel model(1);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.lr = 0.02;
  cfg.seed = 5;
  cfg.loss = {LossFamily::W2, Locality::Local};
  Rng r(1);
  auto res = train(model, model.init_params(r), data, &idx, cfg);
  CHECK(res.trace.back() < res.trace.front());
  auto p = model.unpack(res.params.values);
  CHECK(p.mean[1] == doctest::Approx(1.5).epsilon(0.2));
}

TEST_CASE("trace csv format") {
  std::vector<double> trace{0.5, 0.25};
  const std::string path = "trace_test.csv";
  write_trace_csv(trace, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,loss");
  std::getline(in, line);
  CHECK(line == "1,0.5");
  std::getline(in, line);
  CHECK(line == "2,0.25");
  std::remove(path.c_str());
}
