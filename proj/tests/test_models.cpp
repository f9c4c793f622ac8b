#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lw2/models.hpp"
#include "lw2/rng.hpp"

using namespace lw2;

TEST_CASE("linear model with zero spread is the plain linear map") {
  LinearGaussianModel model(3);
  LinearGaussianParams p;
  p.mean = {1, 1, 2, 3};
  p.spread_raw = {0, 0, 0, 0};
  ParamVector pv = model.pack(p);
  std::vector<double> eps(4, 0.83);  // irrelevant at zero spread
  double y = 0;
  model.predict(pv.values, std::vector<double>{1, 1, 1}, eps, {&y, 1});
  CHECK(y == doctest::Approx(7.0));

  // x = 0 leaves only the intercept
  p.spread_raw = {0.5, 0, 0, 0};
  pv = model.pack(p);
  eps = {2.0, 0, 0, 0};
  model.predict(pv.values, std::vector<double>{0, 0, 0}, eps, {&y, 1});
  CHECK(y == doctest::Approx(1.0 + 0.5 * 2.0));
}

TEST_CASE("linear model sampling variance matches the closed form") {
  LinearGaussianModel model(3);
  LinearGaussianParams p;
  p.mean = {1, 1, 2, 3};
  p.spread_raw = {0.1, 0.2, 0.3, 0.4};
  ParamVector pv = model.pack(p);
  Rng rng(100);
  const int n = 100000;
  double s = 0, s2 = 0;
  std::vector<double> x{1, 0, 0};
  for (int i = 0; i < n; ++i) {
    auto eps = draw_noise(model, rng);
    double y = 0;
    model.predict(pv.values, x, eps, {&y, 1});
    s += y;
    s2 += y * y;
  }
  double mean = s / n;
  double sd = std::sqrt(s2 / n - mean * mean);
  double expected_sd = std::sqrt(0.1 * 0.1 + 0.2 * 0.2);
  CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
  CHECK(sd == doctest::Approx(expected_sd).epsilon(0.03));
}

TEST_CASE("linear init is all ones") {
  LinearGaussianModel model(3);
  Rng rng(1);
  ParamVector pv = model.init_params(rng);
  REQUIRE(pv.size() == 8);
  for (double v : pv.values) CHECK(v == 1.0);
}

TEST_CASE("mlp zero parameters give zero output") {
  MlpShape shape{2, 2, 8, 2, false};
  StochasticMlpModel model(shape);
  std::vector<double> params(model.param_count(), 0.0);
  std::vector<double> eps(model.noise_dim(), 1.3);
  std::vector<double> y(2);
  model.predict(params, std::vector<double>{0.4, -0.7}, eps, y);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("single linear layer is an exact matrix-vector product") {
  MlpShape shape{2, 2, 0, 0, false};
  StochasticMlpModel model(shape);
  // W = [[1, 2], [3, 4]], b = (0.5, -0.5), sigma = 0
  std::vector<double> params(model.param_count(), 0.0);
  const auto& lay = model.layout().layers[0];
  params[lay.a_off + 0] = 1;
  params[lay.a_off + 1] = 2;
  params[lay.a_off + 2] = 3;
  params[lay.a_off + 3] = 4;
  params[lay.b_off + 0] = 0.5;
  params[lay.b_off + 1] = -0.5;
  std::vector<double> eps(model.noise_dim(), 0.77);
  std::vector<double> y(2);
  model.predict(params, std::vector<double>{1.0, -1.0}, eps, y);
  CHECK(y[0] == doctest::Approx(1 - 2 + 0.5));
  CHECK(y[1] == doctest::Approx(3 - 4 - 0.5));
}

TEST_CASE("resnet trace on a hand-constructed two-hidden-layer net") {
  // hidden weights zero: each hidden layer contributes relu(bias) plus the
  // skip, so the output can be traced by hand
  MlpShape ff{1, 1, 2, 2, false};
  MlpShape rn{1, 1, 2, 2, true};
  StochasticMlpModel mff(ff), mrn(rn);
  REQUIRE(mff.param_count() == mrn.param_count());
  std::vector<double> params(mff.param_count(), 0.0);
  const auto& l0 = mff.layout().layers[0];
  const auto& l1 = mff.layout().layers[1];
  const auto& l2 = mff.layout().layers[2];
  // first layer: h = relu(1*x), second: zero weights + bias 0.25, output sums
  params[l0.a_off + 0] = 1.0;
  params[l0.a_off + 1] = 1.0;
  params[l1.b_off + 0] = 0.25;
  params[l1.b_off + 1] = 0.25;
  params[l2.a_off + 0] = 1.0;
  params[l2.a_off + 1] = 1.0;
  std::vector<double> eps(mff.noise_dim(), 0.0);
  double x = 0.8, yff = 0, yrn = 0;
  mff.predict(params, {&x, 1}, eps, {&yff, 1});
  mrn.predict(params, {&x, 1}, eps, {&yrn, 1});
  // feed-forward: h1 = (0.8, 0.8) -> h2 = (0.25, 0.25) -> y = 0.5
  CHECK(yff == doctest::Approx(0.5));
  // resnet: h2 = relu(0.25) + h1 = (1.05, 1.05) -> y = 2.1
  CHECK(yrn == doctest::Approx(2.1));
}

TEST_CASE("mlp init statistics match the prescribed law") {
  MlpShape shape{10, 10, 70, 2, false};
  StochasticMlpModel model(shape);
  Rng rng(5);
  ParamVector pv = model.init_params(rng);
  REQUIRE(pv.size() > 10000);
  double s = 0, s2 = 0;
  for (double v : pv.values) {
    s += v;
    s2 += v * v;
  }
  double mean = s / pv.size();
  double sd = std::sqrt(s2 / pv.size() - mean * mean);
  CHECK(std::abs(mean) < 3e-4);
  CHECK(sd == doctest::Approx(1e-2).epsilon(0.05));
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS(MlpShape{0, 1, 4, 1, false}.validate());
  CHECK_THROWS(MlpShape{1, 0, 4, 1, false}.validate());
  CHECK_THROWS(MlpShape{1, 1, 0, 2, false}.validate());
  CHECK_THROWS(MlpShape{1, 1, 4, -1, false}.validate());
}

TEST_CASE("reparameterization fidelity of a single weight") {
  MlpShape shape{1, 1, 3, 1, false};
  StochasticMlpModel model(shape);
  Rng rng(3);
  ParamVector pv = model.init_params(rng);
  const auto& lay = model.layout().layers[0];
  const double a = 0.37, s_raw = -0.21;  // negative raw spread: SD is |s|
  pv.values[lay.a_off] = a;
  pv.values[lay.s_off] = s_raw;
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    auto eps = draw_noise(model, rng);
    double w = pv.values[lay.a_off] + std::abs(pv.values[lay.s_off]) * eps[lay.eps_off];
    s += w;
    s2 += w * w;
  }
  double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
  double se = std::abs(s_raw) / std::sqrt(n);
  CHECK(std::abs(mean - a) < 3 * se);
  CHECK(sd == doctest::Approx(std::abs(s_raw)).epsilon(0.02));
}

TEST_CASE("noise entries act independently") {
  MlpShape shape{2, 1, 4, 1, false};
  StochasticMlpModel model(shape);
  Rng rng(8);
  ParamVector pv = model.init_params(rng);
  auto eps = draw_noise(model, rng);
  const auto& lay = model.layout().layers[0];
  // weight (0,0) uses eps[lay.eps_off]; permuting other entries leaves the
  // sampled value unchanged
  auto w00 = [&](const std::vector<double>& e) {
    return pv.values[lay.a_off] + std::abs(pv.values[lay.s_off]) * e[lay.eps_off];
  };
  auto shuffled = eps;
  std::swap(shuffled[lay.eps_off + 1], shuffled[lay.eps_off + 2]);
  CHECK(w00(eps) == w00(shuffled));
}

TEST_CASE("model predictions are Lipschitz in the input for fixed noise") {
  MlpShape shape{3, 2, 16, 2, true};
  StochasticMlpModel model(shape);
  Rng rng(11);
  ParamVector pv = model.init_params(rng);
  auto eps = draw_noise(model, rng);
  double worst = 0;
  std::vector<double> y1(2), y2(2);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x1{rng.normal(), rng.normal(), rng.normal()};
    std::vector<double> x2{rng.normal(), rng.normal(), rng.normal()};
    model.predict(pv.values, x1, eps, y1);
    model.predict(pv.values, x2, eps, y2);
    double num = std::sqrt(squared_distance(y1.data(), y2.data(), 2));
    double den = std::sqrt(squared_distance(x1.data(), x2.data(), 3));
    if (den > 1e-9) worst = std::max(worst, num / den);
  }
  CHECK(std::isfinite(worst));
}

TEST_CASE("tape and value forwards agree") {
  MlpShape shape{2, 2, 6, 2, true};
  StochasticMlpModel model(shape);
  Rng rng(19);
  ParamVector pv = model.init_params(rng);
  for (auto& v : pv.values) v = rng.normal(0, 0.5);
  auto eps = draw_noise(model, rng);
  std::vector<double> x{0.3, -0.9}, y(2);
  model.predict(pv.values, x, eps, y);

  Tape tape;
  std::vector<Var> leaves;
  for (double v : pv.values) leaves.push_back(make_var(tape, v));
  auto yv = model.predict_on_tape(tape, leaves, x, eps);
  REQUIRE(yv.size() == 2);
  CHECK(yv[0].value() == doctest::Approx(y[0]).epsilon(1e-14));
  CHECK(yv[1].value() == doctest::Approx(y[1]).epsilon(1e-14));
}

TEST_CASE("sampled dense mlp matches the scalar path") {
  MlpShape shape{3, 4, 10, 2, true};
  StochasticMlpModel model(shape);
  Rng rng(23);
  ParamVector pv = model.init_params(rng);
  for (auto& v : pv.values) v = rng.normal(0, 0.4);
  auto eps = draw_noise(model, rng);
  SampledMlp net = SampledMlp::sample(shape, pv.values, eps);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
    std::vector<double> y1(4), y2(4);
    model.predict(pv.values, x, eps, y1);
    net.forward(x, y2);
    for (int c = 0; c < 4; ++c) CHECK(y1[c] == doctest::Approx(y2[c]).epsilon(1e-13));
  }
}

TEST_CASE("dense vjp agrees with finite differences") {
  MlpShape shape{3, 3, 6, 2, true};
  StochasticMlpModel model(shape);
  Rng rng(29);
  ParamVector pv = model.init_params(rng);
  for (auto& v : pv.values) v = rng.normal(0, 0.5);
  auto eps = draw_noise(model, rng);
  SampledMlp net = SampledMlp::sample(shape, pv.values, eps);

  std::vector<double> x{0.4, -0.2, 0.9};
  std::vector<double> ybar{0.7, -1.1, 0.3};
  std::vector<double> y(3);
  SampledMlp::Cache cache;
  net.forward_cached(x, y, cache);

  std::vector<Matrix> Wbar;
  std::vector<std::vector<double>> bbar;
  for (const auto& lay : net.layout.layers) {
    Wbar.emplace_back(lay.rows, lay.cols);
    bbar.emplace_back(lay.rows, 0.0);
  }
  std::vector<double> xbar(3);
  net.vjp(cache, ybar, xbar, Wbar, bbar);

  auto dot_output = [&](const SampledMlp& m) {
    std::vector<double> yy(3);
    m.forward(x, yy);
    return yy[0] * ybar[0] + yy[1] * ybar[1] + yy[2] * ybar[2];
  };
  const double h = 1e-6;
  // a few weight coordinates per layer
  for (size_t l = 0; l < net.W.size(); ++l) {
    for (int probe = 0; probe < 3; ++probe) {
      int r = probe % net.W[l].rows;
      int c = (probe * 2) % net.W[l].cols;
      SampledMlp plus = net, minus = net;
      plus.W[l].at(r, c) += h;
      minus.W[l].at(r, c) -= h;
      double fd = (dot_output(plus) - dot_output(minus)) / (2 * h);
      CHECK(Wbar[l].at(r, c) == doctest::Approx(fd).epsilon(1e-5));
    }
    SampledMlp plus = net, minus = net;
    plus.b[l][0] += h;
    minus.b[l][0] -= h;
    double fd = (dot_output(plus) - dot_output(minus)) / (2 * h);
    CHECK(bbar[l][0] == doctest::Approx(fd).epsilon(1e-5));
  }
  // input adjoint
  for (int c = 0; c < 3; ++c) {
    auto xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    std::vector<double> yp(3), ym(3);
    net.forward(xp, yp);
    net.forward(xm, ym);
    double fd = ((yp[0] - ym[0]) * ybar[0] + (yp[1] - ym[1]) * ybar[1] +
                 (yp[2] - ym[2]) * ybar[2]) /
                (2 * h);
    CHECK(xbar[c] == doctest::Approx(fd).epsilon(1e-5));
  }
}
