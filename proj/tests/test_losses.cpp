#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lw2/datasets.hpp"
#include "lw2/losses.hpp"
#include "lw2/models.hpp"
#include "lw2/neighborhoods.hpp"
#include "lw2/rng.hpp"

using namespace lw2;

namespace {

Matrix col(const std::vector<double>& v) {
  Matrix m(static_cast<int>(v.size()), 1);
  for (size_t i = 0; i < v.size(); ++i) m.at(static_cast<int>(i), 0) = v[i];
  return m;
}

std::vector<std::vector<double>> scalar_inputs(const std::vector<double>& v) {
  std::vector<std::vector<double>> out;
  for (double x : v) out.push_back({x});
  return out;
}

}  // namespace

TEST_CASE("identical predictions give zero everywhere") {
  auto xs = scalar_inputs({0.0, 0.1, 0.2, 0.35, 0.9});
  auto idx = build_index(xs, InputNorm::homogeneous(), 0.15);
  Matrix truth = col({1, 2, 3, 4, 5});
  for (LossFamily fam : {LossFamily::W2, LossFamily::Mmd, LossFamily::Mse, LossFamily::Mean2Var}) {
    for (Locality loc : {Locality::Local, Locality::Global}) {
      auto rep = evaluate_loss({fam, loc}, truth, truth, &idx);
      CHECK(rep.value == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("single full neighborhood reduces the local loss to the sorted path") {
  auto xs = scalar_inputs({0.0, 0.01, 0.02, 0.03, 0.04});
  auto idx = build_index(xs, InputNorm::homogeneous(), 10.0);
  Matrix truth = col({0.0, 1.0, -0.5, 2.0, 0.25});
  Matrix preds = col({0.3, -1.0, 0.7, 1.5, 0.1});
  auto rep = local_w2_loss(truth, preds, idx);
  double expect = w2sq_1d_sorted(PointCloud(1, truth.a), PointCloud(1, preds.a));
  CHECK(rep.value == doctest::Approx(expect).epsilon(1e-12));
  CHECK(rep.per_anchor.size() == 5);
  for (double t : rep.per_anchor) CHECK(t == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("global w2 equals the local loss with one universal neighborhood") {
  auto xs = scalar_inputs({0.5, 0.5, 0.5, 0.5});
  auto idx = build_index(xs, InputNorm::homogeneous(), 1.0);
  Matrix truth = col({0, 1, 2, 3});
  Matrix preds = col({3, 1, 0, 2});
  CHECK(global_w2_loss(truth, preds).value ==
        doctest::Approx(local_w2_loss(truth, preds, idx).value).epsilon(1e-12));
}

TEST_CASE("mse and mean2var hand values") {
  Matrix truth = col({1, 3});
  Matrix preds = col({1, 1});
  auto mse = baseline_loss({LossFamily::Mse, Locality::Global}, truth, preds, nullptr);
  CHECK(mse.value == doctest::Approx(2.0));

  // {1,2} vs {2,1}: mse term 1, spread sums equal -> 1
  Matrix t2 = col({1, 2});
  Matrix p2 = col({2, 1});
  auto m2v = baseline_loss({LossFamily::Mean2Var, Locality::Global}, t2, p2, nullptr);
  CHECK(m2v.value == doctest::Approx(1.0));
}

TEST_CASE("local kinds demand an index") {
  Matrix truth = col({1, 2});
  CHECK_THROWS(evaluate_loss({LossFamily::Mse, Locality::Local}, truth, truth, nullptr));
  CHECK_THROWS(evaluate_loss({LossFamily::W2, Locality::Local}, truth, truth, nullptr));
}

TEST_CASE("size mismatches are rejected") {
  Matrix truth = col({1, 2, 3});
  Matrix preds = col({1, 2});
  CHECK_THROWS(evaluate_loss({LossFamily::Mse, Locality::Global}, truth, preds, nullptr));
}

TEST_CASE("mmd is nonnegative, zero on identical sets, positive otherwise") {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 3 + static_cast<int>(rng.uniform01() * 8);
    std::vector<double> t(n), p(n);
    for (auto& v : t) v = rng.normal();
    for (auto& v : p) v = rng.normal() + 0.5;
    auto r = baseline_loss({LossFamily::Mmd, Locality::Global}, col(t), col(p), nullptr);
    CHECK(r.value >= 0.0);
    CHECK(r.value > 1e-6);  // shifted clouds must register
    REQUIRE(r.mmd_beta.size() == 1);
    CHECK(r.mmd_beta[0] > 0);
  }
}

TEST_CASE("anchor permutation invariance") {
  Rng rng(37);
  const int n = 24;
  std::vector<double> xs_flat(n), t(n), p(n);
  for (int i = 0; i < n; ++i) {
    xs_flat[i] = rng.uniform(0, 1);
    t[i] = rng.normal();
    p[i] = rng.normal();
  }
  auto idx = build_index(scalar_inputs(xs_flat), InputNorm::homogeneous(), 0.15);

  // permute the samples and rebuild
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[static_cast<int>(rng.uniform01() * (i + 1))]);
  std::vector<double> xs2(n), t2(n), p2(n);
  for (int i = 0; i < n; ++i) {
    xs2[i] = xs_flat[perm[i]];
    t2[i] = t[perm[i]];
    p2[i] = p[perm[i]];
  }
  auto idx2 = build_index(scalar_inputs(xs2), InputNorm::homogeneous(), 0.15);

  for (LossFamily fam : {LossFamily::W2, LossFamily::Mmd, LossFamily::Mse, LossFamily::Mean2Var}) {
    auto r1 = evaluate_loss({fam, Locality::Local}, col(t), col(p), &idx);
    auto r2 = evaluate_loss({fam, Locality::Local}, col(t2), col(p2), &idx2);
    CHECK(r1.value == doctest::Approx(r2.value).epsilon(1e-10));
  }
}

TEST_CASE("tape rebuild reproduces every loss value") {
  Rng rng(41);
  const int n = 14;
  std::vector<double> xs_flat(n), t(n), p(n);
  for (int i = 0; i < n; ++i) {
    xs_flat[i] = rng.uniform(0, 1);
    t[i] = rng.normal();
    p[i] = rng.normal();
  }
  auto idx = build_index(scalar_inputs(xs_flat), InputNorm::homogeneous(), 0.2);
  Matrix truth = col(t), preds = col(p);
  for (LossFamily fam : {LossFamily::W2, LossFamily::Mmd, LossFamily::Mse, LossFamily::Mean2Var}) {
    for (Locality loc : {Locality::Local, Locality::Global}) {
      LossKind kind{fam, loc};
      auto rep = evaluate_loss(kind, truth, preds, &idx);
      Tape tape;
      std::vector<std::vector<Var>> pv(n);
      for (int i = 0; i < n; ++i) pv[i].push_back(make_var(tape, p[i]));
      Var v = loss_on_tape(tape, kind, truth, pv, &idx, rep);
      CHECK(v.value() == doctest::Approx(rep.value).epsilon(1e-10));
    }
  }
}

TEST_CASE("prediction gradients match the taped loss") {
  Rng rng(43);
  const int n = 12;
  std::vector<double> xs_flat(n), t(n), p(n);
  for (int i = 0; i < n; ++i) {
    xs_flat[i] = rng.uniform(0, 1);
    t[i] = rng.normal();
    p[i] = rng.normal();
  }
  auto idx = build_index(scalar_inputs(xs_flat), InputNorm::homogeneous(), 0.25);
  Matrix truth = col(t), preds = col(p);
  for (LossFamily fam : {LossFamily::W2, LossFamily::Mmd, LossFamily::Mse, LossFamily::Mean2Var}) {
    for (Locality loc : {Locality::Local, Locality::Global}) {
      LossKind kind{fam, loc};
      auto rep = evaluate_loss(kind, truth, preds, &idx);
      Matrix seeds = loss_prediction_gradient(kind, truth, preds, &idx, rep);

      Tape tape;
      std::vector<std::vector<Var>> pv(n);
      for (int i = 0; i < n; ++i) pv[i].push_back(make_var(tape, p[i]));
      Var v = loss_on_tape(tape, kind, truth, pv, &idx, rep);
      tape.backward(v.i);
      for (int i = 0; i < n; ++i)
        CHECK(seeds.at(i, 0) == doctest::Approx(tape.adjoint(pv[i][0].i)).epsilon(1e-9));
    }
  }
}

TEST_CASE("closed-form 1d gaussian w2 via the global loss") {
  // W2^2(N(0,1), N(1,4)) = (0-1)^2 + (1-2)^2 = 2
  std::vector<double> vals;
  Rng rng(47);
  const int n = 20000;
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = 1.0 + 2.0 * rng.normal();
  }
  double w2 = global_w2_loss(col(a), col(b)).value;
  CHECK(w2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("local w2 approaches the closed-form conditional integral") {
  // linear-Gaussian truth/model pair with known parameters: per x the
  // conditional laws are Gaussian, so W2^2 = (m1-m2)^2 + (s1-s2)^2 with
  // m(x) = b0 + sum b_i x_i, s(x) = sqrt(sigma0^2 + sum sigma_i^2 x_i^2)
  LinearGaussianParams truth_p{{1, 1, 2, 3}, {0.1, 0.2, 0.3, 0.4}};
  LinearGaussianParams model_p{{1.15, 0.9, 2.2, 2.8}, {0.15, 0.26, 0.22, 0.52}};

  auto closed_form = [&](const std::vector<double>& x) {
    double m1 = truth_p.mean[0], m2 = model_p.mean[0];
    double v1 = sq(truth_p.spread_raw[0]), v2 = sq(model_p.spread_raw[0]);
    for (int i = 0; i < 3; ++i) {
      m1 += truth_p.mean[i + 1] * x[i];
      m2 += model_p.mean[i + 1] * x[i];
      v1 += sq(truth_p.spread_raw[i + 1] * x[i]);
      v2 += sq(model_p.spread_raw[i + 1] * x[i]);
    }
    return sq(m1 - m2) + sq(std::sqrt(v1) - std::sqrt(v2));
  };

  std::vector<ScalarLaw> laws{ScalarLaw::exponential(4.0), ScalarLaw::normal(0.0, 0.5),
                              ScalarLaw::beta(5.0, 5.0)};

  // Monte-Carlo value of the integral over the input law
  Rng mc(1234);
  double target = 0;
  const int mc_draws = 100000;
  for (int i = 0; i < mc_draws; ++i) {
    auto x = sample_inputs(laws, 1, mc)[0];
    target += closed_form(x);
  }
  target /= mc_draws;

  // empirical local W2 at N = 4000 (statistical check, single seed)
  Rng rng(7);
  const int N = 4000;
  auto xs = sample_inputs(laws, N, rng);
  auto data = sample_ground_truth(truth_p, xs, rng);
  LinearGaussianModel model(3);
  ParamVector pv = model.pack(model_p);
  Matrix preds(N, 1);
  for (int i = 0; i < N; ++i) {
    auto eps = draw_noise(model, rng);
    double y;
    model.predict(pv.values, xs[i], eps, {&y, 1});
    preds.at(i, 0) = y;
  }
  auto idx = build_index(xs, InputNorm::homogeneous(), 0.1);
  double est = local_w2_loss(data.output_matrix(), preds, idx).value;
  CHECK(est == doctest::Approx(target).epsilon(0.25));
}

TEST_CASE("loss kind formatting") {
  CHECK(to_string(LossKind{LossFamily::W2, Locality::Local}) == "local-w2");
  CHECK(to_string(LossKind{LossFamily::Mean2Var, Locality::Global}) == "global-mean2var");
  CHECK(parse_loss_family("mmd") == LossFamily::Mmd);
  CHECK_THROWS(parse_loss_family("nope"));
}
