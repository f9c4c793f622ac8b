#include "lw2/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "lw2/neighborhoods.hpp"
#include "lw2/norms.hpp"
#include "lw2/transport.hpp"

namespace lw2 {

void parallel_runs(int repeats, int threads, const std::function<void(int)>& fn) {
  if (repeats < 1) fail_arg("parallel_runs: repeats must be >= 1");
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  int nt = threads > 0 ? threads : std::min(hw, repeats);
  nt = std::min(nt, repeats);
  if (nt <= 1) {
    for (int i = 0; i < repeats; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nt);
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next.fetch_add(1); i < repeats; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Linear regression
// ---------------------------------------------------------------------------

namespace {

LinearGaussianParams linreg_truth() { return {{1, 1, 2, 3}, {0.1, 0.2, 0.3, 0.4}}; }

std::vector<ScalarLaw> linreg_laws() {
  return {ScalarLaw::exponential(4.0), ScalarLaw::normal(0.0, 0.5), ScalarLaw::beta(5.0, 5.0)};
}

// Per-run streams are decorrelated from the base seed by purpose tags.
enum StreamTag : uint64_t { kDataStream = 1, kTestStream = 2, kEvalStream = 3 };

}  // namespace

LinregResult run_linreg(const LinregOptions& opt) {
  if (opt.n < 8) fail_arg("linreg: need at least 8 samples");
  if (opt.delta <= 0) fail_arg("linreg: delta must be > 0");
  if (opt.repeats < 1) fail_arg("linreg: repeats must be >= 1");

  LinregResult result;
  result.truth = linreg_truth();
  result.runs.resize(opt.repeats);

  parallel_runs(opt.repeats, opt.threads, [&](int i) {
    const uint64_t seed = opt.seed + static_cast<uint64_t>(i);
    Rng data_rng = Rng(seed).fork(kDataStream);
    auto xs = sample_inputs(linreg_laws(), opt.n, data_rng);
    auto data = sample_ground_truth(result.truth, xs, data_rng);

    InputNorm norm = opt.hetero_norm ? fit_hetero_norm(xs, data.output_column())
                                     : InputNorm::homogeneous();
    NeighborhoodIndex index;
    if (opt.loss.locality == Locality::Local) index = build_index(xs, norm, opt.delta);

    LinearGaussianModel model(3);
    Rng init_rng = Rng(seed).fork(kEvalStream);
    ParamVector init = model.init_params(init_rng);

    TrainConfig cfg;
    cfg.epochs = opt.epochs;
    cfg.lr = opt.lr;
    cfg.weight_decay = opt.weight_decay;
    cfg.delta = opt.delta;
    cfg.loss = opt.loss;
    cfg.seed = seed;
    auto trained = train(model, std::move(init), data,
                         opt.loss.locality == Locality::Local ? &index : nullptr, cfg);

    LinregRun& run = result.runs[i];
    run.seed = seed;
    run.trace = std::move(trained.trace);
    run.estimate = model.unpack(trained.params.values);
    auto [eb, es] = param_error(result.truth, run.estimate);
    run.error_b = eb;
    run.error_sigma = es;
  });

  std::vector<double> ebs, ess;
  for (const auto& r : result.runs) {
    ebs.push_back(r.error_b);
    ess.push_back(r.error_sigma);
  }
  result.median_error_b = median(ebs);
  result.median_error_sigma = median(ess);
  return result;
}

// ---------------------------------------------------------------------------
// MLP reconstruction of the saturation model
// ---------------------------------------------------------------------------

namespace {

NonlinearExpTruth nn_truth(const std::optional<double>& omega_sd) {
  NonlinearExpTruth t;
  t.mean = {19.1426, 0.5311};
  if (omega_sd) {
    t.cov = {{{sq(*omega_sd), 0.0}, {0.0, sq(*omega_sd)}}};
  } else {
    t.cov = {{{6.22864, -0.4322}, {-0.4322, 0.04124}}};
  }
  return t;
}

void zero_spreads(const StochasticMlpModel& model, ParamVector& params) {
  for (const auto& lay : model.layout().layers)
    for (int w = 0; w < lay.rows * lay.cols; ++w) params.values[lay.s_off + w] = 0.0;
}

}  // namespace

NnReconResult run_nn_recon(const NnReconOptions& opt) {
  if (opt.n < 8) fail_arg("nn-recon: need at least 8 samples");
  if (opt.delta <= 0) fail_arg("nn-recon: delta must be > 0");
  if (opt.x_halfwidth <= 0) fail_arg("nn-recon: x half-width must be > 0");

  NnReconResult result;
  result.runs.resize(opt.repeats);
  const NonlinearExpTruth truth = nn_truth(opt.omega_sd);

  parallel_runs(opt.repeats, opt.threads, [&](int i) {
    const uint64_t seed = opt.seed + static_cast<uint64_t>(i);
    Rng data_rng = Rng(seed).fork(kDataStream);
    auto xs = sample_inputs({ScalarLaw::uniform(-opt.x_halfwidth, opt.x_halfwidth)}, opt.n,
                            data_rng);
    auto data = sample_ground_truth(truth, xs, data_rng);

    InputNorm norm = opt.hetero_norm ? fit_hetero_norm(xs, data.output_column())
                                     : InputNorm::homogeneous();
    NeighborhoodIndex index;
    if (opt.loss.locality == Locality::Local) index = build_index(xs, norm, opt.delta);

    MlpShape shape{1, 1, opt.width, opt.depth, opt.resnet};
    StochasticMlpModel model(shape);
    Rng init_rng = Rng(seed).fork(kEvalStream);
    ParamVector init = model.init_params(init_rng);
    if (opt.deterministic) zero_spreads(model, init);

    TrainConfig cfg;
    cfg.epochs = opt.epochs;
    cfg.lr = opt.lr;
    cfg.weight_decay = opt.weight_decay;
    cfg.delta = opt.delta;
    cfg.loss = opt.loss;
    cfg.seed = seed;
    auto trained = train(model, std::move(init), data,
                         opt.loss.locality == Locality::Local ? &index : nullptr, cfg);

    // test grid: eleven anchors across the input range, fresh truth samples
    // and fresh prediction draws at each anchor
    Rng test_rng = Rng(seed).fork(kTestStream);
    const int A = 11;
    const int per_anchor = opt.test_samples_per_anchor;
    std::vector<double> tm(A), tsd(A), pm(A), psd(A);
    std::vector<double> y(1);
    for (int a = 0; a < A; ++a) {
      const double x = -opt.x_halfwidth + 2.0 * opt.x_halfwidth * a / (A - 1);
      auto anchor_inputs = std::vector<std::vector<double>>(per_anchor, {x});
      auto tset = sample_ground_truth(truth, anchor_inputs, test_rng);
      double s = 0, s2 = 0;
      for (const auto& yv : tset.outputs) {
        s += yv[0];
        s2 += yv[0] * yv[0];
      }
      tm[a] = s / per_anchor;
      tsd[a] = std::sqrt(std::max(0.0, s2 / per_anchor - tm[a] * tm[a]));
      s = s2 = 0;
      for (int k = 0; k < per_anchor; ++k) {
        auto eps = draw_noise(model, test_rng);
        model.predict(trained.params.values, anchor_inputs[k], eps, y);
        s += y[0];
        s2 += y[0] * y[0];
      }
      pm[a] = s / per_anchor;
      psd[a] = std::sqrt(std::max(0.0, s2 / per_anchor - pm[a] * pm[a]));
    }
    auto rep = mean_sd_error(tm, tsd, pm, psd);

    NnReconRun& run = result.runs[i];
    run.seed = seed;
    run.trace = std::move(trained.trace);
    run.mean_error = rep.mean_error;
    run.sd_error = rep.sd_error;
  });

  std::vector<double> ms, ss;
  for (const auto& r : result.runs) {
    ms.push_back(r.mean_error);
    ss.push_back(r.sd_error);
  }
  result.median_mean_error = median(ms);
  result.median_sd_error = median(ss);
  return result;
}

// ---------------------------------------------------------------------------
// Concrete study
// ---------------------------------------------------------------------------

ConcreteResult run_concrete(const ConcreteOptions& opt) {
  if (opt.data_path.empty()) fail_arg("concrete: missing data file");
  auto data = load_csv(opt.data_path, opt.input_columns, opt.output_column);
  auto split = split_and_standardize(data);

  ConcreteResult result;
  result.train_rows = split.train.size();
  result.test_rows = split.test.size();
  result.runs.resize(opt.repeats);

  // heterogeneous norm fitted on the standardized training split
  InputNorm norm = fit_hetero_norm(split.train.inputs, split.train.output_column());
  NeighborhoodIndex train_index;
  if (opt.loss.locality == Locality::Local)
    train_index = build_index(split.train.inputs, norm, opt.delta);
  NeighborhoodIndex test_index = build_index(split.test.inputs, norm, opt.delta0);

  parallel_runs(opt.repeats, opt.threads, [&](int i) {
    const uint64_t seed = opt.seed + static_cast<uint64_t>(i);
    MlpShape shape{static_cast<int>(opt.input_columns.size()), 1, opt.width, opt.depth,
                   opt.resnet};
    StochasticMlpModel model(shape);
    Rng init_rng = Rng(seed).fork(kEvalStream);
    ParamVector init = model.init_params(init_rng);
    if (opt.deterministic) zero_spreads(model, init);

    TrainConfig cfg;
    cfg.epochs = opt.epochs;
    cfg.lr = opt.lr;
    cfg.weight_decay = opt.weight_decay;
    cfg.delta = opt.delta;
    cfg.loss = opt.loss;
    cfg.seed = seed;
    auto trained = train(model, std::move(init), split.train,
                         opt.loss.locality == Locality::Local ? &train_index : nullptr, cfg);

    // conditional moments over the test split, one prediction per test row
    Rng test_rng = Rng(seed).fork(kTestStream);
    std::vector<double> preds(split.test.size());
    std::vector<double> y(1);
    for (int k = 0; k < split.test.size(); ++k) {
      auto eps = draw_noise(model, test_rng);
      model.predict(trained.params.values, split.test.inputs[k], eps, y);
      preds[k] = y[0];
    }
    auto truth_cm = conditional_moments(split.test.output_column(), test_index, opt.min_count);
    auto pred_cm = conditional_moments(preds, test_index, opt.min_count);
    auto rep = mean_sd_error(truth_cm.mean, truth_cm.sd, pred_cm.mean, pred_cm.sd);

    ConcreteRun& run = result.runs[i];
    run.seed = seed;
    run.trace = std::move(trained.trace);
    run.mean_error = rep.mean_error;
    run.sd_error = rep.sd_error;
    run.anchors_used = static_cast<int>(truth_cm.anchor.size());
  });

  std::vector<double> ms, ss;
  for (const auto& r : result.runs) {
    ms.push_back(r.mean_error);
    ss.push_back(r.sd_error);
  }
  result.median_mean_error = median(ms);
  result.median_sd_error = median(ss);
  return result;
}

// ---------------------------------------------------------------------------
// ODE reconstruction
// ---------------------------------------------------------------------------

OdeResult run_ode(const OdeOptions& opt) {
  OdeExperimentConfig config;
  config.steps = opt.m;
  config.init_sd = opt.init_sd;
  config.latent_halfwidth = opt.sigma_u;
  config.trajectories = opt.trajectories;
  config.validate();
  if (opt.delta <= 0 || opt.delta0 <= 0) fail_arg("ode: delta and delta0 must be > 0");

  OdeResult result;
  result.runs.resize(opt.repeats);

  parallel_runs(opt.repeats, opt.threads, [&](int i) {
    const uint64_t seed = opt.seed + static_cast<uint64_t>(i);
    Rng train_rng = Rng(seed).fork(kDataStream);
    Rng test_rng = Rng(seed).fork(kTestStream);
    auto truth_train = simulate_dataset(config, train_rng);
    auto truth_test = simulate_dataset(config, test_rng);

    MlpShape shape{4, 4, opt.width, opt.depth, opt.resnet};
    StochasticMlpModel model(shape);
    NeuralOdeTrainConfig tc;
    tc.epochs = opt.epochs;
    tc.lr = opt.lr;
    tc.weight_decay = opt.weight_decay;
    tc.delta = opt.delta;
    tc.seed = seed;
    auto trained = train_neural_ode(model, truth_train, config, tc);

    Rng eval_rng = Rng(seed).fork(kEvalStream);
    std::vector<std::vector<double>> test_y0s;
    for (const auto& t : truth_test) test_y0s.push_back(t.y0);
    auto model_test = simulate_model(model, trained.params.values, test_y0s, config, eval_rng);

    OdeRun& run = result.runs[i];
    run.seed = seed;
    run.trace = std::move(trained.trace);

    if (opt.g_budget > 0) {
      LatentRhsSampler truth_g = [&](std::span<const double> yv, double, Rng& r,
                                     std::span<double> g) {
        double omega = r.uniform(-config.latent_halfwidth, config.latent_halfwidth);
        auto v = ground_truth_rhs({yv[0], yv[1], yv[2], yv[3]}, omega);
        std::copy(v.begin(), v.end(), g.begin());
      };
      std::vector<double> eps(model.noise_dim());
      LatentRhsSampler model_g = [&, eps](std::span<const double> yv, double, Rng& r,
                                          std::span<double> g) mutable {
        for (auto& e : eps) e = r.normal();
        SampledMlp net = SampledMlp::sample(model.shape(), trained.params.values, eps);
        net.forward(yv, g);
      };
      Rng grng = Rng(seed).fork(0x67686174);
      auto errs = ode_errors(truth_test, model_test, opt.delta0, config.horizon, &truth_g,
                             &model_g, opt.g_budget, &grng);
      run.error_in_yhat = errs.error_in_yhat;
      run.error_in_ghat = errs.error_in_ghat;
      run.per_slice_normalized = std::move(errs.per_slice_normalized);
    } else {
      auto errs =
          ode_errors(truth_test, model_test, opt.delta0, config.horizon, nullptr, nullptr, 0,
                     nullptr);
      run.error_in_yhat = errs.error_in_yhat;
      run.per_slice_normalized = std::move(errs.per_slice_normalized);
    }
    run.truth_test = std::move(truth_test);
    run.model_test = std::move(model_test);
  });

  std::vector<double> es;
  for (const auto& r : result.runs) es.push_back(r.error_in_yhat);
  result.median_error_in_yhat = median(es);
  return result;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::vector<SweepPoint> run_sweep_delta(const LinregOptions& base,
                                        const std::vector<double>& deltas) {
  if (deltas.empty()) fail_arg("sweep-delta: no delta values");
  std::vector<SweepPoint> out;
  for (double d : deltas) {
    LinregOptions opt = base;
    opt.delta = d;
    auto res = run_linreg(opt);
    SweepPoint p;
    p.x = d;
    p.label = "delta";
    p.median_error_b = res.median_error_b;
    p.median_error_sigma = res.median_error_sigma;
    out.push_back(p);
  }
  return out;
}

std::vector<SweepPoint> run_sweep_n(const LinregOptions& base, const std::vector<int>& ns) {
  if (ns.empty()) fail_arg("sweep-n: no sample counts");
  std::vector<SweepPoint> out;
  for (int n : ns) {
    LinregOptions opt = base;
    opt.n = n;
    auto res = run_linreg(opt);
    SweepPoint p;
    p.x = n;
    p.label = "n";
    p.median_error_b = res.median_error_b;
    p.median_error_sigma = res.median_error_sigma;
    out.push_back(p);
  }
  return out;
}

std::vector<SweepPoint> run_sweep_arch(const NnReconOptions& base,
                                       const std::vector<ArchSpec>& archs) {
  if (archs.empty()) fail_arg("sweep-arch: no architectures");
  std::vector<SweepPoint> out;
  for (const auto& a : archs) {
    NnReconOptions opt = base;
    opt.width = a.width;
    opt.depth = a.depth;
    opt.resnet = a.resnet;
    auto res = run_nn_recon(opt);
    SweepPoint p;
    p.x = a.width;
    p.label = "w" + std::to_string(a.width) + "_d" + std::to_string(a.depth) +
              (a.resnet ? "_resnet" : "_ff");
    p.median_mean_error = res.median_mean_error;
    p.median_sd_error = res.median_sd_error;
    out.push_back(p);
  }
  return out;
}

std::vector<SweepPoint> run_bench_loss(const NnReconOptions& base,
                                       const std::vector<LossKind>& kinds) {
  if (kinds.empty()) fail_arg("bench-loss: no loss kinds");
  std::vector<SweepPoint> out;
  for (const auto& k : kinds) {
    NnReconOptions opt = base;
    opt.loss = k;
    auto res = run_nn_recon(opt);
    SweepPoint p;
    p.x = static_cast<double>(out.size());
    p.label = to_string(k);
    p.median_mean_error = res.median_mean_error;
    p.median_sd_error = res.median_sd_error;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

void emit_report(const ExperimentReport& report, const std::string& out_dir, bool force) {
  namespace fs = std::filesystem;
  fs::path dir(out_dir);
  if (fs::exists(dir) && !force)
    fail_arg("emit_report: '" + out_dir + "' already exists (use force to overwrite)");
  fs::create_directories(dir / "traces");

  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["version"] = kLibraryVersion;
  j["config"] = report.config;
  j["metrics"] = report.metrics;
  nlohmann::ordered_json tr = nlohmann::ordered_json::array();
  for (const auto& [name, _] : report.traces) tr.push_back("traces/" + name);
  j["traces"] = tr;
  j["wall_clock_sec"] = report.wall_clock_sec;

  {
    std::ofstream out(dir / "report.json");
    if (!out) fail("emit_report: cannot write report.json");
    out << j.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "config.resolved.txt");
    if (!out) fail("emit_report: cannot write config.resolved.txt");
    for (auto it = report.config.begin(); it != report.config.end(); ++it)
      out << it.key() << " = " << it.value().dump() << '\n';
  }
  for (const auto& [name, body] : report.traces) {
    std::ofstream out(dir / "traces" / name);
    if (!out) fail("emit_report: cannot write trace " + name);
    out << body;
  }
}

// ---------------------------------------------------------------------------
// Verification batteries
// ---------------------------------------------------------------------------

namespace {

struct CheckSink {
  int failures = 0;
  void operator()(const std::string& name, bool ok) {
    std::printf("  [%s] %s\n", ok ? "ok" : "FAIL", name.c_str());
    if (!ok) ++failures;
  }
};

PointCloud random_cloud(Rng& rng, int n, int d) {
  std::vector<double> pts(static_cast<size_t>(n) * d);
  for (auto& p : pts) p = rng.normal();
  return PointCloud(d, std::move(pts));
}

int verify_oracles(bool inject_fault) {
  CheckSink check;
  Rng rng(2024);
  bool ok = true;
  for (int rep = 0; rep < 200; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform01() * 6);
    int d = 1 + static_cast<int>(rng.uniform01() * 4);
    auto a = random_cloud(rng, n, d);
    auto b = random_cloud(rng, n, d);
    double solver = w2sq_assignment(a, b).cost;
    if (inject_fault) solver += 0.01;  // deliberate corruption, must be caught
    if (std::abs(solver - w2sq_bruteforce(a, b)) > 1e-9) ok = false;
  }
  check("assignment equals brute force on 200 instances (n <= 6, d <= 4)", ok);

  ok = true;
  for (int rep = 0; rep < 200; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform01() * 40);
    auto a = random_cloud(rng, n, 1);
    auto b = random_cloud(rng, n, 1);
    if (std::abs(w2sq_assignment(a, b).cost - w2sq_1d_sorted(a, b)) > 1e-12) ok = false;
  }
  check("assignment equals the sorted path on 200 1-d instances", ok);

  ok = true;
  for (int rep = 0; rep < 50; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform01() * 5);
    int d = 1 + static_cast<int>(rng.uniform01() * 3);
    auto a = random_cloud(rng, n, d);
    auto b = random_cloud(rng, n, d);
    auto c = random_cloud(rng, n, d);
    double ab = w2sq_assignment(a, b).cost;
    if (std::abs(ab - w2sq_assignment(b, a).cost) > 1e-12) ok = false;
    if (w2sq_assignment(a, a).cost > 1e-15) ok = false;
    if (std::sqrt(w2sq_assignment(a, c).cost) >
        std::sqrt(ab) + std::sqrt(w2sq_assignment(b, c).cost) + 1e-9)
      ok = false;
  }
  check("symmetry, identity, and triangle inequality", ok);

  std::vector<double> vals;
  for (uint64_t s = 0; s < 5; ++s) {
    Rng g(900 + s);
    const int n = 20000;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = g.normal();
      y[i] = 1.0 + 2.0 * g.normal();
    }
    vals.push_back(global_w2_loss(
                       [&] {
                         Matrix m(n, 1);
                         for (int i = 0; i < n; ++i) m.at(i, 0) = x[i];
                         return m;
                       }(),
                       [&] {
                         Matrix m(n, 1);
                         for (int i = 0; i < n; ++i) m.at(i, 0) = y[i];
                         return m;
                       }())
                       .value);
  }
  double med = median(vals);
  check("closed-form gaussian W2^2 = 2.0 within 5% (median of 5 seeds)",
        std::abs(med - 2.0) / 2.0 <= 0.05);
  return check.failures;
}

// loss program over model parameters with frozen noise/couplings/bandwidths
Program make_loss_program(const StochasticModel& model, const SampleSet& data,
                          const NeighborhoodIndex* index, const LossKind& kind,
                          const Matrix& eps_all, const LossReport& frozen) {
  return [&model, &data, index, kind, &eps_all, &frozen](Tape& t, std::span<const Var> pv) {
    const int N = data.size();
    std::vector<std::vector<Var>> preds(N);
    for (int k = 0; k < N; ++k)
      preds[k] = model.predict_on_tape(t, pv, data.inputs[k], eps_all.row_span(k));
    return loss_on_tape(t, kind, data.output_matrix(), preds, index, frozen);
  };
}

int verify_gradients() {
  CheckSink check;

  {
    ParamVector p;
    p.add("a", 2.0);
    p.add("b", 3.0);
    Program prog = [](Tape&, std::span<const Var> v) { return v[0] * v[1] + vrelu(v[0]); };
    auto fr = forward_eval(prog, p);
    backward(fr, p);
    check("hand program value and gradient",
          fr.value == 8.0 && p.grad[0] == 4.0 && p.grad[1] == 2.0);
  }

  // every loss kind over a small stochastic MLP at random parameter points
  Rng rng(77);
  const int N = 24;
  std::vector<ScalarLaw> laws{ScalarLaw::uniform(0, 1)};
  auto xs = sample_inputs(laws, N, rng);
  LinearGaussianParams truth{{0.5, 1.5}, {0.1, 0.3}};
  auto data = sample_ground_truth(truth, xs, rng);
  auto index = build_index(xs, InputNorm::homogeneous(), 0.2);

  MlpShape shape{1, 1, 6, 2, true};
  StochasticMlpModel model(shape);

  for (LossFamily fam : {LossFamily::W2, LossFamily::Mmd, LossFamily::Mse, LossFamily::Mean2Var}) {
    for (Locality loc : {Locality::Local, Locality::Global}) {
      LossKind kind{fam, loc};
      double worst = 0;
      bool staged_ok = true;
      for (int point = 0; point < 20; ++point) {
        ParamVector params;
        Rng prng(1000 + point);
        params = model.init_params(prng);
        // keep parameters away from the |.| and relu kinks
        for (auto& v : params.values) v = (prng.uniform01() < 0.5 ? -1.0 : 1.0) * prng.uniform(0.2, 0.9);

        Matrix eps(N, model.noise_dim());
        for (int k = 0; k < N; ++k)
          for (int c = 0; c < eps.cols; ++c) eps.at(k, c) = prng.normal();

        Matrix preds(N, 1);
        std::vector<double> y(1);
        for (int k = 0; k < N; ++k) {
          model.predict(params.values, data.inputs[k], eps.row_span(k), y);
          preds.at(k, 0) = y[0];
        }
        LossReport frozen = evaluate_loss(kind, data.output_matrix(), preds,
                                          loc == Locality::Local ? &index : nullptr);
        Program prog = make_loss_program(model, data, loc == Locality::Local ? &index : nullptr,
                                         kind, eps, frozen);
        auto rep = gradient_check(prog, params, 1e-5, 1e-4);
        worst = std::max(worst, rep.max_rel_err);

        // staged per-sample gradient equals the full-graph gradient
        auto fr = forward_eval(prog, params);
        ParamVector full = params;
        backward(fr, full);
        ParamVector staged = params;
        loss_and_gradient(model, staged, data, loc == Locality::Local ? &index : nullptr, kind,
                          eps);
        for (int c = 0; c < params.size(); ++c) {
          double denom = std::max({1e-9, std::abs(full.grad[c]), std::abs(staged.grad[c])});
          if (std::abs(full.grad[c] - staged.grad[c]) / denom > 1e-9) staged_ok = false;
        }
      }
      check(to_string(kind) + " gradient vs central differences (20 points, tol 1e-4)",
            worst <= 1e-4);
      check(to_string(kind) + " staged gradient equals the full tape", staged_ok);
    }
  }

  {
    // unrolled integrator adjoint vs finite differences
    OdeExperimentConfig cfg;
    cfg.steps = 3;
    cfg.trajectories = 2;
    cfg.init_sd = 0.05;
    cfg.latent_halfwidth = 0.25;
    Rng orng(19);
    auto truth = simulate_dataset(cfg, orng);
    MlpShape oshape{4, 4, 5, 1, false};
    StochasticMlpModel omodel(oshape);
    Rng prng(23);
    ParamVector params = omodel.init_params(prng);
    for (auto& v : params.values) v = prng.normal(0, 0.3);
    Matrix eps(2, omodel.noise_dim());
    for (int j = 0; j < 2; ++j)
      for (int c = 0; c < eps.cols; ++c) eps.at(j, c) = prng.normal();
    ParamVector work = params;
    neural_ode_loss_and_gradient(omodel, work, truth, cfg, 0.4, eps);
    double worst = 0;
    const double h = 1e-6;
    for (int i = 0; i < params.size(); i += 5) {
      ParamVector plus = params, minus = params;
      plus.values[i] += h;
      minus.values[i] -= h;
      ParamVector tp = plus, tm = minus;
      double fp = neural_ode_loss_and_gradient(omodel, tp, truth, cfg, 0.4, eps);
      double fm = neural_ode_loss_and_gradient(omodel, tm, truth, cfg, 0.4, eps);
      double fd = (fp - fm) / (2 * h);
      double denom = std::max({1e-6, std::abs(fd), std::abs(work.grad[i])});
      worst = std::max(worst, std::abs(fd - work.grad[i]) / denom);
    }
    check("unrolled integrator adjoint vs central differences", worst <= 2e-4);
  }
  return check.failures;
}

int verify_bounds() {
  CheckSink check;
  double h100 = 2.0 * std::pow(100.0, -0.25) * std::sqrt(std::log(101.0));
  check("rate factor hand value at (100, 3)", std::abs(h_rate(100, 3) - h100) < 1e-12);
  check("rate factor switches branch above dimension 4",
        std::abs(h_rate(100, 6) - 2.0 * std::pow(100.0, -1.0 / 6.0)) < 1e-12);

  BoundInputs in;
  in.M = 1;
  in.L = 1;
  in.C = 1;
  in.N = 100;
  in.delta = 0.1;
  in.n = 3;
  in.counts.assign(5, 100);
  check("bound hand value", std::abs(theorem1_bound(in) - (0.4 + 8 * h100 + 0.8)) < 1e-12);

  auto b0 = theorem1_bound(in);
  auto din = in;
  din.delta = 0.3;
  auto lin = in;
  lin.L = 2.5;
  check("bound grows with delta and the Lipschitz constant",
        theorem1_bound(din) > b0 && theorem1_bound(lin) > b0);

  bool mono = true;
  for (int c : {5, 8, 20, 100, 5000, 100000})
    if (h_rate(c + 1, 3) >= h_rate(c, 3)) mono = false;
  for (int c : {1, 2, 5, 50, 5000})
    if (h_rate(c + 1, 7) >= h_rate(c, 7)) mono = false;
  check("rate factor decreases with the neighborhood count", mono);

  auto grown = in;
  grown.counts.assign(5, 100000000);
  check("bound shrinks as every count grows", theorem1_bound(grown) < b0);
  check("middle term vanishes in the large-count limit", h_rate(1e15, 3) < 1e-2);

  bool guards = false;
  try {
    auto bad = in;
    bad.M = 0;
    theorem1_bound(bad);
  } catch (const std::invalid_argument&) {
    guards = true;
  }
  check("nonpositive inputs are rejected", guards);
  return check.failures;
}

}  // namespace

int verify_suite(const std::string& which, bool inject_fault) {
  std::printf("verify %s:\n", which.c_str());
  int failures = 0;
  if (which == "oracles")
    failures = verify_oracles(inject_fault);
  else if (which == "gradients")
    failures = verify_gradients();
  else if (which == "bounds")
    failures = verify_bounds();
  else
    fail_arg("verify: unknown suite '" + which + "' (expected oracles, gradients, or bounds)");
  std::printf("verify %s: %s\n", which.c_str(), failures == 0 ? "all checks passed" : "FAILURES");
  return failures;
}

}  // namespace lw2
