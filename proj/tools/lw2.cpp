// Command-line harness for the local-W2 reconstruction experiments.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <sstream>

#include "lw2/experiments.hpp"

using namespace lw2;
using nlohmann::ordered_json;

namespace {

std::string csv_of_trace(const std::vector<double>& trace) {
  std::ostringstream os;
  os << "epoch,loss\n";
  char buf[64];
  for (size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", trace[i]);
    os << (i + 1) << ',' << buf << '\n';
  }
  return os.str();
}

std::string csv_of_sweep(const std::vector<SweepPoint>& pts, bool linreg_metrics) {
  std::ostringstream os;
  char buf[64];
  if (linreg_metrics)
    os << "x,label,median_error_b,median_error_sigma\n";
  else
    os << "x,label,median_mean_error,median_sd_error\n";
  for (const auto& p : pts) {
    std::snprintf(buf, sizeof buf, "%.17g", p.x);
    os << buf << ',' << p.label << ',';
    double a = linreg_metrics ? p.median_error_b : p.median_mean_error;
    double b = linreg_metrics ? p.median_error_sigma : p.median_sd_error;
    std::snprintf(buf, sizeof buf, "%.17g", a);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", b);
    os << buf << '\n';
  }
  return os.str();
}

std::string csv_of_trajectories(const std::vector<Trajectory>& trajs,
                                const OdeExperimentConfig& cfg) {
  std::ostringstream os;
  const int d = trajs.empty() ? 0 : trajs.front().states.cols;
  os << "traj_id,t";
  for (int c = 0; c < d; ++c) os << ",y" << (c + 1);
  os << '\n';
  char buf[64];
  for (size_t j = 0; j < trajs.size(); ++j)
    for (int i = 0; i < trajs[j].grid_points(); ++i) {
      os << j << ',';
      std::snprintf(buf, sizeof buf, "%.17g", i * cfg.dt());
      os << buf;
      for (int c = 0; c < d; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", trajs[j].states.at(i, c));
        os << ',' << buf;
      }
      os << '\n';
    }
  return os.str();
}

std::string csv_of_slices(const std::vector<double>& values, double horizon) {
  std::ostringstream os;
  os << "t,normalized_w2\n";
  char buf[64];
  const int grid = static_cast<int>(values.size());
  for (int i = 0; i < grid; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", grid > 1 ? horizon * i / (grid - 1) : 0.0);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    os << buf << '\n';
  }
  return os.str();
}

struct CommonFlags {
  std::string out;
  bool force = false;
  std::string loss_family = "w2";
  bool local = false;
  bool global = false;
};

void add_out_flags(CLI::App* cmd, CommonFlags& cf) {
  cmd->add_option("--out", cf.out, "report directory");
  cmd->add_flag("--force", cf.force, "overwrite an existing report directory");
}

void add_loss_flags(CLI::App* cmd, CommonFlags& cf) {
  cmd->add_option("--loss", cf.loss_family, "loss family: w2, mmd, mse, mean2var")
      ->check(CLI::IsMember({"w2", "mmd", "mse", "mean2var"}));
  auto* lo = cmd->add_flag("--local", cf.local, "neighborhood-local loss (default)");
  auto* gl = cmd->add_flag("--global", cf.global, "whole-set loss");
  lo->excludes(gl);
}

LossKind resolve_loss(const CommonFlags& cf) {
  LossKind k;
  k.family = parse_loss_family(cf.loss_family);
  k.locality = cf.global ? Locality::Global : Locality::Local;
  return k;
}

void finish_report(ExperimentReport& report, const CommonFlags& cf,
                   std::chrono::steady_clock::time_point start) {
  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cf.out.empty()) {
    emit_report(report, cf.out, cf.force);
    std::printf("report written to %s\n", cf.out.c_str());
  }
}

ordered_json loss_json(const LossKind& k) { return to_string(k); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local squared Wasserstein-2 reconstruction toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  // ---- linreg ----
  auto* linreg = app.add_subcommand("linreg", "linear model with Gaussian coefficients");
  LinregOptions lo;
  CommonFlags lcf;
  std::string lnorm = "hete";
  linreg->add_option("--n", lo.n, "training samples");
  linreg->add_option("--delta", lo.delta, "neighborhood radius");
  linreg->add_option("--norm", lnorm, "input norm: homo or hete")
      ->check(CLI::IsMember({"homo", "hete"}));
  linreg->add_option("--epochs", lo.epochs, "training epochs");
  linreg->add_option("--lr", lo.lr, "learning rate");
  linreg->add_option("--weight-decay", lo.weight_decay, "decoupled weight decay");
  linreg->add_option("--seed", lo.seed, "base seed");
  linreg->add_option("--repeats", lo.repeats, "independent runs");
  linreg->add_option("--threads", lo.threads, "worker threads (0 = auto)");
  add_loss_flags(linreg, lcf);
  add_out_flags(linreg, lcf);

  // ---- sweep-delta / sweep-n ----
  auto* sweepd = app.add_subcommand("sweep-delta", "linreg errors across neighborhood sizes");
  std::vector<double> sweep_deltas{0.025, 0.05, 0.1, 0.2, 0.4};
  LinregOptions sdo;
  CommonFlags sdcf;
  std::string sdnorm = "hete";
  sweepd->add_option("--deltas", sweep_deltas, "delta values");
  sweepd->add_option("--n", sdo.n, "training samples");
  sweepd->add_option("--norm", sdnorm, "input norm")->check(CLI::IsMember({"homo", "hete"}));
  sweepd->add_option("--epochs", sdo.epochs, "training epochs");
  sweepd->add_option("--lr", sdo.lr, "learning rate");
  sweepd->add_option("--weight-decay", sdo.weight_decay, "decoupled weight decay");
  sweepd->add_option("--seed", sdo.seed, "base seed");
  sweepd->add_option("--repeats", sdo.repeats, "independent runs per point");
  sweepd->add_option("--threads", sdo.threads, "worker threads");
  add_out_flags(sweepd, sdcf);

  auto* sweepn = app.add_subcommand("sweep-n", "linreg errors across sample counts");
  std::vector<int> sweep_ns{250, 500, 1000, 2000, 4000};
  LinregOptions sno;
  CommonFlags sncf;
  std::string snnorm = "hete";
  sweepn->add_option("--ns", sweep_ns, "sample counts");
  sweepn->add_option("--delta", sno.delta, "neighborhood radius");
  sweepn->add_option("--norm", snnorm, "input norm")->check(CLI::IsMember({"homo", "hete"}));
  sweepn->add_option("--epochs", sno.epochs, "training epochs");
  sweepn->add_option("--lr", sno.lr, "learning rate");
  sweepn->add_option("--weight-decay", sno.weight_decay, "decoupled weight decay");
  sweepn->add_option("--seed", sno.seed, "base seed");
  sweepn->add_option("--repeats", sno.repeats, "independent runs per point");
  sweepn->add_option("--threads", sno.threads, "worker threads");
  add_out_flags(sweepn, sncf);

  // ---- nn-recon ----
  auto* nn = app.add_subcommand("nn-recon", "weight-uncertain MLP on the saturation model");
  NnReconOptions no;
  CommonFlags ncf;
  std::string nnorm = "homo";
  double omega_sd_flag = -1;
  nn->add_option("--n", no.n, "training samples");
  nn->add_option("--delta", no.delta, "neighborhood radius");
  nn->add_option("--norm", nnorm, "input norm")->check(CLI::IsMember({"homo", "hete"}));
  nn->add_option("--width", no.width, "hidden width");
  nn->add_option("--depth", no.depth, "hidden layers");
  nn->add_flag("--resnet,!--no-resnet", no.resnet, "identity skips across hidden layers");
  nn->add_option("--epochs", no.epochs, "training epochs");
  nn->add_option("--lr", no.lr, "learning rate");
  nn->add_option("--weight-decay", no.weight_decay, "decoupled weight decay");
  nn->add_option("--seed", no.seed, "base seed");
  nn->add_option("--repeats", no.repeats, "independent runs");
  nn->add_option("--threads", no.threads, "worker threads");
  nn->add_option("--test-per-anchor", no.test_samples_per_anchor, "test draws per grid anchor");
  nn->add_option("--omega-sd", omega_sd_flag,
                 "isotropic SD for the latent pair (default: the documented covariance)");
  nn->add_option("--x-halfwidth", no.x_halfwidth, "input range half-width");
  nn->add_flag("--deterministic", no.deterministic, "freeze weight spreads at zero");
  add_loss_flags(nn, ncf);
  add_out_flags(nn, ncf);

  // ---- bench-loss ----
  auto* bench = app.add_subcommand("bench-loss", "compare every training objective");
  NnReconOptions bo;
  bo.width = 50;
  bo.depth = 2;
  bo.resnet = true;
  bo.epochs = 500;
  bo.n = 1000;
  CommonFlags bcf;
  std::vector<std::string> bench_kinds{"local-w2",  "local-mmd",  "local-mse",  "local-mean2var",
                                       "global-w2", "global-mmd", "global-mse", "global-mean2var"};
  bench->add_option("--kinds", bench_kinds, "loss kinds to benchmark (local-/global- prefix)");
  bench->add_option("--n", bo.n, "training samples");
  bench->add_option("--delta", bo.delta, "neighborhood radius");
  bench->add_option("--width", bo.width, "hidden width");
  bench->add_option("--depth", bo.depth, "hidden layers");
  bench->add_flag("--resnet,!--no-resnet", bo.resnet, "identity skips");
  bench->add_option("--epochs", bo.epochs, "training epochs");
  bench->add_option("--lr", bo.lr, "learning rate");
  bench->add_option("--weight-decay", bo.weight_decay, "decoupled weight decay");
  bench->add_option("--seed", bo.seed, "base seed");
  bench->add_option("--repeats", bo.repeats, "independent runs per kind");
  bench->add_option("--threads", bo.threads, "worker threads");
  add_out_flags(bench, bcf);

  // ---- sweep-arch ----
  auto* arch = app.add_subcommand("sweep-arch", "architecture sweep for the MLP experiment");
  NnReconOptions ao;
  ao.epochs = 500;
  ao.n = 1000;
  CommonFlags acf;
  std::vector<int> arch_widths{12, 25, 50, 100};
  std::vector<int> arch_depths{1, 2, 3, 4};
  arch->add_option("--widths", arch_widths, "hidden widths (paired with --depth-for-widths)");
  arch->add_option("--depths", arch_depths, "hidden layer counts (at width 50)");
  arch->add_option("--n", ao.n, "training samples");
  arch->add_option("--delta", ao.delta, "neighborhood radius");
  arch->add_option("--epochs", ao.epochs, "training epochs");
  arch->add_option("--lr", ao.lr, "learning rate");
  arch->add_option("--weight-decay", ao.weight_decay, "decoupled weight decay");
  arch->add_option("--seed", ao.seed, "base seed");
  arch->add_option("--repeats", ao.repeats, "independent runs per point");
  arch->add_option("--threads", ao.threads, "worker threads");
  add_out_flags(arch, acf);

  // ---- concrete ----
  auto* concrete = app.add_subcommand("concrete", "compressive-strength distribution study");
  ConcreteOptions co;
  CommonFlags ccf;
  concrete->add_option("--data", co.data_path, "CSV file with named columns")->required();
  concrete->add_option("--input-cols", co.input_columns, "input column names (6 by default)");
  concrete->add_option("--output-col", co.output_column, "output column name");
  concrete->add_option("--delta", co.delta, "training neighborhood radius");
  concrete->add_option("--delta0", co.delta0, "evaluation neighborhood radius");
  concrete->add_option("--min-count", co.min_count, "minimum samples per evaluation anchor");
  concrete->add_option("--width", co.width, "hidden width");
  concrete->add_option("--depth", co.depth, "hidden layers");
  concrete->add_flag("--resnet,!--no-resnet", co.resnet, "identity skips");
  concrete->add_option("--epochs", co.epochs, "training epochs");
  concrete->add_option("--lr", co.lr, "learning rate");
  concrete->add_option("--weight-decay", co.weight_decay, "decoupled weight decay");
  concrete->add_option("--seed", co.seed, "base seed");
  concrete->add_option("--repeats", co.repeats, "independent runs");
  concrete->add_option("--threads", co.threads, "worker threads");
  concrete->add_flag("--deterministic", co.deterministic, "freeze weight spreads at zero");
  add_loss_flags(concrete, ccf);
  add_out_flags(concrete, ccf);

  // ---- ode ----
  auto* ode = app.add_subcommand("ode", "latent-parameter ODE reconstruction");
  OdeOptions oo;
  CommonFlags ocf;
  ode->add_option("--a", oo.init_sd, "initial-condition SD");
  ode->add_option("--sigma-u", oo.sigma_u, "latent half-width");
  ode->add_option("--m", oo.m, "time-grid steps");
  ode->add_option("--trajectories", oo.trajectories, "trajectories per set");
  ode->add_option("--width", oo.width, "hidden width");
  ode->add_option("--depth", oo.depth, "hidden layers");
  ode->add_flag("--resnet,!--no-resnet", oo.resnet, "identity skips");
  ode->add_option("--delta", oo.delta, "training neighborhood radius");
  ode->add_option("--delta0", oo.delta0, "evaluation neighborhood radius");
  ode->add_option("--epochs", oo.epochs, "training epochs");
  ode->add_option("--lr", oo.lr, "learning rate");
  ode->add_option("--weight-decay", oo.weight_decay, "decoupled weight decay");
  ode->add_option("--seed", oo.seed, "base seed");
  ode->add_option("--repeats", oo.repeats, "independent runs");
  ode->add_option("--threads", oo.threads, "worker threads");
  ode->add_option("--g-budget", oo.g_budget, "latent draws per field evaluation (0 = skip)");
  add_out_flags(ode, ocf);

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "run a verification battery");
  std::string suite;
  bool inject_fault = false;
  verify->add_option("suite", suite, "oracles, gradients, or bounds")->required();
  verify->add_flag("--inject-fault", inject_fault,
                   "corrupt one solver result to prove the battery catches it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (*linreg) {
      lo.hetero_norm = (lnorm == "hete");
      lo.loss = resolve_loss(lcf);
      auto res = run_linreg(lo);
      ExperimentReport rep;
      rep.experiment = "linreg";
      rep.config = {{"n", lo.n},
                    {"delta", lo.delta},
                    {"norm", lnorm},
                    {"loss", loss_json(lo.loss)},
                    {"epochs", lo.epochs},
                    {"lr", lo.lr},
                    {"weight_decay", lo.weight_decay},
                    {"seed", lo.seed},
                    {"repeats", lo.repeats}};
      ordered_json per_seed = ordered_json::array();
      for (const auto& r : res.runs) {
        per_seed.push_back({{"seed", r.seed},
                            {"error_b", r.error_b},
                            {"error_sigma", r.error_sigma}});
        rep.traces.emplace_back("loss_seed" + std::to_string(r.seed) + ".csv",
                                csv_of_trace(r.trace));
      }
      rep.metrics = {{"per_seed", per_seed},
                     {"median_error_b", res.median_error_b},
                     {"median_error_sigma", res.median_error_sigma}};
      std::printf("linreg: median error_b %.4f, median error_sigma %.4f (%d runs)\n",
                  res.median_error_b, res.median_error_sigma, lo.repeats);
      finish_report(rep, lcf, start);
    } else if (*sweepd) {
      sdo.hetero_norm = (sdnorm == "hete");
      auto pts = run_sweep_delta(sdo, sweep_deltas);
      ExperimentReport rep;
      rep.experiment = "sweep-delta";
      rep.config = {{"deltas", sweep_deltas}, {"n", sdo.n},       {"norm", sdnorm},
                    {"epochs", sdo.epochs},   {"lr", sdo.lr},     {"weight_decay", sdo.weight_decay},
                    {"seed", sdo.seed},       {"repeats", sdo.repeats}};
      ordered_json points = ordered_json::array();
      for (const auto& p : pts)
        points.push_back({{"delta", p.x},
                          {"median_error_b", p.median_error_b},
                          {"median_error_sigma", p.median_error_sigma}});
      rep.metrics = {{"points", points}};
      rep.traces.emplace_back("sweep.csv", csv_of_sweep(pts, true));
      for (const auto& p : pts)
        std::printf("  delta %.3f: error_b %.4f, error_sigma %.4f\n", p.x, p.median_error_b,
                    p.median_error_sigma);
      finish_report(rep, sdcf, start);
    } else if (*sweepn) {
      sno.hetero_norm = (snnorm == "hete");
      auto pts = run_sweep_n(sno, sweep_ns);
      ExperimentReport rep;
      rep.experiment = "sweep-n";
      rep.config = {{"ns", sweep_ns},       {"delta", sno.delta}, {"norm", snnorm},
                    {"epochs", sno.epochs}, {"lr", sno.lr},       {"weight_decay", sno.weight_decay},
                    {"seed", sno.seed},     {"repeats", sno.repeats}};
      ordered_json points = ordered_json::array();
      for (const auto& p : pts)
        points.push_back({{"n", p.x},
                          {"median_error_b", p.median_error_b},
                          {"median_error_sigma", p.median_error_sigma}});
      rep.metrics = {{"points", points}};
      rep.traces.emplace_back("sweep.csv", csv_of_sweep(pts, true));
      for (const auto& p : pts)
        std::printf("  n %5.0f: error_b %.4f, error_sigma %.4f\n", p.x, p.median_error_b,
                    p.median_error_sigma);
      finish_report(rep, sncf, start);
    } else if (*nn) {
      no.hetero_norm = (nnorm == "hete");
      no.loss = resolve_loss(ncf);
      if (omega_sd_flag > 0) no.omega_sd = omega_sd_flag;
      auto res = run_nn_recon(no);
      ExperimentReport rep;
      rep.experiment = "nn-recon";
      rep.config = {{"n", no.n},
                    {"delta", no.delta},
                    {"norm", nnorm},
                    {"width", no.width},
                    {"depth", no.depth},
                    {"resnet", no.resnet},
                    {"loss", loss_json(no.loss)},
                    {"epochs", no.epochs},
                    {"lr", no.lr},
                    {"weight_decay", no.weight_decay},
                    {"seed", no.seed},
                    {"repeats", no.repeats},
                    {"test_per_anchor", no.test_samples_per_anchor},
                    {"omega_sd", no.omega_sd ? ordered_json(*no.omega_sd) : ordered_json(nullptr)},
                    {"x_halfwidth", no.x_halfwidth},
                    {"deterministic", no.deterministic}};
      ordered_json per_seed = ordered_json::array();
      for (const auto& r : res.runs) {
        per_seed.push_back(
            {{"seed", r.seed}, {"mean_error", r.mean_error}, {"sd_error", r.sd_error}});
        rep.traces.emplace_back("loss_seed" + std::to_string(r.seed) + ".csv",
                                csv_of_trace(r.trace));
      }
      rep.metrics = {{"per_seed", per_seed},
                     {"median_mean_error", res.median_mean_error},
                     {"median_sd_error", res.median_sd_error}};
      std::printf("nn-recon [%s]: median mean_error %.4f, median sd_error %.4f\n",
                  to_string(no.loss).c_str(), res.median_mean_error, res.median_sd_error);
      finish_report(rep, ncf, start);
    } else if (*bench) {
      std::vector<LossKind> kinds;
      for (const auto& s : bench_kinds) {
        LossKind k;
        auto dash = s.find('-');
        if (dash == std::string::npos) fail_arg("bench-loss: kind must look like local-w2");
        std::string loc = s.substr(0, dash);
        if (loc != "local" && loc != "global") fail_arg("bench-loss: unknown locality " + loc);
        k.locality = loc == "local" ? Locality::Local : Locality::Global;
        k.family = parse_loss_family(s.substr(dash + 1));
        kinds.push_back(k);
      }
      auto pts = run_bench_loss(bo, kinds);
      ExperimentReport rep;
      rep.experiment = "bench-loss";
      rep.config = {{"kinds", bench_kinds}, {"n", bo.n},
                    {"delta", bo.delta},    {"width", bo.width},
                    {"depth", bo.depth},    {"resnet", bo.resnet},
                    {"epochs", bo.epochs},  {"lr", bo.lr},
                    {"weight_decay", bo.weight_decay},
                    {"seed", bo.seed},      {"repeats", bo.repeats}};
      ordered_json points = ordered_json::array();
      for (const auto& p : pts)
        points.push_back({{"kind", p.label},
                          {"median_mean_error", p.median_mean_error},
                          {"median_sd_error", p.median_sd_error}});
      rep.metrics = {{"points", points}};
      rep.traces.emplace_back("bench.csv", csv_of_sweep(pts, false));
      for (const auto& p : pts)
        std::printf("  %-16s mean_error %.4f, sd_error %.4f\n", p.label.c_str(),
                    p.median_mean_error, p.median_sd_error);
      finish_report(rep, bcf, start);
    } else if (*arch) {
      std::vector<ArchSpec> specs;
      for (int w : arch_widths) specs.push_back({w, 4, true});
      for (int d : arch_depths) {
        specs.push_back({50, d, true});
        specs.push_back({50, d, false});
      }
      auto pts = run_sweep_arch(ao, specs);
      ExperimentReport rep;
      rep.experiment = "sweep-arch";
      rep.config = {{"widths", arch_widths}, {"depths", arch_depths},
                    {"n", ao.n},             {"delta", ao.delta},
                    {"epochs", ao.epochs},   {"lr", ao.lr},
                    {"weight_decay", ao.weight_decay},
                    {"seed", ao.seed},       {"repeats", ao.repeats}};
      ordered_json points = ordered_json::array();
      for (const auto& p : pts)
        points.push_back({{"arch", p.label},
                          {"median_mean_error", p.median_mean_error},
                          {"median_sd_error", p.median_sd_error}});
      rep.metrics = {{"points", points}};
      rep.traces.emplace_back("sweep.csv", csv_of_sweep(pts, false));
      for (const auto& p : pts)
        std::printf("  %-16s mean_error %.4f, sd_error %.4f\n", p.label.c_str(),
                    p.median_mean_error, p.median_sd_error);
      finish_report(rep, acf, start);
    } else if (*concrete) {
      co.loss = resolve_loss(ccf);
      auto res = run_concrete(co);
      ExperimentReport rep;
      rep.experiment = "concrete";
      rep.config = {{"data", co.data_path},
                    {"input_cols", co.input_columns},
                    {"output_col", co.output_column},
                    {"delta", co.delta},
                    {"delta0", co.delta0},
                    {"min_count", co.min_count},
                    {"width", co.width},
                    {"depth", co.depth},
                    {"resnet", co.resnet},
                    {"loss", loss_json(co.loss)},
                    {"epochs", co.epochs},
                    {"lr", co.lr},
                    {"weight_decay", co.weight_decay},
                    {"seed", co.seed},
                    {"repeats", co.repeats},
                    {"deterministic", co.deterministic}};
      ordered_json per_seed = ordered_json::array();
      for (const auto& r : res.runs) {
        per_seed.push_back({{"seed", r.seed},
                            {"mean_error", r.mean_error},
                            {"sd_error", r.sd_error},
                            {"anchors_used", r.anchors_used}});
        rep.traces.emplace_back("loss_seed" + std::to_string(r.seed) + ".csv",
                                csv_of_trace(r.trace));
      }
      rep.metrics = {{"train_rows", res.train_rows},
                     {"test_rows", res.test_rows},
                     {"per_seed", per_seed},
                     {"median_mean_error", res.median_mean_error},
                     {"median_sd_error", res.median_sd_error}};
      std::printf("concrete: median mean_error %.4f, median sd_error %.4f\n",
                  res.median_mean_error, res.median_sd_error);
      finish_report(rep, ccf, start);
    } else if (*ode) {
      auto res = run_ode(oo);
      OdeExperimentConfig cfg;
      cfg.steps = oo.m;
      cfg.init_sd = oo.init_sd;
      cfg.latent_halfwidth = oo.sigma_u;
      cfg.trajectories = oo.trajectories;
      ExperimentReport rep;
      rep.experiment = "ode";
      rep.config = {{"a", oo.init_sd},
                    {"sigma_u", oo.sigma_u},
                    {"m", oo.m},
                    {"trajectories", oo.trajectories},
                    {"width", oo.width},
                    {"depth", oo.depth},
                    {"resnet", oo.resnet},
                    {"delta", oo.delta},
                    {"delta0", oo.delta0},
                    {"epochs", oo.epochs},
                    {"lr", oo.lr},
                    {"weight_decay", oo.weight_decay},
                    {"seed", oo.seed},
                    {"repeats", oo.repeats},
                    {"g_budget", oo.g_budget}};
      ordered_json per_seed = ordered_json::array();
      for (const auto& r : res.runs) {
        double worst_slice = 0;
        for (double v : r.per_slice_normalized) worst_slice = std::max(worst_slice, v);
        ordered_json entry = {{"seed", r.seed},
                              {"error_in_yhat", r.error_in_yhat},
                              {"max_per_slice_normalized", worst_slice}};
        if (r.error_in_ghat) entry["error_in_ghat"] = *r.error_in_ghat;
        per_seed.push_back(entry);
        const std::string tag = "_seed" + std::to_string(r.seed);
        rep.traces.emplace_back("loss" + tag + ".csv", csv_of_trace(r.trace));
        rep.traces.emplace_back("per_slice" + tag + ".csv",
                                csv_of_slices(r.per_slice_normalized, cfg.horizon));
        rep.traces.emplace_back("truth_test" + tag + ".csv",
                                csv_of_trajectories(r.truth_test, cfg));
        rep.traces.emplace_back("model_test" + tag + ".csv",
                                csv_of_trajectories(r.model_test, cfg));
      }
      rep.metrics = {{"per_seed", per_seed},
                     {"median_error_in_yhat", res.median_error_in_yhat}};
      std::printf("ode: median error_in_yhat %.4f (%d runs)\n", res.median_error_in_yhat,
                  oo.repeats);
      finish_report(rep, ocf, start);
    } else if (*verify) {
      int failures = verify_suite(suite, inject_fault);
      return failures == 0 ? 0 : 2;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
