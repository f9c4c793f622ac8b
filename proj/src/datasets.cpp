#include "lw2/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lw2 {

void SampleSet::validate() const {
  if (inputs.size() != outputs.size()) fail_arg("SampleSet: input/output length mismatch");
  if (inputs.empty()) fail_arg("SampleSet: empty");
  const size_t n = inputs.front().size(), d = outputs.front().size();
  for (const auto& x : inputs) {
    if (x.size() != n) fail_arg("SampleSet: ragged inputs");
    if (!all_finite(x)) fail_arg("SampleSet: non-finite input");
  }
  for (const auto& y : outputs) {
    if (y.size() != d) fail_arg("SampleSet: ragged outputs");
    if (!all_finite(y)) fail_arg("SampleSet: non-finite output");
  }
}

Matrix SampleSet::output_matrix() const {
  Matrix m(size(), output_dim());
  for (int i = 0; i < size(); ++i)
    for (int c = 0; c < output_dim(); ++c) m.at(i, c) = outputs[i][c];
  return m;
}

std::vector<double> SampleSet::output_column() const {
  if (output_dim() != 1) fail_arg("SampleSet: output is not scalar");
  std::vector<double> v(size());
  for (int i = 0; i < size(); ++i) v[i] = outputs[i][0];
  return v;
}

ScalarLaw ScalarLaw::uniform(double a, double b) {
  if (!(a <= b)) fail_arg("uniform law: a must be <= b");
  return {Kind::Uniform, a, b};
}
ScalarLaw ScalarLaw::normal(double mean, double sd) {
  if (sd < 0) fail_arg("normal law: sd must be >= 0");
  return {Kind::Normal, mean, sd};
}
ScalarLaw ScalarLaw::exponential(double rate) {
  if (rate <= 0) fail_arg("exponential law: rate must be > 0");
  return {Kind::Exponential, rate, 0};
}
ScalarLaw ScalarLaw::beta(double alpha, double beta) {
  if (alpha <= 0 || beta <= 0) fail_arg("beta law: parameters must be > 0");
  return {Kind::Beta, alpha, beta};
}

double ScalarLaw::draw(Rng& rng) const {
  switch (kind) {
    case Kind::Uniform: return rng.uniform(p1, p2);
    case Kind::Normal: return rng.normal(p1, p2);
    case Kind::Exponential: return rng.exponential(p1);
    case Kind::Beta: return rng.beta(p1, p2);
  }
  fail("unreachable");
}

std::vector<std::vector<double>> sample_inputs(const std::vector<ScalarLaw>& laws, int count,
                                               Rng& rng) {
  if (count < 1) fail_arg("sample_inputs: count must be >= 1");
  if (laws.empty()) fail_arg("sample_inputs: no laws");
  std::vector<std::vector<double>> xs(count);
  for (auto& x : xs) {
    x.reserve(laws.size());
    for (const auto& law : laws) x.push_back(law.draw(rng));
  }
  return xs;
}

std::vector<double> cholesky_factor(const std::vector<double>& sym, int n) {
  if (static_cast<int>(sym.size()) != n * n) fail_arg("cholesky_factor: bad size");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(sym[i * n + j] - sym[j * n + i]) > 1e-12 * (1.0 + std::abs(sym[i * n + j])))
        fail_arg("cholesky_factor: matrix not symmetric");
  std::vector<double> L(n * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = sym[i * n + j];
      for (int k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      if (i == j) {
        if (s <= 0) fail_arg("cholesky_factor: matrix not positive definite");
        L[i * n + i] = std::sqrt(s);
      } else {
        L[i * n + j] = s / L[j * n + j];
      }
    }
  }
  return L;
}

SampleSet sample_ground_truth(const GroundTruthSpec& spec,
                              const std::vector<std::vector<double>>& inputs, Rng& rng) {
  if (inputs.empty()) fail_arg("sample_ground_truth: no inputs");
  SampleSet s;
  s.inputs = inputs;
  s.outputs.reserve(inputs.size());
  if (const auto* lg = std::get_if<LinearGaussianParams>(&spec)) {
    lg->validate();
    const int n = lg->n();
    for (const auto& x : inputs) {
      if (static_cast<int>(x.size()) != n) fail_arg("sample_ground_truth: input dim mismatch");
      double y = lg->mean[0] + std::abs(lg->spread_raw[0]) * rng.normal();
      for (int i = 1; i <= n; ++i)
        y += (lg->mean[i] + std::abs(lg->spread_raw[i]) * rng.normal()) * x[i - 1];
      s.outputs.push_back({y});
    }
    s.provenance = "linear-gaussian";
  } else {
    const auto& ne = std::get<NonlinearExpTruth>(spec);
    std::vector<double> cov{ne.cov[0][0], ne.cov[0][1], ne.cov[1][0], ne.cov[1][1]};
    std::vector<double> L = cholesky_factor(cov, 2);
    for (const auto& x : inputs) {
      if (x.size() != 1) fail_arg("sample_ground_truth: the saturation model is scalar");
      double z1 = rng.normal(), z2 = rng.normal();
      double w1 = ne.mean[0] + L[0] * z1;
      double w2 = ne.mean[1] + L[2] * z1 + L[3] * z2;
      s.outputs.push_back({w1 * (1.0 - std::exp(-w2 * x[0])) + 5.0});
    }
    s.provenance = "nonlinear-exp";
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& cell, int row, const std::string& column) {
  const std::string t = trim(cell);
  if (t.empty())
    fail_arg("load_csv: empty cell at row " + std::to_string(row) + ", column " + column);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v))
    fail_arg("load_csv: cannot parse '" + t + "' at row " + std::to_string(row) + ", column " +
             column);
  return v;
}

}  // namespace

SampleSet load_csv(const std::string& path, const std::vector<std::string>& input_columns,
                   const std::string& output_column) {
  std::ifstream in(path);
  if (!in) fail_arg("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail_arg("load_csv: empty file " + path);
  auto header = split_line(line);
  auto find_col = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    fail_arg("load_csv: missing column '" + name + "' in " + path);
  };
  std::vector<int> in_idx;
  for (const auto& c : input_columns) in_idx.push_back(find_col(c));
  int out_idx = find_col(output_column);

  SampleSet s;
  s.provenance = path;
  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto cells = split_line(line);
    if (cells.size() < header.size())
      fail_arg("load_csv: short row " + std::to_string(row) + " in " + path);
    std::vector<double> x;
    x.reserve(in_idx.size());
    for (size_t i = 0; i < in_idx.size(); ++i)
      x.push_back(parse_cell(cells[in_idx[i]], row, input_columns[i]));
    s.inputs.push_back(std::move(x));
    s.outputs.push_back({parse_cell(cells[out_idx], row, output_column)});
  }
  if (s.inputs.empty()) fail_arg("load_csv: no data rows in " + path);
  s.validate();
  return s;
}

void write_csv(const SampleSet& data, const std::string& path,
               const std::vector<std::string>& input_columns,
               const std::string& output_column) {
  data.validate();
  if (static_cast<int>(input_columns.size()) != data.input_dim() || data.output_dim() != 1)
    fail_arg("write_csv: column names do not match the data");
  std::ofstream out(path);
  if (!out) fail_arg("write_csv: cannot open " + path);
  for (size_t i = 0; i < input_columns.size(); ++i) out << input_columns[i] << ',';
  out << output_column << '\n';
  char buf[64];
  for (int r = 0; r < data.size(); ++r) {
    for (double v : data.inputs[r]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", data.outputs[r][0]);
    out << buf << '\n';
  }
  if (!out) fail("write_csv: write failed for " + path);
}

std::vector<double> Scaler::apply(const std::vector<double>& x) const {
  if (x.size() != mean.size()) fail_arg("Scaler: dimension mismatch");
  std::vector<double> z(x.size());
  for (size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / sd[i];
  return z;
}

std::vector<double> Scaler::invert(const std::vector<double>& z) const {
  if (z.size() != mean.size()) fail_arg("Scaler: dimension mismatch");
  std::vector<double> x(z.size());
  for (size_t i = 0; i < z.size(); ++i) x[i] = z[i] * sd[i] + mean[i];
  return x;
}

SplitResult split_and_standardize(const SampleSet& data) {
  data.validate();
  const int N = data.size();
  if (N < 3) fail_arg("split_and_standardize: need at least 3 rows");
  const int ntrain = (2 * N) / 3;
  const int n = data.input_dim();

  SplitResult r;
  r.scaler.mean.assign(n, 0.0);
  r.scaler.sd.assign(n, 0.0);
  for (int i = 0; i < ntrain; ++i)
    for (int c = 0; c < n; ++c) r.scaler.mean[c] += data.inputs[i][c];
  for (int c = 0; c < n; ++c) r.scaler.mean[c] /= ntrain;
  for (int i = 0; i < ntrain; ++i)
    for (int c = 0; c < n; ++c) r.scaler.sd[c] += sq(data.inputs[i][c] - r.scaler.mean[c]);
  for (int c = 0; c < n; ++c) {
    r.scaler.sd[c] = std::sqrt(r.scaler.sd[c] / ntrain);
    if (r.scaler.sd[c] == 0) fail_arg("split_and_standardize: constant input column");
  }
  for (int i = 0; i < N; ++i) {
    auto& dst = (i < ntrain) ? r.train : r.test;
    dst.inputs.push_back(r.scaler.apply(data.inputs[i]));
    dst.outputs.push_back(data.outputs[i]);
  }
  r.train.provenance = data.provenance + ":train";
  r.test.provenance = data.provenance + ":test";
  return r;
}

}  // namespace lw2
