#include "lw2/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lw2 {

void LinearGaussianParams::validate() const {
  if (mean.size() != spread_raw.size() || mean.empty())
    fail_arg("LinearGaussianParams: incongruent sizes");
  if (!all_finite(mean) || !all_finite(spread_raw))
    fail_arg("LinearGaussianParams: non-finite entry");
}

void MlpShape::validate() const {
  if (input_dim <= 0 || output_dim <= 0) fail_arg("MlpShape: dimensions must be positive");
  if (hidden_layers < 0) fail_arg("MlpShape: negative hidden layer count");
  if (hidden_layers > 0 && hidden_width <= 0) fail_arg("MlpShape: hidden width must be positive");
}

MlpLayout MlpLayout::from(const MlpShape& shape) {
  shape.validate();
  MlpLayout lo;
  int in = shape.input_dim;
  int p = 0, e = 0;
  const int maps = shape.hidden_layers + 1;
  for (int l = 0; l < maps; ++l) {
    int out = (l == shape.hidden_layers) ? shape.output_dim : shape.hidden_width;
    Layer layer;
    layer.rows = out;
    layer.cols = in;
    layer.a_off = p;
    layer.s_off = p + out * in;
    layer.b_off = p + 2 * out * in;
    layer.eps_off = e;
    p += 2 * out * in + out;
    e += out * in;
    lo.layers.push_back(layer);
    in = out;
  }
  lo.param_count = p;
  lo.noise_count = e;
  return lo;
}

// ---------------------------------------------------------------------------
// Linear-Gaussian model
// ---------------------------------------------------------------------------

LinearGaussianModel::LinearGaussianModel(int n_inputs) : n_(n_inputs) {
  if (n_ < 1) fail_arg("LinearGaussianModel: need at least one input");
}

ParamVector LinearGaussianModel::init_params(Rng&) const {
  ParamVector p;
  for (int i = 0; i <= n_; ++i) p.add("coef_mean." + std::to_string(i), 1.0);
  for (int i = 0; i <= n_; ++i) p.add("coef_spread." + std::to_string(i), 1.0);
  return p;
}

ParamVector LinearGaussianModel::pack(const LinearGaussianParams& lg) const {
  lg.validate();
  if (lg.n() != n_) fail_arg("LinearGaussianModel::pack: dimension mismatch");
  ParamVector p;
  for (int i = 0; i <= n_; ++i) p.add("coef_mean." + std::to_string(i), lg.mean[i]);
  for (int i = 0; i <= n_; ++i) p.add("coef_spread." + std::to_string(i), lg.spread_raw[i]);
  return p;
}

LinearGaussianParams LinearGaussianModel::unpack(std::span<const double> params) const {
  if (static_cast<int>(params.size()) != param_count())
    fail_arg("LinearGaussianModel::unpack: size mismatch");
  LinearGaussianParams lg;
  lg.mean.assign(params.begin(), params.begin() + n_ + 1);
  lg.spread_raw.assign(params.begin() + n_ + 1, params.end());
  return lg;
}

void LinearGaussianModel::predict(std::span<const double> params, std::span<const double> x,
                                  std::span<const double> eps, std::span<double> y_out) const {
  if (static_cast<int>(x.size()) != n_ || static_cast<int>(eps.size()) != n_ + 1 ||
      y_out.size() != 1 || static_cast<int>(params.size()) != param_count())
    fail_arg("LinearGaussianModel::predict: dimension mismatch");
  const auto mean = params.subspan(0, n_ + 1);
  const auto spread = params.subspan(n_ + 1, n_ + 1);
  double y = mean[0] + std::abs(spread[0]) * eps[0];
  for (int i = 1; i <= n_; ++i) y += (mean[i] + std::abs(spread[i]) * eps[i]) * x[i - 1];
  y_out[0] = y;
}

std::vector<Var> LinearGaussianModel::predict_on_tape(Tape& tape, std::span<const Var> params,
                                                      std::span<const double> x,
                                                      std::span<const double> eps) const {
  (void)tape;  // parameters already carry their tape
  if (static_cast<int>(x.size()) != n_ || static_cast<int>(eps.size()) != n_ + 1 ||
      static_cast<int>(params.size()) != param_count())
    fail_arg("LinearGaussianModel::predict_on_tape: dimension mismatch");
  Var y = params[0] + vabs(params[n_ + 1]) * eps[0];
  for (int i = 1; i <= n_; ++i) y = y + (params[i] + vabs(params[n_ + 1 + i]) * eps[i]) * x[i - 1];
  return {y};
}

// ---------------------------------------------------------------------------
// Stochastic-weight MLP
// ---------------------------------------------------------------------------

StochasticMlpModel::StochasticMlpModel(const MlpShape& shape)
    : shape_(shape), layout_(MlpLayout::from(shape)) {}

ParamVector StochasticMlpModel::init_params(Rng& rng) const {
  ParamVector p;
  const int maps = shape_.hidden_layers + 1;
  for (int l = 0; l < maps; ++l) {
    const auto& lay = layout_.layers[l];
    for (int r = 0; r < lay.rows; ++r)
      for (int c = 0; c < lay.cols; ++c)
        p.add("w_mean." + std::to_string(l) + "." + std::to_string(r) + "." + std::to_string(c),
              rng.normal(0.0, 1e-2));
    for (int r = 0; r < lay.rows; ++r)
      for (int c = 0; c < lay.cols; ++c)
        p.add("w_spread." + std::to_string(l) + "." + std::to_string(r) + "." + std::to_string(c),
              rng.normal(0.0, 1e-2));
    for (int r = 0; r < lay.rows; ++r)
      p.add("bias." + std::to_string(l) + "." + std::to_string(r), rng.normal(0.0, 1e-2));
  }
  return p;
}

namespace {

// One code path for plain values (S = double) and taped values (S = Var).
template <class S>
std::vector<S> mlp_apply(const MlpShape& shape, const MlpLayout& layout,
                         std::span<const S> params, std::span<const double> x,
                         std::span<const double> eps) {
  const int maps = shape.hidden_layers + 1;
  std::vector<S> h;      // current activations (empty until first layer runs)
  std::vector<S> next;
  for (int l = 0; l < maps; ++l) {
    const auto& lay = layout.layers[l];
    const bool output_layer = (l == shape.hidden_layers);
    next.clear();
    next.reserve(lay.rows);
    for (int r = 0; r < lay.rows; ++r) {
      S acc = params[lay.b_off + r];
      for (int c = 0; c < lay.cols; ++c) {
        int w = r * lay.cols + c;
        S wt = params[lay.a_off + w] + vabs(params[lay.s_off + w]) * eps[lay.eps_off + w];
        if (l == 0)
          acc = acc + wt * x[c];
        else
          acc = acc + wt * h[c];
      }
      if (!output_layer) acc = vrelu(acc);
      if (!output_layer && shape.resnet && l > 0) acc = acc + h[r];
      next.push_back(acc);
    }
    h.swap(next);
  }
  return h;
}

}  // namespace

void StochasticMlpModel::predict(std::span<const double> params, std::span<const double> x,
                                 std::span<const double> eps, std::span<double> y_out) const {
  if (static_cast<int>(x.size()) != shape_.input_dim ||
      static_cast<int>(eps.size()) != layout_.noise_count ||
      static_cast<int>(y_out.size()) != shape_.output_dim ||
      static_cast<int>(params.size()) != layout_.param_count)
    fail_arg("StochasticMlpModel::predict: dimension mismatch");
  auto y = mlp_apply<double>(shape_, layout_, params, x, eps);
  std::copy(y.begin(), y.end(), y_out.begin());
}

std::vector<Var> StochasticMlpModel::predict_on_tape(Tape& tape, std::span<const Var> params,
                                                     std::span<const double> x,
                                                     std::span<const double> eps) const {
  (void)tape;
  if (static_cast<int>(x.size()) != shape_.input_dim ||
      static_cast<int>(eps.size()) != layout_.noise_count ||
      static_cast<int>(params.size()) != layout_.param_count)
    fail_arg("StochasticMlpModel::predict_on_tape: dimension mismatch");
  return mlp_apply<Var>(shape_, layout_, params, x, eps);
}

// ---------------------------------------------------------------------------
// Dense sampled weights
// ---------------------------------------------------------------------------

SampledMlp SampledMlp::sample(const MlpShape& shape, std::span<const double> params,
                              std::span<const double> eps) {
  SampledMlp m;
  m.shape = &shape;
  m.layout = MlpLayout::from(shape);
  if (static_cast<int>(params.size()) != m.layout.param_count ||
      static_cast<int>(eps.size()) != m.layout.noise_count)
    fail_arg("SampledMlp::sample: size mismatch");
  for (const auto& lay : m.layout.layers) {
    Matrix W(lay.rows, lay.cols);
    std::vector<double> bias(lay.rows);
    for (int r = 0; r < lay.rows; ++r) {
      for (int c = 0; c < lay.cols; ++c) {
        int w = r * lay.cols + c;
        W.at(r, c) = params[lay.a_off + w] + std::abs(params[lay.s_off + w]) * eps[lay.eps_off + w];
      }
      bias[r] = params[lay.b_off + r];
    }
    m.W.push_back(std::move(W));
    m.b.push_back(std::move(bias));
  }
  return m;
}

void SampledMlp::forward(std::span<const double> x, std::span<double> y) const {
  Cache c;
  forward_cached(x, y, c);
}

void SampledMlp::forward_cached(std::span<const double> x, std::span<double> y, Cache& c) const {
  const int maps = shape->hidden_layers + 1;
  c.input.assign(maps, {});
  c.pre.assign(maps, {});
  std::vector<double> h(x.begin(), x.end());
  for (int l = 0; l < maps; ++l) {
    const Matrix& W = this->W[l];
    const bool output_layer = (l == shape->hidden_layers);
    c.input[l] = h;
    std::vector<double> pre(W.rows);
    for (int r = 0; r < W.rows; ++r) {
      double acc = b[l][r];
      const double* wr = W.row(r);
      for (int cc = 0; cc < W.cols; ++cc) acc += wr[cc] * h[cc];
      pre[r] = acc;
    }
    c.pre[l] = pre;
    std::vector<double> post(W.rows);
    for (int r = 0; r < W.rows; ++r) {
      double v = output_layer ? pre[r] : (pre[r] > 0 ? pre[r] : 0.0);
      if (!output_layer && shape->resnet && l > 0) v += h[r];
      post[r] = v;
    }
    h = std::move(post);
  }
  if (static_cast<int>(y.size()) != static_cast<int>(h.size()))
    fail_arg("SampledMlp::forward: output size mismatch");
  std::copy(h.begin(), h.end(), y.begin());
}

void SampledMlp::vjp(const Cache& c, std::span<const double> ybar, std::span<double> xbar,
                     std::vector<Matrix>& Wbar, std::vector<std::vector<double>>& bbar) const {
  const int maps = shape->hidden_layers + 1;
  std::vector<double> hbar(ybar.begin(), ybar.end());
  for (int l = maps - 1; l >= 0; --l) {
    const Matrix& W = this->W[l];
    const bool output_layer = (l == shape->hidden_layers);
    const auto& pre = c.pre[l];
    const auto& in = c.input[l];
    // adjoint of the pre-activation
    std::vector<double> prebar(W.rows);
    std::vector<double> inbar(W.cols, 0.0);
    for (int r = 0; r < W.rows; ++r) {
      double g = hbar[r];
      prebar[r] = output_layer ? g : (pre[r] > 0 ? g : 0.0);
    }
    // the identity skip feeds the layer input adjoint directly
    if (!output_layer && shape->resnet && l > 0)
      for (int r = 0; r < W.rows; ++r) inbar[r] += hbar[r];
    for (int r = 0; r < W.rows; ++r) {
      double g = prebar[r];
      if (g == 0.0) continue;
      bbar[l][r] += g;
      double* wbr = Wbar[l].row(r);
      const double* wr = W.row(r);
      for (int cc = 0; cc < W.cols; ++cc) {
        wbr[cc] += g * in[cc];
        inbar[cc] += g * wr[cc];
      }
    }
    hbar = std::move(inbar);
  }
  if (static_cast<int>(xbar.size()) != static_cast<int>(hbar.size()))
    fail_arg("SampledMlp::vjp: input adjoint size mismatch");
  std::copy(hbar.begin(), hbar.end(), xbar.begin());
}

std::vector<double> draw_noise(const StochasticModel& model, Rng& rng) {
  std::vector<double> eps(model.noise_dim());
  for (auto& e : eps) e = rng.normal();
  return eps;
}

}  // namespace lw2
