#include "lw2/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

namespace lw2 {

int ParamVector::add(std::string name, double value) {
  names.push_back(std::move(name));
  values.push_back(value);
  grad.push_back(0.0);
  return static_cast<int>(values.size()) - 1;
}

int ParamVector::index_of(std::string_view name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

void ParamVector::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void ParamVector::validate() const {
  if (names.size() != values.size() || grad.size() != values.size())
    fail("ParamVector: incongruent lengths");
  std::unordered_set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second) fail("ParamVector: duplicate name " + n);
  if (!all_finite(values)) fail("ParamVector: non-finite value");
}

void save_params(const ParamVector& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("save_params: cannot open " + path);
  char buf[64];
  for (int i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", p.values[i]);
    out << p.names[i] << '=' << buf << '\n';
  }
  if (!out) fail("save_params: write failed for " + path);
}

ParamVector load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("load_params: cannot open " + path);
  ParamVector p;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("load_params: missing '=' at line " + std::to_string(lineno));
    size_t used = 0;
    double v = std::stod(line.substr(eq + 1), &used);
    p.add(line.substr(0, eq), v);
  }
  p.validate();
  return p;
}

int Tape::push(Op op, double val, int a, int b, double pa, double pb, double aux) {
  nodes_.push_back(Node{val, pa, pb, a, b, aux, op});
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(double v) { return push(Op::Leaf, v, -1, -1, 0, 0); }
int Tape::add(int x, int y) { return push(Op::Add, nodes_[x].val + nodes_[y].val, x, y, 1, 1); }
int Tape::sub(int x, int y) { return push(Op::Sub, nodes_[x].val - nodes_[y].val, x, y, 1, -1); }
int Tape::mul(int x, int y) {
  return push(Op::Mul, nodes_[x].val * nodes_[y].val, x, y, nodes_[y].val, nodes_[x].val);
}
int Tape::div(int x, int y) {
  double vy = nodes_[y].val;
  return push(Op::Div, nodes_[x].val / vy, x, y, 1.0 / vy, -nodes_[x].val / (vy * vy));
}
int Tape::neg(int x) { return push(Op::Neg, -nodes_[x].val, x, -1, -1, 0); }
int Tape::abs(int x) {
  double v = nodes_[x].val;
  double d = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
  return push(Op::Abs, std::abs(v), x, -1, d, 0);
}
int Tape::relu(int x) {
  double v = nodes_[x].val;
  return push(Op::Relu, v > 0 ? v : 0.0, x, -1, v > 0 ? 1.0 : 0.0, 0);
}
int Tape::square(int x) {
  double v = nodes_[x].val;
  return push(Op::Square, v * v, x, -1, 2.0 * v, 0);
}
int Tape::sqrt(int x) {
  double s = std::sqrt(nodes_[x].val);
  return push(Op::Sqrt, s, x, -1, 0.5 / s, 0);
}
int Tape::exp(int x) {
  double e = std::exp(nodes_[x].val);
  return push(Op::Exp, e, x, -1, e, 0);
}
int Tape::log(int x) {
  double v = nodes_[x].val;
  return push(Op::Log, std::log(v), x, -1, 1.0 / v, 0);
}
int Tape::pow_const(int x, double p) {
  double v = nodes_[x].val;
  return push(Op::PowConst, std::pow(v, p), x, -1, p * std::pow(v, p - 1.0), 0, p);
}
int Tape::add_const(int x, double c) { return push(Op::AddConst, nodes_[x].val + c, x, -1, 1, 0, c); }
int Tape::mul_const(int x, double c) { return push(Op::MulConst, nodes_[x].val * c, x, -1, c, 0, c); }

void Tape::backward(int root) {
  if (root < 0 || root >= size()) fail_arg("Tape::backward: bad root");
  adj_.assign(nodes_.size(), 0.0);
  adj_[root] = 1.0;
  for (int i = root; i >= 0; --i) {
    double g = adj_[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.a >= 0) adj_[n.a] += n.pa * g;
    if (n.b >= 0) adj_[n.b] += n.pb * g;
  }
}

double Tape::replay(int root) {
  for (auto& n : nodes_) {
    switch (n.op) {
      case Op::Leaf: break;
      case Op::Add: n.val = nodes_[n.a].val + nodes_[n.b].val; break;
      case Op::Sub: n.val = nodes_[n.a].val - nodes_[n.b].val; break;
      case Op::Mul: n.val = nodes_[n.a].val * nodes_[n.b].val; break;
      case Op::Div: n.val = nodes_[n.a].val / nodes_[n.b].val; break;
      case Op::Neg: n.val = -nodes_[n.a].val; break;
      case Op::Abs: n.val = std::abs(nodes_[n.a].val); break;
      case Op::Relu: n.val = nodes_[n.a].val > 0 ? nodes_[n.a].val : 0.0; break;
      case Op::Square: n.val = nodes_[n.a].val * nodes_[n.a].val; break;
      case Op::Sqrt: n.val = std::sqrt(nodes_[n.a].val); break;
      case Op::Exp: n.val = std::exp(nodes_[n.a].val); break;
      case Op::Log: n.val = std::log(nodes_[n.a].val); break;
      case Op::PowConst: n.val = std::pow(nodes_[n.a].val, n.aux); break;
      case Op::AddConst: n.val = nodes_[n.a].val + n.aux; break;
      case Op::MulConst: n.val = nodes_[n.a].val * n.aux; break;
    }
  }
  return nodes_[root].val;
}

int Tape::first_nonfinite() const {
  for (size_t i = 0; i < nodes_.size(); ++i)
    if (!std::isfinite(nodes_[i].val)) return static_cast<int>(i);
  return -1;
}

Var vsum(std::span<const Var> xs) {
  if (xs.empty()) fail_arg("vsum: empty span");
  Var acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = acc + xs[i];
  return acc;
}

namespace {
const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Abs: return "abs";
    case Op::Relu: return "relu";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::PowConst: return "pow";
    case Op::AddConst: return "add_const";
    case Op::MulConst: return "mul_const";
  }
  return "?";
}
}  // namespace

ForwardResult forward_eval(const Program& program, const ParamVector& params) {
  params.validate();
  ForwardResult fr;
  fr.param_ids.reserve(params.size());
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (int i = 0; i < params.size(); ++i) {
    Var v = make_var(fr.tape, params.values[i]);
    leaves.push_back(v);
    fr.param_ids.push_back(v.i);
  }
  Var root = program(fr.tape, leaves);
  if (root.t != &fr.tape) fail_arg("forward_eval: program returned a Var from another tape");
  fr.root = root.i;
  fr.value = fr.tape.val(fr.root);
  int bad = fr.tape.first_nonfinite();
  if (bad >= 0)
    fail("forward_eval: non-finite value at node " + std::to_string(bad) + " (" +
         op_name(fr.tape.node(bad).op) + ")");
  return fr;
}

void backward(ForwardResult& fr, ParamVector& params) {
  if (static_cast<int>(fr.param_ids.size()) != params.size())
    fail_arg("backward: parameter count mismatch");
  fr.tape.backward(fr.root);
  for (int i = 0; i < params.size(); ++i) params.grad[i] = fr.tape.adjoint(fr.param_ids[i]);
}

GradCheckReport gradient_check(const Program& program, const ParamVector& params,
                               double step, double tolerance) {
  if (step <= 0) fail_arg("gradient_check: step must be > 0");
  ForwardResult fr = forward_eval(program, params);
  ForwardResult fr2 = forward_eval(program, params);
  if (fr.value != fr2.value)
    fail("gradient_check: program is not deterministic (forward passes disagree)");

  ParamVector work = params;
  backward(fr, work);

  GradCheckReport rep;
  rep.step = step;
  rep.tolerance = tolerance;
  ParamVector probe = params;
  for (int i = 0; i < params.size(); ++i) {
    double base = params.values[i];
    probe.values[i] = base + step;
    double fp = forward_eval(program, probe).value;
    probe.values[i] = base - step;
    double fm = forward_eval(program, probe).value;
    probe.values[i] = base;
    double fd = (fp - fm) / (2.0 * step);
    double ad = work.grad[i];
    double denom = std::max({1e-6, std::abs(fd), std::abs(ad)});
    double rel = std::abs(fd - ad) / denom;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_coord = i;
    }
  }
  rep.pass = rep.max_rel_err <= tolerance;
  return rep;
}

}  // namespace lw2
