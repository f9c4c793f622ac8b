#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lw2/util.hpp"

namespace lw2 {

// Flat, named parameter storage shared by the tape and the optimizer.
struct ParamVector {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> grad;

  int add(std::string name, double value);
  int index_of(std::string_view name) const;  // -1 if absent
  int size() const { return static_cast<int>(values.size()); }
  void zero_grad();
  void validate() const;  // unique names, congruent lengths, finite values
};

void save_params(const ParamVector& p, const std::string& path);
ParamVector load_params(const std::string& path);

enum class Op : uint8_t {
  Leaf, Add, Sub, Mul, Div, Neg, Abs, Relu, Square, Sqrt, Exp, Log, PowConst,
  AddConst, MulConst
};

// Record of a scalar computation. Local derivatives are stored at record time
// so the reverse sweep is a single pass of multiply-accumulates.
class Tape {
 public:
  struct Node {
    double val;
    double pa, pb;  // d val / d parent
    int32_t a, b;   // parent indices, -1 if unused
    double aux;     // constant operand (AddConst/MulConst/PowConst)
    Op op;
  };

  void clear() { nodes_.clear(); }
  void reserve(size_t n) { nodes_.reserve(n); }
  int size() const { return static_cast<int>(nodes_.size()); }
  double val(int i) const { return nodes_[i].val; }
  const Node& node(int i) const { return nodes_[i]; }

  int leaf(double v);
  int add(int x, int y);
  int sub(int x, int y);
  int mul(int x, int y);
  int div(int x, int y);
  int neg(int x);
  int abs(int x);      // derivative 0 at 0
  int relu(int x);     // subgradient 0 at 0
  int square(int x);
  int sqrt(int x);
  int exp(int x);
  int log(int x);
  int pow_const(int x, double p);
  int add_const(int x, double c);
  int mul_const(int x, double c);

  // Reverse sweep from a scalar root; adjoints retrievable until the next
  // backward() or clear().
  void backward(int root);
  double adjoint(int i) const { return adj_[i]; }

  // Recompute every node value from the recorded structure; returns the root
  // value. Bit-identical to the original forward pass.
  double replay(int root);

  // Index of the first non-finite node value, or -1.
  int first_nonfinite() const;

 private:
  int push(Op op, double val, int a, int b, double pa, double pb, double aux = 0.0);
  std::vector<Node> nodes_;
  std::vector<double> adj_;
};

// Value handle; freely copyable, tied to one tape.
struct Var {
  Tape* t = nullptr;
  int i = -1;
  double value() const { return t->val(i); }
};

inline Var make_var(Tape& t, double v) { return {&t, t.leaf(v)}; }

inline Var operator+(Var x, Var y) { return {x.t, x.t->add(x.i, y.i)}; }
inline Var operator-(Var x, Var y) { return {x.t, x.t->sub(x.i, y.i)}; }
inline Var operator*(Var x, Var y) { return {x.t, x.t->mul(x.i, y.i)}; }
inline Var operator/(Var x, Var y) { return {x.t, x.t->div(x.i, y.i)}; }
inline Var operator-(Var x) { return {x.t, x.t->neg(x.i)}; }
inline Var operator+(Var x, double c) { return {x.t, x.t->add_const(x.i, c)}; }
inline Var operator+(double c, Var x) { return x + c; }
inline Var operator-(Var x, double c) { return x + (-c); }
inline Var operator-(double c, Var x) { return (-x) + c; }
inline Var operator*(Var x, double c) { return {x.t, x.t->mul_const(x.i, c)}; }
inline Var operator*(double c, Var x) { return x * c; }
inline Var operator/(Var x, double c) { return x * (1.0 / c); }

inline Var vabs(Var x) { return {x.t, x.t->abs(x.i)}; }
inline Var vrelu(Var x) { return {x.t, x.t->relu(x.i)}; }
inline Var vsquare(Var x) { return {x.t, x.t->square(x.i)}; }
inline Var vsqrt(Var x) { return {x.t, x.t->sqrt(x.i)}; }
inline Var vexp(Var x) { return {x.t, x.t->exp(x.i)}; }
inline Var vlog(Var x) { return {x.t, x.t->log(x.i)}; }
inline Var vpow(Var x, double p) { return {x.t, x.t->pow_const(x.i, p)}; }
Var vsum(std::span<const Var> xs);

// Overload set so model code can be written once for double and Var.
inline double vabs(double x) { return std::abs(x); }
inline double vrelu(double x) { return x > 0 ? x : 0.0; }
inline double vsquare(double x) { return x * x; }

// A scalar program over the parameter vector: parameters arrive as leaves in
// ParamVector order; data and frozen noise live in the closure.
using Program = std::function<Var(Tape&, std::span<const Var>)>;

struct ForwardResult {
  double value = 0;
  int root = -1;
  std::vector<int> param_ids;
  Tape tape;
};

// Runs the program; throws if any intermediate is non-finite (the message
// names the offending node).
ForwardResult forward_eval(const Program& program, const ParamVector& params);

// Reverse sweep; writes d(root)/d(param) into params.grad.
void backward(ForwardResult& fr, ParamVector& params);

struct GradCheckReport {
  double max_rel_err = 0;
  int worst_coord = -1;
  bool pass = false;
  double step = 0, tolerance = 0;
};

// Reverse-mode gradient vs central finite differences, coordinate by
// coordinate. The program must be deterministic (two forward passes are
// compared bitwise before differencing).
GradCheckReport gradient_check(const Program& program, const ParamVector& params,
                               double step, double tolerance);

}  // namespace lw2
