#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rigkit/core/types.hpp"

namespace rigkit::ad {

using Shape = std::vector<int>;

inline int shape_size(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const std::vector<double>& g);
  std::vector<double>& grad_buffer();
};

/// Value-semantic handle into the dynamically built computation graph.
/// Graphs are rebuilt per evaluation; parameters are leaf tensors whose
/// nodes persist across steps.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor constant(Shape shape, std::vector<double> value);
  static Tensor constant(const Eigen::Vector3d& v);
  static Tensor scalar(double v);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor param(Shape shape, std::vector<double> value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int size() const { return shape_size(node_->shape); }
  int rows() const { return node_->shape.empty() ? 1 : node_->shape[0]; }
  int cols() const { return node_->shape.size() > 1 ? node_->shape[1] : 1; }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& value() const { return node_->value; }
  std::vector<double>& mutable_value() { return node_->value; }
  double item() const;
  const std::vector<double>& grad() const;
  void clear_grad() { node_->grad.clear(); }

  std::shared_ptr<Node> node() const { return node_; }

  /// Same values, no gradient flow.
  Tensor detach() const;

 private:
  std::shared_ptr<Node> node_;
};

/// Reverse pass from a scalar loss: seeds d(loss)/d(loss) = 1, walks the
/// graph in reverse topological order. Gradients accumulate into every
/// node reachable through requires_grad parents.
void backward(const Tensor& loss);

// ---- elementwise with broadcasting ----------------------------------------
// Supported: identical shapes; scalar (size 1) against anything; column
// [N,1] against [N,M]; row [M] or [1,M] against [N,M].
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(const Tensor& a, double b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(const Tensor& a, double b);
Tensor operator/(double a, const Tensor& b);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
/// max(a, c) with zero gradient where a < c.
Tensor clamp_min(const Tensor& a, double c);

// ---- reductions -------------------------------------------------------------
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_rows(const Tensor& a);  // [N,M] -> [N,1]

// ---- linear algebra ---------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int begin, int end);
Tensor slice_cols(const Tensor& a, int begin, int end);
Tensor gather_rows(const Tensor& a, const std::vector<int>& index);

// ---- fused softmax family ---------------------------------------------------
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
/// Mean over rows of -logprob[row, target[row]].
Tensor nll_rows(const Tensor& logprobs, const std::vector<int>& targets);
Tensor layernorm_rows(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// ---- small-vector helpers (shape {3} / {1}) --------------------------------
Tensor dot(const Tensor& a, const Tensor& b);
Tensor cross(const Tensor& a, const Tensor& b);
Tensor norm(const Tensor& a);
double primal(const Tensor& s);

/// Max relative error between reverse-mode gradients of f and central
/// finite differences over every element of every input (h = 1e-4).
/// f must return a scalar tensor; throws RangeError otherwise.
double autodiff_check(const std::function<Tensor(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs, double h = 1e-4);

/// Algebra adapter so the physics simulation core runs on tensors.
struct AdAlgebra {
  using V3 = Tensor;
  using S = Tensor;
  static V3 lift_vec(const Eigen::Vector3d& v) { return Tensor::constant(v); }
  static S lift(double s) { return Tensor::scalar(s); }
};

}  // namespace rigkit::ad
