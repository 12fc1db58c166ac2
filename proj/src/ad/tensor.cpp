#include "rigkit/ad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace rigkit::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value, std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->backward = std::move(backward);
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  return n;
}

}  // namespace

void Node::accumulate(const std::vector<double>& g) {
  auto& buf = grad_buffer();
  for (size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

std::vector<double>& Node::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::constant(Shape shape, std::vector<double> value) {
  if (static_cast<int>(value.size()) != shape_size(shape)) throw RangeError("tensor: value size does not match shape");
  return Tensor(make_node(std::move(shape), std::move(value), {}, nullptr));
}

Tensor Tensor::constant(const Eigen::Vector3d& v) { return constant({3}, {v.x(), v.y(), v.z()}); }

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = make_node(shape, std::vector<double>(static_cast<size_t>(shape_size(shape)), 0.0), {}, nullptr);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::param(Shape shape, std::vector<double> value) {
  auto t = constant(std::move(shape), std::move(value));
  t.node()->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw RangeError("item: tensor is not scalar, shape " + shape_str(shape()));
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  static const std::vector<double> empty;
  return node_->grad.empty() ? empty : node_->grad;
}

Tensor Tensor::detach() const { return constant(node_->shape, node_->value); }

void backward(const Tensor& loss) {
  if (loss.size() != 1) throw RangeError("backward: loss must be scalar");
  // Reverse topological order over grad-requiring subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack{{loss.node().get(), 0}};
  if (!loss.node()->requires_grad) return;
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

// ---- broadcasting ------------------------------------------------------------

namespace {

enum class Cast { Same, Scalar, Col, Row };

struct BroadcastPlan {
  Shape shape;   // output shape
  Cast a = Cast::Same;
  Cast b = Cast::Same;
  int rows = 1, cols = 1;
};

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b) {
  BroadcastPlan p;
  auto dims = [](const Shape& s) { return std::make_pair(s.empty() ? 1 : s[0], s.size() > 1 ? s[1] : 1); };
  if (a == b) {
    p.shape = a;
    auto [r, c] = dims(a);
    p.rows = r;
    p.cols = c;
    return p;
  }
  // A rank-1 vector and a single-row matrix of the same length line up.
  if (shape_size(a) == shape_size(b) && ((a.size() == 1 && b.size() == 2 && b[0] == 1) || (b.size() == 1 && a.size() == 2 && a[0] == 1))) {
    p.shape = a;
    p.rows = 1;
    p.cols = shape_size(a);
    return p;
  }
  if (shape_size(b) == 1) {
    p.shape = a;
    p.b = Cast::Scalar;
    auto [r, c] = dims(a);
    p.rows = r;
    p.cols = c;
    return p;
  }
  if (shape_size(a) == 1) {
    p.shape = b;
    p.a = Cast::Scalar;
    auto [r, c] = dims(b);
    p.rows = r;
    p.cols = c;
    return p;
  }
  auto [ar, ac] = dims(a);
  auto [br, bc] = dims(b);
  if (a.size() == 2 && ar > 1 && ac > 1) {
    p.shape = a;
    p.rows = ar;
    p.cols = ac;
    if (br == ar && bc == 1) {
      p.b = Cast::Col;
      return p;
    }
    if ((b.size() == 1 && b[0] == ac) || (br == 1 && bc == ac)) {
      p.b = Cast::Row;
      return p;
    }
  }
  if (b.size() == 2 && br > 1 && bc > 1) {
    p.shape = b;
    p.rows = br;
    p.cols = bc;
    if (ar == br && ac == 1) {
      p.a = Cast::Col;
      return p;
    }
    if ((a.size() == 1 && a[0] == bc) || (ar == 1 && ac == bc)) {
      p.a = Cast::Row;
      return p;
    }
  }
  throw RangeError("broadcast: incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

size_t cast_index(Cast c, size_t i, int cols) {
  switch (c) {
    case Cast::Same: return i;
    case Cast::Scalar: return 0;
    case Cast::Col: return i / static_cast<size_t>(cols);
    case Cast::Row: return i % static_cast<size_t>(cols);
  }
  return i;
}

template <class F, class DA, class DB>
Tensor binary_op(const Tensor& a, const Tensor& b, F f, DA dfda, DB dfdb) {
  BroadcastPlan p = plan_broadcast(a.shape(), b.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(static_cast<size_t>(shape_size(p.shape)));
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = f(av[cast_index(p.a, i, p.cols)], bv[cast_index(p.b, i, p.cols)]);
  }
  auto backward = [p, dfda, dfdb](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    const auto& g = self.grad;
    if (self.parents[0]->requires_grad) {
      auto& ga = self.parents[0]->grad_buffer();
      for (size_t i = 0; i < g.size(); ++i) {
        const size_t ia = cast_index(p.a, i, p.cols);
        ga[ia] += dfda(av[ia], bv[cast_index(p.b, i, p.cols)]) * g[i];
      }
    }
    if (self.parents[1]->requires_grad) {
      auto& gb = self.parents[1]->grad_buffer();
      for (size_t i = 0; i < g.size(); ++i) {
        const size_t ib = cast_index(p.b, i, p.cols);
        gb[ib] += dfdb(av[cast_index(p.a, i, p.cols)], bv[ib]) * g[i];
      }
    }
  };
  return Tensor(make_node(p.shape, std::move(out), {a.node(), b.node()}, backward));
}

template <class F, class DF>
Tensor unary_op(const Tensor& a, F f, DF dfdx) {
  std::vector<double> out(a.value().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.value()[i]);
  auto backward = [dfdx](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& ga = self.parents[0]->grad_buffer();
    const auto& x = self.parents[0]->value;
    const auto& y = self.value;
    for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += dfdx(x[i], y[i]) * self.grad[i];
  };
  return Tensor(make_node(a.shape(), std::move(out), {a.node()}, backward));
}

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}
Tensor operator-(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}
Tensor operator*(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; }, [](double x, double) { return x; });
}
Tensor operator/(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}
Tensor operator-(const Tensor& a) { return a * -1.0; }
Tensor operator+(const Tensor& a, double b) { return a + Tensor::scalar(b); }
Tensor operator+(double a, const Tensor& b) { return Tensor::scalar(a) + b; }
Tensor operator-(const Tensor& a, double b) { return a - Tensor::scalar(b); }
Tensor operator-(double a, const Tensor& b) { return Tensor::scalar(a) - b; }
Tensor operator*(const Tensor& a, double b) { return a * Tensor::scalar(b); }
Tensor operator*(double a, const Tensor& b) { return Tensor::scalar(a) * b; }
Tensor operator/(const Tensor& a, double b) { return a / Tensor::scalar(b); }
Tensor operator/(double a, const Tensor& b) { return Tensor::scalar(a) / b; }

Tensor exp(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}
Tensor log(const Tensor& a) {
  return unary_op(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}
Tensor sqrt(const Tensor& a) {
  return unary_op(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}
Tensor tanh(const Tensor& a) {
  return unary_op(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}
Tensor sigmoid(const Tensor& a) {
  return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}
Tensor relu(const Tensor& a) {
  return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}
Tensor square(const Tensor& a) {
  return unary_op(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}
Tensor clamp_min(const Tensor& a, double c) {
  return unary_op(a, [c](double x) { return x > c ? x : c; }, [c](double x, double) { return x > c ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  auto backward = [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& ga = self.parents[0]->grad_buffer();
    for (double& g : ga) g += self.grad[0];
  };
  return Tensor(make_node({1}, {s}, {a.node()}, backward));
}

Tensor mean(const Tensor& a) { return sum(a) / static_cast<double>(a.size()); }

Tensor sum_rows(const Tensor& a) {
  const int r = a.rows();
  const int c = a.cols();
  std::vector<double> out(static_cast<size_t>(r), 0.0);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(i)] += a.value()[static_cast<size_t>(i * c + j)];
  }
  auto backward = [c](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& ga = self.parents[0]->grad_buffer();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      for (int j = 0; j < c; ++j) ga[i * static_cast<size_t>(c) + static_cast<size_t>(j)] += self.grad[i];
    }
  };
  return Tensor(make_node({r, 1}, std::move(out), {a.node()}, backward));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows()) {
    throw RangeError("matmul: shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(static_cast<size_t>(m) * static_cast<size_t>(n));
  {
    ConstMapMat ma(a.value().data(), m, k);
    ConstMapMat mb(b.value().data(), k, n);
    MapMat mo(out.data(), m, n);
    mo.noalias() = ma * mb;
  }
  auto backward = [m, k, n](Node& self) {
    ConstMapMat g(self.grad.data(), m, n);
    if (self.parents[0]->requires_grad) {
      ConstMapMat mb(self.parents[1]->value.data(), k, n);
      MapMat ga(self.parents[0]->grad_buffer().data(), m, k);
      ga.noalias() += g * mb.transpose();
    }
    if (self.parents[1]->requires_grad) {
      ConstMapMat ma(self.parents[0]->value.data(), m, k);
      MapMat gb(self.parents[1]->grad_buffer().data(), k, n);
      gb.noalias() += ma.transpose() * g;
    }
  };
  return Tensor(make_node({m, n}, std::move(out), {a.node(), b.node()}, backward));
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2) throw RangeError("transpose: expected rank 2");
  const int r = a.rows(), c = a.cols();
  std::vector<double> out(a.value().size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(j * r + i)] = a.value()[static_cast<size_t>(i * c + j)];
  auto backward = [r, c](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& ga = self.parents[0]->grad_buffer();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) ga[static_cast<size_t>(i * c + j)] += self.grad[static_cast<size_t>(j * r + i)];
  };
  return Tensor(make_node({c, r}, std::move(out), {a.node()}, backward));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) throw RangeError("reshape: element count mismatch");
  auto backward = [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    self.parents[0]->accumulate(self.grad);
  };
  return Tensor(make_node(std::move(shape), a.value(), {a.node()}, backward));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw RangeError("concat_cols: empty");
  const int r = parts[0].rows();
  int total = 0;
  std::vector<std::shared_ptr<Node>> par;
  std::vector<int> widths;
  for (const auto& t : parts) {
    if (t.rows() != r) throw RangeError("concat_cols: row mismatch");
    widths.push_back(t.cols());
    total += t.cols();
    par.push_back(t.node());
  }
  std::vector<double> out(static_cast<size_t>(r) * static_cast<size_t>(total));
  int off = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    const int c = widths[p];
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) out[static_cast<size_t>(i * total + off + j)] = parts[p].value()[static_cast<size_t>(i * c + j)];
    off += c;
  }
  auto backward = [r, total, widths](Node& self) {
    int off = 0;
    for (size_t p = 0; p < self.parents.size(); ++p) {
      const int c = widths[p];
      if (self.parents[p]->requires_grad) {
        auto& g = self.parents[p]->grad_buffer();
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) g[static_cast<size_t>(i * c + j)] += self.grad[static_cast<size_t>(i * total + off + j)];
      }
      off += c;
    }
  };
  return Tensor(make_node({r, total}, std::move(out), std::move(par), backward));
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw RangeError("concat_rows: empty");
  const int c = parts[0].cols();
  int total = 0;
  std::vector<std::shared_ptr<Node>> par;
  std::vector<int> heights;
  for (const auto& t : parts) {
    if (t.cols() != c) throw RangeError("concat_rows: column mismatch");
    heights.push_back(t.rows());
    total += t.rows();
    par.push_back(t.node());
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(total) * static_cast<size_t>(c));
  for (const auto& t : parts) out.insert(out.end(), t.value().begin(), t.value().end());
  auto backward = [c, heights](Node& self) {
    size_t off = 0;
    for (size_t p = 0; p < self.parents.size(); ++p) {
      const size_t len = static_cast<size_t>(heights[p]) * static_cast<size_t>(c);
      if (self.parents[p]->requires_grad) {
        auto& g = self.parents[p]->grad_buffer();
        for (size_t i = 0; i < len; ++i) g[i] += self.grad[off + i];
      }
      off += len;
    }
  };
  return Tensor(make_node({total, c}, std::move(out), std::move(par), backward));
}

Tensor slice_rows(const Tensor& a, int begin, int end) {
  if (begin < 0 || end > a.rows() || begin >= end) throw RangeError("slice_rows: bad range");
  const int c = a.cols();
  std::vector<double> out(a.value().begin() + static_cast<long>(begin) * c, a.value().begin() + static_cast<long>(end) * c);
  auto backward = [begin, c](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& g = self.parents[0]->grad_buffer();
    for (size_t i = 0; i < self.grad.size(); ++i) g[static_cast<size_t>(begin) * static_cast<size_t>(c) + i] += self.grad[i];
  };
  Shape shape = a.shape();
  shape[0] = end - begin;
  return Tensor(make_node(std::move(shape), std::move(out), {a.node()}, backward));
}

Tensor slice_cols(const Tensor& a, int begin, int end) {
  if (a.shape().size() != 2 || begin < 0 || end > a.cols() || begin >= end) throw RangeError("slice_cols: bad range");
  const int r = a.rows(), c = a.cols(), w = end - begin;
  std::vector<double> out(static_cast<size_t>(r) * static_cast<size_t>(w));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < w; ++j) out[static_cast<size_t>(i * w + j)] = a.value()[static_cast<size_t>(i * c + begin + j)];
  auto backward = [r, c, w, begin](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& g = self.parents[0]->grad_buffer();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j) g[static_cast<size_t>(i * c + begin + j)] += self.grad[static_cast<size_t>(i * w + j)];
  };
  return Tensor(make_node({r, w}, std::move(out), {a.node()}, backward));
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& index) {
  const int c = a.cols();
  for (int i : index) {
    if (i < 0 || i >= a.rows()) throw RangeError("gather_rows: index " + std::to_string(i) + " out of range");
  }
  std::vector<double> out(index.size() * static_cast<size_t>(c));
  for (size_t r = 0; r < index.size(); ++r) {
    for (int j = 0; j < c; ++j) out[r * static_cast<size_t>(c) + static_cast<size_t>(j)] = a.value()[static_cast<size_t>(index[r] * c + j)];
  }
  auto backward = [index, c](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& g = self.parents[0]->grad_buffer();
    for (size_t r = 0; r < index.size(); ++r) {
      for (int j = 0; j < c; ++j) g[static_cast<size_t>(index[r] * c + j)] += self.grad[r * static_cast<size_t>(c) + static_cast<size_t>(j)];
    }
  };
  return Tensor(make_node({static_cast<int>(index.size()), c}, std::move(out), {a.node()}, backward));
}

Tensor softmax_rows(const Tensor& a) {
  const int r = a.rows(), c = a.cols();
  std::vector<double> out(a.value().size());
  for (int i = 0; i < r; ++i) {
    double mx = -1e300;
    for (int j = 0; j < c; ++j) mx = std::max(mx, a.value()[static_cast<size_t>(i * c + j)]);
    double denom = 0.0;
    for (int j = 0; j < c; ++j) {
      const double e = std::exp(a.value()[static_cast<size_t>(i * c + j)] - mx);
      out[static_cast<size_t>(i * c + j)] = e;
      denom += e;
    }
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(i * c + j)] /= denom;
  }
  auto backward = [r, c](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& ga = self.parents[0]->grad_buffer();
    for (int i = 0; i < r; ++i) {
      double dotgy = 0.0;
      for (int j = 0; j < c; ++j) dotgy += self.grad[static_cast<size_t>(i * c + j)] * self.value[static_cast<size_t>(i * c + j)];
      for (int j = 0; j < c; ++j) {
        const size_t k = static_cast<size_t>(i * c + j);
        ga[k] += self.value[k] * (self.grad[k] - dotgy);
      }
    }
  };
  return Tensor(make_node(a.shape(), std::move(out), {a.node()}, backward));
}

Tensor log_softmax_rows(const Tensor& a) {
  const int r = a.rows(), c = a.cols();
  std::vector<double> out(a.value().size());
  for (int i = 0; i < r; ++i) {
    double mx = -1e300;
    for (int j = 0; j < c; ++j) mx = std::max(mx, a.value()[static_cast<size_t>(i * c + j)]);
    double denom = 0.0;
    for (int j = 0; j < c; ++j) denom += std::exp(a.value()[static_cast<size_t>(i * c + j)] - mx);
    const double lse = mx + std::log(denom);
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(i * c + j)] = a.value()[static_cast<size_t>(i * c + j)] - lse;
  }
  auto backward = [r, c](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& ga = self.parents[0]->grad_buffer();
    for (int i = 0; i < r; ++i) {
      double gsum = 0.0;
      for (int j = 0; j < c; ++j) gsum += self.grad[static_cast<size_t>(i * c + j)];
      for (int j = 0; j < c; ++j) {
        const size_t k = static_cast<size_t>(i * c + j);
        ga[k] += self.grad[k] - std::exp(self.value[k]) * gsum;
      }
    }
  };
  return Tensor(make_node(a.shape(), std::move(out), {a.node()}, backward));
}

Tensor nll_rows(const Tensor& logprobs, const std::vector<int>& targets) {
  const int r = logprobs.rows(), c = logprobs.cols();
  if (static_cast<int>(targets.size()) != r) throw RangeError("nll_rows: one target per row required");
  double loss = 0.0;
  for (int i = 0; i < r; ++i) {
    if (targets[static_cast<size_t>(i)] < 0 || targets[static_cast<size_t>(i)] >= c) {
      throw RangeError("nll_rows: target id " + std::to_string(targets[static_cast<size_t>(i)]) + " outside vocabulary");
    }
    loss -= logprobs.value()[static_cast<size_t>(i * c + targets[static_cast<size_t>(i)])];
  }
  loss /= static_cast<double>(r);
  auto backward = [targets, r, c](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    auto& g = self.parents[0]->grad_buffer();
    for (int i = 0; i < r; ++i) {
      g[static_cast<size_t>(i * c + targets[static_cast<size_t>(i)])] -= self.grad[0] / static_cast<double>(r);
    }
  };
  return Tensor(make_node({1}, {loss}, {logprobs.node()}, backward));
}

Tensor layernorm_rows(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
  const int r = a.rows(), c = a.cols();
  if (gain.size() != c || bias.size() != c) throw RangeError("layernorm_rows: gain/bias must have one entry per column");
  std::vector<double> out(a.value().size());
  std::vector<double> xhat(a.value().size());
  std::vector<double> inv_sigma(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) {
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += a.value()[static_cast<size_t>(i * c + j)];
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = a.value()[static_cast<size_t>(i * c + j)] - mu;
      var += d * d;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma[static_cast<size_t>(i)] = inv;
    for (int j = 0; j < c; ++j) {
      const size_t k = static_cast<size_t>(i * c + j);
      xhat[k] = (a.value()[k] - mu) * inv;
      out[k] = xhat[k] * gain.value()[static_cast<size_t>(j)] + bias.value()[static_cast<size_t>(j)];
    }
  }
  auto backward = [r, c, xhat, inv_sigma](Node& self) {
    const auto& g = self.grad;
    const auto& gainv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      auto& ga = self.parents[0]->grad_buffer();
      for (int i = 0; i < r; ++i) {
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < c; ++j) {
          const size_t k = static_cast<size_t>(i * c + j);
          const double gy = g[k] * gainv[static_cast<size_t>(j)];
          m1 += gy;
          m2 += gy * xhat[k];
        }
        m1 /= c;
        m2 /= c;
        for (int j = 0; j < c; ++j) {
          const size_t k = static_cast<size_t>(i * c + j);
          const double gy = g[k] * gainv[static_cast<size_t>(j)];
          ga[k] += (gy - m1 - xhat[k] * m2) * inv_sigma[static_cast<size_t>(i)];
        }
      }
    }
    if (self.parents[1]->requires_grad) {
      auto& gg = self.parents[1]->grad_buffer();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) gg[static_cast<size_t>(j)] += g[static_cast<size_t>(i * c + j)] * xhat[static_cast<size_t>(i * c + j)];
    }
    if (self.parents[2]->requires_grad) {
      auto& gb = self.parents[2]->grad_buffer();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) gb[static_cast<size_t>(j)] += g[static_cast<size_t>(i * c + j)];
    }
  };
  return Tensor(make_node(a.shape(), std::move(out), {a.node(), gain.node(), bias.node()}, backward));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw RangeError("dot: size mismatch");
  return sum(a * b);
}

Tensor cross(const Tensor& a, const Tensor& b) {
  if (a.size() != 3 || b.size() != 3) throw RangeError("cross: expected 3-vectors");
  const auto& x = a.value();
  const auto& y = b.value();
  std::vector<double> out{x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
  auto backward = [](Node& self) {
    const auto& x = self.parents[0]->value;
    const auto& y = self.parents[1]->value;
    const auto& g = self.grad;
    if (self.parents[0]->requires_grad) {
      auto& ga = self.parents[0]->grad_buffer();
      ga[0] += y[1] * g[2] - y[2] * g[1];
      ga[1] += y[2] * g[0] - y[0] * g[2];
      ga[2] += y[0] * g[1] - y[1] * g[0];
    }
    if (self.parents[1]->requires_grad) {
      auto& gb = self.parents[1]->grad_buffer();
      gb[0] += g[1] * x[2] - g[2] * x[1];
      gb[1] += g[2] * x[0] - g[0] * x[2];
      gb[2] += g[0] * x[1] - g[1] * x[0];
    }
  };
  return Tensor(make_node({3}, std::move(out), {a.node(), b.node()}, backward));
}

Tensor norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value()) s += v * v;
  const double n = std::sqrt(s);
  auto backward = [n](Node& self) {
    if (!self.parents[0]->requires_grad || n == 0.0) return;
    auto& ga = self.parents[0]->grad_buffer();
    const auto& x = self.parents[0]->value;
    for (size_t i = 0; i < x.size(); ++i) ga[i] += self.grad[0] * x[i] / n;
  };
  return Tensor(make_node({1}, {n}, {a.node()}, backward));
}

double primal(const Tensor& s) { return s.item(); }

double autodiff_check(const std::function<Tensor(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs, double h) {
  for (auto& t : inputs) t.clear_grad();
  Tensor loss = f(inputs);
  if (loss.size() != 1) throw RangeError("autodiff_check: f must return a scalar");
  backward(loss);

  double max_rel = 0.0;
  for (auto& t : inputs) {
    std::vector<double> g = t.grad();
    if (g.empty()) g.assign(t.value().size(), 0.0);
    for (size_t k = 0; k < t.value().size(); ++k) {
      const double orig = t.mutable_value()[k];
      t.mutable_value()[k] = orig + h;
      const double up = f(inputs).item();
      t.mutable_value()[k] = orig - h;
      const double dn = f(inputs).item();
      t.mutable_value()[k] = orig;
      const double fd = (up - dn) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(g[k]), 1e-6});
      max_rel = std::max(max_rel, std::abs(fd - g[k]) / denom);
    }
  }
  return max_rel;
}

}  // namespace rigkit::ad
