#include "mdta2g/autograd.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

namespace mdta2g::ad {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

Var make_result(Mat value, std::initializer_list<Var> inputs,
                std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& v : inputs) any = any || v.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& v : inputs) node->parents.push_back(v.node());
      node->backward_fn = std::move(fn);
    }
  }
  return Var(std::move(node));
}

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

void Node::accumulate(const Mat& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void Var::backward(double seed) const {
  if (!node_ || !node_->requires_grad) return;
  if (node_->value.size() != 1) {
    throw std::invalid_argument("backward: root must be a scalar");
  }
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
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
  node_->accumulate(Mat::Constant(1, 1, seed));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
  }
}

Var constant(Mat value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var leaf(Mat value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Mat out = a.value() * b.value();
  return make_result(std::move(out), {a, b}, [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) pa->accumulate(self.grad * pb->value.transpose());
    if (pb->requires_grad) pb->accumulate(pa->value.transpose() * self.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  Mat out = a.value() * b.value().transpose();
  return make_result(std::move(out), {a, b}, [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) pa->accumulate(self.grad * pb->value);
    if (pb->requires_grad) pb->accumulate(self.grad.transpose() * pa->value);
  });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "add");
  return make_result(a.value() + b.value(), {a, b}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
    self.parents[1]->accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "sub");
  return make_result(a.value() - b.value(), {a, b}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->accumulate(-self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "mul");
  Mat out = a.value().cwiseProduct(b.value());
  return make_result(std::move(out), {a, b}, [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) pa->accumulate(self.grad.cwiseProduct(pb->value));
    if (pb->requires_grad) pb->accumulate(self.grad.cwiseProduct(pa->value));
  });
}

Var scale(const Var& a, double s) {
  return make_result(a.value() * s, {a}, [s](Node& self) {
    self.parents[0]->accumulate(self.grad * s);
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: bias shape mismatch");
  }
  Mat out = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(out), {a, row}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) {
      self.parents[1]->accumulate(self.grad.colwise().sum());
    }
  });
}

Var repeat_rows(const Var& row, Eigen::Index n) {
  if (row.rows() != 1) throw std::invalid_argument("repeat_rows: expects a single row");
  Mat out = row.value().replicate(n, 1);
  return make_result(std::move(out), {row}, [](Node& self) {
    self.parents[0]->accumulate(self.grad.colwise().sum());
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  return add_row(matmul(x, weight), bias);
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Eigen::Index n = x.cols();
  if (gamma.cols() != n || beta.cols() != n) {
    throw std::invalid_argument("layer_norm: affine shape mismatch");
  }
  const Mat& xv = x.value();
  Mat xhat(xv.rows(), n);
  Vec inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Mat out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
            beta.value().row(0).array();
  return make_result(std::move(out), {x, gamma, beta},
                     [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
    auto& px = self.parents[0];
    auto& pg = self.parents[1];
    auto& pb = self.parents[2];
    const Mat& g = self.grad;
    if (pg->requires_grad) pg->accumulate(g.cwiseProduct(xhat).colwise().sum());
    if (pb->requires_grad) pb->accumulate(g.colwise().sum());
    if (px->requires_grad) {
      Mat gxhat = g.array().rowwise() * pg->value.row(0).array();
      Mat gx(g.rows(), g.cols());
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double m1 = gxhat.row(r).mean();
        const double m2 = gxhat.row(r).cwiseProduct(xhat.row(r)).mean();
        gx.row(r) = (gxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r);
      }
      px->accumulate(gx);
    }
  });
}

Var gelu(const Var& x) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  Mat out = x.value().unaryExpr(
      [&](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); });
  return make_result(std::move(out), {x}, [inv_sqrt2](Node& self) {
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const Mat& xv = self.parents[0]->value;
    Mat d = xv.unaryExpr([&](double v) {
      return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
    });
    self.parents[0]->accumulate(self.grad.cwiseProduct(d));
  });
}

Var silu(const Var& x) {
  Mat sig = x.value().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  Mat out = x.value().cwiseProduct(sig);
  return make_result(std::move(out), {x}, [sig = std::move(sig)](Node& self) {
    const Mat& xv = self.parents[0]->value;
    Mat d = sig.array() * (1.0 + xv.array() * (1.0 - sig.array()));
    self.parents[0]->accumulate(self.grad.cwiseProduct(d));
  });
}

Var softmax_rows(const Var& x, const Mat& allowed) {
  const bool masked = allowed.size() != 0;
  if (masked) check_same_shape(x.value(), allowed, "softmax_rows");
  const Mat& xv = x.value();
  Mat y = Mat::Zero(xv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Eigen::Index c = 0; c < xv.cols(); ++c) {
      if (!masked || allowed(r, c) != 0.0) mx = std::max(mx, xv(r, c)), any = true;
    }
    if (!any) throw std::invalid_argument("softmax_rows: row has no allowed entry");
    // Non-finite scores propagate as NaN so callers can report them.
    double sum = 0.0;
    for (Eigen::Index c = 0; c < xv.cols(); ++c) {
      if (!masked || allowed(r, c) != 0.0) {
        y(r, c) = std::exp(xv(r, c) - mx);
        sum += y(r, c);
      }
    }
    y.row(r) /= sum;
  }
  Mat y_copy = y;
  return make_result(std::move(y), {x}, [y = std::move(y_copy)](Node& self) {
    const Mat& g = self.grad;
    Vec dot = g.cwiseProduct(y).rowwise().sum();
    Mat gx = y.array() * (g.array().colwise() - dot.array());
    self.parents[0]->accumulate(gx);
  });
}

Var reshape(const Var& a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) throw std::invalid_argument("reshape: element count mismatch");
  Mat out = Eigen::Map<const Mat>(a.value().data(), rows, cols);
  return make_result(std::move(out), {a}, [](Node& self) {
    auto& p = self.parents[0];
    p->accumulate(Eigen::Map<const Mat>(self.grad.data(), p->value.rows(), p->value.cols()));
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index len) {
  if (start < 0 || len < 0 || start + len > a.cols()) {
    throw std::invalid_argument("slice_cols: range out of bounds");
  }
  Mat out = a.value().middleCols(start, len);
  return make_result(std::move(out), {a}, [start, len](Node& self) {
    auto& p = self.parents[0];
    Mat g = Mat::Zero(p->value.rows(), p->value.cols());
    g.middleCols(start, len) = self.grad;
    p->accumulate(g);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Mat out(rows, cols);
  Eigen::Index offset = 0;
  std::vector<Eigen::Index> offsets;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offsets.push_back(offset);
    offset += p.cols();
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(out);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parts) any = any || p.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& p : parts) node->parents.push_back(p.node());
      node->backward_fn = [offsets = std::move(offsets)](Node& self) {
        for (std::size_t i = 0; i < self.parents.size(); ++i) {
          auto& p = self.parents[i];
          if (p->requires_grad) p->accumulate(self.grad.middleCols(offsets[i], p->value.cols()));
        }
      };
    }
  }
  return Var(std::move(node));
}

Var gather_rows(const Var& a, std::span<const int> rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= a.rows()) throw std::invalid_argument("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(k)) = a.value().row(rows[k]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return make_result(std::move(out), {a}, [idx = std::move(idx)](Node& self) {
    auto& p = self.parents[0];
    Mat g = Mat::Zero(p->value.rows(), p->value.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) g.row(idx[k]) += self.grad.row(static_cast<Eigen::Index>(k));
    p->accumulate(g);
  });
}

Var place_rows(const Var& a, std::span<const int> rows, Eigen::Index total) {
  if (static_cast<Eigen::Index>(rows.size()) != a.rows()) {
    throw std::invalid_argument("place_rows: index count must match row count");
  }
  Mat out = Mat::Zero(total, a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= total) throw std::invalid_argument("place_rows: index out of range");
    out.row(rows[k]) = a.value().row(static_cast<Eigen::Index>(k));
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return make_result(std::move(out), {a}, [idx = std::move(idx)](Node& self) {
    auto& p = self.parents[0];
    Mat g(p->value.rows(), p->value.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) g.row(static_cast<Eigen::Index>(k)) = self.grad.row(idx[k]);
    p->accumulate(g);
  });
}

Var select_rows(const Var& a, const Var& b, std::span<const std::uint8_t> pick_b) {
  check_same_shape(a.value(), b.value(), "select_rows");
  if (static_cast<Eigen::Index>(pick_b.size()) != a.rows()) {
    throw std::invalid_argument("select_rows: mask length mismatch");
  }
  Mat out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    if (pick_b[static_cast<std::size_t>(r)]) out.row(r) = b.value().row(r);
  }
  std::vector<std::uint8_t> pick(pick_b.begin(), pick_b.end());
  return make_result(std::move(out), {a, b}, [pick = std::move(pick)](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    Mat ga = self.grad;
    Mat gb = Mat::Zero(self.grad.rows(), self.grad.cols());
    for (Eigen::Index r = 0; r < ga.rows(); ++r) {
      if (pick[static_cast<std::size_t>(r)]) {
        gb.row(r) = ga.row(r);
        ga.row(r).setZero();
      }
    }
    if (pa->requires_grad) pa->accumulate(ga);
    if (pb->requires_grad) pb->accumulate(gb);
  });
}

Var huber_mean(const Var& pred, const Mat& target, double delta) {
  check_same_shape(pred.value(), target, "huber_mean");
  if (!(delta > 0.0)) throw std::invalid_argument("huber_mean: delta must be positive");
  const double n = static_cast<double>(target.size());
  Mat err = target - pred.value();
  double total = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double e = std::abs(err.data()[i]);
    total += e <= delta ? 0.5 * e * e / delta : e - 0.5 * delta;
  }
  return make_result(Mat::Constant(1, 1, total / n), {pred},
                     [err = std::move(err), delta, n](Node& self) {
    const double g = self.grad(0, 0) / n;
    Mat d = err.unaryExpr([&](double e) {
      return std::abs(e) <= delta ? -e / delta : (e > 0.0 ? -1.0 : 1.0);
    });
    self.parents[0]->accumulate(d * g);
  });
}

Var mse_mean(const Var& pred, const Mat& target) {
  check_same_shape(pred.value(), target, "mse_mean");
  const double n = static_cast<double>(target.size());
  Mat diff = pred.value() - target;
  const double loss = diff.squaredNorm() / n;
  return make_result(Mat::Constant(1, 1, loss), {pred}, [diff = std::move(diff), n](Node& self) {
    self.parents[0]->accumulate(diff * (2.0 * self.grad(0, 0) / n));
  });
}

}  // namespace mdta2g::ad
