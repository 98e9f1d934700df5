#pragma once

// Minimal reverse-mode differentiation over row-major dense matrices.
//
// A Var is a handle to a graph node. Ops build new nodes that remember their
// parents and a closure propagating the node's gradient back to them. Leaves
// (parameters) persist across steps and accumulate gradients until cleared.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace mdapt::autograd {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Node {
  Matrix<T> value;
  Matrix<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Matrix<T>& grad_buffer() {
    if (grad.size() == 0) grad = Matrix<T>::Zero(value.rows(), value.cols());
    return grad;
  }
  Node& parent(size_t i) { return *parents[i]; }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var leaf(Matrix<T> value, bool requires_grad) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return Var(std::move(node));
  }

  static Var constant(Matrix<T> value) { return leaf(std::move(value), false); }

  const Matrix<T>& value() const { return node_->value; }
  Matrix<T>& mutable_value() { return node_->value; }
  const Matrix<T>& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  void clear_grad() { node_->grad.resize(0, 0); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  T scalar() const { return node_->value(0, 0); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }
  explicit operator bool() const { return node_ != nullptr; }

 private:
  std::shared_ptr<Node<T>> node_;
};

namespace detail {

template <typename T, typename F>
Var<T> make_op(Matrix<T> value, std::initializer_list<Var<T>> parents,
               F&& backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  for (const auto& p : parents) node->requires_grad |= p.requires_grad();
  if (node->requires_grad) {
    for (const auto& p : parents) node->parents.push_back(p.shared());
    node->backward = std::forward<F>(backward);
  }
  return Var<T>(std::move(node));
}

template <typename T>
void check_shape(bool ok, const char* op) {
  if (!ok) throw std::invalid_argument(std::string("autograd: shape mismatch in ") + op);
}

}  // namespace detail

// Runs reverse accumulation from a 1x1 root.
template <typename T>
void backward(const Var<T>& root) {
  detail::check_shape<T>(root.rows() == 1 && root.cols() == 1, "backward");
  if (!root.requires_grad()) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, size_t>> stack{{root.node(), 0}};
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer()(0, 0) += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  detail::check_shape<T>(a.cols() == b.rows(), "matmul");
  return detail::make_op<T>(a.value() * b.value(), {a, b}, [](Node<T>& self) {
    Node<T>& a = self.parent(0);
    Node<T>& b = self.parent(1);
    if (a.requires_grad) a.grad_buffer().noalias() += self.grad * b.value.transpose();
    if (b.requires_grad) b.grad_buffer().noalias() += a.value.transpose() * self.grad;
  });
}

// a * b^T
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
  detail::check_shape<T>(a.cols() == b.cols(), "matmul_nt");
  return detail::make_op<T>(a.value() * b.value().transpose(), {a, b}, [](Node<T>& self) {
    Node<T>& a = self.parent(0);
    Node<T>& b = self.parent(1);
    if (a.requires_grad) a.grad_buffer().noalias() += self.grad * b.value;
    if (b.requires_grad) b.grad_buffer().noalias() += self.grad.transpose() * a.value;
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::check_shape<T>(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  return detail::make_op<T>(a.value() + b.value(), {a, b}, [](Node<T>& self) {
    for (size_t i = 0; i < 2; ++i) {
      Node<T>& p = self.parent(i);
      if (p.requires_grad) p.grad_buffer() += self.grad;
    }
  });
}

// a (n x d) + row (1 x d) broadcast over rows.
template <typename T>
Var<T> add_row(const Var<T>& a, const Var<T>& row) {
  detail::check_shape<T>(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  Matrix<T> out = a.value();
  out.rowwise() += row.value().row(0);
  return detail::make_op<T>(std::move(out), {a, row}, [](Node<T>& self) {
    Node<T>& a = self.parent(0);
    Node<T>& row = self.parent(1);
    if (a.requires_grad) a.grad_buffer() += self.grad;
    if (row.requires_grad) row.grad_buffer() += self.grad.colwise().sum();
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  return detail::make_op<T>(a.value() * s, {a}, [s](Node<T>& self) {
    Node<T>& a = self.parent(0);
    a.grad_buffer() += self.grad * s;
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return detail::make_op<T>(a.value().cwiseMax(T(0)), {a}, [](Node<T>& self) {
    Node<T>& a = self.parent(0);
    a.grad_buffer() += (a.value.array() > T(0)).select(self.grad, T(0));
  });
}

// Exact (erf) GELU.
template <typename T>
Var<T> gelu(const Var<T>& a) {
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  Matrix<T> out = a.value().unaryExpr([inv_sqrt2](T x) {
    return T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2));
  });
  return detail::make_op<T>(std::move(out), {a}, [inv_sqrt2](Node<T>& self) {
    Node<T>& a = self.parent(0);
    const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
    Matrix<T> d = a.value.unaryExpr([&](T x) {
      return T(0.5) * (T(1) + std::erf(x * inv_sqrt2)) +
             x * std::exp(T(-0.5) * x * x) * inv_sqrt_2pi;
    });
    a.grad_buffer() += self.grad.cwiseProduct(d);
  });
}

// Row-wise standardisation without the affine part; exposed for tests.
template <typename T>
Matrix<T> standardize_rows(const Matrix<T>& x, T eps, Eigen::Matrix<T, Eigen::Dynamic, 1>* inv_std = nullptr) {
  Matrix<T> out(x.rows(), x.cols());
  if (inv_std) inv_std->resize(x.rows());
  const T n = static_cast<T>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mean = x.row(r).sum() / n;
    const T var = (x.row(r).array() - mean).square().sum() / n;
    const T istd = T(1) / std::sqrt(var + eps);
    out.row(r) = (x.row(r).array() - mean) * istd;
    if (inv_std) (*inv_std)(r) = istd;
  }
  return out;
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  detail::check_shape<T>(gamma.cols() == x.cols() && beta.cols() == x.cols(), "layer_norm");
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std;
  Matrix<T> xhat = standardize_rows<T>(x.value(), eps, &inv_std);
  Matrix<T> out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  return detail::make_op<T>(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        Node<T>& x = self.parent(0);
        Node<T>& gamma = self.parent(1);
        Node<T>& beta = self.parent(2);
        if (gamma.requires_grad) {
          gamma.grad_buffer() += self.grad.cwiseProduct(xhat).colwise().sum();
        }
        if (beta.requires_grad) beta.grad_buffer() += self.grad.colwise().sum();
        if (x.requires_grad) {
          Matrix<T> g = self.grad;
          g.array().rowwise() *= gamma.value.row(0).array();
          Matrix<T>& dx = x.grad_buffer();
          const T n = static_cast<T>(g.cols());
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const T mean_g = g.row(r).sum() / n;
            const T mean_gx = g.row(r).dot(xhat.row(r)) / n;
            dx.row(r).array() +=
                inv_std(r) * (g.row(r).array() - mean_g - xhat.row(r).array() * mean_gx);
          }
        }
      });
}

// Gathers table rows. ids must be in range.
template <typename T>
Var<T> embedding(const Var<T>& table, std::span<const int32_t> ids) {
  Matrix<T> out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) out.row(i) = table.value().row(ids[i]);
  std::vector<int32_t> rows(ids.begin(), ids.end());
  return detail::make_op<T>(std::move(out), {table}, [rows = std::move(rows)](Node<T>& self) {
    Matrix<T>& dt = self.parent(0).grad_buffer();
    for (size_t i = 0; i < rows.size(); ++i) dt.row(rows[i]) += self.grad.row(i);
  });
}

// First `count` rows of a, as its own node.
template <typename T>
Var<T> top_rows(const Var<T>& a, Eigen::Index count) {
  detail::check_shape<T>(count <= a.rows(), "top_rows");
  return detail::make_op<T>(a.value().topRows(count), {a}, [count](Node<T>& self) {
    self.parent(0).grad_buffer().topRows(count) += self.grad;
  });
}

template <typename T>
Var<T> select_rows(const Var<T>& a, std::span<const size_t> idx) {
  Matrix<T> out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (size_t i = 0; i < idx.size(); ++i) {
    detail::check_shape<T>(static_cast<Eigen::Index>(idx[i]) < a.rows(), "select_rows");
    out.row(i) = a.value().row(idx[i]);
  }
  std::vector<size_t> rows(idx.begin(), idx.end());
  return detail::make_op<T>(std::move(out), {a}, [rows = std::move(rows)](Node<T>& self) {
    Matrix<T>& da = self.parent(0).grad_buffer();
    for (size_t i = 0; i < rows.size(); ++i) da.row(rows[i]) += self.grad.row(i);
  });
}

template <typename T>
Var<T> slice_cols(const Var<T>& a, Eigen::Index start, Eigen::Index count) {
  detail::check_shape<T>(start + count <= a.cols(), "slice_cols");
  return detail::make_op<T>(a.value().middleCols(start, count), {a},
                            [start, count](Node<T>& self) {
                              self.parent(0).grad_buffer().middleCols(start, count) += self.grad;
                            });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::check_shape<T>(p.rows() == parts.front().rows(), "concat_cols");
    cols += p.cols();
  }
  Matrix<T> out(parts.front().rows(), cols);
  Eigen::Index at = 0;
  bool requires_grad = false;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    requires_grad |= p.requires_grad();
  }
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(out);
  node->requires_grad = requires_grad;
  if (requires_grad) {
    for (const auto& p : parts) node->parents.push_back(p.shared());
    node->backward = [](Node<T>& self) {
      Eigen::Index at = 0;
      for (auto& p : self.parents) {
        const Eigen::Index c = p->value.cols();
        if (p->requires_grad) p->grad_buffer() += self.grad.middleCols(at, c);
        at += c;
      }
    };
  }
  return Var<T>(std::move(node));
}

// Row softmax over the columns whose key_valid flag is set; masked columns
// get probability exactly 0.
template <typename T>
Var<T> masked_softmax_rows(const Var<T>& s, const std::vector<bool>& key_valid) {
  detail::check_shape<T>(static_cast<Eigen::Index>(key_valid.size()) == s.cols(),
                         "masked_softmax_rows");
  Matrix<T> p = Matrix<T>::Zero(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    T max = -std::numeric_limits<T>::infinity();
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (key_valid[c]) max = std::max(max, s.value()(r, c));
    }
    T sum = 0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (!key_valid[c]) continue;
      p(r, c) = std::exp(s.value()(r, c) - max);
      sum += p(r, c);
    }
    if (sum > 0) p.row(r) /= sum;
  }
  Matrix<T> saved = p;
  return detail::make_op<T>(std::move(p), {s}, [p = std::move(saved)](Node<T>& self) {
    Matrix<T> gp = self.grad.cwiseProduct(p);
    Eigen::Matrix<T, Eigen::Dynamic, 1> dot = gp.rowwise().sum();
    Matrix<T> ds = gp - p.cwiseProduct(dot.replicate(1, p.cols()));
    self.parent(0).grad_buffer() += ds;
  });
}

// Mean over rows of -log softmax(logits)[target]. Returns 1x1.
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int32_t> targets) {
  detail::check_shape<T>(static_cast<Eigen::Index>(targets.size()) == logits.rows() &&
                             !targets.empty(),
                         "cross_entropy");
  const auto n = logits.rows();
  Matrix<T> probs(n, logits.cols());
  T loss = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const T max = logits.value().row(r).maxCoeff();
    probs.row(r) = (logits.value().row(r).array() - max).exp();
    const T sum = probs.row(r).sum();
    probs.row(r) /= sum;
    loss += (max + std::log(sum)) - logits.value()(r, targets[r]);
  }
  Matrix<T> out(1, 1);
  out(0, 0) = loss / static_cast<T>(n);
  std::vector<int32_t> tgt(targets.begin(), targets.end());
  return detail::make_op<T>(
      std::move(out), {logits},
      [probs = std::move(probs), tgt = std::move(tgt)](Node<T>& self) {
        const T g = self.grad(0, 0) / static_cast<T>(tgt.size());
        Matrix<T>& dl = self.parent(0).grad_buffer();
        dl.noalias() += probs * g;
        for (size_t r = 0; r < tgt.size(); ++r) dl(r, tgt[r]) -= g;
      });
}

// Elementwise multiply by a fixed mask (inverted dropout).
template <typename T>
Var<T> apply_mask(const Var<T>& a, Matrix<T> mask) {
  Matrix<T> out = a.value().cwiseProduct(mask);
  return detail::make_op<T>(std::move(out), {a}, [mask = std::move(mask)](Node<T>& self) {
    self.parent(0).grad_buffer() += self.grad.cwiseProduct(mask);
  });
}

}  // namespace mdapt::autograd
