#pragma once

// Minimal reverse-mode autodiff over dense 64-bit tensors (rank 0..2).
// Graphs are built eagerly; each op node keeps its parents and a backward
// closure only when some input requires gradients, so pure evaluation stays
// graph-free.  backward() topologically sorts the DAG from a scalar loss and
// accumulates into leaf .grad buffers (cleared by ParamStore::zero_grad).
//
// Elementwise binary ops broadcast numpy-style over two axes (a dim must
// match or be 1); that is all the model needs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "hytimbre/errors.hpp"
#include "hytimbre/rng.hpp"
#include "hytimbre/scalar_math.hpp"

namespace hytimbre::ad {

struct Node {
  std::vector<std::size_t> shape;  // declared shape, rank 0..2
  std::size_t rows = 1, cols = 1;  // canonical 2-D view
  std::vector<double> val;
  std::vector<double> grad;  // lazily allocated, same length as val
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // pulls this->grad, pushes into parents

  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  static Tensor from_values(std::vector<double> v, std::vector<std::size_t> shape,
                            bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    std::size_t total = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
      total *= d;
    }
    if (shape.size() > 2) throw std::invalid_argument("Tensor: rank must be <= 2");
    if (total != v.size()) throw std::invalid_argument("Tensor: shape/value size mismatch");
    n->shape = std::move(shape);
    n->rows = n->shape.size() == 2 ? n->shape[0] : 1;
    n->cols = n->shape.empty() ? 1 : n->shape.back();
    if (n->shape.size() == 1) {
      n->rows = 1;
      n->cols = n->shape[0];
    }
    n->val = std::move(v);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false) {
    std::size_t total = 1;
    for (std::size_t d : shape) total *= d;
    return from_values(std::vector<double>(total, 0.0), std::move(shape), requires_grad);
  }

  static Tensor scalar(double v) { return from_values({v}, {}); }

  static Tensor row(std::vector<double> v) {
    std::size_t n = v.size();
    return from_values(std::move(v), {1, n});
  }

  static Tensor matrix(std::vector<double> v, std::size_t r, std::size_t c,
                       bool requires_grad = false) {
    return from_values(std::move(v), {r, c}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(n_); }
  Node* node() const { return n_.get(); }
  const std::shared_ptr<Node>& handle() const { return n_; }

  const std::vector<std::size_t>& shape() const { return n_->shape; }
  std::size_t rows() const { return n_->rows; }
  std::size_t cols() const { return n_->cols; }
  std::size_t size() const { return n_->val.size(); }
  bool requires_grad() const { return n_->requires_grad; }

  const std::vector<double>& value() const { return n_->val; }
  std::vector<double>& mutable_value() { return n_->val; }  // leaves only (FD, optimizers)
  const std::vector<double>& grad() const {
    n_->ensure_grad();
    return n_->grad;
  }

  double operator()(std::size_t r, std::size_t c) const { return n_->val[r * n_->cols + c]; }
  double item() const {
    if (size() != 1) throw std::logic_error("Tensor::item: not a scalar");
    return n_->val[0];
  }

 private:
  std::shared_ptr<Node> n_;
};

namespace detail {

inline std::shared_ptr<Node> make_op(std::size_t rows, std::size_t cols,
                                     std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->shape = rows == 1 ? std::vector<std::size_t>{cols} : std::vector<std::size_t>{rows, cols};
  n->val.resize(rows * cols);
  bool rg = false;
  for (auto& p : parents) rg = rg || p->requires_grad;
  n->requires_grad = rg;
  if (rg) n->parents = std::move(parents);
  return n;
}

// Generic broadcasting elementwise binary op.  fval(a,b) is the value,
// dfa/dfb are the partials d out / d a and d out / d b.
template <typename F, typename Da, typename Db>
Tensor broadcast_binary(const Tensor& a, const Tensor& b, const char* who, F fval, Da dfa, Db dfb) {
  Node* an = a.node();
  Node* bn = b.node();
  const std::size_t ar = an->rows, ac = an->cols, br = bn->rows, bc = bn->cols;
  if (!((ar == br || ar == 1 || br == 1) && (ac == bc || ac == 1 || bc == 1)))
    throw std::invalid_argument(std::string(who) + ": incompatible shapes (" + std::to_string(ar) +
                                "x" + std::to_string(ac) + " vs " + std::to_string(br) + "x" +
                                std::to_string(bc) + ")");
  const std::size_t rr = std::max(ar, br), rc = std::max(ac, bc);
  auto n = make_op(rr, rc, {a.handle(), b.handle()});
  for (std::size_t i = 0; i < rr; ++i) {
    const std::size_t ia = (ar == 1 ? 0 : i), ib = (br == 1 ? 0 : i);
    for (std::size_t j = 0; j < rc; ++j) {
      const std::size_t ja = (ac == 1 ? 0 : j), jb = (bc == 1 ? 0 : j);
      n->val[i * rc + j] = fval(an->val[ia * ac + ja], bn->val[ib * bc + jb]);
    }
  }
  if (n->requires_grad) {
    auto ah = a.handle();
    auto bh = b.handle();
    n->backprop = [ah, bh, ar, ac, br, bc, rr, rc, dfa, dfb](Node& self) {
      const bool ga = ah->requires_grad, gb = bh->requires_grad;
      if (ga) ah->ensure_grad();
      if (gb) bh->ensure_grad();
      for (std::size_t i = 0; i < rr; ++i) {
        const std::size_t ia = (ar == 1 ? 0 : i), ib = (br == 1 ? 0 : i);
        for (std::size_t j = 0; j < rc; ++j) {
          const std::size_t ja = (ac == 1 ? 0 : j), jb = (bc == 1 ? 0 : j);
          const double g = self.grad[i * rc + j];
          const double av = ah->val[ia * ac + ja], bv = bh->val[ib * bc + jb];
          if (ga) ah->grad[ia * ac + ja] += g * dfa(av, bv);
          if (gb) bh->grad[ib * bc + jb] += g * dfb(av, bv);
        }
      }
    };
  }
  return Tensor(std::move(n));
}

// Elementwise unary op with pointwise derivative df(x, y) (y = f(x)).
template <typename F, typename D>
Tensor unary(const Tensor& a, F fval, D dfdx) {
  Node* an = a.node();
  auto n = make_op(an->rows, an->cols, {a.handle()});
  for (std::size_t i = 0; i < an->val.size(); ++i) n->val[i] = fval(an->val[i]);
  if (n->requires_grad) {
    auto ah = a.handle();
    n->backprop = [ah, dfdx](Node& self) {
      ah->ensure_grad();
      for (std::size_t i = 0; i < self.val.size(); ++i)
        ah->grad[i] += self.grad[i] * dfdx(ah->val[i], self.val[i]);
    };
  }
  return Tensor(std::move(n));
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::broadcast_binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::broadcast_binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::broadcast_binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  return detail::broadcast_binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

inline Tensor scale(const Tensor& a, double c) {
  return detail::unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Tensor add_const(const Tensor& a, double c) {
  return detail::unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

inline Tensor neg(const Tensor& a) { return scale(a, -1.0); }

inline Tensor relu(const Tensor& a) {
  return detail::unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                       [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor softplus(const Tensor& a) {
  return detail::unary(
      a,
      [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) { return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); });
}

inline Tensor tanh(const Tensor& a) {
  return detail::unary(a, [](double x) { return std::tanh(x); },
                       [](double, double y) { return 1.0 - y * y; });
}

inline Tensor exp(const Tensor& a) {
  return detail::unary(a, [](double x) { return std::exp(x); },
                       [](double, double y) { return y; });
}

inline Tensor expm1(const Tensor& a) {
  return detail::unary(a, [](double x) { return std::expm1(x); },
                       [](double, double y) { return y + 1.0; });
}

inline Tensor log(const Tensor& a) {
  for (double x : a.value())
    if (!(x > 0.0)) throw std::domain_error("ad::log: non-positive input");
  return detail::unary(a, [](double x) { return std::log(x); },
                       [](double x, double) { return 1.0 / x; });
}

inline Tensor sqrt(const Tensor& a) {
  for (double x : a.value())
    if (x < 0.0) throw std::domain_error("ad::sqrt: negative input");
  return detail::unary(a, [](double x) { return std::sqrt(x); },
                       [](double, double y) { return 0.5 / y; });
}

inline Tensor cosh(const Tensor& a) {
  return detail::unary(a, [](double x) { return std::cosh(x); },
                       [](double x, double) { return std::sinh(x); });
}

inline Tensor sinh(const Tensor& a) {
  return detail::unary(a, [](double x) { return std::sinh(x); },
                       [](double x, double) { return std::cosh(x); });
}

// acosh(max(x, 1)); gradient 0 in the clamped region.
inline Tensor acosh_clamped(const Tensor& a) {
  return detail::unary(a, [](double x) { return std::acosh(x > 1.0 ? x : 1.0); },
                       [](double x, double) { return x > 1.0 ? 1.0 / std::sqrt(x * x - 1.0) : 0.0; });
}

// Smooth geometry kernels (see scalar_math.hpp).
inline Tensor cosh_sqrt(const Tensor& a) {
  return detail::unary(a, [](double t) { return num::cosh_sqrt(t); },
                       [](double t, double) { return 0.5 * num::sinhc_sqrt(t); });
}

inline Tensor sinhc_sqrt(const Tensor& a) {
  return detail::unary(a, [](double t) { return num::sinhc_sqrt(t); },
                       [](double t, double) { return num::sinhc_sqrt_grad(t); });
}

inline Tensor acosh_sq(const Tensor& a) {
  return detail::unary(a, [](double x) { return num::acosh_sq(x); },
                       [](double x, double) { return num::acosh_sq_grad(x); });
}

inline Tensor acosh_ratio(const Tensor& a) {
  return detail::unary(a, [](double x) { return num::acosh_ratio(x); },
                       [](double x, double) { return num::acosh_ratio_grad(x); });
}

inline Tensor log_sinhc_acosh(const Tensor& a) {
  return detail::unary(a, [](double x) { return num::log_sinhc_acosh(x); },
                       [](double x, double) { return num::log_sinhc_acosh_grad(x); });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  Node* an = a.node();
  Node* bn = b.node();
  if (an->cols != bn->rows)
    throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(an->cols) +
                                " vs " + std::to_string(bn->rows) + ")");
  const std::size_t B = an->rows, M = an->cols, N = bn->cols;
  auto n = detail::make_op(B, N, {a.handle(), b.handle()});
  std::fill(n->val.begin(), n->val.end(), 0.0);
  for (std::size_t i = 0; i < B; ++i) {
    const double* arow = an->val.data() + i * M;
    double* crow = n->val.data() + i * N;
    for (std::size_t k = 0; k < M; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = bn->val.data() + k * N;
      for (std::size_t j = 0; j < N; ++j) crow[j] += av * brow[j];
    }
  }
  if (n->requires_grad) {
    auto ah = a.handle();
    auto bh = b.handle();
    n->backprop = [ah, bh, B, M, N](Node& self) {
      if (ah->requires_grad) {
        ah->ensure_grad();
        // dA[i,k] = sum_j g[i,j] B[k,j]
        for (std::size_t i = 0; i < B; ++i) {
          const double* grow = self.grad.data() + i * N;
          double* darow = ah->grad.data() + i * M;
          for (std::size_t k = 0; k < M; ++k) {
            const double* brow = bh->val.data() + k * N;
            double acc = 0.0;
            for (std::size_t j = 0; j < N; ++j) acc += grow[j] * brow[j];
            darow[k] += acc;
          }
        }
      }
      if (bh->requires_grad) {
        bh->ensure_grad();
        // dB[k,j] = sum_i A[i,k] g[i,j]
        for (std::size_t i = 0; i < B; ++i) {
          const double* arow = ah->val.data() + i * M;
          const double* grow = self.grad.data() + i * N;
          for (std::size_t k = 0; k < M; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            double* dbrow = bh->grad.data() + k * N;
            for (std::size_t j = 0; j < N; ++j) dbrow[j] += av * grow[j];
          }
        }
      }
    };
  }
  return Tensor(std::move(n));
}

inline Tensor transpose(const Tensor& a) {
  Node* an = a.node();
  const std::size_t R = an->rows, C = an->cols;
  auto n = detail::make_op(C, R, {a.handle()});
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) n->val[j * R + i] = an->val[i * C + j];
  if (n->requires_grad) {
    auto ah = a.handle();
    n->backprop = [ah, R, C](Node& self) {
      ah->ensure_grad();
      for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < C; ++j) ah->grad[i * C + j] += self.grad[j * R + i];
    };
  }
  return Tensor(std::move(n));
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  Node* an = a.node();
  Node* bn = b.node();
  if (an->rows != bn->rows) throw std::invalid_argument("concat_cols: row count mismatch");
  const std::size_t B = an->rows, ca = an->cols, cb = bn->cols;
  auto n = detail::make_op(B, ca + cb, {a.handle(), b.handle()});
  for (std::size_t i = 0; i < B; ++i) {
    std::copy_n(an->val.data() + i * ca, ca, n->val.data() + i * (ca + cb));
    std::copy_n(bn->val.data() + i * cb, cb, n->val.data() + i * (ca + cb) + ca);
  }
  if (n->requires_grad) {
    auto ah = a.handle();
    auto bh = b.handle();
    n->backprop = [ah, bh, B, ca, cb](Node& self) {
      if (ah->requires_grad) {
        ah->ensure_grad();
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t j = 0; j < ca; ++j)
            ah->grad[i * ca + j] += self.grad[i * (ca + cb) + j];
      }
      if (bh->requires_grad) {
        bh->ensure_grad();
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t j = 0; j < cb; ++j)
            bh->grad[i * cb + j] += self.grad[i * (ca + cb) + ca + j];
      }
    };
  }
  return Tensor(std::move(n));
}

inline Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
  Node* an = a.node();
  if (start + len > an->cols) throw std::invalid_argument("slice_cols: range out of bounds");
  const std::size_t B = an->rows, C = an->cols;
  auto n = detail::make_op(B, len, {a.handle()});
  for (std::size_t i = 0; i < B; ++i)
    std::copy_n(an->val.data() + i * C + start, len, n->val.data() + i * len);
  if (n->requires_grad) {
    auto ah = a.handle();
    n->backprop = [ah, B, C, start, len](Node& self) {
      ah->ensure_grad();
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < len; ++j)
          ah->grad[i * C + start + j] += self.grad[i * len + j];
    };
  }
  return Tensor(std::move(n));
}

inline Tensor gather_rows(const Tensor& m, const std::vector<int>& idx) {
  Node* mn = m.node();
  const std::size_t R = mn->rows, C = mn->cols;
  for (int i : idx)
    if (i < 0 || static_cast<std::size_t>(i) >= R)
      throw std::invalid_argument("gather_rows: index out of range");
  auto n = detail::make_op(idx.size(), C, {m.handle()});
  for (std::size_t b = 0; b < idx.size(); ++b)
    std::copy_n(mn->val.data() + static_cast<std::size_t>(idx[b]) * C, C, n->val.data() + b * C);
  if (n->requires_grad) {
    auto mh = m.handle();
    auto indices = idx;
    n->backprop = [mh, indices, C](Node& self) {
      mh->ensure_grad();
      for (std::size_t b = 0; b < indices.size(); ++b)
        for (std::size_t j = 0; j < C; ++j)
          mh->grad[static_cast<std::size_t>(indices[b]) * C + j] += self.grad[b * C + j];
    };
  }
  return Tensor(std::move(n));
}

// [B,N] -> [B,1]
inline Tensor sum_rows(const Tensor& a) {
  Node* an = a.node();
  const std::size_t B = an->rows, N = an->cols;
  auto n = detail::make_op(B, 1, {a.handle()});
  for (std::size_t i = 0; i < B; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < N; ++j) acc += an->val[i * N + j];
    n->val[i] = acc;
  }
  if (n->requires_grad) {
    auto ah = a.handle();
    n->backprop = [ah, B, N](Node& self) {
      ah->ensure_grad();
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < N; ++j) ah->grad[i * N + j] += self.grad[i];
    };
  }
  return Tensor(std::move(n));
}

inline Tensor sum_all(const Tensor& a) {
  Node* an = a.node();
  auto n = detail::make_op(1, 1, {a.handle()});
  double acc = 0.0;
  for (double x : an->val) acc += x;
  n->val[0] = acc;
  if (n->requires_grad) {
    auto ah = a.handle();
    n->backprop = [ah](Node& self) {
      ah->ensure_grad();
      for (double& g : ah->grad) g += self.grad[0];
    };
  }
  return Tensor(std::move(n));
}

inline Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.size())); }

// Row-wise layer normalization (no affine terms), eps inside the sqrt.
inline Tensor layer_norm(const Tensor& a, double eps = 1e-5) {
  Node* an = a.node();
  const std::size_t B = an->rows, N = an->cols;
  auto n = detail::make_op(B, N, {a.handle()});
  std::vector<double> inv_std(B);
  for (std::size_t i = 0; i < B; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < N; ++j) m += an->val[i * N + j];
    m /= static_cast<double>(N);
    double var = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const double d = an->val[i * N + j] - m;
      var += d * d;
    }
    var /= static_cast<double>(N);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < N; ++j) n->val[i * N + j] = (an->val[i * N + j] - m) * is;
  }
  if (n->requires_grad) {
    auto ah = a.handle();
    auto nh = n;
    n->backprop = [ah, B, N, inv_std](Node& self) {
      ah->ensure_grad();
      for (std::size_t i = 0; i < B; ++i) {
        double gm = 0.0, gym = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
          gm += self.grad[i * N + j];
          gym += self.grad[i * N + j] * self.val[i * N + j];
        }
        gm /= static_cast<double>(N);
        gym /= static_cast<double>(N);
        for (std::size_t j = 0; j < N; ++j)
          ah->grad[i * N + j] +=
              inv_std[i] * (self.grad[i * N + j] - gm - self.val[i * N + j] * gym);
      }
    };
  }
  return Tensor(std::move(n));
}

// Row-wise log softmax.
inline Tensor log_softmax(const Tensor& a) {
  Node* an = a.node();
  const std::size_t B = an->rows, N = an->cols;
  auto n = detail::make_op(B, N, {a.handle()});
  for (std::size_t i = 0; i < B; ++i) {
    double mx = an->val[i * N];
    for (std::size_t j = 1; j < N; ++j) mx = std::max(mx, an->val[i * N + j]);
    double acc = 0.0;
    for (std::size_t j = 0; j < N; ++j) acc += std::exp(an->val[i * N + j] - mx);
    const double lse = mx + std::log(acc);
    for (std::size_t j = 0; j < N; ++j) n->val[i * N + j] = an->val[i * N + j] - lse;
  }
  if (n->requires_grad) {
    auto ah = a.handle();
    n->backprop = [ah, B, N](Node& self) {
      ah->ensure_grad();
      for (std::size_t i = 0; i < B; ++i) {
        double gs = 0.0;
        for (std::size_t j = 0; j < N; ++j) gs += self.grad[i * N + j];
        for (std::size_t j = 0; j < N; ++j)
          ah->grad[i * N + j] += self.grad[i * N + j] - std::exp(self.val[i * N + j]) * gs;
      }
    };
  }
  return Tensor(std::move(n));
}

inline void backward(const Tensor& loss) {
  if (loss.size() != 1) throw std::logic_error("backward: loss must be scalar");
  Node* root = loss.node();
  if (!root->requires_grad)
    throw std::logic_error("backward: loss does not depend on any trainable tensor");

  // Iterative post-order topological sort over the grad-requiring subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

// --- parameter store, init, optimizer, serialization ---------------------

inline void xavier_uniform(Tensor& t, Rng& rng) {
  if (t.shape().size() != 2) throw std::invalid_argument("xavier_uniform: expects a rank-2 tensor");
  const double fan_in = static_cast<double>(t.shape()[0]);
  const double fan_out = static_cast<double>(t.shape()[1]);
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& x : t.mutable_value()) x = rng.uniform(-a, a);
}

struct AdamState {
  std::vector<double> m, v;
  std::int64_t step = 0;
};

class ParamStore {
 public:
  Tensor& create(const std::string& name, std::vector<std::size_t> shape) {
    if (params_.count(name)) throw std::logic_error("ParamStore: duplicate parameter '" + name + "'");
    auto t = Tensor::zeros(std::move(shape), true);
    auto [it, ok] = params_.emplace(name, std::move(t));
    return it->second;
  }

  bool has(const std::string& name) const { return params_.count(name) != 0; }

  Tensor& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::logic_error("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }
  const Tensor& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::logic_error("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }

  const std::map<std::string, Tensor>& params() const { return params_; }
  std::size_t total_size() const {
    std::size_t n = 0;
    for (auto& [k, t] : params_) n += t.size();
    return n;
  }

  void zero_grad() {
    for (auto& [k, t] : params_) {
      t.node()->ensure_grad();
      std::fill(t.node()->grad.begin(), t.node()->grad.end(), 0.0);
    }
  }

  // Decoupled weight decay applies only to matrix weights (parameters named
  // "*.w"); biases and structural parameters such as prior anchors are exempt.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                 double weight_decay = 0.0) {
    for (auto& [name, t] : params_) {
      Node* n = t.node();
      if (n->grad.size() != n->val.size())
        throw std::logic_error("adam_step: parameter '" + name + "' has no gradient");
      AdamState& st = state_[name];
      if (st.m.empty()) {
        st.m.assign(n->val.size(), 0.0);
        st.v.assign(n->val.size(), 0.0);
      }
      st.step += 1;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
      const double wd = (weight_decay != 0.0 && name.size() >= 2 &&
                         name.compare(name.size() - 2, 2, ".w") == 0)
                            ? weight_decay
                            : 0.0;
      for (std::size_t i = 0; i < n->val.size(); ++i) {
        const double g = n->grad[i];
        st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
        st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        n->val[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * n->val[i]);
      }
    }
  }

  std::map<std::string, std::vector<double>> snapshot() const {
    std::map<std::string, std::vector<double>> out;
    for (auto& [k, t] : params_) out[k] = t.value();
    return out;
  }

  void restore(const std::map<std::string, std::vector<double>>& snap) {
    for (auto& [k, v] : snap) {
      Tensor& t = get(k);
      if (t.size() != v.size()) throw std::logic_error("ParamStore::restore: size mismatch for '" + k + "'");
      t.mutable_value() = v;
    }
  }

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  std::map<std::string, Tensor> params_;  // name-ordered: deterministic iteration
  std::map<std::string, AdamState> state_;
};

}  // namespace hytimbre::ad

// Binary parameter file ("HLT1"): little-endian, bit-exact round trip.
//   magic "HLT1" | u32 version | u32 param count |
//   per param: u16 name length | name bytes | u8 rank | u32 dims... | f64 values...
#include "hytimbre/bytes.hpp"

namespace hytimbre::ad {

inline void ParamStore::save(const std::string& path) const {
  std::string out;
  out += "HLT1";
  io::put_u32(out, 1u);
  io::put_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, t] : params_) {
    if (name.size() > 0xffff) throw std::logic_error("ParamStore::save: parameter name too long");
    io::put_u16(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    const auto& shape = t.shape();
    out.push_back(static_cast<char>(shape.size()));
    for (std::size_t d : shape) io::put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.value()) io::put_f64(out, v);
  }
  io::write_file(path, out);
}

inline void ParamStore::load(const std::string& path) {
  io::ByteReader r(io::read_file(path), path);
  if (r.bytes(4, "magic") != "HLT1") throw FormatError(path + ": bad magic", 0);
  const std::uint32_t version = r.u32("version");
  if (version != 1) throw FormatError(path + ": unsupported version " + std::to_string(version), 4);
  const std::uint32_t count = r.u32("parameter count");
  const bool empty = params_.empty();
  for (std::uint32_t p = 0; p < count; ++p) {
    const std::uint16_t nl = r.u16("name length");
    const std::string name = r.bytes(nl, "name");
    const std::uint8_t rank = r.u8("rank");
    if (rank > 2) throw FormatError(path + ": parameter '" + name + "' has unsupported rank", r.offset() - 1);
    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      const std::uint32_t d = r.u32("dimension");
      if (d == 0) throw FormatError(path + ": zero dimension in '" + name + "'", r.offset() - 4);
      shape.push_back(d);
      total *= d;
    }
    std::vector<double> vals(total);
    for (std::size_t i = 0; i < total; ++i) vals[i] = r.f64("value");
    if (empty) {
      Tensor& t = create(name, shape);
      t.mutable_value() = std::move(vals);
    } else {
      Tensor& t = get(name);
      if (t.shape() != shape)
        throw FormatError(path + ": shape mismatch for parameter '" + name + "'", r.offset());
      t.mutable_value() = std::move(vals);
    }
  }
  r.expect_end();
}

}  // namespace hytimbre::ad
