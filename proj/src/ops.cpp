// Copyright 2026 The VIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vic/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vic/error.hpp"

namespace vic {

namespace {

thread_local ops::KinkMonitor* active_monitor = nullptr;

void note_kink(double distance) {
  if (active_monitor != nullptr) active_monitor->note(distance);
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::shape_mismatch, op + " " + a.shape_string() + " vs " + b.shape_string());
}

void require_matrix(const std::string& op, const Tensor& a) {
  if (a.rank() != 2) throw Error(ErrorCode::shape_mismatch, op + " expects a matrix, got " + a.shape_string());
}

struct Broadcast {
  std::size_t rows, cols;
  std::size_t ar, ac, br, bc;

  std::size_t a_index(std::size_t r, std::size_t c) const {
    return (ar == 1 ? 0 : r) * ac + (ac == 1 ? 0 : c);
  }
  std::size_t b_index(std::size_t r, std::size_t c) const {
    return (br == 1 ? 0 : r) * bc + (bc == 1 ? 0 : c);
  }
};

Broadcast broadcast_shape(const std::string& op, const Tensor& a, const Tensor& b) {
  require_matrix(op, a);
  require_matrix(op, b);
  Broadcast s{0, 0, a.rows(), a.cols(), b.rows(), b.cols()};
  auto merge = [&](std::size_t x, std::size_t y) -> std::size_t {
    if (x == y) return x;
    if (x == 1) return y;
    if (y == 1) return x;
    shape_error(op, a, b);
  };
  s.rows = merge(s.ar, s.br);
  s.cols = merge(s.ac, s.bc);
  return s;
}

template <class F>
Tensor binary_forward(const std::string& op, const Tensor& a, const Tensor& b, F f) {
  const Broadcast s = broadcast_shape(op, a, b);
  Tensor out(s.rows, s.cols);
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t c = 0; c < s.cols; ++c)
      out(r, c) = f(a[s.a_index(r, c)], b[s.b_index(r, c)]);
  return out;
}

// da/db are partial derivatives of f at (a, b).
template <class F, class DA, class DB>
Var binary(const char* name, Var a, Var b, F f, DA da, DB db) {
  Tape& t = *a.tape();
  const std::string op = name;
  const std::size_t ia = a.id(), ib = b.id();
  Tensor value = binary_forward(op, a.value(), b.value(), f);
  return t.record(
      std::move(value), {a, b},
      [=](const Tape& tp) { return binary_forward(op, tp.value(ia), tp.value(ib), f); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& av = tp.value(ia);
        const Tensor& bv = tp.value(ib);
        const Tensor& g = tp.out_grad(self);
        const Broadcast s = broadcast_shape(op, av, bv);
        const bool need_a = tp.requires_grad(ia), need_b = tp.requires_grad(ib);
        Tensor ga = need_a ? Tensor::zeros(av.shape()) : Tensor();
        Tensor gb = need_b ? Tensor::zeros(bv.shape()) : Tensor();
        for (std::size_t r = 0; r < s.rows; ++r)
          for (std::size_t c = 0; c < s.cols; ++c) {
            const std::size_t ai = s.a_index(r, c), bi = s.b_index(r, c);
            const double gv = g(r, c);
            if (need_a) ga[ai] += gv * da(av[ai], bv[bi]);
            if (need_b) gb[bi] += gv * db(av[ai], bv[bi]);
          }
        if (need_a) tp.accumulate(ia, ga);
        if (need_b) tp.accumulate(ib, gb);
      });
}

// dydx(x, y) is the derivative given input x and output y.
template <class F, class D>
Var unary(Var a, F f, D dydx) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  auto forward = [f](const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) v = f(v);
    return y;
  };
  Tensor value = forward(a.value());
  return t.record(
      std::move(value), {a}, [=](const Tape& tp) { return forward(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        const Tensor& y = tp.value(self);
        const Tensor& g = tp.out_grad(self);
        Tensor gx = Tensor::zeros(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] = g[i] * dydx(x[i], y[i]);
        tp.accumulate(ia, gx);
      });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor transpose_value(const Tensor& a) { return a.transposed(); }

Tensor softmax_value(const Tensor& a) {
  require_matrix("softmax_rows", a);
  Tensor out = a;
  const std::size_t c = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = out.row(r);
    if (c == 0) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

Tensor layer_norm_value(const Tensor& a, double eps) {
  require_matrix("layer_norm_rows", a);
  Tensor out = a;
  const std::size_t c = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = out.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (double& v : row) v = (v - mean) * inv;
  }
  return out;
}

Tensor row_norm_value(const Tensor& a) {
  require_matrix("row_norm", a);
  Tensor out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double v : a.row(r)) s += v * v;
    out(r, 0) = std::sqrt(s);
    // An exact zero row has matching one-sided slopes, so only near-zero rows count.
    if (s > 0.0) note_kink(out(r, 0));
  }
  return out;
}

Tensor sum_rows_value(const Tensor& a) {
  Tensor out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double v : a.row(r)) s += v;
    out(r, 0) = s;
  }
  return out;
}

Tensor sum_cols_value(const Tensor& a) {
  Tensor out(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(0, c) += a(r, c);
  return out;
}

Tensor gap_value(const Tensor& a, std::size_t group) {
  if (group == 0 || a.rows() % group != 0) {
    throw Error(ErrorCode::shape_mismatch, "global_avg_pool group does not divide " + a.shape_string());
  }
  const std::size_t count = a.rows() / group, c = a.cols();
  Tensor out(count, c);
  const double inv = 1.0 / static_cast<double>(group);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t g = 0; g < group; ++g) {
      auto src = a.row(k * group + g);
      for (std::size_t j = 0; j < c; ++j) out(k, j) += src[j];
    }
    for (std::size_t j = 0; j < c; ++j) out(k, j) *= inv;
  }
  return out;
}

Tensor repeat_value(const Tensor& a, std::size_t group) {
  const std::size_t c = a.cols();
  Tensor out(a.rows() * group, c);
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto src = a.row(k);
    for (std::size_t g = 0; g < group; ++g) std::copy(src.begin(), src.end(), out.row(k * group + g).begin());
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out(n, m);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * m;
      double* crow = C + i * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  return out;
}

Tensor softmax_rows(const Tensor& a) { return softmax_value(a); }

Tensor position_embed(const Tensor& positions, std::size_t d) {
  if (d == 0 || d % 4 != 0) {
    throw Error(ErrorCode::dimension_indivisible, "position embedding width " + std::to_string(d) + " is not a multiple of 4");
  }
  if (positions.rank() != 2 || (positions.cols() != 2 && positions.rows() != 0)) {
    throw Error(ErrorCode::shape_mismatch, "positions must be count x 2");
  }
  const std::size_t bands = d / 4;
  Tensor out(positions.rows(), d);
  for (std::size_t i = 0; i < positions.rows(); ++i) {
    const double x = positions(i, 0), y = positions(i, 1);
    for (std::size_t k = 0; k < bands; ++k) {
      // Angular frequencies from pi to 32*pi, geometric in k.
      const double w = bands == 1 ? std::numbers::pi
                                  : std::numbers::pi * std::pow(32.0, static_cast<double>(k) / static_cast<double>(bands - 1));
      out(i, 4 * k + 0) = std::sin(w * x);
      out(i, 4 * k + 1) = std::cos(w * x);
      out(i, 4 * k + 2) = std::sin(w * y);
      out(i, 4 * k + 3) = std::cos(w * y);
    }
  }
  return out;
}

namespace ops {

Var matmul(Var a, Var b) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  Tensor value = vic::matmul(a.value(), b.value());
  return t.record(
      std::move(value), {a, b},
      [=](const Tape& tp) { return vic::matmul(tp.value(ia), tp.value(ib)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        if (tp.requires_grad(ia)) tp.accumulate(ia, vic::matmul(g, tp.value(ib).transposed()));
        if (tp.requires_grad(ib)) tp.accumulate(ib, vic::matmul(tp.value(ia).transposed(), g));
      });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  require_matrix("transpose", a.value());
  return t.record(
      transpose_value(a.value()), {a}, [=](const Tape& tp) { return transpose_value(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) { tp.accumulate(ia, tp.out_grad(self).transposed()); });
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var hadamard(Var a, Var b) {
  return binary(
      "hadamard", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var divide(Var a, Var b) {
  return binary(
      "divide", a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var scale(Var a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var relu(Var a) {
  return unary(
      a,
      [](double x) {
        note_kink(std::abs(x));
        return x > 0.0 ? x : 0.0;
      },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sqrt(Var a) {
  // Subgradient 0 at the origin.
  return unary(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a,
      [lo, hi](double x) {
        note_kink(std::min(std::abs(x - lo), std::abs(x - hi)));
        return std::clamp(x, lo, hi);
      },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var pow_base(Var theta, Var exponent) {
  if (theta.value().size() != 1) shape_error("pow_base", theta.value(), exponent.value());
  return binary(
      "pow_base", theta, exponent, [](double b, double e) { return std::pow(b, e); },
      [](double b, double e) { return e == 0.0 ? 0.0 : e * std::pow(b, e - 1.0); },
      [](double b, double e) { return std::pow(b, e) * std::log(b); });
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.record(
      softmax_value(a.value()), {a}, [=](const Tape& tp) { return softmax_value(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& y = tp.value(self);
        const Tensor& g = tp.out_grad(self);
        Tensor gx = Tensor::zeros(y.shape());
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) = y(r, c) * (g(r, c) - dot);
        }
        tp.accumulate(ia, gx);
      });
}

Var layer_norm_rows(Var a, double eps) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.record(
      layer_norm_value(a.value(), eps), {a}, [=](const Tape& tp) { return layer_norm_value(tp.value(ia), eps); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        const Tensor& y = tp.value(self);
        const Tensor& g = tp.out_grad(self);
        const std::size_t c = x.cols();
        const double cn = static_cast<double>(c);
        Tensor gx = Tensor::zeros(x.shape());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          double mean = 0.0;
          for (double v : x.row(r)) mean += v;
          mean /= cn;
          double var = 0.0;
          for (double v : x.row(r)) var += (v - mean) * (v - mean);
          var /= cn;
          const double inv = 1.0 / std::sqrt(var + eps);
          double gsum = 0.0, gysum = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            gsum += g(r, j);
            gysum += g(r, j) * y(r, j);
          }
          for (std::size_t j = 0; j < c; ++j) gx(r, j) = inv * (g(r, j) - gsum / cn - y(r, j) * gysum / cn);
        }
        tp.accumulate(ia, gx);
      });
}

Var row_norm(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.record(
      row_norm_value(a.value()), {a}, [=](const Tape& tp) { return row_norm_value(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        const Tensor& y = tp.value(self);
        const Tensor& g = tp.out_grad(self);
        Tensor gx = Tensor::zeros(x.shape());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          if (y(r, 0) == 0.0) continue;
          const double s = g(r, 0) / y(r, 0);
          for (std::size_t c = 0; c < x.cols(); ++c) gx(r, c) = s * x(r, c);
        }
        tp.accumulate(ia, gx);
      });
}

Var sum_rows(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.record(
      sum_rows_value(a.value()), {a}, [=](const Tape& tp) { return sum_rows_value(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        const Tensor& g = tp.out_grad(self);
        Tensor gx = Tensor::zeros(x.shape());
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < x.cols(); ++c) gx(r, c) = g(r, 0);
        tp.accumulate(ia, gx);
      });
}

Var sum_cols(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.record(
      sum_cols_value(a.value()), {a}, [=](const Tape& tp) { return sum_cols_value(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        const Tensor& g = tp.out_grad(self);
        Tensor gx = Tensor::zeros(x.shape());
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < x.cols(); ++c) gx(r, c) = g(0, c);
        tp.accumulate(ia, gx);
      });
}

Var sum_all(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  auto forward = [](const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    return Tensor::scalar(s);
  };
  return t.record(
      forward(a.value()), {a}, [=](const Tape& tp) { return forward(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        Tensor gx(x.shape(), std::vector<double>(x.size(), tp.out_grad(self)[0]));
        tp.accumulate(ia, gx);
      });
}

Var mean_all(Var a) {
  const std::size_t n = a.value().size();
  return scale(sum_all(a), n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
}

Var global_avg_pool(Var a, std::size_t group) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.record(
      gap_value(a.value(), group), {a}, [=](const Tape& tp) { return gap_value(tp.value(ia), group); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        Tensor gx = repeat_value(g, group);
        for (double& v : gx.values()) v /= static_cast<double>(group);
        tp.accumulate(ia, gx);
      });
}

Var repeat_rows(Var a, std::size_t group) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  require_matrix("repeat_rows", a.value());
  return t.record(
      repeat_value(a.value(), group), {a}, [=](const Tape& tp) { return repeat_value(tp.value(ia), group); },
      [=](Tape& tp, std::size_t self) {
        Tensor gx = gap_value(tp.out_grad(self), group);
        for (double& v : gx.values()) v *= static_cast<double>(group);
        tp.accumulate(ia, gx);
      });
}

namespace {

Tensor concat_rows_value(const std::vector<const Tensor*>& parts) {
  const std::size_t c = parts.front()->cols();
  std::size_t rows = 0;
  for (const Tensor* p : parts) {
    if (p->cols() != c) shape_error("concat_rows", *parts.front(), *p);
    rows += p->rows();
  }
  Tensor out(rows, c);
  std::size_t off = 0;
  for (const Tensor* p : parts) {
    std::copy(p->values().begin(), p->values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(off * c));
    off += p->rows();
  }
  return out;
}

Tensor concat_cols_value(const std::vector<const Tensor*>& parts) {
  const std::size_t r = parts.front()->rows();
  std::size_t cols = 0;
  for (const Tensor* p : parts) {
    if (p->rows() != r) shape_error("concat_cols", *parts.front(), *p);
    cols += p->cols();
  }
  Tensor out(r, cols);
  std::size_t off = 0;
  for (const Tensor* p : parts) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < p->cols(); ++j) out(i, off + j) = (*p)(i, j);
    off += p->cols();
  }
  return out;
}

std::vector<const Tensor*> values_of(const Tape& tp, const std::vector<std::size_t>& ids) {
  std::vector<const Tensor*> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(&tp.value(id));
  return out;
}

}  // namespace

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::shape_mismatch, "concat_rows of nothing");
  Tape& t = *parts.front().tape();
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return t.record(
      concat_rows_value(values_of(t, ids)), parts, [=](const Tape& tp) { return concat_rows_value(values_of(tp, ids)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        std::size_t off = 0;
        for (std::size_t id : ids) {
          const Tensor& v = tp.value(id);
          if (tp.requires_grad(id)) {
            const auto first = g.values().begin() + static_cast<std::ptrdiff_t>(off * g.cols());
            Tensor part(v.shape(), std::vector<double>(first, first + static_cast<std::ptrdiff_t>(v.size())));
            tp.accumulate(id, part);
          }
          off += v.rows();
        }
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::shape_mismatch, "concat_cols of nothing");
  Tape& t = *parts.front().tape();
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return t.record(
      concat_cols_value(values_of(t, ids)), parts, [=](const Tape& tp) { return concat_cols_value(values_of(tp, ids)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& g = tp.out_grad(self);
        std::size_t off = 0;
        for (std::size_t id : ids) {
          const Tensor& v = tp.value(id);
          if (tp.requires_grad(id)) {
            Tensor part(v.rows(), v.cols());
            for (std::size_t i = 0; i < v.rows(); ++i)
              for (std::size_t j = 0; j < v.cols(); ++j) part(i, j) = g(i, off + j);
            tp.accumulate(id, part);
          }
          off += v.cols();
        }
      });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  if (begin > end || end > a.rows()) throw Error(ErrorCode::shape_mismatch, "slice_rows out of range");
  auto forward = [begin, end](const Tensor& x) {
    const std::size_t c = x.cols();
    const auto first = x.values().begin() + static_cast<std::ptrdiff_t>(begin * c);
    return Tensor({end - begin, c}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>((end - begin) * c)));
  };
  return t.record(
      forward(a.value()), {a}, [=](const Tape& tp) { return forward(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        const Tensor& g = tp.out_grad(self);
        Tensor gx(x.rows(), x.cols());
        std::copy(g.values().begin(), g.values().end(), gx.values().begin() + static_cast<std::ptrdiff_t>(begin * x.cols()));
        tp.accumulate(ia, gx);
      });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  if (begin > end || end > a.cols()) throw Error(ErrorCode::shape_mismatch, "slice_cols out of range");
  auto forward = [begin, end](const Tensor& x) {
    Tensor out(x.rows(), end - begin);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = x(i, j);
    return out;
  };
  return t.record(
      forward(a.value()), {a}, [=](const Tape& tp) { return forward(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        const Tensor& g = tp.out_grad(self);
        Tensor gx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = begin; j < end; ++j) gx(i, j) = g(i, j - begin);
        tp.accumulate(ia, gx);
      });
}

Var gather_rows(Var a, std::vector<std::size_t> index) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  for (std::size_t k : index)
    if (k >= a.rows()) throw Error(ErrorCode::index_out_of_range, "gather_rows index " + std::to_string(k));
  auto forward = [index](const Tensor& x) {
    const std::size_t c = x.cols();
    Tensor out(index.size(), c);
    for (std::size_t r = 0; r < index.size(); ++r) {
      auto src = x.row(index[r]);
      std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
  };
  return t.record(
      forward(a.value()), {a}, [=](const Tape& tp) { return forward(tp.value(ia)); },
      [=](Tape& tp, std::size_t self) {
        const Tensor& x = tp.value(ia);
        const Tensor& g = tp.out_grad(self);
        Tensor gx(x.rows(), x.cols());
        for (std::size_t r = 0; r < index.size(); ++r) {
          auto dst = gx.row(index[r]);
          auto src = g.row(r);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
        tp.accumulate(ia, gx);
      });
}

Var reshape(Var a, std::vector<std::size_t> shape) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  Tensor value = a.value().reshaped(shape);
  return t.record(
      std::move(value), {a}, [=](const Tape& tp) { return tp.value(ia).reshaped(shape); },
      [=](Tape& tp, std::size_t self) { tp.accumulate(ia, tp.out_grad(self)); });
}

KinkMonitor::KinkMonitor() : previous_(active_monitor), margin_(std::numeric_limits<double>::infinity()) {
  active_monitor = this;
}

KinkMonitor::~KinkMonitor() { active_monitor = previous_; }

void KinkMonitor::note(double distance) noexcept {
  margin_ = std::min(margin_, distance);
  if (previous_ != nullptr) previous_->note(distance);
}

}  // namespace ops
}  // namespace vic
