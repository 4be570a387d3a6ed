#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "relpot/ad/var.hpp"

// Differentiable primitives. Every vjp is written in terms of these same ops,
// which is what allows differentiating through gradient computations.
namespace relpot {

namespace detail {

inline void check_broadcast(const Tensor& a, const Tensor& b) {
  if ((a.rows() != b.rows() && a.rows() != 1 && b.rows() != 1) ||
      (a.cols() != b.cols() && a.cols() != 1 && b.cols() != 1))
    throw ShapeError("broadcast: incompatible shapes");
}

template <typename F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, F f) {
  check_broadcast(a, b);
  const int rows = std::max(a.rows(), b.rows());
  const int cols = std::max(a.cols(), b.cols());
  Tensor out(rows, cols);
  const bool ar = a.rows() == 1, ac = a.cols() == 1;
  const bool br = b.rows() == 1, bc = b.cols() == 1;
  for (int r = 0; r < rows; ++r) {
    const float* pa = a.data() + static_cast<std::size_t>(ar ? 0 : r) * a.cols();
    const float* pb = b.data() + static_cast<std::size_t>(br ? 0 : r) * b.cols();
    float* po = out.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c)
      po[c] = f(pa[ac ? 0 : c], pb[bc ? 0 : c]);
  }
  return out;
}

template <typename F>
Tensor unary_apply(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  const float* pa = a.data();
  float* po = out.data();
  for (std::int64_t i = 0; i < a.size(); ++i) po[i] = f(pa[i]);
  return out;
}

}  // namespace detail

// ---- reductions / broadcasting --------------------------------------------

inline Var sum_to(const Var& a, int rows, int cols);

inline Var broadcast_to(const Var& a, int rows, int cols) {
  if ((a.rows() != rows && a.rows() != 1) || (a.cols() != cols && a.cols() != 1))
    throw ShapeError("broadcast_to: incompatible shapes");
  if (a.rows() == rows && a.cols() == cols) return a;
  const Tensor& t = a.value();
  Tensor out(rows, cols);
  const bool ar = t.rows() == 1, ac = t.cols() == 1;
  for (int r = 0; r < rows; ++r) {
    const float* pa = t.data() + static_cast<std::size_t>(ar ? 0 : r) * t.cols();
    float* po = out.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) po[c] = pa[ac ? 0 : c];
  }
  const int pr = a.rows(), pc = a.cols();
  return Var::make(std::move(out), "broadcast_to", {a},
                   [pr, pc](const Var& g) -> std::vector<Var> {
                     return {sum_to(g, pr, pc)};
                   });
}

inline Var sum_to(const Var& a, int rows, int cols) {
  if ((rows != a.rows() && rows != 1) || (cols != a.cols() && cols != 1))
    throw ShapeError("sum_to: target must be full or 1 per dim");
  if (rows == a.rows() && cols == a.cols()) return a;
  const Tensor& t = a.value();
  // Double accumulators; reduction order is fixed, so results are
  // deterministic run to run.
  std::vector<double> acc(static_cast<std::size_t>(rows) * cols, 0.0);
  for (int r = 0; r < t.rows(); ++r) {
    const int ro = rows == 1 ? 0 : r;
    const float* pa = t.data() + static_cast<std::size_t>(r) * t.cols();
    for (int c = 0; c < t.cols(); ++c)
      acc[static_cast<std::size_t>(ro) * cols + (cols == 1 ? 0 : c)] += pa[c];
  }
  Tensor out(rows, cols);
  for (std::int64_t i = 0; i < out.size(); ++i)
    out.at(i) = static_cast<float>(acc[i]);
  const int pr = a.rows(), pc = a.cols();
  return Var::make(std::move(out), "sum_to", {a},
                   [pr, pc](const Var& g) -> std::vector<Var> {
                     return {broadcast_to(g, pr, pc)};
                   });
}

inline Var sum_all(const Var& a) { return sum_to(a, 1, 1); }
inline Var sum_rows(const Var& a) { return sum_to(a, 1, a.cols()); }
inline Var sum_cols(const Var& a) { return sum_to(a, a.rows(), 1); }

// ---- arithmetic ------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  Tensor out = detail::broadcast_apply(a.value(), b.value(),
                                       [](float x, float y) { return x + y; });
  const int ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  return Var::make(std::move(out), "add", {a, b},
                   [ar, ac, br, bc](const Var& g) -> std::vector<Var> {
                     return {sum_to(g, ar, ac), sum_to(g, br, bc)};
                   });
}

inline Var sub(const Var& a, const Var& b);
inline Var neg(const Var& a) {
  Tensor out = detail::unary_apply(a.value(), [](float x) { return -x; });
  return Var::make(std::move(out), "neg", {a},
                   [](const Var& g) -> std::vector<Var> { return {neg(g)}; });
}

inline Var sub(const Var& a, const Var& b) {
  Tensor out = detail::broadcast_apply(a.value(), b.value(),
                                       [](float x, float y) { return x - y; });
  const int ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  return Var::make(std::move(out), "sub", {a, b},
                   [ar, ac, br, bc](const Var& g) -> std::vector<Var> {
                     return {sum_to(g, ar, ac), neg(sum_to(g, br, bc))};
                   });
}

inline Var mul(const Var& a, const Var& b) {
  Tensor out = detail::broadcast_apply(a.value(), b.value(),
                                       [](float x, float y) { return x * y; });
  const int ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  return Var::make(std::move(out), "mul", {a, b},
                   [a, b, ar, ac, br, bc](const Var& g) -> std::vector<Var> {
                     return {sum_to(mul(g, b), ar, ac),
                             sum_to(mul(g, a), br, bc)};
                   });
}

inline Var div(const Var& a, const Var& b) {
  Tensor out = detail::broadcast_apply(a.value(), b.value(),
                                       [](float x, float y) { return x / y; });
  const int ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  return Var::make(std::move(out), "div", {a, b},
                   [a, b, ar, ac, br, bc](const Var& g) -> std::vector<Var> {
                     Var ga = sum_to(div(g, b), ar, ac);
                     Var gb = sum_to(neg(div(mul(g, a), mul(b, b))), br, bc);
                     return {ga, gb};
                   });
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator+(const Var& a, float s) { return add(a, Var::scalar(s)); }
inline Var operator-(const Var& a, float s) { return sub(a, Var::scalar(s)); }
inline Var operator*(const Var& a, float s) { return mul(a, Var::scalar(s)); }
inline Var operator/(const Var& a, float s) { return div(a, Var::scalar(s)); }
inline Var operator+(float s, const Var& a) { return add(Var::scalar(s), a); }
inline Var operator-(float s, const Var& a) { return sub(Var::scalar(s), a); }
inline Var operator*(float s, const Var& a) { return mul(Var::scalar(s), a); }
inline Var operator/(float s, const Var& a) { return div(Var::scalar(s), a); }

// ---- linear algebra --------------------------------------------------------

inline Var transpose(const Var& a) {
  Tensor out(a.cols(), a.rows());
  out.map() = a.value().map().transpose();
  return Var::make(std::move(out), "transpose", {a},
                   [](const Var& g) -> std::vector<Var> {
                     return {transpose(g)};
                   });
}

inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dim mismatch");
  Tensor out(a.rows(), b.cols());
  out.map().noalias() = a.value().map() * b.value().map();
  return Var::make(std::move(out), "matmul", {a, b},
                   [a, b](const Var& g) -> std::vector<Var> {
                     return {matmul(g, transpose(b)), matmul(transpose(a), g)};
                   });
}

// ---- data movement ---------------------------------------------------------

inline Var reshape(const Var& a, int rows, int cols) {
  if (static_cast<std::int64_t>(rows) * cols != a.value().size())
    throw ShapeError("reshape: element count mismatch");
  Tensor out = a.value().reshaped(rows, cols);
  const int pr = a.rows(), pc = a.cols();
  return Var::make(std::move(out), "reshape", {a},
                   [pr, pc](const Var& g) -> std::vector<Var> {
                     return {reshape(g, pr, pc)};
                   });
}

inline Var scatter_rows(const Var& a, std::vector<int> idx, int out_rows);

// Row gather; index -1 yields a zero row (used for conv zero padding).
inline Var gather_rows(const Var& a, std::vector<int> idx) {
  const Tensor& t = a.value();
  Tensor out(static_cast<int>(idx.size()), t.cols());
  const std::size_t stride = sizeof(float) * t.cols();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int r = idx[i];
    if (r < 0) continue;  // already zero
    if (r >= t.rows()) throw ShapeError("gather_rows: index out of range");
    std::memcpy(out.data() + i * t.cols(), t.data() + static_cast<std::size_t>(r) * t.cols(), stride);
  }
  const int pr = a.rows();
  return Var::make(std::move(out), "gather_rows", {a},
                   [idx = std::move(idx), pr](const Var& g) -> std::vector<Var> {
                     return {scatter_rows(g, idx, pr)};
                   });
}

// Adjoint of gather_rows: out[idx[i]] += a[i], rows with idx -1 are dropped.
inline Var scatter_rows(const Var& a, std::vector<int> idx, int out_rows) {
  const Tensor& t = a.value();
  if (static_cast<int>(idx.size()) != t.rows())
    throw ShapeError("scatter_rows: index size mismatch");
  Tensor out(out_rows, t.cols(), 0.f);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const int r = idx[i];
    if (r < 0) continue;
    if (r >= out_rows) throw ShapeError("scatter_rows: index out of range");
    float* po = out.data() + static_cast<std::size_t>(r) * t.cols();
    const float* pa = t.data() + i * t.cols();
    for (int c = 0; c < t.cols(); ++c) po[c] += pa[c];
  }
  return Var::make(std::move(out), "scatter_rows", {a},
                   [idx = std::move(idx)](const Var& g) -> std::vector<Var> {
                     return {gather_rows(g, idx)};
                   });
}

inline Var slice_cols(const Var& a, int c0, int c1);

// Place `a` into columns [c0, c0+a.cols) of a zero matrix with `cols` columns.
inline Var embed_cols(const Var& a, int c0, int cols) {
  const Tensor& t = a.value();
  if (c0 < 0 || c0 + t.cols() > cols) throw ShapeError("embed_cols: range");
  Tensor out(t.rows(), cols, 0.f);
  for (int r = 0; r < t.rows(); ++r)
    std::memcpy(out.data() + static_cast<std::size_t>(r) * cols + c0,
                t.data() + static_cast<std::size_t>(r) * t.cols(),
                sizeof(float) * t.cols());
  const int pc = t.cols();
  return Var::make(std::move(out), "embed_cols", {a},
                   [c0, pc](const Var& g) -> std::vector<Var> {
                     return {slice_cols(g, c0, c0 + pc)};
                   });
}

inline Var slice_cols(const Var& a, int c0, int c1) {
  const Tensor& t = a.value();
  if (c0 < 0 || c1 > t.cols() || c0 >= c1) throw ShapeError("slice_cols: range");
  Tensor out(t.rows(), c1 - c0);
  for (int r = 0; r < t.rows(); ++r)
    std::memcpy(out.data() + static_cast<std::size_t>(r) * (c1 - c0),
                t.data() + static_cast<std::size_t>(r) * t.cols() + c0,
                sizeof(float) * (c1 - c0));
  const int pc = t.cols();
  return Var::make(std::move(out), "slice_cols", {a},
                   [c0, pc](const Var& g) -> std::vector<Var> {
                     return {embed_cols(g, c0, pc)};
                   });
}

inline Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row mismatch");
  const int ca = a.cols(), cb = b.cols();
  Tensor out(a.rows(), ca + cb);
  for (int r = 0; r < a.rows(); ++r) {
    std::memcpy(out.data() + static_cast<std::size_t>(r) * (ca + cb),
                a.value().data() + static_cast<std::size_t>(r) * ca,
                sizeof(float) * ca);
    std::memcpy(out.data() + static_cast<std::size_t>(r) * (ca + cb) + ca,
                b.value().data() + static_cast<std::size_t>(r) * cb,
                sizeof(float) * cb);
  }
  return Var::make(std::move(out), "concat_cols", {a, b},
                   [ca, cb](const Var& g) -> std::vector<Var> {
                     return {slice_cols(g, 0, ca), slice_cols(g, ca, ca + cb)};
                   });
}

// ---- nonlinearities --------------------------------------------------------

inline Var exp(const Var& a) {
  Tensor out = detail::unary_apply(a.value(), [](float x) { return std::exp(x); });
  return Var::make(std::move(out), "exp", {a},
                   [a](const Var& g) -> std::vector<Var> {
                     return {mul(g, exp(a))};
                   });
}

inline Var log(const Var& a) {
  Tensor out = detail::unary_apply(a.value(), [](float x) { return std::log(x); });
  return Var::make(std::move(out), "log", {a},
                   [a](const Var& g) -> std::vector<Var> {
                     return {div(g, a)};
                   });
}

inline Var sqrt(const Var& a) {
  Tensor out = detail::unary_apply(a.value(), [](float x) { return std::sqrt(x); });
  return Var::make(std::move(out), "sqrt", {a},
                   [a](const Var& g) -> std::vector<Var> {
                     return {div(mul(g, Var::scalar(0.5f)), sqrt(a))};
                   });
}

inline Var sigmoid(const Var& a) {
  Tensor out = detail::unary_apply(a.value(), [](float x) {
    return x >= 0.f ? 1.f / (1.f + std::exp(-x))
                    : std::exp(x) / (1.f + std::exp(x));
  });
  return Var::make(std::move(out), "sigmoid", {a},
                   [a](const Var& g) -> std::vector<Var> {
                     Var s = sigmoid(a);
                     return {mul(g, mul(s, sub(Var::scalar(1.f), s)))};
                   });
}

// x * sigmoid(x)
inline Var silu(const Var& a) { return mul(a, sigmoid(a)); }

inline Var elu(const Var& a) {
  Tensor out = detail::unary_apply(
      a.value(), [](float x) { return x > 0.f ? x : std::expm1(x); });
  // d/dx elu = 1 for x > 0, e^x otherwise; the indicator is locally constant.
  Tensor mask = detail::unary_apply(a.value(),
                                    [](float x) { return x > 0.f ? 1.f : 0.f; });
  return Var::make(std::move(out), "elu", {a},
                   [a, mask = std::move(mask)](const Var& g) -> std::vector<Var> {
                     Var m = Var::constant(mask);
                     Var d = add(m, mul(sub(Var::scalar(1.f), m), exp(a)));
                     return {mul(g, d)};
                   });
}

inline Var relu(const Var& a) {
  Tensor out = detail::unary_apply(a.value(),
                                   [](float x) { return x > 0.f ? x : 0.f; });
  Tensor mask = detail::unary_apply(a.value(),
                                    [](float x) { return x > 0.f ? 1.f : 0.f; });
  return Var::make(std::move(out), "relu", {a},
                   [mask = std::move(mask)](const Var& g) -> std::vector<Var> {
                     return {mul(g, Var::constant(mask))};
                   });
}

inline Var maximum(const Var& a, const Var& b) {
  Tensor out = detail::broadcast_apply(
      a.value(), b.value(), [](float x, float y) { return std::max(x, y); });
  Tensor mask = detail::broadcast_apply(
      a.value(), b.value(), [](float x, float y) { return x >= y ? 1.f : 0.f; });
  const int ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  return Var::make(std::move(out), "maximum", {a, b},
                   [mask = std::move(mask), ar, ac, br, bc](const Var& g) -> std::vector<Var> {
                     Var m = Var::constant(mask);
                     return {sum_to(mul(g, m), ar, ac),
                             sum_to(mul(g, sub(Var::scalar(1.f), m)), br, bc)};
                   });
}

inline Var minimum(const Var& a, const Var& b) {
  Tensor out = detail::broadcast_apply(
      a.value(), b.value(), [](float x, float y) { return std::min(x, y); });
  Tensor mask = detail::broadcast_apply(
      a.value(), b.value(), [](float x, float y) { return x <= y ? 1.f : 0.f; });
  const int ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  return Var::make(std::move(out), "minimum", {a, b},
                   [mask = std::move(mask), ar, ac, br, bc](const Var& g) -> std::vector<Var> {
                     Var m = Var::constant(mask);
                     return {sum_to(mul(g, m), ar, ac),
                             sum_to(mul(g, sub(Var::scalar(1.f), m)), br, bc)};
                   });
}

// ---- misc ------------------------------------------------------------------

inline Var detach(const Var& a) { return Var::constant(a.value()); }

inline Var mean_all(const Var& a) {
  return mul(sum_all(a), Var::scalar(1.f / static_cast<float>(a.value().size())));
}

inline Var mse(const Var& pred, const Var& target) {
  Var d = sub(pred, target);
  return mean_all(mul(d, d));
}

}  // namespace relpot
