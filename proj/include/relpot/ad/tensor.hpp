#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "relpot/util/errors.hpp"
#include "relpot/util/rng.hpp"

namespace relpot {

// Dense row-major float32 matrix. Everything the differentiable graph touches
// is a (rows x cols) matrix; higher-rank layouts (time, nodes, channels) are
// folded into rows by the layers that own them.
//
// The buffer is shared copy-on-write: graph values are write-once, so copies,
// reshapes and detaches alias the same storage, and mutation through a
// non-const accessor unshares first.
class Tensor {
 public:
  using Map = Eigen::Map<
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMap = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic,
                                                  Eigen::Dynamic,
                                                  Eigen::RowMajor>>;

  Tensor() : rows_(0), cols_(0), data_(std::make_shared<std::vector<float>>()) {}
  Tensor(int rows, int cols, float fill = 0.f)
      : rows_(rows), cols_(cols),
        data_(std::make_shared<std::vector<float>>(
            static_cast<std::size_t>(rows) * cols, fill)) {}
  Tensor(int rows, int cols, std::vector<float> data)
      : rows_(rows), cols_(cols),
        data_(std::make_shared<std::vector<float>>(std::move(data))) {
    if (data_->size() != static_cast<std::size_t>(rows_) * cols_)
      throw ShapeError("Tensor: data size does not match shape");
  }

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols, 0.f); }
  static Tensor full(int rows, int cols, float v) { return Tensor(rows, cols, v); }
  static Tensor scalar(float v) { return Tensor(1, 1, v); }

  static Tensor randn(int rows, int cols, Rng& rng, float stddev = 1.f) {
    Tensor t(rows, cols);
    float* p = t.data();
    for (std::int64_t i = 0; i < t.size(); ++i)
      p[i] = stddev * static_cast<float>(rng.normal());
    return t;
  }
  static Tensor rand_uniform(int rows, int cols, Rng& rng, float lo = 0.f,
                             float hi = 1.f) {
    Tensor t(rows, cols);
    float* p = t.data();
    for (std::int64_t i = 0; i < t.size(); ++i)
      p[i] = static_cast<float>(rng.uniform(lo, hi));
    return t;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t size() const { return static_cast<std::int64_t>(rows_) * cols_; }

  float* data() {
    ensure_unique();
    return data_->data();
  }
  const float* data() const { return data_->data(); }

  float& operator()(int r, int c) {
    ensure_unique();
    return (*data_)[static_cast<std::size_t>(r) * cols_ + c];
  }
  float operator()(int r, int c) const {
    return (*data_)[static_cast<std::size_t>(r) * cols_ + c];
  }
  float& at(std::int64_t i) {
    ensure_unique();
    return (*data_)[i];
  }
  float at(std::int64_t i) const { return (*data_)[i]; }

  Map map() {
    ensure_unique();
    return Map(data_->data(), rows_, cols_);
  }
  ConstMap map() const { return ConstMap(data_->data(), rows_, cols_); }

  bool same_shape(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    for (float v : *data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  float max_abs() const {
    float m = 0.f;
    for (float v : *data_) m = std::max(m, std::fabs(v));
    return m;
  }

  // Deterministic sequential reduction in double precision.
  double sum() const {
    double s = 0.0;
    for (float v : *data_) s += v;
    return s;
  }

  // Shares storage; no copy.
  Tensor reshaped(int rows, int cols) const {
    if (static_cast<std::int64_t>(rows) * cols != size())
      throw ShapeError("Tensor::reshaped: element count mismatch");
    Tensor out = *this;
    out.rows_ = rows;
    out.cols_ = cols;
    return out;
  }

  bool operator==(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ &&
           (data_ == o.data_ ||
            std::memcmp(data_->data(), o.data_->data(),
                        data_->size() * sizeof(float)) == 0);
  }

 private:
  void ensure_unique() {
    if (data_.use_count() > 1)
      data_ = std::make_shared<std::vector<float>>(*data_);
  }

  int rows_, cols_;
  std::shared_ptr<std::vector<float>> data_;
};

}  // namespace relpot
