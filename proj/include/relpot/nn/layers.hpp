#pragma once

#include <map>
#include <string>
#include <vector>

#include "relpot/ad/ops.hpp"

namespace relpot {

// Named parameter registry. Parameters are graph leaves with requires_grad
// set; the optimizer overwrites their values in place between iterations.
class ParamStore {
 public:
  // Binds `name`, creating it from `init` when absent. A store preloaded from
  // a checkpoint keeps its tensors, so model construction doubles as rebind.
  Var& create(const std::string& name, Tensor init) {
    auto it = params_.find(name);
    if (it != params_.end()) {
      if (!it->second.value().same_shape(init))
        throw ConfigError("parameter shape mismatch for " + name);
      return it->second;
    }
    order_.push_back(name);
    return params_[name] = Var::leaf(std::move(init), true);
  }

  void load(const std::string& name, Tensor value) {
    if (params_.count(name)) throw IoError("duplicate parameter: " + name);
    order_.push_back(name);
    params_[name] = Var::leaf(std::move(value), true);
  }

  Var& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  const Var& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }

  std::vector<Var> all() const {
    std::vector<Var> out;
    out.reserve(order_.size());
    for (const auto& n : order_) out.push_back(params_.at(n));
    return out;
  }

  std::int64_t num_scalars() const {
    std::int64_t n = 0;
    for (const auto& name : order_) n += params_.at(name).value().size();
    return n;
  }

 private:
  std::map<std::string, Var> params_;
  std::vector<std::string> order_;
};

namespace nn {

// fan-in scaled uniform, the torch linear/conv default
inline Tensor kaiming_uniform(int rows, int cols, int fan_in, Rng& rng) {
  const float bound = 1.f / std::sqrt(static_cast<float>(fan_in));
  return Tensor::rand_uniform(rows, cols, rng, -bound, bound);
}

struct Dense {
  Var W;  // [in, out]
  Var b;  // [1, out]

  static Dense create(ParamStore& ps, const std::string& name, int in, int out,
                      Rng& rng) {
    Dense d;
    d.W = ps.create(name + ".W", kaiming_uniform(in, out, in, rng));
    d.b = ps.create(name + ".b", kaiming_uniform(1, out, in, rng));
    return d;
  }
  static Dense from(ParamStore& ps, const std::string& name) {
    return Dense{ps.at(name + ".W"), ps.at(name + ".b")};
  }

  Var operator()(const Var& x) const { return add(matmul(x, W), b); }
  int out_dim() const { return W.cols(); }
};

inline int conv_out_len(int T, int kernel, int stride, int pad) {
  return (T + 2 * pad - kernel) / stride + 1;
}

// 1-D convolution over per-stream time series. Input rows are laid out
// (stream, t) with t fastest; channels along columns. Implemented as an
// im2col gather (index -1 = zero pad) followed by a matmul, so its adjoint
// falls out of the primitive vjps.
struct Conv1d {
  int in_ch = 0, out_ch = 0, kernel = 5, stride = 1, pad = 2;
  Var W;  // [kernel*in_ch, out_ch], rows ordered (k, c_in)
  Var b;  // [1, out_ch]

  static Conv1d create(ParamStore& ps, const std::string& name, int in_ch,
                       int out_ch, int kernel, int stride, int pad, Rng& rng) {
    Conv1d c;
    c.in_ch = in_ch;
    c.out_ch = out_ch;
    c.kernel = kernel;
    c.stride = stride;
    c.pad = pad;
    const int fan_in = kernel * in_ch;
    c.W = ps.create(name + ".W", kaiming_uniform(fan_in, out_ch, fan_in, rng));
    c.b = ps.create(name + ".b", kaiming_uniform(1, out_ch, fan_in, rng));
    return c;
  }

  Var operator()(const Var& x, int streams, int T) const {
    if (x.rows() != streams * T || x.cols() != in_ch)
      throw ShapeError("Conv1d: input layout mismatch");
    const int T_out = conv_out_len(T, kernel, stride, pad);
    if (T_out <= 0) throw ShapeError("Conv1d: sequence too short");
    std::vector<int> idx(static_cast<std::size_t>(streams) * T_out * kernel);
    std::size_t w = 0;
    for (int s = 0; s < streams; ++s)
      for (int t = 0; t < T_out; ++t)
        for (int k = 0; k < kernel; ++k) {
          const int tin = t * stride + k - pad;
          idx[w++] = (tin >= 0 && tin < T) ? s * T + tin : -1;
        }
    Var cols = reshape(gather_rows(x, std::move(idx)), streams * T_out,
                       kernel * in_ch);
    return add(matmul(cols, W), b);
  }

  int out_len(int T) const { return conv_out_len(T, kernel, stride, pad); }
};

// Normalizes each row; affine parameters shared across rows.
struct LayerNorm {
  Var gamma, beta;
  float eps = 1e-5f;

  static LayerNorm create(ParamStore& ps, const std::string& name, int dim) {
    LayerNorm ln;
    ln.gamma = ps.create(name + ".gamma", Tensor::full(1, dim, 1.f));
    ln.beta = ps.create(name + ".beta", Tensor::zeros(1, dim));
    return ln;
  }

  Var operator()(const Var& x) const {
    const float inv_c = 1.f / static_cast<float>(x.cols());
    Var mean = mul(sum_cols(x), Var::scalar(inv_c));
    Var centered = sub(x, mean);
    Var var = mul(sum_cols(mul(centered, centered)), Var::scalar(inv_c));
    Var norm = div(centered, sqrt(add(var, Var::scalar(eps))));
    return add(mul(norm, gamma), beta);
  }
};

// Feature-wise linear modulation: out = gamma .* h + beta.
inline Var film(const Var& h, const Var& gamma, const Var& beta) {
  if (gamma.rows() != h.rows() || gamma.cols() != h.cols() ||
      beta.rows() != h.rows() || beta.cols() != h.cols())
    throw ShapeError("film: modulation shape mismatch");
  return add(mul(gamma, h), beta);
}

// Maps a conditioning code to per-feature (gamma, beta). The bias of the
// gamma half starts at 1 so modulation begins as the identity.
struct FilmGenerator {
  Var W;  // [cond_dim, 2*feat]
  Var b;  // [1, 2*feat]
  int feat = 0;

  static FilmGenerator create(ParamStore& ps, const std::string& name,
                              int cond_dim, int feat, Rng& rng) {
    FilmGenerator f;
    f.feat = feat;
    f.W = ps.create(name + ".W",
                    kaiming_uniform(cond_dim, 2 * feat, cond_dim, rng));
    Tensor b0 = Tensor::zeros(1, 2 * feat);
    for (int c = 0; c < feat; ++c) b0(0, c) = 1.f;
    f.b = ps.create(name + ".b", std::move(b0));
    return f;
  }

  // z: [n_cond, cond_dim]. Returns (gamma, beta), each [n_cond, feat].
  std::pair<Var, Var> operator()(const Var& z) const {
    Var gb = add(matmul(z, W), b);
    return {slice_cols(gb, 0, feat), slice_cols(gb, feat, 2 * feat)};
  }
};

// Replicates per-stream rows across the time axis of (stream, t) features.
inline std::vector<int> per_stream_index(int streams, int t) {
  std::vector<int> idx(static_cast<std::size_t>(streams) * t);
  std::size_t w = 0;
  for (int s = 0; s < streams; ++s)
    for (int i = 0; i < t; ++i) idx[w++] = s;
  return idx;
}

// Mean over the time axis for (stream, t) rows.
inline Var temporal_mean(const Var& x, int streams, int T) {
  if (x.rows() != streams * T) throw ShapeError("temporal_mean: layout");
  std::vector<int> idx(static_cast<std::size_t>(streams) * T);
  std::size_t w = 0;
  for (int s = 0; s < streams; ++s)
    for (int t = 0; t < T; ++t) idx[w++] = s;
  return mul(scatter_rows(x, std::move(idx), streams),
             Var::scalar(1.f / static_cast<float>(T)));
}

}  // namespace nn
}  // namespace relpot
