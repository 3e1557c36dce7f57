#pragma once

#include "bimodal/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace bimodal::nets {

enum class Mode { train, eval };
enum class PoolKind { max, average };
enum class GraphKind { acoustic, text };

// Batch of feature maps. Row r = b*height*width + t*width + f holds the
// channel vector at spatial position (t, f) of sample b. Vectors and dense
// activations use height == width == 1 so rows == batch.
template <typename S>
struct MapBatch {
  Matrix<S> data;
  int batch = 0;
  int height = 0;
  int width = 0;

  int channels() const { return static_cast<int>(data.cols()); }
  int spatial() const { return height * width; }
};

template <typename S>
struct Tensor {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;

  void init_zero_grad() { grad = Matrix<S>::Zero(value.rows(), value.cols()); }
};

template <typename S>
void he_uniform_init(Matrix<S>& weights, int fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / fan_in);
  for (Eigen::Index c = 0; c < weights.cols(); ++c)
    for (Eigen::Index r = 0; r < weights.rows(); ++r)
      weights(r, c) = static_cast<S>(rng.uniform(-limit, limit));
}

template <typename S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng* rng) = 0;
  virtual MapBatch<S> backward(const MapBatch<S>& grad_out) = 0;
  virtual std::vector<Tensor<S>*> parameters() { return {}; }
  virtual std::vector<Tensor<S>*> state_tensors() { return {}; }
};

// ---------------------------------------------------------------------------
// 2D convolution, stride 1, zero-padded "same" output, odd kernels.

template <typename S>
class Conv2d : public Layer<S> {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel_h, int kernel_w,
         Rng& rng)
      : in_channels_(in_channels), kernel_h_(kernel_h), kernel_w_(kernel_w) {
    weight_.name = name + ".weight";
    weight_.value.resize(kernel_h * kernel_w * in_channels, out_channels);
    he_uniform_init(weight_.value, kernel_h * kernel_w * in_channels, rng);
    bias_.name = name + ".bias";
    bias_.value = Matrix<S>::Zero(1, out_channels);
  }

  MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng*) override {
    if (x.channels() != in_channels_)
      throw std::invalid_argument("Conv2d: channel mismatch");
    if (mode == Mode::train) input_ = x;
    const int out_channels = static_cast<int>(weight_.value.cols());
    MapBatch<S> y{Matrix<S>(x.data.rows(), out_channels), x.batch, x.height, x.width};
    Matrix<S> patches(x.spatial(), weight_.value.rows());
    for (int b = 0; b < x.batch; ++b) {
      im2col(x, b, patches);
      y.data.middleRows(static_cast<Eigen::Index>(b) * x.spatial(), x.spatial()).noalias() =
          patches * weight_.value;
    }
    y.data.rowwise() += bias_.value.row(0);
    return y;
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    const MapBatch<S>& x = input_;
    weight_.init_zero_grad();
    bias_.init_zero_grad();
    bias_.grad.row(0) = grad_out.data.colwise().sum();
    MapBatch<S> dx{Matrix<S>::Zero(x.data.rows(), x.data.cols()), x.batch, x.height, x.width};
    Matrix<S> patches(x.spatial(), weight_.value.rows());
    Matrix<S> dpatches(x.spatial(), weight_.value.rows());
    for (int b = 0; b < x.batch; ++b) {
      im2col(x, b, patches);
      const auto dy =
          grad_out.data.middleRows(static_cast<Eigen::Index>(b) * x.spatial(), x.spatial());
      weight_.grad.noalias() += patches.transpose() * dy;
      dpatches.noalias() = dy * weight_.value.transpose();
      col2im(dpatches, b, dx);
    }
    return dx;
  }

  std::vector<Tensor<S>*> parameters() override { return {&weight_, &bias_}; }

 private:
  void im2col(const MapBatch<S>& x, int b, Matrix<S>& patches) const {
    patches.setZero();
    const int height = x.height, width = x.width, cin = in_channels_;
    const int pad_h = (kernel_h_ - 1) / 2, pad_w = (kernel_w_ - 1) / 2;
    const Eigen::Index base = static_cast<Eigen::Index>(b) * x.spatial();
    for (int dt = 0; dt < kernel_h_; ++dt) {
      for (int df = 0; df < kernel_w_; ++df) {
        const int col0 = (dt * kernel_w_ + df) * cin;
        const int f_shift = df - pad_w;
        const int f_lo = std::max(0, -f_shift);
        const int f_hi = std::min(width, width - f_shift);
        if (f_lo >= f_hi) continue;
        for (int t = 0; t < height; ++t) {
          const int src_t = t + dt - pad_h;
          if (src_t < 0 || src_t >= height) continue;
          patches.block(static_cast<Eigen::Index>(t) * width + f_lo, col0, f_hi - f_lo, cin) =
              x.data.block(base + static_cast<Eigen::Index>(src_t) * width + f_lo + f_shift, 0,
                           f_hi - f_lo, cin);
        }
      }
    }
  }

  void col2im(const Matrix<S>& dpatches, int b, MapBatch<S>& dx) const {
    const int height = dx.height, width = dx.width, cin = in_channels_;
    const int pad_h = (kernel_h_ - 1) / 2, pad_w = (kernel_w_ - 1) / 2;
    const Eigen::Index base = static_cast<Eigen::Index>(b) * dx.spatial();
    for (int dt = 0; dt < kernel_h_; ++dt) {
      for (int df = 0; df < kernel_w_; ++df) {
        const int col0 = (dt * kernel_w_ + df) * cin;
        const int f_shift = df - pad_w;
        const int f_lo = std::max(0, -f_shift);
        const int f_hi = std::min(width, width - f_shift);
        if (f_lo >= f_hi) continue;
        for (int t = 0; t < height; ++t) {
          const int src_t = t + dt - pad_h;
          if (src_t < 0 || src_t >= height) continue;
          dx.data.block(base + static_cast<Eigen::Index>(src_t) * width + f_lo + f_shift, 0,
                        f_hi - f_lo, cin) +=
              dpatches.block(static_cast<Eigen::Index>(t) * width + f_lo, col0, f_hi - f_lo, cin);
        }
      }
    }
  }

  int in_channels_, kernel_h_, kernel_w_;
  Tensor<S> weight_, bias_;
  MapBatch<S> input_;
};

// ---------------------------------------------------------------------------
// Per-channel batch normalization over batch and spatial positions.

template <typename S>
class BatchNorm : public Layer<S> {
 public:
  BatchNorm(std::string name, int channels, double momentum = 0.99)
      : momentum_(static_cast<S>(momentum)) {
    gamma_.name = name + ".gamma";
    gamma_.value = Matrix<S>::Ones(1, channels);
    beta_.name = name + ".beta";
    beta_.value = Matrix<S>::Zero(1, channels);
    running_mean_.name = name + ".running_mean";
    running_mean_.value = Matrix<S>::Zero(1, channels);
    running_var_.name = name + ".running_var";
    running_var_.value = Matrix<S>::Ones(1, channels);
  }

  MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng*) override {
    MapBatch<S> y{Matrix<S>(x.data.rows(), x.data.cols()), x.batch, x.height, x.width};
    if (mode == Mode::train) {
      const auto n = static_cast<S>(x.data.rows());
      const Matrix<S> mean = x.data.colwise().mean();
      Matrix<S> centered = x.data.rowwise() - mean.row(0);
      const Matrix<S> var = (centered.array().square().colwise().sum() / n).matrix();
      inv_std_ = (var.array() + kEps).rsqrt().matrix();
      xhat_ = (centered.array().rowwise() * inv_std_.row(0).array()).matrix();
      y.data = (xhat_.array().rowwise() * gamma_.value.row(0).array()).matrix();
      y.data.rowwise() += beta_.value.row(0);
      if (warm_) {
        // First batch seeds the running statistics; with momentum 0.99 a
        // (0, 1) start would otherwise leave eval mode mis-normalized for
        // hundreds of updates.
        running_mean_.value = mean;
        running_var_.value = var;
        warm_ = false;
      } else {
        running_mean_.value = momentum_ * running_mean_.value + (S(1) - momentum_) * mean;
        running_var_.value = momentum_ * running_var_.value + (S(1) - momentum_) * var;
      }
    } else {
      const Matrix<S> scale =
          ((running_var_.value.array() + kEps).rsqrt() * gamma_.value.array()).matrix();
      Matrix<S> centered = x.data.rowwise() - running_mean_.value.row(0);
      y.data = (centered.array().rowwise() * scale.row(0).array()).matrix();
      y.data.rowwise() += beta_.value.row(0);
    }
    return y;
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    gamma_.init_zero_grad();
    beta_.init_zero_grad();
    const auto n = static_cast<S>(grad_out.data.rows());
    gamma_.grad.row(0) = (grad_out.data.array() * xhat_.array()).colwise().sum();
    beta_.grad.row(0) = grad_out.data.colwise().sum();

    // dx = inv_std/N * (N*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
    const Matrix<S> dxhat =
        (grad_out.data.array().rowwise() * gamma_.value.row(0).array()).matrix();
    const Matrix<S> sum_dxhat = dxhat.colwise().sum();
    const Matrix<S> sum_dxhat_xhat = ((dxhat.array() * xhat_.array()).colwise().sum()).matrix();
    MapBatch<S> dx{Matrix<S>(), grad_out.batch, grad_out.height, grad_out.width};
    Matrix<S> tmp = dxhat * n;
    tmp.rowwise() -= sum_dxhat.row(0);
    tmp.array() -= xhat_.array().rowwise() * sum_dxhat_xhat.row(0).array();
    tmp.array().rowwise() *= (inv_std_.row(0).array() / n);
    dx.data = std::move(tmp);
    return dx;
  }

  std::vector<Tensor<S>*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Tensor<S>*> state_tensors() override { return {&running_mean_, &running_var_}; }

 private:
  static constexpr S kEps = static_cast<S>(1e-5);
  S momentum_;
  bool warm_ = true;
  Tensor<S> gamma_, beta_, running_mean_, running_var_;
  Matrix<S> xhat_, inv_std_;
};

template <typename S>
class Relu : public Layer<S> {
 public:
  MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng*) override {
    MapBatch<S> y = x;
    y.data = y.data.cwiseMax(S(0));
    if (mode == Mode::train) mask_ = (x.data.array() > S(0)).template cast<S>().matrix();
    return y;
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    MapBatch<S> dx = grad_out;
    dx.data.array() *= mask_.array();
    return dx;
  }

 private:
  Matrix<S> mask_;
};

// ---------------------------------------------------------------------------
// Non-overlapping pooling with stride = pool size; trailing remainders are
// dropped (floor semantics).

template <typename S>
class Pool2d : public Layer<S> {
 public:
  Pool2d(int pool_t, int pool_f, PoolKind kind) : pool_t_(pool_t), pool_f_(pool_f), kind_(kind) {}

  MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng*) override {
    const int out_h = x.height / pool_t_;
    const int out_w = x.width / pool_f_;
    const int channels = x.channels();
    MapBatch<S> y{Matrix<S>(static_cast<Eigen::Index>(x.batch) * out_h * out_w, channels),
                  x.batch, out_h, out_w};
    const bool keep = mode == Mode::train;
    if (keep) {
      argmax_.resize(y.data.rows(), channels);
      in_rows_ = x.data.rows();
      in_height_ = x.height;
      in_width_ = x.width;
    }
    for (int b = 0; b < x.batch; ++b) {
      const Eigen::Index in_base = static_cast<Eigen::Index>(b) * x.spatial();
      const Eigen::Index out_base = static_cast<Eigen::Index>(b) * out_h * out_w;
      for (int ot = 0; ot < out_h; ++ot) {
        for (int of = 0; of < out_w; ++of) {
          const Eigen::Index out_row = out_base + static_cast<Eigen::Index>(ot) * out_w + of;
          for (int c = 0; c < channels; ++c) {
            if (kind_ == PoolKind::max) {
              S best = std::numeric_limits<S>::lowest();
              Eigen::Index best_row = -1;
              for (int i = 0; i < pool_t_; ++i) {
                const Eigen::Index row0 =
                    in_base + static_cast<Eigen::Index>(ot * pool_t_ + i) * x.width + of * pool_f_;
                for (int j = 0; j < pool_f_; ++j) {
                  const S v = x.data(row0 + j, c);
                  if (v > best) {
                    best = v;
                    best_row = row0 + j;
                  }
                }
              }
              y.data(out_row, c) = best;
              if (keep) argmax_(out_row, c) = best_row;
            } else {
              S acc = S(0);
              for (int i = 0; i < pool_t_; ++i) {
                const Eigen::Index row0 =
                    in_base + static_cast<Eigen::Index>(ot * pool_t_ + i) * x.width + of * pool_f_;
                for (int j = 0; j < pool_f_; ++j) acc += x.data(row0 + j, c);
              }
              y.data(out_row, c) = acc / static_cast<S>(pool_t_ * pool_f_);
            }
          }
        }
      }
    }
    return y;
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    MapBatch<S> dx{Matrix<S>::Zero(in_rows_, grad_out.data.cols()), grad_out.batch, in_height_,
                   in_width_};
    const int channels = grad_out.channels();
    if (kind_ == PoolKind::max) {
      for (Eigen::Index r = 0; r < grad_out.data.rows(); ++r)
        for (int c = 0; c < channels; ++c) dx.data(argmax_(r, c), c) += grad_out.data(r, c);
    } else {
      const S scale = S(1) / static_cast<S>(pool_t_ * pool_f_);
      const int out_w = grad_out.width, out_h = grad_out.height;
      for (int b = 0; b < grad_out.batch; ++b) {
        const Eigen::Index in_base = static_cast<Eigen::Index>(b) * in_height_ * in_width_;
        const Eigen::Index out_base = static_cast<Eigen::Index>(b) * out_h * out_w;
        for (int ot = 0; ot < out_h; ++ot)
          for (int of = 0; of < out_w; ++of) {
            const Eigen::Index out_row = out_base + static_cast<Eigen::Index>(ot) * out_w + of;
            for (int i = 0; i < pool_t_; ++i) {
              const Eigen::Index row0 =
                  in_base + static_cast<Eigen::Index>(ot * pool_t_ + i) * in_width_ + of * pool_f_;
              for (int j = 0; j < pool_f_; ++j)
                dx.data.row(row0 + j) += grad_out.data.row(out_row) * scale;
            }
          }
      }
    }
    return dx;
  }

 private:
  int pool_t_, pool_f_;
  PoolKind kind_;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> argmax_;
  Eigen::Index in_rows_ = 0;
  int in_height_ = 0, in_width_ = 0;
};

// Inverted dropout; identity in eval mode and when rate == 0.
template <typename S>
class Dropout : public Layer<S> {
 public:
  explicit Dropout(double rate) : rate_(rate) {}

  MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng* rng) override {
    if (mode == Mode::eval || rate_ <= 0.0) {
      active_ = false;
      return x;
    }
    if (!rng) throw std::invalid_argument("Dropout: train-mode forward needs an Rng");
    active_ = true;
    const S keep_inv = static_cast<S>(1.0 / (1.0 - rate_));
    mask_.resize(x.data.rows(), x.data.cols());
    for (Eigen::Index r = 0; r < mask_.rows(); ++r)
      for (Eigen::Index c = 0; c < mask_.cols(); ++c)
        mask_(r, c) = rng->bernoulli(rate_) ? S(0) : keep_inv;
    MapBatch<S> y = x;
    y.data.array() *= mask_.array();
    return y;
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    if (!active_) return grad_out;
    MapBatch<S> dx = grad_out;
    dx.data.array() *= mask_.array();
    return dx;
  }

 private:
  double rate_;
  bool active_ = false;
  Matrix<S> mask_;
};

// (batch, h, w, c) -> (batch, 1, 1, h*w*c), sample-major row-major order.
template <typename S>
class Flatten : public Layer<S> {
 public:
  MapBatch<S> forward(const MapBatch<S>& x, Mode, Rng*) override {
    in_height_ = x.height;
    in_width_ = x.width;
    const int channels = x.channels();
    const int dim = x.spatial() * channels;
    MapBatch<S> y{Matrix<S>(x.batch, dim), x.batch, 1, 1};
    for (int b = 0; b < x.batch; ++b)
      for (int p = 0; p < x.spatial(); ++p)
        y.data.block(b, static_cast<Eigen::Index>(p) * channels, 1, channels) =
            x.data.row(static_cast<Eigen::Index>(b) * x.spatial() + p);
    return y;
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    const int spatial = in_height_ * in_width_;
    const int channels = static_cast<int>(grad_out.data.cols()) / spatial;
    MapBatch<S> dx{Matrix<S>(static_cast<Eigen::Index>(grad_out.batch) * spatial, channels),
                   grad_out.batch, in_height_, in_width_};
    for (int b = 0; b < grad_out.batch; ++b)
      for (int p = 0; p < spatial; ++p)
        dx.data.row(static_cast<Eigen::Index>(b) * spatial + p) =
            grad_out.data.block(b, static_cast<Eigen::Index>(p) * channels, 1, channels);
    return dx;
  }

 private:
  int in_height_ = 0, in_width_ = 0;
};

template <typename S>
class Dense : public Layer<S> {
 public:
  // init_scale < 1 shrinks the He-uniform draw; the classification head uses
  // it so initial logits stay near-uniform.
  Dense(std::string name, int in_dim, int out_dim, Rng& rng, double init_scale = 1.0) {
    weight_.name = name + ".weight";
    weight_.value.resize(in_dim, out_dim);
    he_uniform_init(weight_.value, in_dim, rng);
    if (init_scale != 1.0) weight_.value *= static_cast<S>(init_scale);
    bias_.name = name + ".bias";
    bias_.value = Matrix<S>::Zero(1, out_dim);
  }

  MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng*) override {
    if (mode == Mode::train) input_ = x.data;
    MapBatch<S> y{Matrix<S>(), x.batch, 1, 1};
    y.data.noalias() = x.data * weight_.value;
    y.data.rowwise() += bias_.value.row(0);
    return y;
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    weight_.init_zero_grad();
    bias_.init_zero_grad();
    weight_.grad.noalias() = input_.transpose() * grad_out.data;
    bias_.grad.row(0) = grad_out.data.colwise().sum();
    MapBatch<S> dx{Matrix<S>(), grad_out.batch, 1, 1};
    dx.data.noalias() = grad_out.data * weight_.value.transpose();
    return dx;
  }

  std::vector<Tensor<S>*> parameters() override { return {&weight_, &bias_}; }

 private:
  Tensor<S> weight_, bias_;
  Matrix<S> input_;
};

// ---------------------------------------------------------------------------
// 1D convolution over the time axis (width == 1), zero-padded "same" output
// of length ceil(L / stride).

template <typename S>
class Conv1d : public Layer<S> {
 public:
  Conv1d(std::string name, int in_channels, int out_channels, int kernel, int stride, Rng& rng)
      : in_channels_(in_channels), kernel_(kernel), stride_(stride) {
    weight_.name = name + ".weight";
    weight_.value.resize(kernel * in_channels, out_channels);
    he_uniform_init(weight_.value, kernel * in_channels, rng);
    bias_.name = name + ".bias";
    bias_.value = Matrix<S>::Zero(1, out_channels);
  }

  static int output_length(int in_length, int stride) {
    return (in_length + stride - 1) / stride;
  }

  MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng*) override {
    if (x.width != 1 || x.channels() != in_channels_)
      throw std::invalid_argument("Conv1d: input shape mismatch");
    if (mode == Mode::train) input_ = x;
    const int out_len = output_length(x.height, stride_);
    const int out_channels = static_cast<int>(weight_.value.cols());
    MapBatch<S> y{Matrix<S>(static_cast<Eigen::Index>(x.batch) * out_len, out_channels),
                  x.batch, out_len, 1};
    Matrix<S> patches(out_len, weight_.value.rows());
    for (int b = 0; b < x.batch; ++b) {
      im2col(x, b, out_len, patches);
      y.data.middleRows(static_cast<Eigen::Index>(b) * out_len, out_len).noalias() =
          patches * weight_.value;
    }
    y.data.rowwise() += bias_.value.row(0);
    return y;
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    const MapBatch<S>& x = input_;
    weight_.init_zero_grad();
    bias_.init_zero_grad();
    bias_.grad.row(0) = grad_out.data.colwise().sum();
    const int out_len = grad_out.height;
    MapBatch<S> dx{Matrix<S>::Zero(x.data.rows(), x.data.cols()), x.batch, x.height, 1};
    Matrix<S> patches(out_len, weight_.value.rows());
    Matrix<S> dpatches(out_len, weight_.value.rows());
    const int pad_left = this->pad_left(x.height, out_len);
    for (int b = 0; b < x.batch; ++b) {
      im2col(x, b, out_len, patches);
      const auto dy = grad_out.data.middleRows(static_cast<Eigen::Index>(b) * out_len, out_len);
      weight_.grad.noalias() += patches.transpose() * dy;
      dpatches.noalias() = dy * weight_.value.transpose();
      const Eigen::Index in_base = static_cast<Eigen::Index>(b) * x.height;
      for (int ot = 0; ot < out_len; ++ot)
        for (int dk = 0; dk < kernel_; ++dk) {
          const int src = ot * stride_ + dk - pad_left;
          if (src < 0 || src >= x.height) continue;
          dx.data.row(in_base + src) +=
              dpatches.block(ot, static_cast<Eigen::Index>(dk) * in_channels_, 1, in_channels_);
        }
    }
    return dx;
  }

  std::vector<Tensor<S>*> parameters() override { return {&weight_, &bias_}; }

 private:
  int pad_left(int in_len, int out_len) const {
    const int pad_total = std::max(0, (out_len - 1) * stride_ + kernel_ - in_len);
    return pad_total / 2;
  }

  void im2col(const MapBatch<S>& x, int b, int out_len, Matrix<S>& patches) const {
    patches.setZero();
    const int pad = pad_left(x.height, out_len);
    const Eigen::Index in_base = static_cast<Eigen::Index>(b) * x.height;
    for (int ot = 0; ot < out_len; ++ot)
      for (int dk = 0; dk < kernel_; ++dk) {
        const int src = ot * stride_ + dk - pad;
        if (src < 0 || src >= x.height) continue;
        patches.block(ot, static_cast<Eigen::Index>(dk) * in_channels_, 1, in_channels_) =
            x.data.row(in_base + src);
      }
  }

  int in_channels_, kernel_, stride_;
  Tensor<S> weight_, bias_;
  MapBatch<S> input_;
};

// ---------------------------------------------------------------------------
// Single-layer LSTM returning the final hidden state. Gate order i, f, g, o;
// forget-gate bias starts at 1.

template <typename S>
class Lstm : public Layer<S> {
 public:
  Lstm(std::string name, int in_dim, int hidden, Rng& rng) : in_dim_(in_dim), hidden_(hidden) {
    wx_.name = name + ".wx";
    wx_.value.resize(in_dim, 4 * hidden);
    he_uniform_init(wx_.value, in_dim, rng);
    wh_.name = name + ".wh";
    wh_.value.resize(hidden, 4 * hidden);
    he_uniform_init(wh_.value, hidden, rng);
    bias_.name = name + ".bias";
    bias_.value = Matrix<S>::Zero(1, 4 * hidden);
    bias_.value.block(0, hidden, 1, hidden).setOnes();  // forget gate
  }

  MapBatch<S> forward(const MapBatch<S>& x, Mode mode, Rng*) override {
    if (x.width != 1 || x.channels() != in_dim_)
      throw std::invalid_argument("Lstm: input shape mismatch");
    const int batch = x.batch, steps = x.height, h = hidden_;
    Matrix<S> h_prev = Matrix<S>::Zero(batch, h);
    Matrix<S> c_prev = Matrix<S>::Zero(batch, h);
    const bool keep = mode == Mode::train;
    if (keep) {
      input_ = x;
      gates_.assign(static_cast<size_t>(steps), Matrix<S>());
      cells_.assign(static_cast<size_t>(steps), Matrix<S>());
      tanh_cells_.assign(static_cast<size_t>(steps), Matrix<S>());
      hiddens_.assign(static_cast<size_t>(steps), Matrix<S>());
    }
    Matrix<S> xt(batch, in_dim_);
    for (int t = 0; t < steps; ++t) {
      for (int b = 0; b < batch; ++b)
        xt.row(b) = x.data.row(static_cast<Eigen::Index>(b) * steps + t);
      Matrix<S> z = xt * wx_.value + h_prev * wh_.value;
      z.rowwise() += bias_.value.row(0);
      Matrix<S> gates(batch, 4 * h);
      gates.block(0, 0, batch, h) = sigmoid(z.block(0, 0, batch, h));
      gates.block(0, h, batch, h) = sigmoid(z.block(0, h, batch, h));
      gates.block(0, 2 * h, batch, h) = z.block(0, 2 * h, batch, h).array().tanh().matrix();
      gates.block(0, 3 * h, batch, h) = sigmoid(z.block(0, 3 * h, batch, h));
      const Matrix<S> c = (gates.block(0, h, batch, h).array() * c_prev.array() +
                           gates.block(0, 0, batch, h).array() *
                               gates.block(0, 2 * h, batch, h).array())
                              .matrix();
      const Matrix<S> tanh_c = c.array().tanh().matrix();
      const Matrix<S> h_now =
          (gates.block(0, 3 * h, batch, h).array() * tanh_c.array()).matrix();
      if (keep) {
        gates_[static_cast<size_t>(t)] = gates;
        cells_[static_cast<size_t>(t)] = c;
        tanh_cells_[static_cast<size_t>(t)] = tanh_c;
        hiddens_[static_cast<size_t>(t)] = h_now;
      }
      h_prev = h_now;
      c_prev = c;
    }
    return MapBatch<S>{h_prev, batch, 1, 1};
  }

  MapBatch<S> backward(const MapBatch<S>& grad_out) override {
    const MapBatch<S>& x = input_;
    const int batch = x.batch, steps = x.height, h = hidden_;
    wx_.init_zero_grad();
    wh_.init_zero_grad();
    bias_.init_zero_grad();
    MapBatch<S> dx{Matrix<S>::Zero(x.data.rows(), x.data.cols()), batch, steps, 1};
    Matrix<S> dh = grad_out.data;  // only the final hidden state feeds the head
    Matrix<S> dc = Matrix<S>::Zero(batch, h);
    Matrix<S> xt(batch, in_dim_);
    for (int t = steps - 1; t >= 0; --t) {
      const auto& gates = gates_[static_cast<size_t>(t)];
      const auto i = gates.block(0, 0, batch, h).array();
      const auto f = gates.block(0, h, batch, h).array();
      const auto g = gates.block(0, 2 * h, batch, h).array();
      const auto o = gates.block(0, 3 * h, batch, h).array();
      const auto tanh_c = tanh_cells_[static_cast<size_t>(t)].array();
      dc.array() += dh.array() * o * (S(1) - tanh_c.square());
      Matrix<S> dz(batch, 4 * h);
      dz.block(0, 0, batch, h) = (dc.array() * g * i * (S(1) - i)).matrix();
      using ArrayXX = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;
      const ArrayXX c_before = t > 0 ? ArrayXX(cells_[static_cast<size_t>(t) - 1].array())
                                     : ArrayXX(ArrayXX::Zero(batch, h));
      dz.block(0, h, batch, h) = (dc.array() * c_before * f * (S(1) - f)).matrix();
      dz.block(0, 2 * h, batch, h) = (dc.array() * i * (S(1) - g.square())).matrix();
      dz.block(0, 3 * h, batch, h) = (dh.array() * tanh_c * o * (S(1) - o)).matrix();

      for (int b = 0; b < batch; ++b)
        xt.row(b) = x.data.row(static_cast<Eigen::Index>(b) * steps + t);
      wx_.grad.noalias() += xt.transpose() * dz;
      if (t > 0) wh_.grad.noalias() += hiddens_[static_cast<size_t>(t) - 1].transpose() * dz;
      bias_.grad.row(0) += dz.colwise().sum();
      const Matrix<S> dxt = dz * wx_.value.transpose();
      for (int b = 0; b < batch; ++b)
        dx.data.row(static_cast<Eigen::Index>(b) * steps + t) = dxt.row(b);
      dh.noalias() = dz * wh_.value.transpose();
      dc.array() *= f;
    }
    return dx;
  }

  std::vector<Tensor<S>*> parameters() override { return {&wx_, &wh_, &bias_}; }

 private:
  static Matrix<S> sigmoid(const Matrix<S>& z) {
    return z.unaryExpr([](S v) {
      if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
      const S e = std::exp(v);
      return e / (S(1) + e);
    });
  }

  int in_dim_, hidden_;
  Tensor<S> wx_, wh_, bias_;
  MapBatch<S> input_;
  std::vector<Matrix<S>> gates_, cells_, tanh_cells_, hiddens_;
};

// ---------------------------------------------------------------------------
// Model specifications.

struct ConvBlockSpec {
  int filters = 32;
  int kernel_h = 3, kernel_w = 3;
  int pool_t = 2, pool_f = 2;  // pool_t == 0 on the last block: collapse time
  double dropout_rate = 0.3;
};

struct AcousticModelSpec {
  std::vector<ConvBlockSpec> blocks;
  std::vector<int> dense_sizes;
  int num_classes = kNumClasses;
  PoolKind collapse_pool = PoolKind::max;

  // Three blocks of 64/32/30 filters, dense 128 and 64.
  static AcousticModelSpec switchboard() {
    AcousticModelSpec spec;
    spec.blocks = {{64, 3, 3, 2, 2, 0.3}, {32, 3, 3, 2, 2, 0.3}, {30, 3, 3, 0, 2, 0.3}};
    spec.dense_sizes = {128, 64};
    return spec;
  }

  // One block of 32 filters, dense 32.
  static AcousticModelSpec iemocap() {
    AcousticModelSpec spec;
    spec.blocks = {{32, 3, 3, 0, 2, 0.3}};
    spec.dense_sizes = {32};
    return spec;
  }

  // Small model for desk-scale synthetic runs.
  static AcousticModelSpec compact() {
    AcousticModelSpec spec;
    spec.blocks = {{8, 3, 3, 0, 2, 0.3}};
    spec.dense_sizes = {32};
    return spec;
  }
};

struct TextModelSpec {
  std::vector<int> conv_filters = {32, 64, 128};
  int kernel_size = 4;
  int stride = 2;
  int lstm_units = 128;
  int num_classes = kNumClasses;
};

nlohmann::json to_json(const AcousticModelSpec& spec);
AcousticModelSpec acoustic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TextModelSpec& spec);
TextModelSpec text_spec_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Declarative layer stack with forward and penultimate-feature evaluation.
// The final layer is always the linear classification head; the penultimate
// vector is that layer's input.

template <typename S>
struct ModelGraph {
  GraphKind kind = GraphKind::acoustic;
  nlohmann::json spec_json;  // kind, spec, input shape, seed
  std::vector<std::unique_ptr<Layer<S>>> layers;
  int input_height = 0, input_width = 0, input_channels = 1;
  int penultimate_dim = 0;
  int num_classes = kNumClasses;
  uint64_t seed = 0;

  std::vector<Tensor<S>*> parameters() {
    std::vector<Tensor<S>*> out;
    for (auto& layer : layers)
      for (auto* t : layer->parameters()) out.push_back(t);
    return out;
  }

  std::vector<Tensor<S>*> state_tensors() {
    std::vector<Tensor<S>*> out;
    for (auto& layer : layers)
      for (auto* t : layer->state_tensors()) out.push_back(t);
    return out;
  }

  std::vector<Tensor<S>*> saved_tensors() {
    auto out = parameters();
    for (auto* t : state_tensors()) out.push_back(t);
    return out;
  }
};

template <typename S>
struct ForwardResult {
  Matrix<S> logits;       // batch x num_classes
  Matrix<S> penultimate;  // batch x penultimate_dim
};

template <typename S>
ForwardResult<S> forward(ModelGraph<S>& graph, const MapBatch<S>& input, Mode mode,
                         Rng* rng = nullptr) {
  if (input.height != graph.input_height || input.width != graph.input_width ||
      input.channels() != graph.input_channels)
    throw std::invalid_argument("forward: input shape does not match graph");
  if (mode == Mode::train && !rng)
    throw std::invalid_argument("forward: train mode needs an Rng");
  MapBatch<S> x = input;
  ForwardResult<S> result;
  for (size_t i = 0; i < graph.layers.size(); ++i) {
    if (i + 1 == graph.layers.size()) result.penultimate = x.data;
    x = graph.layers[i]->forward(x, mode, rng);
  }
  result.logits = std::move(x.data);
  return result;
}

// Walks the stack in reverse after a train-mode forward; parameter gradients
// land in each tensor's grad.
template <typename S>
void backward(ModelGraph<S>& graph, const Matrix<S>& dlogits) {
  MapBatch<S> g{dlogits, static_cast<int>(dlogits.rows()), 1, 1};
  for (auto it = graph.layers.rbegin(); it != graph.layers.rend(); ++it) g = (*it)->backward(g);
}

// Blocks are conv-bn-relu twice, then pool and dropout. The last block's
// time pool spans the whole remaining time axis so exactly one temporal
// position survives.
template <typename S>
ModelGraph<S> build_acoustic(const AcousticModelSpec& spec, int input_height, int input_width,
                             uint64_t seed) {
  if (spec.blocks.empty()) throw std::invalid_argument("build_acoustic: no blocks");
  if (spec.num_classes != kNumClasses)
    throw std::invalid_argument("build_acoustic: num_classes must be 3");
  ModelGraph<S> graph;
  graph.kind = GraphKind::acoustic;
  graph.seed = seed;
  graph.input_height = input_height;
  graph.input_width = input_width;
  graph.input_channels = 1;
  graph.num_classes = spec.num_classes;
  Rng rng(seed);

  int height = input_height, width = input_width, channels = 1;
  for (size_t i = 0; i < spec.blocks.size(); ++i) {
    const auto& block = spec.blocks[i];
    const bool last = i + 1 == spec.blocks.size();
    if (block.filters < 1) throw std::invalid_argument("build_acoustic: filters must be >= 1");
    if (block.kernel_h % 2 == 0 || block.kernel_w % 2 == 0)
      throw std::invalid_argument("build_acoustic: kernels must be odd for same padding");
    const std::string prefix = "block" + std::to_string(i);
    graph.layers.push_back(std::make_unique<Conv2d<S>>(prefix + ".conv1", channels,
                                                       block.filters, block.kernel_h,
                                                       block.kernel_w, rng));
    graph.layers.push_back(std::make_unique<BatchNorm<S>>(prefix + ".bn1", block.filters));
    graph.layers.push_back(std::make_unique<Relu<S>>());
    graph.layers.push_back(std::make_unique<Conv2d<S>>(prefix + ".conv2", block.filters,
                                                       block.filters, block.kernel_h,
                                                       block.kernel_w, rng));
    graph.layers.push_back(std::make_unique<BatchNorm<S>>(prefix + ".bn2", block.filters));
    graph.layers.push_back(std::make_unique<Relu<S>>());
    channels = block.filters;

    int pool_t = block.pool_t;
    if (last) {
      if (pool_t == 0) pool_t = height;
      else if (pool_t != height)
        throw std::invalid_argument(
            "build_acoustic: last block's pool_t must cover the remaining time axis (" +
            std::to_string(height) + "), got " + std::to_string(pool_t));
    } else if (pool_t == 0) {
      throw std::invalid_argument("build_acoustic: only the last block may auto-collapse time");
    }
    if (pool_t < 1 || block.pool_f < 1 || pool_t > height || block.pool_f > width)
      throw std::invalid_argument("build_acoustic: pooling reduces a dimension below 1");
    graph.layers.push_back(std::make_unique<Pool2d<S>>(
        pool_t, block.pool_f, last ? spec.collapse_pool : PoolKind::max));
    height /= pool_t;
    width /= block.pool_f;
    if (block.dropout_rate < 0.0 || block.dropout_rate >= 1.0)
      throw std::invalid_argument("build_acoustic: dropout_rate must be in [0, 1)");
    graph.layers.push_back(std::make_unique<Dropout<S>>(block.dropout_rate));
  }

  graph.layers.push_back(std::make_unique<Flatten<S>>());
  int dim = height * width * channels;
  for (size_t i = 0; i < spec.dense_sizes.size(); ++i) {
    const int out_dim = spec.dense_sizes[i];
    if (out_dim < 1) throw std::invalid_argument("build_acoustic: dense size must be >= 1");
    graph.layers.push_back(
        std::make_unique<Dense<S>>("dense" + std::to_string(i), dim, out_dim, rng));
    graph.layers.push_back(std::make_unique<Relu<S>>());
    dim = out_dim;
  }
  graph.penultimate_dim = dim;
  graph.layers.push_back(
      std::make_unique<Dense<S>>("classifier", dim, spec.num_classes, rng, 0.1));

  graph.spec_json = {{"kind", "acoustic"},
                     {"spec", to_json(spec)},
                     {"input", {{"height", input_height}, {"width", input_width}}},
                     {"seed", seed}};
  return graph;
}

template <typename S>
ModelGraph<S> build_text(const TextModelSpec& spec, int max_tokens, int embed_dim,
                         uint64_t seed) {
  if (spec.conv_filters.empty()) throw std::invalid_argument("build_text: no conv layers");
  if (spec.kernel_size <= spec.stride)
    throw std::invalid_argument("build_text: kernel_size must exceed stride");
  if (spec.stride < 1) throw std::invalid_argument("build_text: stride must be >= 1");
  if (spec.lstm_units < 1) throw std::invalid_argument("build_text: lstm_units must be >= 1");
  if (spec.num_classes != kNumClasses)
    throw std::invalid_argument("build_text: num_classes must be 3");
  int min_tokens = 1;
  for (size_t i = 0; i < spec.conv_filters.size(); ++i) min_tokens *= spec.stride;
  if (max_tokens < min_tokens)
    throw std::invalid_argument("build_text: max_tokens must be >= " +
                                std::to_string(min_tokens));

  ModelGraph<S> graph;
  graph.kind = GraphKind::text;
  graph.seed = seed;
  graph.input_height = max_tokens;
  graph.input_width = 1;
  graph.input_channels = embed_dim;
  graph.num_classes = spec.num_classes;
  Rng rng(seed);

  int channels = embed_dim;
  for (size_t i = 0; i < spec.conv_filters.size(); ++i) {
    graph.layers.push_back(std::make_unique<Conv1d<S>>("conv" + std::to_string(i), channels,
                                                       spec.conv_filters[i], spec.kernel_size,
                                                       spec.stride, rng));
    graph.layers.push_back(std::make_unique<Relu<S>>());
    channels = spec.conv_filters[i];
  }
  graph.layers.push_back(std::make_unique<Lstm<S>>("lstm", channels, spec.lstm_units, rng));
  graph.penultimate_dim = spec.lstm_units;
  graph.layers.push_back(
      std::make_unique<Dense<S>>("classifier", spec.lstm_units, spec.num_classes, rng, 0.1));

  graph.spec_json = {{"kind", "text"},
                     {"spec", to_json(spec)},
                     {"input", {{"max_tokens", max_tokens}, {"dim", embed_dim}}},
                     {"seed", seed}};
  return graph;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic, version, JSON header (spec + tensor directory), then
// row-major little-endian float32 payloads. Float graphs round-trip
// bit-exactly.

namespace detail {

inline void append_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline uint64_t read_u64_le(const std::string& bytes, size_t pos) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  return v;
}

}  // namespace detail

template <typename S>
std::string save_checkpoint_bytes(ModelGraph<S>& graph) {
  nlohmann::json header = graph.spec_json;
  nlohmann::json tensors = nlohmann::json::array();
  const auto saved = graph.saved_tensors();
  for (const auto* t : saved)
    tensors.push_back({{"name", t->name},
                       {"rows", static_cast<int64_t>(t->value.rows())},
                       {"cols", static_cast<int64_t>(t->value.cols())}});
  header["tensors"] = tensors;
  const std::string header_text = header.dump();

  std::string out = "BMCK";
  detail::append_u64_le(out, 1);
  detail::append_u64_le(out, header_text.size());
  out += header_text;
  for (const auto* t : saved) {
    for (Eigen::Index r = 0; r < t->value.rows(); ++r)
      for (Eigen::Index c = 0; c < t->value.cols(); ++c) {
        const auto v = static_cast<float>(t->value(r, c));
        char bytes[4];
        std::memcpy(bytes, &v, 4);
        out.append(bytes, 4);
      }
  }
  return out;
}

template <typename S>
ModelGraph<S> load_checkpoint_bytes(const std::string& bytes) {
  if (bytes.size() < 20 || bytes.compare(0, 4, "BMCK") != 0)
    throw std::runtime_error("load_checkpoint: bad magic");
  const uint64_t version = detail::read_u64_le(bytes, 4);
  if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
  const uint64_t header_len = detail::read_u64_le(bytes, 12);
  if (20 + header_len > bytes.size()) throw std::runtime_error("load_checkpoint: truncated");
  const nlohmann::json header = nlohmann::json::parse(bytes.substr(20, header_len));

  ModelGraph<S> graph;
  const std::string kind = header.at("kind").get<std::string>();
  const uint64_t seed = header.at("seed").get<uint64_t>();
  if (kind == "acoustic") {
    graph = build_acoustic<S>(acoustic_spec_from_json(header.at("spec")),
                              header.at("input").at("height").get<int>(),
                              header.at("input").at("width").get<int>(), seed);
  } else if (kind == "text") {
    graph = build_text<S>(text_spec_from_json(header.at("spec")),
                          header.at("input").at("max_tokens").get<int>(),
                          header.at("input").at("dim").get<int>(), seed);
  } else {
    throw std::runtime_error("load_checkpoint: unknown graph kind '" + kind + "'");
  }

  size_t pos = 20 + header_len;
  const auto saved = graph.saved_tensors();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != saved.size())
    throw std::runtime_error("load_checkpoint: tensor count mismatch");
  for (size_t i = 0; i < saved.size(); ++i) {
    const auto& meta = tensors.at(i);
    if (meta.at("name").get<std::string>() != saved[i]->name)
      throw std::runtime_error("load_checkpoint: tensor name mismatch at '" + saved[i]->name +
                               "'");
    const auto rows = meta.at("rows").get<int64_t>();
    const auto cols = meta.at("cols").get<int64_t>();
    if (rows != saved[i]->value.rows() || cols != saved[i]->value.cols())
      throw std::runtime_error("load_checkpoint: tensor shape mismatch at '" + saved[i]->name +
                               "'");
    if (pos + static_cast<size_t>(rows * cols) * 4 > bytes.size())
      throw std::runtime_error("load_checkpoint: truncated payload");
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) {
        float v;
        std::memcpy(&v, bytes.data() + pos, 4);
        pos += 4;
        saved[i]->value(r, c) = static_cast<S>(v);
      }
  }
  return graph;
}

template <typename S>
void save_checkpoint(ModelGraph<S>& graph, const std::string& path) {
  const std::string bytes = save_checkpoint_bytes(graph);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
}

template <typename S>
ModelGraph<S> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_checkpoint_bytes<S>(bytes);
}

}  // namespace bimodal::nets
