#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#define EIGEN_DONT_PARALLELIZE 1
#include <Eigen/Core>

#include "flowcast/tensor.hpp"

namespace flowcast {

/// Boundary handling for convolutions. `circular` exists for the periodic
/// shift-covariance tests; training always uses zero padding.
enum class PadMode { zero, circular };

namespace detail {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatCM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

inline long conv_out_dim(long in, int k, int stride, int pad) {
  return (in + 2L * pad - k) / stride + 1;
}

inline long wrap_index(long i, long n) {
  i %= n;
  return i < 0 ? i + n : i;
}

/// Resizes only when the element count changes; contents are left stale
/// (callers overwrite every element).
template <typename T>
void reshape_buffer(Tensor<T>& t, long rows, long cols) {
  t.shape = {rows, cols};
  if (static_cast<long>(t.data.size()) != rows * cols)
    t.data.resize(static_cast<size_t>(rows * cols));
}

/// Gathers conv patches: cols is (in_ch*k*k) x (out_h*out_w), column-major,
/// one column per output position. Every element is written.
template <typename T>
void im2col(const Tensor<T>& x, int k, int stride, int pad, PadMode mode, Tensor<T>& cols) {
  const long C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const long out_h = conv_out_dim(H, k, stride, pad);
  const long out_w = conv_out_dim(W, k, stride, pad);
  const long rows = C * k * k;
  reshape_buffer(cols, rows, out_h * out_w);
  T* cdata = cols.ptr();
  const T* xdata = x.ptr();
  for (long oy = 0; oy < out_h; ++oy) {
    for (long ox = 0; ox < out_w; ++ox) {
      T* column = cdata + (oy * out_w + ox) * rows;
      for (long c = 0; c < C; ++c) {
        const T* plane = xdata + c * H * W;
        for (int ki = 0; ki < k; ++ki) {
          long iy = oy * stride - pad + ki;
          if (mode == PadMode::circular) iy = wrap_index(iy, H);
          const bool row_ok = iy >= 0 && iy < H;
          for (int kj = 0; kj < k; ++kj) {
            long ix = ox * stride - pad + kj;
            if (mode == PadMode::circular) ix = wrap_index(ix, W);
            T v = T(0);
            if (row_ok && ix >= 0 && ix < W) v = plane[iy * W + ix];
            column[(c * k + ki) * k + kj] = v;
          }
        }
      }
    }
  }
}

/// Scatter-add adjoint of im2col.
template <typename T>
void col2im(const Tensor<T>& cols, long C, long H, long W, int k, int stride, int pad,
            PadMode mode, Tensor<T>& x) {
  const long out_h = conv_out_dim(H, k, stride, pad);
  const long out_w = conv_out_dim(W, k, stride, pad);
  const long rows = C * k * k;
  x.shape = {C, H, W};
  x.data.assign(static_cast<size_t>(C * H * W), T(0));
  const T* cdata = cols.ptr();
  T* xdata = x.ptr();
  for (long oy = 0; oy < out_h; ++oy) {
    for (long ox = 0; ox < out_w; ++ox) {
      const T* column = cdata + (oy * out_w + ox) * rows;
      for (long c = 0; c < C; ++c) {
        T* plane = xdata + c * H * W;
        for (int ki = 0; ki < k; ++ki) {
          long iy = oy * stride - pad + ki;
          if (mode == PadMode::circular) iy = wrap_index(iy, H);
          if (iy < 0 || iy >= H) continue;
          for (int kj = 0; kj < k; ++kj) {
            long ix = ox * stride - pad + kj;
            if (mode == PadMode::circular) ix = wrap_index(ix, W);
            if (ix < 0 || ix >= W) continue;
            plane[iy * W + ix] += column[(c * k + ki) * k + kj];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2-D convolution, weights (out_ch, in_ch*k*k) row-major. Forward caches the
/// input; backward accumulates into grad_w/grad_b and returns the input
/// gradient unless input_grad is disabled (first layer of the net).
template <typename T>
struct Conv2d {
  int in_ch = 0, out_ch = 0, k = 3, stride = 1, pad = 1;
  PadMode pad_mode = PadMode::zero;
  bool input_grad = true;

  Tensor<T> w, b, grad_w, grad_b;
  Tensor<T> x_cache;
  Tensor<T> cols_ws_, dcols_ws_;  // reused across calls

  Conv2d() = default;
  Conv2d(int in, int out, int kernel, int stride_, int pad_)
      : in_ch(in), out_ch(out), k(kernel), stride(stride_), pad(pad_) {
    w = Tensor<T>::zeros({out_ch, static_cast<long>(in_ch) * k * k});
    b = Tensor<T>::zeros({out_ch});
    grad_w = Tensor<T>::zeros_like(w);
    grad_b = Tensor<T>::zeros_like(b);
  }

  void init_he(std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(in_ch) * k * k;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : w.data) v = static_cast<T>(dist(rng));
    b.zero();
  }

  long param_count() const { return w.numel() + b.numel(); }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.dim(0) != in_ch)
      throw std::runtime_error("conv: channel mismatch (got " + std::to_string(x.dim(0)) +
                               ", expected " + std::to_string(in_ch) + ")");
    x_cache = x;
    const long out_h = detail::conv_out_dim(x.dim(1), k, stride, pad);
    const long out_w = detail::conv_out_dim(x.dim(2), k, stride, pad);
    detail::im2col(x, k, stride, pad, pad_mode, cols_ws_);
    Tensor<T> y = Tensor<T>::zeros({out_ch, out_h, out_w});
    Eigen::Map<const detail::MatRM<T>> wm(w.ptr(), out_ch, w.dim(1));
    Eigen::Map<const detail::MatCM<T>> cm(cols_ws_.ptr(), cols_ws_.dim(0), cols_ws_.dim(1));
    Eigen::Map<detail::MatRM<T>> ym(y.ptr(), out_ch, out_h * out_w);
    ym.noalias() = wm * cm;
    for (long c = 0; c < out_ch; ++c) ym.row(c).array() += b.data[static_cast<size_t>(c)];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const long out_h = dy.dim(1), out_w = dy.dim(2);
    detail::im2col(x_cache, k, stride, pad, pad_mode, cols_ws_);
    Eigen::Map<const detail::MatRM<T>> dym(dy.ptr(), out_ch, out_h * out_w);
    Eigen::Map<const detail::MatCM<T>> cm(cols_ws_.ptr(), cols_ws_.dim(0), cols_ws_.dim(1));
    Eigen::Map<detail::MatRM<T>> gwm(grad_w.ptr(), out_ch, grad_w.dim(1));
    gwm.noalias() += dym * cm.transpose();
    for (long c = 0; c < out_ch; ++c) grad_b.data[static_cast<size_t>(c)] += dym.row(c).sum();

    if (!input_grad) return {};
    detail::reshape_buffer(dcols_ws_, cols_ws_.dim(0), cols_ws_.dim(1));
    Eigen::Map<const detail::MatRM<T>> wm(w.ptr(), out_ch, w.dim(1));
    Eigen::Map<detail::MatCM<T>> dcm(dcols_ws_.ptr(), dcols_ws_.dim(0), dcols_ws_.dim(1));
    dcm.noalias() = wm.transpose() * dym;
    Tensor<T> dx;
    detail::col2im(dcols_ws_, x_cache.dim(0), x_cache.dim(1), x_cache.dim(2), k, stride, pad,
                   pad_mode, dx);
    return dx;
  }
};

/// Transposed convolution (learned upsampling). Weights are stored
/// (in_ch, out_ch*k*k) row-major; out = (in-1)*stride - 2*pad + k.
template <typename T>
struct ConvTranspose2d {
  int in_ch = 0, out_ch = 0, k = 4, stride = 2, pad = 1;
  PadMode pad_mode = PadMode::zero;

  Tensor<T> w, b, grad_w, grad_b;
  Tensor<T> x_cache;
  Tensor<T> cols_ws_;

  ConvTranspose2d() = default;
  ConvTranspose2d(int in, int out, int kernel, int stride_, int pad_)
      : in_ch(in), out_ch(out), k(kernel), stride(stride_), pad(pad_) {
    w = Tensor<T>::zeros({in_ch, static_cast<long>(out_ch) * k * k});
    b = Tensor<T>::zeros({out_ch});
    grad_w = Tensor<T>::zeros_like(w);
    grad_b = Tensor<T>::zeros_like(b);
  }

  /// Bilinear interpolation kernel, identical across channel pairs. Repeated
  /// taps sum to 1 in the interior, so constants are preserved there.
  void init_bilinear() {
    const double factor = (k + 1) / 2;
    const double center = (k % 2 == 1) ? factor - 1.0 : factor - 0.5;
    for (int ci = 0; ci < in_ch; ++ci)
      for (int co = 0; co < out_ch; ++co)
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double v = (1.0 - std::abs(i - center) / factor) *
                             (1.0 - std::abs(j - center) / factor);
            w.data[static_cast<size_t>((ci * out_ch + co) * k * k + i * k + j)] =
                static_cast<T>(ci == co ? v : 0.0);
          }
    b.zero();
  }

  long param_count() const { return w.numel() + b.numel(); }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.dim(0) != in_ch) throw std::runtime_error("conv_transpose: channel mismatch");
    x_cache = x;
    const long in_h = x.dim(1), in_w = x.dim(2);
    const long out_h = (in_h - 1) * stride - 2L * pad + k;
    const long out_w = (in_w - 1) * stride - 2L * pad + k;
    // cols = W^T * X, then scatter into the output grid.
    detail::reshape_buffer(cols_ws_, static_cast<long>(out_ch) * k * k, in_h * in_w);
    Eigen::Map<const detail::MatRM<T>> wm(w.ptr(), in_ch, w.dim(1));
    Eigen::Map<const detail::MatRM<T>> xm(x.ptr(), in_ch, in_h * in_w);
    Eigen::Map<detail::MatCM<T>> cm(cols_ws_.ptr(), cols_ws_.dim(0), cols_ws_.dim(1));
    cm.noalias() = wm.transpose() * xm;
    Tensor<T> y;
    detail::col2im(cols_ws_, out_ch, out_h, out_w, k, stride, pad, pad_mode, y);
    for (long c = 0; c < out_ch; ++c) {
      T* plane = y.ptr() + c * out_h * out_w;
      const T bias = b.data[static_cast<size_t>(c)];
      for (long i = 0; i < out_h * out_w; ++i) plane[i] += bias;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const long in_h = x_cache.dim(1), in_w = x_cache.dim(2);
    Tensor<T>& dcols = cols_ws_;
    detail::im2col(dy, k, stride, pad, pad_mode, dcols);
    Eigen::Map<const detail::MatCM<T>> dcm(dcols.ptr(), dcols.dim(0), dcols.dim(1));
    Eigen::Map<const detail::MatRM<T>> xm(x_cache.ptr(), in_ch, in_h * in_w);
    Eigen::Map<detail::MatRM<T>> gwm(grad_w.ptr(), in_ch, grad_w.dim(1));
    gwm.noalias() += xm * dcm.transpose();
    for (long c = 0; c < out_ch; ++c) {
      const T* plane = dy.ptr() + c * dy.dim(1) * dy.dim(2);
      T s = T(0);
      for (long i = 0; i < dy.dim(1) * dy.dim(2); ++i) s += plane[i];
      grad_b.data[static_cast<size_t>(c)] += s;
    }
    Tensor<T> dx = Tensor<T>::zeros({in_ch, in_h, in_w});
    Eigen::Map<const detail::MatRM<T>> wm(w.ptr(), in_ch, w.dim(1));
    Eigen::Map<detail::MatRM<T>> dxm(dx.ptr(), in_ch, in_h * in_w);
    dxm.noalias() = wm * dcm;
    return dx;
  }
};

/// 2x2 max pooling, stride 2, ceil mode (a trailing odd row/column pools a
/// partial window). Ties break to the first element in scan order.
template <typename T>
struct MaxPool2 {
  long in_h = 0, in_w = 0, channels = 0;
  std::vector<std::int32_t> argmax;  // per output element, linear index into the input plane

  Tensor<T> forward(const Tensor<T>& x) {
    channels = x.dim(0);
    in_h = x.dim(1);
    in_w = x.dim(2);
    const long out_h = (in_h + 1) / 2, out_w = (in_w + 1) / 2;
    Tensor<T> y = Tensor<T>::zeros({channels, out_h, out_w});
    argmax.assign(static_cast<size_t>(channels * out_h * out_w), 0);
    for (long c = 0; c < channels; ++c) {
      const T* plane = x.ptr() + c * in_h * in_w;
      for (long oy = 0; oy < out_h; ++oy)
        for (long ox = 0; ox < out_w; ++ox) {
          T best = -std::numeric_limits<T>::infinity();
          long best_idx = 0;
          for (long iy = oy * 2; iy < std::min(oy * 2 + 2, in_h); ++iy)
            for (long ix = ox * 2; ix < std::min(ox * 2 + 2, in_w); ++ix) {
              const T v = plane[iy * in_w + ix];
              if (v > best) {
                best = v;
                best_idx = iy * in_w + ix;
              }
            }
          y.at(c, oy, ox) = best;
          argmax[static_cast<size_t>((c * out_h + oy) * out_w + ox)] =
              static_cast<std::int32_t>(best_idx);
        }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = Tensor<T>::zeros({channels, in_h, in_w});
    const long out_h = dy.dim(1), out_w = dy.dim(2);
    for (long c = 0; c < channels; ++c) {
      T* plane = dx.ptr() + c * in_h * in_w;
      for (long i = 0; i < out_h * out_w; ++i)
        plane[argmax[static_cast<size_t>(c * out_h * out_w + i)]] += dy.ptr()[c * out_h * out_w + i];
    }
    return dx;
  }
};

template <typename T>
struct ReLU {
  Tensor<T> y_cache;

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (auto& v : y.data) v = v > T(0) ? v : T(0);
    y_cache = y;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (size_t i = 0; i < dx.data.size(); ++i)
      if (!(y_cache.data[i] > T(0))) dx.data[i] = T(0);
    return dx;
  }
};

/// Fully connected layer on flat vectors; weights (out, in) row-major.
template <typename T>
struct Linear {
  int in_dim = 0, out_dim = 0;
  Tensor<T> w, b, grad_w, grad_b;
  Tensor<T> x_cache;

  Linear() = default;
  Linear(int in, int out) : in_dim(in), out_dim(out) {
    w = Tensor<T>::zeros({out_dim, in_dim});
    b = Tensor<T>::zeros({out_dim});
    grad_w = Tensor<T>::zeros_like(w);
    grad_b = Tensor<T>::zeros_like(b);
  }

  void init_he(std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in_dim));
    for (auto& v : w.data) v = static_cast<T>(dist(rng));
    b.zero();
  }

  long param_count() const { return w.numel() + b.numel(); }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.numel() != in_dim) throw std::runtime_error("linear: dimension mismatch");
    x_cache = x;
    Tensor<T> y = Tensor<T>::zeros({out_dim});
    Eigen::Map<const detail::MatRM<T>> wm(w.ptr(), out_dim, in_dim);
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> xv(x.ptr(), in_dim);
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> yv(y.ptr(), out_dim);
    yv.noalias() = wm * xv;
    for (int i = 0; i < out_dim; ++i) y.data[static_cast<size_t>(i)] += b.data[static_cast<size_t>(i)];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> dyv(dy.ptr(), out_dim);
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> xv(x_cache.ptr(), in_dim);
    Eigen::Map<detail::MatRM<T>> gwm(grad_w.ptr(), out_dim, in_dim);
    gwm.noalias() += dyv * xv.transpose();
    for (int i = 0; i < out_dim; ++i) grad_b.data[static_cast<size_t>(i)] += dy.data[static_cast<size_t>(i)];
    Tensor<T> dx = Tensor<T>::zeros({in_dim});
    Eigen::Map<const detail::MatRM<T>> wm(w.ptr(), out_dim, in_dim);
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dxv(dx.ptr(), in_dim);
    dxv.noalias() = wm.transpose() * dyv;
    return dx;
  }
};

/// Zero-pads (c,h,w) to (c, h+top+bottom, w+left+right).
template <typename T>
Tensor<T> pad_spatial(const Tensor<T>& x, int top, int bottom, int left, int right) {
  const long C = x.dim(0), H = x.dim(1), W = x.dim(2);
  Tensor<T> y = Tensor<T>::zeros({C, H + top + bottom, W + left + right});
  for (long c = 0; c < C; ++c)
    for (long r = 0; r < H; ++r)
      std::copy_n(x.ptr() + (c * H + r) * W, W,
                  y.ptr() + ((c * y.dim(1)) + r + top) * y.dim(2) + left);
  return y;
}

template <typename T>
Tensor<T> crop_spatial(const Tensor<T>& x, long top, long left, long h, long w) {
  const long C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (top < 0 || left < 0 || top + h > H || left + w > W)
    throw std::runtime_error("crop_spatial out of bounds");
  Tensor<T> y = Tensor<T>::zeros({C, h, w});
  for (long c = 0; c < C; ++c)
    for (long r = 0; r < h; ++r)
      std::copy_n(x.ptr() + (c * H + (r + top)) * W + left, w, y.ptr() + (c * h + r) * w);
  return y;
}

/// Adjoint of crop_spatial: embeds dy into a zero tensor of the pre-crop shape.
template <typename T>
Tensor<T> embed_spatial(const Tensor<T>& dy, long top, long left, long H, long W) {
  const long C = dy.dim(0), h = dy.dim(1), w = dy.dim(2);
  Tensor<T> dx = Tensor<T>::zeros({C, H, W});
  for (long c = 0; c < C; ++c)
    for (long r = 0; r < h; ++r)
      std::copy_n(dy.ptr() + (c * h + r) * w, w, dx.ptr() + (c * H + (r + top)) * W + left);
  return dx;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw std::runtime_error("concat_channels: spatial dims differ");
  Tensor<T> y = Tensor<T>::zeros({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + a.data.size());
  return y;
}

}  // namespace flowcast
