#pragma once

// Forward and backward kernels shared by the inference path and the tape.
//
// A batch is laid out as [n][p][c][h][w]: samples outermost, then planes
// (p = 4 for quaternion features, 1 for real ones), then the per-plane
// row-major channel-outermost block. Norm-based kernels couple the p planes
// of one element; everything else acts on each plane independently.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qnn/error.hpp"

namespace qnn {

struct Dims {
  int n = 1, p = 1, c = 1, h = 1, w = 1;

  Eigen::Index block() const { return Eigen::Index(c) * h * w; }
  Eigen::Index size() const { return Eigen::Index(n) * p * block(); }
  bool operator==(const Dims&) const = default;
};

inline std::string to_string(const Dims& d) {
  return "[n=" + std::to_string(d.n) + " p=" + std::to_string(d.p) + " c=" + std::to_string(d.c) +
         " h=" + std::to_string(d.h) + " w=" + std::to_string(d.w) + "]";
}

struct Window {
  int kh = 1, kw = 1, stride = 1, pad = 0;

  int out_h(int h) const { return (h + 2 * pad - kh) / stride + 1; }
  int out_w(int w) const { return (w + 2 * pad - kw) / stride + 1; }
  bool operator==(const Window&) const = default;
};

namespace kernels {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---- convolution -----------------------------------------------------------

// One [C,H,W] block into a (C·kh·kw) × (Ho·Wo) matrix. Out-of-range taps are
// zero (zero padding).
template <typename T>
void im2col(const T* in, int c, int h, int w, const Window& win, RowMat<T>& cols) {
  const int ho = win.out_h(h), wo = win.out_w(w);
  cols.resize(Eigen::Index(c) * win.kh * win.kw, Eigen::Index(ho) * wo);
  for (int ch = 0; ch < c; ++ch)
    for (int ki = 0; ki < win.kh; ++ki)
      for (int kj = 0; kj < win.kw; ++kj) {
        const Eigen::Index row = (Eigen::Index(ch) * win.kh + ki) * win.kw + kj;
        T* dst = cols.row(row).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int y = oy * win.stride - win.pad + ki;
          for (int ox = 0; ox < wo; ++ox) {
            const int x = ox * win.stride - win.pad + kj;
            dst[oy * wo + ox] =
                (y >= 0 && y < h && x >= 0 && x < w) ? in[(Eigen::Index(ch) * h + y) * w + x] : T{0};
          }
        }
      }
}

template <typename T>
void col2im_add(const RowMat<T>& cols, int c, int h, int w, const Window& win, T* out) {
  const int ho = win.out_h(h), wo = win.out_w(w);
  for (int ch = 0; ch < c; ++ch)
    for (int ki = 0; ki < win.kh; ++ki)
      for (int kj = 0; kj < win.kw; ++kj) {
        const Eigen::Index row = (Eigen::Index(ch) * win.kh + ki) * win.kw + kj;
        const T* src = cols.row(row).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int y = oy * win.stride - win.pad + ki;
          if (y < 0 || y >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int x = ox * win.stride - win.pad + kj;
            if (x >= 0 && x < w) out[(Eigen::Index(ch) * h + y) * w + x] += src[oy * wo + ox];
          }
        }
      }
}

inline Dims conv_out_dims(const Dims& in, int out_c, const Window& win) {
  require(win.out_h(in.h) >= 1 && win.out_w(in.w) >= 1, ErrorKind::Shape,
          "convolution window larger than padded input " + to_string(in));
  return {in.n, in.p, out_c, win.out_h(in.h), win.out_w(in.w)};
}

// weights: [out_c][in_c][kh][kw], no bias. Applied to every (n, p) block.
template <typename T>
void conv2d_forward(const Dims& in, const T* x, const T* weights, int out_c, const Window& win,
                    T* y) {
  const Dims od = conv_out_dims(in, out_c, win);
  Eigen::Map<const RowMat<T>> wm(weights, out_c, in.c * win.kh * win.kw);
  RowMat<T> cols;
  for (int b = 0; b < in.n * in.p; ++b) {
    im2col(x + b * in.block(), in.c, in.h, in.w, win, cols);
    Eigen::Map<RowMat<T>> ym(y + b * od.block(), out_c, Eigen::Index(od.h) * od.w);
    ym.noalias() = wm * cols;
  }
}

template <typename T>
void conv2d_backward(const Dims& in, const T* x, const T* weights, int out_c, const Window& win,
                     const T* dy, T* dx, T* dweights) {
  const Dims od = conv_out_dims(in, out_c, win);
  const Eigen::Index ckk = Eigen::Index(in.c) * win.kh * win.kw;
  Eigen::Map<const RowMat<T>> wm(weights, out_c, ckk);
  RowMat<T> cols, dcols;
  for (int b = 0; b < in.n * in.p; ++b) {
    Eigen::Map<const RowMat<T>> dym(dy + b * od.block(), out_c, Eigen::Index(od.h) * od.w);
    if (dweights) {
      im2col(x + b * in.block(), in.c, in.h, in.w, win, cols);
      Eigen::Map<RowMat<T>> dwm(dweights, out_c, ckk);
      dwm.noalias() += dym * cols.transpose();
    }
    if (dx) {
      dcols.noalias() = wm.transpose() * dym;
      col2im_add(dcols, in.c, in.h, in.w, win, dx + b * in.block());
    }
  }
}

// ---- fully connected -------------------------------------------------------

// weights: [out][c·h·w]; each (n, p) block is flattened.
template <typename T>
void fc_forward(const Dims& in, const T* x, const T* weights, int out, T* y) {
  using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::Map<const RowMat<T>> wm(weights, out, in.block());
  Eigen::Map<const ColMat> xm(x, in.block(), Eigen::Index(in.n) * in.p);
  Eigen::Map<ColMat> ym(y, out, Eigen::Index(in.n) * in.p);
  ym.noalias() = wm * xm;
}

template <typename T>
void fc_backward(const Dims& in, const T* x, const T* weights, int out, const T* dy, T* dx,
                 T* dweights) {
  using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index cols = Eigen::Index(in.n) * in.p;
  Eigen::Map<const ColMat> dym(dy, out, cols);
  if (dweights) {
    Eigen::Map<const ColMat> xm(x, in.block(), cols);
    Eigen::Map<RowMat<T>> dwm(dweights, out, in.block());
    dwm.noalias() += dym * xm.transpose();
  }
  if (dx) {
    Eigen::Map<const RowMat<T>> wm(weights, out, in.block());
    Eigen::Map<ColMat> dxm(dx, in.block(), cols);
    dxm.noalias() += wm.transpose() * dym;
  }
}

// ---- norm-coupled element ops ----------------------------------------------

// Per-element norm across the p planes: out[n·block + v].
template <typename T>
void element_norms(const Dims& d, const T* x, T* out) {
  const Eigen::Index blk = d.block();
  for (int n = 0; n < d.n; ++n)
    for (Eigen::Index v = 0; v < blk; ++v) {
      T s{0};
      for (int p = 0; p < d.p; ++p) {
        const T e = x[(Eigen::Index(n) * d.p + p) * blk + v];
        s += e * e;
      }
      out[n * blk + v] = std::sqrt(s);
    }
}

// f_v ↦ ‖f_v‖ / max(‖f_v‖, C) · f_v. The identity branch is taken when
// ‖f_v‖ > C; at ‖f_v‖ = C both branches agree in value.
template <typename T>
void qrelu_forward(const Dims& d, const T* x, T c, T* y) {
  const Eigen::Index blk = d.block();
  std::vector<T> norms(std::size_t(d.n) * blk);
  element_norms(d, x, norms.data());
  for (int n = 0; n < d.n; ++n)
    for (Eigen::Index v = 0; v < blk; ++v) {
      const T s = norms[n * blk + v];
      const T factor = s > c ? T{1} : s / c;
      for (int p = 0; p < d.p; ++p) {
        const Eigen::Index at = (Eigen::Index(n) * d.p + p) * blk + v;
        y[at] = factor * x[at];
      }
    }
}

template <typename T>
void qrelu_backward(const Dims& d, const T* x, T c, const T* dy, T* dx) {
  const Eigen::Index blk = d.block();
  for (int n = 0; n < d.n; ++n)
    for (Eigen::Index v = 0; v < blk; ++v) {
      T s2{0}, dot{0};
      for (int p = 0; p < d.p; ++p) {
        const Eigen::Index at = (Eigen::Index(n) * d.p + p) * blk + v;
        s2 += x[at] * x[at];
        dot += x[at] * dy[at];
      }
      const T s = std::sqrt(s2);
      for (int p = 0; p < d.p; ++p) {
        const Eigen::Index at = (Eigen::Index(n) * d.p + p) * blk + v;
        if (s > c)
          dx[at] += dy[at];
        else if (s > T{0})
          dx[at] += (s * dy[at] + x[at] * dot / s) / c;
      }
    }
}

// f_v^(k) ↦ f_v^(k) / sqrt(mean_k' ‖f_v^(k')‖² + ε), statistics over the batch.
// denom receives one value per element position v.
template <typename T>
void qbatchnorm_forward(const Dims& d, const T* x, T eps, T* y, T* denom) {
  const Eigen::Index blk = d.block();
  for (Eigen::Index v = 0; v < blk; ++v) {
    T acc{0};
    for (int n = 0; n < d.n; ++n)
      for (int p = 0; p < d.p; ++p) {
        const T e = x[(Eigen::Index(n) * d.p + p) * blk + v];
        acc += e * e;
      }
    const T den = std::sqrt(acc / T(d.n) + eps);
    denom[v] = den;
    for (int n = 0; n < d.n; ++n)
      for (int p = 0; p < d.p; ++p) {
        const Eigen::Index at = (Eigen::Index(n) * d.p + p) * blk + v;
        y[at] = den > T{0} ? x[at] / den : T{0};
      }
  }
}

template <typename T>
void qbatchnorm_backward(const Dims& d, const T* x, const T* denom, const T* dy, T* dx) {
  const Eigen::Index blk = d.block();
  for (Eigen::Index v = 0; v < blk; ++v) {
    const T den = denom[v];
    if (den <= T{0}) continue;
    T dot{0};
    for (int n = 0; n < d.n; ++n)
      for (int p = 0; p < d.p; ++p) {
        const Eigen::Index at = (Eigen::Index(n) * d.p + p) * blk + v;
        dot += x[at] * dy[at];
      }
    const T k = dot / (T(d.n) * den * den * den);
    for (int n = 0; n < d.n; ++n)
      for (int p = 0; p < d.p; ++p) {
        const Eigen::Index at = (Eigen::Index(n) * d.p + p) * blk + v;
        dx[at] += dy[at] / den - x[at] * k;
      }
  }
}

// ---- pooling ---------------------------------------------------------------

inline Dims pool_out_dims(const Dims& in, const Window& win) {
  require(win.pad < win.kh && win.pad < win.kw, ErrorKind::Shape, "pool padding must be < window");
  require((in.h + 2 * win.pad - win.kh) % win.stride == 0 &&
              (in.w + 2 * win.pad - win.kw) % win.stride == 0,
          ErrorKind::Shape, "pool window/stride do not tile input " + to_string(in));
  require(win.out_h(in.h) >= 1 && win.out_w(in.w) >= 1, ErrorKind::Shape,
          "pool window larger than input");
  return {in.n, in.p, in.c, win.out_h(in.h), win.out_w(in.w)};
}

// Selects, per window, the element of largest norm across planes; ties go to
// the lowest linear index. argmax holds one within-block input index per
// (n, c, oy, ox); padded positions are never selected.
template <typename T>
void maxpool_forward(const Dims& in, const T* x, const Window& win, T* y,
                     std::vector<std::int64_t>& argmax) {
  const Dims od = pool_out_dims(in, win);
  const Eigen::Index iblk = in.block(), oblk = od.block();
  std::vector<T> norms(std::size_t(in.n) * iblk);
  element_norms(in, x, norms.data());
  argmax.assign(std::size_t(in.n) * oblk, -1);
  for (int n = 0; n < in.n; ++n)
    for (int ch = 0; ch < in.c; ++ch)
      for (int oy = 0; oy < od.h; ++oy)
        for (int ox = 0; ox < od.w; ++ox) {
          std::int64_t best = -1;
          T best_norm{0};
          for (int ki = 0; ki < win.kh; ++ki) {
            const int yy = oy * win.stride - win.pad + ki;
            if (yy < 0 || yy >= in.h) continue;
            for (int kj = 0; kj < win.kw; ++kj) {
              const int xx = ox * win.stride - win.pad + kj;
              if (xx < 0 || xx >= in.w) continue;
              const std::int64_t idx = (std::int64_t(ch) * in.h + yy) * in.w + xx;
              const T nv = norms[n * iblk + idx];
              if (best < 0 || nv > best_norm) {
                best = idx;
                best_norm = nv;
              }
            }
          }
          const Eigen::Index o = (Eigen::Index(ch) * od.h + oy) * od.w + ox;
          argmax[n * oblk + o] = best;
          for (int p = 0; p < in.p; ++p)
            y[(Eigen::Index(n) * in.p + p) * oblk + o] =
                best >= 0 ? x[(Eigen::Index(n) * in.p + p) * iblk + best] : T{0};
        }
}

template <typename T>
void maxpool_backward(const Dims& in, const Window& win, const std::vector<std::int64_t>& argmax,
                      const T* dy, T* dx) {
  const Dims od = pool_out_dims(in, win);
  const Eigen::Index iblk = in.block(), oblk = od.block();
  for (int n = 0; n < in.n; ++n)
    for (Eigen::Index o = 0; o < oblk; ++o) {
      const std::int64_t src = argmax[n * oblk + o];
      if (src < 0) continue;
      for (int p = 0; p < in.p; ++p)
        dx[(Eigen::Index(n) * in.p + p) * iblk + src] += dy[(Eigen::Index(n) * in.p + p) * oblk + o];
    }
}

// Plane-wise mean over the window; padding counts as zeros.
template <typename T>
void avgpool_forward(const Dims& in, const T* x, const Window& win, T* y) {
  const Dims od = pool_out_dims(in, win);
  const T inv = T{1} / T(win.kh * win.kw);
  for (int b = 0; b < in.n * in.p; ++b)
    for (int ch = 0; ch < in.c; ++ch)
      for (int oy = 0; oy < od.h; ++oy)
        for (int ox = 0; ox < od.w; ++ox) {
          T acc{0};
          for (int ki = 0; ki < win.kh; ++ki) {
            const int yy = oy * win.stride - win.pad + ki;
            if (yy < 0 || yy >= in.h) continue;
            for (int kj = 0; kj < win.kw; ++kj) {
              const int xx = ox * win.stride - win.pad + kj;
              if (xx >= 0 && xx < in.w) acc += x[b * in.block() + (Eigen::Index(ch) * in.h + yy) * in.w + xx];
            }
          }
          y[b * od.block() + (Eigen::Index(ch) * od.h + oy) * od.w + ox] = acc * inv;
        }
}

template <typename T>
void avgpool_backward(const Dims& in, const Window& win, const T* dy, T* dx) {
  const Dims od = pool_out_dims(in, win);
  const T inv = T{1} / T(win.kh * win.kw);
  for (int b = 0; b < in.n * in.p; ++b)
    for (int ch = 0; ch < in.c; ++ch)
      for (int oy = 0; oy < od.h; ++oy)
        for (int ox = 0; ox < od.w; ++ox) {
          const T g = dy[b * od.block() + (Eigen::Index(ch) * od.h + oy) * od.w + ox] * inv;
          for (int ki = 0; ki < win.kh; ++ki) {
            const int yy = oy * win.stride - win.pad + ki;
            if (yy < 0 || yy >= in.h) continue;
            for (int kj = 0; kj < win.kw; ++kj) {
              const int xx = ox * win.stride - win.pad + kj;
              if (xx >= 0 && xx < in.w) dx[b * in.block() + (Eigen::Index(ch) * in.h + yy) * in.w + xx] += g;
            }
          }
        }
}

// ---- dropout ---------------------------------------------------------------

// keep: one entry per (n, v), shared by all planes. Survivors are scaled by
// 1/(1 − rate).
template <typename T>
void dropout_apply(const Dims& d, const T* x, const std::vector<std::uint8_t>& keep, T rate, T* y) {
  const Eigen::Index blk = d.block();
  const T scale = T{1} / (T{1} - rate);
  for (int n = 0; n < d.n; ++n)
    for (int p = 0; p < d.p; ++p)
      for (Eigen::Index v = 0; v < blk; ++v) {
        const Eigen::Index at = (Eigen::Index(n) * d.p + p) * blk + v;
        y[at] = keep[n * blk + v] ? x[at] * scale : T{0};
      }
}

// ---- nearest upsampling ----------------------------------------------------

template <typename T>
void upsample_forward(const Dims& in, const T* x, int f, T* y) {
  const int ho = in.h * f, wo = in.w * f;
  for (int b = 0; b < in.n * in.p; ++b)
    for (int ch = 0; ch < in.c; ++ch)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
          y[Eigen::Index(b) * in.c * ho * wo + (Eigen::Index(ch) * ho + oy) * wo + ox] =
              x[b * in.block() + (Eigen::Index(ch) * in.h + oy / f) * in.w + ox / f];
}

template <typename T>
void upsample_backward(const Dims& in, int f, const T* dy, T* dx) {
  const int ho = in.h * f, wo = in.w * f;
  for (int b = 0; b < in.n * in.p; ++b)
    for (int ch = 0; ch < in.c; ++ch)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
          dx[b * in.block() + (Eigen::Index(ch) * in.h + oy / f) * in.w + ox / f] +=
              dy[Eigen::Index(b) * in.c * ho * wo + (Eigen::Index(ch) * ho + oy) * wo + ox];
}

}  // namespace kernels
}  // namespace qnn
