#pragma once

// Rotation-equivariant layer set and the real-valued helper layers used by
// encoders, decoders and attack networks.
//
// Every equivariant kind L satisfies L(R∘f∘R̄) = R∘L(f)∘R̄:
//   Conv / FullyConnected  real weights, no bias, applied to each plane
//   QReLU                  f_v · ‖f_v‖ / max(‖f_v‖, C)
//   QBatchNorm             f_v / sqrt(E_batch ‖f_v‖² + ε)
//   MaxPool                element of largest norm per window
//   AvgPool                plane-wise mean
//   Dropout                whole quaternions dropped
//   Residual               f + Φ(f) for an equivariant inner stack Φ

#include <optional>
#include <string>
#include <vector>

#include "qnn/ops.hpp"
#include "qnn/qtensor.hpp"
#include "qnn/rng.hpp"

namespace qnn {

enum class LayerKind {
  Conv,
  FullyConnected,
  QReLU,
  QBatchNorm,
  MaxPool,
  AvgPool,
  Dropout,
  Residual,
  // Real-valued only; never allowed in a processing stack.
  ReLU,
  Bias,
  Sigmoid,
  Upsample,
  Softmax,
};

std::string kind_name(LayerKind kind);
std::optional<LayerKind> kind_from_name(const std::string& name);

constexpr bool is_equivariant_kind(LayerKind k) {
  return k == LayerKind::Conv || k == LayerKind::FullyConnected || k == LayerKind::QReLU ||
         k == LayerKind::QBatchNorm || k == LayerKind::MaxPool || k == LayerKind::AvgPool ||
         k == LayerKind::Dropout || k == LayerKind::Residual;
}

template <typename T>
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  // Conv: {out, in, kh, kw}; FullyConnected: {out, in}; Bias: {channels}.
  RealTensor<T> weights;
  T c = T(1);       // QReLU threshold
  T eps = T(1e-5);  // QBatchNorm
  T rate = T(0);    // Dropout
  Window window;    // Conv, MaxPool, AvgPool
  int factor = 1;   // Upsample
  std::vector<LayerSpec> inner;  // Residual

  bool operator==(const LayerSpec&) const = default;

  bool has_weights() const {
    return kind == LayerKind::Conv || kind == LayerKind::FullyConnected || kind == LayerKind::Bias;
  }
  int out_channels() const { return weights.shape.at(0); }

  static LayerSpec conv(int in, int out, int k, int stride = 1, int pad = 0) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.weights = RealTensor<T>(Shape{out, in, k, k});
    s.window = {k, k, stride, pad};
    return s;
  }
  static LayerSpec fully_connected(int in, int out) {
    LayerSpec s;
    s.kind = LayerKind::FullyConnected;
    s.weights = RealTensor<T>(Shape{out, in});
    return s;
  }
  static LayerSpec qrelu(T c = T(1)) {
    LayerSpec s;
    s.kind = LayerKind::QReLU;
    s.c = c;
    return s;
  }
  static LayerSpec qbatchnorm(T eps = T(1e-5)) {
    LayerSpec s;
    s.kind = LayerKind::QBatchNorm;
    s.eps = eps;
    return s;
  }
  static LayerSpec maxpool(int k, int stride, int pad = 0) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool;
    s.window = {k, k, stride, pad};
    return s;
  }
  static LayerSpec avgpool(int k, int stride, int pad = 0) {
    LayerSpec s;
    s.kind = LayerKind::AvgPool;
    s.window = {k, k, stride, pad};
    return s;
  }
  static LayerSpec dropout(T rate) {
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.rate = rate;
    return s;
  }
  static LayerSpec residual(std::vector<LayerSpec> inner) {
    LayerSpec s;
    s.kind = LayerKind::Residual;
    s.inner = std::move(inner);
    return s;
  }
  static LayerSpec simple(LayerKind kind) {
    LayerSpec s;
    s.kind = kind;
    return s;
  }
  static LayerSpec bias(int channels) {
    LayerSpec s;
    s.kind = LayerKind::Bias;
    s.weights = RealTensor<T>(Shape{channels});
    return s;
  }
  static LayerSpec upsample(int factor) {
    LayerSpec s;
    s.kind = LayerKind::Upsample;
    s.factor = factor;
    return s;
  }

  template <typename U>
  LayerSpec<U> cast() const {
    LayerSpec<U> s;
    s.kind = kind;
    s.weights = weights.template cast<U>();
    s.c = static_cast<U>(c);
    s.eps = static_cast<U>(eps);
    s.rate = static_cast<U>(rate);
    s.window = window;
    s.factor = factor;
    for (const auto& l : inner) s.inner.push_back(l.template cast<U>());
    return s;
  }
};

template <typename T>
using Stack = std::vector<LayerSpec<T>>;

template <typename T>
void validate(const LayerSpec<T>& s) {
  switch (s.kind) {
    case LayerKind::Conv:
      require(s.weights.shape.size() == 4 && s.weights.shape[2] == s.window.kh &&
                  s.weights.shape[3] == s.window.kw,
              ErrorKind::Config, "conv: weights must be {out, in, kh, kw}");
      require(s.window.stride >= 1 && s.window.pad >= 0, ErrorKind::Config, "conv: bad stride/pad");
      break;
    case LayerKind::FullyConnected:
      require(s.weights.shape.size() == 2, ErrorKind::Config, "fc: weights must be {out, in}");
      break;
    case LayerKind::Bias:
      require(s.weights.shape.size() == 1, ErrorKind::Config, "bias: weights must be {channels}");
      break;
    case LayerKind::QReLU:
      require(s.c > T(0), ErrorKind::Config, "qrelu: C must be positive");
      break;
    case LayerKind::QBatchNorm:
      require(s.eps > T(0), ErrorKind::Config, "qbatchnorm: eps must be positive");
      break;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      require(s.window.kh >= 1 && s.window.kw >= 1 && s.window.stride >= 1 && s.window.pad >= 0,
              ErrorKind::Config, "pool: bad window");
      break;
    case LayerKind::Dropout:
      require(s.rate >= T(0) && s.rate < T(1), ErrorKind::Config, "dropout: rate must be in [0,1)");
      break;
    case LayerKind::Residual:
      for (const auto& l : s.inner) validate(l);
      break;
    case LayerKind::Upsample:
      require(s.factor >= 1, ErrorKind::Config, "upsample: factor must be >= 1");
      break;
    default:
      break;
  }
  if (s.kind != LayerKind::Residual)
    require(s.inner.empty(), ErrorKind::Config, "only residual layers carry an inner stack");
}

template <typename T>
bool is_equivariant(const LayerSpec<T>& s) {
  if (!is_equivariant_kind(s.kind)) return false;
  if (s.kind == LayerKind::Residual)
    for (const auto& l : s.inner)
      if (!is_equivariant(l)) return false;
  return true;
}

// He-normal weights for Conv/FC, zero bias.
template <typename T>
void initialize(Stack<T>& layers, Rng& rng) {
  for (auto& l : layers) {
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::FullyConnected) {
      const Eigen::Index fan_in = l.weights.size() / l.weights.shape[0];
      std::normal_distribution<double> g(0.0, std::sqrt(2.0 / double(fan_in)));
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.values[i] = T(g(rng));
    } else if (l.kind == LayerKind::Bias) {
      l.weights.values.setZero();
    } else if (l.kind == LayerKind::Residual) {
      initialize(l.inner, rng);
    }
  }
}

// Every trainable tensor in the stack, depth first.
template <typename T>
void collect_parameters(Stack<T>& layers, std::vector<RealTensor<T>*>& out) {
  for (auto& l : layers) {
    if (l.has_weights()) out.push_back(&l.weights);
    if (l.kind == LayerKind::Residual) collect_parameters(l.inner, out);
  }
}

template <typename T>
void collect_parameters(const Stack<T>& layers, std::vector<const RealTensor<T>*>& out) {
  for (const auto& l : layers) {
    if (l.has_weights()) out.push_back(&l.weights);
    if (l.kind == LayerKind::Residual) collect_parameters(l.inner, out);
  }
}

// Per-pass state: training flag, dropout randomness and the masks/argmaxes a
// pass produced. Pre-filled dropout_masks are consumed in order instead of
// sampling, so two evaluation orders can share masks.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;
  std::vector<std::vector<std::uint8_t>> dropout_masks;
  std::size_t next_mask = 0;
  std::vector<std::vector<std::int64_t>> pool_argmax;
  // When set, every piecewise layer appends the branch it took per element
  // (ReLU sign, QReLU norm > C, MaxPool argmax). Used to spot kinks.
  bool record_branches = false;
  std::vector<std::int64_t> branches;
};

inline std::vector<std::uint8_t> sample_keep_mask(std::size_t count, double rate, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<std::uint8_t> mask(count);
  for (auto& m : mask) m = keep(rng) ? 1 : 0;
  return mask;
}

template <typename T>
Var<T> apply_layer(Var<T> x, const LayerSpec<T>& l, ForwardContext& ctx);

// Parameters are registered by address, so layers must be the live ones
// (a copied stack would receive no gradients).
template <typename T>
Var<T> apply_layers(Var<T> x, std::span<const LayerSpec<T>> layers, ForwardContext& ctx) {
  for (const auto& l : layers) x = apply_layer(x, l, ctx);
  return x;
}

template <typename T>
Var<T> apply_layers(Var<T> x, const Stack<T>& layers, ForwardContext& ctx) {
  return apply_layers(x, std::span<const LayerSpec<T>>(layers), ctx);
}

template <typename T>
Var<T> apply_layer(Var<T> x, const LayerSpec<T>& l, ForwardContext& ctx) {
  Tape<T>& tape = *x.tape;
  switch (l.kind) {
    case LayerKind::Conv:
      require(x.dims().c == l.weights.shape[1], ErrorKind::Shape,
              "conv: expected " + std::to_string(l.weights.shape[1]) + " input channels, got " +
                  to_string(x.dims()));
      return ops::conv2d(x, tape.parameter(l.weights), l.out_channels(), l.window);
    case LayerKind::FullyConnected:
      return ops::fc(x, tape.parameter(l.weights), l.out_channels());
    case LayerKind::Bias:
      return ops::bias(x, tape.parameter(l.weights));
    case LayerKind::QReLU:
      if (ctx.record_branches) {
        const Dims d = x.dims();
        std::vector<T> norms(std::size_t(d.n) * d.block());
        kernels::element_norms(d, x.value().data(), norms.data());
        for (T nv : norms) ctx.branches.push_back(nv > l.c ? 1 : 0);
      }
      return ops::qrelu(x, l.c);
    case LayerKind::QBatchNorm:
      return ops::qbatchnorm(x, l.eps);
    case LayerKind::MaxPool: {
      std::vector<std::int64_t> argmax;
      Var<T> y = ops::maxpool(x, l.window, &argmax);
      if (ctx.record_branches) ctx.branches.insert(ctx.branches.end(), argmax.begin(), argmax.end());
      ctx.pool_argmax.push_back(std::move(argmax));
      return y;
    }
    case LayerKind::AvgPool:
      return ops::avgpool(x, l.window);
    case LayerKind::Dropout: {
      if (!ctx.training || l.rate == T(0)) return x;
      const std::size_t count = std::size_t(x.dims().n) * x.dims().block();
      std::vector<std::uint8_t> mask;
      if (ctx.next_mask < ctx.dropout_masks.size()) {
        mask = ctx.dropout_masks[ctx.next_mask];
      } else {
        require(ctx.rng != nullptr, ErrorKind::Config, "dropout in training needs an rng");
        mask = sample_keep_mask(count, double(l.rate), *ctx.rng);
        ctx.dropout_masks.push_back(mask);
      }
      ++ctx.next_mask;
      require(mask.size() == count, ErrorKind::Shape, "dropout: shared mask has wrong size");
      return ops::dropout(x, std::move(mask), l.rate);
    }
    case LayerKind::Residual: {
      Var<T> inner = apply_layers(x, l.inner, ctx);
      require(inner.dims() == x.dims(), ErrorKind::Shape,
              "residual: inner stack changes shape " + to_string(x.dims()) + " -> " +
                  to_string(inner.dims()));
      return ops::add(x, inner);
    }
    case LayerKind::ReLU:
      if (ctx.record_branches)
        for (Eigen::Index v = 0; v < x.value().size(); ++v) ctx.branches.push_back(x.value()[v] > T(0) ? 1 : 0);
      return ops::relu(x);
    case LayerKind::Sigmoid:
      return ops::sigmoid(x);
    case LayerKind::Upsample:
      return ops::upsample(x, l.factor);
    case LayerKind::Softmax:
      return ops::softmax(x);
  }
  throw Error(ErrorKind::Config, "unknown layer kind");
}

// ---- QTensor / RealTensor batch adapters ------------------------------------

inline Dims dims_of(const Shape& s, int n, int p) {
  switch (s.size()) {
    case 0: return {n, p, 1, 1, 1};
    case 1: return {n, p, s[0], 1, 1};
    case 2: return {n, p, 1, s[0], s[1]};
    case 3: return {n, p, s[0], s[1], s[2]};
    default: throw Error(ErrorKind::Shape, "per-sample tensors have rank <= 3, got " + to_string(s));
  }
}

// Flat vectors stay flat; anything with spatial extent is {c, h, w}.
inline Shape shape_of(const Dims& d, const Shape& like) {
  const bool spatial_like = like.size() == 3 && !(like[1] == 1 && like[2] == 1);
  if (d.h == 1 && d.w == 1 && (like.size() != 3 || spatial_like)) return {d.c};
  if (like.size() == 2 && d.c == 1) return {d.h, d.w};
  return {d.c, d.h, d.w};
}

template <typename T>
Var<T> to_var(Tape<T>& tape, std::span<const QTensor<T>> batch) {
  require(!batch.empty(), ErrorKind::Shape, "empty batch");
  const Dims d = dims_of(batch[0].shape, static_cast<int>(batch.size()), 4);
  const Eigen::Index blk = d.block();
  Vec<T> v(d.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    require(batch[n].shape == batch[0].shape, ErrorKind::Shape, "batch members differ in shape");
    for (int p = 0; p < 4; ++p) v.segment((Eigen::Index(n) * 4 + p) * blk, blk) = batch[n].planes[p];
  }
  return tape.constant(d, std::move(v));
}

template <typename T>
Var<T> to_var(Tape<T>& tape, std::span<const RealTensor<T>> batch) {
  require(!batch.empty(), ErrorKind::Shape, "empty batch");
  const Dims d = dims_of(batch[0].shape, static_cast<int>(batch.size()), 1);
  const Eigen::Index blk = d.block();
  Vec<T> v(d.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    require(batch[n].shape == batch[0].shape, ErrorKind::Shape, "batch members differ in shape");
    v.segment(Eigen::Index(n) * blk, blk) = batch[n].values;
  }
  return tape.constant(d, std::move(v));
}

template <typename T>
std::vector<QTensor<T>> to_qtensors(Var<T> x, const Shape& like) {
  const Dims d = x.dims();
  require(d.p == 4, ErrorKind::Shape, "to_qtensors: quaternion tensor expected");
  const Shape shape = shape_of(d, like);
  const Eigen::Index blk = d.block();
  std::vector<QTensor<T>> out;
  for (int n = 0; n < d.n; ++n) {
    QTensor<T> q(shape);
    for (int p = 0; p < 4; ++p) q.planes[p] = x.value().segment((Eigen::Index(n) * 4 + p) * blk, blk);
    out.push_back(std::move(q));
  }
  return out;
}

template <typename T>
std::vector<RealTensor<T>> to_real_tensors(Var<T> x, const Shape& like) {
  const Dims d = x.dims();
  require(d.p == 1, ErrorKind::Shape, "to_real_tensors: real tensor expected");
  const Shape shape = shape_of(d, like);
  const Eigen::Index blk = d.block();
  std::vector<RealTensor<T>> out;
  for (int n = 0; n < d.n; ++n) out.emplace_back(shape, Vec<T>(x.value().segment(n * blk, blk)));
  return out;
}

// ---- single-layer forward passes on QTensors --------------------------------

template <typename T>
std::vector<QTensor<T>> forward_batch(std::span<const QTensor<T>> batch, const Stack<T>& layers,
                                      ForwardContext& ctx) {
  Tape<T> tape(false);
  Var<T> y = apply_layers(to_var<T>(tape, batch), layers, ctx);
  return to_qtensors(y, batch[0].shape);
}

template <typename T>
QTensor<T> forward(const QTensor<T>& f, const Stack<T>& layers, ForwardContext& ctx) {
  return forward_batch<T>(std::span(&f, 1), layers, ctx).front();
}

template <typename T>
QTensor<T> forward(const QTensor<T>& f, const Stack<T>& layers) {
  ForwardContext ctx;
  return forward(f, layers, ctx);
}

template <typename T>
QTensor<T> qconv_forward(const QTensor<T>& f, const LayerSpec<T>& spec) {
  require(spec.kind == LayerKind::Conv || spec.kind == LayerKind::FullyConnected,
          ErrorKind::Config, "qconv_forward: Conv or FullyConnected layer expected");
  return forward(f, Stack<T>{spec});
}

template <typename T>
QTensor<T> qrelu_forward(const QTensor<T>& f, T c) {
  require(c > T(0), ErrorKind::Config, "qrelu: C must be positive");
  return forward(f, Stack<T>{LayerSpec<T>::qrelu(c)});
}

// ε = 0 is accepted here (an all-zero element then maps to zero).
template <typename T>
std::vector<QTensor<T>> qbatchnorm_forward(std::span<const QTensor<T>> batch, T eps) {
  require(!batch.empty(), ErrorKind::Shape, "qbatchnorm: empty batch");
  require(eps >= T(0), ErrorKind::Config, "qbatchnorm: eps must be non-negative");
  LayerSpec<T> l = LayerSpec<T>::qbatchnorm(eps);
  ForwardContext ctx;
  return forward_batch(batch, Stack<T>{l}, ctx);
}

// One flag per input element; exactly one set per pooling window.
struct PoolMask {
  std::vector<std::uint8_t> m;
  std::vector<std::int64_t> argmax;  // one within-block index per output element
};

template <typename T>
std::pair<QTensor<T>, PoolMask> qmaxpool_forward(const QTensor<T>& f, const LayerSpec<T>& spec) {
  require(spec.kind == LayerKind::MaxPool, ErrorKind::Config, "qmaxpool_forward: MaxPool expected");
  ForwardContext ctx;
  QTensor<T> y = forward(f, Stack<T>{spec}, ctx);
  PoolMask mask;
  mask.argmax = std::move(ctx.pool_argmax.front());
  mask.m.assign(std::size_t(f.size()), 0);
  for (auto idx : mask.argmax)
    if (idx >= 0) mask.m[std::size_t(idx)] = 1;
  return {std::move(y), std::move(mask)};
}

template <typename T>
QTensor<T> qavgpool_forward(const QTensor<T>& f, const LayerSpec<T>& spec) {
  require(spec.kind == LayerKind::AvgPool, ErrorKind::Config, "qavgpool_forward: AvgPool expected");
  return forward(f, Stack<T>{spec});
}

template <typename T>
QTensor<T> qdropout_forward(const QTensor<T>& f, T rate, Rng& rng, bool training) {
  require(rate >= T(0) && rate < T(1), ErrorKind::Config, "dropout: rate must be in [0,1)");
  ForwardContext ctx;
  ctx.training = training;
  ctx.rng = &rng;
  return forward(f, Stack<T>{LayerSpec<T>::dropout(rate)}, ctx);
}

template <typename T>
QTensor<T> residual_forward(const QTensor<T>& f, const Stack<T>& inner) {
  return forward(f, Stack<T>{LayerSpec<T>::residual(inner)});
}

}  // namespace qnn
