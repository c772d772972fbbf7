#pragma once

// Differentiable tensor operations recorded on a Tape.

#include <cmath>
#include <span>

#include "qnn/autograd.hpp"

namespace qnn::ops {

template <typename T>
Var<T> detach(Var<T> x) {
  return x.tape->constant(x.dims(), x.value());
}

template <typename T>
Var<T> reshape(Var<T> x, const Dims& d) {
  require(d.size() == x.dims().size(), ErrorKind::Shape, "reshape: size mismatch");
  return x.tape->record(d, x.value(), {x.id}, [xi = x.id](Tape<T>& t, int self) {
    accumulate(t, xi, t.node(self).grad);
  });
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, int out_c, const Window& win) {
  const Dims in = x.dims();
  require(w.value().size() == Eigen::Index(out_c) * in.c * win.kh * win.kw, ErrorKind::Shape,
          "conv2d: weight count does not match " + std::to_string(out_c) + "x" +
              std::to_string(in.c) + "x" + std::to_string(win.kh) + "x" + std::to_string(win.kw));
  const Dims od = kernels::conv_out_dims(in, out_c, win);
  Vec<T> y(od.size());
  kernels::conv2d_forward(in, x.value().data(), w.value().data(), out_c, win, y.data());
  return x.tape->record(od, std::move(y), {x.id, w.id},
                        [in, out_c, win, xi = x.id, wi = w.id](Tape<T>& t, int self) {
                          T* dx = t.needs_grad(xi) ? t.grad(xi).data() : nullptr;
                          T* dw = t.needs_grad(wi) ? t.grad(wi).data() : nullptr;
                          kernels::conv2d_backward(in, t.node(xi).value.data(),
                                                   t.node(wi).value.data(), out_c, win,
                                                   t.node(self).grad.data(), dx, dw);
                        });
}

template <typename T>
Var<T> fc(Var<T> x, Var<T> w, int out) {
  const Dims in = x.dims();
  require(w.value().size() == Eigen::Index(out) * in.block(), ErrorKind::Shape,
          "fc: weight count does not match " + std::to_string(out) + "x" +
              std::to_string(in.block()));
  const Dims od{in.n, in.p, out, 1, 1};
  Vec<T> y(od.size());
  kernels::fc_forward(in, x.value().data(), w.value().data(), out, y.data());
  return x.tape->record(od, std::move(y), {x.id, w.id},
                        [in, out, xi = x.id, wi = w.id](Tape<T>& t, int self) {
                          T* dx = t.needs_grad(xi) ? t.grad(xi).data() : nullptr;
                          T* dw = t.needs_grad(wi) ? t.grad(wi).data() : nullptr;
                          kernels::fc_backward(in, t.node(xi).value.data(),
                                               t.node(wi).value.data(), out,
                                               t.node(self).grad.data(), dx, dw);
                        });
}

// Per-channel additive bias, broadcast over batch, planes and space.
template <typename T>
Var<T> bias(Var<T> x, Var<T> b) {
  const Dims d = x.dims();
  require(b.value().size() == d.c, ErrorKind::Shape, "bias: one value per channel expected");
  const Eigen::Index hw = Eigen::Index(d.h) * d.w;
  Vec<T> y = x.value();
  for (Eigen::Index blk = 0; blk < Eigen::Index(d.n) * d.p; ++blk)
    for (int c = 0; c < d.c; ++c) y.segment(blk * d.block() + c * hw, hw) += b.value()[c];
  return x.tape->record(d, std::move(y), {x.id, b.id},
                        [d, hw, xi = x.id, bi = b.id](Tape<T>& t, int self) {
                          const Vec<T>& g = t.node(self).grad;
                          accumulate(t, xi, g);
                          if (!t.needs_grad(bi)) return;
                          Vec<T>& db = t.grad(bi);
                          for (Eigen::Index blk = 0; blk < Eigen::Index(d.n) * d.p; ++blk)
                            for (int c = 0; c < d.c; ++c)
                              db[c] += g.segment(blk * d.block() + c * hw, hw).sum();
                        });
}

template <typename T>
Var<T> relu(Var<T> x) {
  Vec<T> y = x.value().max(T{0});
  return x.tape->record(x.dims(), std::move(y), {x.id}, [xi = x.id](Tape<T>& t, int self) {
    accumulate(t, xi, (t.node(xi).value > T{0}).template cast<T>() * t.node(self).grad);
  });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Vec<T> y = T{1} / (T{1} + (-x.value()).exp());
  return x.tape->record(x.dims(), std::move(y), {x.id}, [xi = x.id](Tape<T>& t, int self) {
    const Vec<T>& s = t.node(self).value;
    accumulate(t, xi, s * (T{1} - s) * t.node(self).grad);
  });
}

template <typename T>
Var<T> qrelu(Var<T> x, T c) {
  const Dims d = x.dims();
  Vec<T> y(d.size());
  kernels::qrelu_forward(d, x.value().data(), c, y.data());
  return x.tape->record(d, std::move(y), {x.id}, [d, c, xi = x.id](Tape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    kernels::qrelu_backward(d, t.node(xi).value.data(), c, t.node(self).grad.data(),
                            t.grad(xi).data());
  });
}

template <typename T>
Var<T> qbatchnorm(Var<T> x, T eps) {
  const Dims d = x.dims();
  require(d.n >= 1, ErrorKind::Shape, "qbatchnorm: empty batch");
  Vec<T> y(d.size());
  auto denom = std::make_shared<Vec<T>>(d.block());
  kernels::qbatchnorm_forward(d, x.value().data(), eps, y.data(), denom->data());
  return x.tape->record(d, std::move(y), {x.id}, [d, denom, xi = x.id](Tape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    kernels::qbatchnorm_backward(d, t.node(xi).value.data(), denom->data(),
                                 t.node(self).grad.data(), t.grad(xi).data());
  });
}

// argmax_out, when given, receives the selected within-block indices.
template <typename T>
Var<T> maxpool(Var<T> x, const Window& win, std::vector<std::int64_t>* argmax_out = nullptr) {
  const Dims in = x.dims();
  const Dims od = kernels::pool_out_dims(in, win);
  Vec<T> y(od.size());
  auto argmax = std::make_shared<std::vector<std::int64_t>>();
  kernels::maxpool_forward(in, x.value().data(), win, y.data(), *argmax);
  if (argmax_out) *argmax_out = *argmax;
  return x.tape->record(od, std::move(y), {x.id}, [in, win, argmax, xi = x.id](Tape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    kernels::maxpool_backward(in, win, *argmax, t.node(self).grad.data(), t.grad(xi).data());
  });
}

template <typename T>
Var<T> avgpool(Var<T> x, const Window& win) {
  const Dims in = x.dims();
  const Dims od = kernels::pool_out_dims(in, win);
  Vec<T> y(od.size());
  kernels::avgpool_forward(in, x.value().data(), win, y.data());
  return x.tape->record(od, std::move(y), {x.id}, [in, win, xi = x.id](Tape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    kernels::avgpool_backward(in, win, t.node(self).grad.data(), t.grad(xi).data());
  });
}

template <typename T>
Var<T> dropout(Var<T> x, std::vector<std::uint8_t> keep, T rate) {
  const Dims d = x.dims();
  require(keep.size() == std::size_t(d.n) * d.block(), ErrorKind::Shape, "dropout: mask size");
  Vec<T> y(d.size());
  kernels::dropout_apply(d, x.value().data(), keep, rate, y.data());
  auto mask = std::make_shared<std::vector<std::uint8_t>>(std::move(keep));
  return x.tape->record(d, std::move(y), {x.id}, [d, rate, mask, xi = x.id](Tape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    Vec<T> g(d.size());
    kernels::dropout_apply(d, t.node(self).grad.data(), *mask, rate, g.data());
    t.grad(xi) += g;
  });
}

template <typename T>
Var<T> upsample(Var<T> x, int f) {
  const Dims in = x.dims();
  const Dims od{in.n, in.p, in.c, in.h * f, in.w * f};
  Vec<T> y(od.size());
  kernels::upsample_forward(in, x.value().data(), f, y.data());
  return x.tape->record(od, std::move(y), {x.id}, [in, f, xi = x.id](Tape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    kernels::upsample_backward(in, f, t.node(self).grad.data(), t.grad(xi).data());
  });
}

template <typename T>
Var<T> add(Var<T> x, Var<T> y) {
  require(x.dims() == y.dims(), ErrorKind::Shape,
          "add: " + to_string(x.dims()) + " vs " + to_string(y.dims()));
  return x.tape->record(x.dims(), x.value() + y.value(), {x.id, y.id},
                        [xi = x.id, yi = y.id](Tape<T>& t, int self) {
                          accumulate(t, xi, t.node(self).grad);
                          accumulate(t, yi, t.node(self).grad);
                        });
}

template <typename T>
Var<T> sub(Var<T> x, Var<T> y) {
  require(x.dims() == y.dims(), ErrorKind::Shape, "sub: dims mismatch");
  return x.tape->record(x.dims(), x.value() - y.value(), {x.id, y.id},
                        [xi = x.id, yi = y.id](Tape<T>& t, int self) {
                          accumulate(t, xi, t.node(self).grad);
                          accumulate(t, yi, -t.node(self).grad);
                        });
}

template <typename T>
Var<T> scale(Var<T> x, T s) {
  return x.tape->record(x.dims(), x.value() * s, {x.id}, [s, xi = x.id](Tape<T>& t, int self) {
    accumulate(t, xi, t.node(self).grad * s);
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  Vec<T> y(1);
  y[0] = x.value().sum();
  return x.tape->record(Dims{}, std::move(y), {x.id}, [xi = x.id](Tape<T>& t, int self) {
    accumulate(t, xi, Vec<T>::Constant(t.node(xi).value.size(), t.node(self).grad[0]));
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  return scale(sum(x), T{1} / T(x.dims().size()));
}

// [n,1,c,h,w] × 3 → [n,4,c,h,w] with a zero real plane.
template <typename T>
Var<T> lift(Var<T> a, Var<T> b, Var<T> c) {
  const Dims d = a.dims();
  require(d.p == 1 && b.dims() == d && c.dims() == d, ErrorKind::Shape,
          "lift: expects three real tensors of identical dims");
  const Dims od{d.n, 4, d.c, d.h, d.w};
  const Eigen::Index blk = d.block();
  Vec<T> y = Vec<T>::Zero(od.size());
  for (int n = 0; n < d.n; ++n) {
    y.segment((Eigen::Index(n) * 4 + 1) * blk, blk) = a.value().segment(n * blk, blk);
    y.segment((Eigen::Index(n) * 4 + 2) * blk, blk) = b.value().segment(n * blk, blk);
    y.segment((Eigen::Index(n) * 4 + 3) * blk, blk) = c.value().segment(n * blk, blk);
  }
  return a.tape->record(od, std::move(y), {a.id, b.id, c.id},
                        [d, blk, ids = std::array{a.id, b.id, c.id}](Tape<T>& t, int self) {
                          const Vec<T>& g = t.node(self).grad;
                          for (int q = 0; q < 3; ++q) {
                            if (!t.needs_grad(ids[q])) continue;
                            Vec<T>& dq = t.grad(ids[q]);
                            for (int n = 0; n < d.n; ++n)
                              dq.segment(n * blk, blk) +=
                                  g.segment((Eigen::Index(n) * 4 + q + 1) * blk, blk);
                          }
                        });
}

// Picks planes p of every sample: [n,P,...] → [n,1,...].
template <typename T>
Var<T> select_plane(Var<T> x, int p) {
  const Dims d = x.dims();
  require(p >= 0 && p < d.p, ErrorKind::Shape, "select_plane: plane out of range");
  const Dims od{d.n, 1, d.c, d.h, d.w};
  const Eigen::Index blk = d.block();
  Vec<T> y(od.size());
  for (int n = 0; n < d.n; ++n)
    y.segment(n * blk, blk) = x.value().segment((Eigen::Index(n) * d.p + p) * blk, blk);
  return x.tape->record(od, std::move(y), {x.id}, [d, p, blk, xi = x.id](Tape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    Vec<T>& dx = t.grad(xi);
    const Vec<T>& g = t.node(self).grad;
    for (int n = 0; n < d.n; ++n) dx.segment((Eigen::Index(n) * d.p + p) * blk, blk) += g.segment(n * blk, blk);
  });
}

// Sample reordering/selection along the batch axis: y[k] = x[index[k]].
template <typename T>
Var<T> gather(Var<T> x, std::vector<int> index) {
  const Dims d = x.dims();
  const Eigen::Index stride = Eigen::Index(d.p) * d.block();
  Dims od = d;
  od.n = static_cast<int>(index.size());
  Vec<T> y(od.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    require(index[k] >= 0 && index[k] < d.n, ErrorKind::Shape, "gather: index out of range");
    y.segment(Eigen::Index(k) * stride, stride) = x.value().segment(index[k] * stride, stride);
  }
  return x.tape->record(od, std::move(y), {x.id},
                        [stride, index = std::move(index), xi = x.id](Tape<T>& t, int self) {
                          if (!t.needs_grad(xi)) return;
                          Vec<T>& dx = t.grad(xi);
                          const Vec<T>& g = t.node(self).grad;
                          for (std::size_t k = 0; k < index.size(); ++k)
                            dx.segment(index[k] * stride, stride) +=
                                g.segment(Eigen::Index(k) * stride, stride);
                        });
}

template <typename T>
Var<T> concat_batch(std::span<const Var<T>> parts) {
  require(!parts.empty(), ErrorKind::Shape, "concat_batch: nothing to concatenate");
  Dims d = parts[0].dims();
  Dims per = d;
  per.n = 1;
  d.n = 0;
  std::vector<int> ids;
  for (const auto& v : parts) {
    Dims pd = v.dims();
    const int n = pd.n;
    pd.n = 1;
    require(pd == per, ErrorKind::Shape, "concat_batch: per-sample dims differ");
    d.n += n;
    ids.push_back(v.id);
  }
  Vec<T> y(d.size());
  Eigen::Index at = 0;
  for (const auto& v : parts) {
    y.segment(at, v.value().size()) = v.value();
    at += v.value().size();
  }
  return parts[0].tape->record(d, std::move(y), ids, [ids](Tape<T>& t, int self) {
    const Vec<T>& g = t.node(self).grad;
    Eigen::Index off = 0;
    for (int id : ids) {
      const Eigen::Index len = t.node(id).value.size();
      accumulate(t, id, g.segment(off, len));
      off += len;
    }
  });
}

// Per-sample rotation R_n·(·)·R̄_n of a [n,4,...] tensor, given each
// sample's 3×3 rotation matrix. The real plane passes through.
template <typename T>
Var<T> rotate(Var<T> x, std::vector<Eigen::Matrix<T, 3, 3>> mats) {
  const Dims d = x.dims();
  require(d.p == 4, ErrorKind::Shape, "rotate: quaternion tensor expected");
  require(mats.size() == std::size_t(d.n), ErrorKind::Shape, "rotate: one rotor per sample");
  const Eigen::Index blk = d.block();
  auto apply = [d, blk](const std::vector<Eigen::Matrix<T, 3, 3>>& ms, bool transpose,
                        const Vec<T>& in, Vec<T>& out) {
    for (int n = 0; n < d.n; ++n) {
      const Eigen::Index base = Eigen::Index(n) * 4 * blk;
      out.segment(base, blk) += in.segment(base, blk);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          const T m = transpose ? ms[n](c, r) : ms[n](r, c);
          if (m != T{0}) out.segment(base + (r + 1) * blk, blk) += m * in.segment(base + (c + 1) * blk, blk);
        }
    }
  };
  Vec<T> y = Vec<T>::Zero(d.size());
  apply(mats, false, x.value(), y);
  return x.tape->record(d, std::move(y), {x.id},
                        [apply, mats = std::move(mats), xi = x.id](Tape<T>& t, int self) {
                          if (!t.needs_grad(xi)) return;
                          apply(mats, true, t.node(self).grad, t.grad(xi));
                        });
}

// Softmax over each (n, p) block.
template <typename T>
Var<T> softmax(Var<T> x) {
  const Dims d = x.dims();
  const Eigen::Index blk = d.block();
  Vec<T> y(d.size());
  for (Eigen::Index b = 0; b < Eigen::Index(d.n) * d.p; ++b) {
    auto in = x.value().segment(b * blk, blk);
    Vec<T> e = (in - in.maxCoeff()).exp();
    y.segment(b * blk, blk) = e / e.sum();
  }
  return x.tape->record(d, std::move(y), {x.id}, [d, blk, xi = x.id](Tape<T>& t, int self) {
    if (!t.needs_grad(xi)) return;
    const Vec<T>& s = t.node(self).value;
    const Vec<T>& g = t.node(self).grad;
    Vec<T>& dx = t.grad(xi);
    for (Eigen::Index b = 0; b < Eigen::Index(d.n) * d.p; ++b) {
      auto sb = s.segment(b * blk, blk);
      auto gb = g.segment(b * blk, blk);
      const T dot = (sb * gb).sum();
      dx.segment(b * blk, blk) += sb * (gb - dot);
    }
  });
}

// Mean softmax cross-entropy of [n,1,K] logits against integer labels.
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::vector<int> labels) {
  const Dims d = logits.dims();
  require(d.p == 1 && labels.size() == std::size_t(d.n), ErrorKind::Shape,
          "softmax_cross_entropy: one label per sample expected");
  const Eigen::Index k = d.block();
  auto probs = std::make_shared<Vec<T>>(d.size());
  T loss{0};
  for (int n = 0; n < d.n; ++n) {
    require(labels[n] >= 0 && labels[n] < k, ErrorKind::Shape, "label out of range");
    auto z = logits.value().segment(n * k, k);
    const T m = z.maxCoeff();
    Vec<T> e = (z - m).exp();
    const T s = e.sum();
    probs->segment(n * k, k) = e / s;
    loss += -(z[labels[n]] - m - std::log(s));
  }
  Vec<T> y(1);
  y[0] = loss / T(d.n);
  return logits.tape->record(Dims{}, std::move(y), {logits.id},
                             [d, k, probs, labels = std::move(labels), li = logits.id](Tape<T>& t, int self) {
                               if (!t.needs_grad(li)) return;
                               Vec<T> g = *probs;
                               for (int n = 0; n < d.n; ++n) g[n * k + labels[n]] -= T{1};
                               t.grad(li) += g * (t.node(self).grad[0] / T(d.n));
                             });
}

// Mean logistic loss of scalar logits against 0/1 targets.
template <typename T>
Var<T> bce_with_logits(Var<T> logits, std::vector<int> targets) {
  const Vec<T>& z = logits.value();
  require(z.size() == Eigen::Index(targets.size()), ErrorKind::Shape, "bce: one target per logit");
  Vec<T> tgt(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) tgt[i] = targets[i] ? T{1} : T{0};
  // log(1 + e^z) − t·z, evaluated stably.
  Vec<T> l = z.max(T{0}) - z * tgt + (T{1} + (-z.abs()).exp()).log();
  Vec<T> y(1);
  y[0] = l.mean();
  return logits.tape->record(Dims{}, std::move(y), {logits.id},
                             [tgt, li = logits.id](Tape<T>& t, int self) {
                               if (!t.needs_grad(li)) return;
                               const Vec<T>& zz = t.node(li).value;
                               Vec<T> s = T{1} / (T{1} + (-zz).exp());
                               t.grad(li) += (s - tgt) * (t.node(self).grad[0] / T(zz.size()));
                             });
}

// Mean squared error against a constant target.
template <typename T>
Var<T> mse(Var<T> x, const Vec<T>& target) {
  require(target.size() == x.value().size(), ErrorKind::Shape, "mse: size mismatch");
  Vec<T> diff = x.value() - target;
  Vec<T> y(1);
  y[0] = diff.square().mean();
  return x.tape->record(Dims{}, std::move(y), {x.id}, [diff, xi = x.id](Tape<T>& t, int self) {
    accumulate(t, xi, diff * (T{2} * t.node(self).grad[0] / T(diff.size())));
  });
}

}  // namespace qnn::ops
