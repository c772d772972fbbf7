#pragma once

// Task + adversarial training of a split QNN, plus finite-difference checks.
//
// One step: several critic updates on true-phase features a versus
// wrong-phase decryptions a′ (weights clipped), then one descent step of
// encoder, processing and decoder on task loss + critic term.

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>

#include "qnn/io.hpp"
#include "qnn/pipeline.hpp"

namespace qnn {

struct LossReport {
  int step = 0;
  double task_loss = 0;
  double gan_loss = 0;
  double total = 0;

  bool operator==(const LossReport&) const = default;
};

struct TrainConfig {
  int steps = 1000;
  int batch = 32;
  double lr = 0.01;
  double critic_lr = 0.01;
  bool adversarial = true;
  int critic_steps = 5;
  double clip = 0.01;
  int fake_phases = 4;
  double gan_weight = 1.0;
  std::uint64_t seed = 1;
};

// p ← p − lr·g, then clamp into clip when given.
template <typename T>
void sgd_update(const std::vector<RealTensor<T>*>& params, const std::vector<Vec<T>>& grads, double lr,
                std::optional<std::pair<double, double>> clip = std::nullopt) {
  require(params.size() == grads.size(), ErrorKind::Shape, "sgd_update: one gradient per parameter");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i]->values;
    require(grads[i].size() == w.size(), ErrorKind::Shape, "sgd_update: gradient size mismatch");
    w -= T(lr) * grads[i];
    if (clip) w = w.max(T(clip->first)).min(T(clip->second));
  }
}

// Critic on flattened features: FC → bias → ReLU → FC → bias, one score per sample.
template <typename T>
Stack<T> make_critic(int in_features, int hidden, Rng& rng) {
  using L = LayerSpec<T>;
  Stack<T> s{L::fully_connected(in_features, hidden), L::bias(hidden), L::simple(LayerKind::ReLU),
             L::fully_connected(hidden, 1), L::bias(1)};
  initialize(s, rng);
  return s;
}

template <typename T>
struct WganTerms {
  Var<T> objective;  // D(a) − mean over R′ of D(a′)
  Var<T> d_loss;     // −objective, minimized by the critic
  Var<T> g_loss;     // objective, minimized by the generator
};

// Scores are [n,1,1] critic outputs; the objective averages over samples.
template <typename T>
WganTerms<T> wgan_losses(Var<T> real_scores, std::span<const Var<T>> fake_scores) {
  require(!fake_scores.empty(), ErrorKind::Config, "wgan_losses: empty fake set");
  Var<T> fake = ops::mean(fake_scores[0]);
  for (std::size_t k = 1; k < fake_scores.size(); ++k) fake = ops::add(fake, ops::mean(fake_scores[k]));
  fake = ops::scale(fake, T(1) / T(fake_scores.size()));
  Var<T> obj = ops::sub(ops::mean(real_scores), fake);
  return {obj, ops::scale(obj, T(-1)), obj};
}

template <typename T>
std::vector<Eigen::Matrix<T, 3, 3>> rotation_matrices(std::span<const RotationKey> keys, bool inverse) {
  std::vector<Eigen::Matrix<T, 3, 3>> out;
  for (const auto& k : keys) {
    const Eigen::Matrix3d m = rotation_matrix(rotor(k));
    out.push_back((inverse ? Eigen::Matrix3d(m.transpose()) : m).cast<T>());
  }
  return out;
}

inline std::vector<RotationKey> sample_keys(std::size_t n, Rng& rng) {
  std::vector<RotationKey> keys;
  for (std::size_t s = 0; s < n; ++s) keys.push_back(sample_rotation(rng));
  return keys;
}

// Wrong phases R′ ≠ R from the key distribution, resampled on collision.
inline std::vector<RotationKey> sample_fake_keys(std::span<const RotationKey> truth, Rng& rng) {
  std::vector<RotationKey> keys;
  for (const auto& t : truth) {
    RotationKey k = sample_rotation(rng);
    while (k.axis == t.axis && k.angle == t.angle) k = sample_rotation(rng);
    keys.push_back(k);
  }
  return keys;
}

// Im_i(R̄·f·R) per sample.
template <typename T>
Var<T> decrypt_var(Var<T> f, std::span<const RotationKey> keys) {
  return ops::select_plane(ops::rotate(f, rotation_matrices<T>(keys, true)), 1);
}

template <typename T>
struct PipelineGraph {
  Var<T> a;       // encoder features [n,1,...]
  Var<T> f;       // encrypted features [n,4,...] (invalid for plaintext nets)
  Var<T> logits;  // decoder output before softmax
};

// Differentiable forward pass of the whole split network.
template <typename T>
PipelineGraph<T> build_pipeline(Tape<T>& tape, const NetworkSpec<T>& net,
                                std::span<const RealTensor<T>> images,
                                const std::vector<std::array<int, 2>>& fooling,
                                std::span<const RotationKey> keys, ForwardContext& ctx) {
  PipelineGraph<T> g;
  g.a = apply_layers(to_var<T>(tape, images), net.encoder, ctx);
  Var<T> out;
  if (net.plaintext) {
    out = apply_layers(g.a, net.processing, ctx);
  } else {
    std::vector<int> i1, i2;
    for (const auto& p : fooling) {
      i1.push_back(p[0]);
      i2.push_back(p[1]);
    }
    Var<T> x = ops::lift(g.a, ops::gather(g.a, i1), ops::gather(g.a, i2));
    g.f = ops::rotate(x, rotation_matrices<T>(keys, false));
    out = decrypt_var(apply_layers(g.f, net.processing, ctx), keys);
  }
  g.logits = apply_layers(out, logits_stack(net.decoder), ctx);
  return g;
}

// Critic scores of the true phase and of `fake_phases` wrong phases.
template <typename T>
std::pair<Var<T>, std::vector<Var<T>>> critic_scores(Var<T> a, Var<T> f, std::span<const RotationKey> keys,
                                                      const Stack<T>& critic, int fake_phases, Rng& rng,
                                                      ForwardContext& ctx) {
  Var<T> real = apply_layers(a, critic, ctx);
  std::vector<Var<T>> fakes;
  for (int k = 0; k < fake_phases; ++k) {
    const auto fk = sample_fake_keys(keys, rng);
    fakes.push_back(apply_layers(decrypt_var(f, std::span<const RotationKey>(fk)), critic, ctx));
  }
  return {real, std::move(fakes)};
}

inline bool finite(double v) { return std::isfinite(v); }

// One critic phase then one generator/task step. Critic may be null or
// cfg.adversarial false for task-only training.
template <typename T>
LossReport train_step(NetworkSpec<T>& net, Stack<T>* critic, std::span<const RealTensor<T>> images,
                      std::span<const int> labels, const TrainConfig& cfg, Rng& rng, int step) {
  require(!images.empty() && images.size() == labels.size(), ErrorKind::Shape,
          "train_step: nonempty batch with one label per image expected");
  const int n = static_cast<int>(images.size());
  const bool gan = cfg.adversarial && critic != nullptr && !net.plaintext;
  const auto keys = sample_keys(std::size_t(n), rng);
  const auto fooling = sample_fooling_pairs(n, rng);

  if (gan) {
    // Encoder weights are fixed during the critic phase, so a, b, c are constants.
    Tape<T> enc_tape(false);
    ForwardContext ectx;
    Var<T> a0 = apply_layers(to_var<T>(enc_tape, images), net.encoder, ectx);
    const Dims ad = a0.dims();
    const Vec<T> a_val = a0.value();
    std::vector<RealTensor<T>*> cparams;
    collect_parameters(*critic, cparams);
    for (int s = 0; s < cfg.critic_steps; ++s) {
      Tape<T> tape;
      ForwardContext ctx;
      Var<T> a = tape.constant(ad, a_val);
      std::vector<int> i1, i2;
      for (const auto& p : fooling) {
        i1.push_back(p[0]);
        i2.push_back(p[1]);
      }
      const auto rk = sample_keys(std::size_t(n), rng);
      Var<T> f = ops::rotate(ops::lift(a, ops::gather(a, i1), ops::gather(a, i2)),
                             rotation_matrices<T>(rk, false));
      auto [real, fakes] = critic_scores(a, f, std::span<const RotationKey>(rk), *critic, cfg.fake_phases, rng, ctx);
      auto terms = wgan_losses<T>(real, fakes);
      require(finite(double(terms.d_loss.value()[0])), ErrorKind::Numeric, "critic loss diverged");
      tape.backward(terms.d_loss);
      std::vector<Vec<T>> grads;
      for (auto* w : cparams) grads.push_back(tape.gradient(*w));
      sgd_update(cparams, grads, cfg.critic_lr, std::pair{-cfg.clip, cfg.clip});
    }
  }

  Tape<T> tape;
  if (critic) {
    std::vector<const RealTensor<T>*> cparams;
    collect_parameters(std::as_const(*critic), cparams);
    for (const auto* w : cparams) tape.freeze(*w);
  }
  ForwardContext ctx;
  ctx.training = true;
  ctx.rng = &rng;
  auto g = build_pipeline(tape, net, images, fooling, keys, ctx);
  Var<T> task = ops::softmax_cross_entropy(g.logits, std::vector<int>(labels.begin(), labels.end()));
  Var<T> total = task;
  LossReport rep;
  rep.step = step;
  rep.task_loss = double(task.value()[0]);
  if (gan) {
    ForwardContext cctx;
    auto [real, fakes] = critic_scores(g.a, g.f, std::span<const RotationKey>(keys), *critic, cfg.fake_phases, rng, cctx);
    Var<T> gl = ops::scale(wgan_losses<T>(real, fakes).g_loss, T(cfg.gan_weight));
    rep.gan_loss = double(gl.value()[0]);
    total = ops::add(task, gl);
  }
  rep.total = rep.task_loss + rep.gan_loss;
  require(finite(rep.total), ErrorKind::Numeric,
          "training diverged at step " + std::to_string(step) + " (non-finite loss)");
  tape.backward(total);
  auto params = net.parameters();
  std::vector<Vec<T>> grads;
  for (auto* w : params) grads.push_back(tape.gradient(*w));
  sgd_update(params, grads, cfg.lr);
  return rep;
}

// Shuffled mini-batch training; one log line per step when log is given.
template <typename T>
std::vector<LossReport> train(NetworkSpec<T>& net, Stack<T>* critic, const std::vector<RealTensor<T>>& images,
                              const std::vector<int>& labels, const TrainConfig& cfg,
                              std::ostream* log = nullptr) {
  require(!images.empty() && images.size() == labels.size(), ErrorKind::Shape,
          "train: nonempty dataset with one label per image expected");
  require(cfg.batch >= 1 && cfg.steps >= 0, ErrorKind::Config, "train: bad batch/steps");
  Rng rng(cfg.seed);
  std::vector<int> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t at = order.size();
  std::vector<LossReport> reports;
  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<RealTensor<T>> xb;
    std::vector<int> yb;
    while (int(xb.size()) < cfg.batch) {
      if (at == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        at = 0;
      }
      xb.push_back(images[std::size_t(order[at])]);
      yb.push_back(labels[std::size_t(order[at])]);
      ++at;
    }
    reports.push_back(train_step<T>(net, critic, xb, yb, cfg, rng, step));
    if (log) {
      const auto& r = reports.back();
      *log << r.step << '\t' << format_real(r.task_loss) << '\t' << format_real(r.gan_loss) << '\t'
           << format_real(r.total) << '\n';
    }
  }
  return reports;
}

// Held-out class accuracy with a fresh key per sample, evaluated in batches.
template <typename T>
double accuracy(const NetworkSpec<T>& net, const std::vector<RealTensor<T>>& images,
                const std::vector<int>& labels, int batch, std::uint64_t seed) {
  require(!images.empty() && images.size() == labels.size(), ErrorKind::Shape, "accuracy: bad dataset");
  Rng rng(seed);
  std::size_t correct = 0;
  for (std::size_t at = 0; at < images.size(); at += std::size_t(batch)) {
    const std::size_t end = std::min(images.size(), at + std::size_t(batch));
    std::span<const RealTensor<T>> xb(images.data() + at, end - at);
    const auto keys = sample_keys(xb.size(), rng);
    const auto scores = predict<T>(xb, net, keys, rng);
    for (std::size_t s = 0; s < scores.size(); ++s) correct += argmax(scores[s]) == labels[at + s];
  }
  return double(correct) / double(images.size());
}

// ---- finite differences ------------------------------------------------------

struct GradCheckBlock {
  std::string name;
  double max_rel_error = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates where a perturbation crossed a kink or tie
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double tolerance = 1e-3;

  double max_rel_error() const {
    double m = 0;
    for (const auto& b : blocks) m = std::max(m, b.max_rel_error);
    return m;
  }
  bool passed() const { return max_rel_error() <= tolerance; }
};

// loss(tape, ctx) must register every checked tensor through tape.parameter.
// A coordinate whose ± perturbation changes any recorded branch is skipped.
using LossFn = std::function<Var<double>(Tape<double>&, ForwardContext&)>;

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / scale;
}

inline GradCheckReport gradient_check(const std::vector<std::pair<std::string, RealTensor<double>*>>& blocks,
                                      const LossFn& loss, double step = 1e-4, double tolerance = 1e-3,
                                      std::size_t max_coords = 0) {
  GradCheckReport rep;
  rep.tolerance = tolerance;
  auto eval = [&](std::vector<std::int64_t>* branches) {
    Tape<double> t(false);
    ForwardContext ctx;
    ctx.record_branches = branches != nullptr;
    const double v = loss(t, ctx).value()[0];
    if (branches) *branches = std::move(ctx.branches);
    return v;
  };
  Tape<double> tape;
  ForwardContext ctx0;
  ctx0.record_branches = true;
  Var<double> root = loss(tape, ctx0);
  tape.backward(root);
  const auto base = ctx0.branches;
  for (const auto& [name, w] : blocks) {
    GradCheckBlock b;
    b.name = name;
    const Vec<double> g = tape.gradient(*w);
    const Eigen::Index n = w->size();
    const Eigen::Index stride = max_coords && Eigen::Index(max_coords) < n ? n / Eigen::Index(max_coords) : 1;
    for (Eigen::Index i = 0; i < n; i += stride) {
      const double orig = w->values[i];
      std::vector<std::int64_t> bp, bm;
      w->values[i] = orig + step;
      const double lp = eval(&bp);
      w->values[i] = orig - step;
      const double lm = eval(&bm);
      w->values[i] = orig;
      if (bp != base || bm != base) {
        ++b.skipped;
        continue;
      }
      b.max_rel_error = std::max(b.max_rel_error, relative_error(g[i], (lp - lm) / (2 * step)));
      ++b.checked;
    }
    rep.blocks.push_back(b);
  }
  return rep;
}

// Checks every parameter block of net on a small batch through the full
// encrypt → process → decrypt → decode path with fixed keys.
inline GradCheckReport finite_diff_check(NetworkSpec<double>& net, const std::vector<RealTensor<double>>& images,
                                         const std::vector<int>& labels, const std::vector<RotationKey>& keys,
                                         double tolerance = 1e-3, double step = 1e-4, std::size_t max_coords = 0) {
  require(!images.empty() && images.size() == labels.size() && keys.size() == images.size(),
          ErrorKind::Shape, "finite_diff_check: one label and key per image expected");
  const int n = static_cast<int>(images.size());
  std::vector<std::array<int, 2>> fooling;
  for (int s = 0; s < n; ++s) fooling.push_back({(s + 1) % n, (s + 2) % n});
  LossFn loss = [&](Tape<double>& t, ForwardContext& ctx) {
    auto g = build_pipeline<double>(t, net, images, fooling, keys, ctx);
    return ops::softmax_cross_entropy(g.logits, labels);
  };
  std::vector<std::pair<std::string, RealTensor<double>*>> blocks;
  const auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) blocks.emplace_back("param" + std::to_string(i), params[i]);
  return gradient_check(blocks, loss, step, tolerance, max_coords);
}

}  // namespace qnn
