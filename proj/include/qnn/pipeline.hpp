#pragma once

// Split inference: encoder g and encryption on the client, key-blind
// processing on the server, decryption and decoder d back on the client.

#include <numeric>

#include "qnn/network.hpp"

namespace qnn {

// The key never travels with the payload; key_id only pairs a feature with
// its key file for later scoring.
template <typename T>
struct EncryptedFeature {
  QTensor<T> payload;
  std::uint64_t key_id = 0;
};

// Decoder layers up to (not including) a trailing softmax. A view, not a
// copy, so the tape sees the real parameters.
template <typename T>
std::span<const LayerSpec<T>> logits_stack(const Stack<T>& decoder) {
  std::span<const LayerSpec<T>> out(decoder);
  if (!out.empty() && out.back().kind == LayerKind::Softmax) out = out.first(out.size() - 1);
  return out;
}

template <typename T>
std::vector<RealTensor<T>> encoder_forward(std::span<const RealTensor<T>> images,
                                           const NetworkSpec<T>& net) {
  Tape<T> tape(false);
  ForwardContext ctx;
  Var<T> a = apply_layers(to_var<T>(tape, images), net.encoder, ctx);
  return to_real_tensors(a, Shape{0, 0, 0});
}

template <typename T>
RealTensor<T> encoder_forward(const RealTensor<T>& image, const NetworkSpec<T>& net) {
  return encoder_forward<T>(std::span(&image, 1), net).front();
}

// rotate_all(R, lift(g(I), g(I′), g(I″))).
template <typename T>
EncryptedFeature<T> encode(const RealTensor<T>& image, const RealTensor<T>& fool1,
                           const RealTensor<T>& fool2, const NetworkSpec<T>& net,
                           const RotationKey& key) {
  require(image.shape == fool1.shape && image.shape == fool2.shape, ErrorKind::Shape,
          "encode: inputs differ in shape");
  validate(key);
  const RealTensor<T> batch[3] = {image, fool1, fool2};
  auto feats = encoder_forward<T>(batch, net);
  return {rotate_all(rotor(key), lift(feats[0], feats[1], feats[2])), key_id(key)};
}

// Two fooling partners per sample, drawn uniformly from the other batch members.
inline std::vector<std::array<int, 2>> sample_fooling_pairs(int n, Rng& rng) {
  std::vector<std::array<int, 2>> out(std::size_t(n), {0, 0});
  if (n < 2) return out;
  std::uniform_int_distribution<int> pick(0, n - 2);
  for (int s = 0; s < n; ++s)
    for (int q = 0; q < 2; ++q) {
      const int r = pick(rng);
      out[std::size_t(s)][std::size_t(q)] = r >= s ? r + 1 : r;
    }
  return out;
}

// Encrypts a batch, one key per sample; fooling counterparts are encoder
// features of other batch members.
template <typename T>
std::vector<EncryptedFeature<T>> encode_batch(std::span<const RealTensor<T>> images,
                                              const NetworkSpec<T>& net,
                                              std::span<const RotationKey> keys, Rng& rng) {
  require(images.size() == keys.size(), ErrorKind::Shape, "encode_batch: one key per image");
  auto feats = encoder_forward<T>(images, net);
  const auto pairs = sample_fooling_pairs(static_cast<int>(images.size()), rng);
  std::vector<EncryptedFeature<T>> out;
  for (std::size_t s = 0; s < images.size(); ++s) {
    validate(keys[s]);
    const auto& p = pairs[s];
    out.push_back({rotate_all(rotor(keys[s]), lift(feats[s], feats[p[0]], feats[p[1]])),
                   key_id(keys[s])});
  }
  return out;
}

// Φ over a batch of payloads. Takes no key by construction.
template <typename T>
std::vector<EncryptedFeature<T>> run_processing(std::span<const EncryptedFeature<T>> batch,
                                                const NetworkSpec<T>& net) {
  for (const auto& l : net.processing)
    require(is_equivariant(l), ErrorKind::Config,
            "processing stack contains non-equivariant layer '" + kind_name(l.kind) + "'");
  if (batch.empty()) return {};
  std::vector<QTensor<T>> payloads;
  for (const auto& f : batch) payloads.push_back(f.payload);
  ForwardContext ctx;
  auto out = forward_batch<T>(payloads, net.processing, ctx);
  std::vector<EncryptedFeature<T>> res;
  for (std::size_t s = 0; s < out.size(); ++s) res.push_back({std::move(out[s]), batch[s].key_id});
  return res;
}

template <typename T>
EncryptedFeature<T> run_processing(const EncryptedFeature<T>& f, const NetworkSpec<T>& net) {
  return run_processing<T>(std::span(&f, 1), net).front();
}

// Im_i(R̄∘h∘R).
template <typename T>
RealTensor<T> decrypt_plane(const QTensor<T>& h, const RotationKey& key) {
  validate(key);
  // Row 0 of the inverse rotation is column 0 of the forward one.
  const Eigen::Matrix3d m = rotation_matrix(rotor(key));
  return {h.shape, T(m(0, 0)) * h.planes[1] + T(m(1, 0)) * h.planes[2] + T(m(2, 0)) * h.planes[3]};
}

template <typename T>
std::vector<RealTensor<T>> decoder_forward(std::span<const RealTensor<T>> feats,
                                           const NetworkSpec<T>& net) {
  Tape<T> tape(false);
  ForwardContext ctx;
  Var<T> y = apply_layers(to_var<T>(tape, feats), net.decoder, ctx);
  return to_real_tensors(y, Shape{0});
}

// Class scores ŷ for each processed feature.
template <typename T>
std::vector<RealTensor<T>> decode(std::span<const EncryptedFeature<T>> batch,
                                  std::span<const RotationKey> keys, const NetworkSpec<T>& net) {
  require(batch.size() == keys.size(), ErrorKind::Shape, "decode: one key per feature");
  std::vector<RealTensor<T>> planes;
  for (std::size_t s = 0; s < batch.size(); ++s)
    planes.push_back(decrypt_plane(batch[s].payload, keys[s]));
  if (planes.empty()) return {};
  return decoder_forward<T>(planes, net);
}

template <typename T>
RealTensor<T> decode(const EncryptedFeature<T>& h, const RotationKey& key, const NetworkSpec<T>& net) {
  return decode<T>(std::span(&h, 1), std::span(&key, 1), net).front();
}

// Noisy-DNN comparison mode: g(I) + γ·ε with ε ~ N(0, 1).
template <typename T>
RealTensor<T> noisy_baseline_encode(const RealTensor<T>& image, const NetworkSpec<T>& net, double gamma,
                                    Rng& rng) {
  require(gamma >= 0.0, ErrorKind::Config, "noisy baseline: gamma must be non-negative");
  RealTensor<T> a = encoder_forward(image, net);
  if (gamma == 0.0) return a;
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index v = 0; v < a.size(); ++v) a.values[v] += T(gamma * g(rng));
  return a;
}

// Full client–server–client pass for a batch with per-sample keys.
template <typename T>
std::vector<RealTensor<T>> predict(std::span<const RealTensor<T>> images, const NetworkSpec<T>& net,
                                   std::span<const RotationKey> keys, Rng& rng) {
  if (net.plaintext) {
    Tape<T> tape(false);
    ForwardContext ctx;
    Var<T> x = apply_layers(to_var<T>(tape, images), net.encoder, ctx);
    x = apply_layers(x, net.processing, ctx);
    x = apply_layers(x, net.decoder, ctx);
    return to_real_tensors(x, Shape{0});
  }
  auto enc = encode_batch(images, net, keys, rng);
  auto proc = run_processing<T>(enc, net);
  return decode<T>(proc, keys, net);
}

template <typename T>
int argmax(const RealTensor<T>& scores) {
  Eigen::Index best = 0;
  scores.values.maxCoeff(&best);
  return static_cast<int>(best);
}

// Stacks per-sample tensors into one with a leading batch extent, and back.
template <typename T>
QTensor<T> stack_batch(std::span<const QTensor<T>> batch) {
  require(!batch.empty(), ErrorKind::Shape, "stack_batch: empty batch");
  Shape s{static_cast<int>(batch.size())};
  s.insert(s.end(), batch[0].shape.begin(), batch[0].shape.end());
  QTensor<T> out(s);
  const Eigen::Index blk = batch[0].size();
  for (std::size_t n = 0; n < batch.size(); ++n) {
    require(batch[n].shape == batch[0].shape, ErrorKind::Shape, "stack_batch: shapes differ");
    for (int p = 0; p < 4; ++p) out.planes[p].segment(Eigen::Index(n) * blk, blk) = batch[n].planes[p];
  }
  return out;
}

template <typename T>
std::vector<QTensor<T>> unstack_batch(const QTensor<T>& x) {
  require(x.shape.size() >= 2, ErrorKind::Shape, "unstack_batch: leading batch extent expected");
  const Shape per(x.shape.begin() + 1, x.shape.end());
  const Eigen::Index blk = numel(per);
  std::vector<QTensor<T>> out;
  for (int n = 0; n < x.shape[0]; ++n) {
    QTensor<T> q(per);
    for (int p = 0; p < 4; ++p) q.planes[p] = x.planes[p].segment(Eigen::Index(n) * blk, blk);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace qnn
