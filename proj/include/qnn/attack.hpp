#pragma once

// Attackers and privacy metrics.
//
// phase enumeration: sample candidate rotors R′, decrypt a′ = Im_i(R̄′ f R′)
//   with each, keep the one a phase discriminator D′ scores highest.
// inversion: a small conv decoder reconstructs I from a′ (first attacker) or
//   from all four planes of f (second attacker).
// property inference: k nearest neighbours in feature space.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>

#include "qnn/datagen.hpp"
#include "qnn/train.hpp"

namespace qnn {

struct AttackReport {
  double delta_theta_mean = 0;
  double delta_theta_std = 0;
  double rank_qnn = 0;
  double rank_complex_mode = 0;
  double recon_error_true_key = 0;
  double recon_error_attacker = 0;
  double recon_error_raw = 0;         // second attacker, all four planes
  double inference_accuracy = 0;      // k-NN on attacker-decrypted features
  double inference_accuracy_plain = 0;  // k-NN on unencrypted encoder features
  int n_trials = 0;

  bool operator==(const AttackReport&) const = default;
};

struct CandidatePhase {
  RotationKey key;
  double score = -std::numeric_limits<double>::infinity();
  RealTensor<float> decrypted;
  std::uint64_t index = 0;
};

// ---- metrics -----------------------------------------------------------------

// Angle between the rotated i-axes R*·i·R̄* and R̂·i·R̂̄.
inline double delta_theta(const RotationKey& truth, const RotationKey& est) {
  const Eigen::Vector3d u = rotate(rotor(truth), Quaternion<>::i()).vec().normalized();
  const Eigen::Vector3d v = rotate(rotor(est), Quaternion<>::i()).vec().normalized();
  return std::acos(std::clamp(u.dot(v), -1.0, 1.0));
}

enum class RankMode { Quaternion, Complex };

// 2/(1 − cos Δθ) or 2π/Δθ; +∞ at Δθ = 0.
inline double anonymity_rank(double dtheta, RankMode mode) {
  require(std::isfinite(dtheta) && dtheta >= 0.0 && dtheta <= M_PI, ErrorKind::Domain,
          "anonymity_rank: delta theta must lie in [0, pi]");
  if (dtheta == 0.0) return std::numeric_limits<double>::infinity();
  return mode == RankMode::Quaternion ? 2.0 / (1.0 - std::cos(dtheta)) : 2.0 * M_PI / dtheta;
}

// Mean absolute per-pixel difference.
template <typename T>
double reconstruction_error(const RealTensor<T>& est, const RealTensor<T>& truth) {
  require(est.shape == truth.shape, ErrorKind::Shape,
          "reconstruction_error: " + to_string(est.shape) + " vs " + to_string(truth.shape));
  if (truth.size() == 0) return 0.0;
  return (est.values.template cast<double>() - truth.values.template cast<double>()).abs().mean();
}

// ---- k-NN property inference ------------------------------------------------

struct KnnResult {
  std::vector<int> predicted;
  double accuracy = 0;  // against query_attrs when given
};

// Euclidean k-NN majority vote; tied votes go to the label met first in
// distance order, equal distances to the lower training index.
template <typename T>
KnnResult knn_property_inference(const std::vector<RealTensor<T>>& train_feats, const std::vector<int>& train_attrs,
                                 const std::vector<RealTensor<T>>& query_feats, int k,
                                 const std::vector<int>* query_attrs = nullptr) {
  require(!train_feats.empty(), ErrorKind::Config, "knn: empty training set");
  require(train_feats.size() == train_attrs.size(), ErrorKind::Shape, "knn: one attribute per training feature");
  require(k >= 1 && std::size_t(k) <= train_feats.size(), ErrorKind::Config, "knn: k must be in [1, train size]");
  const Eigen::Index dim = train_feats[0].size();
  Eigen::MatrixXd tm(Eigen::Index(train_feats.size()), dim);
  for (std::size_t s = 0; s < train_feats.size(); ++s) {
    require(train_feats[s].size() == dim, ErrorKind::Shape, "knn: feature sizes differ");
    tm.row(Eigen::Index(s)) = train_feats[s].values.template cast<double>().matrix().transpose();
  }
  const Eigen::VectorXd tnorm = tm.rowwise().squaredNorm();
  KnnResult res;
  std::vector<std::pair<double, int>> order(train_feats.size());
  for (const auto& q : query_feats) {
    require(q.size() == dim, ErrorKind::Shape, "knn: query size differs from training features");
    const Eigen::VectorXd qv = q.values.template cast<double>().matrix();
    const Eigen::VectorXd d2 = (tnorm - 2.0 * (tm * qv)).array() + qv.squaredNorm();
    for (std::size_t s = 0; s < order.size(); ++s) order[s] = {d2[Eigen::Index(s)], int(s)};
    std::partial_sort(order.begin(), order.begin() + k, order.end());
    std::map<int, int> votes;
    int best_votes = 0;
    for (int r = 0; r < k; ++r) best_votes = std::max(best_votes, ++votes[train_attrs[std::size_t(order[std::size_t(r)].second)]]);
    int label = 0;
    for (int r = 0; r < k; ++r) {
      const int l = train_attrs[std::size_t(order[std::size_t(r)].second)];
      if (votes[l] == best_votes) {
        label = l;
        break;
      }
    }
    res.predicted.push_back(label);
  }
  if (query_attrs) {
    require(query_attrs->size() == query_feats.size(), ErrorKind::Shape, "knn: one attribute per query");
    std::size_t hit = 0;
    for (std::size_t s = 0; s < res.predicted.size(); ++s) hit += res.predicted[s] == (*query_attrs)[s];
    res.accuracy = query_feats.empty() ? 0.0 : double(hit) / double(query_feats.size());
  }
  return res;
}

// ---- phase enumeration ------------------------------------------------------

// Candidate i is sampled from its own substream (seed, i), so the result does
// not depend on how candidates are split across workers.
inline RotationKey candidate_key(std::uint64_t seed, std::uint64_t index) {
  Rng rng = substream(seed, index);
  return sample_rotation(rng, index);
}

// Scores a batch of decrypted candidates [m,1,...] with D′ (one value each).
inline std::vector<double> score_candidates(const Stack<float>& dprime, const std::vector<RealTensor<float>>& batch) {
  Tape<float> tape(false);
  ForwardContext ctx;
  Var<float> y = apply_layers(to_var<float>(tape, batch), dprime, ctx);
  require(y.dims().block() == 1, ErrorKind::Config, "phase discriminator must output one score per sample");
  std::vector<double> out(std::size_t(y.dims().n));
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = double(y.value()[Eigen::Index(s)]);
  return out;
}

using PhaseScorer = std::function<std::vector<double>(const std::vector<RealTensor<float>>&,
                                                      const std::vector<RotationKey>&)>;

inline CandidatePhase phase_enumeration_attack(const QTensor<float>& payload, const PhaseScorer& scorer, int n,
                                               std::uint64_t seed, int workers = 1) {
  require(n >= 1, ErrorKind::Config, "phase attack: need at least one candidate");
  workers = std::max(1, std::min(workers, n));
  constexpr int kChunk = 128;
  std::vector<CandidatePhase> best(static_cast<std::size_t>(workers), CandidatePhase{});
  auto run = [&](int w) {
    CandidatePhase& b = best[std::size_t(w)];
    for (int start = w * kChunk; start < n; start += workers * kChunk) {
      const int end = std::min(n, start + kChunk);
      std::vector<RotationKey> keys;
      std::vector<RealTensor<float>> dec;
      for (int i = start; i < end; ++i) {
        keys.push_back(candidate_key(seed, std::uint64_t(i)));
        dec.push_back(decrypt_plane(payload, keys.back()));
      }
      const auto scores = scorer(dec, keys);
      for (int i = start; i < end; ++i) {
        const double s = scores[std::size_t(i - start)];
        if (s > b.score || (s == b.score && std::uint64_t(i) < b.index) || b.decrypted.size() == 0) {
          b = {keys[std::size_t(i - start)], s, std::move(dec[std::size_t(i - start)]), std::uint64_t(i)};
        }
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  CandidatePhase out = best[0];
  for (const auto& b : best)
    if (b.decrypted.size() && (b.score > out.score || (b.score == out.score && b.index < out.index))) out = b;
  return out;
}

inline CandidatePhase phase_enumeration_attack(const QTensor<float>& payload, const Stack<float>& dprime, int n,
                                               std::uint64_t seed, int workers = 1) {
  PhaseScorer scorer = [&](const std::vector<RealTensor<float>>& dec, const std::vector<RotationKey>&) {
    return score_candidates(dprime, dec);
  };
  return phase_enumeration_attack(payload, scorer, n, seed, workers);
}

// ---- attacker training ------------------------------------------------------

struct AttackTrainConfig {
  int steps = 1500;
  int batch = 32;
  double lr = 0.01;
  int hidden = 64;
  int fake_phases = 4;
  std::uint64_t seed = 11;
};

// D′: same topology as the WGAN critic, trained as a true-phase vs
// wrong-phase classifier (logistic loss) on encryptions of the attacker's
// own images.
inline Stack<float> train_phase_discriminator(const NetworkSpec<float>& net, const std::vector<RealTensor<float>>& images,
                                              const AttackTrainConfig& cfg) {
  require(!images.empty(), ErrorKind::Config, "phase discriminator: empty training set");
  Rng rng(cfg.seed);
  const auto feats = encoder_forward<float>(images, net);
  Stack<float> d = make_critic<float>(int(feats[0].size()), cfg.hidden, rng);
  std::vector<RealTensor<float>*> params;
  collect_parameters(d, params);
  std::uniform_int_distribution<std::size_t> pick(0, feats.size() - 1);
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<RealTensor<float>> batch;
    for (int s = 0; s < cfg.batch; ++s) batch.push_back(feats[pick(rng)]);
    Tape<float> tape;
    ForwardContext ctx;
    Var<float> a = to_var<float>(tape, batch);
    const auto pairs = sample_fooling_pairs(cfg.batch, rng);
    std::vector<int> i1, i2;
    for (const auto& p : pairs) {
      i1.push_back(p[0]);
      i2.push_back(p[1]);
    }
    const auto keys = sample_keys(std::size_t(cfg.batch), rng);
    Var<float> f = ops::rotate(ops::lift(a, ops::gather(a, i1), ops::gather(a, i2)), rotation_matrices<float>(keys, false));
    std::vector<Var<float>> parts{a};
    std::vector<int> targets(std::size_t(cfg.batch), 1);
    for (int k = 0; k < cfg.fake_phases; ++k) {
      const auto fk = sample_fake_keys(keys, rng);
      parts.push_back(decrypt_var(f, std::span<const RotationKey>(fk)));
      targets.insert(targets.end(), std::size_t(cfg.batch), 0);
    }
    Var<float> logits = apply_layers(ops::concat_batch<float>(parts), d, ctx);
    Var<float> loss = ops::bce_with_logits(logits, targets);
    require(std::isfinite(loss.value()[0]), ErrorKind::Numeric, "phase discriminator training diverged");
    tape.backward(loss);
    std::vector<Vec<float>> grads;
    for (auto* w : params) grads.push_back(tape.gradient(*w));
    sgd_update(params, grads, cfg.lr);
  }
  return d;
}

enum class InversionMode { Decrypted, Raw };

// Upsample ×2 → conv3×3 → ReLU → conv3×3 → ReLU → conv3×3 → sigmoid.
inline Stack<float> make_inversion_net(int in_channels, int hidden, int out_channels, Rng& rng) {
  using L = LayerSpec<float>;
  Stack<float> s{L::upsample(2),
                 L::conv(in_channels, hidden, 3, 1, 1), L::bias(hidden), L::simple(LayerKind::ReLU),
                 L::conv(hidden, hidden, 3, 1, 1), L::bias(hidden), L::simple(LayerKind::ReLU),
                 L::conv(hidden, out_channels, 3, 1, 1), L::bias(out_channels), L::simple(LayerKind::Sigmoid)};
  initialize(s, rng);
  return s;
}

struct InversionConfig {
  int steps = 2000;
  int batch = 32;
  double lr = 0.5;
  int hidden = 16;
  std::uint64_t seed = 13;
};

// Raw-mode inputs are the four planes stacked as 4C channels.
inline RealTensor<float> raw_input(const QTensor<float>& f) {
  require(f.shape.size() == 3, ErrorKind::Shape, "raw inversion: {C,H,W} payload expected");
  RealTensor<float> out(Shape{4 * f.shape[0], f.shape[1], f.shape[2]});
  const Eigen::Index blk = f.size();
  for (int p = 0; p < 4; ++p) out.values.segment(p * blk, blk) = f.planes[std::size_t(p)];
  return out;
}

// Trains dec₁ (decrypted a′) or dec₂ (raw payloads) with mean squared error.
inline Stack<float> inversion_attack_train(const std::vector<RealTensor<float>>& inputs,
                                           const std::vector<RealTensor<float>>& images, const InversionConfig& cfg) {
  require(!inputs.empty() && inputs.size() == images.size(), ErrorKind::Config,
          "inversion attack: nonempty paired training set expected");
  require(inputs[0].shape.size() == 3 && images[0].shape.size() == 3, ErrorKind::Shape,
          "inversion attack: {C,H,W} features and images expected");
  Rng rng(cfg.seed);
  Stack<float> dec = make_inversion_net(inputs[0].shape[0], cfg.hidden, images[0].shape[0], rng);
  require(inputs[0].shape[1] * 2 == images[0].shape[1] && inputs[0].shape[2] * 2 == images[0].shape[2],
          ErrorKind::Shape, "inversion attack: features must be half the image resolution");
  std::vector<RealTensor<float>*> params;
  collect_parameters(dec, params);
  std::uniform_int_distribution<std::size_t> pick(0, inputs.size() - 1);
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<RealTensor<float>> xb, yb;
    for (int s = 0; s < cfg.batch; ++s) {
      const std::size_t i = pick(rng);
      xb.push_back(inputs[i]);
      yb.push_back(images[i]);
    }
    Tape<float> tape;
    ForwardContext ctx;
    Var<float> y = apply_layers(to_var<float>(tape, xb), dec, ctx);
    Vec<float> target(y.value().size());
    for (std::size_t s = 0; s < yb.size(); ++s) target.segment(Eigen::Index(s) * yb[s].size(), yb[s].size()) = yb[s].values;
    Var<float> loss = ops::mse(y, target);
    require(std::isfinite(loss.value()[0]), ErrorKind::Numeric, "inversion training diverged");
    tape.backward(loss);
    std::vector<Vec<float>> grads;
    for (auto* w : params) grads.push_back(tape.gradient(*w));
    sgd_update(params, grads, cfg.lr);
  }
  return dec;
}

inline std::vector<RealTensor<float>> inversion_apply(const Stack<float>& dec, const std::vector<RealTensor<float>>& inputs,
                                                      const Shape& image_shape) {
  Tape<float> tape(false);
  ForwardContext ctx;
  Var<float> y = apply_layers(to_var<float>(tape, inputs), dec, ctx);
  return to_real_tensors(y, image_shape);
}

// Attacker input for each inversion mode.
inline std::vector<RealTensor<float>> inversion_inputs(const std::vector<QTensor<float>>& payloads,
                                                       const std::vector<RealTensor<float>>& decrypted,
                                                       InversionMode mode) {
  if (mode == InversionMode::Decrypted) return decrypted;
  std::vector<RealTensor<float>> in;
  for (const auto& p : payloads) in.push_back(raw_input(p));
  return in;
}

// ---- benchmark --------------------------------------------------------------

struct BenchConfig {
  int trials = 100;            // protected test features attacked
  int candidates = 1000;       // phase-enumeration candidates per feature
  int attacker_features = 300; // attacker's own features decrypted for dec₁ / k-NN training
  int knn_k = 1;
  int knn_attr = 1;            // index into attr_labels (1 = quadrant)
  int workers = 1;
  std::uint64_t seed = 17;
  AttackTrainConfig dprime;
  InversionConfig inversion;
};

struct BenchArtifacts {
  Stack<float> dprime;
  Stack<float> dec_true;  // trained on (a, I)
  Stack<float> dec_attacker;  // dec₁ trained on attacker-estimated a′
  Stack<float> dec_raw;       // dec₂ trained on raw payloads
};

struct BenchTrace {
  std::vector<double> delta_theta;  // per test feature
  std::vector<double> recon_true, recon_attacker;
  // k-NN inputs, so other k can be scored without rerunning the attack.
  std::vector<RealTensor<float>> knn_train_protected, knn_train_plain;
  std::vector<RealTensor<float>> knn_query_protected, knn_query_plain;
  std::vector<int> knn_train_attr, knn_query_attr;
};

namespace detail {

inline std::vector<RealTensor<float>> pixels_of(const std::vector<LabeledImage>& d, std::size_t count) {
  std::vector<RealTensor<float>> out;
  for (std::size_t s = 0; s < std::min(count, d.size()); ++s) out.push_back(d[s].pixels);
  return out;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

// Encrypts images with fresh keys; fooling partners from the same set.
inline std::pair<std::vector<EncryptedFeature<float>>, std::vector<RotationKey>> encrypt_set(
    const NetworkSpec<float>& net, const std::vector<RealTensor<float>>& images, Rng& rng) {
  auto keys = sample_keys(images.size(), rng);
  auto enc = encode_batch<float>(images, net, keys, rng);
  return {std::move(enc), std::move(keys)};
}

inline std::vector<CandidatePhase> attack_all(const std::vector<EncryptedFeature<float>>& feats, const Stack<float>& dprime,
                                              int candidates, std::uint64_t seed, int workers) {
  std::vector<CandidatePhase> out;
  for (std::size_t s = 0; s < feats.size(); ++s)
    out.push_back(phase_enumeration_attack(feats[s].payload, dprime, candidates, splitmix64(seed + s), workers));
  return out;
}

}  // namespace detail

// Full attack suite against a trained QNN. The attacker owns `attacker_data`
// (images + attributes, may query the encoder); the victim's `test_data` is
// encrypted under fresh secret keys that are used only for scoring.
inline AttackReport run_benchmark(const NetworkSpec<float>& net, const std::vector<LabeledImage>& attacker_data,
                                  const std::vector<LabeledImage>& test_data, const BenchConfig& cfg,
                                  BenchArtifacts* artifacts = nullptr, BenchTrace* trace = nullptr) {
  require(!net.plaintext, ErrorKind::Config, "benchmark: a quaternion network is required");
  require(!attacker_data.empty() && !test_data.empty(), ErrorKind::Config, "benchmark: empty dataset");
  require(cfg.trials >= 1 && cfg.trials <= int(test_data.size()), ErrorKind::Config,
          "benchmark: trials must be in [1, test set size]");
  Rng rng(cfg.seed);
  const auto atk_images = detail::pixels_of(attacker_data, attacker_data.size());
  const auto test_images = detail::pixels_of(test_data, std::size_t(cfg.trials));
  const Shape image_shape = test_images[0].shape;

  // Attacker side: D′ from own images, then dec₁ and k-NN on own features
  // decrypted with the attacker's own phase estimates.
  BenchArtifacts art;
  art.dprime = train_phase_discriminator(net, atk_images, cfg.dprime);
  const std::size_t na = std::min<std::size_t>(std::size_t(cfg.attacker_features), atk_images.size());
  std::vector<RealTensor<float>> atk_subset(atk_images.begin(), atk_images.begin() + std::ptrdiff_t(na));
  auto [atk_enc, atk_keys] = detail::encrypt_set(net, atk_subset, rng);
  const auto atk_est = detail::attack_all(atk_enc, art.dprime, cfg.candidates, cfg.seed ^ 0xa5a5u, cfg.workers);
  std::vector<RealTensor<float>> atk_dec, atk_raw;
  std::vector<int> atk_attr;
  for (std::size_t s = 0; s < na; ++s) {
    atk_dec.push_back(atk_est[s].decrypted);
    atk_raw.push_back(raw_input(atk_enc[s].payload));
    atk_attr.push_back(attacker_data[s].attr_labels.at(std::size_t(cfg.knn_attr)));
  }
  const auto atk_plain = encoder_forward<float>(atk_subset, net);
  InversionConfig icfg = cfg.inversion;
  art.dec_attacker = inversion_attack_train(atk_dec, atk_subset, icfg);
  art.dec_raw = inversion_attack_train(atk_raw, atk_subset, icfg);
  // Reference decoder with full knowledge: trained on true-key decryptions.
  art.dec_true = inversion_attack_train(encoder_forward<float>(atk_images, net), atk_images, icfg);

  // Victim side.
  auto [test_enc, test_keys] = detail::encrypt_set(net, test_images, rng);
  const auto est = detail::attack_all(test_enc, art.dprime, cfg.candidates, cfg.seed ^ 0x5a5au, cfg.workers);
  BenchTrace tr;
  std::vector<RealTensor<float>> true_dec, est_dec, raw;
  std::vector<int> test_attr;
  for (std::size_t s = 0; s < test_images.size(); ++s) {
    tr.delta_theta.push_back(delta_theta(test_keys[s], est[s].key));
    true_dec.push_back(decrypt_plane(test_enc[s].payload, test_keys[s]));
    est_dec.push_back(est[s].decrypted);
    raw.push_back(raw_input(test_enc[s].payload));
    test_attr.push_back(test_data[s].attr_labels.at(std::size_t(cfg.knn_attr)));
  }
  const auto rec_true = inversion_apply(art.dec_true, true_dec, image_shape);
  const auto rec_atk = inversion_apply(art.dec_attacker, est_dec, image_shape);
  const auto rec_raw = inversion_apply(art.dec_raw, raw, image_shape);
  std::vector<double> rr;
  for (std::size_t s = 0; s < test_images.size(); ++s) {
    tr.recon_true.push_back(reconstruction_error(rec_true[s], test_images[s]));
    tr.recon_attacker.push_back(reconstruction_error(rec_atk[s], test_images[s]));
    rr.push_back(reconstruction_error(rec_raw[s], test_images[s]));
  }

  AttackReport rep;
  rep.n_trials = int(test_images.size());
  rep.delta_theta_mean = detail::mean_of(tr.delta_theta);
  double var = 0;
  for (double d : tr.delta_theta) var += (d - rep.delta_theta_mean) * (d - rep.delta_theta_mean);
  rep.delta_theta_std = tr.delta_theta.size() > 1 ? std::sqrt(var / double(tr.delta_theta.size() - 1)) : 0.0;
  rep.rank_qnn = anonymity_rank(rep.delta_theta_mean, RankMode::Quaternion);
  rep.rank_complex_mode = anonymity_rank(rep.delta_theta_mean, RankMode::Complex);
  rep.recon_error_true_key = detail::mean_of(tr.recon_true);
  rep.recon_error_attacker = detail::mean_of(tr.recon_attacker);
  rep.recon_error_raw = detail::mean_of(rr);
  rep.inference_accuracy = knn_property_inference(atk_dec, atk_attr, est_dec, cfg.knn_k, &test_attr).accuracy;
  const auto test_plain = encoder_forward<float>(test_images, net);
  rep.inference_accuracy_plain = knn_property_inference(atk_plain, atk_attr, test_plain, cfg.knn_k, &test_attr).accuracy;
  if (artifacts) *artifacts = std::move(art);
  if (trace) {
    tr.knn_train_protected = std::move(atk_dec);
    tr.knn_train_plain = atk_plain;
    tr.knn_query_protected = std::move(est_dec);
    tr.knn_query_plain = test_plain;
    tr.knn_train_attr = std::move(atk_attr);
    tr.knn_query_attr = std::move(test_attr);
    *trace = std::move(tr);
  }
  return rep;
}

// ---- report formatting ------------------------------------------------------

inline std::vector<std::pair<std::string, double>> report_fields(const AttackReport& r) {
  return {{"delta_theta_mean", r.delta_theta_mean},
          {"delta_theta_std", r.delta_theta_std},
          {"rank_qnn", r.rank_qnn},
          {"rank_complex_mode", r.rank_complex_mode},
          {"recon_error_true_key", r.recon_error_true_key},
          {"recon_error_attacker", r.recon_error_attacker},
          {"recon_error_raw", r.recon_error_raw},
          {"inference_accuracy", r.inference_accuracy},
          {"inference_accuracy_plain", r.inference_accuracy_plain},
          {"n_trials", double(r.n_trials)}};
}

std::string format_report_kv(const std::vector<std::pair<std::string, double>>& fields);
std::string format_report_table(const std::vector<std::pair<std::string, double>>& fields);

}  // namespace qnn
