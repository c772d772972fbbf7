// qnn: command-line front end.
//
// Exit codes: 0 ok, 1 internal error, 2 usage (unknown flag, bad value),
// 3 missing input file, 10.. one per qnn::ErrorKind (see error.hpp).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "qnn/attack.hpp"
#include "qnn/io.hpp"

namespace fs = std::filesystem;
using namespace qnn;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string format = "table";
  int workers = 1;
};

void add_format(CLI::App* cmd, Common& c) {
  cmd->add_option("--format", c.format, "report format")->check(CLI::IsMember({"table", "kv"}));
}

std::string render(const std::vector<std::pair<std::string, double>>& fields, const std::string& format) {
  return format == "kv" ? format_report_kv(fields) : format_report_table(fields);
}

std::string seed_note(std::uint64_t seed) { return "seed=" + std::to_string(seed); }

struct Dataset {
  std::vector<LabeledImage> items;
  std::vector<RealTensor<float>> images;
  std::vector<int> labels;
};

Dataset load_dataset(const std::string& manifest, int count = 0) {
  Dataset d;
  d.items = read_dataset(manifest);
  if (count > 0 && std::size_t(count) < d.items.size()) d.items.resize(std::size_t(count));
  for (const auto& e : d.items) {
    d.images.push_back(e.pixels);
    d.labels.push_back(e.class_label);
  }
  return d;
}

// ---- datagen ----------------------------------------------------------------

struct DatagenArgs {
  int n = 1000, size = 16, channels = 1;
  std::string out;
};

void cmd_datagen(const DatagenArgs& a, const Common& c) {
  const auto data = generate_shapes(a.n, a.size, c.seed, a.channels);
  write_dataset(a.out, data,
                seed_note(c.seed) + " n=" + std::to_string(a.n) + " size=" + std::to_string(a.size));
  std::cout << "wrote " << data.size() << " images to " << a.out << " (" << seed_note(c.seed) << ")\n";
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, log, critic_out;
  int steps = 4000, batch = 32, channels = 8;
  // unset: 0.02 for the QNN, 0.01 for the plaintext baseline
  std::optional<double> lr;
  double critic_lr = 0.01, c = 1.0, eps = 1e-5, gan_weight = 1.0, clip = 0.01;
  int critic_steps = 5, fake_phases = 4;
  bool no_gan = false, plaintext = false;
};

void cmd_train(const TrainArgs& a, const Common& c) {
  const Dataset d = load_dataset(a.data);
  Rng rng(c.seed);
  ReferenceOptions ro;
  ro.channels = a.channels;
  ro.image_channels = d.images[0].shape[0];
  ro.image_size = d.images[0].shape[1];
  ro.qrelu_c = a.c;
  ro.bn_eps = a.eps;
  auto net = make_reference_network<float>(ro, rng);
  if (a.plaintext) net = make_plaintext_baseline(net);
  const int feat = ro.channels * (ro.image_size / 2) * (ro.image_size / 2);
  auto critic = make_critic<float>(feat, 64, rng);
  TrainConfig cfg;
  cfg.steps = a.steps;
  cfg.batch = a.batch;
  cfg.lr = a.lr.value_or(a.plaintext ? 0.01 : 0.02);
  cfg.critic_lr = a.critic_lr;
  cfg.adversarial = !a.no_gan && !a.plaintext;
  cfg.critic_steps = a.critic_steps;
  cfg.clip = a.clip;
  cfg.fake_phases = a.fake_phases;
  cfg.gan_weight = a.gan_weight;
  cfg.seed = splitmix64(c.seed);
  std::ostringstream log;
  log << "# " << seed_note(c.seed) << "\n";
  const auto reports = train<float>(net, &critic, d.images, d.labels, cfg, &log);
  const std::string meta = seed_note(c.seed) + " steps=" + std::to_string(a.steps) +
                           " adversarial=" + (cfg.adversarial ? "1" : "0");
  save_network(a.out, net, meta);
  if (!a.log.empty()) write_file_atomic(a.log, log.str());
  if (!a.critic_out.empty()) {
    NetworkSpec<float> cn;
    cn.decoder = critic;
    save_network(a.critic_out, cn, meta);
  }
  const auto& last = reports.empty() ? LossReport{} : reports.back();
  std::cout << "trained " << a.steps << " steps, final task_loss " << last.task_loss << " gan_loss "
            << last.gan_loss << " (" << seed_note(c.seed) << ")\n";
}

// ---- keys -------------------------------------------------------------------

struct KeygenArgs {
  std::string out;
  std::vector<double> axis;
  double angle_deg = -1;
};

RotationKey derive_key(std::uint64_t seed, const std::vector<double>& axis, double angle_deg) {
  if (axis.empty() && angle_deg < 0) return sample_rotation(seed);
  RotationKey k = sample_rotation(seed);
  if (!axis.empty()) {
    require(axis.size() == 3, ErrorKind::Key, "--axis takes three components");
    k = make_key({axis[0], axis[1], axis[2]}, k.angle, seed);
  }
  if (angle_deg >= 0) k = make_key(k.axis, angle_deg * M_PI / 180.0, seed);
  return k;
}

void warn_degenerate(const RotationKey& k) {
  if (k.angle == 0.0) std::cerr << "warning: key angle is 0, encryption is the identity\n";
}

void cmd_keygen(const KeygenArgs& a, const Common& c) {
  const RotationKey k = derive_key(c.seed, a.axis, a.angle_deg);
  warn_degenerate(k);
  save_key(a.out, k);
  std::cout << "wrote key " << a.out << " (" << seed_note(c.seed) << ")\n";
}

// ---- encrypt / process / decrypt --------------------------------------------

struct EncryptArgs {
  std::string net, image, fool1, fool2, data, out, key_out;
  std::uint64_t key_seed = 0;
  bool has_key_seed = false;
  int count = 0;
  std::vector<double> axis;
  double angle_deg = -1;
};

// The key is derived in-process from --key-seed exactly as keygen does; no
// key file is read.
void cmd_encrypt(const EncryptArgs& a, const Common& c) {
  require(a.has_key_seed, ErrorKind::Key, "encrypt needs --key-seed (same value as keygen --seed)");
  const auto net = load_network(a.net);
  require(!net.plaintext, ErrorKind::Config, "encrypt: network is a plaintext baseline");
  const RotationKey key = derive_key(a.key_seed, a.axis, a.angle_deg);
  warn_degenerate(key);
  std::vector<QTensor<float>> payloads;
  if (!a.image.empty()) {
    require(!a.fool1.empty() && !a.fool2.empty(), ErrorKind::Config, "--image needs --fool1 and --fool2");
    auto f = encode<float>(load_pgm(a.image), load_pgm(a.fool1), load_pgm(a.fool2), net, key);
    payloads.push_back(std::move(f.payload));
  } else {
    require(!a.data.empty(), ErrorKind::Config, "encrypt needs --image or --data");
    const Dataset d = load_dataset(a.data, a.count);
    Rng rng(c.seed);
    const std::vector<RotationKey> keys(d.images.size(), key);
    for (auto& f : encode_batch<float>(d.images, net, keys, rng)) payloads.push_back(std::move(f.payload));
  }
  save_feature(a.out, stack_batch<float>(payloads));
  if (!a.key_out.empty()) save_key(a.key_out, key);
  std::cout << "encrypted " << payloads.size() << " feature(s) to " << a.out << " key_id "
            << key_id(key) << " (" << seed_note(c.seed) << ")\n";
}

struct ProcessArgs {
  std::string net, in, out, key;
};

void cmd_process(const ProcessArgs& a) {
  require(a.key.empty(), ErrorKind::Key, "process never takes a key: the server side is key-blind");
  const auto net = load_network(a.net);
  std::vector<EncryptedFeature<float>> batch;
  for (auto& q : unstack_batch(load_feature(a.in))) batch.push_back({std::move(q), 0});
  const auto out = run_processing<float>(batch, net);
  std::vector<QTensor<float>> payloads;
  for (const auto& f : out) payloads.push_back(f.payload);
  save_feature(a.out, stack_batch<float>(payloads));
  std::cout << "processed " << payloads.size() << " feature(s) to " << a.out << "\n";
}

struct DecryptArgs {
  std::string net, key, in, out;
  bool plane_only = false;
};

// Writes class scores, or with --plane-only the decrypted plane i as a
// feature file (other planes zero).
void cmd_decrypt(const DecryptArgs& a) {
  const auto net = load_network(a.net);
  const RotationKey key = load_key(a.key);
  const auto feats = unstack_batch(load_feature(a.in));
  if (a.plane_only) {
    std::vector<QTensor<float>> out;
    for (const auto& f : feats) {
      const auto p = decrypt_plane(f, key);
      RealTensor<float> zero(p.shape);
      out.push_back(lift(p, zero, zero));
    }
    save_feature(a.out, stack_batch<float>(out));
  } else {
    std::vector<EncryptedFeature<float>> batch;
    for (const auto& f : feats) batch.push_back({f, key_id(key)});
    const std::vector<RotationKey> keys(batch.size(), key);
    std::string text;
    for (const auto& s : decode<float>(batch, keys, net)) {
      text += std::to_string(argmax(s));
      for (Eigen::Index i = 0; i < s.size(); ++i) text += " " + format_real(s.values[i]);
      text += "\n";
    }
    write_file_atomic(a.out, text);
  }
  std::cout << "decrypted " << feats.size() << " feature(s) to " << a.out << "\n";
}

// ---- attack -----------------------------------------------------------------

struct AttackArgs {
  std::string mode = "phase";
  std::string net, data, out, features, dprime, eval_key;
  int candidates = 1000, steps = 1500;
};

void cmd_attack(const AttackArgs& a, const Common& c) {
  if (a.mode == "train-dprime") {
    const auto net = load_network(a.net);
    const Dataset d = load_dataset(a.data);
    AttackTrainConfig cfg;
    cfg.steps = a.steps;
    cfg.seed = c.seed;
    NetworkSpec<float> dn;
    dn.decoder = train_phase_discriminator(net, d.images, cfg);
    require(!a.out.empty(), ErrorKind::Config, "train-dprime needs --out");
    save_network(a.out, dn, seed_note(c.seed));
    std::cout << "wrote phase discriminator " << a.out << " (" << seed_note(c.seed) << ")\n";
    return;
  }
  // Phase enumeration on stored features; the true key is read only after
  // the attack has finished, for scoring.
  const auto dprime = load_network(a.dprime).decoder;
  const auto feats = unstack_batch(load_feature(a.features));
  std::vector<CandidatePhase> est;
  for (std::size_t s = 0; s < feats.size(); ++s)
    est.push_back(phase_enumeration_attack(feats[s], dprime, a.candidates, splitmix64(c.seed + s), c.workers));
  std::string lines;
  for (std::size_t s = 0; s < est.size(); ++s) lines += std::to_string(s) + " " + format_key(est[s].key);
  if (!a.out.empty()) write_file_atomic(a.out, lines);
  std::vector<std::pair<std::string, double>> fields{{"features", double(feats.size())},
                                                     {"candidates", double(a.candidates)}};
  if (!a.eval_key.empty()) {
    const RotationKey truth = load_key(a.eval_key);
    std::vector<double> dt;
    for (const auto& e : est) dt.push_back(delta_theta(truth, e.key));
    const double mean = detail::mean_of(dt);
    double var = 0;
    for (double d : dt) var += (d - mean) * (d - mean);
    fields.push_back({"delta_theta_mean", mean});
    fields.push_back({"delta_theta_std", dt.size() > 1 ? std::sqrt(var / double(dt.size() - 1)) : 0.0});
    fields.push_back({"rank_qnn", anonymity_rank(mean, RankMode::Quaternion)});
    fields.push_back({"rank_complex_mode", anonymity_rank(mean, RankMode::Complex)});
  }
  fields.push_back({"seed", double(c.seed)});
  std::cout << render(fields, c.format);
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string mode = "rank";
  std::string rank_mode = "quaternion";
  double dtheta_deg = 5.0;
  std::string net, data, test_data, out;
  int trials = 100, candidates = 1000, k = 1, count = 32;
};

void cmd_bench(const BenchArgs& a, const Common& c) {
  std::vector<std::pair<std::string, double>> fields;
  if (a.mode == "rank") {
    const RankMode m = a.rank_mode == "complex" ? RankMode::Complex : RankMode::Quaternion;
    const double r = anonymity_rank(a.dtheta_deg * M_PI / 180.0, m);
    if (c.format == "table") {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.1f", r);
      std::cout << "mode " << a.rank_mode << " dtheta_deg " << a.dtheta_deg << " rank " << buf << "\n";
      return;
    }
    fields = {{"dtheta_deg", a.dtheta_deg}, {"rank", r}};
  } else if (a.mode == "roundtrip") {
    // encrypt → decrypt recovers plane i; encrypt → process → decrypt → decode
    // matches the unrotated pipeline.
    const auto net = load_network(a.net);
    const Dataset d = load_dataset(a.data, a.count);
    Rng rng(c.seed);
    const auto keys = sample_keys(d.images.size(), rng);
    Rng frng(c.seed + 1);
    const auto enc = encode_batch<float>(d.images, net, keys, frng);
    const auto a_plain = encoder_forward<float>(d.images, net);
    double plane_err = 0;
    for (std::size_t s = 0; s < enc.size(); ++s)
      plane_err = std::max(plane_err, double((decrypt_plane(enc[s].payload, keys[s]).values - a_plain[s].values).abs().maxCoeff()));
    const std::vector<RotationKey> ident(d.images.size(), make_key({1, 0, 0}, 0.0));
    Rng frng2(c.seed + 1);
    const auto enc0 = encode_batch<float>(d.images, net, ident, frng2);
    const auto y = decode<float>(run_processing<float>(enc, net), keys, net);
    const auto y0 = decode<float>(run_processing<float>(enc0, net), ident, net);
    double score_err = 0;
    for (std::size_t s = 0; s < y.size(); ++s)
      score_err = std::max(score_err, double((y[s].values - y0[s].values).abs().maxCoeff()));
    fields = {{"samples", double(d.images.size())}, {"max_plane_error", plane_err}, {"max_score_error", score_err}};
  } else {
    const auto net = load_network(a.net);
    const Dataset atk = load_dataset(a.data);
    const Dataset test = load_dataset(a.test_data);
    BenchConfig cfg;
    cfg.trials = a.trials;
    cfg.candidates = a.candidates;
    cfg.knn_k = a.k;
    cfg.workers = c.workers;
    cfg.seed = c.seed;
    fields = report_fields(run_benchmark(net, atk.items, test.items, cfg));
  }
  fields.push_back({"seed", double(c.seed)});
  const std::string text = render(fields, c.format);
  if (!a.out.empty()) write_file_atomic(a.out, text);
  std::cout << text;
}

// ---- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  double tolerance = 1e-3;
  int batch = 3;
  std::string out;
};

int cmd_gradcheck(const GradcheckArgs& a, const Common& c) {
  Rng rng(c.seed);
  ReferenceOptions ro;
  ro.channels = 2;
  ro.image_size = 8;
  auto net = make_reference_network<double>(ro, rng);
  // Zero biases put every background pixel exactly on the ReLU kink.
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (auto* w : net.parameters())
    if (w->shape.size() == 1)
      for (Eigen::Index i = 0; i < w->size(); ++i) w->values[i] += jitter(rng);
  std::vector<RealTensor<double>> images;
  std::vector<int> labels;
  for (const auto& e : generate_shapes(a.batch, 8, c.seed)) {
    images.push_back(e.pixels.cast<double>());
    labels.push_back(e.class_label);
  }
  const auto keys = sample_keys(images.size(), rng);
  const auto rep = finite_diff_check(net, images, labels, keys, a.tolerance);
  std::vector<std::pair<std::string, double>> fields;
  for (const auto& b : rep.blocks) {
    fields.push_back({b.name + "_max_rel_error", b.max_rel_error});
    fields.push_back({b.name + "_skipped", double(b.skipped)});
  }
  fields.push_back({"passed", rep.passed() ? 1.0 : 0.0});
  fields.push_back({"seed", double(c.seed)});
  const std::string text = render(fields, c.format);
  if (!a.out.empty()) write_file_atomic(a.out, text);
  std::cout << text;
  return rep.passed() ? 0 : static_cast<int>(ErrorKind::Numeric);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quaternion networks with rotation-phase feature encryption"};
  app.require_subcommand(1);
  Common common;
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", common.seed, "random seed"); };

  DatagenArgs dg;
  auto* datagen = app.add_subcommand("datagen", "generate the synthetic shapes dataset");
  add_seed(datagen);
  datagen->add_option("--n", dg.n, "number of images")->check(CLI::PositiveNumber);
  datagen->add_option("--size", dg.size, "image side")->check(CLI::Range(8, 1024));
  datagen->add_option("--channels", dg.channels, "1 or 3")->check(CLI::IsMember({1, 3}));
  datagen->add_option("--out", dg.out, "output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a QNN (or its plaintext baseline)");
  add_seed(train_cmd);
  train_cmd->add_option("--data", tr.data, "dataset manifest")->required();
  train_cmd->add_option("--out", tr.out, "network file")->required();
  train_cmd->add_option("--log", tr.log, "TSV training log");
  train_cmd->add_option("--critic-out", tr.critic_out, "write the critic as a network file");
  train_cmd->add_option("--steps", tr.steps)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--batch", tr.batch)->check(CLI::PositiveNumber);
  train_cmd->add_option("--channels", tr.channels)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tr.lr, "SGD step (default 0.02, plaintext 0.01)")->check(CLI::PositiveNumber);
  train_cmd->add_option("--critic-lr", tr.critic_lr)->check(CLI::PositiveNumber);
  train_cmd->add_option("--qrelu-c", tr.c, "QReLU threshold C")->check(CLI::PositiveNumber);
  train_cmd->add_option("--bn-eps", tr.eps, "batch-norm epsilon")->check(CLI::PositiveNumber);
  train_cmd->add_option("--gan-weight", tr.gan_weight)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--clip", tr.clip)->check(CLI::PositiveNumber);
  train_cmd->add_option("--critic-steps", tr.critic_steps)->check(CLI::PositiveNumber);
  train_cmd->add_option("--fake-phases", tr.fake_phases)->check(CLI::PositiveNumber);
  train_cmd->add_flag("--no-gan", tr.no_gan, "task loss only");
  train_cmd->add_flag("--plaintext", tr.plaintext, "real-valued baseline");

  KeygenArgs kg;
  auto* keygen = app.add_subcommand("keygen", "sample a private rotation key");
  add_seed(keygen);
  keygen->add_option("--out", kg.out, "key file")->required();
  keygen->add_option("--axis", kg.axis, "explicit axis (three reals)")->expected(3);
  keygen->add_option("--angle-deg", kg.angle_deg, "explicit angle in degrees");

  EncryptArgs en;
  auto* encrypt = app.add_subcommand("encrypt", "encode and rotate features");
  add_seed(encrypt);
  encrypt->add_option("--net", en.net, "network file")->required();
  encrypt->add_option("--key-seed", en.key_seed, "derive the key as keygen --seed does")->each([&](const std::string&) {
    en.has_key_seed = true;
  });
  encrypt->add_option("--axis", en.axis)->expected(3);
  encrypt->add_option("--angle-deg", en.angle_deg);
  encrypt->add_option("--key-out", en.key_out, "also write the derived key file");
  encrypt->add_option("--image", en.image, "target image (PGM)");
  encrypt->add_option("--fool1", en.fool1, "first fooling image (PGM)");
  encrypt->add_option("--fool2", en.fool2, "second fooling image (PGM)");
  encrypt->add_option("--data", en.data, "dataset manifest (fooling partners drawn from it)");
  encrypt->add_option("--count", en.count, "first N images only")->check(CLI::NonNegativeNumber);
  encrypt->add_option("--out", en.out, "feature file")->required();

  ProcessArgs pr;
  auto* process = app.add_subcommand("process", "run the key-blind processing module");
  process->add_option("--net", pr.net, "network file")->required();
  process->add_option("--in", pr.in, "encrypted feature file")->required();
  process->add_option("--out", pr.out, "processed feature file")->required();
  process->add_option("--key", pr.key, "rejected: processing never sees a key");

  DecryptArgs de;
  auto* decrypt = app.add_subcommand("decrypt", "decrypt processed features and decode");
  decrypt->add_option("--net", de.net, "network file")->required();
  decrypt->add_option("--key", de.key, "key file")->required();
  decrypt->add_option("--in", de.in, "feature file")->required();
  decrypt->add_option("--out", de.out, "scores (text) or, with --plane-only, feature file")->required();
  decrypt->add_flag("--plane-only", de.plane_only, "write the decrypted plane, skip the decoder");

  AttackArgs at;
  auto* attack = app.add_subcommand("attack", "phase-enumeration attack or attacker training");
  add_seed(attack);
  add_format(attack, common);
  attack->add_option("--mode", at.mode)->check(CLI::IsMember({"phase", "train-dprime"}));
  attack->add_option("--net", at.net, "network file (train-dprime)");
  attack->add_option("--data", at.data, "attacker's dataset manifest (train-dprime)");
  attack->add_option("--steps", at.steps)->check(CLI::PositiveNumber);
  attack->add_option("--features", at.features, "encrypted feature file");
  attack->add_option("--dprime", at.dprime, "phase discriminator file");
  attack->add_option("--candidates", at.candidates)->check(CLI::PositiveNumber);
  attack->add_option("--workers", common.workers)->check(CLI::PositiveNumber);
  attack->add_option("--eval-key", at.eval_key, "true key, read after the attack for scoring only");
  attack->add_option("--out", at.out, "output file");

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "privacy metrics and benchmarks");
  add_seed(bench);
  add_format(bench, common);
  bench->add_option("--mode", be.mode)->check(CLI::IsMember({"rank", "roundtrip", "full"}));
  bench->add_option("--rank-mode", be.rank_mode)->check(CLI::IsMember({"quaternion", "complex"}));
  bench->add_option("--dtheta-deg", be.dtheta_deg);
  bench->add_option("--net", be.net);
  bench->add_option("--data", be.data, "dataset manifest (attacker's data for --mode full)");
  bench->add_option("--test-data", be.test_data, "victim dataset manifest (--mode full)");
  bench->add_option("--count", be.count)->check(CLI::PositiveNumber);
  bench->add_option("--trials", be.trials)->check(CLI::PositiveNumber);
  bench->add_option("--candidates", be.candidates)->check(CLI::PositiveNumber);
  bench->add_option("--k", be.k)->check(CLI::PositiveNumber);
  bench->add_option("--workers", common.workers)->check(CLI::PositiveNumber);
  bench->add_option("--out", be.out, "also write the report here");

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_seed(gradcheck);
  add_format(gradcheck, common);
  gradcheck->add_option("--tolerance", gc.tolerance)->check(CLI::PositiveNumber);
  gradcheck->add_option("--batch", gc.batch)->check(CLI::Range(2, 64));
  gradcheck->add_option("--out", gc.out, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto need = [](const std::string& v, const char* flag) {
      require(!v.empty(), ErrorKind::Config, std::string("missing required flag ") + flag);
    };
    if (datagen->parsed()) cmd_datagen(dg, common);
    if (train_cmd->parsed()) cmd_train(tr, common);
    if (keygen->parsed()) cmd_keygen(kg, common);
    if (encrypt->parsed()) cmd_encrypt(en, common);
    if (process->parsed()) cmd_process(pr);
    if (decrypt->parsed()) cmd_decrypt(de);
    if (attack->parsed()) {
      if (at.mode == "train-dprime") {
        need(at.net, "--net");
        need(at.data, "--data");
      } else {
        need(at.features, "--features");
        need(at.dprime, "--dprime");
      }
      cmd_attack(at, common);
    }
    if (bench->parsed()) {
      if (be.mode != "rank") {
        need(be.net, "--net");
        need(be.data, "--data");
      }
      if (be.mode == "full") need(be.test_data, "--test-data");
      cmd_bench(be, common);
    }
    if (gradcheck->parsed()) return cmd_gradcheck(gc, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
