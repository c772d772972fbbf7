#include "doctest.h"
#include "support.hpp"

using namespace qnn;

namespace {

NetworkSpec<double> small_net(Rng& rng) {
  ReferenceOptions o;
  o.channels = 3;
  o.image_size = 8;
  auto net = make_reference_network<double>(o, rng);
  test::randomize(net.encoder, rng);
  return net;
}

std::vector<RealTensor<double>> images(int n, Rng& rng) {
  std::vector<RealTensor<double>> out;
  for (int s = 0; s < n; ++s) out.push_back(test::random_real<double>({1, 8, 8}, rng));
  return out;
}

}  // namespace

TEST_CASE("decryption recovers the encoder features") {
  Rng rng(1);
  const auto net = small_net(rng);
  const auto xs = images(3, rng);
  for (int t = 0; t < 20; ++t) {
    const RotationKey key = sample_rotation(rng);
    const auto f = encode(xs[0], xs[1], xs[2], net, key);
    CHECK(f.key_id == key_id(key));
    CHECK(f.payload.is_pure());
    const auto a = encoder_forward(xs[0], net);
    CHECK(((decrypt_plane(f.payload, key).values - a.values).abs() < 1e-12).all());
  }
}

TEST_CASE("the real plane carries no information, the others look mixed") {
  Rng rng(2);
  const auto net = small_net(rng);
  const auto xs = images(3, rng);
  const RotationKey key = make_key({1, 1, 1}, 2.0);
  const auto f = encode(xs[0], xs[1], xs[2], net, key);
  const auto a = encoder_forward(xs[0], net);
  CHECK((f.payload.planes[0] == 0.0).all());
  CHECK(!((f.payload.planes[1] - a.values).abs() < 1e-6).all());
}

TEST_CASE("processing then decoding matches the unrotated computation") {
  Rng rng(3);
  const auto net = small_net(rng);
  const auto xs = images(4, rng);
  std::vector<RotationKey> keys, ident;
  for (int s = 0; s < 4; ++s) {
    keys.push_back(sample_rotation(rng));
    ident.push_back(make_key({1, 0, 0}, 0.0));
  }
  Rng f1(9), f2(9);
  const auto enc = encode_batch<double>(xs, net, keys, f1);
  const auto enc0 = encode_batch<double>(xs, net, ident, f2);
  const auto y = decode<double>(run_processing<double>(enc, net), keys, net);
  const auto y0 = decode<double>(run_processing<double>(enc0, net), ident, net);
  for (std::size_t s = 0; s < y.size(); ++s) {
    CHECK(((y[s].values - y0[s].values).abs() < 1e-10).all());
    CHECK(y[s].values.sum() == doctest::Approx(1.0));
  }
  // the processed feature is the rotation of the unrotated processed feature
  const auto h = run_processing<double>(enc, net);
  const auto h0 = run_processing<double>(enc0, net);
  for (std::size_t s = 0; s < h.size(); ++s)
    CHECK(test::rel_error(h[s].payload, rotate_all(rotor(keys[s]), h0[s].payload)) < 1e-10);
}

TEST_CASE("processing refuses non-equivariant layers") {
  Rng rng(4);
  auto net = small_net(rng);
  net.processing.push_back(LayerSpec<double>::simple(LayerKind::ReLU));
  std::vector<EncryptedFeature<double>> batch{{test::random_qtensor<double>({3, 4, 4}, rng), 0}};
  try {
    run_processing<double>(batch, net);
    FAIL("accepted ReLU in processing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  CHECK_THROWS_AS(validate(net), Error);
}

TEST_CASE("fooling partners are other batch members") {
  Rng rng(5);
  for (int n : {2, 3, 10}) {
    const auto pairs = sample_fooling_pairs(n, rng);
    for (int s = 0; s < n; ++s)
      for (int q = 0; q < 2; ++q) {
        CHECK(pairs[std::size_t(s)][std::size_t(q)] != s);
        CHECK(pairs[std::size_t(s)][std::size_t(q)] >= 0);
        CHECK(pairs[std::size_t(s)][std::size_t(q)] < n);
      }
  }
}

TEST_CASE("noisy baseline adds gaussian noise of the requested scale") {
  Rng rng(6);
  const auto net = small_net(rng);
  const auto x = images(1, rng)[0];
  const auto a = encoder_forward(x, net);
  Rng nr(1);
  CHECK(noisy_baseline_encode(x, net, 0.0, nr) == a);
  const auto noisy = noisy_baseline_encode(x, net, 0.5, nr);
  const double sd = std::sqrt((noisy.values - a.values).square().mean());
  CHECK(sd == doctest::Approx(0.5).epsilon(0.2));
  CHECK_THROWS_AS(noisy_baseline_encode(x, net, -1.0, nr), Error);
}

TEST_CASE("plaintext baseline swaps QReLU for ReLU and runs one plane") {
  Rng rng(7);
  const auto base = make_plaintext_baseline(small_net(rng));
  CHECK(base.plaintext);
  CHECK(base.processing[1].kind == LayerKind::ReLU);
  CHECK(base.processing[4].inner[1].kind == LayerKind::ReLU);
  const auto xs = images(3, rng);
  const auto keys = sample_keys(3, rng);
  const auto y = predict<double>(xs, base, keys, rng);
  REQUIRE(y.size() == 3);
  CHECK(y[0].values.sum() == doctest::Approx(1.0));
}

TEST_CASE("stack and unstack are inverse") {
  Rng rng(8);
  std::vector<QTensor<float>> xs;
  for (int s = 0; s < 3; ++s) xs.push_back(test::random_qtensor<float>({2, 3, 3}, rng, false));
  const auto st = stack_batch<float>(xs);
  CHECK(st.shape == Shape{3, 2, 3, 3});
  CHECK(unstack_batch(st) == xs);
}

TEST_CASE("network file round trip is bit exact") {
  Rng rng(9);
  auto net = small_net(rng).cast<float>();
  net.processing.push_back(LayerSpec<float>::dropout(0.25f));
  net.processing.push_back(LayerSpec<float>::avgpool(1, 1));
  const std::string bytes = encode_network(net, "seed=9");
  const auto back = decode_network(bytes);
  CHECK(back == net);
  CHECK(encode_network(back, "seed=9") == bytes);
  auto base = make_plaintext_baseline(net);
  CHECK(decode_network(encode_network(base)) == base);
}

TEST_CASE("network decoding errors") {
  Rng rng(10);
  const std::string good = encode_network(small_net(rng).cast<float>());
  auto kind_of = [](const std::string& b) {
    try {
      decode_network(b);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  std::string bad = good;
  bad[0] = 'X';
  CHECK(kind_of(bad) == ErrorKind::Format);
  bad = good;
  bad.replace(bad.find("QNNF 1"), 6, "QNNF 7");
  CHECK(kind_of(bad) == ErrorKind::Version);
  CHECK(kind_of(good.substr(0, good.size() - 4)) == ErrorKind::Format);
  bad = good;
  bad.replace(bad.find("qrelu"), 5, "relu ");
  CHECK(kind_of(bad) != ErrorKind::Io);
}

TEST_CASE("zero-angle key leaves the lifted triple untouched") {
  Rng rng(11);
  const auto net = small_net(rng);
  const auto xs = images(3, rng);
  const auto f = encode(xs[0], xs[1], xs[2], net, make_key({0, 1, 0}, 0.0));
  CHECK(f.payload == lift(encoder_forward(xs[0], net), encoder_forward(xs[1], net), encoder_forward(xs[2], net)));
}

TEST_CASE("empty processing passes features through") {
  Rng rng(12);
  auto net = small_net(rng);
  net.processing.clear();
  const auto xs = images(3, rng);
  const RotationKey key = sample_rotation(rng);
  const auto f = encode(xs[0], xs[1], xs[2], net, key);
  const auto h = run_processing(f, net);
  CHECK(h.payload == f.payload);
  CHECK(h.key_id == f.key_id);
}

TEST_CASE("a wrong key extracts a fooling plane") {
  Rng rng(13);
  const auto net = small_net(rng);
  const auto xs = images(3, rng);
  const auto f = encode(xs[0], xs[1], xs[2], net, make_key({1, 0, 0}, 0.0));
  const auto b = encoder_forward(xs[1], net);
  const auto wrong = decrypt_plane(f.payload, make_key({0, 0, 1}, std::numbers::pi / 2));
  CHECK(((wrong.values - b.values).abs() < 1e-12).all());
}

TEST_CASE("scores have one entry per class") {
  Rng rng(14);
  for (int classes : {2, 4, 7}) {
    ReferenceOptions o;
    o.channels = 2;
    o.image_size = 8;
    o.classes = classes;
    const auto net = make_reference_network<double>(o, rng);
    const auto xs = images(3, rng);
    const RotationKey key = sample_rotation(rng);
    const auto y = decode(run_processing(encode(xs[0], xs[1], xs[2], net, key), net), key, net);
    CHECK(y.size() == classes);
  }
}

TEST_CASE("noisy baseline scale over 10,000 elements") {
  Rng rng(15);
  const auto net = small_net(rng);
  const auto xs = images(220, rng);
  auto collect = [&](std::uint64_t seed) {
    Rng nr(seed);
    std::vector<double> d;
    for (const auto& x : xs) {
      const auto a = encoder_forward(x, net);
      const auto n = noisy_baseline_encode(x, net, 0.3, nr);
      for (Eigen::Index v = 0; v < a.size(); ++v) d.push_back(n.values[v] - a.values[v]);
    }
    return d;
  };
  const auto d = collect(3);
  REQUIRE(d.size() >= 10000);
  double ss = 0;
  for (double v : d) ss += v * v;
  CHECK(std::sqrt(ss / double(d.size())) == doctest::Approx(0.3).epsilon(0.05));
  CHECK(collect(3) == d);
}

TEST_CASE("a stored network with non-equivariant processing is rejected on load") {
  Rng rng(16);
  std::string bytes = encode_network(small_net(rng).cast<float>());
  bytes.replace(bytes.find("qrelu"), 5, "relu ");
  try {
    decode_network(bytes);
    FAIL("accepted ReLU in processing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}
