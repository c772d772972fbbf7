#include <filesystem>

#include "doctest.h"
#include "support.hpp"

using namespace qnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qnn_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("shapes dataset is deterministic, balanced and in range") {
  const auto a = generate_shapes(40, 16, 3);
  const auto b = generate_shapes(40, 16, 3);
  const auto c = generate_shapes(40, 16, 4);
  int per_class[4] = {0, 0, 0, 0};
  bool differs = false;
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a[s].pixels == b[s].pixels);
    CHECK(a[s].pixels.shape == Shape{1, 16, 16});
    CHECK((a[s].pixels.values >= 0).all());
    CHECK((a[s].pixels.values <= 1).all());
    CHECK(a[s].attr_labels.size() == 2);
    CHECK(a[s].attr_labels[1] >= 0);
    CHECK(a[s].attr_labels[1] < 4);
    ++per_class[a[s].class_label];
    differs |= !(a[s].pixels == c[s].pixels);
  }
  CHECK(differs);
  for (int k : per_class) CHECK(k == 10);
  CHECK(generate_shapes(2, 16, 1, 3)[0].pixels.shape == Shape{3, 16, 16});
}

TEST_CASE("PGM oracle bytes and round trip") {
  RealTensor<float> img(Shape{1, 1, 2}, Vec<float>(Eigen::Array2f(0.0f, 1.0f)));
  const std::string bytes = encode_pgm(img);
  CHECK(bytes == std::string("P5\n2 1\n255\n") + std::string("\x00\xff", 2));
  const auto back = decode_pgm("P5\n# note\n2 1\n255\n" + std::string("\x00\xff", 2));
  CHECK(back == img);
  CHECK_THROWS_AS(decode_pgm("P6\n2 1\n255\n" + std::string("\x00\xff", 2)), Error);
  CHECK_THROWS_AS(decode_pgm("P5\n2 1\n255\n" + std::string("\x00", 1)), Error);
}

TEST_CASE("manifest parsing") {
  const std::vector<ManifestEntry> e{{"a.pgm", 1, 2, 3}, {"b.pgm", 0, 1, 0}};
  const std::string text = format_manifest(e, "seed=5");
  CHECK(text.rfind("# seed=5\n", 0) == 0);
  const auto back = parse_manifest(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].path == "a.pgm");
  CHECK(back[0].attr2 == 3);
  CHECK(back[1].class_label == 0);
  try {
    parse_manifest("a.pgm one 2 3\n");
    FAIL("accepted");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::Format);
  }
}

TEST_CASE("dataset directory round trip") {
  const fs::path dir = scratch("ds");
  const auto data = generate_shapes(6, 8, 2);
  write_dataset(dir, data, "seed=2");
  const auto back = read_dataset(dir / "manifest.txt");
  REQUIRE(back.size() == data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    // 8-bit quantization
    CHECK(((back[s].pixels.values - data[s].pixels.values).abs() <= 0.5f / 255 + 1e-6f).all());
    CHECK(back[s].class_label == data[s].class_label);
    CHECK(back[s].attr_labels == data[s].attr_labels);
  }
  fs::remove_all(dir);
}

TEST_CASE("file helpers") {
  const fs::path dir = scratch("io");
  write_file_atomic(dir / "x.bin", std::string("a\0b", 3));
  CHECK(read_file(dir / "x.bin") == std::string("a\0b", 3));
  try {
    read_file(dir / "missing");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Missing);
  }
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(format_real(0.1) == "0.10000000000000001");
  fs::remove_all(dir);
}

TEST_CASE("four samples cover the four classes") {
  const auto d = generate_shapes(4, 16, 8);
  std::vector<int> labels;
  for (const auto& s : d) labels.push_back(s.class_label);
  std::sort(labels.begin(), labels.end());
  CHECK(labels == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("a small plaintext classifier learns the shapes") {
  using L = LayerSpec<float>;
  const auto train = generate_shapes(2000, 16, 21), held = generate_shapes(400, 16, 22);
  Rng rng(23);
  Stack<float> net{L::fully_connected(256, 64), L::bias(64), L::simple(LayerKind::ReLU), L::fully_connected(64, 4),
                   L::bias(4)};
  initialize(net, rng);
  std::vector<RealTensor<float>*> params;
  collect_parameters(net, params);
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  for (int step = 0; step < 10000; ++step) {
    std::vector<RealTensor<float>> xb;
    std::vector<int> yb;
    for (int s = 0; s < 32; ++s) {
      const std::size_t i = pick(rng);
      xb.push_back(train[i].pixels);
      yb.push_back(train[i].class_label);
    }
    Tape<float> tape;
    ForwardContext ctx;
    tape.backward(ops::softmax_cross_entropy(apply_layers(to_var<float>(tape, xb), net, ctx), yb));
    std::vector<Vec<float>> grads;
    for (auto* w : params) grads.push_back(tape.gradient(*w));
    sgd_update(params, grads, 0.1);
  }
  int correct = 0;
  for (const auto& s : held) {
    Tape<float> tape(false);
    ForwardContext ctx;
    const Vec<float> z = apply_layers(to_var<float>(tape, std::vector<RealTensor<float>>{s.pixels}), net, ctx).value();
    Eigen::Index best = 0;
    z.maxCoeff(&best);
    correct += int(best) == s.class_label;
  }
  CHECK(double(correct) / double(held.size()) >= 0.95);
}

TEST_CASE("PGM decode examples") {
  const auto img = decode_pgm("P5\n2 2\n255\n" + std::string("\x00\x80\xff\x40", 4));
  CHECK(img.shape == Shape{1, 2, 2});
  CHECK(img.values[0] == 0.0f);
  CHECK(img.values[1] == doctest::Approx(128.0 / 255));
  CHECK(img.values[2] == 1.0f);
  CHECK(img.values[3] == doctest::Approx(64.0 / 255));
  try {
    decode_pgm("P5\n2 2\n65535\n" + std::string(8, '\0'));
    FAIL("accepted 16-bit PGM");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
}
