#include <numbers>

#include <Eigen/Dense>

#include "doctest.h"
#include "support.hpp"

using namespace qnn;
using Q = Quaternion<double>;

TEST_CASE("Hamilton product multiplication table") {
  const Q one = Q::one(), i = Q::i(), j = Q::j(), k = Q::k();
  CHECK(i * i == -one);
  CHECK(j * j == -one);
  CHECK(k * k == -one);
  CHECK(i * j == k);
  CHECK(j * k == i);
  CHECK(k * i == j);
  CHECK(j * i == -k);
  CHECK(k * j == -i);
  CHECK(i * k == -j);
  CHECK(i * j * k == -one);
}

TEST_CASE("hand-computed product and conjugate") {
  // (1 + 2i + 3j + 4k)(5 + 6i + 7j + 8k) = −60 + 12i + 30j + 24k
  const Q p{1, 2, 3, 4}, q{5, 6, 7, 8};
  CHECK(p * q == Q{-60, 12, 30, 24});
  CHECK(conjugate(p) == Q{1, -2, -3, -4});
  CHECK(norm(p) == doctest::Approx(std::sqrt(30.0)));
  const Q pp = p * conjugate(p);
  CHECK(pp.q0 == doctest::Approx(30.0));
  CHECK(pp.q1 == 0.0);
  CHECK(norm(p * q) == doctest::Approx(norm(p) * norm(q)));
}

TEST_CASE("rotation by 90 degrees about z maps i to j") {
  const RotationKey key = make_key({0, 0, 1}, std::numbers::pi / 2);
  const Q r = rotor(key);
  CHECK(r.q0 == doctest::Approx(std::sqrt(0.5)));
  CHECK(r.q3 == doctest::Approx(std::sqrt(0.5)));
  const Q y = rotate(r, Q::i());
  CHECK(y.q0 == 0.0);
  CHECK(y.q1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(y.q2 == doctest::Approx(1.0));
  CHECK(y.q3 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotate keeps the real part and the norm, matrix agrees") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const RotationKey key = sample_rotation(rng);
    const Q r = rotor(key);
    std::normal_distribution<double> g;
    const Q x{g(rng), g(rng), g(rng), g(rng)};
    const Q y = rotate(r, x);
    CHECK(y.q0 == x.q0);
    CHECK(norm(y) == doctest::Approx(norm(x)).epsilon(1e-12));
    const Eigen::Vector3d mv = rotation_matrix(r) * x.vec();
    CHECK((mv - y.vec()).norm() < 1e-12);
    const Eigen::Matrix3d m = rotation_matrix(r);
    CHECK((m * m.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(m.determinant() == doctest::Approx(1.0));
  }
}

TEST_CASE("non-unit rotor is rejected") {
  CHECK_THROWS_AS(rotate(Q{1, 1, 0, 0}, Q::i()), Error);
}

TEST_CASE("make_key normalizes axis and wraps angle") {
  const RotationKey k = make_key({0, 3, 4}, -std::numbers::pi / 2);
  CHECK(k.axis.y() == doctest::Approx(0.6));
  CHECK(k.axis.z() == doctest::Approx(0.8));
  CHECK(k.angle == doctest::Approx(1.5 * std::numbers::pi));
  try {
    make_key({0, 0, 0}, 1.0);
    FAIL("zero axis accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Key);
  }
  RotationKey bad;
  bad.axis = {1, 1, 0};
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("sampled keys are reproducible and well spread") {
  CHECK(sample_rotation(42) == sample_rotation(42));
  CHECK(!(sample_rotation(42) == sample_rotation(43)));
  Rng rng(1);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  double angle_mean = 0;
  const int n = 4000;
  for (int s = 0; s < n; ++s) {
    const RotationKey k = sample_rotation(rng);
    CHECK(std::abs(k.axis.norm() - 1.0) < 1e-12);
    mean += k.axis;
    angle_mean += k.angle;
  }
  CHECK((mean / n).norm() < 0.06);
  CHECK(angle_mean / n == doctest::Approx(std::numbers::pi).epsilon(0.05));
}

TEST_CASE("key text round trip is exact") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const RotationKey k = sample_rotation(rng, std::uint64_t(t) * 977);
    const RotationKey back = parse_key(format_key(k));
    CHECK(back == k);
    CHECK(key_id(back) == key_id(k));
  }
  try {
    parse_key("axes: 1 0 0\nangle: 0\nseed: 0\n");
    FAIL("bad key accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
}

TEST_CASE("substreams are independent of each other") {
  Rng a = substream(7, 0), b = substream(7, 1), a2 = substream(7, 0);
  const auto x = a(), y = b(), z = a2();
  CHECK(x == z);
  CHECK(x != y);
}

TEST_CASE("identity, conjugate and norm examples") {
  Rng rng(12);
  std::normal_distribution<double> g;
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const Q p{g(rng), g(rng), g(rng), g(rng)}, q{g(rng), g(rng), g(rng), g(rng)};
    CHECK(Q::one() * q == q);
    worst = std::max(worst, std::abs(norm(p * q) - norm(p) * norm(q)) / (norm(p) * norm(q)));
    const Q qq = q * conjugate(q);
    CHECK(std::abs(qq.q0 - norm(q) * norm(q)) < 1e-12);
    CHECK(std::abs(qq.q1) + std::abs(qq.q2) + std::abs(qq.q3) < 1e-12);
  }
  CHECK(worst <= 1e-12);
  CHECK(conjugate(Q::one()) == Q::one());
  CHECK(conjugate(Q::i()) == -Q::i());
}

TEST_CASE("rotor examples") {
  CHECK(rotor(make_key({0.3, 0.2, 0.1}, 0.0)) == Q::one());
  const Q r = rotor(make_key({0, 0, 1}, std::numbers::pi));
  CHECK(std::abs(r.q0) < 1e-15);
  CHECK(r.q3 == 1.0);
  Rng rng(13);
  for (int t = 0; t < 1000; ++t) CHECK(std::abs(norm(rotor(sample_rotation(rng))) - 1.0) <= 1e-12);
}

TEST_CASE("rotate examples") {
  Rng rng(14);
  std::normal_distribution<double> g;
  for (int t = 0; t < 1000; ++t) {
    const Q x = Q::pure(g(rng), g(rng), g(rng));
    CHECK(rotate(Q::one(), x) == x);
    const Q y = rotate(rotor(sample_rotation(rng)), x);
    CHECK(y.q0 == 0.0);
    CHECK(std::abs(norm(y) - norm(x)) <= 1e-12);
  }
}

TEST_CASE("10,000 sampled axes average to the origin") {
  Rng rng(15);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int s = 0; s < 10000; ++s) {
    const RotationKey k = sample_rotation(rng);
    validate(k);
    mean += k.axis;
  }
  mean /= 10000;
  CHECK(std::abs(mean.x()) <= 0.03);
  CHECK(std::abs(mean.y()) <= 0.03);
  CHECK(std::abs(mean.z()) <= 0.03);
}
