#include "doctest.h"
#include "support.hpp"

using namespace qnn;

TEST_CASE("lift puts a, b, c on the imaginary planes") {
  RealTensor<float> a(Shape{2}, Vec<float>(Eigen::Array2f(1, 2)));
  RealTensor<float> b(Shape{2}, Vec<float>(Eigen::Array2f(3, 4)));
  RealTensor<float> c(Shape{2}, Vec<float>(Eigen::Array2f(5, 6)));
  const auto q = lift(a, b, c);
  CHECK(q.is_pure());
  CHECK(q.at(1) == Quaternion<float>{0, 2, 4, 6});
  CHECK_THROWS_AS(lift(a, b, RealTensor<float>(Shape{3})), Error);
}

TEST_CASE("rotate_all equals element-wise rotation") {
  Rng rng(2);
  const auto x = test::random_qtensor<double>({3, 4, 4}, rng, false);
  const auto r = rotor(sample_rotation(rng));
  const auto y = rotate_all(r, x);
  for (Eigen::Index v = 0; v < x.size(); ++v) {
    const auto e = rotate(r, x.at(v));
    CHECK(std::abs(e.q1 - y.at(v).q1) < 1e-12);
    CHECK(std::abs(e.q2 - y.at(v).q2) < 1e-12);
    CHECK(std::abs(e.q3 - y.at(v).q3) < 1e-12);
    CHECK(e.q0 == y.at(v).q0);
  }
  // R̄ undoes R
  CHECK(max_abs_diff(rotate_all(conjugate(r), y), x) < 1e-12);
  // norms are invariant
  CHECK(((norm_map(y).values - norm_map(x).values).abs() < 1e-12).all());
}

TEST_CASE("apply_real_linear acts plane-wise") {
  RealTensor<double> w(Shape{1, 2}, Vec<double>(Eigen::Array2d(2, -1)));
  QTensor<double> x(Shape{2});
  x.set(0, {1, 2, 3, 4});
  x.set(1, {0, 1, 1, 1});
  const auto y = apply_real_linear(x, w);
  CHECK(y.at(0) == Quaternion<double>{2, 3, 5, 7});
}

TEST_CASE("feature file round trip is bit exact") {
  Rng rng(4);
  auto x = test::random_qtensor<float>({5, 3, 2}, rng, false);
  x.planes[1][0] = -0.0f;
  x.planes[2][1] = std::numeric_limits<float>::denorm_min();
  const auto back = decode_feature(encode_feature(x));
  CHECK(back == x);
  CHECK(encode_feature(back) == encode_feature(x));
  CHECK(std::signbit(back.planes[1][0]));
}

TEST_CASE("feature decoding errors") {
  Rng rng(4);
  const std::string good = encode_feature(test::random_qtensor<float>({2}, rng));
  auto kind_of = [](const std::string& bytes) {
    try {
      decode_feature(bytes);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  std::string bad = good;
  bad[0] = 'X';
  CHECK(kind_of(bad) == ErrorKind::Format);
  bad = good;
  bad[3] = '9';
  CHECK(kind_of(bad) == ErrorKind::Version);
  CHECK(kind_of(good.substr(0, good.size() - 1)) == ErrorKind::Format);
  CHECK(kind_of("QT") == ErrorKind::Format);
}

TEST_CASE("lift and norm_map examples") {
  Rng rng(20);
  const auto a = test::random_real<float>({2, 3}, rng), b = test::random_real<float>({2, 3}, rng),
             c = test::random_real<float>({2, 3}, rng);
  const RealTensor<float> zero(Shape{2, 3});
  const auto q = lift(a, zero, zero);
  CHECK(q.plane(1) == a);
  CHECK((q.planes[0] == 0).all());
  CHECK((q.planes[2] == 0).all());
  CHECK((q.planes[3] == 0).all());
  CHECK(((norm_map(q).values - a.values.abs()).abs() < 1e-7f).all());
  const auto abc = lift(a, b, c);
  for (Eigen::Index v = 0; v < a.size(); ++v)
    CHECK(abc.at(v) == Quaternion<float>{0, a.values[v], b.values[v], c.values[v]});
  QTensor<float> e(Shape{1});
  e.set(0, {0, 3, 4, 0});
  CHECK(norm_map(e).values[0] == 5.0f);
}

TEST_CASE("rotate_all examples in single precision") {
  Rng rng(21);
  const auto x = test::random_qtensor<float>({4, 5}, rng, false);
  CHECK(rotate_all(Quaternion<double>::one(), x) == x);
  for (int t = 0; t < 20; ++t) {
    const auto r = rotor(sample_rotation(rng));
    CHECK(max_abs_diff(rotate_all(r, rotate_all(conjugate(r), x)), x) <= 1e-6f);
    CHECK(((norm_map(rotate_all(r, x)).values - norm_map(x).values).abs() <= 1e-6f).all());
  }
}

TEST_CASE("real linear map examples") {
  QTensor<double> x(Shape{1});
  x.set(0, {0, 2, 3, 4});
  RealTensor<double> w(Shape{1, 1}, Vec<double>::Constant(1, 2.0));
  CHECK(apply_real_linear(x, w).at(0) == Quaternion<double>{0, 4, 6, 8});
  Rng rng(22);
  const auto y = test::random_qtensor<double>({3}, rng, false);
  RealTensor<double> eye(Shape{3, 3});
  eye.values << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  CHECK(apply_real_linear(y, eye) == y);
  const auto m = test::random_real<double>({2, 3}, rng);
  for (int t = 0; t < 10; ++t) {
    const auto r = rotor(sample_rotation(rng));
    CHECK(max_abs_diff(apply_real_linear(rotate_all(r, y), m), rotate_all(r, apply_real_linear(y, m))) < 1e-6);
  }
}
