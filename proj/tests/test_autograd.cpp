#include "doctest.h"
#include "grad_cases.hpp"

using namespace qnn;
using test::D;

TEST_CASE("analytic gradients match central differences") {
  Rng rng(21);
  for (const auto& r : test::op_gradient_checks(rng)) {
    CAPTURE(r.name);
    for (const auto& blk : r.report.blocks) {
      CAPTURE(blk.name);
      CHECK(blk.checked > 0);
      CHECK(blk.max_rel_error <= 1e-3);
    }
  }
}

TEST_CASE("loss gradients") {
  Rng rng(2);
  auto z = test::random_real<D>({6}, rng);
  const std::vector<int> labels{2, 0};
  const std::vector<int> targets{1, 0, 0, 1, 1, 0};
  const std::vector<std::pair<std::string, RealTensor<D>*>> blocks{{"z", &z}};
  auto ce = gradient_check(blocks, [&](Tape<D>& t, ForwardContext&) {
    return ops::softmax_cross_entropy(ops::reshape(t.parameter(z), Dims{2, 1, 3, 1, 1}), labels);
  });
  CHECK(ce.passed());
  auto bce = gradient_check(blocks, [&](Tape<D>& t, ForwardContext&) {
    return ops::bce_with_logits(ops::reshape(t.parameter(z), Dims{6, 1, 1, 1, 1}), targets);
  });
  CHECK(bce.passed());
}

TEST_CASE("loss values") {
  Tape<D> t(false);
  Vec<D> z(3);
  z << 0, 0, 0;
  Var<D> logits = t.constant(Dims{1, 1, 3, 1, 1}, z);
  CHECK(ops::softmax_cross_entropy(logits, {1}).value()[0] == doctest::Approx(std::log(3.0)));
  Vec<D> s(2);
  s << 0, 1000;
  Var<D> sv = t.constant(Dims{2, 1, 1, 1, 1}, s);
  CHECK(ops::bce_with_logits(sv, {1, 1}).value()[0] == doctest::Approx(std::log(2.0) / 2));
  Vec<D> tgt(2);
  tgt << 1, 1;
  CHECK(ops::mse(sv, tgt).value()[0] == doctest::Approx((1 + 999.0 * 999.0) / 2));
}

TEST_CASE("tape bookkeeping") {
  RealTensor<D> w(Shape{2}, Vec<D>(Eigen::Array2d(1, 2)));
  RealTensor<D> other(Shape{2});
  Tape<D> t;
  Var<D> y = ops::sum(ops::scale(t.parameter(w), D(3)));
  CHECK_THROWS_AS(t.gradient(w), Error);
  t.backward(y);
  CHECK((t.gradient(w) == D(3)).all());
  CHECK_THROWS_AS(t.gradient(other), Error);

  Tape<D> f;
  f.freeze(w);
  Var<D> y2 = ops::sum(f.parameter(w));
  f.backward(y2);
  CHECK((f.gradient(w) == D(0)).all());
}

TEST_CASE("sgd update with clipping") {
  RealTensor<D> w(Shape{3}, Vec<D>(Eigen::Array3d(0.0, 0.005, -0.005)));
  Vec<D> g(3);
  g << -1, 0.1, 0;
  sgd_update<D>({&w}, {g}, 0.1, std::pair{-0.01, 0.01});
  CHECK(w.values[0] == doctest::Approx(0.01));
  CHECK(w.values[1] == doctest::Approx(-0.005));
  CHECK(w.values[2] == doctest::Approx(-0.005));
}

TEST_CASE("gradients of simple closed forms") {
  Rng rng(30);
  auto w = test::random_real<D>({5}, rng);
  Tape<D> t;
  t.backward(ops::sum(t.parameter(w)));
  CHECK((t.gradient(w) == D(1)).all());
  Tape<D> h;
  // mean of squares times n/2 is ½‖w‖²
  h.backward(ops::scale(ops::mse(h.parameter(w), Vec<D>(Vec<D>::Zero(5))), D(2.5)));
  CHECK(((h.gradient(w) - w.values).abs() < 1e-12).all());
}

TEST_CASE("finite differences on a linear model") {
  Rng rng(31);
  auto w = test::random_real<D>({3, 6}, rng);
  const auto x = test::random_real<D>({6}, rng);
  const Vec<D> target = test::random_real<D>({3}, rng).values;
  const auto rep = gradient_check({{"w", &w}}, [&](Tape<D>& t, ForwardContext&) {
    Var<D> in = t.constant(Dims{1, 1, 6, 1, 1}, x.values);
    return ops::mse(ops::fc(in, t.parameter(w), 3), target);
  }, 1e-4, 1e-9);
  CHECK(rep.blocks[0].checked == 18);
  CHECK(rep.max_rel_error() <= 1e-9);
}

TEST_CASE("QReLU finite differences away from and at the threshold") {
  using L = LayerSpec<D>;
  const Stack<D> s{L::qrelu(1.0)};
  auto loss_for = [&](RealTensor<D>& x) {
    return [&](Tape<D>& t, ForwardContext& ctx) {
      Var<D> y = apply_layers(ops::reshape(t.parameter(x), Dims{1, 4, 1, 1, 2}), s, ctx);
      return ops::mse(y, Vec<D>(Vec<D>::Constant(8, 0.3)));
    };
  };
  // one element well inside, one well outside the threshold
  RealTensor<D> far(Shape{8});
  far.values << 0, 0, 0.1, 2.0, 0.1, -1.5, 0.05, 1.0;
  const auto ok = gradient_check({{"x", &far}}, loss_for(far), 1e-5, 1e-6);
  CHECK(ok.blocks[0].skipped == 0);
  CHECK(ok.max_rel_error() <= 1e-6);
  // element 0 sits exactly on ‖f‖ = C
  RealTensor<D> kink(Shape{8});
  kink.values << 0, 0, 1.0, 2.0, 0, -1.5, 0, 1.0;
  const auto k = gradient_check({{"x", &kink}}, loss_for(kink), 1e-5);
  CHECK(k.blocks[0].skipped >= 1);
  CHECK(k.passed());
}
