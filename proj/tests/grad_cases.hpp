#pragma once

// Central-difference checks of every differentiable op, shared by the unit
// tests and the acceptance run.

#include <functional>

#include "support.hpp"

namespace qnn::test {

using D = double;

// mse(op(x), target) against x, plus w when the op has weights.
struct OpCase {
  std::string name;
  Dims in;
  std::function<Var<D>(Var<D>, Tape<D>&, ForwardContext&)> op;
};

inline GradCheckReport check_op(const OpCase& c, Rng& rng, std::vector<std::pair<std::string, RealTensor<D>*>> extra = {}) {
  auto x = test::random_real<D>({int(c.in.size())}, rng);
  Vec<D> target;
  {
    Tape<D> t(false);
    ForwardContext ctx;
    Var<D> y = c.op(ops::reshape(t.parameter(x), c.in), t, ctx);
    target = test::random_real<D>({int(y.value().size())}, rng).values;
  }
  LossFn loss = [&](Tape<D>& t, ForwardContext& ctx) {
    return ops::mse(c.op(ops::reshape(t.parameter(x), c.in), t, ctx), target);
  };
  extra.insert(extra.begin(), {"x", &x});
  return gradient_check(extra, loss, 1e-5, 1e-3);
}


struct OpGradResult {
  std::string name;
  GradCheckReport report;
};

inline std::vector<OpGradResult> op_gradient_checks(Rng& rng) {

  const Dims q{2, 4, 3, 4, 4};
  auto w = test::random_real<D>({2 * 3 * 3 * 3}, rng);
  auto wf = test::random_real<D>({5 * 3 * 4 * 4}, rng);
  auto b = test::random_real<D>({3}, rng);
  std::vector<Eigen::Matrix<D, 3, 3>> mats;
  for (int s = 0; s < 2; ++s) mats.push_back(rotation_matrix(rotor(sample_rotation(rng))));
  std::vector<std::uint8_t> keep(2 * 48);
  for (auto& k : keep) k = rng() % 3 != 0;
  auto with_branches = [](ForwardContext& ctx, const Vec<D>& v, auto pred) {
    if (ctx.record_branches)
      for (Eigen::Index i = 0; i < v.size(); ++i) ctx.branches.push_back(pred(v[i]));
  };
  const std::vector<OpCase> cases{
      {"conv2d", q, [&](Var<D> x, Tape<D>& t, ForwardContext&) { return ops::conv2d(x, t.parameter(w), 2, Window{3, 3, 1, 1}); }},
      {"conv2d_stride", q, [&](Var<D> x, Tape<D>& t, ForwardContext&) { return ops::conv2d(x, t.parameter(w), 2, Window{3, 3, 2, 1}); }},
      {"fc", q, [&](Var<D> x, Tape<D>& t, ForwardContext&) { return ops::fc(x, t.parameter(wf), 5); }},
      {"bias", {2, 1, 3, 4, 4}, [&](Var<D> x, Tape<D>& t, ForwardContext&) { return ops::bias(x, t.parameter(b)); }},
      {"qrelu", q, [&](Var<D> x, Tape<D>&, ForwardContext& ctx) {
         Vec<D> n(x.dims().n * x.dims().block());
         kernels::element_norms(x.dims(), x.value().data(), n.data());
         with_branches(ctx, n, [](D v) { return v > 0.9; });
         return ops::qrelu(x, D(0.9));
       }},
      {"qbatchnorm", q, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::qbatchnorm(x, D(1e-3)); }},
      {"maxpool", q, [&](Var<D> x, Tape<D>&, ForwardContext& ctx) {
         std::vector<std::int64_t> am;
         Var<D> y = ops::maxpool(x, Window{2, 2, 2, 0}, &am);
         if (ctx.record_branches) ctx.branches.insert(ctx.branches.end(), am.begin(), am.end());
         return y;
       }},
      {"avgpool", q, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::avgpool(x, Window{3, 3, 1, 1}); }},
      {"dropout", q, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::dropout(x, keep, D(0.3)); }},
      {"relu", {2, 1, 3, 4, 4}, [&](Var<D> x, Tape<D>&, ForwardContext& ctx) {
         with_branches(ctx, x.value(), [](D v) { return v > 0; });
         return ops::relu(x);
       }},
      {"sigmoid", {2, 1, 3, 4, 4}, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::sigmoid(x); }},
      {"upsample", {2, 1, 3, 2, 2}, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::upsample(x, 2); }},
      {"softmax", {2, 1, 5, 1, 1}, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::softmax(x); }},
      {"rotate", q, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::rotate(x, mats); }},
      {"lift", {2, 1, 3, 2, 2}, [&](Var<D> x, Tape<D>&, ForwardContext&) {
         return ops::lift(x, ops::gather(x, {1, 0}), ops::scale(x, D(2)));
       }},
      {"select_plane", q, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::select_plane(x, 2); }},
      {"decrypt", q, [&](Var<D> x, Tape<D>&, ForwardContext&) { return ops::select_plane(ops::rotate(x, mats), 1); }},
      {"concat_sub_add", {2, 1, 3, 2, 2}, [&](Var<D> x, Tape<D>&, ForwardContext&) {
         const Var<D> parts[2] = {x, ops::sub(x, ops::gather(x, {1, 1}))};
         return ops::add(ops::concat_batch<D>(parts), ops::concat_batch<D>(parts));
       }},
  };
  std::vector<OpGradResult> out;
  for (const auto& c : cases) {
    std::vector<std::pair<std::string, RealTensor<D>*>> extra;
    if (c.name.starts_with("conv2d")) extra.push_back({"w", &w});
    if (c.name == "fc") extra.push_back({"w", &wf});
    if (c.name == "bias") extra.push_back({"b", &b});
    out.push_back({c.name, check_op(c, rng, extra)});
  }
  return out;
}

}  // namespace qnn::test
