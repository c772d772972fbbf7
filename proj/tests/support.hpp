#pragma once

#include <random>

#include "qnn/attack.hpp"

namespace qnn::test {

template <typename T>
QTensor<T> random_qtensor(const Shape& s, Rng& rng, bool pure = true, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  QTensor<T> q(s);
  for (int p = pure ? 1 : 0; p < 4; ++p)
    for (Eigen::Index v = 0; v < q.size(); ++v) q.planes[p][v] = T(g(rng));
  return q;
}

template <typename T>
RealTensor<T> random_real(const Shape& s, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  RealTensor<T> r(s);
  for (Eigen::Index v = 0; v < r.size(); ++v) r.values[v] = T(g(rng));
  return r;
}

template <typename T>
void randomize(Stack<T>& s, Rng& rng) {
  initialize(s, rng);
  std::vector<RealTensor<T>*> ps;
  collect_parameters(s, ps);
  std::normal_distribution<double> g(0.0, 0.3);
  for (auto* w : ps)
    if (w->shape.size() == 1)
      for (Eigen::Index i = 0; i < w->size(); ++i) w->values[i] = T(g(rng));
}

// ‖x − y‖ / max(‖y‖, tiny) over all four planes.
template <typename T>
double rel_error(const QTensor<T>& x, const QTensor<T>& y) {
  double num = 0, den = 0;
  for (int p = 0; p < 4; ++p) {
    num += (x.planes[p] - y.planes[p]).template cast<double>().square().sum();
    den += y.planes[p].template cast<double>().square().sum();
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-30);
}

}  // namespace qnn::test
