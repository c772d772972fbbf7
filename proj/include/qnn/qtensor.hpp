#pragma once

// Quaternion-valued tensors stored as four aligned real planes (r, i, j, k).
// Within a plane the layout is row-major with the channel outermost.

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "qnn/error.hpp"
#include "qnn/quaternion.hpp"

namespace qnn {

using Shape = std::vector<int>;

template <typename T>
using Vec = Eigen::Array<T, Eigen::Dynamic, 1>;

inline Eigen::Index numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Eigen::Index{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t d = 0; d < shape.size(); ++d) s += (d ? "," : "") + std::to_string(shape[d]);
  return s + "]";
}

template <typename T>
struct RealTensor {
  Shape shape;
  Vec<T> values;

  RealTensor() = default;
  explicit RealTensor(Shape s) : shape(std::move(s)), values(Vec<T>::Zero(numel(shape))) {}
  RealTensor(Shape s, Vec<T> v) : shape(std::move(s)), values(std::move(v)) {
    require(values.size() == numel(shape), ErrorKind::Shape,
            "value count does not match shape " + to_string(shape));
  }

  Eigen::Index size() const { return values.size(); }
  bool operator==(const RealTensor& o) const {
    return shape == o.shape && values.size() == o.values.size() && (values == o.values).all();
  }

  template <typename U>
  RealTensor<U> cast() const {
    RealTensor<U> out;  // no size check: weightless layers carry an empty tensor
    out.shape = shape;
    out.values = values.template cast<U>();
    return out;
  }
};

template <typename T>
struct QTensor {
  Shape shape;
  std::array<Vec<T>, 4> planes;  // r, i, j, k

  QTensor() = default;
  explicit QTensor(Shape s) : shape(std::move(s)) {
    for (auto& p : planes) p = Vec<T>::Zero(numel(shape));
  }
  QTensor(Shape s, std::array<Vec<T>, 4> p) : shape(std::move(s)), planes(std::move(p)) {
    for (const auto& plane : planes)
      require(plane.size() == numel(shape), ErrorKind::Shape,
              "plane size does not match shape " + to_string(shape));
  }

  Eigen::Index size() const { return numel(shape); }

  Quaternion<T> at(Eigen::Index v) const {
    return {planes[0][v], planes[1][v], planes[2][v], planes[3][v]};
  }
  void set(Eigen::Index v, const Quaternion<T>& q) {
    planes[0][v] = q.q0;
    planes[1][v] = q.q1;
    planes[2][v] = q.q2;
    planes[3][v] = q.q3;
  }

  bool is_pure() const { return (planes[0] == T{0}).all(); }

  bool operator==(const QTensor& o) const {
    if (shape != o.shape) return false;
    for (int p = 0; p < 4; ++p)
      if (!(planes[p] == o.planes[p]).all()) return false;
    return true;
  }

  template <typename U>
  QTensor<U> cast() const {
    QTensor<U> out;
    out.shape = shape;
    for (int p = 0; p < 4; ++p) out.planes[p] = planes[p].template cast<U>();
    return out;
  }

  QTensor operator+(const QTensor& o) const {
    require(shape == o.shape, ErrorKind::Shape, "QTensor addition shape mismatch");
    QTensor out(shape);
    for (int p = 0; p < 4; ++p) out.planes[p] = planes[p] + o.planes[p];
    return out;
  }
  QTensor operator*(T s) const {
    QTensor out(shape);
    for (int p = 0; p < 4; ++p) out.planes[p] = planes[p] * s;
    return out;
  }

  RealTensor<T> plane(int p) const { return {shape, planes[p]}; }
};

template <typename T>
QTensor<T> lift(const RealTensor<T>& a, const RealTensor<T>& b, const RealTensor<T>& c) {
  require(a.shape == b.shape && a.shape == c.shape, ErrorKind::Shape,
          "lift: shapes differ " + to_string(a.shape) + " " + to_string(b.shape) + " " +
              to_string(c.shape));
  return QTensor<T>(a.shape, {Vec<T>::Zero(a.size()), a.values, b.values, c.values});
}

// Applies R·(·)·R̄ to every element. The real plane is left untouched.
template <typename T, typename S>
QTensor<T> rotate_all(const Quaternion<S>& r, const QTensor<T>& x) {
  require_unit(r);
  const Eigen::Matrix<T, 3, 3> m = rotation_matrix(r.template cast<double>()).template cast<T>();
  QTensor<T> y(x.shape);
  y.planes[0] = x.planes[0];
  for (int row = 0; row < 3; ++row)
    y.planes[row + 1] = m(row, 0) * x.planes[1] + m(row, 1) * x.planes[2] + m(row, 2) * x.planes[3];
  return y;
}

template <typename T>
RealTensor<T> norm_map(const QTensor<T>& x) {
  Vec<T> s = x.planes[0].square() + x.planes[1].square() + x.planes[2].square() +
             x.planes[3].square();
  return {x.shape, s.sqrt()};
}

// Real weights w (shape {out, in}) applied independently to each plane of a
// flattened x with numel(x) == in. Result has shape {out}.
template <typename T>
QTensor<T> apply_real_linear(const QTensor<T>& x, const RealTensor<T>& w) {
  require(w.shape.size() == 2, ErrorKind::Shape, "apply_real_linear: weight must be a matrix");
  const int out = w.shape[0], in = w.shape[1];
  require(in == x.size(), ErrorKind::Shape,
          "apply_real_linear: contraction mismatch " + std::to_string(in) + " vs " +
              std::to_string(x.size()));
  using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> wm(w.values.data(), out, in);
  QTensor<T> y(Shape{out});
  for (int p = 0; p < 4; ++p) y.planes[p] = (wm * x.planes[p].matrix()).array();
  return y;
}

// Max over all elements of |x − y| across the four planes.
template <typename T>
T max_abs_diff(const QTensor<T>& x, const QTensor<T>& y) {
  require(x.shape == y.shape, ErrorKind::Shape, "max_abs_diff: shape mismatch");
  T m{0};
  for (int p = 0; p < 4; ++p)
    if (x.size() > 0) m = std::max(m, (x.planes[p] - y.planes[p]).abs().maxCoeff());
  return m;
}

template <typename T>
T frobenius(const QTensor<T>& x) {
  T s{0};
  for (int p = 0; p < 4; ++p) s += x.planes[p].square().sum();
  return std::sqrt(s);
}

// Feature file: "QTF1", u8 rank, u32 extents[rank], planes r,i,j,k as f32.
std::string encode_feature(const QTensor<float>& x);
QTensor<float> decode_feature(const std::string& bytes);
void save_feature(const std::filesystem::path& path, const QTensor<float>& x);
QTensor<float> load_feature(const std::filesystem::path& path);

}  // namespace qnn
