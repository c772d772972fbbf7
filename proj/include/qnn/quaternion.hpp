#pragma once

// Quaternion arithmetic, rotors and 3D rotation by conjugation.
//
//   q = q0 + q1 i + q2 j + q3 k,   i² = j² = k² = ijk = -1
//
// A unit quaternion R = cos(θ/2) + sin(θ/2)(o1 i + o2 j + o3 k) rotates the
// pure quaternion x about axis o by θ through x ↦ R x R̄.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>

#include "qnn/error.hpp"
#include "qnn/rng.hpp"

namespace qnn {

template <typename T = double>
struct Quaternion {
  T q0{0}, q1{0}, q2{0}, q3{0};

  constexpr Quaternion() = default;
  constexpr Quaternion(T r, T i, T j, T k) : q0(r), q1(i), q2(j), q3(k) {}

  static constexpr Quaternion one() { return {T{1}, T{0}, T{0}, T{0}}; }
  static constexpr Quaternion i() { return {T{0}, T{1}, T{0}, T{0}}; }
  static constexpr Quaternion j() { return {T{0}, T{0}, T{1}, T{0}}; }
  static constexpr Quaternion k() { return {T{0}, T{0}, T{0}, T{1}}; }
  static constexpr Quaternion pure(T x, T y, T z) { return {T{0}, x, y, z}; }

  constexpr bool operator==(const Quaternion&) const = default;

  constexpr Quaternion operator+(const Quaternion& o) const {
    return {q0 + o.q0, q1 + o.q1, q2 + o.q2, q3 + o.q3};
  }
  constexpr Quaternion operator-(const Quaternion& o) const {
    return {q0 - o.q0, q1 - o.q1, q2 - o.q2, q3 - o.q3};
  }
  constexpr Quaternion operator-() const { return {-q0, -q1, -q2, -q3}; }
  constexpr Quaternion operator*(T s) const { return {q0 * s, q1 * s, q2 * s, q3 * s}; }

  // Hamilton product.
  constexpr Quaternion operator*(const Quaternion& o) const {
    return {q0 * o.q0 - q1 * o.q1 - q2 * o.q2 - q3 * o.q3,
            q0 * o.q1 + q1 * o.q0 + q2 * o.q3 - q3 * o.q2,
            q0 * o.q2 - q1 * o.q3 + q2 * o.q0 + q3 * o.q1,
            q0 * o.q3 + q1 * o.q2 - q2 * o.q1 + q3 * o.q0};
  }

  Eigen::Matrix<T, 3, 1> vec() const { return {q1, q2, q3}; }

  template <typename U>
  Quaternion<U> cast() const {
    return {static_cast<U>(q0), static_cast<U>(q1), static_cast<U>(q2), static_cast<U>(q3)};
  }
};

template <typename T>
constexpr Quaternion<T> operator*(T s, const Quaternion<T>& q) {
  return q * s;
}

template <typename T>
constexpr Quaternion<T> qmul(const Quaternion<T>& p, const Quaternion<T>& q) {
  return p * q;
}

template <typename T>
constexpr Quaternion<T> conjugate(const Quaternion<T>& q) {
  return {q.q0, -q.q1, -q.q2, -q.q3};
}

template <typename T>
T norm(const Quaternion<T>& q) {
  return std::sqrt(q.q0 * q.q0 + q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3);
}

inline constexpr double kUnitTolerance = 1e-6;

template <typename T>
void require_unit(const Quaternion<T>& r) {
  const double n = static_cast<double>(norm(r));
  require(std::abs(n - 1.0) <= kUnitTolerance, ErrorKind::Key,
          "rotor is not a unit quaternion (norm " + std::to_string(n) + ")");
}

// R x R̄. The real part is carried through unchanged, so a pure input gives an
// exactly pure output.
template <typename T>
Quaternion<T> rotate(const Quaternion<T>& r, const Quaternion<T>& x) {
  require_unit(r);
  Quaternion<T> y = r * x * conjugate(r);
  y.q0 = x.q0;
  return y;
}

// The 3×3 matrix M with vec(R x R̄) = M vec(x).
template <typename T>
Eigen::Matrix<T, 3, 3> rotation_matrix(const Quaternion<T>& r) {
  const T w = r.q0, x = r.q1, y = r.q2, z = r.q3;
  Eigen::Matrix<T, 3, 3> m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

// The private key: unit axis o and angle θ ∈ [0, 2π).
struct RotationKey {
  Eigen::Vector3d axis{1.0, 0.0, 0.0};
  double angle = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const RotationKey& o) const {
    return axis == o.axis && angle == o.angle && seed == o.seed;
  }
};

inline constexpr double kAxisTolerance = 1e-9;

inline void validate(const RotationKey& key) {
  require(std::isfinite(key.axis.x()) && std::isfinite(key.axis.y()) &&
              std::isfinite(key.axis.z()) && std::isfinite(key.angle),
          ErrorKind::Key, "key has non-finite components");
  require(std::abs(key.axis.norm() - 1.0) <= kAxisTolerance, ErrorKind::Key,
          "key axis is not a unit vector");
  require(key.angle >= 0.0 && key.angle < 2.0 * std::numbers::pi, ErrorKind::Key,
          "key angle outside [0, 2pi)");
}

inline Quaternion<double> rotor(const RotationKey& key) {
  validate(key);
  const double c = std::cos(key.angle / 2.0);
  const double s = std::sin(key.angle / 2.0);
  return {c, s * key.axis.x(), s * key.axis.y(), s * key.axis.z()};
}

inline RotationKey make_key(const Eigen::Vector3d& axis, double angle, std::uint64_t seed = 0) {
  require(axis.norm() > 0.0, ErrorKind::Key, "zero rotation axis");
  RotationKey key;
  key.axis = axis.normalized();
  const double two_pi = 2.0 * std::numbers::pi;
  key.angle = std::fmod(angle, two_pi);
  if (key.angle < 0.0) key.angle += two_pi;
  if (key.angle >= two_pi) key.angle = 0.0;
  key.seed = seed;
  return key;
}

// Axis: normalized triple of standard Gaussians (uniform on the sphere).
// Angle: uniform on [0, 2π).
inline RotationKey sample_rotation(Rng& rng, std::uint64_t seed = 0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
  Eigen::Vector3d axis;
  do {
    axis = {gauss(rng), gauss(rng), gauss(rng)};
  } while (axis.norm() < 1e-12);
  const double angle = unif(rng);
  return make_key(axis, angle, seed);
}

inline RotationKey sample_rotation(std::uint64_t seed) {
  Rng rng(seed);
  return sample_rotation(rng, seed);
}

// Key file: three UTF-8 lines, reals with 17 significant digits.
std::string format_key(const RotationKey& key);
RotationKey parse_key(const std::string& text);
void save_key(const std::filesystem::path& path, const RotationKey& key);
RotationKey load_key(const std::filesystem::path& path);
std::uint64_t key_id(const RotationKey& key);

}  // namespace qnn
