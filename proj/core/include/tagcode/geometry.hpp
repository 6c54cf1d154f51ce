#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace tagcode {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// A proper rotation (orthogonal, det +1). Construction validates.
class RotationMatrix {
 public:
  RotationMatrix() : m_(Mat3::Identity()) {}

  // Throws InvalidArgument unless m is orthogonal with det +1 within 1e-12.
  explicit RotationMatrix(const Mat3& m);

  static RotationMatrix identity() { return RotationMatrix(); }

  const Mat3& matrix() const noexcept { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }
  Vec3 apply(const Vec3& v) const { return m_ * v; }

  RotationMatrix operator*(const RotationMatrix& other) const;

 private:
  struct Unchecked {};
  RotationMatrix(const Mat3& m, Unchecked) : m_(m) {}

  Mat3 m_;
};

enum class EulerConvention {
  IntrinsicZYZ,  // R = Rz(a) Ry(b) Rz(c); a,c in [0,2pi), b in [0,pi)
  IntrinsicZYX,  // R = Rz(a) Ry(b) Rx(c); yaw-pitch-roll
};

using EulerAngles = std::array<double, 3>;

// Ranges of uniform draws for each Euler angle of a convention.
std::array<double, 3> euler_ranges(EulerConvention convention);

RotationMatrix rotation_from_euler(const EulerAngles& angles,
                                   EulerConvention convention = EulerConvention::IntrinsicZYZ);

RotationMatrix rotation_about_axis(const Vec3& axis, double angle);

struct AnglePair {
  double polar = 0.0;    // [0, pi)
  double azimuth = 0.0;  // [0, 2pi)
};

/// Finite set of candidate orientations. Indices are stable identifiers.
class OrientationGrid {
 public:
  OrientationGrid(std::vector<RotationMatrix> rotations, std::vector<EulerAngles> euler_angles,
                  std::uint64_t seed, EulerConvention convention);

  std::size_t size() const noexcept { return rotations_.size(); }
  const RotationMatrix& operator[](std::size_t i) const { return rotations_[i]; }
  const std::vector<RotationMatrix>& rotations() const noexcept { return rotations_; }
  const std::vector<EulerAngles>& euler_angles() const noexcept { return euler_angles_; }
  std::uint64_t seed() const noexcept { return seed_; }
  EulerConvention convention() const noexcept { return convention_; }

  // Grid restricted to the given indices (in that order).
  OrientationGrid subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<RotationMatrix> rotations_;
  std::vector<EulerAngles> euler_angles_;
  std::uint64_t seed_;
  EulerConvention convention_;
};

// Independent range-uniform Euler draws. Throws InvalidArgument for count < 2.
OrientationGrid sample_orientation_grid(std::size_t count, std::uint64_t seed,
                                        EulerConvention convention = EulerConvention::IntrinsicZYZ);

// Frobenius distance ||Q - Q2||_F, in [0, 2 sqrt 2].
double rotation_distance(const RotationMatrix& a, const RotationMatrix& b);

/// Spherical angles of Q * reference. At a pole the azimuth is 0; a polar
/// angle of exactly pi is mapped to the largest double below pi so the
/// result stays in [0, pi).
AnglePair reference_angles(const RotationMatrix& q, const Vec3& reference = Vec3::UnitZ());

// (polar - polar')^2 + (azimuth - azimuth')^2. With wrap_azimuth the
// azimuth difference is taken on the circle instead.
double angle_loss(const AnglePair& truth, const AnglePair& estimate, bool wrap_azimuth = false);

}  // namespace tagcode
