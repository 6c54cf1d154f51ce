#include "tagcode/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "tagcode/error.hpp"
#include "tagcode/rng.hpp"

namespace tagcode {
namespace {

constexpr double kRotationTolerance = 1e-12;

Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }

}  // namespace

RotationMatrix::RotationMatrix(const Mat3& m) : m_(m) {
  if (!m.allFinite()) throw InvalidArgument("rotation matrix has non-finite entries");
  const Mat3 gram = m.transpose() * m;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kRotationTolerance)
    throw InvalidArgument("matrix is not orthogonal");
  if (std::abs(m.determinant() - 1.0) > kRotationTolerance)
    throw InvalidArgument("matrix determinant is not +1");
}

RotationMatrix RotationMatrix::operator*(const RotationMatrix& other) const {
  return RotationMatrix(m_ * other.m_, Unchecked{});
}

std::array<double, 3> euler_ranges(EulerConvention convention) {
  switch (convention) {
    case EulerConvention::IntrinsicZYZ:
      return {kTwoPi, kPi, kTwoPi};
    case EulerConvention::IntrinsicZYX:
      return {kTwoPi, kPi, kTwoPi};
  }
  return {kTwoPi, kPi, kTwoPi};
}

RotationMatrix rotation_from_euler(const EulerAngles& angles, EulerConvention convention) {
  for (const double a : angles)
    if (!std::isfinite(a)) throw InvalidArgument("euler angle is not finite");
  Mat3 m;
  switch (convention) {
    case EulerConvention::IntrinsicZYZ:
      m = rot_z(angles[0]) * rot_y(angles[1]) * rot_z(angles[2]);
      break;
    case EulerConvention::IntrinsicZYX:
      m = rot_z(angles[0]) * rot_y(angles[1]) * rot_x(angles[2]);
      break;
  }
  return RotationMatrix(m);
}

RotationMatrix rotation_about_axis(const Vec3& axis, double angle) {
  if (axis.norm() == 0.0) throw InvalidArgument("rotation axis is zero");
  return RotationMatrix(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix());
}

OrientationGrid::OrientationGrid(std::vector<RotationMatrix> rotations,
                                 std::vector<EulerAngles> euler_angles, std::uint64_t seed,
                                 EulerConvention convention)
    : rotations_(std::move(rotations)),
      euler_angles_(std::move(euler_angles)),
      seed_(seed),
      convention_(convention) {
  if (!euler_angles_.empty() && euler_angles_.size() != rotations_.size())
    throw InvalidArgument("euler angle list does not match rotation list");
}

OrientationGrid OrientationGrid::subset(const std::vector<std::size_t>& indices) const {
  std::vector<RotationMatrix> rot;
  std::vector<EulerAngles> eul;
  rot.reserve(indices.size());
  for (const std::size_t i : indices) {
    rot.push_back(rotations_.at(i));
    if (!euler_angles_.empty()) eul.push_back(euler_angles_[i]);
  }
  return OrientationGrid(std::move(rot), std::move(eul), seed_, convention_);
}

OrientationGrid sample_orientation_grid(std::size_t count, std::uint64_t seed,
                                        EulerConvention convention) {
  if (count < 2) throw InvalidArgument("orientation grid needs at least 2 orientations");
  const auto ranges = euler_ranges(convention);
  Xoshiro256 gen(derive_seed(seed, "orientation-grid"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<RotationMatrix> rotations;
  std::vector<EulerAngles> angles;
  rotations.reserve(count);
  angles.reserve(count);
  while (rotations.size() < count) {
    EulerAngles a{};
    for (int k = 0; k < 3; ++k) a[k] = unit(gen) * ranges[k];
    RotationMatrix r = rotation_from_euler(a, convention);
    // Collisions are astronomically unlikely; redraw if one happens.
    const bool duplicate = std::any_of(rotations.begin(), rotations.end(), [&](const auto& q) {
      return rotation_distance(q, r) == 0.0;
    });
    if (duplicate) continue;
    rotations.push_back(r);
    angles.push_back(a);
  }
  return OrientationGrid(std::move(rotations), std::move(angles), seed, convention);
}

double rotation_distance(const RotationMatrix& a, const RotationMatrix& b) {
  return (a.matrix() - b.matrix()).norm();
}

AnglePair reference_angles(const RotationMatrix& q, const Vec3& reference) {
  const Vec3 v = q.apply(reference);
  const double r = v.norm();
  AnglePair out;
  const double c = std::clamp(v.z() / r, -1.0, 1.0);
  out.polar = std::acos(c);
  if (out.polar >= kPi) out.polar = std::nextafter(kPi, 0.0);
  const double rho = std::hypot(v.x(), v.y());
  if (rho <= 1e-12 * r) {
    out.azimuth = 0.0;
  } else {
    double az = std::atan2(v.y(), v.x());
    if (az < 0.0) az += kTwoPi;
    if (az >= kTwoPi) az = 0.0;
    out.azimuth = az;
  }
  return out;
}

double angle_loss(const AnglePair& truth, const AnglePair& estimate, bool wrap_azimuth) {
  const double dp = truth.polar - estimate.polar;
  double da = truth.azimuth - estimate.azimuth;
  if (wrap_azimuth) {
    da = std::fabs(da);
    da = std::min(da, kTwoPi - da);
  }
  return dp * dp + da * da;
}

}  // namespace tagcode
