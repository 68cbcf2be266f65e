#pragma once

#include <Eigen/Core>

#include "boardcal/error.hpp"

namespace boardcal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Rigid transform mapping coordinates from a source frame into a destination
/// frame: p_dst = R * p_src + t. Immutable after construction.
///
/// Frame conventions used throughout:
///   camera: x-right, y-down, z-forward
///   LiDAR:  x-forward, y-left, z-up
///   board:  origin at center, x-right/y-up in the plane, z along the normal
class RigidTransform {
 public:
  RigidTransform();

  /// Accepts rotations orthonormal to 1e-9; gently drifted ones (up to 1e-3)
  /// are snapped to the nearest rotation, anything worse throws
  /// InvalidArgument.
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return RigidTransform(); }
  static RigidTransform rotation_only(const Mat3& r);
  static RigidTransform translation_only(const Vec3& t);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  RigidTransform inverse() const;

  /// Nearest rotation by polar decomposition. Use after long composition
  /// chains to keep orthonormality drift in check.
  RigidTransform renormalized() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Result maps via b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

inline Vec3 apply(const RigidTransform& t, const Vec3& p) { return t.apply(p); }

/// Intrinsic ZYX (yaw then pitch then roll) angles, stored in radians.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  static EulerAngles from_degrees(double roll_deg, double pitch_deg,
                                  double yaw_deg) {
    return {deg_to_rad(roll_deg), deg_to_rad(pitch_deg), deg_to_rad(yaw_deg)};
  }
};

/// R = Rz(yaw) * Ry(pitch) * Rx(roll); returned transform has zero translation.
RigidTransform euler_to_rotation(const EulerAngles& e);

EulerAngles rotation_to_euler(const Mat3& r);

/// Total rotation angle in [0, pi].
double rotation_angle(const Mat3& r);

Mat3 nearest_rotation(const Mat3& m);

struct PinholeCamera {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
  bool contains(const Vec2& px) const {
    return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
  }
};

/// p must be in the camera frame; throws BehindCamera when z <= 1e-6.
Vec2 project(const PinholeCamera& cam, const Vec3& p);

}  // namespace boardcal
