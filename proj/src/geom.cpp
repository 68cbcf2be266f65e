#include "boardcal/geom.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace boardcal {

namespace {

double orthonormality_defect(const Mat3& r) {
  return ((r.transpose() * r) - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return u * v.transpose();
}

RigidTransform::RigidTransform()
    : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation_.allFinite() || !translation_.allFinite()) {
    raise(ErrorCode::InvalidArgument, "transform has non-finite entries");
  }
  const double defect = orthonormality_defect(rotation_);
  if (defect > 1e-9) {
    if (defect > 1e-3 || rotation_.determinant() < 0.0) {
      raise(ErrorCode::InvalidArgument, "matrix is not a rotation");
    }
    rotation_ = nearest_rotation(rotation_);
  }
}

RigidTransform RigidTransform::rotation_only(const Mat3& r) {
  return RigidTransform(r, Vec3::Zero());
}

RigidTransform RigidTransform::translation_only(const Vec3& t) {
  return RigidTransform(Mat3::Identity(), t);
}

RigidTransform RigidTransform::inverse() const {
  Mat3 rt = rotation_.transpose();
  return RigidTransform(rt, -(rt * translation_));
}

RigidTransform RigidTransform::renormalized() const {
  return RigidTransform(nearest_rotation(rotation_), translation_);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform(a.rotation() * b.rotation(),
                        a.rotation() * b.translation() + a.translation());
}

RigidTransform euler_to_rotation(const EulerAngles& e) {
  const double cr = std::cos(e.roll), sr = std::sin(e.roll);
  const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
  const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,  //
      sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,   //
      -sp, cp * sr, cp * cr;
  return RigidTransform::rotation_only(r);
}

EulerAngles rotation_to_euler(const Mat3& r) {
  EulerAngles e;
  e.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
    e.roll = std::atan2(r(2, 1), r(2, 2));
    e.yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: fold yaw into roll.
    e.roll = std::atan2(-r(1, 2), r(1, 1));
    e.yaw = 0.0;
  }
  return e;
}

double rotation_angle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

void PinholeCamera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    raise(ErrorCode::InvalidConfig, "camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    raise(ErrorCode::InvalidConfig, "camera image size must be positive");
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    raise(ErrorCode::InvalidConfig,
          "camera principal point must lie inside the image");
  }
}

Vec2 project(const PinholeCamera& cam, const Vec3& p) {
  if (p.z() <= 1e-6) {
    raise(ErrorCode::BehindCamera, "point is behind the camera");
  }
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

}  // namespace boardcal
