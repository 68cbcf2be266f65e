#pragma once

#include <array>
#include <span>
#include <vector>

#include "boardcal/cloud.hpp"
#include "boardcal/geom.hpp"

namespace boardcal {

/// Square calibration target. Board frame: origin at the center, x-right,
/// y-up, z along the outward normal. Vertex 0 is the center; 1..4 are the
/// top-left, top-right, bottom-right, bottom-left corners, matching the
/// required detection corner order.
struct BoardModel {
  double side_m = 0.6;
  double tag_m = 0.48;

  Vec3 vertex(int j) const;
  std::array<Vec3, 4> corners() const;
  void validate() const;
};

/// One detected target in an image: four ordered corner pixels.
struct CameraDetection {
  int target_id = -1;
  std::array<Vec2, 4> corners_px{};
};

/// One synchronized LiDAR scan plus the camera detections for the same
/// timestamp; the dataset atom.
struct FramePair {
  int index = 0;
  double timestamp_s = 0.0;
  PointCloud cloud;
  std::vector<CameraDetection> detections;
};

struct PnpResult {
  RigidTransform board_to_camera;
  double rms_px = 0.0;
};

/// Planar pose from 4 ordered corner correspondences: homography
/// decomposition seeds a damped least-squares refinement of the reprojection
/// objective; the two-fold planar ambiguity is resolved by reprojection RMS
/// (tie: board normal facing the camera). Throws DegenerateConfiguration on
/// collinear corners, DivergedRefinement when the residual stays above
/// max_rms_px.
PnpResult solve_planar_pnp(const std::array<Vec2, 4>& corners,
                           const BoardModel& board, const PinholeCamera& cam,
                           double max_rms_px = 25.0);

struct RansacPnpConfig {
  double inlier_px = 3.0;
  int max_iterations = 200;
  double confidence = 0.99;
  uint64_t seed = 7;
};

struct RansacPnpResult {
  RigidTransform pose;  // maps 3D-point frame into the camera frame
  std::vector<uint8_t> inlier_mask;
  double rms_px = 0.0;  // over inliers
};

/// Robust pose from 2D-3D correspondences: minimal three-point solves inside
/// a fixed-seed consensus loop, refined on the inlier set. Throws
/// TooFewInliers below 4 correspondences or when consensus collapses.
RansacPnpResult ransac_pnp(std::span<const Vec3> points,
                           std::span<const Vec2> pixels,
                           const PinholeCamera& cam,
                           const RansacPnpConfig& cfg);

/// Damped least-squares pose refinement on the reprojection objective,
/// shared by both solvers. Returns the refined pose and final RMS.
PnpResult refine_pose_reprojection(std::span<const Vec3> points,
                                   std::span<const Vec2> pixels,
                                   const PinholeCamera& cam,
                                   const RigidTransform& init,
                                   int max_iters = 50);

/// Minimal-solver candidates for three correspondences (up to 4 poses).
std::vector<RigidTransform> solve_p3p(const std::array<Vec3, 3>& points,
                                      const std::array<Vec2, 3>& pixels,
                                      const PinholeCamera& cam);

}  // namespace boardcal
