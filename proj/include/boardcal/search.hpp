#pragma once

#include <cstdint>
#include <vector>

#include "boardcal/camera.hpp"
#include "boardcal/cloud.hpp"
#include "boardcal/geom.hpp"

namespace boardcal {

struct SearchConfig {
  double range_deg = 9.0;  // half-width per Euler axis
  double step_deg = 1.5;
  /// Count only cells whose mean range is within one board side of the
  /// predicted center range (off by default; the plain count is faithful).
  bool range_gate = false;

  int steps_per_axis() const;
  void validate() const;
};

struct Candidate {
  RigidTransform lidar_to_camera;
  double perturb_angle_rad = 0.0;  // total angle of the applied perturbation
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  std::vector<int64_t> scores;  // filled by the search
};

/// Cartesian grid of Euler perturbations composed onto the initial rotation;
/// translation is carried over unchanged.
CandidateSet generate_candidates(const RigidTransform& initial_lidar_to_camera,
                                 const SearchConfig& cfg);

struct RoiRect {
  int row_min = 0;
  int row_max = -1;  // inclusive
  int col_min = 0;
  int col_max = -1;
};

/// Bounding rectangle, in range-image coordinates, of the eight vertices of
/// the axis-aligned cube of side `side_m` centered at `center_lidar`. Throws
/// OutOfFov when no vertex lands inside the image.
RoiRect calculate_roi(const Vec3& center_lidar, double side_m,
                      const RangeImage& img);

/// Per-frame inputs to the search: LiDAR points of detected board clusters
/// plus each matched target's camera pose.
struct SearchFrame {
  std::vector<Vec3> target_points;             // LiDAR frame
  std::vector<RigidTransform> board_to_camera; // one per matched target
};

struct GridSearchResult {
  RigidTransform lidar_to_camera;
  std::size_t best_index = 0;
  int64_t best_score = 0;
};

/// Scores every candidate by the number of detected-cluster points falling in
/// the projected board ROIs, summed over all targets and frames; returns the
/// argmax (ties: smallest perturbation). Throws NoDetections when no frame
/// carries both cluster points and a camera pose, AllZeroScores when no
/// candidate captures a single point.
GridSearchResult coarse_grid_search(const std::vector<SearchFrame>& frames,
                                    CandidateSet& candidates,
                                    const BoardModel& board,
                                    const RangeImageConfig& img_cfg,
                                    const SearchConfig& cfg);

}  // namespace boardcal
