#pragma once

#include <cstdint>
#include <vector>

#include "boardcal/geom.hpp"

namespace boardcal {

/// Raw LiDAR scan in the sensor frame (x-forward, y-left, z-up).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<int32_t> rings;      // optional, empty or one entry per point
  std::vector<double> timestamps;  // optional

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct RangeImageConfig {
  double h_res_deg = 0.2;
  double v_res_deg = 0.4;
  double azimuth_min_deg = -180.0;
  double azimuth_max_deg = 180.0;
  double elevation_min_deg = -25.0;
  double elevation_max_deg = 15.0;
  /// Robust-mean gate: ranges beyond median + outlier_k * 1.4826 * MAD are
  /// treated as pass-through returns and dropped from the cell.
  double outlier_k = 3.0;

  void validate() const;
};

struct RangeCell {
  double mean_range = 0.0;   // meters, over retained points
  Vec3 mean_point = Vec3::Zero();
  std::vector<int> point_indices;

  bool occupied() const { return !point_indices.empty(); }
};

/// Cylindrical projection grid: rows index elevation (top row = highest),
/// columns index azimuth (grows counterclockwise, LiDAR y-left convention).
class RangeImage {
 public:
  RangeImage(const RangeImageConfig& cfg);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double vertical_fov() const { return el_max_ - el_min_; }
  double horizontal_fov() const { return az_max_ - az_min_; }
  bool full_circle() const;

  const RangeCell& cell(int row, int col) const {
    return cells_[static_cast<std::size_t>(row) * cols_ + col];
  }
  RangeCell& cell(int row, int col) {
    return cells_[static_cast<std::size_t>(row) * cols_ + col];
  }

  /// Maps a direction to grid coordinates; false when outside the FOV.
  bool project(const Vec3& p, int& row, int& col) const;

  /// Unit direction through the center of a cell.
  Vec3 cell_direction(int row, int col) const;

  double h_res() const { return h_res_; }
  double v_res() const { return v_res_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  double az_min_ = 0.0, az_max_ = 0.0;
  double el_min_ = 0.0, el_max_ = 0.0;
  double h_res_ = 0.0, v_res_ = 0.0;
  std::vector<RangeCell> cells_;
};

/// Throws EmptyCloud. Points outside the configured FOV are dropped.
RangeImage build_range_image(const PointCloud& cloud,
                             const RangeImageConfig& cfg);

struct GroundRemovalConfig {
  double angle_thresh_rad = deg_to_rad(10.0);
  /// Cells whose mean z exceeds this are never ground (meters, sensor frame).
  double max_ground_z_m = -0.9;
};

/// Per-point ground mask (1 = ground). Column-wise test: walking up from the
/// lowest occupied cell, a cell joins the ground set while the segment to the
/// previous ground cell stays flatter than angle_thresh.
std::vector<uint8_t> remove_ground(const RangeImage& img,
                                   const PointCloud& cloud,
                                   const GroundRemovalConfig& cfg);

struct SegmentationConfig {
  double beta_thresh_rad = deg_to_rad(10.0);
  int min_cluster_points = 30;
};

struct Cluster {
  std::vector<int> point_indices;
  Vec3 centroid = Vec3::Zero();
  /// Half-sizes along the principal axes, descending.
  Vec3 extent = Vec3::Zero();
};

/// Four-neighbor BFS over non-ground occupied cells. Neighboring cells merge
/// when the angle formed by their two range measurements exceeds beta_thresh.
/// Clusters below min_cluster_points are discarded; output is ordered by
/// smallest member point index.
std::vector<Cluster> segment(const RangeImage& img, const PointCloud& cloud,
                             const std::vector<uint8_t>& ground_mask,
                             const SegmentationConfig& cfg);

}  // namespace boardcal
