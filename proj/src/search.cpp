#include "boardcal/search.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "boardcal/error.hpp"
#include "boardcal/log.hpp"

namespace boardcal {

int SearchConfig::steps_per_axis() const {
  if (step_deg <= 0.0) return 1;
  return 2 * static_cast<int>(std::round(range_deg / step_deg)) + 1;
}

void SearchConfig::validate() const {
  if (range_deg < 0.0) {
    raise(ErrorCode::InvalidConfig, "search range must be non-negative");
  }
  if (range_deg > 0.0 && !(step_deg > 0.0 && step_deg <= range_deg)) {
    raise(ErrorCode::InvalidConfig,
          "search step must satisfy 0 < step <= range");
  }
}

CandidateSet generate_candidates(const RigidTransform& initial_lidar_to_camera,
                                 const SearchConfig& cfg) {
  cfg.validate();
  CandidateSet set;
  if (cfg.range_deg == 0.0) {
    set.candidates.push_back({initial_lidar_to_camera, 0.0});
    return set;
  }
  const int half = static_cast<int>(std::round(cfg.range_deg / cfg.step_deg));
  const int per_axis = 2 * half + 1;
  set.candidates.reserve(static_cast<std::size_t>(per_axis) * per_axis *
                         per_axis);
  for (int ir = -half; ir <= half; ++ir) {
    for (int ip = -half; ip <= half; ++ip) {
      for (int iy = -half; iy <= half; ++iy) {
        const EulerAngles delta = EulerAngles::from_degrees(
            ir * cfg.step_deg, ip * cfg.step_deg, iy * cfg.step_deg);
        const Mat3 perturb = euler_to_rotation(delta).rotation();
        Candidate c;
        c.lidar_to_camera = RigidTransform(
            initial_lidar_to_camera.rotation() * perturb,
            initial_lidar_to_camera.translation());
        c.perturb_angle_rad = rotation_angle(perturb);
        set.candidates.push_back(std::move(c));
      }
    }
  }
  return set;
}

namespace {

std::optional<RoiRect> roi_or_nothing(const Vec3& center, double side_m,
                                      const RangeImage& img) {
  const double h = side_m / 2.0;
  RoiRect roi{img.rows(), -1, img.cols(), -1};
  bool any = false;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 v = center + Vec3((corner & 1) ? h : -h, (corner & 2) ? h : -h,
                                 (corner & 4) ? h : -h);
    int row, col;
    if (!img.project(v, row, col)) continue;
    any = true;
    roi.row_min = std::min(roi.row_min, row);
    roi.row_max = std::max(roi.row_max, row);
    roi.col_min = std::min(roi.col_min, col);
    roi.col_max = std::max(roi.col_max, col);
  }
  if (!any) return std::nullopt;
  return roi;
}

/// Inclusive-prefix summed-area table of per-cell point counts, padded by one
/// row/column of zeros for O(1) rectangle sums.
class CountTable {
 public:
  explicit CountTable(const RangeImage& img)
      : rows_(img.rows()), cols_(img.cols()), sums_((rows_ + 1) * (cols_ + 1), 0) {
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        const int64_t count =
            static_cast<int64_t>(img.cell(r, c).point_indices.size());
        at(r + 1, c + 1) =
            count + at(r, c + 1) + at(r + 1, c) - at(r, c);
      }
    }
  }

  int64_t rect_sum(const RoiRect& roi) const {
    const int r0 = std::clamp(roi.row_min, 0, rows_ - 1);
    const int r1 = std::clamp(roi.row_max, 0, rows_ - 1);
    const int c0 = std::clamp(roi.col_min, 0, cols_ - 1);
    const int c1 = std::clamp(roi.col_max, 0, cols_ - 1);
    if (r1 < r0 || c1 < c0) return 0;
    return at(r1 + 1, c1 + 1) - at(r0, c1 + 1) - at(r1 + 1, c0) + at(r0, c0);
  }

 private:
  int64_t& at(int r, int c) { return sums_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
  int64_t at(int r, int c) const { return sums_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }

  int rows_, cols_;
  std::vector<int64_t> sums_;
};

int64_t gated_rect_sum(const RangeImage& img, const RoiRect& roi,
                       double center_range, double side_m) {
  const int r0 = std::clamp(roi.row_min, 0, img.rows() - 1);
  const int r1 = std::clamp(roi.row_max, 0, img.rows() - 1);
  const int c0 = std::clamp(roi.col_min, 0, img.cols() - 1);
  const int c1 = std::clamp(roi.col_max, 0, img.cols() - 1);
  int64_t count = 0;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const RangeCell& cell = img.cell(r, c);
      if (!cell.occupied()) continue;
      if (std::abs(cell.mean_range - center_range) > side_m) continue;
      count += static_cast<int64_t>(cell.point_indices.size());
    }
  }
  return count;
}

}  // namespace

RoiRect calculate_roi(const Vec3& center_lidar, double side_m,
                      const RangeImage& img) {
  const auto roi = roi_or_nothing(center_lidar, side_m, img);
  if (!roi.has_value()) {
    raise(ErrorCode::OutOfFov,
          "projected board region lies entirely outside the range image");
  }
  return *roi;
}

GridSearchResult coarse_grid_search(const std::vector<SearchFrame>& frames,
                                    CandidateSet& candidates,
                                    const BoardModel& board,
                                    const RangeImageConfig& img_cfg,
                                    const SearchConfig& cfg) {
  if (candidates.candidates.empty()) {
    raise(ErrorCode::InvalidArgument, "empty candidate set");
  }
  bool any_input = false;
  for (const SearchFrame& f : frames) {
    if (!f.target_points.empty() && !f.board_to_camera.empty()) {
      any_input = true;
      break;
    }
  }
  if (!any_input) {
    raise(ErrorCode::NoDetections,
          "no frame provides both cluster points and a camera target pose");
  }

  const std::size_t n_cand = candidates.candidates.size();
  candidates.scores.assign(n_cand, 0);

  // The camera->LiDAR direction is what the center mapping needs; invert each
  // candidate once up front.
  std::vector<RigidTransform> camera_to_lidar;
  camera_to_lidar.reserve(n_cand);
  for (const Candidate& c : candidates.candidates) {
    camera_to_lidar.push_back(c.lidar_to_camera.inverse());
  }

  for (const SearchFrame& frame : frames) {
    if (frame.target_points.empty() || frame.board_to_camera.empty()) continue;

    PointCloud cloud;
    cloud.points = frame.target_points;
    const RangeImage img = build_range_image(cloud, img_cfg);
    std::optional<CountTable> table;
    if (!cfg.range_gate) table.emplace(img);

    std::vector<Vec3> centers_cam;
    centers_cam.reserve(frame.board_to_camera.size());
    for (const RigidTransform& pose : frame.board_to_camera) {
      centers_cam.push_back(pose.translation());  // board origin in camera
    }

    for (std::size_t i = 0; i < n_cand; ++i) {
      int64_t score = 0;
      for (const Vec3& center_cam : centers_cam) {
        const Vec3 center_lidar = camera_to_lidar[i].apply(center_cam);
        const auto roi = roi_or_nothing(center_lidar, board.side_m, img);
        if (!roi.has_value()) continue;
        score += cfg.range_gate
                     ? gated_rect_sum(img, *roi, center_lidar.norm(),
                                      board.side_m)
                     : table->rect_sum(*roi);
      }
      candidates.scores[i] += score;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < n_cand; ++i) {
    const int64_t s = candidates.scores[i];
    const int64_t sb = candidates.scores[best];
    if (s > sb || (s == sb && candidates.candidates[i].perturb_angle_rad <
                                  candidates.candidates[best].perturb_angle_rad)) {
      best = i;
    }
  }

  if (candidates.scores[best] <= 0) {
    raise(ErrorCode::AllZeroScores,
          "no candidate captured any cluster point; initial extrinsic is "
          "likely far off or detections are empty");
  }

  GridSearchResult out;
  out.lidar_to_camera = candidates.candidates[best].lidar_to_camera;
  out.best_index = best;
  out.best_score = candidates.scores[best];
  log::debug("grid search best score " + std::to_string(out.best_score));
  return out;
}

}  // namespace boardcal
