#include "boardcal/cloud.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>

namespace boardcal {

namespace {

double azimuth_of(const Vec3& p) { return std::atan2(p.y(), p.x()); }

double elevation_of(const Vec3& p) {
  return std::atan2(p.z(), std::hypot(p.x(), p.y()));
}

}  // namespace

void RangeImageConfig::validate() const {
  if (!(h_res_deg > 0.0) || !(v_res_deg > 0.0)) {
    raise(ErrorCode::InvalidConfig, "range image resolutions must be positive");
  }
  if (azimuth_min_deg >= azimuth_max_deg ||
      elevation_min_deg >= elevation_max_deg) {
    raise(ErrorCode::InvalidConfig, "range image FOV bounds are inverted");
  }
  if (azimuth_min_deg < -180.0 - 1e-9 || azimuth_max_deg > 180.0 + 1e-9) {
    raise(ErrorCode::InvalidConfig, "azimuth bounds must lie in [-180, 180]");
  }
}

RangeImage::RangeImage(const RangeImageConfig& cfg) {
  cfg.validate();
  az_min_ = deg_to_rad(cfg.azimuth_min_deg);
  az_max_ = deg_to_rad(cfg.azimuth_max_deg);
  el_min_ = deg_to_rad(cfg.elevation_min_deg);
  el_max_ = deg_to_rad(cfg.elevation_max_deg);
  h_res_ = deg_to_rad(cfg.h_res_deg);
  v_res_ = deg_to_rad(cfg.v_res_deg);
  cols_ = std::max(1, static_cast<int>(std::ceil((az_max_ - az_min_) / h_res_ - 1e-9)));
  rows_ = std::max(1, static_cast<int>(std::ceil((el_max_ - el_min_) / v_res_ - 1e-9)));
  cells_.resize(static_cast<std::size_t>(rows_) * cols_);
}

bool RangeImage::full_circle() const {
  return (az_max_ - az_min_) >= 2.0 * kPi - h_res_ * 0.5;
}

bool RangeImage::project(const Vec3& p, int& row, int& col) const {
  const double az = azimuth_of(p);
  const double el = elevation_of(p);
  if (az < az_min_ || az >= az_max_ || el < el_min_ || el >= el_max_) {
    return false;
  }
  // Row 0 is the top of the image (highest elevation).
  row = static_cast<int>((el_max_ - el) / v_res_);
  col = static_cast<int>((az - az_min_) / h_res_);
  row = std::clamp(row, 0, rows_ - 1);
  col = std::clamp(col, 0, cols_ - 1);
  return true;
}

Vec3 RangeImage::cell_direction(int row, int col) const {
  const double el = el_max_ - (row + 0.5) * v_res_;
  const double az = az_min_ + (col + 0.5) * h_res_;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
          std::sin(el)};
}

RangeImage build_range_image(const PointCloud& cloud,
                             const RangeImageConfig& cfg) {
  if (cloud.empty()) {
    raise(ErrorCode::EmptyCloud, "cannot build a range image from zero points");
  }
  RangeImage img(cfg);
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    int row, col;
    if (!img.project(cloud.points[i], row, col)) continue;
    img.cell(row, col).point_indices.push_back(i);
  }

  std::vector<double> ranges;
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      RangeCell& cell = img.cell(r, c);
      if (!cell.occupied()) continue;

      ranges.clear();
      for (int idx : cell.point_indices) {
        ranges.push_back(cloud.points[idx].norm());
      }
      std::vector<double> sorted = ranges;
      std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                       sorted.end());
      const double median = sorted[sorted.size() / 2];
      for (double& v : sorted) v = std::abs(v - median);
      std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                       sorted.end());
      const double mad = sorted[sorted.size() / 2];
      // The floor keeps near-constant cells from flagging millimeter jitter.
      const double gate =
          median + std::max(cfg.outlier_k * 1.4826 * mad, 0.05);

      std::vector<int> kept;
      Vec3 mean_point = Vec3::Zero();
      double mean_range = 0.0;
      for (std::size_t k = 0; k < cell.point_indices.size(); ++k) {
        if (ranges[k] > gate) continue;
        kept.push_back(cell.point_indices[k]);
        mean_point += cloud.points[cell.point_indices[k]];
        mean_range += ranges[k];
      }
      cell.point_indices = std::move(kept);
      if (!cell.point_indices.empty()) {
        const double inv = 1.0 / static_cast<double>(cell.point_indices.size());
        cell.mean_point = mean_point * inv;
        cell.mean_range = mean_range * inv;
      }
    }
  }
  return img;
}

std::vector<uint8_t> remove_ground(const RangeImage& img,
                                   const PointCloud& cloud,
                                   const GroundRemovalConfig& cfg) {
  std::vector<uint8_t> mask(cloud.size(), 0);
  for (int c = 0; c < img.cols(); ++c) {
    bool have_prev = false;
    Vec3 prev = Vec3::Zero();
    bool prev_ground = false;
    // Bottom row first (lowest elevation).
    for (int r = img.rows() - 1; r >= 0; --r) {
      const RangeCell& cell = img.cell(r, c);
      if (!cell.occupied()) continue;

      bool ground = false;
      if (cell.mean_point.z() <= cfg.max_ground_z_m) {
        if (!have_prev) {
          ground = true;  // column seed
        } else if (prev_ground) {
          const Vec3 d = cell.mean_point - prev;
          const double horiz = std::hypot(d.x(), d.y());
          const double angle = std::atan2(std::abs(d.z()), horiz);
          ground = angle < cfg.angle_thresh_rad;
        }
      }
      if (ground) {
        for (int idx : cell.point_indices) mask[idx] = 1;
      }
      prev = cell.mean_point;
      prev_ground = ground;
      have_prev = true;
    }
  }
  return mask;
}

namespace {

/// Angle criterion from range-image component analysis: for neighbor ranges
/// d1 >= d2 separated by angular step phi, beta = atan2(d2 sin phi,
/// d1 - d2 cos phi). Large beta means the two returns lie on a near-continuous
/// surface.
bool cells_connected(const RangeCell& a, const RangeCell& b, double phi,
                     double beta_thresh) {
  const double d1 = std::max(a.mean_range, b.mean_range);
  const double d2 = std::min(a.mean_range, b.mean_range);
  const double beta = std::atan2(d2 * std::sin(phi), d1 - d2 * std::cos(phi));
  return beta > beta_thresh;
}

}  // namespace

std::vector<Cluster> segment(const RangeImage& img, const PointCloud& cloud,
                             const std::vector<uint8_t>& ground_mask,
                             const SegmentationConfig& cfg) {
  const int rows = img.rows();
  const int cols = img.cols();
  const bool wrap = img.full_circle();

  auto cell_id = [cols](int r, int c) { return r * cols + c; };

  // A cell participates if occupied and not ground-labeled.
  std::vector<uint8_t> eligible(static_cast<std::size_t>(rows) * cols, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const RangeCell& cell = img.cell(r, c);
      if (!cell.occupied()) continue;
      if (!ground_mask.empty() && ground_mask[cell.point_indices.front()]) {
        continue;
      }
      eligible[cell_id(r, c)] = 1;
    }
  }

  std::vector<int> label(static_cast<std::size_t>(rows) * cols, -1);
  std::vector<Cluster> clusters;
  std::deque<std::pair<int, int>> queue;

  for (int r0 = 0; r0 < rows; ++r0) {
    for (int c0 = 0; c0 < cols; ++c0) {
      if (!eligible[cell_id(r0, c0)] || label[cell_id(r0, c0)] >= 0) continue;
      const int id = static_cast<int>(clusters.size());
      clusters.emplace_back();
      Cluster& cluster = clusters.back();

      queue.clear();
      queue.emplace_back(r0, c0);
      label[cell_id(r0, c0)] = id;
      while (!queue.empty()) {
        auto [r, c] = queue.front();
        queue.pop_front();
        const RangeCell& cell = img.cell(r, c);
        cluster.point_indices.insert(cluster.point_indices.end(),
                                     cell.point_indices.begin(),
                                     cell.point_indices.end());

        const int drs[4] = {-1, 1, 0, 0};
        const int dcs[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          int nr = r + drs[k];
          int nc = c + dcs[k];
          if (nr < 0 || nr >= rows) continue;
          if (nc < 0 || nc >= cols) {
            if (!wrap) continue;
            nc = (nc + cols) % cols;
          }
          if (!eligible[cell_id(nr, nc)] || label[cell_id(nr, nc)] >= 0) {
            continue;
          }
          const double phi = (k < 2) ? img.v_res() : img.h_res();
          if (!cells_connected(cell, img.cell(nr, nc), phi,
                               cfg.beta_thresh_rad)) {
            continue;
          }
          label[cell_id(nr, nc)] = id;
          queue.emplace_back(nr, nc);
        }
      }
    }
  }

  std::vector<Cluster> kept;
  for (Cluster& cluster : clusters) {
    if (static_cast<int>(cluster.point_indices.size()) <
        cfg.min_cluster_points) {
      continue;
    }
    std::sort(cluster.point_indices.begin(), cluster.point_indices.end());

    Vec3 centroid = Vec3::Zero();
    for (int idx : cluster.point_indices) centroid += cloud.points[idx];
    centroid /= static_cast<double>(cluster.point_indices.size());
    cluster.centroid = centroid;

    Mat3 cov = Mat3::Zero();
    for (int idx : cluster.point_indices) {
      const Vec3 d = cloud.points[idx] - centroid;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(cluster.point_indices.size());
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    // Eigen sorts ascending; report descending.
    Mat3 axes;
    axes.col(0) = eig.eigenvectors().col(2);
    axes.col(1) = eig.eigenvectors().col(1);
    axes.col(2) = eig.eigenvectors().col(0);
    Vec3 extent = Vec3::Zero();
    for (int idx : cluster.point_indices) {
      const Vec3 d = axes.transpose() * (cloud.points[idx] - centroid);
      extent = extent.cwiseMax(d.cwiseAbs());
    }
    cluster.extent = extent;
    kept.push_back(std::move(cluster));
  }

  std::sort(kept.begin(), kept.end(), [](const Cluster& a, const Cluster& b) {
    return a.point_indices.front() < b.point_indices.front();
  });
  return kept;
}

}  // namespace boardcal
