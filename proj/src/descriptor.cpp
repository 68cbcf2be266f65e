#include "boardcal/descriptor.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>

#include "boardcal/error.hpp"
#include "boardcal/kernels.hpp"

namespace boardcal {

void DescriptorConfig::validate() const {
  if (l_bins < 2 || t_bins < 2 || azimuth_planes < 2 || elevation_planes < 2) {
    raise(ErrorCode::InvalidConfig, "descriptor bin/plane counts must be >= 2");
  }
  if (radius_mode == RadiusMode::Fixed && !(fixed_radius_m > 0.0)) {
    raise(ErrorCode::InvalidConfig, "fixed descriptor radius must be positive");
  }
  if (rsvd_oversample < 1 || rsvd_power_iters < 0) {
    raise(ErrorCode::InvalidConfig, "invalid rSVD parameters");
  }
}

std::vector<Vec3> pca_align(std::span<const Vec3> points) {
  if (points.size() < 3) {
    raise(ErrorCode::DegenerateCluster,
          "need at least 3 points for principal-axis alignment");
  }
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 evals = eig.eigenvalues();  // ascending
  if (evals(1) <= 1e-12 * std::max(evals(2), 1e-300)) {
    raise(ErrorCode::DegenerateCluster, "cluster is rank-deficient (collinear)");
  }

  Mat3 axes;
  axes.col(0) = eig.eigenvectors().col(2);
  axes.col(1) = eig.eigenvectors().col(1);
  axes.col(2) = eig.eigenvectors().col(0);

  // Sign disambiguation per axis: positive skewness of the projections wins;
  // symmetric distributions fall back to the sensor +x/+y/+z hemisphere.
  for (int a = 0; a < 3; ++a) {
    double m2 = 0.0, m3 = 0.0;
    for (const Vec3& p : points) {
      const double v = axes.col(a).dot(p - centroid);
      m2 += v * v;
      m3 += v * v * v;
    }
    m2 /= static_cast<double>(points.size());
    m3 /= static_cast<double>(points.size());
    const double tie_eps = 1e-6 * std::pow(std::max(m2, 1e-300), 1.5);
    bool flip;
    if (std::abs(m3) > tie_eps) {
      flip = m3 < 0.0;
    } else {
      const Vec3& ax = axes.col(a);
      if (std::abs(ax.x()) > 1e-9) {
        flip = ax.x() < 0.0;
      } else if (std::abs(ax.y()) > 1e-9) {
        flip = ax.y() < 0.0;
      } else {
        flip = ax.z() < 0.0;
      }
    }
    if (flip) axes.col(a) = -axes.col(a);
  }

  std::vector<Vec3> aligned;
  aligned.reserve(points.size());
  for (const Vec3& p : points) {
    aligned.push_back(axes.transpose() * (p - centroid));
  }
  return aligned;
}

Eigen::MatrixXd m2dp_feature_matrix(std::span<const Vec3> aligned,
                                    const DescriptorConfig& cfg) {
  cfg.validate();
  if (aligned.empty()) {
    raise(ErrorCode::DegenerateCluster, "no points to histogram");
  }
  const int rows = cfg.feature_rows();
  const int cols = cfg.feature_cols();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);

  double max_radius = cfg.fixed_radius_m;
  if (cfg.radius_mode == DescriptorConfig::RadiusMode::Adaptive) {
    max_radius = 0.0;
    for (const Vec3& p : aligned) max_radius = std::max(max_radius, p.norm());
    if (max_radius <= 1e-12) max_radius = 1.0;
  }

  // Ring boundaries are sqrt-spaced for equal projected area.
  std::vector<double> ring_r2(cfg.l_bins);
  for (int k = 0; k < cfg.l_bins; ++k) {
    const double frac = static_cast<double>(k + 1) / cfg.l_bins;
    ring_r2[k] = max_radius * max_radius * frac;
  }

  const double sector_width = 2.0 * kPi / cfg.t_bins;
  for (int i = 0; i < cfg.azimuth_planes; ++i) {
    const double az = kPi * i / cfg.azimuth_planes;
    for (int j = 0; j < cfg.elevation_planes; ++j) {
      const double el = (kPi / 2.0) * j / cfg.elevation_planes;
      const Vec3 n(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                   std::sin(el));
      Vec3 u = Vec3::UnitX() - n.x() * n;
      if (u.norm() < 1e-6) u = Vec3::UnitY() - n.y() * n;
      u.normalize();
      const Vec3 v = n.cross(u);

      const int row = i * cfg.elevation_planes + j;
      for (const Vec3& p : aligned) {
        const double pu = p.dot(u);
        const double pv = p.dot(v);
        const double r2 = pu * pu + pv * pv;
        int ring = 0;
        while (ring < cfg.l_bins - 1 && r2 >= ring_r2[ring]) ++ring;
        double theta = std::atan2(pv, pu);  // [-pi, pi]
        int sector = static_cast<int>((theta + kPi) / sector_width);
        sector = std::clamp(sector, 0, cfg.t_bins - 1);
        a(row, ring * cfg.t_bins + sector) += 1.0;
      }
      const double sum = a.row(row).sum();
      if (sum > 0.0) a.row(row) /= sum;
    }
  }
  return a;
}

Rank1Svd rsvd_rank1(const Eigen::MatrixXd& a, int oversample, int power_iters,
                    uint64_t seed) {
  if (a.size() == 0 || a.norm() <= 0.0) {
    raise(ErrorCode::ZeroMatrix, "matrix has no energy to decompose");
  }
  const int k = 1 + oversample;
  const int n = static_cast<int>(a.cols());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd omega(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) omega(i, j) = gauss(rng);

  Eigen::MatrixXd y = a * omega;
  for (int q = 0; q < power_iters; ++q) {
    y = Eigen::HouseholderQR<Eigen::MatrixXd>(y).householderQ() *
        Eigen::MatrixXd::Identity(y.rows(), k);
    Eigen::MatrixXd z = a.transpose() * y;
    z = Eigen::HouseholderQR<Eigen::MatrixXd>(z).householderQ() *
        Eigen::MatrixXd::Identity(z.rows(), k);
    y = a * z;
  }
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(y).householderQ() *
                      Eigen::MatrixXd::Identity(y.rows(), k);

  Eigen::MatrixXd b = q.transpose() * a;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  Rank1Svd out;
  out.u = q * svd.matrixU().col(0);
  out.v = svd.matrixV().col(0);
  out.sigma = svd.singularValues()(0);
  return out;
}

namespace {

void fix_sign_largest_positive(Eigen::VectorXd& v) {
  int idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v(idx) < 0.0) v = -v;
}

std::vector<Vec3> stride_subsample(std::span<const Vec3> points,
                                   int max_points) {
  std::vector<Vec3> out;
  if (max_points <= 0 || static_cast<int>(points.size()) <= max_points) {
    out.assign(points.begin(), points.end());
    return out;
  }
  const double stride =
      static_cast<double>(points.size()) / static_cast<double>(max_points);
  out.reserve(max_points);
  for (int i = 0; i < max_points; ++i) {
    out.push_back(points[static_cast<std::size_t>(i * stride)]);
  }
  return out;
}

}  // namespace

Descriptor compute_m2dp(std::span<const Vec3> aligned,
                        const DescriptorConfig& cfg) {
  const Eigen::MatrixXd a = m2dp_feature_matrix(aligned, cfg);
  Rank1Svd svd =
      rsvd_rank1(a, cfg.rsvd_oversample, cfg.rsvd_power_iters, cfg.rsvd_seed);
  fix_sign_largest_positive(svd.u);
  fix_sign_largest_positive(svd.v);
  Descriptor d;
  d.values.resize(svd.u.size() + svd.v.size());
  d.values << svd.u, svd.v;
  return d;
}

Descriptor describe_cluster(std::span<const Vec3> points,
                            const DescriptorConfig& cfg) {
  const std::vector<Vec3> sampled = stride_subsample(points, cfg.max_points);
  const std::vector<Vec3> aligned = pca_align(sampled);
  return compute_m2dp(aligned, cfg);
}

double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    raise(ErrorCode::InvalidArgument, "correlation inputs differ in length");
  }
  if (x.size() < 2) {
    raise(ErrorCode::InvalidArgument, "correlation needs at least 2 samples");
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= static_cast<double>(x.size());
  mean_y /= static_cast<double>(x.size());

  const kernels::CenteredSums s = kernels::centered_sums(x, y, mean_x, mean_y);
  if (s.sxx <= 0.0 || s.syy <= 0.0) {
    raise(ErrorCode::ConstantVector, "zero-variance input to correlation");
  }
  return s.sxy / std::sqrt(s.sxx * s.syy);
}

std::vector<MatchResult> match_descriptors(
    const std::vector<Descriptor>& cluster_descriptors,
    const std::vector<Descriptor>& references, double threshold) {
  if (references.empty()) {
    raise(ErrorCode::InvalidArgument, "reference descriptor set is empty");
  }
  std::vector<MatchResult> results;
  results.reserve(cluster_descriptors.size());
  for (std::size_t i = 0; i < cluster_descriptors.size(); ++i) {
    MatchResult r;
    r.cluster_id = static_cast<int>(i);
    double best = 0.0;  // negative correlation is neglected
    for (const Descriptor& ref : references) {
      best = std::max(best, pcc(cluster_descriptors[i], ref));
    }
    r.score = best;
    r.accepted = r.score >= threshold;
    results.push_back(r);
  }
  return results;
}

std::vector<MatchResult> match_clusters(
    const std::vector<std::vector<Vec3>>& clusters,
    const std::vector<Descriptor>& references, double threshold,
    const DescriptorConfig& cfg) {
  if (references.empty()) {
    raise(ErrorCode::InvalidArgument, "reference descriptor set is empty");
  }
  std::vector<MatchResult> results;
  results.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    MatchResult r;
    r.cluster_id = static_cast<int>(i);
    try {
      const Descriptor d = describe_cluster(clusters[i], cfg);
      double best = 0.0;
      for (const Descriptor& ref : references) {
        best = std::max(best, pcc(d, ref));
      }
      r.score = best;
    } catch (const Error&) {
      r.score = 0.0;  // degenerate clusters can never be boards
    }
    r.accepted = r.score >= threshold;
    results.push_back(r);
  }
  return results;
}

std::vector<Vec3> synthetic_board_grid(double side_m, int per_side) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(per_side) * per_side);
  for (int i = 0; i < per_side; ++i) {
    for (int j = 0; j < per_side; ++j) {
      const double x = side_m * (static_cast<double>(i) / (per_side - 1) - 0.5);
      const double y = side_m * (static_cast<double>(j) / (per_side - 1) - 0.5);
      pts.emplace_back(x, y, 0.0);
    }
  }
  return pts;
}

std::vector<Vec3> synthetic_board_scanlines(double side_m, double range_m,
                                            double h_res_rad,
                                            double v_res_rad) {
  const double row_spacing = std::max(range_m * v_res_rad, 1e-4);
  const double col_spacing = std::max(range_m * h_res_rad, 1e-4);
  const int rows = std::max(2, static_cast<int>(side_m / row_spacing) + 1);
  const int cols = std::max(2, static_cast<int>(side_m / col_spacing) + 1);
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    const double y = -side_m / 2.0 + i * row_spacing;
    for (int j = 0; j < cols; ++j) {
      const double x = -side_m / 2.0 + j * col_spacing;
      if (std::abs(x) > side_m / 2.0 || std::abs(y) > side_m / 2.0) continue;
      pts.emplace_back(x, y, 0.0);
    }
  }
  return pts;
}

std::vector<Descriptor> build_references(double side_m,
                                         std::span<const double> ranges_m,
                                         std::span<const int> densities,
                                         double h_res_rad, double v_res_rad,
                                         const DescriptorConfig& cfg) {
  if (!(side_m > 0.0)) {
    raise(ErrorCode::InvalidArgument, "board side must be positive");
  }
  std::vector<Descriptor> refs;
  for (int d : densities) {
    if (d < 2) continue;
    refs.push_back(describe_cluster(synthetic_board_grid(side_m, d), cfg));
  }
  for (double r : ranges_m) {
    if (!(r > 0.0)) continue;
    const auto pts =
        synthetic_board_scanlines(side_m, r, h_res_rad, v_res_rad);
    if (pts.size() < 16) continue;
    refs.push_back(describe_cluster(pts, cfg));
  }
  return refs;
}

}  // namespace boardcal
