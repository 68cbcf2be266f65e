#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "boardcal/geom.hpp"

namespace boardcal {

struct DescriptorConfig {
  int l_bins = 8;           // concentric rings per plane
  int t_bins = 16;          // angular sectors per plane
  int azimuth_planes = 4;   // projection plane azimuth count
  int elevation_planes = 16;

  enum class RadiusMode { Adaptive, Fixed };
  RadiusMode radius_mode = RadiusMode::Adaptive;
  double fixed_radius_m = 0.6;

  int rsvd_oversample = 5;
  int rsvd_power_iters = 2;
  uint64_t rsvd_seed = 0x5eedULL;

  /// Deterministic index-stride cap on cluster size before extraction
  /// (0 disables).
  int max_points = 1200;

  int feature_rows() const { return azimuth_planes * elevation_planes; }
  int feature_cols() const { return l_bins * t_bins; }
  int descriptor_size() const { return feature_rows() + feature_cols(); }
  void validate() const;
};

/// Concatenation of the leading left and right singular vectors of the
/// multi-plane projection histogram matrix; norm is sqrt(2) by construction.
struct Descriptor {
  Eigen::VectorXd values;
};

/// Centers the cluster and rotates it into its principal-axis frame.
/// Axis order: descending eigenvalue. Axis signs: third central moment of the
/// projections >= 0; near-zero moments fall back to the +x (then +y, +z)
/// hemisphere of the sensor frame. Throws DegenerateCluster for fewer than
/// 3 points or rank < 2 geometry.
std::vector<Vec3> pca_align(std::span<const Vec3> points);

/// Multi-plane ring/sector occupancy histogram of PCA-aligned points; one row
/// per projection plane, rows normalized to sum 1.
Eigen::MatrixXd m2dp_feature_matrix(std::span<const Vec3> aligned,
                                    const DescriptorConfig& cfg);

struct Rank1Svd {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double sigma = 0.0;
};

/// Randomized range-finder approximation of the leading singular triplet.
/// Throws ZeroMatrix on an all-zero input.
Rank1Svd rsvd_rank1(const Eigen::MatrixXd& a, int oversample, int power_iters,
                    uint64_t seed);

Descriptor compute_m2dp(std::span<const Vec3> aligned,
                        const DescriptorConfig& cfg);

/// pca_align + stride subsample + compute_m2dp.
Descriptor describe_cluster(std::span<const Vec3> points,
                            const DescriptorConfig& cfg);

/// Pearson correlation coefficient. Throws ConstantVector when either input
/// has zero variance, InvalidArgument on length mismatch or length < 2.
double pcc(std::span<const double> x, std::span<const double> y);

inline double pcc(const Descriptor& a, const Descriptor& b) {
  return pcc(std::span<const double>(a.values.data(), a.values.size()),
             std::span<const double>(b.values.data(), b.values.size()));
}

struct MatchResult {
  int cluster_id = -1;
  double score = 0.0;  // max over references, negative correlation clamped to 0
  bool accepted = false;
};

/// Scores each cluster's points against the reference set. Degenerate
/// clusters score 0 and are rejected rather than raising.
std::vector<MatchResult> match_clusters(
    const std::vector<std::vector<Vec3>>& clusters,
    const std::vector<Descriptor>& references, double threshold,
    const DescriptorConfig& cfg);

std::vector<MatchResult> match_descriptors(
    const std::vector<Descriptor>& cluster_descriptors,
    const std::vector<Descriptor>& references, double threshold);

/// Reference descriptors from synthetic square-board clusters: one uniform
/// grid per density, plus one scan-line pattern per range using the given
/// angular resolutions.
std::vector<Descriptor> build_references(double side_m,
                                         std::span<const double> ranges_m,
                                         std::span<const int> densities,
                                         double h_res_rad, double v_res_rad,
                                         const DescriptorConfig& cfg);

/// Synthetic board clusters backing build_references; exposed for tests and
/// reference-file generation.
std::vector<Vec3> synthetic_board_grid(double side_m, int per_side);
std::vector<Vec3> synthetic_board_scanlines(double side_m, double range_m,
                                            double h_res_rad, double v_res_rad);

}  // namespace boardcal
