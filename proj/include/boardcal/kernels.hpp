#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "boardcal/geom.hpp"

namespace boardcal::kernels {

/// Structure-of-arrays point storage for the arithmetic inner loops.
struct PointBlock {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;

  PointBlock() = default;
  explicit PointBlock(std::span<const Vec3> pts);

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  void push_back(const Vec3& p);
  Vec3 point(std::size_t i) const { return {x[i], y[i], z[i]}; }
};

/// Row-major 3x3 rotation plus translation, flattened for the kernels.
struct TransformCoeffs {
  double r[9];
  double t[3];
};

TransformCoeffs to_coeffs(const RigidTransform& tf);

/// Sum over all points of the banded absolute-deviation cost applied per axis
/// after transforming each point: band half-widths (half_side, half_side,
/// alpha) for (x, y, z).
using BoxCostSumFn = double (*)(const TransformCoeffs&, const double* px,
                                const double* py, const double* pz,
                                std::size_t n, double half_side, double alpha);

/// Accumulated centered second-order statistics for Pearson correlation:
/// {sum (x-mx)^2, sum (y-my)^2, sum (x-mx)(y-my)} given precomputed means.
struct CenteredSums {
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
};

using CenteredSumsFn = CenteredSums (*)(const double* x, const double* y,
                                        std::size_t n, double mean_x,
                                        double mean_y);

/// Backend selected at runtime from CPU capabilities; BOARDCAL_FORCE_SCALAR=1
/// pins the scalar reference path.
struct Backend {
  const char* name;
  BoxCostSumFn box_cost_sum;
  CenteredSumsFn centered_sums;
};

const Backend& active_backend();
const Backend& scalar_backend();
#if defined(__x86_64__) || defined(_M_X64)
bool avx2_available();
const Backend& avx2_backend();
#endif

inline double box_cost_sum(const TransformCoeffs& tf, const PointBlock& pts,
                           double half_side, double alpha) {
  return active_backend().box_cost_sum(tf, pts.x.data(), pts.y.data(),
                                       pts.z.data(), pts.size(), half_side,
                                       alpha);
}

inline CenteredSums centered_sums(std::span<const double> x,
                                  std::span<const double> y, double mean_x,
                                  double mean_y) {
  return active_backend().centered_sums(x.data(), y.data(), x.size(), mean_x,
                                        mean_y);
}

}  // namespace boardcal::kernels
