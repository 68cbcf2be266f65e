#include <cmath>

#include "boardcal/kernels.hpp"

namespace boardcal::kernels {

PointBlock::PointBlock(std::span<const Vec3> pts) {
  x.reserve(pts.size());
  y.reserve(pts.size());
  z.reserve(pts.size());
  for (const Vec3& p : pts) push_back(p);
}

void PointBlock::push_back(const Vec3& p) {
  x.push_back(p.x());
  y.push_back(p.y());
  z.push_back(p.z());
}

TransformCoeffs to_coeffs(const RigidTransform& tf) {
  TransformCoeffs c;
  const Mat3& r = tf.rotation();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c.r[3 * i + j] = r(i, j);
  for (int i = 0; i < 3; ++i) c.t[i] = tf.translation()(i);
  return c;
}

namespace {

inline double band_cost(double v, double band) {
  const double a = std::abs(v);
  return a > band ? a - band : 0.0;
}

double box_cost_sum_scalar(const TransformCoeffs& tf, const double* px,
                           const double* py, const double* pz, std::size_t n,
                           double half_side, double alpha) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = tf.r[0] * px[i] + tf.r[1] * py[i] + tf.r[2] * pz[i] + tf.t[0];
    const double y = tf.r[3] * px[i] + tf.r[4] * py[i] + tf.r[5] * pz[i] + tf.t[1];
    const double z = tf.r[6] * px[i] + tf.r[7] * py[i] + tf.r[8] * pz[i] + tf.t[2];
    acc += band_cost(x, half_side) + band_cost(y, half_side) + band_cost(z, alpha);
  }
  return acc;
}

CenteredSums centered_sums_scalar(const double* x, const double* y,
                                  std::size_t n, double mean_x, double mean_y) {
  CenteredSums s;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    s.sxx += dx * dx;
    s.syy += dy * dy;
    s.sxy += dx * dy;
  }
  return s;
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend{"scalar", &box_cost_sum_scalar,
                               &centered_sums_scalar};
  return backend;
}

}  // namespace boardcal::kernels
