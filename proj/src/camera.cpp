#include "boardcal/camera.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "boardcal/error.hpp"

namespace boardcal {

Vec3 BoardModel::vertex(int j) const {
  const double h = side_m / 2.0;
  switch (j) {
    case 0: return {0.0, 0.0, 0.0};
    case 1: return {-h, h, 0.0};   // top-left
    case 2: return {h, h, 0.0};    // top-right
    case 3: return {h, -h, 0.0};   // bottom-right
    case 4: return {-h, -h, 0.0};  // bottom-left
    default:
      raise(ErrorCode::InvalidArgument, "board vertex index out of range");
  }
}

std::array<Vec3, 4> BoardModel::corners() const {
  return {vertex(1), vertex(2), vertex(3), vertex(4)};
}

void BoardModel::validate() const {
  if (!(side_m > 0.0) || !(tag_m > 0.0) || tag_m > side_m) {
    raise(ErrorCode::InvalidConfig, "board/tag side lengths are inconsistent");
  }
}

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rodrigues(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(w);
  const Vec3 axis = w / theta;
  const Mat3 k = skew(axis);
  return Mat3::Identity() + std::sin(theta) * k +
         (1.0 - std::cos(theta)) * k * k;
}

std::optional<double> reprojection_cost(std::span<const Vec3> points,
                                        std::span<const Vec2> pixels,
                                        const PinholeCamera& cam,
                                        const RigidTransform& pose) {
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 p = pose.apply(points[i]);
    if (p.z() <= 1e-6) return std::nullopt;
    const Vec2 px(cam.fx * p.x() / p.z() + cam.cx,
                  cam.fy * p.y() / p.z() + cam.cy);
    sum += (px - pixels[i]).squaredNorm();
  }
  return sum;
}

bool reprojection_residuals(std::span<const Vec3> points,
                            std::span<const Vec2> pixels,
                            const PinholeCamera& cam,
                            const RigidTransform& pose, Eigen::VectorXd& r) {
  r.resize(2 * static_cast<int>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 p = pose.apply(points[i]);
    if (p.z() <= 1e-6) return false;
    r(2 * i) = cam.fx * p.x() / p.z() + cam.cx - pixels[i].x();
    r(2 * i + 1) = cam.fy * p.y() / p.z() + cam.cy - pixels[i].y();
  }
  return true;
}

RigidTransform perturb_pose(const RigidTransform& pose,
                            const Eigen::Matrix<double, 6, 1>& delta) {
  const Mat3 dr = rodrigues(delta.head<3>());
  return RigidTransform(nearest_rotation(dr * pose.rotation()),
                        pose.translation() + delta.tail<3>());
}

}  // namespace

PnpResult refine_pose_reprojection(std::span<const Vec3> points,
                                   std::span<const Vec2> pixels,
                                   const PinholeCamera& cam,
                                   const RigidTransform& init, int max_iters) {
  RigidTransform pose = init;
  auto cost0 = reprojection_cost(points, pixels, cam, pose);
  double cost = cost0.value_or(std::numeric_limits<double>::infinity());

  double mu = 1e-3;
  Eigen::VectorXd r;
  const double eps = 1e-6;
  for (int iter = 0; iter < max_iters; ++iter) {
    if (!reprojection_residuals(points, pixels, cam, pose, r)) break;

    Eigen::MatrixXd jac(r.size(), 6);
    for (int k = 0; k < 6; ++k) {
      Eigen::Matrix<double, 6, 1> d = Eigen::Matrix<double, 6, 1>::Zero();
      d(k) = eps;
      Eigen::VectorXd rp, rm;
      if (!reprojection_residuals(points, pixels, cam, perturb_pose(pose, d),
                                  rp) ||
          !reprojection_residuals(points, pixels, cam, perturb_pose(pose, -d),
                                  rm)) {
        jac.col(k).setZero();
        continue;
      }
      jac.col(k) = (rp - rm) / (2.0 * eps);
    }

    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> jtr = jac.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::Matrix<double, 6, 6> h = jtj;
      h.diagonal() += mu * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 6, 1> delta = h.ldlt().solve(-jtr);
      const RigidTransform candidate = perturb_pose(pose, delta);
      const auto c = reprojection_cost(points, pixels, cam, candidate);
      if (c.has_value() && *c < cost) {
        pose = candidate;
        cost = *c;
        mu = std::max(mu * 0.5, 1e-12);
        improved = true;
        break;
      }
      mu *= 4.0;
    }
    if (!improved || jtr.norm() < 1e-14) break;
  }

  PnpResult out;
  out.board_to_camera = pose;
  out.rms_px = std::sqrt(cost / static_cast<double>(points.size()));
  return out;
}

namespace {

/// Direct linear transform for the board-plane homography in normalized
/// camera coordinates.
Mat3 planar_homography(const std::array<Vec2, 4>& corners,
                       const std::array<Vec3, 4>& board,
                       const PinholeCamera& cam) {
  Eigen::Matrix<double, 8, 9> a;
  for (int i = 0; i < 4; ++i) {
    const double x = board[i].x();
    const double y = board[i].y();
    const double u = (corners[i].x() - cam.cx) / cam.fx;
    const double v = (corners[i].y() - cam.cy) / cam.fy;
    a.row(2 * i) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  if (svd.singularValues()(6) < 1e-12) {
    raise(ErrorCode::DegenerateConfiguration,
          "corner configuration does not determine a homography");
  }
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 hm;
  hm << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return hm;
}

RigidTransform pose_from_homography(const Mat3& h) {
  Vec3 a1 = h.col(0);
  Vec3 a2 = h.col(1);
  Vec3 a3 = h.col(2);
  const double scale = 2.0 / (a1.norm() + a2.norm());
  Vec3 r1 = a1 * scale;
  Vec3 r2 = a2 * scale;
  Vec3 t = a3 * scale;
  if (t.z() < 0.0) {
    r1 = -r1;
    r2 = -r2;
    t = -t;
  }
  Mat3 r;
  r.col(0) = r1;
  r.col(1) = r2;
  r.col(2) = r1.cross(r2);
  return RigidTransform(nearest_rotation(r), t);
}

/// Second local minimum of the planar-pose problem: the board normal is
/// reflected about the viewing direction and the in-plane axes re-seeded.
RigidTransform flipped_planar_pose(const RigidTransform& pose) {
  const Vec3 view = pose.translation().normalized();
  const Vec3 n = pose.rotation().col(2);
  const Vec3 n_alt = (2.0 * n.dot(view) * view - n).normalized();
  Vec3 axis = n.cross(n_alt);
  const double s = axis.norm();
  const double c = std::clamp(n.dot(n_alt), -1.0, 1.0);
  if (s < 1e-9) return pose;
  axis /= s;
  const Mat3 rot = rodrigues(axis * std::atan2(s, c));
  return RigidTransform(nearest_rotation(rot * pose.rotation()),
                        pose.translation());
}

void check_corner_degeneracy(const std::array<Vec2, 4>& corners) {
  double scale = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      scale = std::max(scale, (corners[i] - corners[j]).norm());
    }
  }
  if (scale < 1e-9) {
    raise(ErrorCode::DegenerateConfiguration, "corners coincide");
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        const Vec2 e1 = corners[j] - corners[i];
        const Vec2 e2 = corners[k] - corners[i];
        const double area = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
        if (area < 1e-6 * scale * scale) {
          raise(ErrorCode::DegenerateConfiguration,
                "three detected corners are collinear");
        }
      }
    }
  }
}

}  // namespace

PnpResult solve_planar_pnp(const std::array<Vec2, 4>& corners,
                           const BoardModel& board, const PinholeCamera& cam,
                           double max_rms_px) {
  board.validate();
  cam.validate();
  check_corner_degeneracy(corners);

  const std::array<Vec3, 4> object = board.corners();
  const Mat3 h = planar_homography(corners, object, cam);
  const RigidTransform seed = pose_from_homography(h);

  const std::span<const Vec3> pts(object.data(), object.size());
  const std::span<const Vec2> pix(corners.data(), corners.size());

  PnpResult best = refine_pose_reprojection(pts, pix, cam, seed);
  const RigidTransform alt_seed = flipped_planar_pose(best.board_to_camera);
  PnpResult alt = refine_pose_reprojection(pts, pix, cam, alt_seed);

  const double tie_band = 1e-9 + 1e-6 * std::max(best.rms_px, alt.rms_px);
  if (std::abs(best.rms_px - alt.rms_px) <= tie_band) {
    // Tie: prefer the solution whose normal faces the camera.
    auto facing = [](const PnpResult& r) {
      return r.board_to_camera.rotation().col(2).dot(
                 r.board_to_camera.translation()) < 0.0;
    };
    if (!facing(best) && facing(alt)) best = alt;
  } else if (alt.rms_px < best.rms_px) {
    best = alt;
  }

  if (!(best.rms_px <= max_rms_px)) {
    raise(ErrorCode::DivergedRefinement,
          "planar pose refinement residual exceeds threshold");
  }
  return best;
}

namespace {

std::vector<double> solve_real_polynomial(std::vector<double> coeffs) {
  // coeffs: highest degree first. Trim leading near-zeros.
  const double lead_scale = [&] {
    double m = 0.0;
    for (double c : coeffs) m = std::max(m, std::abs(c));
    return m;
  }();
  std::vector<double> roots;
  if (lead_scale == 0.0) return roots;
  std::size_t start = 0;
  while (start + 1 < coeffs.size() &&
         std::abs(coeffs[start]) < 1e-12 * lead_scale) {
    ++start;
  }
  const std::size_t degree = coeffs.size() - start - 1;
  if (degree == 0) return roots;
  Eigen::MatrixXd companion =
      Eigen::MatrixXd::Zero(static_cast<int>(degree), static_cast<int>(degree));
  for (std::size_t i = 0; i < degree; ++i) {
    companion(0, static_cast<int>(i)) =
        -coeffs[start + 1 + i] / coeffs[start];
  }
  for (std::size_t i = 1; i < degree; ++i) {
    companion(static_cast<int>(i), static_cast<int>(i - 1)) = 1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    const auto& ev = eig.eigenvalues()(i);
    if (std::abs(ev.imag()) < 1e-8 * std::max(1.0, std::abs(ev.real()))) {
      roots.push_back(ev.real());
    }
  }
  return roots;
}

}  // namespace

std::vector<RigidTransform> solve_p3p(const std::array<Vec3, 3>& points,
                                      const std::array<Vec2, 3>& pixels,
                                      const PinholeCamera& cam) {
  std::vector<RigidTransform> poses;

  std::array<Vec3, 3> rays;
  for (int i = 0; i < 3; ++i) {
    rays[i] = Vec3((pixels[i].x() - cam.cx) / cam.fx,
                   (pixels[i].y() - cam.cy) / cam.fy, 1.0)
                  .normalized();
  }

  const double a = (points[1] - points[2]).norm();
  const double b = (points[0] - points[2]).norm();
  const double c = (points[0] - points[1]).norm();
  if (a < 1e-9 || b < 1e-9 || c < 1e-9) return poses;

  const double cos_alpha = rays[1].dot(rays[2]);
  const double cos_beta = rays[0].dot(rays[2]);
  const double cos_gamma = rays[0].dot(rays[1]);

  const double a2 = a * a, b2 = b * b, c2 = c * c;
  const double acb = (a2 - c2) / b2;

  // Grunert's quartic in v = s3/s1.
  const double a4 = (acb - 1.0) * (acb - 1.0) -
                    4.0 * (c2 / b2) * cos_alpha * cos_alpha;
  const double a3 =
      4.0 * (acb * (1.0 - acb) * cos_beta -
             (1.0 - (a2 + c2) / b2) * cos_alpha * cos_gamma +
             2.0 * (c2 / b2) * cos_alpha * cos_alpha * cos_beta);
  const double a2c =
      2.0 * (acb * acb - 1.0 + 2.0 * acb * acb * cos_beta * cos_beta +
             2.0 * ((b2 - c2) / b2) * cos_alpha * cos_alpha -
             4.0 * ((a2 + c2) / b2) * cos_alpha * cos_beta * cos_gamma +
             2.0 * ((b2 - a2) / b2) * cos_gamma * cos_gamma);
  const double a1 =
      4.0 * (-acb * (1.0 + acb) * cos_beta +
             2.0 * (a2 / b2) * cos_gamma * cos_gamma * cos_beta -
             (1.0 - (a2 + c2) / b2) * cos_alpha * cos_gamma);
  const double a0 = (1.0 + acb) * (1.0 + acb) -
                    4.0 * (a2 / b2) * cos_gamma * cos_gamma;

  const std::vector<double> vs =
      solve_real_polynomial({a4, a3, a2c, a1, a0});

  Eigen::Matrix3d src;
  for (int i = 0; i < 3; ++i) src.col(i) = points[i];

  for (double v : vs) {
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    const double denom = 2.0 * (cos_gamma - v * cos_alpha);
    double u;
    if (std::abs(denom) > 1e-12) {
      u = (acb * (1.0 + v * v - 2.0 * v * cos_beta) + 1.0 - v * v) / denom;
    } else {
      // Fall back to the quadratic relating u and v directly.
      const double rhs = (c2 / b2) * (1.0 + v * v - 2.0 * v * cos_beta);
      const double disc = cos_gamma * cos_gamma - (1.0 - rhs);
      if (disc < 0.0) continue;
      u = cos_gamma + std::sqrt(disc);
    }
    if (!(u > 0.0) || !std::isfinite(u)) continue;

    const double s1_sq = b2 / (1.0 + v * v - 2.0 * v * cos_beta);
    if (!(s1_sq > 0.0)) continue;
    const double s1 = std::sqrt(s1_sq);
    const double s2 = u * s1;
    const double s3 = v * s1;

    Eigen::Matrix3d dst;
    dst.col(0) = s1 * rays[0];
    dst.col(1) = s2 * rays[1];
    dst.col(2) = s3 * rays[2];

    const Eigen::Matrix4d tf = Eigen::umeyama(src, dst, false);
    const Mat3 r = tf.topLeftCorner<3, 3>();
    const Vec3 t = tf.topRightCorner<3, 1>();
    if (!r.allFinite() || !t.allFinite()) continue;
    try {
      poses.emplace_back(nearest_rotation(r), t);
    } catch (const Error&) {
      continue;
    }
  }
  return poses;
}

RansacPnpResult ransac_pnp(std::span<const Vec3> points,
                           std::span<const Vec2> pixels,
                           const PinholeCamera& cam,
                           const RansacPnpConfig& cfg) {
  cam.validate();
  const std::size_t n = points.size();
  if (n != pixels.size()) {
    raise(ErrorCode::InvalidArgument, "correspondence lists differ in length");
  }
  if (n < 4) {
    raise(ErrorCode::TooFewInliers,
          "need at least 4 correspondences for robust pose estimation");
  }

  std::mt19937_64 rng(cfg.seed);
  auto pick_distinct = [&](std::array<std::size_t, 4>& idx) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (auto& v : idx) v = dist(rng);
      std::array<std::size_t, 4> s = idx;
      std::sort(s.begin(), s.end());
      if (std::adjacent_find(s.begin(), s.end()) == s.end()) return true;
    }
    return false;
  };

  auto count_inliers = [&](const RigidTransform& pose,
                           std::vector<uint8_t>* mask) {
    int count = 0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 p = pose.apply(points[i]);
      bool inlier = false;
      if (p.z() > 1e-6) {
        const Vec2 px(cam.fx * p.x() / p.z() + cam.cx,
                      cam.fy * p.y() / p.z() + cam.cy);
        const double err = (px - pixels[i]).norm();
        if (err < cfg.inlier_px) {
          inlier = true;
          ++count;
          sq_sum += err * err;
        }
      }
      if (mask) (*mask)[i] = inlier ? 1 : 0;
    }
    return std::make_pair(count, count > 0 ? std::sqrt(sq_sum / count) : 0.0);
  };

  int best_count = 0;
  double best_rms = std::numeric_limits<double>::infinity();
  RigidTransform best_pose;
  bool have_best = false;

  int required_iters = cfg.max_iterations;
  for (int iter = 0; iter < std::min(required_iters, cfg.max_iterations);
       ++iter) {
    std::array<std::size_t, 4> idx{};
    if (!pick_distinct(idx)) break;
    const std::array<Vec3, 3> tri_pts{points[idx[0]], points[idx[1]],
                                      points[idx[2]]};
    const std::array<Vec2, 3> tri_pix{pixels[idx[0]], pixels[idx[1]],
                                      pixels[idx[2]]};
    for (const RigidTransform& pose : solve_p3p(tri_pts, tri_pix, cam)) {
      // Disambiguate with the fourth sample before full scoring.
      const Vec3 p4 = pose.apply(points[idx[3]]);
      if (p4.z() <= 1e-6) continue;
      const Vec2 px4(cam.fx * p4.x() / p4.z() + cam.cx,
                     cam.fy * p4.y() / p4.z() + cam.cy);
      if ((px4 - pixels[idx[3]]).norm() > 4.0 * cfg.inlier_px) continue;

      const auto [count, rms] = count_inliers(pose, nullptr);
      if (count > best_count || (count == best_count && rms < best_rms)) {
        best_count = count;
        best_rms = rms;
        best_pose = pose;
        have_best = true;
        const double w =
            static_cast<double>(count) / static_cast<double>(n);
        const double denom = std::log(std::max(1e-12, 1.0 - w * w * w));
        if (denom < 0.0) {
          required_iters = std::min<double>(
              cfg.max_iterations,
              std::ceil(std::log(1.0 - cfg.confidence) / denom));
        }
      }
    }
  }

  if (!have_best || best_count < 4) {
    raise(ErrorCode::TooFewInliers, "consensus did not reach 4 inliers");
  }

  std::vector<uint8_t> mask(n, 0);
  count_inliers(best_pose, &mask);
  std::vector<Vec3> in_pts;
  std::vector<Vec2> in_pix;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      in_pts.push_back(points[i]);
      in_pix.push_back(pixels[i]);
    }
  }

  PnpResult refined =
      refine_pose_reprojection(in_pts, in_pix, cam, best_pose);

  RansacPnpResult out;
  out.pose = refined.board_to_camera;
  out.inlier_mask.assign(n, 0);
  const auto [final_count, final_rms] = count_inliers(out.pose, &out.inlier_mask);
  if (final_count < 4) {
    raise(ErrorCode::TooFewInliers, "refined pose lost consensus");
  }
  out.rms_px = final_rms;
  return out;
}

}  // namespace boardcal
