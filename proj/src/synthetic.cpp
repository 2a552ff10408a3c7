#include "sepfm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "sepfm/random.hpp"

namespace sepfm {

namespace {

constexpr int kMaxAttempts = 1000;
constexpr double kDepthNear = 4.0;
constexpr double kDepthFar = 10.0;
constexpr double kFrustumMargin = 0.05;  // of image width/height
constexpr double kEpipoleLineMargin = 20.0;  // px
constexpr double kMinSegmentFraction = 0.25;  // of min(width, height)

Mat3 rotation_xyz(double rx, double ry, double rz) {
  return (Eigen::AngleAxisd(rz, Vec3::UnitZ()) *
          Eigen::AngleAxisd(ry, Vec3::UnitY()) *
          Eigen::AngleAxisd(rx, Vec3::UnitX()))
      .toRotationMatrix();
}

void validate(const SyntheticSceneSpec& s) {
  if (s.n_points < 1 || s.n_on_line < 0 || s.n_on_line > s.n_points ||
      s.outlier_rate < 0.0 || s.outlier_rate >= 1.0 || s.noise_sigma < 0.0 ||
      s.width < 2 || s.height < 2 || s.focal <= 0.0 || s.baseline <= 0.0) {
    throw std::invalid_argument("generate_scene: invalid spec");
  }
}

}  // namespace

SyntheticScene generate_scene(const SyntheticSceneSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);

  const double w = spec.width, h = spec.height;
  Mat3 k = Mat3::Identity();
  k(0, 0) = k(1, 1) = spec.focal;
  k(0, 2) = 0.5 * w;
  k(1, 2) = 0.5 * h;
  const Mat3 k_inv = k.inverse();

  const Mat3 r = rotation_xyz(spec.rot_x, spec.rot_y, spec.rot_z);
  // A baseline direction with all components nonzero keeps both epipoles
  // finite and away from the image center.
  const Vec3 c2 = spec.baseline * Vec3(0.55, 0.25, 0.80).normalized();

  GroundTruth gt;
  gt.p1.leftCols<3>() = k;
  gt.p2.leftCols<3>() = k * r;
  gt.p2.col(3) = k * (-r * c2);
  const Vec3 e1_raw = k * c2;           // image of the second center
  const Vec3 e2_raw = k * (-r * c2);    // image of the first center
  {
    const Eigen::Matrix<double, 4, 3> p1_pinv =
        gt.p1.completeOrthogonalDecomposition().pseudoInverse();
    gt.f = enforce_rank2(skew(e2_raw) * (gt.p2 * p1_pinv));
  }
  const Epipoles eps = epipoles(gt.f);
  gt.e1 = eps.e1;
  gt.e2 = eps.e2;

  // Pixel projections of a world point (camera-1 frame); z must stay
  // positive in both cameras and the pixel inside both images.
  const auto project = [&](const Vec3& x, Vec2& px1, Vec2& px2) -> bool {
    if (x.z() <= 0.0) return false;
    const Vec3 q1 = k * x;
    const Vec3 xc2 = r * (x - c2);
    if (xc2.z() <= 0.0) return false;
    const Vec3 q2 = k * xc2;
    px1 = q1.hnormalized();
    px2 = q2.hnormalized();
    return px1.x() >= 0.0 && px1.x() <= w && px1.y() >= 0.0 && px1.y() <= h &&
           px2.x() >= 0.0 && px2.x() <= w && px2.y() >= 0.0 && px2.y() <= h;
  };

  const auto sample_world_point = [&]() -> Vec3 {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      const double u = rng.uniform(kFrustumMargin * w, (1.0 - kFrustumMargin) * w);
      const double v = rng.uniform(kFrustumMargin * h, (1.0 - kFrustumMargin) * h);
      const double z = rng.uniform(kDepthNear, kDepthFar);
      const Vec3 x = z * (k_inv * Vec3(u, v, 1.0));
      Vec2 px1, px2;
      if (project(x, px1, px2)) return x;
    }
    throw GenerationError("could not place a point visible in both images");
  };

  // Optional 3D segment. Both endpoints visible in both images, so every
  // interior point is too (the frustum and the image rectangle are convex).
  Vec3 seg_a = Vec3::Zero(), seg_b = Vec3::Zero();
  if (spec.n_on_line > 0) {
    const double min_len = kMinSegmentFraction * std::min(w, h);
    Vec2 e1_px, e2_px;
    try {
      e1_px = dehomogenize(e1_raw);
      e2_px = dehomogenize(e2_raw);
    } catch (const DegenerateError&) {
      throw GenerationError("an epipole is at infinity; adjust the rotation");
    }
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const Vec3 a = sample_world_point();
      const Vec3 b = sample_world_point();
      Vec2 a1, a2, b1, b2;
      if (!project(a, a1, a2) || !project(b, b1, b2)) continue;
      if ((a1 - b1).norm() < min_len || (a2 - b2).norm() < min_len) continue;
      try {
        const ImageLine l1 = line_through(a1.homogeneous(), b1.homogeneous());
        const ImageLine l2 = line_through(a2.homogeneous(), b2.homogeneous());
        // Epipoles on the projected line make the epipolar pencil tangent to
        // it; resample until both stay clear.
        if (point_line_distance(e1_px.homogeneous(), l1) < kEpipoleLineMargin)
          continue;
        if (point_line_distance(e2_px.homogeneous(), l2) < kEpipoleLineMargin)
          continue;
      } catch (const DegenerateError&) {
        continue;
      }
      seg_a = a;
      seg_b = b;
      placed = true;
    }
    if (!placed) {
      throw GenerationError("could not place a segment clear of both epipoles");
    }
  }

  const int n = spec.n_points;
  std::vector<Vec2> img1(n), img2(n);
  std::vector<std::uint8_t> on_line(n, 0);
  for (int i = 0; i < n; ++i) {
    Vec3 x;
    if (i < spec.n_on_line) {
      x = seg_a + rng.uniform() * (seg_b - seg_a);
      on_line[i] = 1;
    } else {
      x = sample_world_point();
    }
    Vec2 px1, px2;
    if (!project(x, px1, px2)) {
      throw GenerationError("segment point left the frustum");  // unreachable
    }
    img1[i] = px1;
    img2[i] = px2;
  }

  // Replace an exact count of pairs with uniform random ones, spending the
  // off-segment points first so the colinear structure is damaged last.
  std::vector<std::uint8_t> inlier(n, 1);
  const int n_out = static_cast<int>(std::lround(spec.outlier_rate * n));
  {
    std::vector<int> off, on;
    for (int i = 0; i < n; ++i) (on_line[i] ? on : off).push_back(i);
    std::vector<int> victims;
    const std::vector<int> off_order = rng.permutation(static_cast<int>(off.size()));
    const std::vector<int> on_order = rng.permutation(static_cast<int>(on.size()));
    for (int t = 0; t < static_cast<int>(off.size()) && static_cast<int>(victims.size()) < n_out; ++t) {
      victims.push_back(off[off_order[t]]);
    }
    for (int t = 0; t < static_cast<int>(on.size()) && static_cast<int>(victims.size()) < n_out; ++t) {
      victims.push_back(on[on_order[t]]);
    }
    for (const int i : victims) {
      inlier[i] = 0;
      on_line[i] = 0;
      img1[i] = Vec2(rng.uniform(0.0, w), rng.uniform(0.0, h));
      img2[i] = Vec2(rng.uniform(0.0, w), rng.uniform(0.0, h));
    }
  }

  if (spec.noise_sigma > 0.0) {
    for (int i = 0; i < n; ++i) {
      if (!inlier[i]) continue;
      img1[i].x() += rng.normal(0.0, spec.noise_sigma);
      img1[i].y() += rng.normal(0.0, spec.noise_sigma);
      img2[i].x() += rng.normal(0.0, spec.noise_sigma);
      img2[i].y() += rng.normal(0.0, spec.noise_sigma);
    }
  }

  const std::vector<int> perm = rng.permutation(n);
  SyntheticScene scene;
  scene.corrs.width1 = scene.corrs.width2 = spec.width;
  scene.corrs.height1 = scene.corrs.height2 = spec.height;
  scene.corrs.pairs.resize(n);
  gt.inlier_mask.resize(n);
  gt.line_member_mask.resize(n);
  for (int i = 0; i < n; ++i) {
    const int src = perm[i];
    scene.corrs.pairs[i].x = img1[src].homogeneous();
    scene.corrs.pairs[i].xp = img2[src].homogeneous();
    scene.corrs.pairs[i].index = i;
    gt.inlier_mask[i] = inlier[src];
    gt.line_member_mask[i] = on_line[src];
  }
  scene.gt = std::move(gt);
  return scene;
}

}  // namespace sepfm
