#pragma once

#include <cstdint>
#include <vector>

#include "sepfm/core_geometry.hpp"
#include "sepfm/line_matching.hpp"

namespace sepfm {

// Recipe for a randomized two-view scene: points in the first camera's
// frustum, a second camera displaced along a generic baseline and rotated by
// the given Euler angles (radians), optionally with a subset of the points
// on one 3D segment so they project colinearly in both views.
struct SyntheticSceneSpec {
  int n_points = 100;
  int n_on_line = 0;
  double outlier_rate = 0.0;  // fraction of pairs replaced by random ones
  double noise_sigma = 0.0;   // px, Gaussian per coordinate, both images
  int width = 1024;
  int height = 768;
  double baseline = 1.0;
  double rot_x = 0.04;
  double rot_y = -0.07;
  double rot_z = 0.02;
  double focal = 800.0;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  FundamentalMatrix f;
  // 1 where the pair is a noisy projection of a real 3D point; 0 where both
  // sides were replaced by uniform random pixels.
  std::vector<std::uint8_t> inlier_mask;
  // 1 where the 3D point sits on the scene segment and the pair survived as
  // an inlier (replaced pairs carry no trace of the segment).
  std::vector<std::uint8_t> line_member_mask;
  HomogeneousPoint e1 = HomogeneousPoint::UnitZ();
  HomogeneousPoint e2 = HomogeneousPoint::UnitZ();
  Eigen::Matrix<double, 3, 4> p1 = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix<double, 3, 4> p2 = Eigen::Matrix<double, 3, 4>::Zero();
};

struct SyntheticScene {
  CorrespondenceSet corrs;
  GroundTruth gt;
};

// Deterministic for a fixed spec. Every 3D point is rejection-sampled until
// it projects inside both images (and, for the segment, until the projected
// line is long enough and clears both epipoles); more than 1000 rejections
// for any one draw throws GenerationError. Exactly lround(outlier_rate *
// n_points) pairs are replaced, preferring off-segment points so the
// colinear structure survives as long as possible. Pair order is shuffled.
SyntheticScene generate_scene(const SyntheticSceneSpec& spec);

}  // namespace sepfm
