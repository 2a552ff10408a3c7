#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "sepfm/core_geometry.hpp"

namespace sepfm {

// A putative match between the two images. `index` identifies the pair in
// its containing set (positional in files and synthetic scenes).
struct Correspondence {
  HomogeneousPoint x = HomogeneousPoint::UnitZ();   // image 1
  HomogeneousPoint xp = HomogeneousPoint::UnitZ();  // image 2
  int index = 0;
};

// Coefficients of a point on a line expressed in a two-point basis:
// p ~ alpha * x1 + beta * x2, meaningful up to common scale.
struct LineCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
};

// 2x2 projectivity between the coefficient spaces of two matched lines,
// canonical form (unit Frobenius norm, dominant entry positive).
struct EpipolarHomography1D {
  Eigen::Matrix2d h = Eigen::Matrix2d::Identity();
};

// Fixed basis points on a matched pair of lines: (x1, x2) on the image-1
// line, (x1p, x2p) on the image-2 line. Stored at z == 1; each pair must be
// projectively distinct.
struct ControlPointPair {
  HomogeneousPoint x1, x2;
  HomogeneousPoint x1p, x2p;
};

// Normalized-DLT estimate from >= 8 correspondences. Least-squares null
// direction of the bilinear design matrix, rank-2 enforced, denormalized,
// canonical. Throws DegenerateError when the design matrix has rank < 8.
FundamentalMatrix eight_point(std::span<const Correspondence> corrs);

// Minimal 7-point solver. Builds the two-dimensional null space of the
// normalized design matrix and returns one canonical rank-2 candidate per
// real root of det(lambda * Fa + (1 - lambda) * Fb) = 0 (1 to 3 of them).
std::vector<FundamentalMatrix> seven_point(std::span<const Correspondence> corrs);

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, multiplicity collapsed, via
// companion-matrix eigenvalues with a Newton polish. Degrades to the
// quadratic/linear formula when leading coefficients vanish; an identically
// zero polynomial is rejected.
std::vector<double> solve_cubic(double c3, double c2, double c1, double c0);

// Least-squares (alpha, beta) with p ~ alpha * x1 + beta * x2 for a point on
// the line through x1 and x2 (within 1e-4 px; solved as a 3x2 system so
// slightly off-line measured points are handled).
LineCoefficients coefficients_of_point(const HomogeneousPoint& p,
                                       const HomogeneousPoint& x1,
                                       const HomogeneousPoint& x2);

// Exact 2x2 projectivity through three coefficient pairs, from the null
// direction of the 3x4 system alpha'(c a + d b) - beta'(a a + b b) = 0.
// Repeated sources or targets are degenerate.
EpipolarHomography1D homography_1d_from_3(
    const std::array<std::pair<LineCoefficients, LineCoefficients>, 3>& pairs);

// h applied to (alpha, beta); throws if the image collapses to zero.
LineCoefficients apply_homography_1d(const EpipolarHomography1D& h,
                                     const LineCoefficients& c);

// Assembles the fundamental matrix from its factored form:
//   F ~ [e2]x [x1p x2p] H [x2^T; -x1^T] [e1]x
// reading right to left: intersect the epipolar pencil of image 1 with the
// control line, transfer the 1D coordinate through H, and join the image-2
// point with e2. Epipoles must not lie on the control lines.
FundamentalMatrix compose_fundamental(const HomogeneousPoint& e1,
                                      const HomogeneousPoint& e2,
                                      const ControlPointPair& cps,
                                      const EpipolarHomography1D& h);

// Inverse of compose_fundamental: sample three generic points on the
// image-1 control line, transfer them through f, and fit the 1D map.
EpipolarHomography1D extract_homography_1d(const FundamentalMatrix& f,
                                           const ControlPointPair& cps);

}  // namespace sepfm
