#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sepfm/errors.hpp"

namespace sepfm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// A point of the projective image plane. Pixel coordinates live at z == 1;
// z == 0 is a direction (point at infinity).
using HomogeneousPoint = Vec3;

// Relative tolerance separating "rank deficient" from "full rank" in the
// singular-value checks below.
inline constexpr double kRankTolerance = 1e-8;

// Tolerance on the exactness of the similarity produced by normalize_points.
inline constexpr double kNormalizationTolerance = 1e-9;

// Accumulator bin a detected line came from: signed distance to the origin
// and normal angle, both expressed at the original image resolution.
struct HoughBin {
  double rho = 0.0;
  double theta = 0.0;
};

// Implicit image line a*x + b*y + c = 0 with (a, b) never both zero.
// When the line came out of the voting stage, `hough` holds (rho, theta) and
// the coefficients are (cos theta, sin theta, -rho) up to scale.
struct ImageLine {
  Vec3 coeffs = Vec3::Zero();
  std::optional<HoughBin> hough;
};

// 3x3 rank-2 matrix stored in canonical form: unit Frobenius norm with the
// entry of largest magnitude positive. Construct through enforce_rank2 (or a
// solver) so the invariants hold.
struct FundamentalMatrix {
  Mat3 m = Mat3::Zero();
};

// Similarity from normalize_points: translate the centroid to the origin,
// then scale isotropically so the mean radius is sqrt(2). Bottom row 0 0 1.
struct NormalizationTransform {
  Mat3 t = Mat3::Identity();
};

struct NormalizedPoints {
  NormalizationTransform transform;
  std::vector<HomogeneousPoint> points;  // all at z == 1
};

struct Epipoles {
  HomogeneousPoint e1;  // right null vector (image 1)
  HomogeneousPoint e2;  // left null vector (image 2)
};

// Residual convention for point-to-epipolar-line agreement.
// MeanDistance averages the two distances and stays in pixels (the default
// everywhere); SquaredSum adds the squared distances, which weights large
// residuals more and is the usual alternative in the literature.
enum class SedVariant { MeanDistance, SquaredSum };

bool is_finite_point(const HomogeneousPoint& p);
Vec2 dehomogenize(const HomogeneousPoint& p);
bool projectively_equal(const Vec3& a, const Vec3& b, double tol = 1e-9);

// Line through two projectively distinct finite points; coefficients are
// normalized so hypot(a, b) == 1 with a deterministic sign.
ImageLine line_through(const HomogeneousPoint& a, const HomogeneousPoint& b);

// Intersection of two non-parallel lines (may be a point at infinity for
// parallel input; callers check).
HomogeneousPoint intersect_lines(const ImageLine& l1, const ImageLine& l2);

// Total-least-squares line fit (perpendicular residuals) to >= 2 points.
ImageLine fit_line_tls(std::span<const Vec2> pts);

// Perpendicular foot of p on l.
Vec2 project_onto_line(const Vec2& p, const ImageLine& l);

// Cross-product matrix [v]x with skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

// Both sides of the triple-product expansion v x (u x w) =
// (v.w) u - (v.u) w, returned for property checking.
std::pair<Vec3, Vec3> cross_product_identity(const Vec3& v, const Vec3& u,
                                             const Vec3& w);

// Perpendicular pixel distance from a finite point to a line.
double point_line_distance(const HomogeneousPoint& p, const ImageLine& l);

// Agreement of a correspondence with f: distance of x' to the line f*x and
// of x to the line f^T*x', combined per `variant` (mean by default).
// If exactly one of the two epipolar lines is degenerate (the point is an
// epipole) the remaining term is used alone; if both are, this throws.
double symmetric_epipolar_distance(const FundamentalMatrix& f,
                                   const HomogeneousPoint& x,
                                   const HomogeneousPoint& xp,
                                   SedVariant variant = SedVariant::MeanDistance);

// Unit-norm null vectors of f (right then left), sign-fixed so the component
// of largest magnitude is positive. Throws RankError if f has full numerical
// rank and DegenerateError if rank <= 1.
Epipoles epipoles(const FundamentalMatrix& f);

// Scale to unit Frobenius norm and flip sign so the entry of largest
// magnitude (first in row-major scan on ties) is positive.
Mat3 canonicalize(const Mat3& m);

// Nearest rank-2 matrix in Frobenius norm (smallest singular value zeroed),
// canonicalized. Throws if the input is zero or has rank < 2.
FundamentalMatrix enforce_rank2(const Mat3& m);

// Hartley normalization: centroid to the origin, mean radius sqrt(2).
// Requires >= 2 finite points, not all identical.
NormalizedPoints normalize_points(std::span<const HomogeneousPoint> points);

// Scale/sign-blind distance between canonical matrices:
// min(|a - b|_F, |a + b|_F).
double compare_fundamental(const FundamentalMatrix& a,
                           const FundamentalMatrix& b);

}  // namespace sepfm
