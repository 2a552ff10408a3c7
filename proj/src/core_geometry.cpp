#include "sepfm/core_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sepfm {

namespace {

// First strictly-largest |entry| in row-major order; returns its sign.
double dominant_sign(const Mat3& m) {
  double best = -1.0;
  double sign = 1.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double v = std::abs(m(i, j));
      if (v > best) {
        best = v;
        sign = m(i, j) < 0.0 ? -1.0 : 1.0;
      }
    }
  }
  return sign;
}

Vec3 sign_fixed_unit(const Vec3& v) {
  Vec3 u = v.normalized();
  int arg = 0;
  u.cwiseAbs().maxCoeff(&arg);
  return u[arg] < 0.0 ? Vec3(-u) : u;
}

}  // namespace

bool is_finite_point(const HomogeneousPoint& p) {
  const double mag = p.cwiseAbs().maxCoeff();
  if (mag == 0.0) throw std::invalid_argument("zero homogeneous point");
  return std::abs(p.z()) > 1e-12 * mag;
}

Vec2 dehomogenize(const HomogeneousPoint& p) {
  if (!is_finite_point(p)) {
    throw std::invalid_argument("cannot dehomogenize a point at infinity");
  }
  return Vec2(p.x() / p.z(), p.y() / p.z());
}

bool projectively_equal(const Vec3& a, const Vec3& b, double tol) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("projectively_equal: zero vector");
  }
  // |a x b| is the sine of the angle between unit representatives.
  return (a / na).cross(b / nb).norm() <= tol;
}

ImageLine line_through(const HomogeneousPoint& a, const HomogeneousPoint& b) {
  Vec3 l = a.cross(b);
  const double ab = std::hypot(l.x(), l.y());
  if (ab <= 1e-14 * std::max(1.0, l.cwiseAbs().maxCoeff()) || ab == 0.0) {
    // Either the points coincide projectively or both are at infinity.
    throw DegenerateError("line_through: points do not define an image line");
  }
  l /= ab;
  // Deterministic sign: first non-negligible of (a, b) positive.
  const double lead = std::abs(l.x()) > 1e-12 ? l.x() : l.y();
  if (lead < 0.0) l = -l;
  return ImageLine{l, std::nullopt};
}

HomogeneousPoint intersect_lines(const ImageLine& l1, const ImageLine& l2) {
  return l1.coeffs.cross(l2.coeffs);
}

ImageLine fit_line_tls(std::span<const Vec2> pts) {
  if (pts.size() < 2) throw std::invalid_argument("fit_line_tls needs >= 2 points");
  Vec2 c = Vec2::Zero();
  for (const Vec2& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& p : pts) {
    const Vec2 d = p - c;
    cov += d * d.transpose();
  }
  if (cov.norm() <= 1e-18) {
    throw DegenerateError("fit_line_tls: points are coincident");
  }
  // Normal of the best-fit line = eigenvector of the smaller eigenvalue.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Vec2 n = eig.eigenvectors().col(0);
  n.normalize();
  if ((std::abs(n.x()) > 1e-12 ? n.x() : n.y()) < 0.0) n = -n;
  return ImageLine{Vec3(n.x(), n.y(), -n.dot(c)), std::nullopt};
}

Vec2 project_onto_line(const Vec2& p, const ImageLine& l) {
  const double a = l.coeffs.x(), b = l.coeffs.y(), c = l.coeffs.z();
  const double ab2 = a * a + b * b;
  if (ab2 == 0.0) throw std::invalid_argument("project_onto_line: invalid line");
  const double r = (a * p.x() + b * p.y() + c) / ab2;
  return Vec2(p.x() - r * a, p.y() - r * b);
}

Mat3 skew(const Vec3& v) {
  if (v.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("skew of the zero vector");
  }
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

std::pair<Vec3, Vec3> cross_product_identity(const Vec3& v, const Vec3& u,
                                             const Vec3& w) {
  const Vec3 lhs = v.cross(u.cross(w));
  const Vec3 rhs = v.dot(w) * u - v.dot(u) * w;
  return {lhs, rhs};
}

double point_line_distance(const HomogeneousPoint& p, const ImageLine& l) {
  if (!is_finite_point(p)) {
    throw std::invalid_argument("point_line_distance: point at infinity");
  }
  const double ab = std::hypot(l.coeffs.x(), l.coeffs.y());
  if (ab == 0.0) {
    throw std::invalid_argument("point_line_distance: not an image line");
  }
  const Vec2 q = dehomogenize(p);
  return std::abs(l.coeffs.x() * q.x() + l.coeffs.y() * q.y() + l.coeffs.z()) / ab;
}

double symmetric_epipolar_distance(const FundamentalMatrix& f,
                                   const HomogeneousPoint& x,
                                   const HomogeneousPoint& xp,
                                   SedVariant variant) {
  if (!is_finite_point(x) || !is_finite_point(xp)) {
    throw std::invalid_argument("symmetric_epipolar_distance: points must be finite");
  }
  const Vec3 l2 = f.m * x;             // epipolar line of x in image 2
  const Vec3 l1 = f.m.transpose() * xp;  // epipolar line of x' in image 1

  // A term is usable when its line has a real direction: (a, b) not
  // vanishing relative to the scale of f and the point. The line collapses
  // entirely when the point is an epipole.
  const auto usable = [&](const Vec3& l, const Vec3& pt) {
    return std::hypot(l.x(), l.y()) > 1e-12 * f.m.norm() * pt.norm();
  };
  const bool ok2 = usable(l2, x);
  const bool ok1 = usable(l1, xp);
  if (!ok1 && !ok2) {
    throw DegenerateError("symmetric_epipolar_distance: both epipolar lines degenerate");
  }

  const auto dist = [](const Vec3& l, const HomogeneousPoint& pt) {
    return point_line_distance(pt, ImageLine{l, std::nullopt});
  };
  if (variant == SedVariant::SquaredSum) {
    double s = 0.0;
    if (ok2) s += dist(l2, xp) * dist(l2, xp);
    if (ok1) s += dist(l1, x) * dist(l1, x);
    return s;
  }
  if (ok1 && ok2) return 0.5 * (dist(l2, xp) + dist(l1, x));
  return ok2 ? dist(l2, xp) : dist(l1, x);
}

Epipoles epipoles(const FundamentalMatrix& f) {
  Eigen::JacobiSVD<Mat3> svd(f.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(0) == 0.0) throw DegenerateError("epipoles: zero matrix");
  if (sv(2) > kRankTolerance * sv(0)) {
    throw RankError("epipoles: matrix has full numerical rank");
  }
  if (sv(1) <= kRankTolerance * sv(0)) {
    throw DegenerateError("epipoles: rank below 2");
  }
  return Epipoles{sign_fixed_unit(svd.matrixV().col(2)),
                  sign_fixed_unit(svd.matrixU().col(2))};
}

Mat3 canonicalize(const Mat3& m) {
  const double fro = m.norm();
  if (fro == 0.0) throw std::invalid_argument("canonicalize: zero matrix");
  Mat3 out = m / fro;
  return dominant_sign(out) < 0.0 ? Mat3(-out) : out;
}

FundamentalMatrix enforce_rank2(const Mat3& m) {
  if (m.norm() == 0.0) throw std::invalid_argument("enforce_rank2: zero matrix");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sv = svd.singularValues();
  if (sv(1) <= kRankTolerance * sv(0)) {
    throw DegenerateError("enforce_rank2: input rank below 2");
  }
  sv(2) = 0.0;
  const Mat3 r2 = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
  return FundamentalMatrix{canonicalize(r2)};
}

NormalizedPoints normalize_points(std::span<const HomogeneousPoint> points) {
  if (points.size() < 2) {
    throw std::invalid_argument("normalize_points needs >= 2 points");
  }
  std::vector<Vec2> px;
  px.reserve(points.size());
  for (const HomogeneousPoint& p : points) px.push_back(dehomogenize(p));

  Vec2 c = Vec2::Zero();
  for (const Vec2& p : px) c += p;
  c /= static_cast<double>(px.size());

  double mean_r = 0.0;
  for (const Vec2& p : px) mean_r += (p - c).norm();
  mean_r /= static_cast<double>(px.size());
  if (mean_r <= 1e-12 * (1.0 + c.norm())) {
    throw DegenerateError("normalize_points: all points identical");
  }

  const double s = std::numbers::sqrt2 / mean_r;
  NormalizedPoints out;
  out.transform.t << s, 0.0, -s * c.x(),
                     0.0, s, -s * c.y(),
                     0.0, 0.0, 1.0;
  out.points.reserve(px.size());
  for (const Vec2& p : px) {
    out.points.emplace_back(s * (p.x() - c.x()), s * (p.y() - c.y()), 1.0);
  }
  return out;
}

double compare_fundamental(const FundamentalMatrix& a,
                           const FundamentalMatrix& b) {
  return std::min((a.m - b.m).norm(), (a.m + b.m).norm());
}

}  // namespace sepfm
