#include "sepfm/minimal_solvers.hpp"

#include <algorithm>
#include <cmath>

namespace sepfm {

namespace {

Eigen::Matrix2d canonicalize2(const Eigen::Matrix2d& m) {
  const double fro = m.norm();
  if (fro == 0.0) throw DegenerateError("zero 2x2 homography");
  Eigen::Matrix2d out = m / fro;
  double best = -1.0;
  double sign = 1.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double v = std::abs(out(i, j));
      if (v > best) {
        best = v;
        sign = out(i, j) < 0.0 ? -1.0 : 1.0;
      }
    }
  }
  return sign < 0.0 ? Eigen::Matrix2d(-out) : out;
}

// One design-matrix row of the epipolar constraint xp^T F x = 0 with
// F stacked row-major.
void constraint_row(const HomogeneousPoint& x, const HomogeneousPoint& xp,
                    Eigen::Matrix<double, 1, 9>& row) {
  const double u = x.x(), v = x.y();
  const double up = xp.x(), vp = xp.y();
  row << up * u, up * v, up, vp * u, vp * v, vp, u, v, 1.0;
}

Mat3 unstack(const Eigen::Matrix<double, 9, 1>& f) {
  Mat3 m;
  m << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  return m;
}

struct NormalizedCorrs {
  Eigen::MatrixXd design;  // n x 9, built from normalized coordinates
  Mat3 t1, t2;
};

NormalizedCorrs normalized_design(std::span<const Correspondence> corrs) {
  std::vector<HomogeneousPoint> p1, p2;
  p1.reserve(corrs.size());
  p2.reserve(corrs.size());
  for (const Correspondence& c : corrs) {
    p1.push_back(c.x);
    p2.push_back(c.xp);
  }
  const NormalizedPoints n1 = normalize_points(p1);
  const NormalizedPoints n2 = normalize_points(p2);

  NormalizedCorrs out;
  out.t1 = n1.transform.t;
  out.t2 = n2.transform.t;
  out.design.resize(static_cast<Eigen::Index>(corrs.size()), 9);
  Eigen::Matrix<double, 1, 9> row;
  for (size_t i = 0; i < corrs.size(); ++i) {
    constraint_row(n1.points[i], n2.points[i], row);
    out.design.row(static_cast<Eigen::Index>(i)) = row;
  }
  return out;
}

// With normalized coordinates xh = T1 x and xh' = T2 x', a solution Fh of
// xh'^T Fh xh = 0 maps back as F = T2^T Fh T1.
Mat3 denormalize(const Mat3& fh, const Mat3& t1, const Mat3& t2) {
  return t2.transpose() * fh * t1;
}

double poly_eval(double c3, double c2, double c1, double c0, double x) {
  return ((c3 * x + c2) * x + c1) * x + c0;
}

}  // namespace

FundamentalMatrix eight_point(std::span<const Correspondence> corrs) {
  if (corrs.size() < 8) {
    throw std::invalid_argument("eight_point needs at least 8 correspondences");
  }
  const NormalizedCorrs nd = normalized_design(corrs);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(nd.design, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= kRankTolerance * sv(0)) {
    throw DegenerateError("eight_point: degenerate configuration (design rank < 8)");
  }
  const Mat3 fh = unstack(svd.matrixV().col(8));
  // Enforce the rank constraint in normalized space, then map back.
  const FundamentalMatrix fr = enforce_rank2(fh);
  return enforce_rank2(denormalize(fr.m, nd.t1, nd.t2));
}

std::vector<FundamentalMatrix> seven_point(std::span<const Correspondence> corrs) {
  if (corrs.size() != 7) {
    throw std::invalid_argument("seven_point needs exactly 7 correspondences");
  }
  const NormalizedCorrs nd = normalized_design(corrs);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(nd.design, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(6) <= kRankTolerance * sv(0)) {
    throw DegenerateError("seven_point: null space dimension exceeds 2");
  }
  const Mat3 fa = unstack(svd.matrixV().col(7));
  const Mat3 fb = unstack(svd.matrixV().col(8));

  // det(lambda Fa + (1 - lambda) Fb) is cubic in lambda; recover its
  // coefficients from four evaluations instead of expanding symbolically.
  const auto det_at = [&](double lam) {
    return Mat3(lam * fa + (1.0 - lam) * fb).determinant();
  };
  const double p0 = det_at(0.0);
  const double p1 = det_at(1.0);
  const double pm1 = det_at(-1.0);
  const double p2 = det_at(2.0);
  const double c2 = 0.5 * (p1 + pm1) - p0;
  const double c3 = (p2 - p0 - 4.0 * c2 - (p1 - pm1)) / 6.0;
  const double c1 = 0.5 * (p1 - pm1) - c3;
  const double c0 = p0;

  std::vector<double> roots;
  try {
    roots = solve_cubic(c3, c2, c1, c0);
  } catch (const std::invalid_argument&) {
    // Identically zero determinant along the pencil.
    throw DegenerateError("seven_point: singular pencil");
  }

  std::vector<FundamentalMatrix> out;
  for (const double lam : roots) {
    const Mat3 fh = lam * fa + (1.0 - lam) * fb;
    try {
      out.push_back(enforce_rank2(denormalize(fh, nd.t1, nd.t2)));
    } catch (const DegenerateError&) {
      continue;  // root collapsed to rank <= 1
    } catch (const std::invalid_argument&) {
      continue;  // zero matrix
    }
  }
  if (out.empty()) {
    throw DegenerateError("seven_point: no rank-2 candidate");
  }
  return out;
}

std::vector<double> solve_cubic(double c3, double c2, double c1, double c0) {
  const double maxc =
      std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (maxc == 0.0) throw std::invalid_argument("solve_cubic: zero polynomial");

  std::vector<double> roots;
  if (std::abs(c3) > 1e-12 * maxc) {
    // Companion matrix of the monic cubic x^3 + a x^2 + b x + c.
    const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
    Mat3 comp;
    comp << 0.0, 0.0, -c,
            1.0, 0.0, -b,
            0.0, 1.0, -a;
    Eigen::EigenSolver<Mat3> eig(comp);
    for (int i = 0; i < 3; ++i) {
      const std::complex<double> z = eig.eigenvalues()(i);
      if (std::abs(z.imag()) <= 1e-8 * (1.0 + std::abs(z.real()))) {
        double r = z.real();
        // A couple of guarded Newton steps sharpen the eigenvalue estimate.
        for (int it = 0; it < 2; ++it) {
          const double p = poly_eval(c3, c2, c1, c0, r);
          const double dp = (3.0 * c3 * r + 2.0 * c2) * r + c1;
          if (std::abs(dp) < 1e-300) break;
          r -= p / dp;
        }
        roots.push_back(r);
      }
    }
  } else if (std::abs(c2) > 1e-12 * maxc) {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (c1 + (c1 < 0.0 ? -sq : sq));
      if (q != 0.0) {
        roots.push_back(q / c2);
        roots.push_back(c0 / q);
      } else {
        roots.push_back(0.0);  // c1 == 0 and disc == 0 imply a double root at 0
      }
    }
  } else if (std::abs(c1) > 1e-12 * maxc) {
    roots.push_back(-c0 / c1);
  }
  // Nonzero constant: no roots; fall through with the empty list.

  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  for (const double r : roots) {
    if (unique.empty() || std::abs(r - unique.back()) > 1e-6 * (1.0 + std::abs(r))) {
      unique.push_back(r);
    }
  }
  return unique;
}

LineCoefficients coefficients_of_point(const HomogeneousPoint& p,
                                       const HomogeneousPoint& x1,
                                       const HomogeneousPoint& x2) {
  if (projectively_equal(x1, x2, 1e-12)) {
    throw std::invalid_argument("coefficients_of_point: basis points coincide");
  }
  const ImageLine l = line_through(x1, x2);
  const double d = point_line_distance(p, l);
  if (d > 1e-4) {
    throw std::invalid_argument("coefficients_of_point: point is off the line");
  }
  // Solve [x1/|x1|  x2/|x2|] c = p/|p| and undo the column scaling, so the
  // returned coefficients refer to the basis representatives as given.
  const double n1 = x1.norm(), n2 = x2.norm(), np = p.norm();
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = x1 / n1;
  a.col(1) = x2 / n2;
  const Eigen::Vector2d c =
      a.jacobiSvd(Eigen::ComputeFullU | Eigen::ComputeFullV).solve(Vec3(p / np));
  return LineCoefficients{c(0) / n1, c(1) / n2};
}

EpipolarHomography1D homography_1d_from_3(
    const std::array<std::pair<LineCoefficients, LineCoefficients>, 3>& pairs) {
  // Normalize each side of each pair; projective 1D coordinates carry an
  // independent scale per side.
  std::array<Eigen::Vector2d, 3> src, dst;
  for (int i = 0; i < 3; ++i) {
    src[i] = Eigen::Vector2d(pairs[i].first.alpha, pairs[i].first.beta);
    dst[i] = Eigen::Vector2d(pairs[i].second.alpha, pairs[i].second.beta);
    const double ns = src[i].norm(), nd = dst[i].norm();
    if (ns == 0.0 || nd == 0.0) {
      throw std::invalid_argument("homography_1d_from_3: zero coefficient pair");
    }
    src[i] /= ns;
    dst[i] /= nd;
  }
  const auto cross2 = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
  };
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (std::abs(cross2(src[i], src[j])) <= 1e-12) {
        throw DegenerateError("homography_1d_from_3: repeated source point");
      }
      if (std::abs(cross2(dst[i], dst[j])) <= 1e-12) {
        throw DegenerateError("homography_1d_from_3: repeated target point");
      }
    }
  }

  // alpha'(c alpha + d beta) - beta'(a alpha + b beta) = 0, unknowns (a,b,c,d).
  Eigen::Matrix<double, 3, 4> m;
  for (int i = 0; i < 3; ++i) {
    const double al = src[i].x(), be = src[i].y();
    const double alp = dst[i].x(), bep = dst[i].y();
    m.row(i) << -bep * al, -bep * be, alp * al, alp * be;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(2) <= 1e-12 * svd.singularValues()(0)) {
    throw DegenerateError("homography_1d_from_3: rank-deficient system");
  }
  const Eigen::Vector4d h = svd.matrixV().col(3);
  Eigen::Matrix2d hm;
  hm << h(0), h(1), h(2), h(3);
  return EpipolarHomography1D{canonicalize2(hm)};
}

LineCoefficients apply_homography_1d(const EpipolarHomography1D& h,
                                     const LineCoefficients& c) {
  Eigen::Vector2d v(c.alpha, c.beta);
  const double n = v.norm();
  if (n == 0.0) throw std::invalid_argument("apply_homography_1d: zero input");
  const Eigen::Vector2d out = h.h * (v / n);
  if (out.norm() <= 1e-12) {
    throw DegenerateError("apply_homography_1d: image collapses to zero");
  }
  return LineCoefficients{out.x(), out.y()};
}

namespace {

// Epipole-off-line precondition shared by compose/extract. Uses pixel
// distance for finite epipoles and a normalized algebraic residual for
// directions at infinity.
void require_epipole_off_line(const HomogeneousPoint& e,
                              const HomogeneousPoint& a,
                              const HomogeneousPoint& b, const char* which) {
  const ImageLine l = line_through(a, b);
  bool on_line;
  if (is_finite_point(e)) {
    on_line = point_line_distance(e, l) <= 1e-6;
  } else {
    on_line = std::abs(l.coeffs.dot(e.normalized())) <= 1e-6;
  }
  if (on_line) {
    throw std::invalid_argument(
        std::string("epipole lies on the ") + which + " control line");
  }
}

}  // namespace

FundamentalMatrix compose_fundamental(const HomogeneousPoint& e1,
                                      const HomogeneousPoint& e2,
                                      const ControlPointPair& cps,
                                      const EpipolarHomography1D& h) {
  require_epipole_off_line(e1, cps.x1, cps.x2, "image-1");
  require_epipole_off_line(e2, cps.x1p, cps.x2p, "image-2");

  Eigen::Matrix<double, 3, 2> basis2;
  basis2.col(0) = cps.x1p;
  basis2.col(1) = cps.x2p;
  Eigen::Matrix<double, 2, 3> coeff1;
  coeff1.row(0) = cps.x2.transpose();
  coeff1.row(1) = -cps.x1.transpose();

  const Mat3 f = skew(e2) * basis2 * h.h * coeff1 * skew(e1);
  return enforce_rank2(f);  // exact rank <= 2 by construction; cleans noise
}

EpipolarHomography1D extract_homography_1d(const FundamentalMatrix& f,
                                           const ControlPointPair& cps) {
  const Epipoles e = epipoles(f);
  require_epipole_off_line(e.e1, cps.x1, cps.x2, "image-1");
  require_epipole_off_line(e.e2, cps.x1p, cps.x2p, "image-2");

  // Transfer three generic points of the image-1 control line. The image of
  // alpha x1 + beta x2 under f is an epipolar line; its 1D coordinate on the
  // image-2 control line is (l'.x2p, -l'.x1p).
  const std::array<LineCoefficients, 3> sources = {
      LineCoefficients{1.0, 0.0}, LineCoefficients{0.0, 1.0},
      LineCoefficients{1.0, 1.0}};
  std::array<std::pair<LineCoefficients, LineCoefficients>, 3> pairs;
  for (int i = 0; i < 3; ++i) {
    const HomogeneousPoint p =
        sources[i].alpha * cps.x1 + sources[i].beta * cps.x2;
    const Vec3 lp = f.m * p;
    const LineCoefficients target{lp.dot(cps.x2p), -lp.dot(cps.x1p)};
    if (std::abs(target.alpha) + std::abs(target.beta) <=
        1e-14 * lp.norm() * std::max(cps.x1p.norm(), cps.x2p.norm())) {
      throw DegenerateError("extract_homography_1d: transferred point undefined");
    }
    pairs[i] = {sources[i], target};
  }
  return homography_1d_from_3(pairs);
}

}  // namespace sepfm
