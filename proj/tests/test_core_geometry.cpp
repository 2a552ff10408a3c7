#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "sepfm/core_geometry.hpp"
#include "sepfm/random.hpp"

using namespace sepfm;

namespace {

FundamentalMatrix axis_f() {
  // [e]x for e = (1, 0, 0): rank 2, unit Frobenius norm after scaling.
  Mat3 m;
  m << 0, 0, 0,
       0, 0, -1,
       0, 1, 0;
  return enforce_rank2(m);
}

}  // namespace

TEST_CASE("skew matrix reproduces the cross product") {
  const Vec3 v(1, 2, 3), w(4, 5, 6);
  const Vec3 got = skew(v) * w;
  CHECK(got.isApprox(Vec3(-3, 6, -3), 1e-15));
  CHECK(got.isApprox(v.cross(w), 1e-15));
  CHECK((skew(v) + skew(v).transpose()).norm() == 0.0);  // antisymmetric
  CHECK((skew(v) * v).norm() == 0.0);                    // v in the kernel
  CHECK_THROWS_AS(skew(Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("triple product expansion holds on a fixed example and randomly") {
  const auto [lhs, rhs] = cross_product_identity(Vec3(1, 2, 3), Vec3(4, 5, 6),
                                                 Vec3(7, 8, 9));
  CHECK(lhs.isApprox(Vec3(-24, -6, 12), 1e-14));
  CHECK(rhs.isApprox(Vec3(-24, -6, 12), 1e-14));

  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const Vec3 v(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Vec3 u(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Vec3 w(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const auto [a, b] = cross_product_identity(v, u, w);
    CHECK(a.isApprox(b, 1e-10));
  }
}

TEST_CASE("symmetric epipolar distance on a hand-worked example") {
  const FundamentalMatrix f = axis_f();
  const HomogeneousPoint x(0, 0, 1), xp(5, 2, 1);
  // f * x is the line y = 0 in image 2 (distance 2 from (5, 2)); f^T * xp is
  // the line y = 2 in image 1 (distance 2 from the origin).
  CHECK(symmetric_epipolar_distance(f, x, xp) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(symmetric_epipolar_distance(f, x, xp, SedVariant::SquaredSum) ==
        doctest::Approx(8.0).epsilon(1e-12));
  CHECK(oracle::sed_mean(f.m, Vec2(0, 0), Vec2(5, 2)) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("symmetric epipolar distance agrees with the reference formula") {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.uniform(-1, 1);
    FundamentalMatrix f;
    try {
      f = enforce_rank2(m);
    } catch (const DegenerateError&) {
      continue;
    }
    const Vec2 a(rng.uniform(0, 640), rng.uniform(0, 480));
    const Vec2 b(rng.uniform(0, 640), rng.uniform(0, 480));
    const HomogeneousPoint x(a.x(), a.y(), 1), xp(b.x(), b.y(), 1);
    double want;
    try {
      want = symmetric_epipolar_distance(f, x, xp);
    } catch (const DegenerateError&) {
      continue;
    }
    CHECK(want == doctest::Approx(oracle::sed_mean(f.m, a, b)).epsilon(1e-9));
  }
}

TEST_CASE("epipoles of the axis fundamental matrix are the x axis point") {
  const Epipoles e = epipoles(axis_f());
  CHECK(e.e1.isApprox(Vec3(1, 0, 0), 1e-12));
  CHECK(e.e2.isApprox(Vec3(1, 0, 0), 1e-12));
}

TEST_CASE("epipoles rejects full-rank and rank-1 matrices") {
  FundamentalMatrix full;
  full.m = Mat3::Identity() / std::sqrt(3.0);
  CHECK_THROWS_AS(epipoles(full), RankError);

  FundamentalMatrix r1;
  r1.m = Mat3::Zero();
  r1.m(0, 0) = 1.0;
  CHECK_THROWS_AS(epipoles(r1), DegenerateError);
}

TEST_CASE("point to line distance on fixed lines") {
  CHECK(point_line_distance(HomogeneousPoint(3, 4, 1),
                            ImageLine{Vec3(1, 0, 0), std::nullopt}) ==
        doctest::Approx(3.0));
  CHECK(point_line_distance(HomogeneousPoint(0, 0, 1),
                            ImageLine{Vec3(3, 4, -10), std::nullopt}) ==
        doctest::Approx(2.0));
  CHECK_THROWS_AS(point_line_distance(HomogeneousPoint(1, 0, 0),
                                      ImageLine{Vec3(1, 0, 0), std::nullopt}),
                  std::invalid_argument);
}

TEST_CASE("enforce_rank2 zeroes the smallest singular value") {
  Mat3 d = Vec3(3, 2, 1).asDiagonal();
  const FundamentalMatrix f = enforce_rank2(d);
  Mat3 want = Vec3(3, 2, 0).asDiagonal();
  want /= std::sqrt(13.0);
  CHECK(f.m.isApprox(want, 1e-14));
  CHECK(f.m.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(f.m.determinant()) < 1e-14);

  CHECK_THROWS_AS(enforce_rank2(Mat3::Zero()), std::invalid_argument);
  Mat3 rank1 = Vec3(1, 0, 0).asDiagonal();
  CHECK_THROWS_AS(enforce_rank2(rank1), DegenerateError);
}

TEST_CASE("canonical form is scale and sign blind") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.uniform(-2, 2);
    if (m.norm() == 0.0) continue;
    const Mat3 c = canonicalize(m);
    CHECK(c.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(canonicalize(-3.0 * m).isApprox(c, 1e-12));
    CHECK(canonicalize(0.5 * m).isApprox(c, 1e-12));
    // Dominant entry is positive.
    int r = 0, cidx = 0;
    c.cwiseAbs().maxCoeff(&r, &cidx);
    CHECK(c(r, cidx) > 0.0);
  }
}

TEST_CASE("compare_fundamental is zero across scale and sign") {
  Mat3 m;
  m << 1, 2, 3,
       4, 5, 6,
       7, 8, 10;
  const FundamentalMatrix a = enforce_rank2(m);
  const FundamentalMatrix b = enforce_rank2(-7.0 * m);
  CHECK(compare_fundamental(a, b) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(compare_fundamental(a, axis_f()) > 0.1);
}

TEST_CASE("line through two points and intersection of two lines") {
  const ImageLine l = line_through(HomogeneousPoint(0, 0, 1),
                                   HomogeneousPoint(1, 0, 1));
  CHECK(std::hypot(l.coeffs.x(), l.coeffs.y()) == doctest::Approx(1.0));
  CHECK(point_line_distance(HomogeneousPoint(5, 7, 1), l) == doctest::Approx(7.0));

  const HomogeneousPoint p = intersect_lines(
      ImageLine{Vec3(1, 0, -1), std::nullopt},   // x = 1
      ImageLine{Vec3(0, 1, -2), std::nullopt});  // y = 2
  CHECK(projectively_equal(p, Vec3(1, 2, 1)));

  CHECK_THROWS_AS(line_through(HomogeneousPoint(2, 2, 1),
                               HomogeneousPoint(4, 4, 2)),
                  DegenerateError);
}

TEST_CASE("total least squares line fit recovers exact and vertical lines") {
  // Points on 3x + 4y - 10 = 0.
  std::vector<Vec2> pts;
  for (int i = 0; i < 6; ++i) {
    const double x = -3.0 + 1.7 * i;
    pts.emplace_back(x, (10.0 - 3.0 * x) / 4.0);
  }
  const ImageLine l = fit_line_tls(pts);
  for (const Vec2& p : pts) {
    CHECK(oracle::dist_to_coeffs(p, l.coeffs) < 1e-10);
  }

  std::vector<Vec2> vertical = {{3, 0}, {3, 5}, {3, -2}, {3, 9}};
  const ImageLine v = fit_line_tls(vertical);
  CHECK(std::abs(v.coeffs.y()) < 1e-12);
  CHECK(oracle::dist_to_coeffs(Vec2(5, 1), v.coeffs) == doctest::Approx(2.0));

  std::vector<Vec2> coincident = {{1, 1}, {1, 1}, {1, 1}};
  CHECK_THROWS_AS(fit_line_tls(coincident), DegenerateError);
}

TEST_CASE("projection onto a line lands on the line at a right angle") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const Vec2 a(rng.uniform(-10, 10), rng.uniform(-10, 10));
    Vec2 b(rng.uniform(-10, 10), rng.uniform(-10, 10));
    if ((a - b).norm() < 1e-6) continue;
    const ImageLine l = line_through(HomogeneousPoint(a.x(), a.y(), 1),
                                     HomogeneousPoint(b.x(), b.y(), 1));
    const Vec2 p(rng.uniform(-10, 10), rng.uniform(-10, 10));
    const Vec2 foot = project_onto_line(p, l);
    CHECK(oracle::dist_to_coeffs(foot, l.coeffs) < 1e-9);
    CHECK((p - foot).norm() ==
          doctest::Approx(point_line_distance(HomogeneousPoint(p.x(), p.y(), 1), l))
              .epsilon(1e-9));
    const Vec2 dir = (b - a).normalized();
    CHECK(std::abs((p - foot).dot(dir)) < 1e-9);
  }
}

TEST_CASE("normalization moves the centroid to the origin at mean radius sqrt 2") {
  Rng rng(9);
  std::vector<HomogeneousPoint> pts;
  for (int i = 0; i < 40; ++i) {
    pts.emplace_back(rng.uniform(0, 1024), rng.uniform(0, 768), 1.0);
  }
  const NormalizedPoints np = normalize_points(pts);
  Vec2 centroid = Vec2::Zero();
  double radius = 0.0;
  for (const auto& p : np.points) {
    CHECK(p.z() == doctest::Approx(1.0));
    centroid += Vec2(p.x(), p.y());
    radius += std::hypot(p.x(), p.y());
  }
  centroid /= static_cast<double>(np.points.size());
  radius /= static_cast<double>(np.points.size());
  CHECK(centroid.norm() < 1e-9);
  CHECK(radius == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  // The transform maps originals onto the normalized copies.
  for (size_t i = 0; i < pts.size(); ++i) {
    const Vec3 mapped = np.transform.t * pts[i];
    CHECK(mapped.isApprox(np.points[i], 1e-9));
  }
  CHECK(np.transform.t.row(2).isApprox(Eigen::RowVector3d(0, 0, 1)));

  std::vector<HomogeneousPoint> same = {{4, 4, 1}, {4, 4, 1}, {4, 4, 1}};
  CHECK_THROWS_AS(normalize_points(same), DegenerateError);
}

TEST_CASE("dehomogenize and finiteness checks") {
  CHECK(dehomogenize(HomogeneousPoint(4, 6, 2)).isApprox(Vec2(2, 3)));
  CHECK(is_finite_point(HomogeneousPoint(1, 1, 1)));
  CHECK_FALSE(is_finite_point(HomogeneousPoint(1, 1, 0)));
  CHECK_THROWS_AS(dehomogenize(HomogeneousPoint(1, 1, 0)), std::invalid_argument);
  CHECK_THROWS_AS(is_finite_point(HomogeneousPoint(0, 0, 0)), std::invalid_argument);
}
