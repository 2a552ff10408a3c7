#include <array>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "sepfm/minimal_solvers.hpp"
#include "sepfm/random.hpp"

using namespace sepfm;

namespace {

FundamentalMatrix random_f_finite_epipoles(Rng& rng) {
  for (int tries = 0; tries < 100; ++tries) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.uniform(-1, 1);
    try {
      const FundamentalMatrix f = enforce_rank2(m);
      const Epipoles e = epipoles(f);
      if (is_finite_point(e.e1) && is_finite_point(e.e2)) return f;
    } catch (const DegenerateError&) {
    }
  }
  throw std::runtime_error("could not draw a generic fundamental matrix");
}

// Exact correspondences of f: draw x, then place x' anywhere on the
// epipolar line f * x.
std::vector<Correspondence> exact_pairs(const FundamentalMatrix& f, int n,
                                        Rng& rng) {
  std::vector<Correspondence> out;
  while (static_cast<int>(out.size()) < n) {
    const HomogeneousPoint x(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    const Vec3 l = f.m * x;
    const double ab = std::hypot(l.x(), l.y());
    if (ab < 1e-9) continue;  // x fell on the epipole
    const Vec2 p0(-l.x() * l.z() / (ab * ab), -l.y() * l.z() / (ab * ab));
    const Vec2 dir(-l.y() / ab, l.x() / ab);
    const double t = rng.uniform(-300, 300);
    const Vec2 xp = p0 + t * dir;
    Correspondence c;
    c.x = x;
    c.xp = HomogeneousPoint(xp.x(), xp.y(), 1.0);
    c.index = static_cast<int>(out.size());
    out.push_back(c);
  }
  return out;
}

bool canonical_rank2(const Mat3& m) {
  int r = 0, c = 0;
  m.cwiseAbs().maxCoeff(&r, &c);
  return std::abs(m.norm() - 1.0) < 1e-10 && m(r, c) > 0.0 &&
         std::abs(m.determinant()) < 1e-10;
}

}  // namespace

TEST_CASE("cubic solver on polynomials with known roots") {
  CHECK(solve_cubic(1, 0, 0, -1) == std::vector<double>{1.0});

  const std::vector<double> three = solve_cubic(1, 0, -1, 0);
  REQUIRE(three.size() == 3);
  CHECK(three[0] == doctest::Approx(-1.0));
  CHECK(three[1] == doctest::Approx(0.0));
  CHECK(three[2] == doctest::Approx(1.0));

  // (x + 1)(x - 2)^2: the double root collapses to one entry.
  const std::vector<double> repeated = solve_cubic(1, -3, 0, 4);
  REQUIRE(repeated.size() == 2);
  CHECK(repeated[0] == doctest::Approx(-1.0));
  CHECK(repeated[1] == doctest::Approx(2.0));

  const std::vector<double> quad = solve_cubic(0, 1, 0, -4);
  REQUIRE(quad.size() == 2);
  CHECK(quad[0] == doctest::Approx(-2.0));
  CHECK(quad[1] == doctest::Approx(2.0));

  CHECK(solve_cubic(0, 1, 0, 4).empty());  // negative discriminant
  CHECK(solve_cubic(0, 0, 2, 6) == std::vector<double>{-3.0});
  CHECK(solve_cubic(0, 0, 0, 5).empty());
  CHECK_THROWS_AS(solve_cubic(0, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("cubic solver recovers randomly planted roots") {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    double r1 = rng.uniform(-4, 4), r2 = rng.uniform(-4, 4), r3 = rng.uniform(-4, 4);
    // Keep the roots separated so multiplicity collapsing stays out of play.
    if (std::abs(r1 - r2) < 0.05 || std::abs(r1 - r3) < 0.05 ||
        std::abs(r2 - r3) < 0.05) {
      continue;
    }
    const double s = rng.uniform(0.5, 3.0);
    // s (x - r1)(x - r2)(x - r3)
    const double c3 = s;
    const double c2 = -s * (r1 + r2 + r3);
    const double c1 = s * (r1 * r2 + r1 * r3 + r2 * r3);
    const double c0 = -s * r1 * r2 * r3;
    const std::vector<double> roots = solve_cubic(c3, c2, c1, c0);
    REQUIRE(roots.size() == 3);
    std::array<double, 3> want = {r1, r2, r3};
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 3; ++i) {
      CHECK(roots[i] == doctest::Approx(want[i]).epsilon(1e-7));
    }
  }
}

TEST_CASE("point coefficients in a two point basis") {
  const HomogeneousPoint x1(0, 0, 1), x2(2, 0, 1);
  const LineCoefficients mid = coefficients_of_point(HomogeneousPoint(1, 0, 1), x1, x2);
  // (1, 0, 1) ~ x1 + x2, so alpha == beta up to scale.
  CHECK(mid.alpha == doctest::Approx(mid.beta).epsilon(1e-12));
  CHECK(std::hypot(mid.alpha, mid.beta) > 0.0);

  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const HomogeneousPoint a(rng.uniform(-50, 50), rng.uniform(-50, 50), 1.0);
    const HomogeneousPoint b(rng.uniform(-50, 50), rng.uniform(-50, 50), 1.0);
    if ((dehomogenize(a) - dehomogenize(b)).norm() < 0.5) continue;
    const double al = rng.uniform(-2, 2), be = rng.uniform(-2, 2);
    if (std::abs(al) + std::abs(be) < 0.1) continue;
    const HomogeneousPoint p = al * a + be * b;
    if (!is_finite_point(p)) continue;
    const LineCoefficients got = coefficients_of_point(p, a, b);
    // Proportional to the planted coefficients.
    CHECK(std::abs(got.alpha * be - got.beta * al) <
          1e-8 * std::hypot(got.alpha, got.beta) * std::hypot(al, be) + 1e-12);
  }

  CHECK_THROWS_AS(coefficients_of_point(HomogeneousPoint(1, 5, 1), x1, x2),
                  std::invalid_argument);
  CHECK_THROWS_AS(coefficients_of_point(HomogeneousPoint(1, 0, 1), x1,
                                        HomogeneousPoint(0, 0, 2)),
                  std::invalid_argument);
}

TEST_CASE("1d homography fit through three coefficient pairs") {
  using LC = LineCoefficients;
  const std::array<std::pair<LC, LC>, 3> pairs = {
      std::pair<LC, LC>{{1, 0}, {2, 0}},
      std::pair<LC, LC>{{0, 1}, {0, 1}},
      std::pair<LC, LC>{{1, 1}, {2, 1}},
  };
  const EpipolarHomography1D h = homography_1d_from_3(pairs);
  Eigen::Matrix2d want;
  want << 2, 0, 0, 1;
  want /= std::sqrt(5.0);
  CHECK(h.h.isApprox(want, 1e-10));

  const LC img = apply_homography_1d(h, LC{1, 1});
  CHECK(img.alpha * 1.0 == doctest::Approx(img.beta * 2.0).epsilon(1e-12));
}

TEST_CASE("1d homography fit inverts a planted map") {
  Rng rng(41);
  for (int t = 0; t < 200; ++t) {
    Eigen::Matrix2d m;
    m << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
        rng.uniform(-2, 2);
    if (std::abs(m.determinant()) < 0.05) continue;
    std::array<std::pair<LineCoefficients, LineCoefficients>, 3> pairs;
    bool ok = true;
    std::array<Eigen::Vector2d, 3> srcs = {
        Eigen::Vector2d(1, rng.uniform(-1, 1)),
        Eigen::Vector2d(rng.uniform(-1, 1), 1),
        Eigen::Vector2d(1, 2 + rng.uniform(0, 1))};
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2d d = m * srcs[i];
      if (d.norm() < 1e-6) ok = false;
      pairs[i] = {LineCoefficients{srcs[i].x(), srcs[i].y()},
                  LineCoefficients{d.x(), d.y()}};
    }
    if (!ok) continue;
    EpipolarHomography1D got;
    try {
      got = homography_1d_from_3(pairs);
    } catch (const DegenerateError&) {
      continue;  // two sources collapsed projectively
    }
    Eigen::Matrix2d mc = m / m.norm();
    int r = 0, c = 0;
    mc.cwiseAbs().maxCoeff(&r, &c);
    if (mc(r, c) < 0.0) mc = -mc;
    CHECK(got.h.isApprox(mc, 1e-7));
  }
}

TEST_CASE("eight point solver recovers a planted fundamental matrix") {
  Rng rng(51);
  for (int t = 0; t < 25; ++t) {
    const FundamentalMatrix f = random_f_finite_epipoles(rng);
    const std::vector<Correspondence> corrs = exact_pairs(f, 12, rng);
    const FundamentalMatrix est = eight_point(corrs);
    CHECK(canonical_rank2(est.m));
    CHECK(compare_fundamental(est, f) < 1e-6);
    for (const Correspondence& c : corrs) {
      CHECK(symmetric_epipolar_distance(est, c.x, c.xp) < 1e-6);
    }
  }
  CHECK_THROWS_AS(eight_point(std::vector<Correspondence>(5)),
                  std::invalid_argument);
}

TEST_CASE("eight point solver rejects points on a single image line") {
  Rng rng(61);
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 10; ++i) {
    Correspondence c;
    c.x = HomogeneousPoint(10.0 * i + 1.0, 0.0, 1.0);  // all on y == 0
    c.xp = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    c.index = i;
    corrs.push_back(c);
  }
  CHECK_THROWS_AS(eight_point(corrs), DegenerateError);
}

TEST_CASE("seven point solver yields 1 to 3 candidates containing the truth") {
  Rng rng(71);
  for (int t = 0; t < 25; ++t) {
    const FundamentalMatrix f = random_f_finite_epipoles(rng);
    const std::vector<Correspondence> corrs = exact_pairs(f, 7, rng);
    std::vector<FundamentalMatrix> cands;
    try {
      cands = seven_point(corrs);
    } catch (const DegenerateError&) {
      continue;  // unlucky draw
    }
    CHECK(cands.size() >= 1);
    CHECK(cands.size() <= 3);
    double best = 1e9;
    for (const FundamentalMatrix& cand : cands) {
      CHECK(canonical_rank2(cand.m));
      // Every candidate interpolates the seven pairs exactly.
      for (const Correspondence& c : corrs) {
        CHECK(symmetric_epipolar_distance(cand, c.x, c.xp) < 1e-5);
      }
      best = std::min(best, compare_fundamental(cand, f));
    }
    CHECK(best < 1e-6);
  }
  CHECK_THROWS_AS(seven_point(std::vector<Correspondence>(8)),
                  std::invalid_argument);
}

TEST_CASE("composition from epipoles, control points and the 1d map") {
  Rng rng(81);
  int done = 0;
  for (int t = 0; t < 200 && done < 40; ++t) {
    const HomogeneousPoint e1(rng.uniform(-200, 800), rng.uniform(-200, 800), 1.0);
    const HomogeneousPoint e2(rng.uniform(-200, 800), rng.uniform(-200, 800), 1.0);
    ControlPointPair cps;
    cps.x1 = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    cps.x2 = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    cps.x1p = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    cps.x2p = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    Eigen::Matrix2d hm;
    hm << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
        rng.uniform(-1, 1);
    if (std::abs(hm.determinant()) < 0.05) continue;
    ImageLine l1, l2;
    try {
      l1 = line_through(cps.x1, cps.x2);
      l2 = line_through(cps.x1p, cps.x2p);
    } catch (const DegenerateError&) {
      continue;
    }
    if (point_line_distance(e1, l1) < 5.0 || point_line_distance(e2, l2) < 5.0) {
      continue;  // keep the epipoles clearly off the control lines
    }
    EpipolarHomography1D h;
    h.h = hm;
    FundamentalMatrix f;
    try {
      f = compose_fundamental(e1, e2, cps, h);
    } catch (const DegenerateError&) {
      continue;
    }
    ++done;
    CHECK(canonical_rank2(f.m));
    CHECK((f.m * e1).norm() < 1e-9);              // e1 is the right epipole
    CHECK((f.m.transpose() * e2).norm() < 1e-9);  // e2 is the left epipole

    // A point with coefficients (a, b) on line 1 must map onto line f * q
    // exactly at coefficients h (a, b) on line 2.
    for (int s = 0; s < 5; ++s) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
      if (std::hypot(a, b) < 0.1) continue;
      const HomogeneousPoint q = a * cps.x1 + b * cps.x2;
      const Eigen::Vector2d tc = hm * Eigen::Vector2d(a, b);
      const HomogeneousPoint qp = tc.x() * cps.x1p + tc.y() * cps.x2p;
      if (!is_finite_point(q) || !is_finite_point(qp)) continue;
      CHECK(std::abs(qp.normalized().dot((f.m * q).normalized())) < 1e-8);
    }

    // extract_homography_1d inverts the construction.
    const EpipolarHomography1D back = extract_homography_1d(f, cps);
    Eigen::Matrix2d hc = hm / hm.norm();
    int r = 0, c = 0;
    hc.cwiseAbs().maxCoeff(&r, &c);
    if (hc(r, c) < 0.0) hc = -hc;
    CHECK(back.h.isApprox(hc, 1e-7));
  }
  CHECK(done >= 30);
}

TEST_CASE("extract then compose reproduces any fundamental matrix") {
  Rng rng(91);
  int done = 0;
  for (int t = 0; t < 200 && done < 30; ++t) {
    const FundamentalMatrix f = random_f_finite_epipoles(rng);
    const Epipoles e = epipoles(f);
    if (!is_finite_point(e.e1) || !is_finite_point(e.e2)) continue;
    ControlPointPair cps;
    cps.x1 = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    cps.x2 = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    cps.x1p = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    cps.x2p = HomogeneousPoint(rng.uniform(0, 640), rng.uniform(0, 480), 1.0);
    try {
      const ImageLine l1 = line_through(cps.x1, cps.x2);
      const ImageLine l2 = line_through(cps.x1p, cps.x2p);
      const HomogeneousPoint e1f(dehomogenize(e.e1).x(), dehomogenize(e.e1).y(), 1.0);
      const HomogeneousPoint e2f(dehomogenize(e.e2).x(), dehomogenize(e.e2).y(), 1.0);
      if (point_line_distance(e1f, l1) < 5.0 || point_line_distance(e2f, l2) < 5.0) {
        continue;
      }
      const EpipolarHomography1D h = extract_homography_1d(f, cps);
      const FundamentalMatrix f2 = compose_fundamental(e.e1, e.e2, cps, h);
      ++done;
      CHECK(compare_fundamental(f, f2) < 1e-7);
    } catch (const DegenerateError&) {
      continue;
    }
  }
  CHECK(done >= 20);
}
