// Independent reference implementations used only by the tests. Everything
// here is written from first principles (no calls into the library's own
// geometry beyond plain data types) so a bug in the library cannot hide in
// the expected values.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sepfm/line_matching.hpp"

namespace oracle {

// Distance from p to the infinite line through a and b, via the 2D cross
// product (twice the triangle area over the base length).
inline double dist_to_line_through(const sepfm::Vec2& p, const sepfm::Vec2& a,
                                   const sepfm::Vec2& b) {
  const double bx = b.x() - a.x(), by = b.y() - a.y();
  const double px = p.x() - a.x(), py = p.y() - a.y();
  const double base = std::hypot(bx, by);
  return std::abs(bx * py - by * px) / base;
}

// |a x + b y + c| / hypot(a, b) for a line given by coefficients.
inline double dist_to_coeffs(const sepfm::Vec2& p, const sepfm::Vec3& l) {
  return std::abs(l.x() * p.x() + l.y() * p.y() + l.z()) /
         std::hypot(l.x(), l.y());
}

// Symmetric epipolar distance recomputed component by component.
inline double sed_mean(const Eigen::Matrix3d& f, const sepfm::Vec2& x,
                       const sepfm::Vec2& xp) {
  const Eigen::Vector3d xh(x.x(), x.y(), 1.0), xph(xp.x(), xp.y(), 1.0);
  const Eigen::Vector3d l2 = f * xh;
  const Eigen::Vector3d l1 = f.transpose() * xph;
  const double d2 = std::abs(l2.dot(xph)) / std::hypot(l2.x(), l2.y());
  const double d1 = std::abs(l1.dot(xh)) / std::hypot(l1.x(), l1.y());
  return 0.5 * (d1 + d2);
}

// Dense joint vote table built with the obvious triple loop: for every
// correspondence j and every line pair (m, n), add one when j is within c1
// of line m in image 1 and one when it is within c2 of line n in image 2.
struct DenseTable {
  int k1 = 0, k2 = 0;
  std::vector<long> vote_sum;    // k1 * k2, entries in [0, 2n]
  std::vector<int> joint;        // k1 * k2, pairs supported on both sides
  long total = 0;                // sum over every (j, m, n) cell

  long& sum_at(int m, int n) { return vote_sum[static_cast<size_t>(m) * k2 + n]; }
  int& joint_at(int m, int n) { return joint[static_cast<size_t>(m) * k2 + n]; }
};

inline DenseTable dense_accumulate(const sepfm::CorrespondenceSet& corrs,
                                   const std::vector<sepfm::ImageLine>& lines1,
                                   const std::vector<sepfm::ImageLine>& lines2,
                                   double c1, double c2) {
  DenseTable t;
  t.k1 = static_cast<int>(lines1.size());
  t.k2 = static_cast<int>(lines2.size());
  t.vote_sum.assign(static_cast<size_t>(t.k1) * t.k2, 0);
  t.joint.assign(static_cast<size_t>(t.k1) * t.k2, 0);
  for (const auto& pr : corrs.pairs) {
    const sepfm::Vec2 p1(pr.x.x() / pr.x.z(), pr.x.y() / pr.x.z());
    const sepfm::Vec2 p2(pr.xp.x() / pr.xp.z(), pr.xp.y() / pr.xp.z());
    for (int m = 0; m < t.k1; ++m) {
      const bool in1 = dist_to_coeffs(p1, lines1[m].coeffs) < c1;
      for (int n = 0; n < t.k2; ++n) {
        const bool in2 = dist_to_coeffs(p2, lines2[n].coeffs) < c2;
        const int votes = (in1 ? 1 : 0) + (in2 ? 1 : 0);
        t.sum_at(m, n) += votes;
        t.total += votes;
        if (in1 && in2) ++t.joint_at(m, n);
      }
    }
  }
  return t;
}

// Largest number of correspondences that are jointly colinear in BOTH
// images, maximized over lines through every pair of correspondences.
// O(n^3); used to screen synthetic scenes for accidental line structure.
inline int max_joint_colinear(const sepfm::CorrespondenceSet& corrs, double c) {
  const int n = corrs.size();
  std::vector<sepfm::Vec2> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    const auto& pr = corrs.pairs[i];
    a[i] = sepfm::Vec2(pr.x.x() / pr.x.z(), pr.x.y() / pr.x.z());
    b[i] = sepfm::Vec2(pr.xp.x() / pr.xp.z(), pr.xp.y() / pr.xp.z());
  }
  int best = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((a[i] - a[j]).norm() < 1e-9 || (b[i] - b[j]).norm() < 1e-9) continue;
      int k = 0;
      for (int m = 0; m < n; ++m) {
        if (dist_to_line_through(a[m], a[i], a[j]) < c &&
            dist_to_line_through(b[m], b[i], b[j]) < c) {
          ++k;
        }
      }
      best = std::max(best, k);
    }
  }
  return best;
}

// True when some 4-subset of correspondences is colinear within `c` in BOTH
// images, where each image may use its own line. A 4-subset within e of any
// line lies within 2e of the line through its two extremal members, so
// screening at twice a detector's point-to-line gate certifies that no
// detected line pair could ever collect four members. O(n^4).
inline bool has_joint_colinear_quad(const sepfm::CorrespondenceSet& corrs,
                                    double c) {
  const int n = corrs.size();
  std::vector<sepfm::Vec2> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    const auto& pr = corrs.pairs[i];
    a[i] = sepfm::Vec2(pr.x.x() / pr.x.z(), pr.x.y() / pr.x.z());
    b[i] = sepfm::Vec2(pr.xp.x() / pr.xp.z(), pr.xp.y() / pr.xp.z());
  }
  const auto quad_colinear = [c](const std::vector<sepfm::Vec2>& p,
                                 const int q[4]) {
    for (int u = 0; u < 4; ++u) {
      for (int v = u + 1; v < 4; ++v) {
        const sepfm::Vec2& s = p[q[u]];
        const sepfm::Vec2& t = p[q[v]];
        if ((s - t).norm() < 1e-9) continue;
        bool all = true;
        for (int w = 0; w < 4 && all; ++w) {
          if (dist_to_line_through(p[q[w]], s, t) >= c) all = false;
        }
        if (all) return true;
      }
    }
    return false;
  };
  int q[4];
  for (q[0] = 0; q[0] < n; ++q[0])
    for (q[1] = q[0] + 1; q[1] < n; ++q[1])
      for (q[2] = q[1] + 1; q[2] < n; ++q[2])
        for (q[3] = q[2] + 1; q[3] < n; ++q[3])
          if (quad_colinear(a, q) && quad_colinear(b, q)) return true;
  return false;
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
