#include "sepfm/line_matching.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>

namespace sepfm {

int BinaryGrid::count() const {
  int c = 0;
  for (const std::uint8_t v : cells) c += v != 0;
  return c;
}

BinaryGrid rasterize(std::span<const HomogeneousPoint> points, int width,
                     int height, int target_width) {
  if (points.empty()) throw std::invalid_argument("rasterize: no points");
  if (width <= 0 || height <= 0 || target_width <= 0) {
    throw std::invalid_argument("rasterize: invalid dimensions");
  }
  BinaryGrid g;
  g.scale = std::min(1.0, static_cast<double>(target_width) / width);
  g.width = std::max(1, static_cast<int>(std::lround(width * g.scale)));
  g.height = std::max(1, static_cast<int>(std::lround(height * g.scale)));
  g.cells.assign(static_cast<size_t>(g.width) * g.height, 0);
  for (const HomogeneousPoint& p : points) {
    const Vec2 q = dehomogenize(p);
    const int ix = std::clamp(static_cast<int>(std::lround(q.x() * g.scale)), 0,
                              g.width - 1);
    const int iy = std::clamp(static_cast<int>(std::lround(q.y() * g.scale)), 0,
                              g.height - 1);
    g.cells[static_cast<size_t>(iy) * g.width + ix] = 1;
  }
  return g;
}

std::vector<ImageLine> hough_lines(const BinaryGrid& grid,
                                   const HoughParams& params) {
  if (params.rho_step <= 0.0 || params.theta_step <= 0.0 ||
      params.theta_step > std::numbers::pi / 2 || params.min_votes < 4 ||
      params.target_width < 64 || params.neighbor_distance <= 0.0) {
    throw std::invalid_argument("hough_lines: invalid parameters");
  }
  std::vector<ImageLine> out;
  if (grid.count() < params.min_votes) return out;  // no line can qualify

  const int ktheta =
      std::max(1, static_cast<int>(std::lround(std::numbers::pi / params.theta_step)));
  const double rho_max = std::hypot(grid.width, grid.height);
  const int half = static_cast<int>(std::ceil(rho_max / params.rho_step)) + 1;
  const int krho = 2 * half + 1;

  std::vector<double> cs(ktheta), sn(ktheta);
  for (int k = 0; k < ktheta; ++k) {
    cs[k] = std::cos(k * params.theta_step);
    sn[k] = std::sin(k * params.theta_step);
  }

  std::vector<int> votes(static_cast<size_t>(krho) * ktheta, 0);
  const auto at = [&](int r, int t) -> int& {
    return votes[static_cast<size_t>(r) * ktheta + t];
  };
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      if (!grid.test(x, y)) continue;
      for (int k = 0; k < ktheta; ++k) {
        const double rho = x * cs[k] + y * sn[k];
        const int r = static_cast<int>(std::lround(rho / params.rho_step)) + half;
        ++at(r, k);
      }
    }
  }

  // 3x3 non-maximum suppression. Theta wraps modulo pi with the rho axis
  // mirrored; equal neighbors are resolved by linear index so exactly one of
  // two tied adjacent bins survives.
  const auto wrap = [&](int r, int t, int& wr, int& wt) -> bool {
    wr = r;
    wt = t;
    if (wt < 0) {
      wt += ktheta;
      wr = krho - 1 - wr;
    } else if (wt >= ktheta) {
      wt -= ktheta;
      wr = krho - 1 - wr;
    }
    return wr >= 0 && wr < krho;
  };
  struct Peak {
    int votes, r, t;
  };
  std::vector<Peak> peaks;
  for (int r = 0; r < krho; ++r) {
    for (int t = 0; t < ktheta; ++t) {
      const int v = at(r, t);
      if (v < params.min_votes) continue;
      const long self = static_cast<long>(r) * ktheta + t;
      bool is_peak = true;
      for (int dr = -1; dr <= 1 && is_peak; ++dr) {
        for (int dt = -1; dt <= 1 && is_peak; ++dt) {
          if (dr == 0 && dt == 0) continue;
          int wr, wt;
          if (!wrap(r + dr, t + dt, wr, wt)) continue;
          const int vn = at(wr, wt);
          const long other = static_cast<long>(wr) * ktheta + wt;
          if (other == self) continue;
          if (vn > v || (vn == v && other < self)) is_peak = false;
        }
      }
      if (is_peak) peaks.push_back({v, r, t});
    }
  }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (a.r != b.r) return a.r < b.r;
    return a.t < b.t;
  });

  out.reserve(peaks.size());
  for (const Peak& p : peaks) {
    const double rho_grid = (p.r - half) * params.rho_step;
    const double theta = p.t * params.theta_step;
    // cos(t) x + sin(t) y = rho holds at grid scale; dividing rho by the
    // scale expresses the same line in original coordinates.
    const double rho = rho_grid / grid.scale;
    ImageLine l;
    l.coeffs = Vec3(std::cos(theta), std::sin(theta), -rho);
    l.hough = HoughBin{rho, theta};
    out.push_back(l);
  }
  return out;
}

std::vector<int> nearby_lines(const HomogeneousPoint& p,
                              std::span<const ImageLine> lines, double c) {
  std::vector<int> out;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (point_line_distance(p, lines[i]) < c) out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

std::vector<Bitset> membership_pass(const CorrespondenceSet& corrs,
                                    std::span<const ImageLine> lines,
                                    double c, bool second_image) {
  std::vector<Bitset> members(lines.size(), Bitset(corrs.size()));
  for (int j = 0; j < corrs.size(); ++j) {
    const HomogeneousPoint& p =
        second_image ? corrs.pairs[j].xp : corrs.pairs[j].x;
    for (size_t m = 0; m < lines.size(); ++m) {
      if (point_line_distance(p, lines[m]) < c) members[m].set(j);
    }
  }
  return members;
}

}  // namespace

Accumulator build_accumulator(const CorrespondenceSet& corrs,
                              std::span<const ImageLine> lines1,
                              std::span<const ImageLine> lines2, double c1,
                              double c2, bool parallel) {
  Accumulator acc;
  acc.n = corrs.size();
  acc.k1 = static_cast<int>(lines1.size());
  acc.k2 = static_cast<int>(lines2.size());
  if (parallel) {
    auto f1 = std::async(std::launch::async, [&] {
      return membership_pass(corrs, lines1, c1, false);
    });
    acc.members2 = membership_pass(corrs, lines2, c2, true);
    acc.members1 = f1.get();
  } else {
    acc.members1 = membership_pass(corrs, lines1, c1, false);
    acc.members2 = membership_pass(corrs, lines2, c2, true);
  }
  return acc;
}

std::optional<LineMatch> best_line_pair(const Accumulator& acc,
                                        const CorrespondenceSet& corrs,
                                        std::span<const ImageLine> lines1,
                                        std::span<const ImageLine> lines2,
                                        double c1, double c2, Rng& rng) {
  (void)c1;
  (void)c2;
  int best = 0;
  std::vector<std::pair<int, int>> argmax;
  for (int m = 0; m < acc.k1; ++m) {
    for (int n = 0; n < acc.k2; ++n) {
      const int s = acc.joint_score(m, n);
      if (s > best) {
        best = s;
        argmax.clear();
        argmax.emplace_back(m, n);
      } else if (s == best && s > 0) {
        argmax.emplace_back(m, n);
      }
    }
  }
  if (best < 4) return std::nullopt;

  const auto [m, n] =
      argmax.size() == 1
          ? argmax.front()
          : argmax[rng.uniform_int(static_cast<int>(argmax.size()))];

  LineMatch match;
  match.line1 = lines1[m];
  match.line2 = lines2[n];
  match.score = best;
  acc.members1[m].for_each_and(acc.members2[n], [&](int j) {
    match.member_indices.push_back(corrs.pairs[j].index);
  });
  return match;
}

std::optional<LineMatch> find_line_match(const CorrespondenceSet& corrs,
                                         const HoughParams& params,
                                         std::uint64_t seed) {
  if (corrs.size() < 4) {
    throw std::invalid_argument("find_line_match needs >= 4 correspondences");
  }
  Rng rng(seed);

  std::vector<HomogeneousPoint> pts1, pts2;
  pts1.reserve(corrs.pairs.size());
  pts2.reserve(corrs.pairs.size());
  if (params.subsample > 0 && params.subsample < corrs.size()) {
    // Optional thinning of the voting stage only; memberships below still
    // consider every correspondence.
    for (const int i : rng.sample_indices(corrs.size(), params.subsample)) {
      pts1.push_back(corrs.pairs[i].x);
      pts2.push_back(corrs.pairs[i].xp);
    }
  } else {
    for (const Correspondence& c : corrs.pairs) {
      pts1.push_back(c.x);
      pts2.push_back(c.xp);
    }
  }

  const BinaryGrid g1 =
      rasterize(pts1, corrs.width1, corrs.height1, params.target_width);
  const BinaryGrid g2 =
      rasterize(pts2, corrs.width2, corrs.height2, params.target_width);
  const std::vector<ImageLine> lines1 = hough_lines(g1, params);
  const std::vector<ImageLine> lines2 = hough_lines(g2, params);
  if (lines1.empty() || lines2.empty()) return std::nullopt;

  // The distance gate is specified at grid resolution; rescale per image.
  const double c1 = params.neighbor_distance / g1.scale;
  const double c2 = params.neighbor_distance / g2.scale;

  const Accumulator acc = build_accumulator(corrs, lines1, lines2, c1, c2);
  std::optional<LineMatch> match =
      best_line_pair(acc, corrs, lines1, lines2, c1, c2, rng);
  if (!match) return std::nullopt;

  // Refine both lines on the member points; quantized Hough bins are a
  // coarse estimate. Keep the refinement only if the member set re-gated
  // against the refined lines still supports the pair.
  std::vector<Vec2> m1, m2;
  for (const int j : match->member_indices) {
    m1.push_back(dehomogenize(corrs.pairs[j].x));
    m2.push_back(dehomogenize(corrs.pairs[j].xp));
  }
  try {
    const ImageLine r1 = fit_line_tls(m1);
    const ImageLine r2 = fit_line_tls(m2);
    std::vector<int> regated;
    for (const Correspondence& c : corrs.pairs) {
      if (point_line_distance(c.x, r1) < c1 &&
          point_line_distance(c.xp, r2) < c2) {
        regated.push_back(c.index);
      }
    }
    if (regated.size() >= 4) {
      match->line1 = r1;
      match->line2 = r2;
      match->member_indices = std::move(regated);
      match->score = static_cast<int>(match->member_indices.size());
    }
  } catch (const DegenerateError&) {
    // keep the unrefined match
  }
  return *match;
}

}  // namespace sepfm
