#include "sepfm/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace sepfm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sed_or_inf(const FundamentalMatrix& f, const Correspondence& c,
                  SedVariant v) {
  try {
    return symmetric_epipolar_distance(f, c.x, c.xp, v);
  } catch (const DegenerateError&) {
    return kInf;  // both epipolar lines collapsed; never an inlier
  }
}

double median_inplace(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Inlier count and mean residual of the inliers; hypotheses are ranked by
// count first, then by that mean.
struct Score {
  int count = 0;
  double mean = kInf;
};

bool better(const Score& a, const Score& b) {
  if (a.count != b.count) return a.count > b.count;
  return a.mean < b.mean;
}

Score score_candidate(const FundamentalMatrix& f, const CorrespondenceSet& corrs,
                      double gate, SedVariant v) {
  Score s;
  double sum = 0.0;
  for (const Correspondence& c : corrs.pairs) {
    const double d = sed_or_inf(f, c, v);
    if (d <= gate) {
      ++s.count;
      sum += d;
    }
  }
  if (s.count > 0) s.mean = sum / s.count;
  return s;
}

std::vector<int> gate_positions(const FundamentalMatrix& f,
                                const CorrespondenceSet& corrs, double gate,
                                SedVariant v) {
  std::vector<int> out;
  for (int i = 0; i < corrs.size(); ++i) {
    if (sed_or_inf(f, corrs.pairs[i], v) <= gate) out.push_back(i);
  }
  return out;
}

// Deterministic local optimization: alternate full-set gating and
// least-squares refitting until the gated set stops growing. Minimal-sample
// models are rough under noise, so raw support counts from different basins
// overlap; comparing polished models instead makes the selection reliable at
// small sampling budgets.
FundamentalMatrix polish_model(FundamentalMatrix f,
                               const CorrespondenceSet& corrs, double gate,
                               SedVariant v) {
  size_t prev = 0;
  for (int it = 0; it < 12; ++it) {
    const std::vector<int> in = gate_positions(f, corrs, gate, v);
    if (in.size() < 8 || in.size() == prev) break;
    prev = in.size();
    std::vector<Correspondence> pts;
    pts.reserve(in.size());
    for (const int i : in) pts.push_back(corrs.pairs[i]);
    try {
      f = eight_point(pts);
    } catch (const DegenerateError&) {
      break;
    }
  }
  return f;
}

// With no assumed ratio the budget starts at the cap and shrinks whenever a
// better model raises the observed inlier fraction.
void maybe_shrink(long& budget, bool adaptive, int inliers, int total,
                  int sample_size, double confidence, long cap) {
  if (!adaptive || inliers <= 0 || total <= 0) return;
  const double w = static_cast<double>(inliers) / total;
  budget = std::min(
      budget, ransac_iterations(sample_size, 1.0 - w, confidence, cap).count);
}

void require_input(const CorrespondenceSet& corrs) {
  if (corrs.size() < 8) {
    throw std::invalid_argument("estimation needs at least 8 correspondences");
  }
}

struct CoreResult {
  bool any = false;  // at least one hypothesis was scored
  FundamentalMatrix f;
  Score best;
  long samples = 0;
  long evals = 0;
};

// Plain RANSAC over all correspondences with a k-point solver (7 or 8).
CoreResult ransac_core(const CorrespondenceSet& corrs, int k,
                       const EstimatorConfig& cfg, Rng& rng) {
  CoreResult res;
  const bool adaptive = !cfg.inlier_ratio.has_value();
  long budget = adaptive ? cfg.max_iterations
                         : ransac_iterations(k, 1.0 - *cfg.inlier_ratio,
                                             cfg.confidence, cfg.max_iterations)
                               .count;
  std::vector<Correspondence> pts(k);
  int best_raw = -1;
  for (long iter = 0; iter < budget; ++iter) {
    const std::vector<int> sample = rng.sample_indices(corrs.size(), k);
    ++res.samples;
    for (int t = 0; t < k; ++t) pts[t] = corrs.pairs[sample[t]];
    std::vector<FundamentalMatrix> cands;
    try {
      if (k == 7) {
        cands = seven_point(pts);
      } else {
        cands.push_back(eight_point(pts));
      }
    } catch (const DegenerateError&) {
      continue;
    }
    for (const FundamentalMatrix& f : cands) {
      ++res.evals;
      const Score sc = score_candidate(f, corrs, cfg.t2, cfg.sed_variant);
      if (sc.count > best_raw) best_raw = sc.count;
      if (!res.any || better(sc, res.best)) {
        res.any = true;
        res.best = sc;
        res.f = f;
        maybe_shrink(budget, adaptive, sc.count, corrs.size(), k,
                     cfg.confidence, cfg.max_iterations);
      }
      // Any candidate with sizeable raw support may polish into the best
      // model; a fixed new-best trigger would let an early spurious leader
      // suppress later honest candidates.
      if (cfg.refit_on_inliers && sc.count >= 8 && 2 * sc.count >= best_raw) {
        const FundamentalMatrix pf =
            polish_model(f, corrs, cfg.t2, cfg.sed_variant);
        const Score psc = score_candidate(pf, corrs, cfg.t2, cfg.sed_variant);
        if (better(psc, res.best)) {
          res.best = psc;
          res.f = pf;
          maybe_shrink(budget, adaptive, psc.count, corrs.size(), k,
                       cfg.confidence, cfg.max_iterations);
        }
      }
    }
  }
  return res;
}

// Refit on the gated set, regate, and fill residual statistics, sorted ids
// and the success flag. `gate` is t2 except for the LMEDS robust threshold.
void finish(EstimateReport& rep, const CorrespondenceSet& corrs,
            const EstimatorConfig& cfg, double gate) {
  std::vector<int> positions = gate_positions(rep.f, corrs, gate, cfg.sed_variant);
  if (cfg.refit_on_inliers && positions.size() >= 8) {
    std::vector<Correspondence> pts;
    pts.reserve(positions.size());
    for (const int i : positions) pts.push_back(corrs.pairs[i]);
    try {
      rep.f = eight_point(pts);
      positions = gate_positions(rep.f, corrs, gate, cfg.sed_variant);
    } catch (const DegenerateError&) {
      // keep the sampled model
    }
  }
  std::vector<double> residuals;
  residuals.reserve(positions.size());
  rep.inlier_indices.clear();
  for (const int i : positions) {
    residuals.push_back(sed_or_inf(rep.f, corrs.pairs[i], cfg.sed_variant));
    rep.inlier_indices.push_back(corrs.pairs[i].index);
  }
  std::sort(rep.inlier_indices.begin(), rep.inlier_indices.end());
  double sum = 0.0;
  for (const double r : residuals) sum += r;
  rep.mean_residual = residuals.empty() ? 0.0 : sum / residuals.size();
  rep.median_residual = median_inplace(residuals);
  rep.success =
      static_cast<int>(rep.inlier_indices.size()) >= cfg.min_success_inliers;
}

}  // namespace

std::string method_label(Method m) {
  switch (m) {
    case Method::Separable:
      return "separable";
    case Method::Fallback8pt:
      return "fallback-8pt";
    case Method::Ransac:
      return "ransac";
    case Method::Lmeds:
      return "lmeds";
  }
  return "unknown";
}

IterationBudget ransac_iterations(int k, double outlier_rate, double confidence,
                                  long cap) {
  if (k < 1 || outlier_rate < 0.0 || outlier_rate > 1.0 || cap < 1) {
    throw std::invalid_argument("ransac_iterations: bad arguments");
  }
  IterationBudget b;
  if (confidence <= 0.0) {
    b.count = 1;
    return b;
  }
  const double w = std::pow(1.0 - outlier_rate, k);  // P(all-inlier sample)
  if (w >= 1.0) {
    b.count = 1;  // no outliers assumed: one sample certainly suffices
    return b;
  }
  if (w <= 0.0 || confidence >= 1.0) {
    b.count = cap;
    b.saturated = true;
    return b;
  }
  const double raw = std::log(1.0 - confidence) / std::log(1.0 - w);
  if (!std::isfinite(raw) || raw >= static_cast<double>(cap)) {
    b.count = cap;
    b.saturated = true;
    return b;
  }
  b.count = std::max(1L, static_cast<long>(std::ceil(raw)));
  return b;
}

namespace {

// Endpoints of the intersection of a line with [0,w] x [0,h]. A line that
// misses the rectangle (members may sit outside the declared bounds) gets a
// symmetric chord about the foot of the image center instead.
std::pair<Vec2, Vec2> chord_endpoints(const ImageLine& line, double w, double h) {
  const double a = line.coeffs(0), b = line.coeffs(1), c = line.coeffs(2);
  const double scale = std::hypot(a, b);
  const double tol = 1e-9 * std::max(1.0, std::max(w, h));
  std::vector<Vec2> cand;
  const auto push_unique = [&](double x, double y) {
    if (x < -tol || x > w + tol || y < -tol || y > h + tol) return;
    const Vec2 p(std::clamp(x, 0.0, w), std::clamp(y, 0.0, h));
    for (const Vec2& q : cand) {
      if ((p - q).norm() <= tol) return;
    }
    cand.push_back(p);
  };
  if (std::abs(b) > 1e-12 * scale) {
    push_unique(0.0, -c / b);
    push_unique(w, -(c + a * w) / b);
  }
  if (std::abs(a) > 1e-12 * scale) {
    push_unique(-c / a, 0.0);
    push_unique(-(c + b * h) / a, h);
  }
  if (cand.size() >= 2) {
    size_t bi = 0, bj = 1;
    double bd = -1.0;
    for (size_t i = 0; i < cand.size(); ++i) {
      for (size_t j = i + 1; j < cand.size(); ++j) {
        const double d = (cand[i] - cand[j]).squaredNorm();
        if (d > bd) {
          bd = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (bd > tol * tol) return {cand[bi], cand[bj]};
  }
  const Vec2 center(0.5 * w, 0.5 * h);
  const Vec2 n(a / scale, b / scale);
  const Vec2 d(-n.y(), n.x());
  const Vec2 p0 = center - (n.dot(center) + c / scale) * n;
  const double len = 0.5 * std::hypot(w, h);
  return {p0 - len * d, p0 + len * d};
}

bool lex_less(const Vec2& p, const Vec2& q) {
  if (p.x() != q.x()) return p.x() < q.x();
  return p.y() < q.y();
}

HomogeneousPoint lift(const Vec2& p) { return HomogeneousPoint(p.x(), p.y(), 1.0); }

}  // namespace

ControlPointPair control_points_from_lines(const LineMatch& match, int width1,
                                           int height1, int width2,
                                           int height2) {
  auto [p1, p2] = chord_endpoints(match.line1, width1, height1);
  auto [q1, q2] = chord_endpoints(match.line2, width2, height2);
  if (lex_less(p2, p1)) std::swap(p1, p2);
  if (lex_less(q2, q1)) std::swap(q1, q2);
  ControlPointPair cp;
  cp.x1 = lift(p1);
  cp.x2 = lift(p2);
  cp.x1p = lift(q1);
  cp.x2p = lift(q2);
  return cp;
}

StepOneResult step_one(const CorrespondenceSet& corrs, const LineMatch& match,
                       const EstimatorConfig& cfg, Rng& rng) {
  StepOneResult res;
  res.control_points = control_points_from_lines(
      match, corrs.width1, corrs.height1, corrs.width2, corrs.height2);
  const int m = static_cast<int>(match.member_indices.size());
  if (m < 4) return res;  // a triple fits exactly; nothing left to verify

  // 1D coordinates of every member: perpendicular feet on the two lines,
  // expressed in the control-point bases. The inlier gate below compares
  // reconstructions against the raw putative point, not its foot.
  struct MemberCoord {
    LineCoefficients c1, c2;
    Vec2 raw2 = Vec2::Zero();
    bool valid = false;
  };
  std::vector<MemberCoord> mc(m);
  for (int t = 0; t < m; ++t) {
    const Correspondence& pair = corrs.pairs[match.member_indices[t]];
    try {
      const Vec2 f1 = project_onto_line(dehomogenize(pair.x), match.line1);
      const Vec2 f2 = project_onto_line(dehomogenize(pair.xp), match.line2);
      mc[t].raw2 = dehomogenize(pair.xp);
      mc[t].c1 = coefficients_of_point(lift(f1), res.control_points.x1,
                                       res.control_points.x2);
      mc[t].c2 = coefficients_of_point(lift(f2), res.control_points.x1p,
                                       res.control_points.x2p);
      mc[t].valid = true;
    } catch (const std::exception&) {
      mc[t].valid = false;
    }
  }

  const bool adaptive = !cfg.inlier_ratio.has_value();
  const long budget0 =
      adaptive ? cfg.max_iterations
               : ransac_iterations(3, 1.0 - *cfg.inlier_ratio, cfg.confidence,
                                   cfg.max_iterations)
                     .count;

  // Reconstruction error of one member under h: transfer its image-1
  // coordinate, rebuild the image-2 point in the (possibly reversed) image-2
  // basis, and measure against the member's raw putative point.
  const auto member_error = [&](const EpipolarHomography1D& h,
                                const MemberCoord& mco, bool swapped) {
    if (!mco.valid) return kInf;
    LineCoefficients pred;
    try {
      pred = apply_homography_1d(h, mco.c1);
    } catch (const DegenerateError&) {
      return kInf;
    }
    const HomogeneousPoint b1 =
        swapped ? res.control_points.x2p : res.control_points.x1p;
    const HomogeneousPoint b2 =
        swapped ? res.control_points.x1p : res.control_points.x2p;
    const HomogeneousPoint p = pred.alpha * b1 + pred.beta * b2;
    if (!is_finite_point(p)) return kInf;
    return (dehomogenize(p) - mco.raw2).norm();
  };

  const auto run_pass = [&](bool swapped) -> bool {
    long budget = budget0;
    int best_count = 0;
    double best_mean = kInf;
    std::array<int, 3> best_anchors{};
    EpipolarHomography1D best_h;
    std::vector<int> best_members;
    for (long iter = 0; iter < budget; ++iter) {
      const std::vector<int> s = rng.sample_indices(m, 3);
      ++res.samples_drawn;
      if (!mc[s[0]].valid || !mc[s[1]].valid || !mc[s[2]].valid) continue;
      EpipolarHomography1D h;
      try {
        std::array<std::pair<LineCoefficients, LineCoefficients>, 3> triple;
        for (int t = 0; t < 3; ++t) {
          const MemberCoord& mco = mc[s[t]];
          // Reversing the image-2 basis swaps the target coefficients.
          triple[t] = {mco.c1,
                       swapped ? LineCoefficients{mco.c2.beta, mco.c2.alpha}
                               : mco.c2};
        }
        h = homography_1d_from_3(triple);
      } catch (const std::exception&) {
        continue;
      }
      ++res.hypothesis_evaluations;
      int count = 0;
      double sum = 0.0;
      std::vector<int> members;
      for (int t = 0; t < m; ++t) {
        const double err = member_error(h, mc[t], swapped);
        if (err <= cfg.t1) {
          ++count;
          sum += err;
          members.push_back(match.member_indices[t]);
        }
      }
      const double mean = count > 0 ? sum / count : kInf;
      if (count > best_count || (count == best_count && mean < best_mean)) {
        best_count = count;
        best_mean = mean;
        best_h = h;
        best_anchors = {match.member_indices[s[0]], match.member_indices[s[1]],
                        match.member_indices[s[2]]};
        best_members = std::move(members);
        maybe_shrink(budget, adaptive, count, m, 3, cfg.confidence,
                     cfg.max_iterations);
      }
    }
    if (best_count < 4) return false;
    res.success = true;
    res.info.homography = best_h;
    res.info.line_match = match;
    res.info.anchor_indices = best_anchors;
    res.info.orientation_swapped = swapped;
    res.consistent_indices = std::move(best_members);
    return true;
  };

  // The image-2 line has two orientations; try the second only if the first
  // fails. The stored control points swap with it so h keeps its meaning.
  if (!run_pass(false) && run_pass(true)) {
    std::swap(res.control_points.x1p, res.control_points.x2p);
  }
  return res;
}

StepTwoResult step_two(const CorrespondenceSet& corrs, const StepOneResult& s1,
                       const EstimatorConfig& cfg, Rng& rng) {
  StepTwoResult res;
  const int n = corrs.size();
  const int extra = cfg.variant == SolverVariant::SevenPoint ? 4 : 5;

  std::vector<int> pool;
  pool.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (i != s1.info.anchor_indices[0] && i != s1.info.anchor_indices[1] &&
        i != s1.info.anchor_indices[2]) {
      pool.push_back(i);
    }
  }
  if (static_cast<int>(pool.size()) < extra) return res;

  std::vector<Correspondence> pts(3 + extra);
  for (int t = 0; t < 3; ++t) pts[t] = corrs.pairs[s1.info.anchor_indices[t]];

  const bool adaptive = !cfg.inlier_ratio.has_value();
  long budget = adaptive ? cfg.max_iterations
                         : ransac_iterations(extra, 1.0 - *cfg.inlier_ratio,
                                             cfg.confidence, cfg.max_iterations)
                               .count;
  bool any = false;
  Score best;
  int best_raw = -1;
  for (long iter = 0; iter < budget; ++iter) {
    const std::vector<int> s = rng.sample_indices(static_cast<int>(pool.size()),
                                                  extra);
    ++res.samples_drawn;
    for (int t = 0; t < extra; ++t) pts[3 + t] = corrs.pairs[pool[s[t]]];
    std::vector<FundamentalMatrix> cands;
    try {
      if (extra == 4) {
        cands = seven_point(pts);
      } else {
        cands.push_back(eight_point(pts));
      }
    } catch (const DegenerateError&) {
      continue;
    }
    for (const FundamentalMatrix& f : cands) {
      ++res.hypothesis_evaluations;
      const Score sc = score_candidate(f, corrs, cfg.t2, cfg.sed_variant);
      if (sc.count > best_raw) best_raw = sc.count;
      if (!any || better(sc, best)) {
        any = true;
        best = sc;
        res.f = f;
        maybe_shrink(budget, adaptive, sc.count, n, extra, cfg.confidence,
                     cfg.max_iterations);
      }
      // See ransac_core: polished support decides between basins that raw
      // minimal models cannot separate at this budget.
      if (cfg.refit_on_inliers && sc.count >= 8 && 2 * sc.count >= best_raw) {
        const FundamentalMatrix pf =
            polish_model(f, corrs, cfg.t2, cfg.sed_variant);
        const Score psc = score_candidate(pf, corrs, cfg.t2, cfg.sed_variant);
        if (better(psc, best)) {
          any = true;
          best = psc;
          res.f = pf;
          maybe_shrink(budget, adaptive, psc.count, n, extra, cfg.confidence,
                       cfg.max_iterations);
        }
      }
    }
  }
  if (any && best.count > 0) {
    res.success = true;
    for (const int i :
         gate_positions(res.f, corrs, cfg.t2, cfg.sed_variant)) {
      res.inlier_indices.push_back(corrs.pairs[i].index);
    }
    std::sort(res.inlier_indices.begin(), res.inlier_indices.end());
  }
  return res;
}

EstimateReport estimate_separable(const CorrespondenceSet& corrs,
                                  const EstimatorConfig& cfg) {
  require_input(corrs);
  Rng rng(cfg.seed);
  EstimateReport rep;

  bool fallback = false;
  std::optional<LineMatch> match;
  StepOneResult s1;
  StepTwoResult s2;

  if (cfg.inlier_ratio && *cfg.inlier_ratio < cfg.fallback_inlier_ratio) {
    fallback = true;  // too contaminated for the colinear stage to be trusted
  } else {
    const auto t0 = std::chrono::steady_clock::now();
    match = find_line_match(corrs, cfg.hough, cfg.seed);
    rep.line_match_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (!match) fallback = true;
  }

  if (!fallback) {
    s1 = step_one(corrs, *match, cfg, rng);
    rep.samples_drawn += s1.samples_drawn;
    rep.hypothesis_evaluations += s1.hypothesis_evaluations;
    if (!s1.success) fallback = true;
  }

  if (!fallback) {
    s2 = step_two(corrs, s1, cfg, rng);
    rep.samples_drawn += s2.samples_drawn;
    rep.hypothesis_evaluations += s2.hypothesis_evaluations;
    if (!s2.success) fallback = true;
  }

  if (!fallback) {
    rep.f = s2.f;
    rep.method = Method::Separable;
    rep.step1 = s1.info;
    finish(rep, corrs, cfg, cfg.t2);
    if (static_cast<int>(rep.inlier_indices.size()) < cfg.min_success_inliers) {
      fallback = true;  // final support too small; rerun as plain 8-point
      rep.step1.reset();
    }
  }

  if (fallback) {
    const CoreResult core = ransac_core(corrs, 8, cfg, rng);
    rep.samples_drawn += core.samples;
    rep.hypothesis_evaluations += core.evals;
    if (!core.any) {
      throw EstimationError("no hypothesis survived; input looks degenerate");
    }
    rep.f = core.f;
    rep.method = Method::Fallback8pt;
    rep.step1.reset();
    finish(rep, corrs, cfg, cfg.t2);
  }
  return rep;
}

EstimateReport estimate_ransac(const CorrespondenceSet& corrs,
                               const EstimatorConfig& cfg) {
  require_input(corrs);
  Rng rng(cfg.seed);
  const int k = cfg.variant == SolverVariant::SevenPoint ? 7 : 8;
  const CoreResult core = ransac_core(corrs, k, cfg, rng);
  EstimateReport rep;
  rep.samples_drawn = core.samples;
  rep.hypothesis_evaluations = core.evals;
  if (!core.any) {
    throw EstimationError("no hypothesis survived; input looks degenerate");
  }
  rep.f = core.f;
  rep.method = Method::Ransac;
  finish(rep, corrs, cfg, cfg.t2);
  return rep;
}

EstimateReport estimate_lmeds(const CorrespondenceSet& corrs,
                              const EstimatorConfig& cfg) {
  require_input(corrs);
  Rng rng(cfg.seed);
  const int k = cfg.variant == SolverVariant::SevenPoint ? 7 : 8;
  const int n = corrs.size();
  // The median score needs no inlier ratio; the ratio (or 0.5 when adaptive)
  // only sizes the sampling budget.
  const double outlier_rate = cfg.inlier_ratio ? 1.0 - *cfg.inlier_ratio : 0.5;
  const long budget =
      ransac_iterations(k, outlier_rate, cfg.confidence, cfg.max_iterations)
          .count;

  EstimateReport rep;
  rep.method = Method::Lmeds;
  bool any = false;
  double best_med = kInf;
  std::vector<Correspondence> pts(k);
  std::vector<double> sq(n);
  for (long iter = 0; iter < budget; ++iter) {
    const std::vector<int> sample = rng.sample_indices(n, k);
    ++rep.samples_drawn;
    for (int t = 0; t < k; ++t) pts[t] = corrs.pairs[sample[t]];
    std::vector<FundamentalMatrix> cands;
    try {
      if (k == 7) {
        cands = seven_point(pts);
      } else {
        cands.push_back(eight_point(pts));
      }
    } catch (const DegenerateError&) {
      continue;
    }
    for (const FundamentalMatrix& f : cands) {
      ++rep.hypothesis_evaluations;
      for (int i = 0; i < n; ++i) {
        const double d = sed_or_inf(f, corrs.pairs[i], cfg.sed_variant);
        sq[i] = d * d;
      }
      std::vector<double> tmp = sq;
      const double med = median_inplace(tmp);
      if (!any || med < best_med) {
        any = true;
        best_med = med;
        rep.f = f;
      }
    }
  }
  if (!any) {
    throw EstimationError("no hypothesis survived; input looks degenerate");
  }

  // Rousseeuw robust scale from the winning median of squared residuals;
  // the inlier gate never exceeds t2 so reported inliers keep that bound.
  const double sigma =
      1.4826 * (1.0 + 5.0 / std::max(1, n - k)) * std::sqrt(best_med);
  const double gate = std::min(cfg.t2, std::max(2.5 * sigma, 1e-9));
  finish(rep, corrs, cfg, gate);
  rep.lmeds_low_confidence =
      2 * static_cast<int>(rep.inlier_indices.size()) <= n;
  return rep;
}

}  // namespace sepfm
