#include "sepfm/metrics.hpp"

#include <limits>

namespace sepfm {

namespace {

double sed_or_inf(const FundamentalMatrix& f, const Correspondence& c) {
  try {
    return symmetric_epipolar_distance(f, c.x, c.xp);
  } catch (const DegenerateError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

std::vector<int> geometric_positives(const FundamentalMatrix& f_gt,
                                     const CorrespondenceSet& corrs) {
  std::vector<int> out;
  for (const Correspondence& c : corrs.pairs) {
    if (sed_or_inf(f_gt, c) < kPositiveSedPx) out.push_back(c.index);
  }
  return out;
}

MetricsReport evaluate(const EstimateReport& report, const GroundTruth& gt,
                       const CorrespondenceSet& corrs) {
  const int n = corrs.size();
  MetricsReport m;
  if (n == 0) return m;

  std::vector<std::uint8_t> positive(n, 0);
  for (const int id : geometric_positives(gt.f, corrs)) positive[id] = 1;

  int tp = 0;
  double sed_sum = 0.0;
  for (const int id : report.inlier_indices) {
    if (id < 0 || id >= n) {
      throw std::invalid_argument("evaluate: inlier id out of range");
    }
    if (positive[id]) ++tp;
    sed_sum += sed_or_inf(report.f, corrs.pairs[id]);
  }

  const int n_pred = static_cast<int>(report.inlier_indices.size());
  int n_pos = 0;
  for (const std::uint8_t p : positive) n_pos += p;

  m.pct_inliers = 100.0 * n_pred / n;
  m.precision = n_pred > 0 ? static_cast<double>(tp) / n_pred : 0.0;
  m.recall = n_pos > 0 ? static_cast<double>(tp) / n_pos : 0.0;
  m.f_score = (m.precision + m.recall) > 0.0
                  ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                  : 0.0;
  m.mean_sed = n_pred > 0 ? sed_sum / n_pred : 0.0;
  return m;
}

}  // namespace sepfm
