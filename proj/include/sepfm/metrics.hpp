#pragma once

#include "sepfm/estimator.hpp"
#include "sepfm/synthetic.hpp"

namespace sepfm {

// A pair is a geometric positive when its symmetric epipolar distance under
// the ground-truth matrix is below this (pixels).
inline constexpr double kPositiveSedPx = 1.0;

struct MetricsReport {
  double pct_inliers = 0.0;   // 100 * |reported inliers| / N
  double precision = 0.0;     // of reported inliers against positives
  double recall = 0.0;
  double f_score = 0.0;       // 2PR/(P+R), 0 when P+R = 0
  double mean_sed = 0.0;      // of the reported model over reported inliers
};

// Ids of the pairs with sed(f_gt) strictly below kPositiveSedPx.
std::vector<int> geometric_positives(const FundamentalMatrix& f_gt,
                                     const CorrespondenceSet& corrs);

MetricsReport evaluate(const EstimateReport& report, const GroundTruth& gt,
                       const CorrespondenceSet& corrs);

}  // namespace sepfm
