#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sepfm/core_geometry.hpp"
#include "sepfm/line_matching.hpp"
#include "sepfm/minimal_solvers.hpp"
#include "sepfm/random.hpp"

namespace sepfm {

enum class SolverVariant { SevenPoint, EightPoint };
enum class Method { Separable, Fallback8pt, Ransac, Lmeds };

std::string method_label(Method m);

struct EstimatorConfig {
  double confidence = 0.99;
  // Assumed outlier rate for iteration budgets; nullopt enables the adaptive
  // schedule that shrinks budgets as better models are found.
  std::optional<double> inlier_ratio = 0.5;
  double t1 = 0.5;  // px, colinear-coefficient reconstruction gate
  double t2 = 3.0;  // px, symmetric epipolar distance gate
  SolverVariant variant = SolverVariant::SevenPoint;
  double fallback_inlier_ratio = 0.3;
  long max_iterations = 1'000'000;
  std::uint64_t seed = 0;
  int min_success_inliers = 20;
  bool refit_on_inliers = true;
  SedVariant sed_variant = SedVariant::MeanDistance;
  HoughParams hough;
};

struct IterationBudget {
  long count = 0;
  bool saturated = false;
};

// ceil(log(1-p) / log(1 - (1-r)^k)) with r the outlier rate; capped.
IterationBudget ransac_iterations(int k, double outlier_rate, double confidence,
                                  long cap);

struct Step1Info {
  EpipolarHomography1D homography;
  LineMatch line_match;
  std::array<int, 3> anchor_indices{};  // correspondence ids behind the fit
  bool orientation_swapped = false;
};

struct StepOneResult {
  bool success = false;
  Step1Info info;
  ControlPointPair control_points;
  std::vector<int> consistent_indices;  // members passing the t1 gate
  long samples_drawn = 0;
  long hypothesis_evaluations = 0;
};

struct StepTwoResult {
  bool success = false;
  FundamentalMatrix f;
  std::vector<int> inlier_indices;
  long samples_drawn = 0;
  long hypothesis_evaluations = 0;
};

struct EstimateReport {
  FundamentalMatrix f;
  std::vector<int> inlier_indices;  // sorted correspondence ids
  Method method = Method::Ransac;
  long samples_drawn = 0;
  long hypothesis_evaluations = 0;
  std::optional<Step1Info> step1;
  double mean_residual = 0.0;
  double median_residual = 0.0;
  bool success = false;
  bool lmeds_low_confidence = false;
  double line_match_seconds = 0.0;  // in-memory only, not serialized
};

// Endpoints of the segment a line cuts from the image rectangle, ordered
// lexicographically so the basis is reproducible.
ControlPointPair control_points_from_lines(const LineMatch& match, int width1,
                                           int height1, int width2,
                                           int height2);

StepOneResult step_one(const CorrespondenceSet& corrs, const LineMatch& match,
                       const EstimatorConfig& cfg, Rng& rng);

StepTwoResult step_two(const CorrespondenceSet& corrs,
                       const StepOneResult& s1, const EstimatorConfig& cfg,
                       Rng& rng);

EstimateReport estimate_separable(const CorrespondenceSet& corrs,
                                  const EstimatorConfig& cfg);

EstimateReport estimate_ransac(const CorrespondenceSet& corrs,
                               const EstimatorConfig& cfg);

EstimateReport estimate_lmeds(const CorrespondenceSet& corrs,
                              const EstimatorConfig& cfg);

}  // namespace sepfm
