#pragma once

#include <span>
#include <string>
#include <vector>

#include "sepfm/estimator.hpp"
#include "sepfm/metrics.hpp"
#include "sepfm/synthetic.hpp"

namespace sepfm {

// One benchmark configuration: a scene recipe, an estimator configuration,
// which estimator to run, and how many seeded trials to average over.
// Trial t uses scene/config seeds offset by t.
struct BenchCell {
  std::string label;
  SyntheticSceneSpec scene;
  EstimatorConfig config;
  Method method = Method::Separable;  // Separable, Ransac or Lmeds
  int trials = 100;
};

// A trial counts as a failure unless at least 20 of its reported inliers
// agree with the ground truth within 1 px of symmetric epipolar distance.
inline constexpr int kRecoveredMatchesGate = 20;

struct CellSummary {
  std::string label;
  int trials = 0;
  int generation_failures = 0;  // scene rejected; excluded from the rest
  int estimation_errors = 0;    // estimator threw; counted as failures
  int failures = 0;
  double failure_rate = 0.0;    // failures / valid scenes
  int fallback_count = 0;       // trials that ended on the fallback path
  double mean_pct_inliers = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f_score = 0.0;
  double mean_sed = 0.0;
  double mean_samples_drawn = 0.0;
  double mean_hypothesis_evaluations = 0.0;
};

// Runs every cell; trials are independent and run concurrently when
// `parallel` is set, with results stored per index so aggregation order is
// fixed. Individual trial failures are recorded, never thrown.
std::vector<CellSummary> run_benchmark(std::span<const BenchCell> grid,
                                       bool parallel = true);

// Grid description: a JSON array of cells; missing keys keep the defaults
// above. Throws on malformed input.
std::vector<BenchCell> parse_bench_grid(const std::string& json_text);
std::vector<BenchCell> read_bench_grid(const std::string& path);

// CSV with a header row, one line per cell.
std::string benchmark_csv(std::span<const CellSummary> rows);

// Sampling budgets per outlier rate for the minimal solvers and the
// two-stage splits (3+4 and 3+5), one CSV row per rate.
std::string iteration_curves_csv(std::span<const double> outlier_rates,
                                 double confidence, long cap);

}  // namespace sepfm
