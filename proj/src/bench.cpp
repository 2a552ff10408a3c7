#include "sepfm/bench.hpp"

#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace sepfm {

namespace {

struct TrialOutcome {
  bool generated = false;
  bool estimated = false;
  bool failed = true;
  bool fell_back = false;
  MetricsReport metrics;
  long samples_drawn = 0;
  long hypothesis_evaluations = 0;
};

double sed_or_inf(const FundamentalMatrix& f, const Correspondence& c) {
  try {
    return symmetric_epipolar_distance(f, c.x, c.xp);
  } catch (const DegenerateError&) {
    return std::numeric_limits<double>::infinity();
  }
}

TrialOutcome run_trial(const BenchCell& cell, int t) {
  TrialOutcome out;
  SyntheticSceneSpec spec = cell.scene;
  spec.seed = cell.scene.seed + static_cast<std::uint64_t>(t);
  SyntheticScene scene;
  try {
    scene = generate_scene(spec);
  } catch (const GenerationError&) {
    return out;
  }
  out.generated = true;

  EstimatorConfig cfg = cell.config;
  cfg.seed = cell.config.seed + static_cast<std::uint64_t>(t);
  EstimateReport rep;
  try {
    switch (cell.method) {
      case Method::Separable:
        rep = estimate_separable(scene.corrs, cfg);
        break;
      case Method::Ransac:
        rep = estimate_ransac(scene.corrs, cfg);
        break;
      case Method::Lmeds:
        rep = estimate_lmeds(scene.corrs, cfg);
        break;
      default:
        throw std::invalid_argument("bench: method must be separable, ransac or lmeds");
    }
  } catch (const std::invalid_argument&) {
    throw;  // a misconfigured cell is a caller bug, not a trial outcome
  } catch (const std::exception&) {
    return out;  // estimated stays false; counted as an estimation error
  }
  out.estimated = true;
  out.fell_back = rep.method == Method::Fallback8pt;
  out.samples_drawn = rep.samples_drawn;
  out.hypothesis_evaluations = rep.hypothesis_evaluations;
  out.metrics = evaluate(rep, scene.gt, scene.corrs);

  int recovered = 0;
  for (const int id : rep.inlier_indices) {
    if (sed_or_inf(scene.gt.f, scene.corrs.pairs[id]) <= 1.0) ++recovered;
  }
  out.failed = recovered < kRecoveredMatchesGate;
  return out;
}

CellSummary summarize(const BenchCell& cell,
                      const std::vector<TrialOutcome>& outcomes) {
  CellSummary s;
  s.label = cell.label;
  s.trials = static_cast<int>(outcomes.size());
  int estimated = 0;
  for (const TrialOutcome& o : outcomes) {
    if (!o.generated) {
      ++s.generation_failures;
      continue;
    }
    if (!o.estimated) {
      ++s.estimation_errors;
      ++s.failures;
      continue;
    }
    ++estimated;
    if (o.failed) ++s.failures;
    if (o.fell_back) ++s.fallback_count;
    s.mean_pct_inliers += o.metrics.pct_inliers;
    s.mean_precision += o.metrics.precision;
    s.mean_recall += o.metrics.recall;
    s.mean_f_score += o.metrics.f_score;
    s.mean_sed += o.metrics.mean_sed;
    s.mean_samples_drawn += static_cast<double>(o.samples_drawn);
    s.mean_hypothesis_evaluations += static_cast<double>(o.hypothesis_evaluations);
  }
  if (estimated > 0) {
    s.mean_pct_inliers /= estimated;
    s.mean_precision /= estimated;
    s.mean_recall /= estimated;
    s.mean_f_score /= estimated;
    s.mean_sed /= estimated;
    s.mean_samples_drawn /= estimated;
    s.mean_hypothesis_evaluations /= estimated;
  }
  const int valid = s.trials - s.generation_failures;
  s.failure_rate = valid > 0 ? static_cast<double>(s.failures) / valid : 0.0;
  return s;
}

}  // namespace

std::vector<CellSummary> run_benchmark(std::span<const BenchCell> grid,
                                       bool parallel) {
  if (grid.empty()) throw std::invalid_argument("run_benchmark: empty grid");
  std::vector<CellSummary> rows;
  rows.reserve(grid.size());
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  for (const BenchCell& cell : grid) {
    if (cell.trials < 1) throw std::invalid_argument("run_benchmark: trials < 1");
    std::vector<TrialOutcome> outcomes(cell.trials);
    if (parallel && cell.trials > 1) {
      std::vector<std::future<void>> futs;
      const unsigned lanes = std::min<unsigned>(workers, cell.trials);
      futs.reserve(lanes);
      for (unsigned lane = 0; lane < lanes; ++lane) {
        futs.push_back(std::async(std::launch::async, [&, lane] {
          for (int t = static_cast<int>(lane); t < cell.trials;
               t += static_cast<int>(lanes)) {
            outcomes[t] = run_trial(cell, t);
          }
        }));
      }
      for (std::future<void>& f : futs) f.get();
    } else {
      for (int t = 0; t < cell.trials; ++t) outcomes[t] = run_trial(cell, t);
    }
    rows.push_back(summarize(cell, outcomes));
  }
  return rows;
}

namespace {

using ordered_json = nlohmann::ordered_json;

void apply_scene(const ordered_json& j, SyntheticSceneSpec& s) {
  if (j.contains("n_points")) s.n_points = j["n_points"].get<int>();
  if (j.contains("n_on_line")) s.n_on_line = j["n_on_line"].get<int>();
  if (j.contains("outlier_rate")) s.outlier_rate = j["outlier_rate"].get<double>();
  if (j.contains("noise_sigma")) s.noise_sigma = j["noise_sigma"].get<double>();
  if (j.contains("width")) s.width = j["width"].get<int>();
  if (j.contains("height")) s.height = j["height"].get<int>();
  if (j.contains("baseline")) s.baseline = j["baseline"].get<double>();
  if (j.contains("rot_x")) s.rot_x = j["rot_x"].get<double>();
  if (j.contains("rot_y")) s.rot_y = j["rot_y"].get<double>();
  if (j.contains("rot_z")) s.rot_z = j["rot_z"].get<double>();
  if (j.contains("focal")) s.focal = j["focal"].get<double>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
}

void apply_config(const ordered_json& j, EstimatorConfig& c) {
  if (j.contains("confidence")) c.confidence = j["confidence"].get<double>();
  if (j.contains("inlier_ratio")) {
    if (j["inlier_ratio"].is_string()) {
      if (j["inlier_ratio"].get<std::string>() != "adaptive") {
        throw std::invalid_argument("inlier_ratio must be a number or \"adaptive\"");
      }
      c.inlier_ratio.reset();
    } else {
      c.inlier_ratio = j["inlier_ratio"].get<double>();
    }
  }
  if (j.contains("t1")) c.t1 = j["t1"].get<double>();
  if (j.contains("t2")) c.t2 = j["t2"].get<double>();
  if (j.contains("variant")) {
    const std::string v = j["variant"].get<std::string>();
    if (v == "seven_point") {
      c.variant = SolverVariant::SevenPoint;
    } else if (v == "eight_point") {
      c.variant = SolverVariant::EightPoint;
    } else {
      throw std::invalid_argument("variant must be seven_point or eight_point");
    }
  }
  if (j.contains("fallback_inlier_ratio")) {
    c.fallback_inlier_ratio = j["fallback_inlier_ratio"].get<double>();
  }
  if (j.contains("max_iterations")) c.max_iterations = j["max_iterations"].get<long>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("min_success_inliers")) {
    c.min_success_inliers = j["min_success_inliers"].get<int>();
  }
  if (j.contains("refit_on_inliers")) {
    c.refit_on_inliers = j["refit_on_inliers"].get<bool>();
  }
  if (j.contains("sed_variant")) {
    const std::string v = j["sed_variant"].get<std::string>();
    if (v == "mean") {
      c.sed_variant = SedVariant::MeanDistance;
    } else if (v == "squared_sum") {
      c.sed_variant = SedVariant::SquaredSum;
    } else {
      throw std::invalid_argument("sed_variant must be mean or squared_sum");
    }
  }
  if (j.contains("hough")) {
    const ordered_json& h = j["hough"];
    if (h.contains("rho_step")) c.hough.rho_step = h["rho_step"].get<double>();
    if (h.contains("theta_step")) c.hough.theta_step = h["theta_step"].get<double>();
    if (h.contains("min_votes")) c.hough.min_votes = h["min_votes"].get<int>();
    if (h.contains("target_width")) c.hough.target_width = h["target_width"].get<int>();
    if (h.contains("neighbor_distance")) {
      c.hough.neighbor_distance = h["neighbor_distance"].get<double>();
    }
    if (h.contains("subsample")) c.hough.subsample = h["subsample"].get<int>();
  }
}

}  // namespace

std::vector<BenchCell> parse_bench_grid(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bench grid: ") + e.what());
  }
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("bench grid must be a nonempty JSON array");
  }
  std::vector<BenchCell> cells;
  cells.reserve(j.size());
  for (const ordered_json& jc : j) {
    BenchCell cell;
    if (jc.contains("label")) cell.label = jc["label"].get<std::string>();
    if (cell.label.empty()) {
      cell.label = "cell" + std::to_string(cells.size());
    }
    if (jc.contains("scene")) apply_scene(jc["scene"], cell.scene);
    if (jc.contains("config")) apply_config(jc["config"], cell.config);
    if (jc.contains("method")) {
      const std::string m = jc["method"].get<std::string>();
      if (m == "separable") {
        cell.method = Method::Separable;
      } else if (m == "ransac") {
        cell.method = Method::Ransac;
      } else if (m == "lmeds") {
        cell.method = Method::Lmeds;
      } else {
        throw std::invalid_argument("method must be separable, ransac or lmeds");
      }
    }
    if (jc.contains("trials")) cell.trials = jc["trials"].get<int>();
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<BenchCell> read_bench_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bench_grid(ss.str());
}

namespace {

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string benchmark_csv(std::span<const CellSummary> rows) {
  std::string out =
      "label,trials,generation_failures,estimation_errors,failures,"
      "failure_rate,fallback_count,mean_pct_inliers,mean_precision,"
      "mean_recall,mean_f_score,mean_sed,mean_samples_drawn,"
      "mean_hypothesis_evaluations\n";
  for (const CellSummary& s : rows) {
    out += s.label + ',' + std::to_string(s.trials) + ',' +
           std::to_string(s.generation_failures) + ',' +
           std::to_string(s.estimation_errors) + ',' +
           std::to_string(s.failures) + ',' + csv_num(s.failure_rate) + ',' +
           std::to_string(s.fallback_count) + ',' +
           csv_num(s.mean_pct_inliers) + ',' + csv_num(s.mean_precision) +
           ',' + csv_num(s.mean_recall) + ',' + csv_num(s.mean_f_score) +
           ',' + csv_num(s.mean_sed) + ',' + csv_num(s.mean_samples_drawn) +
           ',' + csv_num(s.mean_hypothesis_evaluations) + '\n';
  }
  return out;
}

std::string iteration_curves_csv(std::span<const double> outlier_rates,
                                 double confidence, long cap) {
  std::string out =
      "outlier_rate,f3,f4,f5,f7,f8,two_stage_7pt,two_stage_8pt\n";
  for (const double r : outlier_rates) {
    const long f3 = ransac_iterations(3, r, confidence, cap).count;
    const long f4 = ransac_iterations(4, r, confidence, cap).count;
    const long f5 = ransac_iterations(5, r, confidence, cap).count;
    const long f7 = ransac_iterations(7, r, confidence, cap).count;
    const long f8 = ransac_iterations(8, r, confidence, cap).count;
    out += csv_num(r) + ',' + std::to_string(f3) + ',' + std::to_string(f4) +
           ',' + std::to_string(f5) + ',' + std::to_string(f7) + ',' +
           std::to_string(f8) + ',' + std::to_string(f3 + f4) + ',' +
           std::to_string(f3 + f5) + '\n';
  }
  return out;
}

}  // namespace sepfm
