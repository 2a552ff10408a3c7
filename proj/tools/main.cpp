#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sepfm/bench.hpp"
#include "sepfm/io.hpp"

namespace {

using namespace sepfm;

struct EstimateArgs {
  std::string corrs_path;
  std::string method = "separable";
  std::string inlier_ratio = "0.5";
  std::string variant;  // empty = pick per method
  std::string sed_variant = "mean";
  std::string out;
  EstimatorConfig cfg;
};

struct SynthArgs {
  SyntheticSceneSpec spec;
  std::string out = "corrs.txt";
  std::string gt_out = "ground_truth.json";
};

struct EvalArgs {
  std::string report_path, gt_path, corrs_path, out;
};

struct BenchArgs {
  std::string grid_path, out, curves;
  bool sequential = false;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw std::runtime_error("failed writing " + path);
  }
}

int run_estimate(EstimateArgs& a) {
  if (a.inlier_ratio == "adaptive") {
    a.cfg.inlier_ratio.reset();
  } else {
    try {
      size_t used = 0;
      const double r = std::stod(a.inlier_ratio, &used);
      if (used != a.inlier_ratio.size() || r < 0.0 || r > 1.0) {
        throw std::invalid_argument("");
      }
      a.cfg.inlier_ratio = r;
    } catch (const std::exception&) {
      throw std::invalid_argument(
          "--inlier-ratio expects a number in [0,1] or 'adaptive'");
    }
  }
  if (a.sed_variant == "mean") {
    a.cfg.sed_variant = SedVariant::MeanDistance;
  } else if (a.sed_variant == "squared_sum") {
    a.cfg.sed_variant = SedVariant::SquaredSum;
  } else {
    throw std::invalid_argument("--sed-variant expects mean or squared_sum");
  }
  if (!a.variant.empty()) {
    if (a.variant == "seven_point") {
      a.cfg.variant = SolverVariant::SevenPoint;
    } else if (a.variant == "eight_point") {
      a.cfg.variant = SolverVariant::EightPoint;
    } else {
      throw std::invalid_argument("--variant expects seven_point or eight_point");
    }
  } else if (a.method == "lmeds" || a.method == "ransac8") {
    a.cfg.variant = SolverVariant::EightPoint;
  } else {
    a.cfg.variant = SolverVariant::SevenPoint;
  }
  if (a.method == "ransac7") a.cfg.variant = SolverVariant::SevenPoint;
  if (a.method == "ransac8") a.cfg.variant = SolverVariant::EightPoint;

  const CorrespondenceSet corrs = read_correspondences(a.corrs_path);
  EstimateReport rep;
  if (a.method == "separable") {
    rep = estimate_separable(corrs, a.cfg);
  } else if (a.method == "ransac7" || a.method == "ransac8") {
    rep = estimate_ransac(corrs, a.cfg);
  } else if (a.method == "lmeds") {
    rep = estimate_lmeds(corrs, a.cfg);
  } else {
    throw std::invalid_argument("--method expects separable, ransac7, ransac8 or lmeds");
  }
  emit(report_to_json(rep, a.cfg), a.out);
  std::cerr << method_label(rep.method) << ": " << rep.inlier_indices.size()
            << "/" << corrs.size() << " inliers, mean sed "
            << rep.mean_residual << " px, " << rep.samples_drawn
            << " samples\n";
  if (!rep.success) {
    std::cerr << "estimation failed: fewer than "
              << a.cfg.min_success_inliers << " inliers\n";
    return 2;
  }
  return 0;
}

int run_synth(const SynthArgs& a) {
  const SyntheticScene scene = generate_scene(a.spec);
  write_correspondences(scene.corrs, a.out);
  write_ground_truth(scene.gt, a.gt_out);
  int n_in = 0, n_line = 0;
  for (const auto v : scene.gt.inlier_mask) n_in += v;
  for (const auto v : scene.gt.line_member_mask) n_line += v;
  std::cerr << "wrote " << scene.corrs.size() << " pairs (" << n_in
            << " inliers, " << n_line << " on the segment) to " << a.out
            << " and ground truth to " << a.gt_out << "\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  const EstimateReport rep = read_report(a.report_path);
  const GroundTruth gt = read_ground_truth(a.gt_path);
  const CorrespondenceSet corrs = read_correspondences(a.corrs_path);
  const MetricsReport m = evaluate(rep, gt, corrs);
  emit(metrics_to_json(m), a.out);
  return 0;
}

int run_bench(const BenchArgs& a) {
  const std::vector<BenchCell> grid = read_bench_grid(a.grid_path);
  const std::vector<CellSummary> rows = run_benchmark(grid, !a.sequential);
  emit(benchmark_csv(rows), a.out);
  if (!a.curves.empty()) {
    std::vector<double> rates;
    for (int i = 1; i <= 16; ++i) rates.push_back(0.05 * i);
    emit(iteration_curves_csv(rates, 0.99, 1'000'000), a.curves);
  }
  return 0;
}

void add_estimator_flags(CLI::App* cmd, EstimateArgs& a) {
  cmd->add_option("--confidence", a.cfg.confidence,
                  "RANSAC success probability target");
  cmd->add_option("--inlier-ratio", a.inlier_ratio,
                  "assumed inlier ratio in [0,1], or 'adaptive'");
  cmd->add_option("--t1", a.cfg.t1, "1D homography inlier threshold, px");
  cmd->add_option("--t2", a.cfg.t2, "epipolar distance inlier threshold, px");
  cmd->add_option("--seed", a.cfg.seed, "random seed");
  cmd->add_option("--fallback-inlier-ratio", a.cfg.fallback_inlier_ratio,
                  "below this assumed ratio, go straight to 8-point RANSAC");
  cmd->add_option("--max-iterations", a.cfg.max_iterations,
                  "cap on any sampling budget");
  cmd->add_option("--min-inliers", a.cfg.min_success_inliers,
                  "inliers required to report success");
  cmd->add_flag_callback(
      "--no-refit", [&a] { a.cfg.refit_on_inliers = false; },
      "skip the final least-squares refit on the inlier set");
  cmd->add_option("--variant", a.variant,
                  "minimal solver: seven_point or eight_point");
  cmd->add_option("--sed-variant", a.sed_variant,
                  "epipolar residual: mean or squared_sum");
  cmd->add_option("--hough-rho-step", a.cfg.hough.rho_step,
                  "rho quantization, grid px");
  cmd->add_option("--hough-theta-step", a.cfg.hough.theta_step,
                  "theta quantization, radians");
  cmd->add_option("--hough-min-votes", a.cfg.hough.min_votes,
                  "minimum votes for a detected line");
  cmd->add_option("--hough-target-width", a.cfg.hough.target_width,
                  "rasterization width, px");
  cmd->add_option("--hough-c", a.cfg.hough.neighbor_distance,
                  "point-to-line membership gate, grid px");
  cmd->add_option("--hough-subsample", a.cfg.hough.subsample,
                  "vote with at most this many pairs (0 = all)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"separable two-view epipolar geometry estimation"};
  app.require_subcommand(1);

  EstimateArgs est;
  CLI::App* cmd_est = app.add_subcommand("estimate", "estimate F from a correspondence file");
  cmd_est->add_option("corrs", est.corrs_path, "correspondence file")->required();
  cmd_est->add_option("--method", est.method,
                      "separable, ransac7, ransac8 or lmeds");
  cmd_est->add_option("--out", est.out, "report path (default: stdout)");
  add_estimator_flags(cmd_est, est);

  SynthArgs syn;
  CLI::App* cmd_syn = app.add_subcommand("synth", "generate a synthetic scene");
  cmd_syn->add_option("--n-points", syn.spec.n_points, "number of pairs");
  cmd_syn->add_option("--n-on-line", syn.spec.n_on_line,
                      "pairs from one 3D segment");
  cmd_syn->add_option("--outlier-rate", syn.spec.outlier_rate,
                      "fraction of pairs replaced by random ones");
  cmd_syn->add_option("--noise-sigma", syn.spec.noise_sigma,
                      "Gaussian pixel noise on inliers");
  cmd_syn->add_option("--width", syn.spec.width, "image width, px");
  cmd_syn->add_option("--height", syn.spec.height, "image height, px");
  cmd_syn->add_option("--baseline", syn.spec.baseline, "camera separation");
  cmd_syn->add_option("--rot-x", syn.spec.rot_x, "camera-2 rotation, rad");
  cmd_syn->add_option("--rot-y", syn.spec.rot_y, "camera-2 rotation, rad");
  cmd_syn->add_option("--rot-z", syn.spec.rot_z, "camera-2 rotation, rad");
  cmd_syn->add_option("--focal", syn.spec.focal, "focal length, px");
  cmd_syn->add_option("--seed", syn.spec.seed, "random seed");
  cmd_syn->add_option("--out", syn.out, "correspondence file to write");
  cmd_syn->add_option("--gt", syn.gt_out, "ground-truth JSON to write");

  EvalArgs ev;
  CLI::App* cmd_ev = app.add_subcommand("eval", "score a report against ground truth");
  cmd_ev->add_option("--report", ev.report_path, "report JSON")->required();
  cmd_ev->add_option("--gt", ev.gt_path, "ground-truth JSON")->required();
  cmd_ev->add_option("--corrs", ev.corrs_path, "correspondence file")->required();
  cmd_ev->add_option("--out", ev.out, "metrics path (default: stdout)");

  BenchArgs be;
  CLI::App* cmd_be = app.add_subcommand("bench", "run a benchmark grid");
  cmd_be->add_option("grid", be.grid_path, "grid JSON file")->required();
  cmd_be->add_option("--out", be.out, "table CSV path (default: stdout)");
  cmd_be->add_option("--curves", be.curves,
                     "also write the sampling-budget curves CSV here");
  cmd_be->add_flag("--sequential", be.sequential, "disable trial parallelism");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version exit 0; any usage error is 1
  }

  try {
    if (app.got_subcommand(cmd_est)) return run_estimate(est);
    if (app.got_subcommand(cmd_syn)) return run_synth(syn);
    if (app.got_subcommand(cmd_ev)) return run_eval(ev);
    if (app.got_subcommand(cmd_be)) return run_bench(be);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const EstimationError& e) {
    std::cerr << "estimation failed: " << e.what() << "\n";
    return 2;
  } catch (const GenerationError& e) {
    std::cerr << "scene generation failed: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
