#include "sepfm/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace sepfm {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

bool is_bare_positive_int(const std::string& tok, int& value) {
  if (tok.empty()) return false;
  for (const char c : tok) {
    if (c < '0' || c > '9') return false;
  }
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc() && p == tok.data() + tok.size() && value >= 1;
}

double parse_double(const std::string& tok, int lineno) {
  double value = 0.0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw ParseError("not a number: '" + tok + "'", lineno);
  }
  return value;
}

std::vector<std::string> tokenize(std::string line) {
  const size_t hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  for (char& c : line) {
    if (c == ',') c = ' ';
  }
  std::istringstream ss(line);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

int inferred_extent(double max_coord) {
  return std::max(1, static_cast<int>(std::floor(max_coord)) + 1);
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ordered_json vec_to_json(const Vec3& v) { return {v(0), v(1), v(2)}; }

Vec3 json_to_vec3(const ordered_json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error("expected a 3-vector");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

ordered_json mat_rows_to_json(const Mat3& m) {
  ordered_json a = ordered_json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

Mat3 json_to_mat3(const ordered_json& j) {
  if (!j.is_array() || j.size() != 9) {
    throw std::runtime_error("expected 9 row-major entries");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = j[3 * r + c].get<double>();
  }
  return m;
}

std::string variant_label(SolverVariant v) {
  return v == SolverVariant::SevenPoint ? "seven_point" : "eight_point";
}

SolverVariant variant_from_label(const std::string& s) {
  if (s == "seven_point") return SolverVariant::SevenPoint;
  if (s == "eight_point") return SolverVariant::EightPoint;
  throw std::runtime_error("unknown solver variant: " + s);
}

Method method_from_label(const std::string& s) {
  if (s == "separable") return Method::Separable;
  if (s == "fallback-8pt") return Method::Fallback8pt;
  if (s == "ransac") return Method::Ransac;
  if (s == "lmeds") return Method::Lmeds;
  throw std::runtime_error("unknown method: " + s);
}

}  // namespace

CorrespondenceSet read_correspondences(const std::string& path) {
  std::ifstream in = open_for_read(path);
  CorrespondenceSet set;
  std::map<std::array<double, 4>, int> seen;  // row -> first line number
  bool saw_data = false;
  bool have_header = false;
  std::array<double, 4> max_coord{};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<std::string> toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 4) {
      throw ParseError("expected 4 values, got " + std::to_string(toks.size()),
                       lineno);
    }
    if (!saw_data) {
      // A leading line of four bare integers >= 1 is the size header; any
      // zero or fractional value makes it an ordinary data row.
      std::array<int, 4> dims{};
      bool header = true;
      for (int i = 0; i < 4 && header; ++i) {
        header = is_bare_positive_int(toks[i], dims[i]);
      }
      saw_data = true;
      if (header) {
        set.width1 = dims[0];
        set.height1 = dims[1];
        set.width2 = dims[2];
        set.height2 = dims[3];
        have_header = true;
        continue;
      }
    }
    std::array<double, 4> row{};
    for (int i = 0; i < 4; ++i) row[i] = parse_double(toks[i], lineno);
    const auto [it, inserted] = seen.emplace(row, lineno);
    if (!inserted) {
      throw ParseError(
          "duplicate pair (first at line " + std::to_string(it->second) + ")",
          lineno);
    }
    Correspondence c;
    c.x = HomogeneousPoint(row[0], row[1], 1.0);
    c.xp = HomogeneousPoint(row[2], row[3], 1.0);
    c.index = static_cast<int>(set.pairs.size());
    set.pairs.push_back(c);
    for (int i = 0; i < 4; ++i) max_coord[i] = std::max(max_coord[i], row[i]);
  }
  if (!have_header) {
    set.width1 = inferred_extent(max_coord[0]);
    set.height1 = inferred_extent(max_coord[1]);
    set.width2 = inferred_extent(max_coord[2]);
    set.height2 = inferred_extent(max_coord[3]);
  }
  return set;
}

void write_correspondences(const CorrespondenceSet& corrs,
                           const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << corrs.width1 << ' ' << corrs.height1 << ' ' << corrs.width2 << ' '
      << corrs.height2 << '\n';
  for (const Correspondence& c : corrs.pairs) {
    out << format_g17(c.x(0)) << ' ' << format_g17(c.x(1)) << ' '
        << format_g17(c.xp(0)) << ' ' << format_g17(c.xp(1)) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string report_to_json(const EstimateReport& report,
                           const EstimatorConfig& cfg,
                           const std::optional<MetricsReport>& metrics) {
  ordered_json j;
  j["schema"] = 1;
  j["fundamental"] = mat_rows_to_json(report.f.m);
  j["inliers"] = report.inlier_indices;
  j["method"] = method_label(report.method);
  j["success"] = report.success;
  j["samples_drawn"] = report.samples_drawn;
  j["hypothesis_evaluations"] = report.hypothesis_evaluations;
  if (report.step1) {
    const Step1Info& s = *report.step1;
    ordered_json js;
    js["homography"] = {s.homography.h(0, 0), s.homography.h(0, 1),
                        s.homography.h(1, 0), s.homography.h(1, 1)};
    ordered_json jm;
    jm["line1"] = vec_to_json(s.line_match.line1.coeffs);
    jm["line2"] = vec_to_json(s.line_match.line2.coeffs);
    jm["member_indices"] = s.line_match.member_indices;
    jm["score"] = s.line_match.score;
    js["line_match"] = jm;
    js["anchor_indices"] = s.anchor_indices;
    js["orientation_swapped"] = s.orientation_swapped;
    j["step1"] = js;
  } else {
    j["step1"] = nullptr;
  }
  j["residuals"] = {{"mean", report.mean_residual},
                    {"median", report.median_residual}};
  if (report.method == Method::Lmeds) {
    j["lmeds_low_confidence"] = report.lmeds_low_confidence;
  }
  ordered_json jc;
  jc["confidence"] = cfg.confidence;
  if (cfg.inlier_ratio) {
    jc["inlier_ratio"] = *cfg.inlier_ratio;
  } else {
    jc["inlier_ratio"] = "adaptive";
  }
  jc["t1"] = cfg.t1;
  jc["t2"] = cfg.t2;
  jc["variant"] = variant_label(cfg.variant);
  jc["fallback_inlier_ratio"] = cfg.fallback_inlier_ratio;
  jc["max_iterations"] = cfg.max_iterations;
  jc["min_success_inliers"] = cfg.min_success_inliers;
  jc["refit_on_inliers"] = cfg.refit_on_inliers;
  jc["sed_variant"] =
      cfg.sed_variant == SedVariant::MeanDistance ? "mean" : "squared_sum";
  ordered_json jh;
  jh["rho_step"] = cfg.hough.rho_step;
  jh["theta_step"] = cfg.hough.theta_step;
  jh["min_votes"] = cfg.hough.min_votes;
  jh["target_width"] = cfg.hough.target_width;
  jh["neighbor_distance"] = cfg.hough.neighbor_distance;
  jh["subsample"] = cfg.hough.subsample;
  jc["hough"] = jh;
  j["config"] = jc;
  j["seed"] = cfg.seed;
  if (metrics) {
    j["metrics"] = {{"pct_inliers", metrics->pct_inliers},
                    {"precision", metrics->precision},
                    {"recall", metrics->recall},
                    {"f_score", metrics->f_score},
                    {"mean_sed", metrics->mean_sed}};
  }
  return j.dump(2) + "\n";
}

void write_report(const EstimateReport& report, const EstimatorConfig& cfg,
                  const std::string& path,
                  const std::optional<MetricsReport>& metrics) {
  std::ofstream out = open_for_write(path);
  out << report_to_json(report, cfg, metrics);
  if (!out) throw std::runtime_error("failed writing " + path);
}

EstimateReport read_report(const std::string& path) {
  std::ifstream in = open_for_read(path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  EstimateReport rep;
  rep.f.m = json_to_mat3(j.at("fundamental"));
  rep.inlier_indices = j.at("inliers").get<std::vector<int>>();
  rep.method = method_from_label(j.at("method").get<std::string>());
  rep.success = j.at("success").get<bool>();
  rep.samples_drawn = j.at("samples_drawn").get<long>();
  rep.hypothesis_evaluations = j.at("hypothesis_evaluations").get<long>();
  if (!j.at("step1").is_null()) {
    const ordered_json& js = j.at("step1");
    Step1Info s;
    const auto& hh = js.at("homography");
    s.homography.h << hh.at(0).get<double>(), hh.at(1).get<double>(),
        hh.at(2).get<double>(), hh.at(3).get<double>();
    const ordered_json& jm = js.at("line_match");
    s.line_match.line1.coeffs = json_to_vec3(jm.at("line1"));
    s.line_match.line2.coeffs = json_to_vec3(jm.at("line2"));
    s.line_match.member_indices = jm.at("member_indices").get<std::vector<int>>();
    s.line_match.score = jm.at("score").get<int>();
    const auto& ja = js.at("anchor_indices");
    for (int i = 0; i < 3; ++i) s.anchor_indices[i] = ja.at(i).get<int>();
    s.orientation_swapped = js.at("orientation_swapped").get<bool>();
    rep.step1 = s;
  }
  rep.mean_residual = j.at("residuals").at("mean").get<double>();
  rep.median_residual = j.at("residuals").at("median").get<double>();
  if (j.contains("lmeds_low_confidence")) {
    rep.lmeds_low_confidence = j["lmeds_low_confidence"].get<bool>();
  }
  return rep;
}

std::string ground_truth_to_json(const GroundTruth& gt) {
  ordered_json j;
  j["schema"] = 1;
  j["fundamental"] = mat_rows_to_json(gt.f.m);
  j["e1"] = vec_to_json(gt.e1);
  j["e2"] = vec_to_json(gt.e2);
  ordered_json p1 = ordered_json::array(), p2 = ordered_json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      p1.push_back(gt.p1(r, c));
      p2.push_back(gt.p2(r, c));
    }
  }
  j["p1"] = p1;
  j["p2"] = p2;
  j["inlier_mask"] = gt.inlier_mask;
  j["line_member_mask"] = gt.line_member_mask;
  return j.dump(2) + "\n";
}

void write_ground_truth(const GroundTruth& gt, const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << ground_truth_to_json(gt);
  if (!out) throw std::runtime_error("failed writing " + path);
}

GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream in = open_for_read(path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  GroundTruth gt;
  gt.f.m = json_to_mat3(j.at("fundamental"));
  gt.e1 = json_to_vec3(j.at("e1"));
  gt.e2 = json_to_vec3(j.at("e2"));
  const auto& p1 = j.at("p1");
  const auto& p2 = j.at("p2");
  if (p1.size() != 12 || p2.size() != 12) {
    throw std::runtime_error("expected 12-entry camera matrices");
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      gt.p1(r, c) = p1[4 * r + c].get<double>();
      gt.p2(r, c) = p2[4 * r + c].get<double>();
    }
  }
  gt.inlier_mask = j.at("inlier_mask").get<std::vector<std::uint8_t>>();
  gt.line_member_mask = j.at("line_member_mask").get<std::vector<std::uint8_t>>();
  return gt;
}

std::string metrics_to_json(const MetricsReport& m) {
  ordered_json j;
  j["schema"] = 1;
  j["pct_inliers"] = m.pct_inliers;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f_score"] = m.f_score;
  j["mean_sed"] = m.mean_sed;
  return j.dump(2) + "\n";
}

void write_metrics(const MetricsReport& m, const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << metrics_to_json(m);
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace sepfm
