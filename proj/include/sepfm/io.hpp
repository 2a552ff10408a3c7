#pragma once

#include <optional>
#include <string>

#include "sepfm/estimator.hpp"
#include "sepfm/metrics.hpp"
#include "sepfm/synthetic.hpp"

namespace sepfm {

// Text format: one pair per line, "x1 y1 x2 y2", whitespace or comma
// separated, '#' starts a comment. An optional first data line of four bare
// integers >= 1 declares "width1 height1 width2 height2"; without it, each
// image's bounds are inferred as floor(max coordinate) + 1. Exact duplicate
// pairs are rejected. Throws ParseError with the offending line number.
CorrespondenceSet read_correspondences(const std::string& path);

// Writes the header line and then every pair with round-trip precision.
void write_correspondences(const CorrespondenceSet& corrs,
                           const std::string& path);

// Report serialization. Field layout is stable and key order fixed, so equal
// inputs produce byte-identical text. `metrics` appends an optional metrics
// object (used when ground truth was available at estimation time).
std::string report_to_json(const EstimateReport& report,
                           const EstimatorConfig& cfg,
                           const std::optional<MetricsReport>& metrics = {});
void write_report(const EstimateReport& report, const EstimatorConfig& cfg,
                  const std::string& path,
                  const std::optional<MetricsReport>& metrics = {});
EstimateReport read_report(const std::string& path);

std::string ground_truth_to_json(const GroundTruth& gt);
void write_ground_truth(const GroundTruth& gt, const std::string& path);
GroundTruth read_ground_truth(const std::string& path);

std::string metrics_to_json(const MetricsReport& m);
void write_metrics(const MetricsReport& m, const std::string& path);

}  // namespace sepfm
