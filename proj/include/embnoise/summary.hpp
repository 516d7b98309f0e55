#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "embnoise/runner.hpp"

namespace embnoise {

/// Mean and sample standard deviation of test accuracy over seeds for one
/// (dataset, method, noise, eta) cell. Failed trials are excluded from the
/// statistics and mark the cell incomplete.
struct SummaryRow {
  std::string dataset;
  std::string method;
  std::string noise;
  double eta = 0.0;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double mean = 0.0;
  double std = 0.0;  // 0 when n_ok < 2
  bool incomplete = false;
  bool single_seed = false;
};

/// `expected_seeds` > 0 also marks cells with missing trials incomplete.
std::vector<SummaryRow> summarize(std::vector<TrialResult> results, std::size_t expected_seeds = 0);

std::string format_summary_csv(const std::vector<SummaryRow>& rows);

/// Tables of "mean ± std" in percent with one decimal, one row per
/// (dataset, method, noise) and one column per eta.
std::string format_summary_table(const std::vector<SummaryRow>& rows);

struct CurvePoint {
  std::string method;
  double eta = 0.0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  std::string dataset;
  std::string noise;
};

/// Per-method (eta, mean, std) series, sorted by (method, eta, dataset, noise).
std::vector<CurvePoint> curve_export(const std::vector<TrialResult>& results);
std::string format_curves_csv(const std::vector<CurvePoint>& points);

}  // namespace embnoise
