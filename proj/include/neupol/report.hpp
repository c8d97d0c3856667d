#pragma once

#include <string>
#include <vector>

#include "neupol/analysis.hpp"
#include "neupol/counting.hpp"

namespace neupol::report {

struct CountRow {
  double alpha = 0.0;
  double gamma = 0.0;
  int repetition = 0;
  double counts = 0.0;
};

struct ScanRow {
  double position_mm = 0.0;
  double gamma = 0.0;
  double expected_counts = 0.0;
  double sampled_counts = 0.0;
};

/// header: alpha_rad,gamma_rad,repetition,counts
void write_counts_csv(const std::string& path, const std::vector<CountRow>& rows);

/// Accepts the emitted schema and the 3-column variant without a repetition
/// column; throws on anything else.
std::vector<CountRow> read_counts_csv(const std::string& path);

/// header: position_mm,gamma_rad,expected_counts,sampled_counts
void write_scan_csv(const std::string& path, const std::vector<ScanRow>& rows);

/// Rebuild the four expectation values and S from raw setting counts.
/// Throws on incomplete quads or malformed settings.
counting::BellRun analyze_counts(const std::vector<CountRow>& rows);

/// Per-setting rows of a finished run, repetition-major deterministic order.
std::vector<CountRow> bell_rows(const counting::BellRun& run);

std::string bell_report_json(const counting::BellRun& run,
                             const counting::ThresholdsReport& thresholds,
                             std::uint64_t seed);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace neupol::report
