#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "neupol/ensemble.hpp"
#include "neupol/qstate.hpp"
#include "neupol/rng.hpp"

namespace neupol::counting {

/// Closed-form count-rate model N(alpha, gamma) = N0/2 (1 + C cos(alpha -
/// gamma)) + background. The systematic bound feeds per-run offsets of the
/// four spin-phase dial values, drawn uniformly in [-max, +max].
struct RateModel {
  double peak_counts = 32000.0;        // N0
  double contrast = 0.838;             // C
  double systematic_alpha_max = 2.0 * kPi / 180.0;  // rad
  double background = 0.0;             // counts per point

  void validate() const;
};

double expected_counts(const RateModel& model, double alpha, double gamma);

/// Poisson draw, deterministic per rng state.
long long sample_counts(double mean, Rng& rng);

/// The four count totals of one expectation value: indices
/// 0:(a,g) 1:(a+pi,g+pi) 2:(a,g+pi) 3:(a+pi,g).
struct SettingQuad {
  double alpha = 0.0;
  double gamma = 0.0;
  std::array<double, 4> counts{};  // real-valued to allow noise-free runs
};

struct Expectation {
  double value = 0.0;
  double sigma = 0.0;
};

/// E = (a + b - c - d)/T with first-order Poisson propagation
/// sigma_E^2 = sum_i (dE/dN_i)^2 N_i. Throws on zero total counts.
Expectation expectation_from_counts(const SettingQuad& quad);

enum class CountSource { model, beamline };

struct BellOptions {
  int repetitions = 3;
  bool noise = true;
  CountSource source = CountSource::model;
  std::uint64_t seed = 12345;
};

struct BellRun {
  qstate::BellAngles angles;
  int repetitions = 0;
  std::array<SettingQuad, 4> quads;  // order (a1,g1) (a2,g1) (a1,g2) (a2,g2)
  std::array<double, 4> expectation{};
  std::array<double, 4> sigma_expectation{};
  double s_value = 0.0;
  double sigma_s = 0.0;
  double significance = 0.0;  // (S - 2)/sigma_S
  double contrast = 0.0;      // model contrast or fitted scan contrast
  std::array<double, 4> dial_offsets{};  // applied systematic alpha errors
  /// per-repetition counts, index ((rep*4 + quad)*4 + setting)
  std::vector<double> per_rep_counts;
};

/// Simulates the 16-setting correlation measurement. Count means come either
/// from the closed-form model or from the velocity-averaged pipeline (with the
/// stage positions located from a fitted calibration scan). Deterministic per
/// seed.
BellRun run_bell_experiment(const beamline::BeamlineConfig& cfg,
                            const ensemble::VelocityDistribution& dist,
                            const RateModel& model,
                            const qstate::BellAngles& angles,
                            const BellOptions& options);

double violation_significance(double s_value, double sigma_s);

struct ThresholdsReport {
  double contrast = 0.0;
  double contrast_critical = 0.0;    // sqrt(2)/2
  double contrast_margin = 0.0;
  bool contrast_above = false;
  double efficiency = 0.0;
  double efficiency_critical = 0.0;  // 2(sqrt(2)-1)
  double efficiency_margin = 0.0;
  bool efficiency_above = false;
};

ThresholdsReport thresholds_report(double contrast, double detector_efficiency);

}  // namespace neupol::counting
