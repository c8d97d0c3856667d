#pragma once

#include <cstdint>
#include <vector>

#include "neupol/analysis.hpp"
#include "neupol/beamline.hpp"

namespace neupol::ensemble {

enum class SpreadShape { gaussian };

/// Mosaic-monochromator velocity passband: Gaussian with the stated FWHM as a
/// fraction of the mean. sample_count is the quadrature order (or the number
/// of Monte-Carlo draws when use_monte_carlo is set).
struct VelocityDistribution {
  double mean_wavelength = 1.99e-10;  // m
  double fractional_spread = 0.0;     // FWHM / mean, in [0, 0.2)
  SpreadShape shape = SpreadShape::gaussian;
  int sample_count = 64;
  std::uint64_t seed = 711;
  bool use_monte_carlo = false;

  void validate() const;
};

struct EnsembleResult {
  double effective_contrast = 0.0;
  double phase_offset = 0.0;  // rad, gamma of the stage zero
  double period_mm = 0.0;
  double phase_zero_mm = 0.0;
  std::vector<double> positions_mm;
  std::vector<double> mean_intensity;
};

/// Gauss-Hermite abscissae/weights for a standard normal: returns pairs
/// (z_i, w_i) with sum w_i = 1 and integral f ~= sum w_i f(z_i).
std::vector<std::pair<double, double>> gauss_hermite_normal(int order);

/// Deterministic fixed-order pairwise summation.
double pairwise_sum(const std::vector<double>& v);

/// Mean transmitted probability over the velocity distribution at the given
/// oscillator phase and stage displacement. Deterministic: quadrature by
/// default, seeded Monte-Carlo when requested.
double average_intensity(const beamline::BeamlineConfig& cfg,
                         const VelocityDistribution& dist, double phi_omega,
                         double delta_l);

/// Scan positions over [center - span/2, center + span/2], clamped into the
/// stage travel.
std::vector<double> scan_positions_mm(const beamline::BeamlineConfig& cfg,
                                      double center_mm, double span_mm,
                                      int points);

/// Noiseless gamma-scan positions (default window: 1.5 periods centred on the
/// working region) and mean intensities at alpha = 2*phi_omega.
std::vector<double> default_scan_positions_mm(const beamline::BeamlineConfig& cfg,
                                              int points = 24);
std::vector<double> scan_intensity(const beamline::BeamlineConfig& cfg,
                                   const VelocityDistribution& dist,
                                   double phi_omega,
                                   const std::vector<double>& positions_mm);

/// Contrast of the fitted noiseless gamma-scan.
EnsembleResult effective_contrast_detail(const beamline::BeamlineConfig& cfg,
                                         const VelocityDistribution& dist);
double effective_contrast(const beamline::BeamlineConfig& cfg,
                          const VelocityDistribution& dist);

/// Bisection on the spread so that effective_contrast matches the target to
/// 1e-3. Throws if the target cannot be reached within [0, 0.2).
double calibrate_spread_to_contrast(const beamline::BeamlineConfig& cfg,
                                    const VelocityDistribution& dist,
                                    double target_contrast);

}  // namespace neupol::ensemble
