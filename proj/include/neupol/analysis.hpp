#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace neupol::analysis {

struct ScanData {
  std::vector<double> positions_mm;  // strictly increasing
  std::vector<double> counts;
  double alpha_setting = 0.0;  // rad
  std::uint64_t seed = 0;
  std::string config_digest;

  void validate() const;  // >= 8 points; monotonic positions
};

struct FitResult {
  double offset = 0.0;         // A, counts
  double amplitude = 0.0;      // B >= 0, counts
  double period_mm = 0.0;      // P
  double phase_zero_mm = 0.0;  // x0, a maximum of the fitted fringe
  double contrast = 0.0;       // B/A
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // (A, B, P, x0)
  double sigma_offset = 0.0;
  double sigma_amplitude = 0.0;
  double sigma_period = 0.0;
  double sigma_phase_zero = 0.0;
  double sigma_contrast = 0.0;
  double chi_square_per_dof = 0.0;
  int iterations = 0;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least squares of y = A + B cos(2 pi (x - x0)/P). Period initialised by a
/// linearised grid search, then Gauss-Newton with Levenberg damping until the
/// relative parameter change drops below 1e-10 (at most 200 iterations).
/// Uncertainties come from the inverse normal matrix. Throws FitError on
/// constant data, an unidentifiable period, or non-convergence.
FitResult fit_sinusoid_samples(const std::vector<double>& xs,
                               const std::vector<double>& ys,
                               const std::vector<double>& weights = {});

/// Poisson-weighted fit of a counting scan, weight 1/max(count, 1).
FitResult fit_sinusoid(const ScanData& scan);

/// gamma = 2 pi (displacement - phase_zero)/period
double mm_to_gamma(double displacement_mm, const FitResult& fit);

/// Inverse of mm_to_gamma; round-trips to 1e-9 mm.
std::vector<double> positions_for_bell_angles(const FitResult& fit,
                                              const std::vector<double>& gammas);

}  // namespace neupol::analysis
