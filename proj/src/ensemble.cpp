#include "neupol/ensemble.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "neupol/rng.hpp"

namespace neupol::ensemble {

void VelocityDistribution::validate() const {
  if (mean_wavelength <= 0.0) {
    throw std::invalid_argument("mean wavelength must be positive");
  }
  if (fractional_spread < 0.0 || fractional_spread >= 0.2) {
    throw std::invalid_argument("fractional spread must lie in [0, 0.2)");
  }
  if (sample_count < 1) throw std::invalid_argument("sample count must be >= 1");
}

std::vector<std::pair<double, double>> gauss_hermite_normal(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  // Golub-Welsch on the Hermite Jacobi matrix (weight e^{-x^2}); the first
  // eigenvector components squared are the normalized weights.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
  for (int k = 0; k + 1 < order; ++k) {
    const double b = std::sqrt((k + 1) / 2.0);
    j(k, k + 1) = b;
    j(k + 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<std::pair<double, double>> nodes(order);
  for (int i = 0; i < order; ++i) {
    const double w = es.eigenvectors()(0, i);
    // abscissa rescaled from weight e^{-x^2} to the standard normal
    nodes[i] = {es.eigenvalues()(i) * std::sqrt(2.0), w * w};
  }
  return nodes;
}

double pairwise_sum(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::vector<double> acc = v;
  std::size_t n = acc.size();
  while (n > 1) {
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) acc[i] = acc[2 * i] + acc[2 * i + 1];
    if (n % 2) acc[half] = acc[n - 1];
    n = half + (n % 2);
  }
  return acc[0];
}

double average_intensity(const beamline::BeamlineConfig& cfg,
                         const VelocityDistribution& dist, double phi_omega,
                         double delta_l) {
  dist.validate();
  const double v0 = beamline::velocity_from_wavelength(dist.mean_wavelength);
  if (dist.fractional_spread == 0.0) {
    return beamline::run_beamline_at(cfg, phi_omega, delta_l, v0);
  }
  const double sigma = dist.fractional_spread / kFwhmPerSigma;

  std::vector<double> terms;
  if (!dist.use_monte_carlo) {
    const auto nodes = gauss_hermite_normal(dist.sample_count);
    terms.reserve(nodes.size());
    double skipped = 0.0;
    for (const auto& [z, w] : nodes) {
      const double v = v0 * (1.0 + sigma * z);
      if (v <= 0.05 * v0) {  // tail weight at this point is ~e^{-60}
        skipped += w;
        continue;
      }
      terms.push_back(w * beamline::run_beamline_at(cfg, phi_omega, delta_l, v));
    }
    const double total = pairwise_sum(terms);
    return skipped > 0.0 ? total / (1.0 - skipped) : total;
  }

  Rng rng = Rng(dist.seed).stream(0x76656c6f63ull);
  const int n = dist.sample_count;
  terms.reserve(n);
  for (int i = 0; i < n; ++i) {
    double z = rng.gaussian();
    if (z > 6.0) z = 6.0;
    if (z < -6.0) z = -6.0;
    const double v = v0 * (1.0 + sigma * z);
    terms.push_back(beamline::run_beamline_at(cfg, phi_omega, delta_l, v));
  }
  return pairwise_sum(terms) / n;
}

std::vector<double> scan_positions_mm(const beamline::BeamlineConfig& cfg,
                                      double center_mm, double span_mm,
                                      int points) {
  if (points < 2) throw std::invalid_argument("scan needs at least 2 points");
  const double travel = cfg.stage_travel * 1e3;
  double lo = center_mm - span_mm / 2.0;
  double hi = center_mm + span_mm / 2.0;
  if (lo < -travel) {
    hi += -travel - lo;
    lo = -travel;
  }
  if (hi > travel) {
    lo -= hi - travel;
    hi = travel;
  }
  lo = std::max(lo, -travel);
  std::vector<double> xs(points);
  for (int i = 0; i < points; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  }
  return xs;
}

std::vector<double> default_scan_positions_mm(const beamline::BeamlineConfig& cfg,
                                              int points) {
  // 1.5 periods centred on the working region of the translation stage.
  const double p = beamline::gamma_period_mm(cfg);
  return scan_positions_mm(cfg, p / 2.0, 1.5 * p, points);
}

std::vector<double> scan_intensity(const beamline::BeamlineConfig& cfg,
                                   const VelocityDistribution& dist,
                                   double phi_omega,
                                   const std::vector<double>& positions_mm) {
  std::vector<double> ys;
  ys.reserve(positions_mm.size());
  for (double x : positions_mm) {
    ys.push_back(average_intensity(cfg, dist, phi_omega, x * 1e-3));
  }
  return ys;
}

EnsembleResult effective_contrast_detail(const beamline::BeamlineConfig& cfg,
                                         const VelocityDistribution& dist) {
  beamline::validate(cfg);
  EnsembleResult res;
  res.positions_mm = default_scan_positions_mm(cfg);
  res.mean_intensity = scan_intensity(cfg, dist, 0.0, res.positions_mm);
  const analysis::FitResult fit =
      analysis::fit_sinusoid_samples(res.positions_mm, res.mean_intensity);
  res.effective_contrast = fit.contrast;
  res.period_mm = fit.period_mm;
  res.phase_zero_mm = fit.phase_zero_mm;
  res.phase_offset = analysis::mm_to_gamma(0.0, fit);
  return res;
}

double effective_contrast(const beamline::BeamlineConfig& cfg,
                          const VelocityDistribution& dist) {
  return effective_contrast_detail(cfg, dist).effective_contrast;
}

double calibrate_spread_to_contrast(const beamline::BeamlineConfig& cfg,
                                    const VelocityDistribution& dist,
                                    double target_contrast) {
  if (!(target_contrast > 0.0 && target_contrast <= 1.0)) {
    throw std::invalid_argument("target contrast must lie in (0, 1]");
  }
  VelocityDistribution d = dist;
  d.fractional_spread = 0.0;
  const double c_full = effective_contrast(cfg, d);
  if (target_contrast >= c_full - 1e-9) return 0.0;

  double lo = 0.0, hi = 0.199;
  d.fractional_spread = hi;
  double c_hi;
  try {
    c_hi = effective_contrast(cfg, d);
  } catch (const analysis::FitError&) {
    c_hi = 0.0;  // fringe fully washed out at the bracket edge
  }
  if (target_contrast < c_hi) {
    throw std::domain_error("target contrast unreachable within spread bounds");
  }
  double mid = 0.0;
  for (int it = 0; it < 60; ++it) {
    mid = 0.5 * (lo + hi);
    d.fractional_spread = mid;
    const double c = effective_contrast(cfg, d);
    if (std::abs(c - target_contrast) < 1e-4) return mid;
    (c > target_contrast ? lo : hi) = mid;
    if (hi - lo < 1e-9) break;
  }
  d.fractional_spread = mid;
  if (std::abs(effective_contrast(cfg, d) - target_contrast) > 1e-3) {
    throw std::domain_error("contrast calibration did not converge");
  }
  return mid;
}

}  // namespace neupol::ensemble
