#include "neupol/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "neupol/constants.hpp"

namespace neupol::analysis {

namespace {

struct Linearised {
  double offset, bc, bs, chi2;
};

// Linear least squares of y on {1, cos(w u), sin(w u)} for a fixed period.
Linearised linear_fit(const std::vector<double>& us, const std::vector<double>& ys,
                      const std::vector<double>& ws, double period) {
  const double w = 2.0 * kPi / period;
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < us.size(); ++i) {
    const Eigen::Vector3d row(1.0, std::cos(w * us[i]), std::sin(w * us[i]));
    m += ws[i] * row * row.transpose();
    v += ws[i] * ys[i] * row;
  }
  const Eigen::Vector3d p = m.ldlt().solve(v);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double r = ys[i] - (p[0] + p[1] * std::cos(w * us[i]) + p[2] * std::sin(w * us[i]));
    chi2 += ws[i] * r * r;
  }
  return {p[0], p[1], p[2], chi2};
}

double weighted_chi2(const std::vector<double>& us, const std::vector<double>& ys,
                     const std::vector<double>& ws, const Eigen::Vector4d& p) {
  const double w = 2.0 * kPi / p[2];
  double chi2 = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double r = ys[i] - (p[0] + p[1] * std::cos(w * (us[i] - p[3])));
    chi2 += ws[i] * r * r;
  }
  return chi2;
}

}  // namespace

void ScanData::validate() const {
  if (positions_mm.size() != counts.size()) {
    throw FitError("positions and counts differ in length");
  }
  if (positions_mm.size() < 8) throw FitError("need at least 8 scan points");
  for (std::size_t i = 1; i < positions_mm.size(); ++i) {
    if (!(positions_mm[i] > positions_mm[i - 1])) {
      throw FitError("positions must be strictly increasing");
    }
  }
}

FitResult fit_sinusoid_samples(const std::vector<double>& xs,
                               const std::vector<double>& ys,
                               const std::vector<double>& weights) {
  if (xs.size() != ys.size()) throw FitError("positions and counts differ in length");
  const std::size_t n = xs.size();
  if (n < 8) throw FitError("need at least 8 scan points");
  std::vector<double> ws = weights;
  if (ws.empty()) ws.assign(n, 1.0);
  if (ws.size() != n) throw FitError("weight vector length mismatch");

  const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  if (*hi == *lo) throw FitError("constant data: zero amplitude, period unidentifiable");

  // Centre positions for conditioning; results are mapped back at the end.
  double wsum = 0.0, xbar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += ws[i];
    xbar += ws[i] * xs[i];
  }
  xbar /= wsum;
  std::vector<double> us(n);
  for (std::size_t i = 0; i < n; ++i) us[i] = xs[i] - xbar;
  const double span = xs.back() - xs.front();
  if (span <= 0.0) throw FitError("scan has zero span");

  // Flat-model baseline.
  double ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) ybar += ws[i] * ys[i];
  ybar /= wsum;
  double flat = 0.0;
  for (std::size_t i = 0; i < n; ++i) flat += ws[i] * (ys[i] - ybar) * (ys[i] - ybar);

  // Period grid (log-spaced), linearised fit per candidate.
  double best_chi2 = flat;
  double best_period = 0.0;
  Linearised best{ybar, 0.0, 0.0, flat};
  const double p_min = std::max(span / 8.0, 4.0 * span / static_cast<double>(n));
  const double p_max = 2.0 * span;
  const int grid = 400;
  for (int k = 0; k < grid; ++k) {
    const double period =
        p_min * std::pow(p_max / p_min, static_cast<double>(k) / (grid - 1));
    const Linearised lf = linear_fit(us, ys, ws, period);
    if (lf.chi2 < best_chi2) {
      best_chi2 = lf.chi2;
      best_period = period;
      best = lf;
    }
  }
  if (best_period == 0.0 || best_chi2 > 0.999999 * flat) {
    throw FitError("no oscillation found: period unidentifiable");
  }

  // Parameters (A, B, P, x0) in centred coordinates.
  Eigen::Vector4d p;
  p[0] = best.offset;
  p[1] = std::hypot(best.bc, best.bs);
  p[2] = best_period;
  p[3] = std::atan2(best.bs, best.bc) * best_period / (2.0 * kPi);

  double chi2 = weighted_chi2(us, ys, ws, p);
  double lambda = 1e-3;
  int iters = 0;
  bool converged = false;
  Eigen::Matrix4d normal = Eigen::Matrix4d::Zero();
  for (; iters < 200; ++iters) {
    const double w = 2.0 * kPi / p[2];
    normal.setZero();
    Eigen::Vector4d grad_v = Eigen::Vector4d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double du = us[i] - p[3];
      const double th = w * du;
      const double c = std::cos(th), s = std::sin(th);
      Eigen::Vector4d j;
      j[0] = 1.0;
      j[1] = c;
      j[2] = p[1] * s * du * 2.0 * kPi / (p[2] * p[2]);
      j[3] = p[1] * s * w;
      const double r = ys[i] - (p[0] + p[1] * c);
      normal += ws[i] * j * j.transpose();
      grad_v += ws[i] * r * j;
    }
    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix4d damped = normal;
      for (int d = 0; d < 4; ++d) damped(d, d) *= (1.0 + lambda);
      const Eigen::Vector4d delta = damped.ldlt().solve(grad_v);
      const Eigen::Vector4d trial = p + delta;
      if (trial[2] > 0.0) {
        const double trial_chi2 = weighted_chi2(us, ys, ws, trial);
        if (trial_chi2 <= chi2 + 1e-12 * (1.0 + chi2)) {
          double rel = 0.0;
          for (int d = 0; d < 4; ++d) {
            rel = std::max(rel, std::abs(delta[d]) / std::max(std::abs(p[d]), 1e-6));
          }
          p = trial;
          chi2 = trial_chi2;
          lambda = std::max(lambda / 3.0, 1e-12);
          stepped = true;
          if (rel < 1e-10) converged = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (converged) break;
    if (!stepped) {
      converged = true;  // stuck at a minimum the damping cannot improve
      break;
    }
  }
  if (!converged) throw FitError("fit did not converge");

  // Canonical form: B >= 0, x0 at the maximum closest to the scan centre.
  if (p[1] < 0.0) {
    p[1] = -p[1];
    p[3] += p[2] / 2.0;
  }
  p[3] -= p[2] * std::round(p[3] / p[2]);

  // Covariance from the undamped normal matrix at the optimum.
  {
    const double w = 2.0 * kPi / p[2];
    normal.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const double du = us[i] - p[3];
      const double th = w * du;
      Eigen::Vector4d j;
      j[0] = 1.0;
      j[1] = std::cos(th);
      j[2] = p[1] * std::sin(th) * du * 2.0 * kPi / (p[2] * p[2]);
      j[3] = p[1] * std::sin(th) * w;
      normal += ws[i] * j * j.transpose();
    }
  }

  FitResult out;
  out.offset = p[0];
  out.amplitude = p[1];
  out.period_mm = p[2];
  out.phase_zero_mm = p[3] + xbar;
  out.covariance = normal.inverse();
  out.sigma_offset = std::sqrt(std::max(out.covariance(0, 0), 0.0));
  out.sigma_amplitude = std::sqrt(std::max(out.covariance(1, 1), 0.0));
  out.sigma_period = std::sqrt(std::max(out.covariance(2, 2), 0.0));
  out.sigma_phase_zero = std::sqrt(std::max(out.covariance(3, 3), 0.0));
  if (out.offset <= 0.0) throw FitError("fitted offset is not positive");
  out.contrast = out.amplitude / out.offset;
  const double dA = -out.amplitude / (out.offset * out.offset);
  const double dB = 1.0 / out.offset;
  out.sigma_contrast = std::sqrt(std::max(
      dA * dA * out.covariance(0, 0) + dB * dB * out.covariance(1, 1) +
          2.0 * dA * dB * out.covariance(0, 1),
      0.0));
  const int dof = static_cast<int>(n) - 4;
  out.chi_square_per_dof = dof > 0 ? chi2 / dof : 0.0;
  out.iterations = iters;

  if (span < out.period_mm) {
    throw FitError("scan spans less than one fitted period");
  }
  return out;
}

FitResult fit_sinusoid(const ScanData& scan) {
  scan.validate();
  std::vector<double> ws(scan.counts.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    ws[i] = 1.0 / std::max(scan.counts[i], 1.0);  // Poisson weight, floored
  }
  return fit_sinusoid_samples(scan.positions_mm, scan.counts, ws);
}

double mm_to_gamma(double displacement_mm, const FitResult& fit) {
  if (!(fit.period_mm > 0.0)) throw FitError("invalid fit: nonpositive period");
  return 2.0 * kPi * (displacement_mm - fit.phase_zero_mm) / fit.period_mm;
}

std::vector<double> positions_for_bell_angles(const FitResult& fit,
                                              const std::vector<double>& gammas) {
  if (!(fit.period_mm > 0.0)) throw FitError("invalid fit: nonpositive period");
  std::vector<double> out;
  out.reserve(gammas.size());
  for (double g : gammas) {
    out.push_back(fit.phase_zero_mm + fit.period_mm * g / (2.0 * kPi));
  }
  return out;
}

}  // namespace neupol::analysis
