#include "neupol/counting.hpp"

#include <cmath>
#include <stdexcept>

#include "neupol/analysis.hpp"

namespace neupol::counting {

void RateModel::validate() const {
  if (peak_counts <= 0.0) throw std::invalid_argument("peak counts must be positive");
  if (contrast < 0.0 || contrast > 1.0) {
    throw std::invalid_argument("contrast must lie in [0, 1]");
  }
  if (background < 0.0) throw std::invalid_argument("background must be >= 0");
  if (systematic_alpha_max < 0.0) {
    throw std::invalid_argument("systematic bound must be >= 0");
  }
}

double expected_counts(const RateModel& model, double alpha, double gamma) {
  model.validate();
  return model.peak_counts * 0.5 * (1.0 + model.contrast * std::cos(alpha - gamma)) +
         model.background;
}

long long sample_counts(double mean, Rng& rng) {
  if (mean < 0.0) throw std::invalid_argument("count mean must be >= 0");
  return rng.poisson(mean);
}

Expectation expectation_from_counts(const SettingQuad& quad) {
  for (double c : quad.counts) {
    if (c < 0.0) throw std::invalid_argument("counts must be >= 0");
  }
  const double a = quad.counts[0], b = quad.counts[1];
  const double c = quad.counts[2], d = quad.counts[3];
  const double total = a + b + c + d;
  if (total <= 0.0) throw std::invalid_argument("quad has zero total counts");
  Expectation e;
  e.value = (a + b - c - d) / total;
  const double t2 = total * total;
  const double dplus = 2.0 * (c + d) / t2;   // dE/da = dE/db
  const double dminus = 2.0 * (a + b) / t2;  // -dE/dc = -dE/dd
  e.sigma = std::sqrt(dplus * dplus * (a + b) + dminus * dminus * (c + d));
  return e;
}

namespace {

// Stage position for a gamma label, reduced into [0, period) so every setting
// stays within the travel and near the calibrated scan window.
double stage_position_mm(double zero_mm, double period_mm, double gamma) {
  double x = zero_mm + period_mm * gamma / (2.0 * kPi);
  x -= period_mm * std::floor(x / period_mm);
  return x;
}

}  // namespace

BellRun run_bell_experiment(const beamline::BeamlineConfig& cfg,
                            const ensemble::VelocityDistribution& dist,
                            const RateModel& model,
                            const qstate::BellAngles& angles,
                            const BellOptions& options) {
  model.validate();
  if (options.repetitions < 1) {
    throw std::invalid_argument("repetitions must be >= 1");
  }

  BellRun run;
  run.angles = angles;
  run.repetitions = options.repetitions;

  // One systematic offset per spin-phase dial (a1, a1+pi, a2, a2+pi),
  // fixed for the whole run.
  Rng master(options.seed);
  if (model.systematic_alpha_max > 0.0) {
    Rng dial_rng = master.stream(0x6469616cull);
    for (auto& d : run.dial_offsets) {
      d = dial_rng.uniform(-model.systematic_alpha_max, model.systematic_alpha_max);
    }
  }

  // Calibration for the pipeline-backed source: locate the stage positions of
  // the gamma settings from a fitted noiseless scan, then quote the contrast
  // of a second scan centred on those positions (the fringe visibility drifts
  // slowly with the total phase winding, so the local value is the one the
  // estimator sees).
  double zero_mm = 0.0, period_mm = 0.0;
  if (options.source == CountSource::beamline) {
    const ensemble::EnsembleResult cal = ensemble::effective_contrast_detail(cfg, dist);
    zero_mm = cal.phase_zero_mm;
    period_mm = cal.period_mm;

    double center = 0.0;
    const double setting_gammas[4] = {angles.gamma1, angles.gamma2,
                                      angles.gamma1 + kPi, angles.gamma2 + kPi};
    for (double g : setting_gammas) center += stage_position_mm(zero_mm, period_mm, g);
    center /= 4.0;
    const auto xs = ensemble::scan_positions_mm(cfg, center, 1.2 * period_mm, 24);
    const auto ys = ensemble::scan_intensity(cfg, dist, 0.0, xs);
    run.contrast = analysis::fit_sinusoid_samples(xs, ys).contrast;
  } else {
    run.contrast = model.contrast;
  }

  const double alphas[2] = {angles.alpha1, angles.alpha2};
  const double gammas[2] = {angles.gamma1, angles.gamma2};
  const int quad_alpha[4] = {0, 1, 0, 1};  // (a1,g1) (a2,g1) (a1,g2) (a2,g2)
  const int quad_gamma[4] = {0, 0, 1, 1};
  run.per_rep_counts.assign(static_cast<std::size_t>(options.repetitions) * 16, 0.0);

  for (int q = 0; q < 4; ++q) {
    SettingQuad& quad = run.quads[q];
    quad.alpha = alphas[quad_alpha[q]];
    quad.gamma = gammas[quad_gamma[q]];
    for (int k = 0; k < 4; ++k) {
      // k: 0=(a,g) 1=(a+pi,g+pi) 2=(a,g+pi) 3=(a+pi,g)
      const bool alpha_perp = (k == 1 || k == 3);
      const bool gamma_perp = (k == 1 || k == 2);
      const double alpha_set = quad.alpha + (alpha_perp ? kPi : 0.0);
      const double gamma_set = quad.gamma + (gamma_perp ? kPi : 0.0);
      const int dial = 2 * quad_alpha[q] + (alpha_perp ? 1 : 0);
      const double alpha_eff = alpha_set + run.dial_offsets[dial];

      double mean;
      if (options.source == CountSource::model) {
        mean = expected_counts(model, alpha_eff, gamma_set);
      } else {
        const double x = stage_position_mm(zero_mm, period_mm, gamma_set);
        mean = model.peak_counts *
                   ensemble::average_intensity(cfg, dist, alpha_eff / 2.0, x * 1e-3) +
               model.background;
      }

      double total = 0.0;
      for (int rep = 0; rep < options.repetitions; ++rep) {
        double value;
        if (options.noise) {
          Rng rng = master.stream(q, k, rep);
          value = static_cast<double>(sample_counts(mean, rng));
        } else {
          value = mean;
        }
        run.per_rep_counts[(static_cast<std::size_t>(rep) * 4 + q) * 4 + k] = value;
        total += value;
      }
      quad.counts[k] = total;
    }
    const Expectation e = expectation_from_counts(quad);
    run.expectation[q] = e.value;
    run.sigma_expectation[q] = e.sigma;
  }

  run.s_value = qstate::chsh_value(run.expectation[0], run.expectation[1],
                                   run.expectation[2], run.expectation[3]);
  double var = 0.0;
  for (double s : run.sigma_expectation) var += s * s;
  run.sigma_s = std::sqrt(var);
  run.significance = run.sigma_s > 0.0 ? (run.s_value - 2.0) / run.sigma_s : 0.0;
  return run;
}

double violation_significance(double s_value, double sigma_s) {
  if (!(sigma_s > 0.0)) throw std::invalid_argument("sigma_S must be positive");
  return (s_value - 2.0) / sigma_s;
}

ThresholdsReport thresholds_report(double contrast, double detector_efficiency) {
  if (contrast < 0.0 || contrast > 1.0 || detector_efficiency < 0.0 ||
      detector_efficiency > 1.0) {
    throw std::invalid_argument("thresholds inputs must lie in [0, 1]");
  }
  ThresholdsReport r;
  r.contrast = contrast;
  r.contrast_critical = std::sqrt(2.0) / 2.0;
  r.contrast_margin = contrast - r.contrast_critical;
  r.contrast_above = r.contrast_margin > 0.0;
  r.efficiency = detector_efficiency;
  r.efficiency_critical = 2.0 * (std::sqrt(2.0) - 1.0);
  r.efficiency_margin = detector_efficiency - r.efficiency_critical;
  r.efficiency_above = r.efficiency_margin > 0.0;
  return r;
}

}  // namespace neupol::counting
