#include "neupol/beamline.hpp"

#include <cmath>
#include <stdexcept>

namespace neupol::beamline {

using qstate::Complex;

NeutronKinematics NeutronKinematics::from_wavelength(double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("wavelength must be positive");
  return NeutronKinematics{lambda, kHOverMn / lambda};
}

void NeutronKinematics::validate() const {
  if (wavelength <= 0.0 || velocity <= 0.0) {
    throw std::invalid_argument("kinematics must be positive");
  }
  const double v = kHOverMn / wavelength;
  if (std::abs(velocity - v) > 1e-9 * v) {
    throw std::invalid_argument("wavelength and velocity violate the de Broglie relation");
  }
}

double velocity_from_wavelength(double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("wavelength must be positive");
  return kHOverMn / lambda;
}

double resonance_frequency(double b0) {
  if (b0 <= 0.0) throw std::invalid_argument("guide field must be positive");
  return 2.0 * kNeutronMoment * b0 / kHbar;
}

double rf_amplitude_for_pi_flip(double coil_length, double velocity) {
  if (coil_length <= 0.0 || velocity <= 0.0) {
    throw std::invalid_argument("coil length and velocity must be positive");
  }
  const double tau = coil_length / velocity;
  return kPi * kHbar / (2.0 * tau * kNeutronMoment);
}

double BeamlineConfig::rf_omega() const {
  for (const auto& e : elements) {
    if (const auto* f = std::get_if<RfFlipper>(&e.kind)) return f->frequency;
  }
  throw std::logic_error("config has no RF flipper");
}

BeamlineConfig make_standard_config(const BeamlineGeometry& g, bool with_dc_pi) {
  BeamlineConfig cfg;
  cfg.guide_field = g.guide_field;
  cfg.stage_travel = g.stage_travel;
  cfg.kinematics = NeutronKinematics::from_wavelength(g.wavelength);

  const RfFlipper flipper{g.rf_omega, 0.0, g.coil_length, g.flip_efficiency};
  const double edge = g.coil_length / 2.0;
  double x = 0.0;
  cfg.elements.push_back({Polarizer{}, x});
  cfg.elements.push_back({DcPi2{+1}, x += 0.03});
  cfg.elements.push_back({flipper, x += 0.05});
  // drift positions mark the start of the precession segment
  cfg.elements.push_back({GuideFieldDrift{g.guide_field, g.flipper_separation},
                          x += edge});
  cfg.elements.push_back({flipper, x += g.flipper_separation + edge});
  if (with_dc_pi) cfg.elements.push_back({DcPi{}, x += 0.02});
  cfg.elements.push_back({GuideFieldDrift{g.guide_field, g.analyzer_arm},
                          x += edge});
  cfg.elements.push_back({DcPi2{-1}, x += g.analyzer_arm + edge});
  cfg.elements.push_back({Analyzer{}, x += 0.03});

  validate(cfg);
  return cfg;
}

void validate(const BeamlineConfig& cfg) {
  cfg.kinematics.validate();
  if (std::abs(cfg.stage_displacement) > cfg.stage_travel) {
    throw std::invalid_argument("stage displacement exceeds travel");
  }

  // Accepted orders: the canonical pipeline, with or without the DcPi.
  const auto kinds = [&] {
    std::vector<int> v;
    for (const auto& e : cfg.elements) v.push_back(static_cast<int>(e.kind.index()));
    return v;
  }();
  const std::vector<int> with_pi = {0, 1, 2, 3, 2, 4, 3, 1, 5};
  const std::vector<int> without_pi = {0, 1, 2, 3, 2, 3, 1, 5};
  if (kinds != with_pi && kinds != without_pi) {
    throw std::invalid_argument("element order does not match the pipeline layout");
  }

  double prev = -1e300;
  double freq = 0.0;
  int drifts = 0;
  for (const auto& e : cfg.elements) {
    if (!(e.position > prev)) {
      throw std::invalid_argument("element positions must be strictly increasing");
    }
    prev = e.position;
    if (const auto* f = std::get_if<RfFlipper>(&e.kind)) {
      if (f->frequency <= 0.0 || f->coil_length <= 0.0) {
        throw std::invalid_argument("flipper frequency and coil length must be positive");
      }
      if (f->efficiency < 0.0 || f->efficiency > 1.0) {
        throw std::invalid_argument("flip efficiency must lie in [0, 1]");
      }
      if (freq == 0.0) {
        freq = f->frequency;
      } else if (f->frequency != freq) {
        throw std::invalid_argument("all RF flippers must share one frequency");
      }
    } else if (const auto* d = std::get_if<GuideFieldDrift>(&e.kind)) {
      // first drift stretches with the stage, second shrinks
      const double len =
          d->length + (drifts == 0 ? cfg.stage_displacement : -cfg.stage_displacement);
      ++drifts;
      if (len <= 0.0) throw std::invalid_argument("drift length must stay positive");
      if (d->b0 <= 0.0) throw std::invalid_argument("guide field must be positive");
    }
  }
}

JointState apply_dc_pi2(const JointState& state, int sign) {
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument("dc pi/2 sign must be +1 or -1");
  }
  const double c = std::cos(kPi / 4.0);
  const double s = static_cast<double>(sign) * std::sin(kPi / 4.0);
  JointState out(state.omega(), state.n_max());
  for (int n = -state.n_max(); n <= state.n_max(); ++n) {
    const Complex up = state.amplitude(Spin::up, n);
    const Complex dn = state.amplitude(Spin::down, n);
    out.set_amplitude(Spin::up, n, c * up - s * dn);
    out.set_amplitude(Spin::down, n, s * up + c * dn);
  }
  return out;
}

JointState apply_rf_flipper(const JointState& state, double phi_omega,
                            double efficiency) {
  if (efficiency < 0.0 || efficiency > 1.0) {
    throw std::invalid_argument("flip efficiency must lie in [0, 1]");
  }
  const int n_max = state.n_max();
  // Boundary amplitudes have no partner level to flip into.
  if (std::abs(state.amplitude(Spin::up, -n_max)) > 1e-14 ||
      std::abs(state.amplitude(Spin::down, n_max)) > 1e-14) {
    throw std::domain_error("rf flip would populate |n| > n_max (truncation overflow)");
  }
  const double c = std::sqrt(1.0 - efficiency * efficiency);
  const Complex fe = Complex(0.0, -1.0) * efficiency * std::exp(Complex(0.0, phi_omega));
  const Complex fa = Complex(0.0, -1.0) * efficiency * std::exp(Complex(0.0, -phi_omega));
  JointState out(state.omega(), n_max);
  // Unitary on each pair {|up,n>, |down,n-1>}.
  for (int n = -n_max + 1; n <= n_max; ++n) {
    const Complex a = state.amplitude(Spin::up, n);
    const Complex b = state.amplitude(Spin::down, n - 1);
    out.set_amplitude(Spin::up, n, c * a + fa * b);
    out.set_amplitude(Spin::down, n - 1, fe * a + c * b);
  }
  return out;
}

JointState apply_guide_field_drift(const JointState& state, double b0,
                                   double length, double velocity) {
  if (length < 0.0 || velocity <= 0.0) {
    throw std::invalid_argument("drift length must be >= 0 and velocity positive");
  }
  const double t = length / velocity;
  const double larmor = resonance_frequency(b0) * t;  // omega_L * t
  JointState out(state.omega(), state.n_max());
  for (int n = -state.n_max(); n <= state.n_max(); ++n) {
    const double ladder = -n * state.omega() * t;
    out.set_amplitude(Spin::up, n,
                      state.amplitude(Spin::up, n) *
                          std::exp(Complex(0.0, -0.5 * larmor + ladder)));
    out.set_amplitude(Spin::down, n,
                      state.amplitude(Spin::down, n) *
                          std::exp(Complex(0.0, +0.5 * larmor + ladder)));
  }
  return out;
}

JointState apply_dc_pi(const JointState& state) {
  const Complex mi(0.0, -1.0);
  JointState out(state.omega(), state.n_max());
  for (int n = -state.n_max(); n <= state.n_max(); ++n) {
    out.set_amplitude(Spin::up, n, mi * state.amplitude(Spin::down, n));
    out.set_amplitude(Spin::down, n, mi * state.amplitude(Spin::up, n));
  }
  return out;
}

JointState apply_polarizer(const JointState& state) {
  JointState out(state.omega(), state.n_max());
  for (int n = -state.n_max(); n <= state.n_max(); ++n) {
    out.set_amplitude(Spin::up, n, state.amplitude(Spin::up, n));
  }
  return out;
}

double analyze_up(const JointState& state) {
  double p = 0.0;
  for (int n = -state.n_max(); n <= state.n_max(); ++n) {
    p += std::norm(state.amplitude(Spin::up, n));
  }
  return p;
}

double run_beamline_at(const BeamlineConfig& cfg, double phi_omega,
                       double delta_l, double velocity) {
  if (velocity <= 0.0) throw std::invalid_argument("velocity must be positive");
  if (std::abs(delta_l) > cfg.stage_travel) {
    throw std::invalid_argument("stage displacement exceeds travel");
  }

  JointState state = JointState::basis(Spin::up, 0, cfg.rf_omega());
  int flippers = 0;
  int drifts = 0;
  for (const auto& e : cfg.elements) {
    if (std::holds_alternative<Polarizer>(e.kind)) {
      state = apply_polarizer(state);
    } else if (const auto* t = std::get_if<DcPi2>(&e.kind)) {
      state = apply_dc_pi2(state, t->sign);
    } else if (const auto* f = std::get_if<RfFlipper>(&e.kind)) {
      const double phi = (++flippers == 2) ? phi_omega : f->phase;
      state = apply_rf_flipper(state, phi, f->efficiency);
    } else if (const auto* d = std::get_if<GuideFieldDrift>(&e.kind)) {
      const double len = d->length + (drifts++ == 0 ? delta_l : -delta_l);
      state = apply_guide_field_drift(state, d->b0, len, velocity);
    } else if (std::holds_alternative<DcPi>(e.kind)) {
      state = apply_dc_pi(state);
    } else {
      return analyze_up(state);
    }
  }
  throw std::logic_error("pipeline has no analyzer");
}

double run_beamline(const BeamlineConfig& cfg, double phi_omega) {
  validate(cfg);
  return run_beamline_at(cfg, phi_omega, cfg.stage_displacement,
                         cfg.kinematics.velocity);
}

double gamma_period_mm(const BeamlineConfig& cfg) {
  return 1000.0 * kPi * cfg.kinematics.velocity / cfg.rf_omega();
}

double energy_phase_slope(const BeamlineConfig& cfg) {
  return 2.0 * cfg.rf_omega() / cfg.kinematics.velocity;
}

double fringe_phase(const BeamlineConfig& cfg, double delta_l) {
  const double v = cfg.kinematics.velocity;
  const double p0 = run_beamline_at(cfg, 0.0, delta_l, v);
  const double p1 = run_beamline_at(cfg, kPi / 4.0, delta_l, v);
  return std::atan2(2.0 * p1 - 1.0, 2.0 * p0 - 1.0);
}

}  // namespace neupol::beamline
