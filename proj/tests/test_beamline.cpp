#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "neupol/beamline.hpp"
#include "neupol/rng.hpp"

using namespace neupol;
using namespace neupol::beamline;
using qstate::Complex;
using qstate::JointState;
using qstate::Spin;

namespace {

constexpr double kOmega = 2.0 * kPi * 32000.0;

JointState random_state(Rng& rng, double omega = kOmega, int n_max = 2) {
  JointState s(omega, n_max);
  for (int i = 0; i < s.dim(); ++i) {
    s.vector()[i] = Complex(rng.gaussian(), rng.gaussian());
  }
  s.vector() /= s.norm();
  return s;
}

bool states_equal(const JointState& a, const JointState& b, double tol = 1e-12) {
  return (a.vector() - b.vector()).cwiseAbs().maxCoeff() <= tol;
}

double wrap_pi(double x) { return std::remainder(x, 2.0 * kPi); }

}  // namespace

TEST_CASE("velocity from wavelength") {
  CHECK(std::abs(velocity_from_wavelength(1.99e-10) - 1988.0) < 0.5);
  CHECK(velocity_from_wavelength(3.98e-10) ==
        doctest::Approx(velocity_from_wavelength(1.99e-10) / 2.0).epsilon(1e-12));
  CHECK(std::abs(velocity_from_wavelength(1.0e-10) - 3956.0) < 1.0);
  CHECK_THROWS_AS(velocity_from_wavelength(0.0), std::invalid_argument);
  CHECK_THROWS_AS(velocity_from_wavelength(-1e-10), std::invalid_argument);
}

TEST_CASE("kinematics invariant") {
  NeutronKinematics k = NeutronKinematics::from_wavelength(1.99e-10);
  k.validate();
  k.velocity *= 1.01;
  CHECK_THROWS_AS(k.validate(), std::invalid_argument);
}

TEST_CASE("resonance frequency") {
  const double w = resonance_frequency(1.1e-3);
  CHECK(std::abs(w - 2.0157e5) < 50.0);
  CHECK(std::abs(w / (2.0 * kPi) - 32081.0) < 1.0);
  CHECK(resonance_frequency(2.2e-3) == doctest::Approx(2.0 * w).epsilon(1e-12));
  CHECK(std::abs(resonance_frequency(0.55e-3) / (2.0 * kPi) - 16040.6) < 1.0);
  CHECK_THROWS_AS(resonance_frequency(0.0), std::invalid_argument);
}

TEST_CASE("rf amplitude for a pi flip") {
  const double b1 = rf_amplitude_for_pi_flip(0.02, 1988.0);
  CHECK(std::abs(b1 - 1.7041e-3) < 1e-6);
  CHECK(rf_amplitude_for_pi_flip(0.04, 1988.0) ==
        doctest::Approx(b1 / 2.0).epsilon(1e-12));
  CHECK(rf_amplitude_for_pi_flip(0.02, 2.0 * 1988.0) ==
        doctest::Approx(2.0 * b1).epsilon(1e-12));
  CHECK_THROWS_AS(rf_amplitude_for_pi_flip(0.0, 1988.0), std::invalid_argument);
}

TEST_CASE("dc pi/2 prepares the equal superposition") {
  const JointState up = JointState::basis(Spin::up, 0, kOmega);
  const JointState turned = apply_dc_pi2(up, +1);
  const JointState target = JointState::product(1.0, 1.0, {{0, 1.0}}, kOmega);
  CHECK(qstate::fidelity(turned, target) == doctest::Approx(1.0).epsilon(1e-12));

  // inverse rotation restores the input exactly
  CHECK(states_equal(apply_dc_pi2(turned, -1), up));

  // four quarter turns give the spinor sign flip
  Rng rng(7);
  const JointState s = random_state(rng);
  JointState four = s;
  for (int i = 0; i < 4; ++i) four = apply_dc_pi2(four, +1);
  CHECK((four.vector() + s.vector()).cwiseAbs().maxCoeff() < 1e-12);

  // oracle: the 2x2 rotation matrix to the fourth power is -identity
  Eigen::Matrix2cd r;
  const double c = std::cos(kPi / 4.0), sn = std::sin(kPi / 4.0);
  r << c, -sn, sn, c;
  CHECK(((r * r * r * r) + Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("rf flipper creates the entangled state from the incident one") {
  JointState s = JointState::basis(Spin::up, 0, kOmega);
  s = apply_polarizer(s);
  s = apply_dc_pi2(s, +1);
  s = apply_rf_flipper(s, 0.0);
  CHECK(qstate::fidelity(s, JointState::bell(kOmega)) >= 1.0 - 1e-12);
  CHECK(std::abs(s.norm() - 1.0) < 1e-12);
}

TEST_CASE("rf flipper applied twice restores spin and ladder up to phase") {
  JointState s(kOmega, 2);
  s.set_amplitude(Spin::up, 0, std::sqrt(0.3));
  s.set_amplitude(Spin::down, 0, std::sqrt(0.7));
  const JointState twice = apply_rf_flipper(apply_rf_flipper(s, 0.0), 0.0);
  CHECK(qstate::fidelity(twice, s) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rf flipper truncation overflow is an error") {
  const JointState top = JointState::basis(Spin::down, 2, kOmega, 2);
  CHECK_THROWS_AS(apply_rf_flipper(top, 0.0), std::domain_error);
  const JointState bottom = JointState::basis(Spin::up, -2, kOmega, 2);
  CHECK_THROWS_AS(apply_rf_flipper(bottom, 0.0), std::domain_error);
  // interior levels flip fine
  CHECK_NOTHROW(apply_rf_flipper(JointState::basis(Spin::up, 2, kOmega, 2), 0.0));
}

TEST_CASE("imperfect flip keeps unitarity and leaks sqrt(1-e^2)") {
  const double eff = 0.98;
  const JointState in = JointState::basis(Spin::up, 0, kOmega);
  const JointState out = apply_rf_flipper(in, 0.3, eff);
  CHECK(std::abs(out.norm() - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(out.amplitude(Spin::down, -1)) - eff) < 1e-12);
  CHECK(std::abs(std::abs(out.amplitude(Spin::up, 0)) -
                 std::sqrt(1.0 - eff * eff)) < 1e-12);

  Rng rng(3);
  JointState s = random_state(rng);
  s.set_amplitude(Spin::up, -2, 0.0);
  s.set_amplitude(Spin::down, 2, 0.0);
  s.vector() /= s.norm();
  CHECK(std::abs(apply_rf_flipper(s, 1.1, eff).norm() - 1.0) < 1e-12);
}

TEST_CASE("guide field drift phases") {
  const double v = 1988.0;
  // full Larmor turn: spinor sign flip, probabilities unchanged
  const double b0 = 1.1e-3;
  const double turn_len = 2.0 * kPi * v / resonance_frequency(b0);
  const JointState s = JointState::product(1.0, 1.0, {{0, 1.0}}, kOmega);
  const JointState turned = apply_guide_field_drift(s, b0, turn_len, v);
  CHECK((turned.vector() + s.vector()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(analyze_up(turned) == doctest::Approx(analyze_up(s)).epsilon(1e-12));

  // ladder bookkeeping oracle: each amplitude gains the phase written below
  const double len = 0.18;
  const double t = len / v;
  const JointState bell = JointState::bell(kOmega);
  const JointState drifted = apply_guide_field_drift(bell, b0, len, v);
  const double larmor = resonance_frequency(b0) * t;
  const Complex up_expected = bell.amplitude(Spin::up, +1) *
                              std::exp(Complex(0, -0.5 * larmor - kOmega * t));
  const Complex dn_expected = bell.amplitude(Spin::down, -1) *
                              std::exp(Complex(0, +0.5 * larmor + kOmega * t));
  CHECK(std::abs(drifted.amplitude(Spin::up, +1) - up_expected) < 1e-12);
  CHECK(std::abs(drifted.amplitude(Spin::down, -1) - dn_expected) < 1e-12);
  // relative ladder phase between the two branches advances by 2 omega t
  const double rel = std::arg(drifted.amplitude(Spin::down, -1) /
                              drifted.amplitude(Spin::up, +1));
  CHECK(std::abs(wrap_pi(rel - (larmor + 2.0 * kOmega * t))) < 1e-12);

  // zero length is the identity
  CHECK(states_equal(apply_guide_field_drift(bell, b0, 0.0, v), bell));
}

TEST_CASE("dc pi flips the spin") {
  const JointState up = JointState::basis(Spin::up, 0, kOmega);
  const JointState flipped = apply_dc_pi(up);
  CHECK(qstate::fidelity(flipped, JointState::basis(Spin::down, 0, kOmega)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const JointState twice = apply_dc_pi(flipped);
  CHECK((twice.vector() + up.vector()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(analyze_up(twice) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dc pi between equal drifts cancels the net precession") {
  const double v = 1988.0, b0 = 1.1e-3, len = 0.137;
  const JointState inc = apply_dc_pi2(JointState::basis(Spin::up, 0, kOmega), +1);

  // composition oracle: with the flip in the middle the two z-precessions
  // conjugate each other, so the analyzed intensity is the zero-drift value
  JointState a = apply_guide_field_drift(inc, b0, len, v);
  a = apply_dc_pi(a);
  a = apply_guide_field_drift(a, b0, len, v);
  a = apply_dc_pi2(a, -1);
  CHECK(analyze_up(a) == doctest::Approx(1.0).epsilon(1e-12));

  // without the flip the same drifts precess twice as far
  JointState c = apply_guide_field_drift(inc, b0, len, v);
  c = apply_guide_field_drift(c, b0, len, v);
  c = apply_dc_pi2(c, -1);
  const double theta = resonance_frequency(b0) * len / v;
  CHECK(analyze_up(c) ==
        doctest::Approx(std::cos(theta) * std::cos(theta)).epsilon(1e-10));
  CHECK(std::abs(analyze_up(c) - 1.0) > 0.1);
}

TEST_CASE("analyze_up") {
  CHECK(analyze_up(JointState::basis(Spin::up, 0, kOmega)) == 1.0);
  const JointState sup = JointState::product(1.0, 1.0, {{0, 0.6}, {1, 0.8}}, kOmega);
  CHECK(analyze_up(sup) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("standard pipeline matches the fringe law") {
  const BeamlineGeometry g;
  const BeamlineConfig cfg = make_standard_config(g);
  const double v = cfg.kinematics.velocity;
  const double slope = energy_phase_slope(cfg);
  const double phi0 = fringe_phase(cfg, 0.0);

  // at the fringe phase zero the transmission is exactly 1
  const double x_zero = -wrap_pi(phi0) / slope;
  CHECK(run_beamline_at(cfg, 0.0, x_zero, v) == doctest::Approx(1.0).epsilon(1e-12));

  // alpha = pi/2 against gamma = pi/2 recombines constructively
  const double x_half = x_zero + (kPi / 2.0) / slope;
  CHECK(run_beamline_at(cfg, kPi / 4.0, x_half, v) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // and the quadrature point sits at half transmission
  CHECK(run_beamline_at(cfg, kPi / 4.0, x_zero, v) ==
        doctest::Approx(0.5).epsilon(1e-12));

  // closed form over a 20x20 grid
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double phi = -kPi + 2.0 * kPi * i / 19.0;
      const double dl = -0.03 + 0.06 * j / 19.0;
      const double want = 0.5 * (1.0 + std::cos(2.0 * phi - (phi0 + slope * dl)));
      worst = std::max(worst, std::abs(run_beamline_at(cfg, phi, dl, v) - want));
    }
  }
  CHECK(worst < 1e-10);

  // one full period of stage travel leaves the transmission unchanged
  const double period_m = gamma_period_mm(cfg) * 1e-3;
  for (double phi : {0.0, 0.37, 1.1}) {
    CHECK(std::abs(run_beamline_at(cfg, phi, -0.004, v) -
                   run_beamline_at(cfg, phi, -0.004 + period_m, v)) < 1e-10);
  }

  // oscillator phase shifts the fringe by alpha = 2 phi_omega
  const double shift = fringe_phase(cfg, 0.0075);
  const double p_shifted = run_beamline_at(cfg, 0.2 + shift / 2.0, 0.0075, v);
  CHECK(p_shifted == doctest::Approx(0.5 * (1.0 + std::cos(0.4))).epsilon(1e-10));
}

TEST_CASE("run_beamline uses the configured stage displacement") {
  const BeamlineGeometry g;
  BeamlineConfig cfg = make_standard_config(g);
  cfg.stage_displacement = 0.0123;
  CHECK(run_beamline(cfg, 0.4) ==
        doctest::Approx(run_beamline_at(cfg, 0.4, 0.0123, cfg.kinematics.velocity))
            .epsilon(1e-15));
}

TEST_CASE("unitary elements preserve the norm") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    JointState s = random_state(rng);
    // keep the ladder edges empty so the flipper stays within bounds
    s.set_amplitude(Spin::up, -2, 0.0);
    s.set_amplitude(Spin::down, 2, 0.0);
    s.vector() /= s.norm();
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double eff = rng.uniform(0.5, 1.0);
    CHECK(std::abs(apply_dc_pi2(s, +1).norm() - 1.0) < 1e-12);
    CHECK(std::abs(apply_dc_pi(s).norm() - 1.0) < 1e-12);
    CHECK(std::abs(apply_rf_flipper(s, phi, eff).norm() - 1.0) < 1e-12);
    CHECK(std::abs(apply_guide_field_drift(s, 1.1e-3, 0.3, 1988.0).norm() - 1.0) <
          1e-12);
  }
}

TEST_CASE("larmor compensation holds across guide field changes") {
  BeamlineGeometry g;
  const double dl = 0.005;
  for (double factor : {0.9, 1.0, 1.1}) {
    BeamlineGeometry gg = g;
    gg.guide_field = 1.1e-3 * factor;
    const BeamlineConfig cfg = make_standard_config(gg);
    const double slope = energy_phase_slope(cfg);
    // re-zeroed fringe: the gamma dependence is pure stage phase
    const double residual =
        wrap_pi(fringe_phase(cfg, dl) - fringe_phase(cfg, 0.0) - slope * dl);
    CHECK(std::abs(residual) < 1e-10);
  }
  // removing the compensating flipper exposes the Larmor winding
  const BeamlineConfig bare = make_standard_config(g, false);
  const double slope = energy_phase_slope(bare);
  const double residual =
      wrap_pi(fringe_phase(bare, dl) - fringe_phase(bare, 0.0) - slope * dl);
  CHECK(std::abs(residual) > 0.1);
}

TEST_CASE("gamma period per stage displacement") {
  const BeamlineGeometry g;
  const BeamlineConfig cfg = make_standard_config(g);
  CHECK(std::abs(gamma_period_mm(cfg) - 31.06) < 0.01);

  BeamlineGeometry doubled = g;
  doubled.rf_omega *= 2.0;
  CHECK(gamma_period_mm(make_standard_config(doubled)) ==
        doctest::Approx(gamma_period_mm(cfg) / 2.0).epsilon(1e-12));

  BeamlineGeometry tuned = g;
  tuned.wavelength = 1.976e-10;
  CHECK(std::abs(gamma_period_mm(make_standard_config(tuned)) - 31.28) < 0.02);
}

TEST_CASE("config validation") {
  const BeamlineGeometry g;
  BeamlineConfig cfg = make_standard_config(g);
  CHECK_NOTHROW(validate(cfg));
  CHECK_NOTHROW(validate(make_standard_config(g, false)));

  BeamlineConfig swapped = cfg;
  std::swap(swapped.elements[1], swapped.elements[2]);
  CHECK_THROWS_AS(validate(swapped), std::invalid_argument);

  BeamlineConfig decreasing = cfg;
  decreasing.elements[3].position = decreasing.elements[2].position - 0.01;
  CHECK_THROWS_AS(validate(decreasing), std::invalid_argument);

  BeamlineConfig detuned = cfg;
  std::get<RfFlipper>(detuned.elements[4].kind).frequency *= 1.5;
  CHECK_THROWS_AS(validate(detuned), std::invalid_argument);

  BeamlineConfig far = cfg;
  far.stage_displacement = far.stage_travel * 1.5;
  CHECK_THROWS_AS(validate(far), std::invalid_argument);
  CHECK_THROWS_AS(run_beamline_at(cfg, 0.0, cfg.stage_travel * 1.5,
                                  cfg.kinematics.velocity),
                  std::invalid_argument);
}
