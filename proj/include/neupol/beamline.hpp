#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "neupol/qstate.hpp"

namespace neupol::beamline {

using qstate::JointState;
using qstate::Spin;

struct NeutronKinematics {
  double wavelength = 0.0;  // m
  double velocity = 0.0;    // m/s

  static NeutronKinematics from_wavelength(double lambda);
  void validate() const;  // de Broglie link within 1e-9 relative, both > 0
};

/// (h/m_n)/lambda
double velocity_from_wavelength(double lambda);

/// 2|mu_n| B0 / hbar, rad/s
double resonance_frequency(double b0);

/// pi*hbar/(2 tau |mu_n|) with tau = coil_length/velocity, tesla
double rf_amplitude_for_pi_flip(double coil_length, double velocity);

// ---- Elements (Fig.-style pipeline) --------------------------------------

struct Polarizer {};
struct DcPi2 {
  int sign = +1;  // rotation by sign*pi/2 about +y
};
struct RfFlipper {
  double frequency = 0.0;    // rad/s, equal for all flippers in a config
  double phase = 0.0;        // oscillator phase phi_omega
  double coil_length = 0.0;  // m
  double efficiency = 1.0;   // flipped-amplitude fraction; sqrt(1-e^2) leaks
};
struct GuideFieldDrift {
  double b0 = 0.0;      // tesla
  double length = 0.0;  // m at zero stage displacement
};
struct DcPi {};
struct Analyzer {};

using ElementKind =
    std::variant<Polarizer, DcPi2, RfFlipper, GuideFieldDrift, DcPi, Analyzer>;

struct BeamlineElement {
  ElementKind kind;
  double position = 0.0;  // m along the beam, at zero stage displacement
};

/// Geometry knobs; every quantity is an apparatus default that a config file
/// may override.
struct BeamlineGeometry {
  double wavelength = 1.99e-10;       // m
  double guide_field = 1.1e-3;        // tesla
  double rf_omega = 2.0 * kPi * 32e3; // rad/s
  double coil_length = 0.02;          // m
  double flipper_separation = 0.18;   // m, L
  double analyzer_arm = 0.12;         // m, L'
  double stage_travel = 0.040;        // m, displacement limit |dL|
  double flip_efficiency = 1.0;
};

struct BeamlineConfig {
  std::vector<BeamlineElement> elements;
  double guide_field = 0.0;        // tesla
  double stage_displacement = 0.0; // m; shifts the second flipper and DcPi
  double stage_travel = 0.040;     // m
  NeutronKinematics kinematics;

  double rf_omega() const;  // frequency shared by the flippers
};

/// Canonical element order: Polarizer, DcPi2(+), RfFlipper, drift(L),
/// RfFlipper, DcPi, drift(L'), DcPi2(-), Analyzer. `with_dc_pi=false` builds
/// the variant without the compensating DcPi (used to expose the Larmor
/// phase).
BeamlineConfig make_standard_config(const BeamlineGeometry& g,
                                    bool with_dc_pi = true);

/// Throws on malformed configs: wrong element order, non-increasing
/// positions, unequal flipper frequencies, nonpositive lengths, stage
/// displacement outside travel.
void validate(const BeamlineConfig& cfg);

// ---- Element actions ------------------------------------------------------

/// Spin rotation by sign*pi/2 about +y; |up> -> (|up> + sign|down>)/sqrt(2).
JointState apply_dc_pi2(const JointState& state, int sign);

/// Ideal resonant flip with photon exchange:
///   |up,n>   -> -i e^{+i phi} |down,n-1>
///   |down,n> -> -i e^{-i phi} |up,n+1>
/// With efficiency e < 1 the flipped amplitude is scaled by e and
/// sqrt(1-e^2) remains unflipped (still unitary). Throws if a flip would
/// populate |n| > n_max.
JointState apply_rf_flipper(const JointState& state, double phi_omega,
                            double efficiency = 1.0);

/// Larmor precession about +z by omega_L * (length/velocity) plus the ladder
/// free-evolution phase e^{-i n omega t} per level.
JointState apply_guide_field_drift(const JointState& state, double b0,
                                   double length, double velocity);

/// Spin flip, pi rotation about +x.
JointState apply_dc_pi(const JointState& state);

JointState apply_polarizer(const JointState& state);

/// sum_n |<up,n|state>|^2
double analyze_up(const JointState& state);

/// Transmitted probability through the full pipeline. phi_omega replaces the
/// oscillator phase of the second flipper; stage displacement and velocity
/// come from the config. Equals (1 + cos(2 phi_omega - gamma(dL)))/2 with
/// gamma rising at 2*omega/velocity per metre of stage travel.
double run_beamline(const BeamlineConfig& cfg, double phi_omega);

/// Same with stage displacement and velocity overridden (ensemble hot path).
double run_beamline_at(const BeamlineConfig& cfg, double phi_omega,
                       double delta_l, double velocity);

/// Stage displacement per full turn of the energy phase: 1000*v/(2f), mm.
double gamma_period_mm(const BeamlineConfig& cfg);

/// d(gamma)/d(stage displacement) = 2*omega/v, rad/m.
double energy_phase_slope(const BeamlineConfig& cfg);

/// Fringe phase Phi such that the transmitted probability is
/// (1 + cos(2 phi_omega - Phi))/2, recovered from two pipeline evaluations.
double fringe_phase(const BeamlineConfig& cfg, double delta_l);

}  // namespace neupol::beamline
