#pragma once

namespace neupol {

// SI constants (CODATA 2018).
inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kPlanck = 6.62607015e-34;          // J s
inline constexpr double kHbar = kPlanck / (2.0 * kPi);     // J s
inline constexpr double kNeutronMass = 1.67492749804e-27;  // kg
inline constexpr double kNeutronMoment = 9.6623651e-27;    // |mu_n|, J/T

// de Broglie factor h/m_n, m^2/s
inline constexpr double kHOverMn = kPlanck / kNeutronMass;

// FWHM of a Gaussian in units of its standard deviation, 2*sqrt(2 ln 2)
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

}  // namespace neupol
