#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "neupol/constants.hpp"

namespace neupol::qstate {

using Complex = std::complex<double>;

enum class Spin { up = 0, down = 1 };

/// Pure state on spin{up,down} (x) energy ladder {E0 + n*hbar*omega},
/// |n| <= n_max. Amplitudes outside the ladder do not exist by construction,
/// so truncation can never clip silently; operations that would populate
/// |n| > n_max throw instead.
class JointState {
 public:
  JointState(double omega, int n_max = 2);

  static JointState basis(Spin s, int n, double omega, int n_max = 2);

  /// (|up,n=+1> + |down,n=-1>)/sqrt(2)
  static JointState bell(double omega, int n_max = 2);

  /// (up_amp|up> + down_amp|down>) (x) sum_n energy_amp_n |n>, normalized.
  static JointState product(Complex up_amp, Complex down_amp,
                            const std::vector<std::pair<int, Complex>>& energy_amps,
                            double omega, int n_max = 2);

  static JointState from_vector(Eigen::VectorXcd v, double omega, int n_max);

  int n_max() const { return n_max_; }
  double omega() const { return omega_; }
  int dim() const { return static_cast<int>(amp_.size()); }
  int levels() const { return 2 * n_max_ + 1; }

  int index(Spin s, int n) const;
  Complex amplitude(Spin s, int n) const { return amp_[index(s, n)]; }
  void set_amplitude(Spin s, int n, Complex a) { amp_[index(s, n)] = a; }

  const Eigen::VectorXcd& vector() const { return amp_; }
  Eigen::VectorXcd& vector() { return amp_; }

  double norm() const { return amp_.norm(); }
  bool is_normalized(double tol = 1e-9) const;

 private:
  int n_max_;
  double omega_;
  Eigen::VectorXcd amp_;
};

Complex inner(const JointState& a, const JointState& b);
double fidelity(const JointState& a, const JointState& b);  // |<a|b>|

/// Partial trace over the energy ladder; basis order (up, down).
Eigen::Matrix2cd reduced_spin_density(const JointState& s);

struct Projector {
  Eigen::MatrixXcd matrix;
  int rank = 0;
};

struct Observable {
  Eigen::MatrixXcd matrix;
  std::string label;
};

/// Rank-1 per energy level: projects the spin onto
/// (|up> + sign*e^{-i alpha}|down>)/sqrt(2), identity on the ladder.
Projector spin_projector(double alpha, int sign, int n_max = 2);

/// Projects the ladder onto (|n=+1> + sign*e^{+i gamma}|n=-1>)/sqrt(2) within
/// the n=+1/n=-1 subspace (zero on other levels), identity on spin. The
/// azimuth winds opposite to the spin azimuth; this sign pairing is what makes
/// the Bell correlation cos(alpha - gamma) and the canonical settings maximal.
Projector energy_projector(double gamma, int sign, int n_max = 2);

/// plus - minus; inputs must be orthogonal.
Observable observable(const Projector& plus, const Projector& minus,
                      std::string label = {});

/// <state| A(alpha) B(gamma) |state>; for the Bell state this is
/// cos(alpha - gamma). Throws on an unnormalized state.
double joint_expectation(const JointState& state, double alpha, double gamma);

/// |e11 + e21 - e12 + e22| with the minus on the (alpha1, gamma2) term.
/// Each input must lie in [-1, 1].
double chsh_value(double e11, double e21, double e12, double e22);

struct BellAngles {
  double alpha1 = 0.0;
  double alpha2 = kPi / 2.0;
  double gamma1 = kPi / 4.0;
  double gamma2 = 3.0 * kPi / 4.0;
};

inline constexpr double kTsirelsonBound = 2.8284271247461903;  // 2*sqrt(2)

double projection_probability(const Projector& p, const JointState& s);

}  // namespace neupol::qstate
