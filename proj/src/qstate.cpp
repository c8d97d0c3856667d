#include "neupol/qstate.hpp"

#include <cmath>
#include <stdexcept>

namespace neupol::qstate {

namespace {

void check_n(int n, int n_max) {
  if (n < -n_max || n > n_max) {
    throw std::out_of_range("energy index outside |n| <= n_max");
  }
}

void check_sign(int sign) {
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument("projector sign must be +1 or -1");
  }
}

}  // namespace

JointState::JointState(double omega, int n_max) : n_max_(n_max), omega_(omega) {
  if (omega <= 0.0) throw std::invalid_argument("omega must be positive");
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  amp_ = Eigen::VectorXcd::Zero(2 * (2 * n_max + 1));
}

int JointState::index(Spin s, int n) const {
  check_n(n, n_max_);
  return static_cast<int>(s) * levels() + (n + n_max_);
}

JointState JointState::basis(Spin s, int n, double omega, int n_max) {
  JointState st(omega, n_max);
  st.set_amplitude(s, n, 1.0);
  return st;
}

JointState JointState::bell(double omega, int n_max) {
  JointState st(omega, n_max);
  const double r = 1.0 / std::sqrt(2.0);
  st.set_amplitude(Spin::up, +1, r);
  st.set_amplitude(Spin::down, -1, r);
  return st;
}

JointState JointState::product(Complex up_amp, Complex down_amp,
                               const std::vector<std::pair<int, Complex>>& energy_amps,
                               double omega, int n_max) {
  JointState st(omega, n_max);
  for (const auto& [n, e] : energy_amps) {
    st.set_amplitude(Spin::up, n, up_amp * e);
    st.set_amplitude(Spin::down, n, down_amp * e);
  }
  const double nrm = st.norm();
  if (nrm < 1e-300) throw std::invalid_argument("product state has zero norm");
  st.vector() /= nrm;
  return st;
}

JointState JointState::from_vector(Eigen::VectorXcd v, double omega, int n_max) {
  JointState st(omega, n_max);
  if (v.size() != st.dim()) {
    throw std::invalid_argument("vector size does not match state dimension");
  }
  st.vector() = std::move(v);
  return st;
}

bool JointState::is_normalized(double tol) const {
  return std::abs(norm() - 1.0) <= tol;
}

Complex inner(const JointState& a, const JointState& b) {
  if (a.n_max() != b.n_max()) {
    throw std::invalid_argument("states live on different ladders");
  }
  return a.vector().dot(b.vector());  // conjugates the left argument
}

double fidelity(const JointState& a, const JointState& b) {
  return std::abs(inner(a, b));
}

Eigen::Matrix2cd reduced_spin_density(const JointState& s) {
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  for (int n = -s.n_max(); n <= s.n_max(); ++n) {
    const Complex up = s.amplitude(Spin::up, n);
    const Complex dn = s.amplitude(Spin::down, n);
    rho(0, 0) += up * std::conj(up);
    rho(0, 1) += up * std::conj(dn);
    rho(1, 0) += dn * std::conj(up);
    rho(1, 1) += dn * std::conj(dn);
  }
  return rho;
}

Projector spin_projector(double alpha, int sign, int n_max) {
  check_sign(sign);
  const int levels = 2 * n_max + 1;
  const int dim = 2 * levels;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  // ket components on (up, down): (1, sign*e^{-i alpha})/sqrt(2)
  const Complex vd = static_cast<double>(sign) * std::exp(Complex(0.0, -alpha));
  for (int k = 0; k < levels; ++k) {
    const int iu = k;            // (up, n)
    const int id = levels + k;   // (down, n)
    m(iu, iu) = 0.5;
    m(iu, id) = 0.5 * std::conj(vd);
    m(id, iu) = 0.5 * vd;
    m(id, id) = 0.5;
  }
  return Projector{std::move(m), levels};
}

Projector energy_projector(double gamma, int sign, int n_max) {
  check_sign(sign);
  const int levels = 2 * n_max + 1;
  const int dim = 2 * levels;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  // ket components on (n=+1, n=-1): (1, sign*e^{+i gamma})/sqrt(2)
  const Complex wm = static_cast<double>(sign) * std::exp(Complex(0.0, gamma));
  const int p = n_max + 1;  // offset of n=+1 within a spin block
  const int q = n_max - 1;  // offset of n=-1
  for (int s = 0; s < 2; ++s) {
    const int ip = s * levels + p;
    const int im = s * levels + q;
    m(ip, ip) = 0.5;
    m(ip, im) = 0.5 * std::conj(wm);
    m(im, ip) = 0.5 * wm;
    m(im, im) = 0.5;
  }
  return Projector{std::move(m), 2};
}

Observable observable(const Projector& plus, const Projector& minus,
                      std::string label) {
  if (plus.matrix.rows() != minus.matrix.rows()) {
    throw std::invalid_argument("projector dimensions differ");
  }
  const double overlap = (plus.matrix * minus.matrix).cwiseAbs().maxCoeff();
  if (overlap > 1e-9) {
    throw std::invalid_argument("observable requires orthogonal projectors");
  }
  return Observable{plus.matrix - minus.matrix, std::move(label)};
}

double joint_expectation(const JointState& state, double alpha, double gamma) {
  if (!state.is_normalized()) {
    throw std::invalid_argument("joint_expectation requires a normalized state");
  }
  const int n_max = state.n_max();
  const Observable a = observable(spin_projector(alpha, +1, n_max),
                                  spin_projector(alpha, -1, n_max), "A");
  const Observable b = observable(energy_projector(gamma, +1, n_max),
                                  energy_projector(gamma, -1, n_max), "B");
  const Eigen::MatrixXcd ab = a.matrix * b.matrix;
  const Complex e = state.vector().dot(ab * state.vector());
  if (std::abs(e.imag()) > 1e-10) {
    throw std::runtime_error("joint expectation has a non-real value");
  }
  return e.real();
}

double chsh_value(double e11, double e21, double e12, double e22) {
  for (double e : {e11, e21, e12, e22}) {
    if (!(std::abs(e) <= 1.0 + 1e-12)) {
      throw std::invalid_argument("expectation values must lie in [-1, 1]");
    }
  }
  return std::abs(e11 + e21 - e12 + e22);
}

double projection_probability(const Projector& p, const JointState& s) {
  const Complex v = s.vector().dot(p.matrix * s.vector());
  return v.real();
}

}  // namespace neupol::qstate
