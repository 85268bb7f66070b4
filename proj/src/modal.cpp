#include "dgc/modal.hpp"

#include <cmath>
#include <sstream>

#include "dgc/errors.hpp"

namespace dgc {

namespace {

void check_state(const ModalBasis& basis, const StateVector& v, const char* what) {
  if (v.size() != basis.states()) {
    std::ostringstream os;
    os << what << " has " << v.size() << " entries, expected " << basis.states();
    throw DimensionError(os.str());
  }
}

Matrix hermitian_real_part(const ComplexMatrix& h, const char* name) {
  const double scale = h.cwiseAbs().maxCoeff();
  const double imag = h.imag().cwiseAbs().maxCoeff();
  if (imag > 1e-9 * std::max(scale, 1.0)) {
    std::ostringstream os;
    os << name << " has imaginary residue " << imag;
    throw DegenerateSpectrumError(os.str());
  }
  Matrix r = h.real();
  return 0.5 * (r + r.transpose());
}

}  // namespace

ComplexVector ModalBasis::modal_coordinates(const StateVector& x,
                                            const StateVector& center) const {
  check_state(*this, x, "state");
  check_state(*this, center, "center");
  return m_inv * (x - center).cast<std::complex<double>>();
}

double ModalBasis::pair_energy(const ComplexVector& z, int pair) {
  return std::norm(z(2 * pair)) + std::norm(z(2 * pair + 1));
}

ModalBasis analyze(const ReducedModel& model) {
  const Eigen::Index n = model.machines();
  const Vector h_inv_sqrt = model.inertia.cwiseSqrt().cwiseInverse();

  // A's spectrum is +-j sqrt(omega_s mu) for the eigenvalues mu of
  // 1/2 H^-1 B_a, which is similar to the symmetric matrix below.
  const Matrix sym = 0.5 * h_inv_sqrt.asDiagonal() * model.b_a * h_inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sym + sym.transpose()));
  if (eig.info() != Eigen::Success) throw DegenerateSpectrumError("eigen solver failed");

  const Vector& mu = eig.eigenvalues();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(mu(k) > 0.0) || std::sqrt(model.omega_s * mu(k)) < kDegenerateGap) {
      std::ostringstream os;
      os << "mode " << k << " is not oscillatory (mu = " << mu(k) << ")";
      throw DegenerateSpectrumError(os.str());
    }
  }

  ModalBasis basis;
  basis.a = model.a;
  basis.m.resize(2 * n, 2 * n);
  basis.lambda.resize(2 * n);

  const std::complex<double> j(0.0, 1.0);
  double prev = -1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double w = std::sqrt(model.omega_s * mu(k));
    if (prev >= 0.0 && w - prev < kDegenerateGap) {
      std::ostringstream os;
      os << "repeated eigenvalue near j" << w << " rad/s";
      throw DegenerateSpectrumError(os.str());
    }
    prev = w;

    Vector shape = h_inv_sqrt.asDiagonal() * eig.eigenvectors().col(k);
    const double tiny = 1e-12 * shape.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(shape(i)) > tiny) {
        if (shape(i) < 0.0) shape = -shape;
        break;
      }
    }
    ComplexVector q(2 * n);
    q.head(n) = shape.cast<std::complex<double>>();
    q.tail(n) = (j * w / model.omega_s) * shape.cast<std::complex<double>>();
    q /= q.norm();

    basis.m.col(2 * k) = q;
    basis.m.col(2 * k + 1) = q.conjugate();
    basis.lambda(2 * k) = j * w;
    basis.lambda(2 * k + 1) = -j * w;
  }

  basis.m_inv = basis.m.fullPivLu().inverse();

  const ComplexVector lambda_inv = basis.lambda.cwiseInverse();
  basis.d = hermitian_real_part(basis.m_inv.adjoint() * basis.m_inv, "D");
  const ComplexMatrix scaled = lambda_inv.asDiagonal() * basis.m_inv;
  basis.e = hermitian_real_part(scaled.adjoint() * scaled, "E");

  for (Eigen::Index k = 0; k < n; ++k) {
    Mode mode;
    mode.pair = static_cast<int>(k);
    mode.frequency = basis.lambda(2 * k).imag();
    mode.participation = Vector::Zero(n);
    for (Eigen::Index col = 2 * k; col <= 2 * k + 1; ++col) {
      for (Eigen::Index i = 0; i < n; ++i) {
        mode.participation(i) += std::abs(basis.m(i, col) * basis.m_inv(col, i)) +
                                 std::abs(basis.m(n + i, col) * basis.m_inv(col, n + i));
      }
    }
    mode.participation /= mode.participation.sum();
    basis.modes.push_back(std::move(mode));
  }
  return basis;
}

StateVector propagate(const ModalBasis& basis, const StateVector& center,
                      const StateVector& x_start, double dt) {
  ComplexVector z = basis.modal_coordinates(x_start, center);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) *= std::exp(basis.lambda(i) * dt);
  return center + (basis.m * z).real();
}

double orbit_value(const ModalBasis& basis, const StateVector& center, const StateVector& x) {
  check_state(basis, x, "state");
  check_state(basis, center, "center");
  const Vector y = x - center;
  const Vector xdot = basis.a * y;
  return y.dot(basis.d * y) + xdot.dot(basis.e * xdot);
}

}  // namespace dgc
