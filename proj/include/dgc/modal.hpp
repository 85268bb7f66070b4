#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dgc/grid_model.hpp"

namespace dgc {

using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// One conjugate pair of the undamped swing model.
struct Mode {
  int pair = 0;
  double frequency = 0.0;  // rad/s
  Vector participation;    // per machine, sums to one
};

/// Eigenstructure of A plus the orbit metrics D and E.
///
/// Columns 2k and 2k+1 of `m` hold the eigenvectors of +j w_k and -j w_k,
/// pairs sorted by ascending frequency. Each column has unit norm and its
/// first nonzero entry real positive, so repeated calls are bit-identical.
struct ModalBasis {
  Matrix a;
  ComplexMatrix m;
  ComplexMatrix m_inv;
  ComplexVector lambda;
  Matrix d;  // (M^-1)* M^-1
  Matrix e;  // (M^-1)* (L^-1)* L^-1 M^-1
  std::vector<Mode> modes;

  Eigen::Index states() const { return a.rows(); }
  Eigen::Index pairs() const { return a.rows() / 2; }

  ComplexVector modal_coordinates(const StateVector& x, const StateVector& center) const;

  /// |z_2k|^2 + |z_2k+1|^2 for modal coordinates z.
  static double pair_energy(const ComplexVector& z, int pair);
};

/// Frequencies closer than this (rad/s) count as repeated.
inline constexpr double kDegenerateGap = 1e-6;

ModalBasis analyze(const ReducedModel& model);

/// Closed-form x(t0 + dt) for the undamped dynamics centred on `center`.
StateVector propagate(const ModalBasis& basis, const StateVector& center,
                      const StateVector& x_start, double dt);

/// (x-c)' D (x-c) + xdot' E xdot with xdot = A (x - c). Conserved along any
/// orbit around `center`, where it equals 2 (x0-c)' D (x0-c).
double orbit_value(const ModalBasis& basis, const StateVector& center, const StateVector& x);

}  // namespace dgc
