#pragma once

// Pole location on (d_k, 2 d_k], pole-order certification, contour-quadrature
// residues of the scattering blocks and eigenforms, and the residue-pairing
// and kernel/image splitting checks.

#include "cuspidal/scatter.hpp"

namespace cuspidal {

struct ResidueData {
  SpectralPoint pt0;  // germ point at s0
  double s0 = 0.0;
  // residue of the full coefficient matrix, dim x in_mult
  MatrixXcd c_full;
  double order_certificate = 0.0;  // second Laurent moment, scale-aware
  double open_channel_leak = 0.0;  // residue magnitude on open channels
  double convergence = 0.0;        // change when doubling the contour points
  double rho = 0.0;
  int points = 0;
  std::vector<Channel> channels;
  std::vector<int> offsets;
  int in_offset = 0;
  int in_mult = 0;

  MatrixXcd block_by(int l, double nu, bool normal) const;
  MatrixXcd ref_rows() const { return c_full.middleRows(in_offset, in_mult); }
};

struct PoleScanResult {
  std::vector<double> candidates;      // refined pole locations, ascending
  std::vector<double> sigma_at;        // matching sigma_min at each candidate
  double grid_sigma_median = 0.0;
};

// Scans sigma_min of the matching matrix along (d_k + margin, 2 d_k],
// brackets minima, refines by golden section plus a quadratic fit on
// sigma^2.  Returns empty for the middle fiber degree.
PoleScanResult pole_scan(const Scenario& scn, int grid_points = 400);

// Minimum matching sigma_min over the rectangle
// {Re s in [re0, re1]} x {im0 <= |Im s| <= im1}.
double rectangle_sweep_min_sigma(const Scenario& scn, double re0, double re1, double im0,
                                 double im1, int n_re, int n_im);

// M-point trapezoid contour residue around s0.  Around the harmonic point
// s0 = 2 d_k with middle channels present, the two zero-root sheets are
// averaged so the integral extracts exactly the pole part in s.
ResidueData contour_residue(const Scenario& scn, double s0, double rho = 0.0, int points = 0);

// Residue eigenform for datum phi (no incoming term).
ModelField residue_field(const Scenario& scn, const ResidueData& rd, const VectorXcd& phi);

// | <E~(phi), E~(psi)> - <phi, C~ psi> |, cavity quadrature plus exact
// exponential tails.  Throws InvariantViolation when a non-negligible
// residue coefficient sits on a non-decaying channel.
double residue_pairing_check(const Scenario& scn, const ResidueData& rd, const VectorXcd& phi,
                             const VectorXcd& psi);

struct PsdSplit {
  MatrixXcd ker;  // orthonormal kernel basis (columns)
  MatrixXcd im;   // orthonormal image basis
  Eigen::VectorXd eigenvalues;
};

// Eigendecomposition split of a Hermitian PSD matrix; eigenvalues below
// rank_tol go to the kernel.  Throws InvariantViolation below -10*rank_tol.
PsdSplit psd_split(const MatrixXcd& c, double rank_tol);

}  // namespace cuspidal
