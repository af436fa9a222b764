#pragma once

// The compact part modeled as a matrix Sturm-Liouville cavity on [-L, 0]:
// Y'' = (Theta + V(u) - lambda) Y with a Hermitian potential V, a left
// boundary condition at -L, and the Dirichlet-to-Neumann map at u = 0.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "cuspidal/branchcut.hpp"

namespace cuspidal {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class BCKind { dirichlet, neumann, robin };

struct BoundaryCondition {
  BCKind kind = BCKind::dirichlet;
  MatrixXcd robin;  // Hermitian, used when kind == robin
};

enum class VertexKind { transparent, dirichlet, neumann, robin };

struct VertexCondition {
  VertexKind kind = VertexKind::transparent;
  MatrixXcd robin;
};

struct Potential {
  enum class Kind { zero, scalar, constant, piecewise, samples };
  Kind kind = Kind::zero;
  double scalar_value = 0.0;  // v * I at any dimension (well depth)
  MatrixXcd constant;
  // piecewise: V = pieces[i].second on [pieces[i-1].first, pieces[i].first),
  // breakpoints ascending in (-L, 0], last breakpoint = 0.
  std::vector<std::pair<double, MatrixXcd>> pieces;
  // samples: uniform grid u_i = -L + i * sample_step covering [-L, 0].
  std::vector<MatrixXcd> samples;
  double sample_step = 0.0;

  bool is_zero() const { return kind == Kind::zero; }
  bool is_constant() const {
    return kind == Kind::constant || kind == Kind::zero || kind == Kind::scalar;
  }
  // scalar and zero potentials fold into the diagonal of the channel operator
  bool is_diagonal_shift() const { return kind == Kind::zero || kind == Kind::scalar; }
  MatrixXcd eval(double u, double L, int dim) const;
  void validate(int dim, double L) const;  // Hermitian at every sample/piece
};

struct CompactModel {
  double L = 1.0;
  std::vector<Channel> channels;
  Potential V;
  BoundaryCondition left;
  VertexCondition vertex;
  double h_max = 0.0;     // 0 -> default L / 2000
  double ode_tol = 1e-8;  // step-halving tolerance
  double cond_threshold = 1e12;

  int dim() const {
    int n = 0;
    for (const auto& c : channels) n += c.mult;
    return n;
  }
  // Threshold and weight of each matrix component (channels expanded by
  // multiplicity, in channel order).
  VectorXd theta_diag() const;
  VectorXd a_diag() const;
  // component range of channel index ci
  std::pair<int, int> block_of(int ci) const;
  double default_step() const { return h_max > 0.0 ? h_max : L / 2000.0; }
};

// Load potential samples from a CSV stream (header row, then per row:
// u, then column-major entries re/im interleaved).
Potential potential_from_csv(std::istream& in, int dim);

struct PropagationResult {
  MatrixXcd Y0;   // value at u = 0, basis of left-BC solutions as columns
  MatrixXcd Yp0;  // derivative at u = 0
  double step = 0.0;
  double error_estimate = 0.0;
  // trajectory of the basis on the integration grid u_i = -L + i*step
  std::vector<MatrixXcd> trajectory;
};

// Fixed-step 4th-order integration from -L to 0 with Richardson step-halving
// error estimate.  Throws NumericError on non-convergence.
PropagationResult propagate(const CompactModel& model, cplx lambda, bool keep_trajectory = false);

struct DtNMap {
  cplx lambda;
  MatrixXcd N;       // Y'(0) = N Y(0)
  double cond = 0.0;  // condition number of Y(0)
};

// Abstract DtN source, so scenarios can carry either a cavity or a derived
// closure (see scatter::dualize).
using DtNSource = std::function<DtNMap(cplx)>;

DtNMap dtn(const CompactModel& model, cplx lambda);

// Unique left-BC solution with the given value at u = 0, sampled on the
// integration grid.  Columns of `boundary_value` give independent data.
struct InteriorField {
  std::vector<MatrixXcd> samples;  // dim x ncols at each grid node
  double step = 0.0;
  double L = 0.0;
};

InteriorField interior_field(const CompactModel& model, cplx lambda, const MatrixXcd& boundary_value);

// Composite Simpson quadrature of sum_cols |field|^2 over [-L, 0].
double interior_sq_norm(const InteriorField& field);
// Simpson quadrature of <col_i(f1), col_i(f2)> summed over columns.
cplx interior_inner(const InteriorField& f1, const InteriorField& f2);

}  // namespace cuspidal
