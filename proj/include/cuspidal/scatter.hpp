#pragma once

// Assembly of generalized eigenforms by matching cusp exponentials to the
// cavity DtN map, extraction of the scattering blocks, Cauchy-integral
// derivatives, and the functional-equation checkers.

#include <optional>
#include <string>

#include "cuspidal/cavity.hpp"
#include "cuspidal/cusp.hpp"

namespace cuspidal {

struct Numerics {
  double h_max = 0.0;          // cavity integration step cap (0 -> L/2000)
  double ode_tol = 1e-8;
  double cond_threshold = 1e12;
  double contour_rho = 0.0;    // 0 -> default per call site
  int contour_points = 64;
  double sigma_floor = 1e-4;   // rectangle-sweep singular value floor
  double at_pole_rel = 1e-11;  // sigma_min / sigma_max treated as singular
  double rank_tol_factor = 1e-8;
  double pole_margin = 0.0;    // 0 -> 0.02 * d_k
  double ms_pole_guard = 1e-3;
  double block_tol = 1e-9;     // threshold coincidence tolerance
};

struct Scenario {
  std::string name;
  BundleData bundle;
  CompactModel model;  // channels = channels_for_degree(bundle, p, true)
  int p = 0;
  int incoming_k = 0;
  bool incoming_normal = false;
  Numerics num;
  // Non-null for derived scenarios (see dualize): replaces the cavity DtN.
  DtNSource dtn_source;

  int in_channel = -1;  // index of the incoming channel
  int in_offset = 0;    // first component of the incoming block
  int in_mult = 0;
  double tau1 = 0.0;    // smallest positive threshold (+inf when none)

  int dim() const { return const_cast<CompactModel&>(model).dim(); }
  double dk() const { return std::abs(0.5 * bundle.f - incoming_k); }
  const Channel& incoming_channel() const {
    return model.channels[static_cast<std::size_t>(in_channel)];
  }
  SpectralPoint point(cplx s, Sheet zero = Sheet::physical) const {
    return SpectralPoint::make(s, incoming_k, bundle.f, zero);
  }
  SpectralPoint germ_point(cplx s) const {
    return SpectralPoint::germ(s, incoming_k, bundle.f);
  }
};

Scenario make_scenario(std::string name, BundleData bundle, CompactModel model_params, int p,
                       int incoming_k, bool incoming_normal, Numerics num = {});

// Matching matrix singular within tolerance: reported with the singular
// direction so the residue engine can consume it.
struct AtPole : NumericError {
  AtPole(double sigma, VectorXcd dir)
      : NumericError("assemble: matching matrix singular (at a pole)"),
        sigma_min(sigma),
        direction(std::move(dir)) {}
  double sigma_min;
  VectorXcd direction;
};

struct ScatteringData {
  SpectralPoint pt;
  // outgoing coefficients for the incoming-block basis, dim x in_mult
  MatrixXcd t_full;
  // field values at u = 0 (embed + t), dim x in_mult
  MatrixXcd boundary_value;
  double sigma_min = 0.0;
  double cond = 0.0;
  std::vector<Channel> channels;
  std::vector<int> offsets;  // component offset per channel
  int in_channel = -1;
  int in_offset = 0;
  int in_mult = 0;

  MatrixXcd block(int channel_index) const {
    return t_full.middleRows(offsets[static_cast<std::size_t>(channel_index)],
                             channels[static_cast<std::size_t>(channel_index)].mult);
  }
  // tangential (normal = false) or normal block at fiber degree l,
  // eigenvalue nu; empty matrix when the channel is absent
  MatrixXcd block_by(int l, double nu, bool normal) const;
  // rows of the incoming channel (the leading scattering block)
  MatrixXcd ref_rows() const { return t_full.middleRows(in_offset, in_mult); }
  // rows of every reference-threshold channel, stacked in channel order
  MatrixXcd ref_threshold_rows(double dk, double tol) const;
};

// Full generalized eigenform for one datum phi.
struct ModelField {
  std::vector<ChannelField> cusp;  // per component
  InteriorField interior;          // empty when the scenario has no cavity
  bool has_interior() const { return !interior.samples.empty(); }
};

// Matrix-level assembly at a spectral point.  Throws AtPole at matching
// singularities and NumericError when the cavity solve is ill-conditioned.
ScatteringData assemble(const Scenario& scn, const SpectralPoint& pt);

// Assemble with a datum spread over all reference-threshold channels
// (used by the deck-equation machinery).  `data` has one column per datum;
// rows stacked per ref-threshold channel in channel order.
ScatteringData assemble_ref_block(const Scenario& scn, const SpectralPoint& pt,
                                  const MatrixXcd& data);

// The eigenform field for datum phi, built from assembled data.
ModelField eigenform(const Scenario& scn, const ScatteringData& sd, const VectorXcd& phi);

// sigma_min / cond of the matching matrix without solving.
struct MatchingProbe {
  double sigma_min;
  double sigma_max;
  double cond;
};
MatchingProbe probe_matching(const Scenario& scn, const SpectralPoint& pt);

struct ResidualReport {
  double cusp = 0.0;
  double interior = 0.0;
  double max() const { return cusp > interior ? cusp : interior; }
};
// Finite-difference residual of (-d^2 + Theta + V - lambda) E on the
// interior grid; exact evaluation on the cusp.
ResidualReport eigenform_residual(const Scenario& scn, const SpectralPoint& pt,
                                  const ModelField& field);

// | <T(conj point) phi, psi> - <phi, T(point) psi> | on the incoming block.
double selfadjoint_check(const Scenario& scn, cplx s, const VectorXcd& phi, const VectorXcd& psi);

// Assembles E at pt with datum phi and at deck_flip(pt) with the
// reference-threshold rows of the first solution; returns the max field
// difference over a test grid.  Guard: every channel with theta <= d_k^2
// must sit exactly at the reference threshold.
double deck_equation_check(const Scenario& scn, const SpectralPoint& pt, const VectorXcd& phi);

// Star-dual companion scenario: degree b+f-p, incoming fiber degree f-k,
// channels the star images, DtN given by the first-order closure
//   N'(lambda) = (A N + Theta - lambda)(A + N)^{-1}
// (the Cauchy data of (A + d/du) applied to primal solutions, with the
// cusp-side second derivative at the junction).  Requires a
// dualize-consistent model: the cavity data must not couple tangential to
// normal channels.
Scenario dualize(const Scenario& scn);
bool dualize_consistent(const Scenario& scn, std::string* why = nullptr);

// Both sides of the star-switch functional equation, blockwise; returns
// the max defect, or nullopt when the scenario is not dualize-consistent.
std::optional<double> star_duality_check(const Scenario& scn, cplx s, const VectorXcd& phi);

// Normal-incoming companion at degree p+1 (same thresholds on the normal
// block, decoupled extra tangential channels).
Scenario normal_companion(const Scenario& scn);

// Derived normal blocks:  Tcheck^[l] = (a_l + o_l) / (a_k - d_k + s) T^[l]
// over the nu = 0 tangential blocks.  Throws on the division guard.
std::map<int, MatrixXcd> normal_block_from_tangential(const Scenario& scn,
                                                      const ScatteringData& sd);

// Max defect between the derived normal blocks and an independently
// assembled normal-incoming run on the companion scenario.
double normal_block_identity_check(const Scenario& scn, const SpectralPoint& pt);

// Cauchy-integral s-derivative of the full coefficient matrix at pt.s
// (spectrally accurate trapezoid contour).  order 0 doubles as a pole
// probe: the result must reproduce the direct value.
MatrixXcd t_derivative(const Scenario& scn, const SpectralPoint& pt, int order, double rho = 0.0,
                       int points = 0);
// Chain rule to the lambda-derivative of the full coefficient matrix.
MatrixXcd t_derivative_lambda(const Scenario& scn, const SpectralPoint& pt, double rho = 0.0,
                              int points = 0);

inline cplx inner(const VectorXcd& x, const VectorXcd& y) { return y.dot(x); }

}  // namespace cuspidal
