#pragma once

// Cohomological classification: the +/-1 split of the middle scattering
// involution, the restriction-image space per degree, the singular-value
// tagging map, and the signature bookkeeping.

#include "cuspidal/residues.hpp"

namespace cuspidal {

// Residue matrices and middle involutions for a whole model family,
// indexed by form degree.
struct ClassifierData {
  BundleData bundle;
  // (p, k) -> residue of the leading scattering block at the harmonic
  // point, a Hermitian PSD matrix over the (p-k, k) block, k < f/2
  std::map<std::pair<int, int>, MatrixXcd> cres;
  // p -> T^[f/2](0) (f even)
  std::map<int, MatrixXcd> t0;
  std::string provenance = "user";
  double tol = 1e-8;
  double rank_tol_factor = 1e-8;

  int block_dim(int p, int k) const { return bundle.dim_h(p - k, k); }
  MatrixXcd cres_at(int p, int k) const;  // zero matrix when absent
  MatrixXcd t0_at(int p) const;           // throws when absent but required
  void validate() const;                  // involution + self-adjointness of t0
};

// Runs the residue/assembly pipeline over every degree and fiber degree of
// the scenario family defined by `base` (same cavity, varying (p, k)).
ClassifierData compute_classifier_data(const Scenario& base);

struct MiddleSplit {
  MatrixXcd plus;   // orthonormal basis of the +1 eigenspace
  MatrixXcd minus;  // -1 eigenspace
};
// Eigenbases of an involution; eigenvalues must sit at +/-1 within tol.
MiddleSplit middle_split(const MatrixXcd& t0, double tol = 1e-8);

struct ApBlock {
  int k = 0;
  std::string kind;  // "im-residue" | "middle-plus" | "star-kernel" | "zero"
  MatrixXcd basis;   // channel coordinates
  int dim = 0;
};
struct ApDescription {
  int p = 0;
  std::vector<ApBlock> blocks;
  int dim = 0;
};

// The image of the restriction map, assembled blockwise:
//   k < f/2 : im C~^[k],   k = f/2 : H_+,   f/2 < k <= min(f, p) :
//   star-image of ker C~^[f-k] at the complementary degree, else 0.
ApDescription restriction_image(const ClassifierData& data, int p);

enum class XiTag { residue, middleValue, valueAt2d, zero };

struct XiResult {
  XiTag tag = XiTag::zero;
  double witness = 0.0;  // projection norm used for the decision
};

// Case tag for a normalized datum in the (p-k, k) block.  Throws on an
// ambiguous membership margin.
XiResult xi_classify(const ClassifierData& data, int p, int k, const VectorXcd& phi);

int h_inf_dimension(const ClassifierData& data, int p);

// Identity checks tying the normal-incoming data to the tangential data at
// the harmonic point: for k < f/2 the value identity (via the derived
// normal blocks), for k > f/2 the residue identity.
double exactness_check_lower(const Scenario& scn);

struct SignatureReport {
  int half_degree = 0;       // (b + f + 1) / 2
  std::vector<int> j_dims;   // dim im C~^[k] per k < f/2
  int dim_w_plus = 0;
  int dim_w_minus = 0;
  double tau_eigen_defect = 0.0;  // Q_± eigenvector defect of assembled tau
  bool dims_equal = false;
  double l2_signature_difference = 0.0;  // contribution of W_+ minus W_-
};

// Builds the tau-invariant pair spaces over im C~^[k] at the middle total
// degree and verifies the W_+/W_- mechanism.  Requires b + f + 1 = 0 mod 4.
SignatureReport signature_check(const ClassifierData& data);

}  // namespace cuspidal
