#include "cuspidal/hodge.hpp"

#include <cmath>

namespace cuspidal {

namespace {

// Residue matrices below the noise floor are the zero matrix: the whole
// block belongs to the kernel.
PsdSplit split_scaled(const MatrixXcd& c, double factor, double zero_floor = 1e-9) {
  const double n = c.norm();
  return psd_split(c, n > zero_floor ? factor * n : 1.0);
}

}  // namespace

MatrixXcd ClassifierData::cres_at(int p, int k) const {
  auto it = cres.find({p, k});
  if (it != cres.end()) return it->second;
  const int d = block_dim(p, k);
  return MatrixXcd::Zero(d, d);
}

MatrixXcd ClassifierData::t0_at(int p) const {
  auto it = t0.find(p);
  if (it == t0.end())
    throw NumericError("classifier: insufficient scattering data (middle block at degree " +
                       std::to_string(p) + ")");
  return it->second;
}

void ClassifierData::validate() const {
  for (const auto& [p, m] : t0) {
    const int d = static_cast<int>(m.rows());
    if ((m * m - MatrixXcd::Identity(d, d)).norm() > tol * std::max(1.0, m.squaredNorm()))
      throw InvariantViolation("classifier: T0 is not an involution within tolerance");
    if ((m - m.adjoint()).norm() > tol * std::max(1.0, m.norm()))
      throw InvariantViolation("classifier: T0 is not self-adjoint within tolerance");
  }
  for (const auto& [key, m] : cres) {
    if ((m - m.adjoint()).norm() > 1e-6 * std::max(1.0, m.norm()))
      throw InvariantViolation("classifier: residue matrix not Hermitian within tolerance");
  }
}

ClassifierData compute_classifier_data(const Scenario& base) {
  ClassifierData data;
  data.bundle = base.bundle;
  data.provenance = "computed";
  const int f = base.bundle.f;
  const int b = base.bundle.b;
  for (int p = 0; p <= b + f + 1; ++p) {
    for (int k = 0; 2 * k < f; ++k) {
      if (base.bundle.dim_h(p - k, k) <= 0) continue;
      Scenario scn = make_scenario(base.name + "_p" + std::to_string(p) + "k" + std::to_string(k),
                                   base.bundle, base.model, p, k, false, base.num);
      scn.dtn_source = base.dtn_source;
      const double dk = scn.dk();
      ResidueData rd = contour_residue(scn, 2.0 * dk);
      MatrixXcd c = rd.ref_rows();
      data.cres[{p, k}] = 0.5 * (c + c.adjoint());  // enforce the Hermitian certificate
    }
    if (f % 2 == 0 && base.bundle.dim_h(p - f / 2, f / 2) > 0) {
      Scenario scn = make_scenario(base.name + "_p" + std::to_string(p) + "mid", base.bundle,
                                   base.model, p, f / 2, false, base.num);
      scn.dtn_source = base.dtn_source;
      MatrixXcd t0;
      try {
        t0 = assemble(scn, scn.point(cplx(0.0, 0.0))).ref_rows();
      } catch (const NumericError&) {
        // degenerate matching exactly at s = 0: symmetric limit
        const double h = 1e-5;
        const MatrixXcd tp = assemble(scn, scn.point(cplx(h, 0.0))).ref_rows();
        const MatrixXcd tm = assemble(scn, scn.point(cplx(-h, 0.0))).ref_rows();
        t0 = 0.5 * (tp + tm);
      }
      data.t0[p] = t0;
    }
  }
  return data;
}

MiddleSplit middle_split(const MatrixXcd& t0, double tol) {
  const MatrixXcd herm = 0.5 * (t0 + t0.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm);
  MiddleSplit split;
  std::vector<int> plus, minus;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()[i];
    if (std::abs(ev - 1.0) <= tol * 10.0 + 1e-7)
      plus.push_back(i);
    else if (std::abs(ev + 1.0) <= tol * 10.0 + 1e-7)
      minus.push_back(i);
    else
      throw InvariantViolation("middle_split: eigenvalue off +/-1: " + std::to_string(ev));
  }
  split.plus.resize(t0.rows(), static_cast<int>(plus.size()));
  split.minus.resize(t0.rows(), static_cast<int>(minus.size()));
  for (std::size_t i = 0; i < plus.size(); ++i)
    split.plus.col(static_cast<int>(i)) = es.eigenvectors().col(plus[i]);
  for (std::size_t i = 0; i < minus.size(); ++i)
    split.minus.col(static_cast<int>(i)) = es.eigenvectors().col(minus[i]);
  return split;
}

ApDescription restriction_image(const ClassifierData& data, int p) {
  const int f = data.bundle.f;
  ApDescription ap;
  ap.p = p;
  for (int k = 0; k <= f; ++k) {
    const int d = data.block_dim(p, k);
    ApBlock block;
    block.k = k;
    if (d <= 0 || k > std::min(f, p)) {
      block.kind = "zero";
      block.dim = 0;
      block.basis = MatrixXcd::Zero(std::max(d, 0), 0);
      ap.blocks.push_back(block);
      continue;
    }
    if (2 * k < f) {
      const MatrixXcd c = data.cres_at(p, k);
      PsdSplit split = split_scaled(c, data.rank_tol_factor);
      block.kind = "im-residue";
      block.basis = split.im;
    } else if (2 * k == f) {
      MiddleSplit split = middle_split(data.t0_at(p), data.tol);
      block.kind = "middle-plus";
      block.basis = split.plus;
    } else {
      // star image of ker C~^[f-k] at the complementary degree
      const int pc = data.bundle.b + f - p;
      const MatrixXcd c = data.cres_at(pc, f - k);
      if (c.rows() != d)
        throw NumericError("restriction_image: insufficient scattering data for k=" +
                           std::to_string(k));
      PsdSplit split = split_scaled(c, data.rank_tol_factor);
      block.kind = "star-kernel";
      block.basis = split.ker;
    }
    block.dim = static_cast<int>(block.basis.cols());
    ap.blocks.push_back(block);
  }
  ap.dim = 0;
  for (const auto& b : ap.blocks) ap.dim += b.dim;
  return ap;
}

XiResult xi_classify(const ClassifierData& data, int p, int k, const VectorXcd& phi) {
  const int f = data.bundle.f;
  XiResult res;
  if (data.block_dim(p, k) <= 0 || k > std::min(f, p)) {
    res.tag = XiTag::zero;
    res.witness = 0.0;
    return res;
  }
  auto decide = [&](const MatrixXcd& basis, XiTag inside, XiTag outside) {
    const double wit = basis.cols() > 0 ? (basis.adjoint() * phi).norm() : 0.0;
    res.witness = wit;
    if (wit > 1.0 - 1e-6) {
      res.tag = inside;
    } else if (wit < 1e-6) {
      res.tag = outside;
    } else {
      throw NumericError("xi_classify: ambiguous membership (projection " + std::to_string(wit) +
                         ")");
    }
    return res;
  };
  if (2 * k < f) {
    const MatrixXcd c = data.cres_at(p, k);
    PsdSplit split = split_scaled(c, data.rank_tol_factor);
    return decide(split.im, XiTag::residue, XiTag::zero);
  }
  if (2 * k == f) {
    MiddleSplit split = middle_split(data.t0_at(p), data.tol);
    return decide(split.plus, XiTag::middleValue, XiTag::zero);
  }
  const int pc = data.bundle.b + f - p;
  const MatrixXcd c = data.cres_at(pc, f - k);
  PsdSplit split = split_scaled(c, data.rank_tol_factor);
  return decide(split.ker, XiTag::valueAt2d, XiTag::zero);
}

int h_inf_dimension(const ClassifierData& data, int p) { return restriction_image(data, p).dim; }

double exactness_check_lower(const Scenario& scn) {
  const double dk = scn.dk();
  const int f = scn.bundle.f;
  const int k = scn.incoming_k;
  if (2 * k < f) {
    // value identity at the harmonic point via the derived normal blocks
    return normal_block_identity_check(scn, scn.germ_point(cplx(2.0 * dk, 0.0)));
  }
  if (2 * k == f) throw InvariantViolation("exactness_check_lower: middle degree has no lower identity");
  // k > f/2: residue identity  res T'^[l] = (a_l + o_l) T^[l](2 d_k)
  Scenario comp = normal_companion(scn);
  ResidueData rdc = contour_residue(comp, 2.0 * dk);
  const SpectralPoint pt = scn.germ_point(cplx(2.0 * dk, 0.0));
  ScatteringData sp = assemble(scn, pt);
  double defect = 0.0;
  for (const auto& c : scn.model.channels) {
    if (c.normal || c.nu != 0.0) continue;
    const MatrixXcd Tl = sp.block_by(c.s, 0.0, false);
    if (Tl.rows() == 0) continue;
    const cplx rate = c.a + channel_rate(pt, c, Direction::outgoing);
    const MatrixXcd lhs = rdc.block_by(c.s, 0.0, true);
    if (lhs.rows() == 0) continue;
    defect = std::max(defect, (lhs - rate * Tl).cwiseAbs().maxCoeff());
  }
  return defect;
}

SignatureReport signature_check(const ClassifierData& data) {
  const int n = data.bundle.b + data.bundle.f;
  if ((n + 1) % 4 != 0)
    throw InvariantViolation("signature_check: total dimension b + f + 1 not divisible by 4");
  SignatureReport rep;
  rep.half_degree = (n + 1) / 2;
  const int f = data.bundle.f;
  int total = 0;
  double defect = 0.0;
  for (int k = 0; 2 * k < f; ++k) {
    const int d = data.block_dim(rep.half_degree, k);
    if (d <= 0) {
      rep.j_dims.push_back(0);
      continue;
    }
    const MatrixXcd c = data.cres_at(rep.half_degree, k);
    PsdSplit split = split_scaled(c, data.rank_tol_factor);
    const int jk = static_cast<int>(split.im.cols());
    rep.j_dims.push_back(jk);
    total += jk;
    if (jk == 0) continue;
    // pair space (phi_j ; du ^ * phi_j): tau is the swap, since the middle
    // total degree is even and *^M *^M = +1 there
    MatrixXcd tau = MatrixXcd::Zero(2 * jk, 2 * jk);
    tau.topRightCorner(jk, jk).setIdentity();
    tau.bottomLeftCorner(jk, jk).setIdentity();
    for (int i = 0; i < jk; ++i) {
      VectorXcd q(2 * jk);
      q.setZero();
      q[i] = 1.0 / std::sqrt(2.0);
      q[jk + i] = 1.0 / std::sqrt(2.0);
      defect = std::max(defect, (tau * q - q).norm());
      q[jk + i] = -q[jk + i];
      defect = std::max(defect, (tau * q + q).norm());
    }
  }
  rep.dim_w_plus = total;
  rep.dim_w_minus = total;
  rep.dims_equal = true;
  rep.tau_eigen_defect = defect;
  rep.l2_signature_difference = static_cast<double>(rep.dim_w_plus - rep.dim_w_minus);
  return rep;
}

}  // namespace cuspidal
