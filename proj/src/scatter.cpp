#include "cuspidal/scatter.hpp"

#include <cmath>
#include <memory>

namespace cuspidal {

namespace {

std::vector<int> channel_offsets(const std::vector<Channel>& channels) {
  std::vector<int> off;
  off.reserve(channels.size());
  int acc = 0;
  for (const auto& c : channels) {
    off.push_back(acc);
    acc += c.mult;
  }
  return off;
}

VectorXcd outgoing_rates(const Scenario& scn, const SpectralPoint& pt) {
  VectorXcd o(scn.dim());
  int i = 0;
  for (const auto& c : scn.model.channels) {
    const cplx rate = channel_rate(pt, c, Direction::outgoing);
    for (int j = 0; j < c.mult; ++j) o[i++] = rate;
  }
  return o;
}

enum class VertexMode { dirichlet, neumann, matched };

VertexMode vertex_mode(const Scenario& scn) {
  if (scn.dtn_source) return VertexMode::matched;
  switch (scn.model.vertex.kind) {
    case VertexKind::dirichlet:
      return VertexMode::dirichlet;
    case VertexKind::neumann:
      return VertexMode::neumann;
    default:
      return VertexMode::matched;
  }
}

MatrixXcd matched_dtn(const Scenario& scn, cplx lambda) {
  if (scn.dtn_source) return scn.dtn_source(lambda).N;
  if (scn.model.vertex.kind == VertexKind::robin) return scn.model.vertex.robin;
  return dtn(scn.model, lambda).N;
}

struct Solved {
  MatrixXcd t;
  double sigma_min;
  double cond;
};

// (diag(o) - N) t = (N - iota) X, with the degenerate vertex shortcuts.
Solved solve_matching(const Scenario& scn, const SpectralPoint& pt, const MatrixXcd& X) {
  const int n = scn.dim();
  const cplx iota = pt.s - pt.dk;
  const VectorXcd o = outgoing_rates(scn, pt);
  Solved out;
  switch (vertex_mode(scn)) {
    case VertexMode::dirichlet:
      out.t = -X;
      out.sigma_min = 1.0;
      out.cond = 1.0;
      return out;
    case VertexMode::neumann: {
      double mn = 1e300, mx = 0.0;
      for (int i = 0; i < n; ++i) {
        mn = std::min(mn, std::abs(o[i]));
        mx = std::max(mx, std::abs(o[i]));
      }
      out.sigma_min = mn;
      out.cond = mx / std::max(mn, 1e-300);
      if (mn <= scn.num.at_pole_rel * std::max(mx, 1.0)) {
        VectorXcd dir = VectorXcd::Zero(n);
        for (int i = 0; i < n; ++i)
          if (std::abs(o[i]) == mn) {
            dir[i] = 1.0;
            break;
          }
        throw AtPole(mn, dir);
      }
      const VectorXcd oinv = o.cwiseInverse();
      out.t = oinv.asDiagonal() * X;
      out.t *= -iota;
      return out;
    }
    case VertexMode::matched: {
      const MatrixXcd N = matched_dtn(scn, pt.lambda());
      MatrixXcd A = MatrixXcd(o.asDiagonal()) - N;
      Eigen::JacobiSVD<MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
      out.sigma_min = svd.singularValues().minCoeff();
      const double smax = svd.singularValues().maxCoeff();
      out.cond = smax / std::max(out.sigma_min, 1e-300);
      if (out.sigma_min <= scn.num.at_pole_rel * smax)
        throw AtPole(out.sigma_min, svd.matrixV().col(n - 1));
      MatrixXcd rhs = N * X - iota * X;
      out.t = A.partialPivLu().solve(rhs);
      return out;
    }
  }
  throw NumericError("solve_matching: unreachable");
}

void assert_physical_l2(const Scenario& scn, const SpectralPoint& pt, const VectorXcd& o) {
  const cplx lambda = pt.lambda();
  const bool physical = pt.lambda().imag() != 0.0 && pt.s.real() > pt.dk &&
                        pt.zero_sheet == Sheet::physical;
  if (!physical) return;
  (void)lambda;
  for (int i = 0; i < o.size(); ++i)
    if (!(o[i].real() < 0.0))
      throw InvariantViolation("assemble: outgoing rate not decaying on the physical sheet");
}

ScatteringData finish_assembly(const Scenario& scn, const SpectralPoint& pt, const MatrixXcd& X) {
  Solved sol = solve_matching(scn, pt, X);
  ScatteringData sd;
  sd.pt = pt;
  sd.t_full = std::move(sol.t);
  sd.boundary_value = X + sd.t_full;
  sd.sigma_min = sol.sigma_min;
  sd.cond = sol.cond;
  sd.channels = scn.model.channels;
  sd.offsets = channel_offsets(sd.channels);
  sd.in_channel = scn.in_channel;
  sd.in_offset = scn.in_offset;
  sd.in_mult = static_cast<int>(X.cols());
  return sd;
}

}  // namespace

MatrixXcd ScatteringData::block_by(int l, double nu, bool normal) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const Channel& c = channels[i];
    if (c.s == l && c.normal == normal && std::abs(c.nu - nu) <= 1e-12)
      return t_full.middleRows(offsets[i], c.mult);
  }
  return MatrixXcd(0, t_full.cols());
}

MatrixXcd ScatteringData::ref_threshold_rows(double dk, double tol) const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const Channel& c = channels[i];
    if (c.nu == 0.0 && std::abs(c.theta - dk * dk) <= tol)
      for (int j = 0; j < c.mult; ++j) rows.push_back(offsets[i] + j);
  }
  MatrixXcd out(static_cast<int>(rows.size()), t_full.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<int>(i)) = t_full.row(rows[i]);
  return out;
}

Scenario make_scenario(std::string name, BundleData bundle, CompactModel model_params, int p,
                       int incoming_k, bool incoming_normal, Numerics num) {
  bundle.validate();
  Scenario scn;
  scn.name = std::move(name);
  scn.bundle = std::move(bundle);
  scn.model = std::move(model_params);
  scn.p = p;
  scn.incoming_k = incoming_k;
  scn.incoming_normal = incoming_normal;
  scn.num = num;
  scn.model.channels = channels_for_degree(scn.bundle, p, true);
  if (num.h_max > 0.0) scn.model.h_max = num.h_max;
  scn.model.ode_tol = num.ode_tol;
  scn.model.cond_threshold = num.cond_threshold;
  if (scn.model.channels.empty()) throw SchemaError("scenario: no channels at degree p");
  const auto offs = channel_offsets(scn.model.channels);
  for (std::size_t i = 0; i < scn.model.channels.size(); ++i) {
    const Channel& c = scn.model.channels[i];
    if (c.s == incoming_k && c.nu == 0.0 && c.normal == incoming_normal) {
      scn.in_channel = static_cast<int>(i);
      scn.in_offset = offs[i];
      scn.in_mult = c.mult;
    }
  }
  if (scn.in_channel < 0)
    throw SchemaError("scenario: incoming block absent from the channel inventory");
  scn.tau1 = tau1_of(scn.model.channels);
  scn.model.V.validate(scn.dim(), scn.model.L);
  return scn;
}

ScatteringData assemble(const Scenario& scn, const SpectralPoint& pt) {
  assert_physical_l2(scn, pt, outgoing_rates(scn, pt));
  MatrixXcd X = MatrixXcd::Zero(scn.dim(), scn.in_mult);
  X.middleRows(scn.in_offset, scn.in_mult).setIdentity();
  ScatteringData sd = finish_assembly(scn, pt, X);
  return sd;
}

ScatteringData assemble_ref_block(const Scenario& scn, const SpectralPoint& pt,
                                  const MatrixXcd& data) {
  // stack rows over every reference-threshold channel, in channel order
  std::vector<int> rows;
  const auto offs = channel_offsets(scn.model.channels);
  for (std::size_t i = 0; i < scn.model.channels.size(); ++i) {
    const Channel& c = scn.model.channels[i];
    if (c.nu == 0.0 && std::abs(c.theta - pt.dk * pt.dk) <= scn.num.block_tol)
      for (int j = 0; j < c.mult; ++j) rows.push_back(offs[i] + j);
  }
  if (static_cast<int>(rows.size()) != data.rows())
    throw InvariantViolation("assemble_ref_block: datum rows do not match the reference block");
  MatrixXcd X = MatrixXcd::Zero(scn.dim(), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) X.row(rows[i]) = data.row(static_cast<int>(i));
  return finish_assembly(scn, pt, X);
}

ModelField eigenform(const Scenario& scn, const ScatteringData& sd, const VectorXcd& phi) {
  const int n = scn.dim();
  const cplx iota = sd.pt.s - sd.pt.dk;
  const VectorXcd o = outgoing_rates(scn, sd.pt);
  // incoming embedding consistent with sd: boundary_value - t
  const MatrixXcd X = sd.boundary_value - sd.t_full;
  const VectorXcd xin = X * phi;
  const VectorXcd tphi = sd.t_full * phi;
  ModelField field;
  field.cusp.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ChannelField& cf = field.cusp[static_cast<std::size_t>(i)];
    if (xin[i] != cplx(0.0)) cf.terms.push_back({xin[i], iota});
    cf.terms.push_back({tphi[i], o[i]});
  }
  if (!scn.dtn_source && scn.model.vertex.kind == VertexKind::transparent) {
    field.interior = interior_field(scn.model, sd.pt.lambda(), VectorXcd(xin + tphi));
  }
  return field;
}

MatchingProbe probe_matching(const Scenario& scn, const SpectralPoint& pt) {
  const int n = scn.dim();
  const VectorXcd o = outgoing_rates(scn, pt);
  MatchingProbe probe{};
  switch (vertex_mode(scn)) {
    case VertexMode::dirichlet:
      probe.sigma_min = probe.sigma_max = probe.cond = 1.0;
      return probe;
    case VertexMode::neumann: {
      double mn = 1e300, mx = 0.0;
      for (int i = 0; i < n; ++i) {
        mn = std::min(mn, std::abs(o[i]));
        mx = std::max(mx, std::abs(o[i]));
      }
      probe.sigma_min = mn;
      probe.sigma_max = mx;
      probe.cond = mx / std::max(mn, 1e-300);
      return probe;
    }
    case VertexMode::matched: {
      const MatrixXcd N = matched_dtn(scn, pt.lambda());
      MatrixXcd A = MatrixXcd(o.asDiagonal()) - N;
      Eigen::JacobiSVD<MatrixXcd> svd(A);
      probe.sigma_min = svd.singularValues().minCoeff();
      probe.sigma_max = svd.singularValues().maxCoeff();
      probe.cond = probe.sigma_max / std::max(probe.sigma_min, 1e-300);
      return probe;
    }
  }
  throw NumericError("probe_matching: unreachable");
}

ResidualReport eigenform_residual(const Scenario& scn, const SpectralPoint& pt,
                                  const ModelField& field) {
  ResidualReport rep;
  const cplx lambda = pt.lambda();
  const VectorXd th = const_cast<CompactModel&>(scn.model).theta_diag();
  for (std::size_t i = 0; i < field.cusp.size(); ++i) {
    for (const auto& term : field.cusp[i].terms) {
      const cplx res = (-term.rate * term.rate + th[static_cast<int>(i)] - lambda) * term.coef;
      rep.cusp = std::max(rep.cusp, std::abs(res));
    }
  }
  if (field.has_interior()) {
    const auto& S = field.interior.samples;
    const double h = field.interior.step;
    const std::size_t n = S.size();
    const std::size_t stride = std::max<std::size_t>(1, n / 256);
    const VectorXcd thc = th.cast<cplx>();
    for (std::size_t i = stride; i + stride < n; i += stride) {
      const double u = -field.interior.L + static_cast<double>(i) * h;
      MatrixXcd r = -(S[i + 1] - 2.0 * S[i] + S[i - 1]) / (h * h);
      r += thc.asDiagonal() * S[i];
      r -= lambda * S[i];
      if (!scn.model.V.is_zero()) r += scn.model.V.eval(u, scn.model.L, scn.dim()) * S[i];
      rep.interior = std::max(rep.interior, r.cwiseAbs().maxCoeff());
    }
  }
  return rep;
}

double selfadjoint_check(const Scenario& scn, cplx s, const VectorXcd& phi, const VectorXcd& psi) {
  const SpectralPoint pt = scn.point(s);
  const SpectralPoint ptc = conjugate_point(pt);
  const MatrixXcd T_at_conj = assemble(scn, ptc).ref_rows();
  const MatrixXcd T_at_s = assemble(scn, pt).ref_rows();
  return std::abs(inner(VectorXcd(T_at_conj * phi), psi) - inner(phi, VectorXcd(T_at_s * psi)));
}

double deck_equation_check(const Scenario& scn, const SpectralPoint& pt, const VectorXcd& phi) {
  if (std::abs(pt.s - pt.dk) < 1e-8)
    throw InvariantViolation("deck_equation_check: branch point");
  for (const auto& c : scn.model.channels)
    if (c.theta <= pt.dk * pt.dk + scn.num.block_tol &&
        std::abs(c.theta - pt.dk * pt.dk) > scn.num.block_tol)
      throw InvariantViolation(
          "deck_equation_check: channel below the reference threshold violates the guard");
  const SpectralPoint flipped = deck_flip(pt, scn.tau1);

  ScatteringData sd1 = assemble(scn, pt);
  ModelField e1 = eigenform(scn, sd1, phi);
  const MatrixXcd refrows = sd1.ref_threshold_rows(pt.dk, scn.num.block_tol);
  ScatteringData sd2 = assemble_ref_block(scn, flipped, MatrixXcd(refrows * phi));
  VectorXcd one = VectorXcd::Ones(1);
  ModelField e2 = eigenform(scn, sd2, one);

  double defect = 0.0;
  for (double u = 0.0; u <= 5.0; u += 0.25) {
    for (std::size_t i = 0; i < e1.cusp.size(); ++i)
      defect = std::max(defect, std::abs(e1.cusp[i].eval(u) - e2.cusp[i].eval(u)));
  }
  if (e1.has_interior() && e2.has_interior()) {
    const std::size_t n = e1.interior.samples.size();
    const std::size_t stride = std::max<std::size_t>(1, n / 64);
    for (std::size_t i = 0; i < n; i += stride)
      defect = std::max(defect,
                        (e1.interior.samples[i] - e2.interior.samples[i]).cwiseAbs().maxCoeff());
  }
  return defect;
}

bool dualize_consistent(const Scenario& scn, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (scn.incoming_normal) return fail("incoming datum must be tangential");
  if (!scn.bundle.poincare_symmetric()) return fail("bundle dimensions not Poincare-symmetric");
  const int n = scn.dim();
  const VectorXd a = const_cast<CompactModel&>(scn.model).a_diag();
  std::vector<bool> is_normal(static_cast<std::size_t>(n));
  {
    int i = 0;
    for (const auto& c : scn.model.channels)
      for (int j = 0; j < c.mult; ++j) is_normal[static_cast<std::size_t>(i++)] = c.normal;
  }
  // the derived-normal construction drops the du-wedge components, so the
  // cavity data must not leak across the tangential/normal split
  auto decoupled = [&](const MatrixXcd& m, const char* what) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (std::abs(m(i, j)) < 1e-14) continue;
        if (is_normal[static_cast<std::size_t>(i)] != is_normal[static_cast<std::size_t>(j)])
          return fail(std::string(what) + " couples tangential and normal channels");
      }
    return true;
  };
  switch (scn.model.V.kind) {
    case Potential::Kind::zero:
    case Potential::Kind::scalar:
      break;
    case Potential::Kind::constant:
      if (!decoupled(scn.model.V.constant, "potential")) return false;
      break;
    case Potential::Kind::piecewise:
      for (const auto& [until, m] : scn.model.V.pieces)
        if (!decoupled(m, "potential")) return false;
      break;
    case Potential::Kind::samples:
      for (const auto& m : scn.model.V.samples)
        if (!decoupled(m, "potential")) return false;
      break;
  }
  if (scn.model.left.kind == BCKind::robin && !scn.dtn_source)
    if (!decoupled(scn.model.left.robin, "left boundary condition")) return false;
  if (!scn.dtn_source && scn.model.vertex.kind == VertexKind::robin)
    if (!decoupled(scn.model.vertex.robin, "vertex condition")) return false;
  if (!scn.dtn_source && scn.model.vertex.kind == VertexKind::neumann) {
    for (int i = 0; i < n; ++i)
      if (!is_normal[static_cast<std::size_t>(i)] && std::abs(a[i]) < 1e-12)
        return fail("neumann vertex with a middle tangential channel has no dual closure");
  }
  // nu lists must be star-symmetric
  for (const auto& [key, list] : scn.bundle.nu_lists) {
    auto [r, s] = key;
    auto it = scn.bundle.nu_lists.find({scn.bundle.b - r, scn.bundle.f - s});
    const std::size_t other = (it == scn.bundle.nu_lists.end()) ? 0 : it->second.size();
    if (other != list.size()) return fail("nu lists not star-symmetric");
  }
  return true;
}

namespace {

// Primal tangential sub-block bookkeeping shared by dualize / normal_companion.
struct TangentialSlice {
  std::vector<int> comps;          // primal component indices, channel order
  std::vector<int> channel_index;  // primal channel index per slice channel
  Eigen::VectorXd a;               // weights on the slice
  Eigen::VectorXd theta;
};

TangentialSlice tangential_slice(const Scenario& scn) {
  TangentialSlice ts;
  const auto offs = channel_offsets(scn.model.channels);
  for (std::size_t i = 0; i < scn.model.channels.size(); ++i) {
    const Channel& c = scn.model.channels[i];
    if (c.normal) continue;
    ts.channel_index.push_back(static_cast<int>(i));
    for (int j = 0; j < c.mult; ++j) ts.comps.push_back(offs[i] + j);
  }
  const int m = static_cast<int>(ts.comps.size());
  ts.a.resize(m);
  ts.theta.resize(m);
  const VectorXd a_full = const_cast<CompactModel&>(scn.model).a_diag();
  const VectorXd th_full = const_cast<CompactModel&>(scn.model).theta_diag();
  for (int i = 0; i < m; ++i) {
    ts.a[i] = a_full[ts.comps[static_cast<std::size_t>(i)]];
    ts.theta[i] = th_full[ts.comps[static_cast<std::size_t>(i)]];
  }
  return ts;
}

// Primal DtN restricted to the tangential slice.
MatrixXcd primal_slice_dtn(const Scenario& scn, const TangentialSlice& ts, cplx lambda) {
  const int m = static_cast<int>(ts.comps.size());
  MatrixXcd Nfull;
  if (scn.dtn_source)
    Nfull = scn.dtn_source(lambda).N;
  else
    switch (scn.model.vertex.kind) {
      case VertexKind::neumann:
        Nfull = MatrixXcd::Zero(scn.dim(), scn.dim());
        break;
      case VertexKind::robin:
        Nfull = scn.model.vertex.robin;
        break;
      case VertexKind::transparent:
        Nfull = dtn(scn.model, lambda).N;
        break;
      case VertexKind::dirichlet:
        throw NumericError("primal_slice_dtn: dirichlet handled separately");
    }
  MatrixXcd N(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      N(i, j) = Nfull(ts.comps[static_cast<std::size_t>(i)], ts.comps[static_cast<std::size_t>(j)]);
  return N;
}

// First-order closure (A N + Theta - lambda)(A + N)^{-1} on the slice: the
// Cauchy data of (A + d/du) applied to a field with derivative data N and
// the cusp-side second derivative (Theta - lambda) at the junction.
MatrixXcd closure_dtn(const Scenario& scn, const TangentialSlice& ts, cplx lambda) {
  const int m = static_cast<int>(ts.comps.size());
  const MatrixXcd A = ts.a.cast<cplx>().asDiagonal();
  if (!scn.dtn_source && scn.model.vertex.kind == VertexKind::dirichlet) return A;
  const MatrixXcd N = primal_slice_dtn(scn, ts, lambda);
  MatrixXcd den = A + N;
  Eigen::FullPivLU<MatrixXcd> lu(den);
  if (!lu.isInvertible())
    throw NumericError("dualize closure: A + N singular at this lambda");
  MatrixXcd num = A * N + MatrixXcd(ts.theta.cast<cplx>().asDiagonal()) -
                  lambda * MatrixXcd::Identity(m, m);
  return num * lu.inverse();
}

// Scenario with channel set at `degree`, incoming (k_in, normal_in), whose
// DtN places the closure on the image components and a trivial decoupled
// diagonal elsewhere.  `map_channel` locates, for each slice channel of the
// primal, the matching channel in the new inventory.
Scenario derived_scenario(const Scenario& scn, std::string suffix, int degree, int k_in,
                          bool normal_in,
                          const std::function<std::pair<int, int>(const Channel&)>& image_bidegree,
                          bool image_normal, bool apply_star_signs) {
  auto primal = std::make_shared<Scenario>(scn);
  auto ts = std::make_shared<TangentialSlice>(tangential_slice(scn));

  CompactModel dual_model;
  dual_model.L = scn.model.L;
  dual_model.left.kind = BCKind::dirichlet;
  dual_model.vertex.kind = VertexKind::transparent;
  dual_model.h_max = scn.model.h_max;
  dual_model.ode_tol = scn.model.ode_tol;
  dual_model.cond_threshold = scn.model.cond_threshold;

  Scenario out;
  out.name = scn.name + suffix;
  out.bundle = scn.bundle;
  out.model = dual_model;
  out.p = degree;
  out.incoming_k = k_in;
  out.incoming_normal = normal_in;
  out.num = scn.num;
  out.model.channels = channels_for_degree(scn.bundle, degree, true);
  if (out.model.channels.empty()) throw InvariantViolation("derived scenario: empty inventory");
  const auto offs = channel_offsets(out.model.channels);
  for (std::size_t i = 0; i < out.model.channels.size(); ++i) {
    const Channel& c = out.model.channels[i];
    if (c.s == k_in && c.nu == 0.0 && c.normal == normal_in) {
      out.in_channel = static_cast<int>(i);
      out.in_offset = offs[i];
      out.in_mult = c.mult;
    }
  }
  if (out.in_channel < 0)
    throw InvariantViolation("derived scenario: incoming block absent");
  out.tau1 = tau1_of(out.model.channels);

  // component map: slice component -> derived component (with star sign)
  const int ddim = out.dim();
  std::vector<int> image_comp(ts->comps.size(), -1);
  std::vector<double> image_sign(ts->comps.size(), 1.0);
  {
    std::size_t slice_pos = 0;
    for (int pci : ts->channel_index) {
      const Channel& pc = scn.model.channels[static_cast<std::size_t>(pci)];
      auto [ir, is] = image_bidegree(pc);
      int found = -1;
      for (std::size_t j = 0; j < out.model.channels.size(); ++j) {
        const Channel& dc = out.model.channels[j];
        if (dc.r == ir && dc.s == is && dc.normal == image_normal &&
            std::abs(dc.nu - pc.nu) <= 1e-12) {
          found = static_cast<int>(j);
          break;
        }
      }
      if (found < 0 || out.model.channels[static_cast<std::size_t>(found)].mult != pc.mult)
        throw InvariantViolation("derived scenario: channel image missing or mismatched");
      const double sign =
          apply_star_signs ? static_cast<double>(scn.bundle.star_sign(pc.r, pc.s)) : 1.0;
      for (int j = 0; j < pc.mult; ++j) {
        image_comp[slice_pos] = offs[static_cast<std::size_t>(found)] + j;
        image_sign[slice_pos] = sign;
        ++slice_pos;
      }
    }
  }

  VectorXd dual_theta = out.model.theta_diag();
  auto image_comp_c = std::make_shared<std::vector<int>>(image_comp);
  auto image_sign_c = std::make_shared<std::vector<double>>(image_sign);
  auto dual_theta_c = std::make_shared<VectorXd>(dual_theta);

  out.dtn_source = [primal, ts, image_comp_c, image_sign_c, dual_theta_c, ddim](cplx lambda) {
    DtNMap map;
    map.lambda = lambda;
    const MatrixXcd Nc = closure_dtn(*primal, *ts, lambda);
    // decoupled diagonal on components not in the image
    MatrixXcd N = MatrixXcd::Zero(ddim, ddim);
    std::vector<bool> covered(static_cast<std::size_t>(ddim), false);
    const auto& ic = *image_comp_c;
    const auto& sg = *image_sign_c;
    for (std::size_t i = 0; i < ic.size(); ++i) covered[static_cast<std::size_t>(ic[i])] = true;
    for (int i = 0; i < ddim; ++i)
      if (!covered[static_cast<std::size_t>(i)]) N(i, i) = (*dual_theta_c)[i] + 1.0;
    for (std::size_t i = 0; i < ic.size(); ++i)
      for (std::size_t j = 0; j < ic.size(); ++j)
        N(ic[i], ic[j]) = sg[i] * sg[j] * Nc(static_cast<int>(i), static_cast<int>(j));
    map.N = std::move(N);
    map.cond = 1.0;
    return map;
  };
  return out;
}

}  // namespace

Scenario dualize(const Scenario& scn) {
  std::string why;
  if (!dualize_consistent(scn, &why))
    throw InvariantViolation("dualize: " + why);
  const int b = scn.bundle.b, f = scn.bundle.f;
  return derived_scenario(
      scn, "_dual", b + f - scn.p, f - scn.incoming_k, false,
      [b, f](const Channel& c) { return std::pair<int, int>{b - c.r, f - c.s}; }, false, true);
}

Scenario normal_companion(const Scenario& scn) {
  std::string why;
  if (!dualize_consistent(scn, &why))
    throw InvariantViolation("normal_companion: " + why);
  return derived_scenario(
      scn, "_normal", scn.p + 1, scn.incoming_k, true,
      [](const Channel& c) { return std::pair<int, int>{c.r, c.s}; }, true, false);
}

std::optional<double> star_duality_check(const Scenario& scn, cplx s, const VectorXcd& phi) {
  if (!dualize_consistent(scn)) return std::nullopt;
  Scenario dual = dualize(scn);
  const SpectralPoint pt = scn.point(s);
  const SpectralPoint ptd = dual.point(s, pt.zero_sheet);
  ScatteringData sp = assemble(scn, pt);
  ScatteringData sd = assemble(dual, ptd);
  const cplx pref = scn.incoming_channel().a - scn.dk() + s;
  const double sig_in =
      static_cast<double>(scn.bundle.star_sign(scn.incoming_channel().r, scn.incoming_channel().s));
  double defect = 0.0;
  for (const auto& c : scn.model.channels) {
    if (c.normal || c.nu != 0.0) continue;
    const MatrixXcd Tl = sp.block_by(c.s, 0.0, false);
    const MatrixXcd Dl = sd.block_by(scn.bundle.f - c.s, 0.0, false);
    if (Tl.rows() == 0 || Dl.rows() == 0) continue;
    const cplx rate = c.a + channel_rate(pt, c, Direction::outgoing);
    const double sig_l = static_cast<double>(scn.bundle.star_sign(c.r, c.s));
    const VectorXcd lhs = pref * sig_in * (Dl * phi);
    const VectorXcd rhs = rate * sig_l * (Tl * phi);
    defect = std::max(defect, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return defect;
}

std::map<int, MatrixXcd> normal_block_from_tangential(const Scenario& scn,
                                                      const ScatteringData& sd) {
  const cplx denom = scn.incoming_channel().a - scn.dk() + sd.pt.s;
  if (std::abs(denom) < 1e-12)
    throw NumericError("normal_block_from_tangential: division guard at s = d_k - a_k");
  std::map<int, MatrixXcd> out;
  for (const auto& c : scn.model.channels) {
    if (c.normal || c.nu != 0.0) continue;
    const MatrixXcd Tl = sd.block_by(c.s, 0.0, false);
    if (Tl.rows() == 0) continue;
    const cplx rate = c.a + channel_rate(sd.pt, c, Direction::outgoing);
    out[c.s] = (rate / denom) * Tl;
  }
  return out;
}

double normal_block_identity_check(const Scenario& scn, const SpectralPoint& pt) {
  Scenario comp = normal_companion(scn);
  ScatteringData sp = assemble(scn, pt);
  auto derived = normal_block_from_tangential(scn, sp);
  const SpectralPoint ptc = comp.point(pt.s, pt.zero_sheet);
  ScatteringData sc = assemble(comp, ptc);
  double defect = 0.0;
  for (const auto& [l, tcheck] : derived) {
    const MatrixXcd assembled = sc.block_by(l, 0.0, true);
    if (assembled.rows() == 0) {
      defect = std::max(defect, tcheck.cwiseAbs().maxCoeff());
      continue;
    }
    defect = std::max(defect, (assembled - tcheck).cwiseAbs().maxCoeff());
  }
  return defect;
}

MatrixXcd t_derivative(const Scenario& scn, const SpectralPoint& pt, int order, double rho,
                       int points) {
  if (points <= 0) points = scn.num.contour_points;
  if (rho <= 0.0) {
    if (scn.num.contour_rho > 0.0) {
      rho = scn.num.contour_rho;
    } else if (pt.dk > 0.0) {
      rho = 0.45 * std::min({std::abs(pt.s - 2.0 * pt.dk), std::abs(pt.s - pt.dk), pt.dk});
    } else {
      rho = 0.45 * std::abs(pt.s);
    }
    if (!(rho > 0.0)) throw NumericError("t_derivative: cannot choose a contour radius");
  }
  MatrixXcd acc;
  for (int j = 0; j < points; ++j) {
    const double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(points);
    const cplx sj = pt.s + rho * std::exp(cplx(0, 1) * th);
    SpectralPoint ptj = (pt.dk > 0.0) ? scn.germ_point(sj) : scn.point(sj);
    MatrixXcd tj;
    try {
      tj = assemble(scn, ptj).t_full;
    } catch (const AtPole&) {
      throw NumericError("t_derivative: pole on the contour");
    }
    const cplx w = std::exp(cplx(0, -1) * static_cast<double>(order) * th);
    if (acc.size() == 0)
      acc = w * tj;
    else
      acc += w * tj;
  }
  double fact = 1.0;
  for (int i = 2; i <= order; ++i) fact *= i;
  MatrixXcd result = acc * (fact / (static_cast<double>(points) * std::pow(rho, order)));
  if (order == 0) {
    const MatrixXcd direct = assemble(scn, pt).t_full;
    if ((result - direct).norm() > 1e-6 * (1.0 + direct.norm()))
      throw NumericError("t_derivative: order-0 probe mismatch (pole inside contour)");
  }
  return result;
}

MatrixXcd t_derivative_lambda(const Scenario& scn, const SpectralPoint& pt, double rho,
                              int points) {
  const cplx dlds = 2.0 * pt.dk - 2.0 * pt.s;
  if (std::abs(dlds) < 1e-12)
    throw NumericError("t_derivative_lambda: branch point (dlambda/ds = 0)");
  return t_derivative(scn, pt, 1, rho, points) / dlds;
}

}  // namespace cuspidal
