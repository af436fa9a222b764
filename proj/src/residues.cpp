#include "cuspidal/residues.hpp"

#include <algorithm>
#include <cmath>

namespace cuspidal {

namespace {

std::vector<int> channel_offsets(const std::vector<Channel>& channels) {
  std::vector<int> off;
  int acc = 0;
  for (const auto& c : channels) {
    off.push_back(acc);
    acc += c.mult;
  }
  return off;
}

double sigma_at(const Scenario& scn, double s_re) {
  SpectralPoint pt = scn.germ_point(cplx(s_re, 0.0));
  try {
    return probe_matching(scn, pt).sigma_min;
  } catch (const NumericError&) {
    // dodge a cavity eigenvalue with a small imaginary offset
    pt = scn.germ_point(cplx(s_re, 1e-9));
    return probe_matching(scn, pt).sigma_min;
  }
}

}  // namespace

MatrixXcd ResidueData::block_by(int l, double nu, bool normal) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const Channel& c = channels[i];
    if (c.s == l && c.normal == normal && std::abs(c.nu - nu) <= 1e-12)
      return c_full.middleRows(offsets[i], c.mult);
  }
  return MatrixXcd(0, c_full.cols());
}

PoleScanResult pole_scan(const Scenario& scn, int grid_points) {
  PoleScanResult out;
  const double dk = scn.dk();
  if (dk <= 0.0) return out;  // middle degree: holomorphic, nothing to scan
  const double margin = scn.num.pole_margin > 0.0 ? scn.num.pole_margin : 0.02 * dk;
  const double a = dk + margin;
  const double b = 2.0 * dk;
  if (grid_points < 8) grid_points = 8;

  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  std::vector<double> sig(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    grid[static_cast<std::size_t>(i)] =
        a + (b - a) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    sig[static_cast<std::size_t>(i)] = sigma_at(scn, grid[static_cast<std::size_t>(i)]);
  }
  std::vector<double> sorted = sig;
  std::nth_element(sorted.begin(), sorted.begin() + grid_points / 2, sorted.end());
  out.grid_sigma_median = sorted[static_cast<std::size_t>(grid_points / 2)];
  const double decide = 1e-6 * std::max(out.grid_sigma_median, 1e-30);

  auto refine = [&](double lo, double hi) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = sigma_at(scn, c), fd = sigma_at(scn, d);
    for (int it = 0; it < 200 && (hi - lo) > 1e-12; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = sigma_at(scn, c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = sigma_at(scn, d);
      }
    }
    // quadratic polish on sigma^2 (smooth through the V-shaped bottom)
    const double m = 0.5 * (lo + hi);
    const double h = std::max(4.0 * (hi - lo), 1e-11);
    const double f0 = sigma_at(scn, m - h), f1 = sigma_at(scn, m), f2 = sigma_at(scn, m + h);
    const double q0 = f0 * f0, q1 = f1 * f1, q2 = f2 * f2;
    const double denom = q0 - 2.0 * q1 + q2;
    double s_star = m;
    if (denom > 0.0) {
      const double shift = 0.5 * h * (q0 - q2) / denom;
      if (std::abs(shift) <= h) s_star = m + shift;
    }
    return s_star;
  };

  for (int i = 1; i + 1 < grid_points; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    if (sig[ui] <= sig[ui - 1] && sig[ui] <= sig[ui + 1] &&
        sig[ui] < 0.25 * out.grid_sigma_median) {
      const double s_star = refine(grid[ui - 1], grid[ui + 1]);
      const double s_sig = sigma_at(scn, s_star);
      if (s_sig < decide) {
        out.candidates.push_back(s_star);
        out.sigma_at.push_back(s_sig);
      }
    }
  }
  // possible pole at the right endpoint s = 2 d_k (harmonic point)
  {
    const double s_sig = sigma_at(scn, b);
    if (s_sig < decide) {
      const double lo = b - (b - a) / static_cast<double>(grid_points - 1);
      const double s_star = refine(lo, b + 1e-6 * dk);
      out.candidates.push_back(std::min(s_star, b));
      out.sigma_at.push_back(sigma_at(scn, out.candidates.back()));
    }
  }
  return out;
}

double rectangle_sweep_min_sigma(const Scenario& scn, double re0, double re1, double im0,
                                 double im1, int n_re, int n_im) {
  double mn = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_re; ++i) {
    const double re = re0 + (re1 - re0) * static_cast<double>(i) / std::max(1, n_re - 1);
    for (int j = 0; j < n_im; ++j) {
      const double im = im0 + (im1 - im0) * static_cast<double>(j) / std::max(1, n_im - 1);
      for (double sgn : {1.0, -1.0}) {
        const SpectralPoint pt = scn.germ_point(cplx(re, sgn * im));
        mn = std::min(mn, probe_matching(scn, pt).sigma_min);
      }
    }
  }
  return mn;
}

namespace {

bool has_middle_channel(const Scenario& scn) {
  for (const auto& c : scn.model.channels)
    if (c.theta <= scn.num.block_tol) return true;
  return false;
}

// T evaluated for the contour; averages the two zero-root sheets when the
// contour winds around the harmonic branch point.
MatrixXcd contour_value(const Scenario& scn, cplx s, bool average_sheets) {
  if (!average_sheets) return assemble(scn, scn.germ_point(s)).t_full;
  const SpectralPoint p1 = scn.point(s, Sheet::physical);
  const SpectralPoint p2 = scn.point(s, Sheet::continued);
  return 0.5 * (assemble(scn, p1).t_full + assemble(scn, p2).t_full);
}

}  // namespace

ResidueData contour_residue(const Scenario& scn, double s0, double rho, int points) {
  const double dk = scn.dk();
  if (points <= 0) points = scn.num.contour_points;
  if (rho <= 0.0) {
    rho = scn.num.contour_rho;
    if (rho <= 0.0) rho = dk > 0.0 ? 0.05 * dk : 0.05 * std::abs(s0);
    if (rho <= 0.0) throw NumericError("contour_residue: cannot choose a radius");
  }
  if (dk > 0.0 && std::abs(s0 - dk) <= rho)
    throw InvariantViolation("contour_residue: contour touches the branch point d_k");
  const bool winds_harmonic = dk > 0.0 && std::abs(s0 - 2.0 * dk) < rho;
  const bool average = winds_harmonic && has_middle_channel(scn);

  const int m2 = 2 * points;
  std::vector<MatrixXcd> vals(static_cast<std::size_t>(m2));
  for (int j = 0; j < m2; ++j) {
    const double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(m2);
    cplx s = s0 + rho * std::exp(cplx(0, 1) * th);
    try {
      vals[static_cast<std::size_t>(j)] = contour_value(scn, s, average);
    } catch (const AtPole&) {
      throw NumericError("contour_residue: pole on the contour");
    } catch (const NumericError&) {
      // cavity eigenvalue on the contour: nudge the angle
      s = s0 + rho * std::exp(cplx(0, 1) * (th + 1e-7));
      vals[static_cast<std::size_t>(j)] = contour_value(scn, s, average);
    }
  }
  auto moments = [&](int stride) {
    MatrixXcd c = MatrixXcd::Zero(vals[0].rows(), vals[0].cols());
    MatrixXcd m2nd = c;
    int count = 0;
    for (int j = 0; j < m2; j += stride) {
      const double th = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(m2);
      const cplx e1 = std::exp(cplx(0, 1) * th);
      c += e1 * vals[static_cast<std::size_t>(j)];
      m2nd += e1 * e1 * vals[static_cast<std::size_t>(j)];
      ++count;
    }
    c *= rho / static_cast<double>(count);
    m2nd *= rho * rho / static_cast<double>(count);
    return std::pair<MatrixXcd, MatrixXcd>(c, m2nd);
  };
  auto [c_coarse, m_coarse] = moments(2);
  auto [c_fine, m_fine] = moments(1);
  ResidueData rd;
  rd.s0 = s0;
  rd.pt0 = scn.germ_point(cplx(s0, 0.0));
  rd.c_full = c_fine;
  rd.convergence = (c_fine - c_coarse).norm();
  if (rd.convergence > 1e-8 * (1.0 + c_fine.norm()))
    throw NumericError("contour_residue: doubling the point count changed the result");
  const double cnorm = c_fine.norm();
  rd.order_certificate = m_fine.norm() / (rho * std::max(cnorm, rho));
  rd.rho = rho;
  rd.points = m2;
  rd.channels = scn.model.channels;
  rd.offsets = channel_offsets(rd.channels);
  rd.in_offset = scn.in_offset;
  rd.in_mult = scn.in_mult;

  const double lambda0 = (lambda_of_s(cplx(s0, 0.0), dk)).real();
  double leak = 0.0;
  int comp = 0;
  for (const auto& c : scn.model.channels) {
    for (int j = 0; j < c.mult; ++j, ++comp)
      if (c.theta < lambda0 + 1e-12)
        leak = std::max(leak, rd.c_full.row(comp).cwiseAbs().maxCoeff());
  }
  rd.open_channel_leak = leak;
  return rd;
}

ModelField residue_field(const Scenario& scn, const ResidueData& rd, const VectorXcd& phi) {
  const VectorXcd coef = rd.c_full * phi;
  ModelField field;
  const int n = scn.dim();
  field.cusp.resize(static_cast<std::size_t>(n));
  int comp = 0;
  for (const auto& c : scn.model.channels) {
    const cplx rate = channel_rate(rd.pt0, c, Direction::outgoing);
    for (int j = 0; j < c.mult; ++j, ++comp)
      field.cusp[static_cast<std::size_t>(comp)].terms.push_back({coef[comp], rate});
  }
  if (!scn.dtn_source && scn.model.vertex.kind == VertexKind::transparent)
    field.interior = interior_field(scn.model, rd.pt0.lambda(), coef);
  return field;
}

double residue_pairing_check(const Scenario& scn, const ResidueData& rd, const VectorXcd& phi,
                             const VectorXcd& psi) {
  ModelField ef = residue_field(scn, rd, phi);
  ModelField eg = residue_field(scn, rd, psi);
  cplx lhs = 0.0;
  const double scale = std::max(rd.c_full.norm(), 1e-30);
  for (std::size_t i = 0; i < ef.cusp.size(); ++i) {
    const auto& t1 = ef.cusp[i].terms[0];
    const auto& t2 = eg.cusp[i].terms[0];
    const cplx rho = t1.rate + std::conj(t2.rate);
    if (rho.real() >= -1e-14) {
      if (std::abs(t1.coef) <= 1e-8 * scale && std::abs(t2.coef) <= 1e-8 * scale) continue;
      throw InvariantViolation("residue_pairing_check: residue not square-integrable (channel " +
                               std::to_string(i) + ")");
    }
    lhs += -t1.coef * std::conj(t2.coef) / rho;
  }
  if (ef.has_interior()) lhs += interior_inner(ef.interior, eg.interior);
  const cplx rhs = inner(phi, VectorXcd(rd.ref_rows() * psi));
  return std::abs(lhs - rhs);
}

PsdSplit psd_split(const MatrixXcd& c, double rank_tol) {
  const MatrixXcd herm = 0.5 * (c + c.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm);
  const Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] < -10.0 * rank_tol)
      throw InvariantViolation("psd_split: negative eigenvalue beyond tolerance");
  std::vector<int> kers, ims;
  for (int i = 0; i < ev.size(); ++i)
    (ev[i] < rank_tol ? kers : ims).push_back(i);
  PsdSplit split;
  split.eigenvalues = ev;
  split.ker.resize(c.rows(), static_cast<int>(kers.size()));
  split.im.resize(c.rows(), static_cast<int>(ims.size()));
  for (std::size_t i = 0; i < kers.size(); ++i)
    split.ker.col(static_cast<int>(i)) = es.eigenvectors().col(kers[i]);
  for (std::size_t i = 0; i < ims.size(); ++i)
    split.im.col(static_cast<int>(i)) = es.eigenvectors().col(ims[i]);
  return split;
}

}  // namespace cuspidal
