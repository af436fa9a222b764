#include "cuspidal/cavity.hpp"

#include <cmath>
#include <istream>
#include <sstream>

#include "cuspidal/kernels.hpp"

namespace cuspidal {

namespace {

void check_hermitian(const MatrixXcd& m, const char* what) {
  if (m.rows() != m.cols()) throw SchemaError(std::string(what) + ": matrix not square");
  const double scale = std::max(1.0, m.norm());
  if ((m - m.adjoint()).norm() > 1e-12 * scale)
    throw SchemaError(std::string(what) + ": matrix not Hermitian");
}

}  // namespace

MatrixXcd Potential::eval(double u, double L, int dim) const {
  switch (kind) {
    case Kind::zero:
      return MatrixXcd::Zero(dim, dim);
    case Kind::scalar:
      return scalar_value * MatrixXcd::Identity(dim, dim);
    case Kind::constant:
      return constant;
    case Kind::piecewise: {
      for (const auto& [until, m] : pieces)
        if (u <= until + 1e-14) return m;
      return pieces.back().second;
    }
    case Kind::samples: {
      const double x = (u + L) / sample_step;
      auto idx = static_cast<std::size_t>(std::llround(x));
      if (idx >= samples.size()) idx = samples.size() - 1;
      return samples[idx];
    }
  }
  return MatrixXcd::Zero(dim, dim);
}

void Potential::validate(int dim, double L) const {
  switch (kind) {
    case Kind::zero:
      return;
    case Kind::scalar:
      if (!std::isfinite(scalar_value)) throw SchemaError("potential: scalar value not finite");
      return;
    case Kind::constant:
      if (constant.rows() != dim) throw SchemaError("potential: dimension mismatch");
      check_hermitian(constant, "potential");
      return;
    case Kind::piecewise: {
      if (pieces.empty()) throw SchemaError("potential: empty piecewise list");
      double prev = -L;
      for (const auto& [until, m] : pieces) {
        if (until <= prev - 1e-14 || until > 1e-14)
          throw SchemaError("potential: piecewise breakpoints must ascend within (-L, 0]");
        if (m.rows() != dim) throw SchemaError("potential: dimension mismatch");
        check_hermitian(m, "potential");
        prev = until;
      }
      if (std::abs(pieces.back().first) > 1e-12)
        throw SchemaError("potential: last breakpoint must be 0");
      return;
    }
    case Kind::samples: {
      if (samples.size() < 3 || sample_step <= 0.0)
        throw SchemaError("potential: need at least 3 samples on a positive step");
      if (std::abs(sample_step * static_cast<double>(samples.size() - 1) - L) > 1e-9 * L)
        throw SchemaError("potential: samples do not cover [-L, 0]");
      for (const auto& m : samples) {
        if (m.rows() != dim) throw SchemaError("potential: dimension mismatch");
        check_hermitian(m, "potential");
      }
      return;
    }
  }
}

VectorXd CompactModel::theta_diag() const {
  VectorXd th(dim());
  int i = 0;
  for (const auto& c : channels)
    for (int j = 0; j < c.mult; ++j) th[i++] = c.theta;
  return th;
}

VectorXd CompactModel::a_diag() const {
  VectorXd av(dim());
  int i = 0;
  for (const auto& c : channels)
    for (int j = 0; j < c.mult; ++j) av[i++] = c.a;
  return av;
}

std::pair<int, int> CompactModel::block_of(int ci) const {
  int start = 0;
  for (int i = 0; i < ci; ++i) start += channels[static_cast<std::size_t>(i)].mult;
  return {start, channels[static_cast<std::size_t>(ci)].mult};
}

Potential potential_from_csv(std::istream& in, int dim) {
  Potential pot;
  pot.kind = Potential::Kind::samples;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("potential csv: empty stream");
  std::vector<double> us;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 1 + 2 * static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim))
      throw SchemaError("potential csv: wrong column count");
    us.push_back(vals[0]);
    MatrixXcd m(dim, dim);
    std::size_t idx = 1;
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) {
        m(i, j) = cplx(vals[idx], vals[idx + 1]);
        idx += 2;
      }
    pot.samples.push_back(m);
  }
  if (us.size() < 3) throw SchemaError("potential csv: need at least 3 rows");
  pot.sample_step = us[1] - us[0];
  for (std::size_t i = 1; i < us.size(); ++i)
    if (std::abs(us[i] - us[i - 1] - pot.sample_step) > 1e-9)
      throw SchemaError("potential csv: grid not uniform");
  return pot;
}

namespace {

// One RK4 integration at fixed step over the piece [u0, u1].
// State: Y (value) and P (derivative), dim x ncols, column-major buffers.
struct Rk4Workspace {
  int dim, ncols;
  std::vector<cplx> thl;  // theta_i - lambda
  const CompactModel* model;
  cplx lambda;
  MatrixXcd vbuf;

  // out_dP = (Theta - lambda) Y + V(u) Y; diagonal shifts are folded into thl
  void rhs(double u, const MatrixXcd& Y, MatrixXcd& dP) {
    dP.setZero();
    kernels::zdiag_acc(static_cast<std::size_t>(dim), static_cast<std::size_t>(ncols), thl.data(),
                       Y.data(), dP.data());
    if (!model->V.is_diagonal_shift()) {
      vbuf = model->V.eval(u, model->L, dim);
      kernels::zgemm_acc(static_cast<std::size_t>(dim), static_cast<std::size_t>(ncols),
                         vbuf.data(), Y.data(), dP.data());
    }
  }
};

struct Stepper {
  Rk4Workspace ws;
  MatrixXcd k1y, k1p, k2y, k2p, k3y, k3p, k4y, k4p, ty, tp;

  explicit Stepper(const CompactModel& model, cplx lambda, int ncols) {
    ws.dim = model.dim();
    ws.ncols = ncols;
    ws.model = &model;
    ws.lambda = lambda;
    const VectorXd th = model.theta_diag();
    const double shift = model.V.kind == Potential::Kind::scalar ? model.V.scalar_value : 0.0;
    ws.thl.resize(static_cast<std::size_t>(ws.dim));
    for (int i = 0; i < ws.dim; ++i)
      ws.thl[static_cast<std::size_t>(i)] = cplx(th[i] + shift, 0.0) - lambda;
    auto z = MatrixXcd::Zero(ws.dim, ncols);
    k1y = k1p = k2y = k2p = k3y = k3p = k4y = k4p = ty = tp = z;
  }

  void step(double u, double h, MatrixXcd& Y, MatrixXcd& P) {
    const std::size_t n = static_cast<std::size_t>(ws.dim) * static_cast<std::size_t>(ws.ncols);
    // k1
    k1y = P;
    ws.rhs(u, Y, k1p);
    // k2
    ty = Y; kernels::zaxpy(n, 0.5 * h, k1y.data(), ty.data());
    tp = P; kernels::zaxpy(n, 0.5 * h, k1p.data(), tp.data());
    k2y = tp;
    ws.rhs(u + 0.5 * h, ty, k2p);
    // k3
    ty = Y; kernels::zaxpy(n, 0.5 * h, k2y.data(), ty.data());
    tp = P; kernels::zaxpy(n, 0.5 * h, k2p.data(), tp.data());
    k3y = tp;
    ws.rhs(u + 0.5 * h, ty, k3p);
    // k4
    ty = Y; kernels::zaxpy(n, h, k3y.data(), ty.data());
    tp = P; kernels::zaxpy(n, h, k3p.data(), tp.data());
    k4y = tp;
    ws.rhs(u + h, ty, k4p);
    // combine
    kernels::zaxpy(n, h / 6.0, k1y.data(), Y.data());
    kernels::zaxpy(n, h / 3.0, k2y.data(), Y.data());
    kernels::zaxpy(n, h / 3.0, k3y.data(), Y.data());
    kernels::zaxpy(n, h / 6.0, k4y.data(), Y.data());
    kernels::zaxpy(n, h / 6.0, k1p.data(), P.data());
    kernels::zaxpy(n, h / 3.0, k2p.data(), P.data());
    kernels::zaxpy(n, h / 3.0, k3p.data(), P.data());
    kernels::zaxpy(n, h / 6.0, k4p.data(), P.data());
  }
};

struct RunResult {
  MatrixXcd Y0, Yp0;
  std::vector<MatrixXcd> traj;
};

RunResult run_fixed(const CompactModel& model, cplx lambda, long nsteps, bool keep) {
  const int dim = model.dim();
  MatrixXcd Y(dim, dim), P(dim, dim);
  switch (model.left.kind) {
    case BCKind::dirichlet:
      Y.setZero();
      P.setIdentity();
      break;
    case BCKind::neumann:
      Y.setIdentity();
      P.setZero();
      break;
    case BCKind::robin:
      Y.setIdentity();
      P = model.left.robin;
      break;
  }
  Stepper st(model, lambda, dim);
  const double h = model.L / static_cast<double>(nsteps);
  RunResult rr;
  if (keep) {
    rr.traj.reserve(static_cast<std::size_t>(nsteps) + 1);
    rr.traj.push_back(Y);
  }
  for (long i = 0; i < nsteps; ++i) {
    const double u = -model.L + static_cast<double>(i) * h;
    st.step(u, h, Y, P);
    if (keep) rr.traj.push_back(Y);
  }
  rr.Y0 = Y;
  rr.Yp0 = P;
  return rr;
}

long steps_for(const CompactModel& model) {
  double h = model.default_step();
  if (model.V.kind == Potential::Kind::samples) {
    // classic 4th-order stages need midpoint samples: step = 2 * grid step
    h = std::min(h, 2.0 * model.V.sample_step);
    long n = std::lround(model.L / (2.0 * model.V.sample_step));
    return std::max<long>(n, 2);
  }
  long n = static_cast<long>(std::ceil(model.L / h));
  if (n % 2) ++n;
  return std::max<long>(n, 4);
}

}  // namespace

PropagationResult propagate(const CompactModel& model, cplx lambda, bool keep_trajectory) {
  model.V.validate(model.dim(), model.L);
  if (model.left.kind == BCKind::robin) check_hermitian(model.left.robin, "left robin");
  const long n = steps_for(model);
  const bool can_halve = model.V.kind != Potential::Kind::samples;
  RunResult coarse = run_fixed(model, lambda, can_halve ? n : n / 2, false);
  RunResult fine = run_fixed(model, lambda, can_halve ? 2 * n : n, keep_trajectory);
  const double scale = std::max(1.0, fine.Y0.norm() + fine.Yp0.norm());
  const double err =
      ((coarse.Y0 - fine.Y0).norm() + (coarse.Yp0 - fine.Yp0).norm()) / (15.0 * scale);
  if (!(err < model.ode_tol))
    throw NumericError("propagate: step-halving estimate above tolerance");
  PropagationResult res;
  res.Y0 = std::move(fine.Y0);
  res.Yp0 = std::move(fine.Yp0);
  res.step = model.L / static_cast<double>(can_halve ? 2 * n : n);
  res.error_estimate = err;
  res.trajectory = std::move(fine.traj);
  return res;
}

DtNMap dtn(const CompactModel& model, cplx lambda) {
  PropagationResult pr = propagate(model, lambda);
  Eigen::JacobiSVD<MatrixXcd> svd(pr.Y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  DtNMap map;
  map.lambda = lambda;
  map.cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(map.cond < model.cond_threshold))
    throw NumericError("dtn: Y(0) near-singular (lambda close to a cavity eigenvalue)");
  map.N = pr.Yp0 * pr.Y0.partialPivLu().solve(MatrixXcd::Identity(model.dim(), model.dim()));
  return map;
}

InteriorField interior_field(const CompactModel& model, cplx lambda, const MatrixXcd& boundary_value) {
  PropagationResult pr = propagate(model, lambda, true);
  Eigen::JacobiSVD<MatrixXcd> svd(pr.Y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > model.cond_threshold)
    throw NumericError("interior_field: Y(0) near-singular");
  MatrixXcd coeff = pr.Y0.partialPivLu().solve(boundary_value);
  InteriorField field;
  field.step = pr.step;
  field.L = model.L;
  field.samples.reserve(pr.trajectory.size());
  for (const auto& Y : pr.trajectory) field.samples.push_back(Y * coeff);
  return field;
}

namespace {

double simpson_weights_sum(const InteriorField& f,
                           const std::function<double(const MatrixXcd&, const MatrixXcd&)>& term,
                           const InteriorField& g) {
  const std::size_t n = f.samples.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w;
    if (i == 0 || i + 1 == n)
      w = 1.0;
    else
      w = (i % 2 == 1) ? 4.0 : 2.0;
    acc += w * term(f.samples[i], g.samples[i]);
  }
  return acc * f.step / 3.0;
}

}  // namespace

double interior_sq_norm(const InteriorField& field) {
  return simpson_weights_sum(
      field,
      [](const MatrixXcd& a, const MatrixXcd&) {
        return kernels::sqnorm(static_cast<std::size_t>(a.size()), a.data());
      },
      field);
}

cplx interior_inner(const InteriorField& f1, const InteriorField& f2) {
  if (f1.samples.size() != f2.samples.size())
    throw NumericError("interior_inner: incompatible grids");
  cplx acc = 0.0;
  const std::size_t n = f1.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    double w = (i == 0 || i + 1 == n) ? 1.0 : ((i % 2 == 1) ? 4.0 : 2.0);
    acc += w * kernels::zdotc(static_cast<std::size_t>(f1.samples[i].size()), f1.samples[i].data(),
                              f2.samples[i].data());
  }
  return acc * f1.step / 3.0;
}

}  // namespace cuspidal
