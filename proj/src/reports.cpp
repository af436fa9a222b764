#include "cuspidal/reports.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

namespace cuspidal {

using nlohmann::json;

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int default_thread_count() {
  if (const char* env = std::getenv("CUSPIDAL_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json load_cache(const StageContext& ctx) {
  std::ifstream in(ctx.out_dir / "cache.json");
  if (!in) return json::object();
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return json::object();
  }
}

void update_cache(const StageContext& ctx, const std::string& stage, const std::string& file) {
  json cache = load_cache(ctx);
  cache[stage] = {{"hash", hash_hex(ctx.sf.hash)}, {"file", file}};
  std::ofstream out(ctx.out_dir / "cache.json");
  out << cache.dump(2) << "\n";
}

bool cache_fresh(const StageContext& ctx, const std::string& stage) {
  json cache = load_cache(ctx);
  return cache.contains(stage) && cache[stage].value("hash", "") == hash_hex(ctx.sf.hash);
}

void note(const StageContext& ctx, const std::string& msg) {
  if (!ctx.quiet) std::cout << msg << "\n";
}

json matrix_to_json(const MatrixXcd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

std::string block_id(const Channel& c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s[%d]nu=%g", c.normal ? "S" : "T", c.s, c.nu);
  return buf;
}

}  // namespace

void stage_sweep(StageContext& ctx) {
  const Scenario& scn = ctx.sf.scn;
  const SweepParams& sw = ctx.sf.sweep;
  const int total = sw.n_re * sw.n_im;
  struct Row {
    cplx s;
    bool at_pole = false;
    MatrixXcd t;
    double sigma_min = 0.0, cond = 0.0;
  };
  std::vector<Row> rows(static_cast<std::size_t>(total));
  parallel_for(total, ctx.threads, [&](int idx) {
    const int i = idx / sw.n_im;
    const int j = idx % sw.n_im;
    const double re = sw.re0 + (sw.re1 - sw.re0) * (sw.n_re > 1 ? double(i) / (sw.n_re - 1) : 0.0);
    const double im = sw.im0 + (sw.im1 - sw.im0) * (sw.n_im > 1 ? double(j) / (sw.n_im - 1) : 0.0);
    Row& row = rows[static_cast<std::size_t>(idx)];
    row.s = cplx(re, im);
    try {
      ScatteringData sd = assemble(scn, scn.germ_point(row.s));
      row.t = sd.t_full;
      row.sigma_min = sd.sigma_min;
      row.cond = sd.cond;
    } catch (const AtPole& p) {
      row.at_pole = true;
      row.sigma_min = p.sigma_min;
      row.cond = std::numeric_limits<double>::infinity();
      row.t = MatrixXcd::Zero(scn.dim(), scn.in_mult);
    } catch (const NumericError&) {
      // cavity eigenvalue: dodge with a small imaginary offset
      ScatteringData sd = assemble(scn, scn.germ_point(row.s + cplx(0.0, 1e-9)));
      row.t = sd.t_full;
      row.sigma_min = sd.sigma_min;
      row.cond = sd.cond;
    }
  });
  const auto file = ctx.out_dir / "sweep.csv";
  std::ofstream out(file);
  out << "re_s,im_s,re_lambda,im_lambda,blockId,row,col,re_t,im_t,sigma_min,cond\n";
  const auto offsets = [&] {
    std::vector<int> off;
    int acc = 0;
    for (const auto& c : scn.model.channels) {
      off.push_back(acc);
      acc += c.mult;
    }
    return off;
  }();
  for (const auto& row : rows) {
    const cplx lambda = lambda_of_s(row.s, scn.dk());
    for (std::size_t ci = 0; ci < scn.model.channels.size(); ++ci) {
      const Channel& c = scn.model.channels[ci];
      for (int i = 0; i < c.mult; ++i)
        for (int j = 0; j < scn.in_mult; ++j) {
          const cplx v = row.at_pole ? cplx(0, 0) : row.t(offsets[ci] + i, j);
          out << format_g17(row.s.real()) << ',' << format_g17(row.s.imag()) << ','
              << format_g17(lambda.real()) << ',' << format_g17(lambda.imag()) << ','
              << block_id(c) << ',' << i << ',' << j << ',' << format_g17(v.real()) << ','
              << format_g17(v.imag()) << ',' << format_g17(row.sigma_min) << ','
              << format_g17(row.cond) << "\n";
        }
    }
  }
  update_cache(ctx, "sweep", "sweep.csv");
  note(ctx, "sweep: wrote " + (ctx.out_dir / "sweep.csv").string());
}

void stage_scan(StageContext& ctx) {
  const Scenario& scn = ctx.sf.scn;
  const bool reused_sweep = cache_fresh(ctx, "sweep");
  if (reused_sweep) note(ctx, "scan: sweep cache hash verified, reusing " +
                                  (ctx.out_dir / "sweep.csv").string());
  PoleScanResult scan = pole_scan(scn, ctx.sf.scan.grid_points);
  const double dk = scn.dk();
  double rect_min = std::numeric_limits<double>::infinity();
  if (dk > 0.0) {
    rect_min = rectangle_sweep_min_sigma(
        scn, dk + (scn.num.pole_margin > 0 ? scn.num.pole_margin : 0.02 * dk),
        2.0 * dk + ctx.sf.scan.rect_re_extent, ctx.sf.scan.rect_im0, ctx.sf.scan.rect_im1,
        ctx.sf.scan.rect_n, ctx.sf.scan.rect_n);
  }
  json doc;
  doc["scenarioHash"] = hash_hex(ctx.sf.hash);
  doc["reusedSweep"] = reused_sweep;
  doc["candidates"] = scan.candidates;
  doc["sigmaAtCandidates"] = scan.sigma_at;
  doc["gridSigmaMedian"] = scan.grid_sigma_median;
  doc["rectangleMinSigma"] = rect_min;
  doc["sigmaFloor"] = scn.num.sigma_floor;
  std::ofstream out(ctx.out_dir / "scan.json");
  out << doc.dump(2) << "\n";
  update_cache(ctx, "scan", "scan.json");
  note(ctx, "scan: " + std::to_string(scan.candidates.size()) + " candidate(s)");
  if (dk > 0.0 && rect_min < scn.num.sigma_floor)
    throw InvariantViolation("scan: rectangle sweep sigma_min below floor (off-interval pole?)");
}

PoleScanResult load_scan_cache(const StageContext& ctx) {
  const auto file = ctx.out_dir / "scan.json";
  std::ifstream in(file);
  if (!in)
    throw NumericError("missing upstream cache " + file.string() +
                       "; run the 'scan' stage first");
  json doc = json::parse(in);
  if (doc.value("scenarioHash", "") != hash_hex(ctx.sf.hash))
    throw NumericError("stale upstream cache " + file.string() +
                       " (scenario changed); re-run the 'scan' stage");
  PoleScanResult scan;
  for (const auto& v : doc["candidates"]) scan.candidates.push_back(v.get<double>());
  for (const auto& v : doc["sigmaAtCandidates"]) scan.sigma_at.push_back(v.get<double>());
  scan.grid_sigma_median = doc.value("gridSigmaMedian", 0.0);
  return scan;
}

void stage_residues(StageContext& ctx) {
  const Scenario& scn = ctx.sf.scn;
  PoleScanResult scan = load_scan_cache(ctx);
  std::vector<double> points = scan.candidates;
  const double dk = scn.dk();
  // always certify the harmonic point
  const double harmonic = 2.0 * dk;
  bool have_harmonic = false;
  for (double s0 : points)
    if (std::abs(s0 - harmonic) < 1e-6) have_harmonic = true;
  if (!have_harmonic && dk > 0.0) points.push_back(harmonic);

  json list = json::array();
  std::string violated;
  for (double s0 : points) {
    ResidueData rd = contour_residue(scn, s0);
    json entry;
    entry["s0"] = s0;
    entry["rho"] = rd.rho;
    entry["points"] = rd.points;
    entry["orderCertificate"] = rd.order_certificate;
    entry["leak"] = rd.open_channel_leak;
    entry["convergence"] = rd.convergence;
    json blocks = json::array();
    for (std::size_t ci = 0; ci < rd.channels.size(); ++ci) {
      const Channel& c = rd.channels[ci];
      json b;
      b["l"] = c.s;
      b["nu"] = c.nu;
      b["normal"] = c.normal;
      b["matrix"] = matrix_to_json(rd.c_full.middleRows(rd.offsets[ci], c.mult));
      blocks.push_back(b);
    }
    entry["blocks"] = blocks;
    const MatrixXcd cref = rd.ref_rows();
    const double cnorm = cref.norm();
    const double herm_defect = (cref - cref.adjoint()).norm();
    entry["hermitianDefect"] = herm_defect;
    double min_eig = 0.0;
    if (cref.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (cref + cref.adjoint()));
      min_eig = es.eigenvalues().minCoeff();
    }
    entry["minEigenvalue"] = min_eig;
    json defects = json::array();
    const bool significant = cnorm > 1e-9;
    if (significant) {
      for (int i = 0; i < scn.in_mult; ++i)
        for (int j = 0; j < scn.in_mult; ++j) {
          VectorXcd phi = VectorXcd::Zero(scn.in_mult);
          VectorXcd psi = VectorXcd::Zero(scn.in_mult);
          phi[i] = 1.0;
          psi[j] = 1.0;
          defects.push_back(residue_pairing_check(scn, rd, phi, psi));
        }
    }
    entry["pairingDefects"] = defects;
    list.push_back(entry);

    if (herm_defect > 1e-9 * std::max(cnorm, 1e-12) && cnorm > 1e-9)
      violated = "residue Hermitian symmetry";
    if (min_eig < -1e-10) violated = "residue positive semidefiniteness";
    if (rd.order_certificate > 1e-7) violated = "pole order certificate";
    if (rd.open_channel_leak > 1e-7 * std::max(1.0, cnorm)) violated = "open-channel leak";
    for (const auto& d : defects)
      if (d.get<double>() > 1e-6 * (1.0 + cnorm)) violated = "residue pairing identity";
  }
  json doc;
  doc["scenarioHash"] = hash_hex(ctx.sf.hash);
  doc["residues"] = list;
  std::ofstream out(ctx.out_dir / "residues.json");
  out << doc.dump(2) << "\n";
  update_cache(ctx, "residues", "residues.json");
  note(ctx, "residues: " + std::to_string(points.size()) + " contour(s)");
  if (!violated.empty()) throw InvariantViolation("residues: " + violated + " violated");
}

void stage_ms(StageContext& ctx) {
  const Scenario& scn = ctx.sf.scn;
  PoleScanResult scan;
  try {
    scan = load_scan_cache(ctx);
  } catch (const NumericError&) {
    scan = pole_scan(scn, 200);
  }
  const MsParams& ms = ctx.sf.ms;
  const int total = static_cast<int>(ms.taus.size() * ms.rs.size());
  std::vector<MsResult> results(static_cast<std::size_t>(total));
  parallel_for(total, ctx.threads, [&](int idx) {
    const double tau = ms.taus[static_cast<std::size_t>(idx) / ms.rs.size()];
    const double r = ms.rs[static_cast<std::size_t>(idx) % ms.rs.size()];
    VectorXcd phi = VectorXcd::Zero(scn.in_mult);
    phi[0] = 1.0;
    results[static_cast<std::size_t>(idx)] = verify_ms(scn, tau, r, phi, &scan);
  });
  const auto file = ctx.out_dir / "ms.csv";
  std::ofstream out(file);
  out << "tau,r,lhs,rhs,relError,truncationBound\n";
  double worst = 0.0;
  for (const auto& res : results) {
    out << format_g17(res.tau) << ',' << format_g17(res.r) << ',' << format_g17(res.lhs) << ','
        << format_g17(res.rhs) << ',' << format_g17(res.rel_error) << ','
        << format_g17(res.truncation_bound) << "\n";
    worst = std::max(worst, res.rel_error);
  }
  update_cache(ctx, "ms", "ms.csv");
  note(ctx, "ms: worst relative error " + format_g17(worst));
  if (worst > ms.tol)
    throw InvariantViolation("ms: norm identity relative error above tolerance");
}

void stage_classify(StageContext& ctx) {
  const Scenario& scn = ctx.sf.scn;
  ClassifierData data;
  if (!ctx.sf.classify.from_matrices.empty()) {
    data = load_classifier_matrices(ctx.sf.classify.from_matrices);
  } else {
    data = compute_classifier_data(scn);
  }
  data.validate();
  json degrees = json::array();
  std::string violated;
  const int f = data.bundle.f;
  for (int p = 0; p <= data.bundle.b + f + 1; ++p) {
    ApDescription ap = restriction_image(data, p);
    json jp;
    jp["p"] = p;
    json blocks = json::array();
    int tags_nonzero = 0;
    json tag_counts = {{"residue", 0}, {"middleValue", 0}, {"valueAt2d", 0}, {"zero", 0}};
    for (const auto& b : ap.blocks) {
      json jb;
      jb["k"] = b.k;
      jb["kind"] = b.kind;
      jb["dim"] = b.dim;
      jb["blockDim"] = data.block_dim(p, b.k);
      blocks.push_back(jb);
      // tag every basis vector of the block
      const int d = data.block_dim(p, b.k);
      for (int i = 0; i < d; ++i) {
        VectorXcd phi;
        // decide membership along the computed bases: use the block basis
        // itself plus its orthogonal complement
        if (i < b.dim && b.dim > 0) {
          phi = b.basis.col(i);
        } else {
          // complement vector: any unit vector orthogonal to the basis
          MatrixXcd proj = MatrixXcd::Identity(d, d);
          if (b.dim > 0) proj -= b.basis * b.basis.adjoint();
          Eigen::JacobiSVD<MatrixXcd> svd(proj, Eigen::ComputeThinU);
          phi = svd.matrixU().col(i - b.dim);
        }
        XiResult xi = xi_classify(data, p, b.k, phi);
        switch (xi.tag) {
          case XiTag::residue:
            tag_counts["residue"] = tag_counts["residue"].get<int>() + 1;
            break;
          case XiTag::middleValue:
            tag_counts["middleValue"] = tag_counts["middleValue"].get<int>() + 1;
            break;
          case XiTag::valueAt2d:
            tag_counts["valueAt2d"] = tag_counts["valueAt2d"].get<int>() + 1;
            break;
          case XiTag::zero:
            tag_counts["zero"] = tag_counts["zero"].get<int>() + 1;
            break;
        }
        if (xi.tag != XiTag::zero) ++tags_nonzero;
      }
    }
    jp["blocks"] = blocks;
    jp["dimAp"] = ap.dim;
    jp["dimHinf"] = h_inf_dimension(data, p);
    jp["tagCounts"] = tag_counts;
    if (tags_nonzero != ap.dim) violated = "singular-value tag count vs dim A^p";
    degrees.push_back(jp);
  }
  json doc;
  doc["scenarioHash"] = hash_hex(ctx.sf.hash);
  doc["provenance"] = data.provenance;
  doc["degrees"] = degrees;
  if ((data.bundle.b + f + 1) % 4 == 0) {
    SignatureReport rep = signature_check(data);
    json sig;
    sig["halfDegree"] = rep.half_degree;
    sig["jDims"] = rep.j_dims;
    sig["dimWPlus"] = rep.dim_w_plus;
    sig["dimWMinus"] = rep.dim_w_minus;
    sig["tauEigenDefect"] = rep.tau_eigen_defect;
    sig["l2SignatureDifference"] = rep.l2_signature_difference;
    doc["signature"] = sig;
    if (!rep.dims_equal || rep.tau_eigen_defect > 1e-10)
      violated = "signature W-splitting";
  }
  std::ofstream out(ctx.out_dir / "classify.json");
  out << doc.dump(2) << "\n";
  update_cache(ctx, "classify", "classify.json");
  note(ctx, "classify: wrote " + (ctx.out_dir / "classify.json").string());
  if (!violated.empty()) throw InvariantViolation("classify: " + violated + " violated");
}

void run_stages(StageContext& ctx, const std::vector<std::string>& stages) {
  std::filesystem::create_directories(ctx.out_dir);
  for (const auto& st : stages) {
    if (st == "sweep")
      stage_sweep(ctx);
    else if (st == "scan")
      stage_scan(ctx);
    else if (st == "residues")
      stage_residues(ctx);
    else if (st == "ms")
      stage_ms(ctx);
    else if (st == "classify")
      stage_classify(ctx);
    else
      throw SchemaError("unknown stage '" + st + "'");
  }
}

}  // namespace cuspidal
