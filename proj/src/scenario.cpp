#include "cuspidal/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cuspidal {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

[[noreturn]] void schema_fail(const std::string& msg) { throw SchemaError("scenario: " + msg); }

double need_finite(const json& j, const std::string& what) {
  if (!j.is_number()) schema_fail(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_fail(what + " must be finite");
  return v;
}

double need_nonneg(const json& j, const std::string& what) {
  const double v = need_finite(j, what);
  if (v < 0.0) schema_fail(what + " must be nonnegative");
  return v;
}

cplx parse_entry(const json& j, const std::string& what) {
  if (j.is_number()) return cplx(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cplx(j[0].get<double>(), j[1].get<double>());
  schema_fail(what + " entries must be numbers or [re, im] pairs");
}

MatrixXcd parse_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) schema_fail(what + " must be a nonempty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() && (j[0].empty() || j[0][0].is_array() || j[0][0].is_number())
                               ? j[0].size()
                               : 0;
  if (cols == 0) schema_fail(what + " rows must be arrays");
  MatrixXcd m(static_cast<int>(rows), static_cast<int>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) schema_fail(what + " rows must have equal length");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<int>(i), static_cast<int>(k)) = parse_entry(j[i][k], what);
  }
  return m;
}

BundleData parse_bundle(const json& j) {
  if (!j.is_object()) schema_fail("bundle must be an object");
  BundleData bun;
  if (!j.contains("f") || !j.contains("b") || !j.contains("h"))
    schema_fail("bundle needs f, b and h");
  bun.f = j.at("f").get<int>();
  bun.b = j.at("b").get<int>();
  const json& h = j.at("h");
  if (!h.is_array()) schema_fail("bundle h must be an array of rows");
  for (const auto& row : h) {
    std::vector<int> r;
    for (const auto& v : row) {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        schema_fail("bundle h entries must be integers");
      r.push_back(v.get<int>());
    }
    bun.h.push_back(std::move(r));
  }
  if (j.contains("nuLists")) {
    for (const auto& e : j.at("nuLists")) {
      const int r = e.at("r").get<int>();
      const int s = e.at("s").get<int>();
      bun.nu_lists[{r, s}].push_back(
          {need_finite(e.at("nu"), "nu"), e.at("mult").get<int>()});
    }
  }
  if (j.contains("starSigns")) {
    for (const auto& e : j.at("starSigns"))
      bun.star_signs[{e.at("r").get<int>(), e.at("s").get<int>()}] = e.at("sign").get<int>();
  }
  bun.validate();
  return bun;
}

void parse_bc(const json& j, BoundaryCondition* bc, const std::string& what) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "dirichlet")
      bc->kind = BCKind::dirichlet;
    else if (s == "neumann")
      bc->kind = BCKind::neumann;
    else
      schema_fail(what + ": unknown kind '" + s + "'");
    return;
  }
  if (j.is_object() && j.contains("robin")) {
    bc->kind = BCKind::robin;
    bc->robin = parse_matrix(j.at("robin"), what + " robin");
    return;
  }
  schema_fail(what + " must be a string or {robin: matrix}");
}

void parse_vertex(const json& j, VertexCondition* vc) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "transparent")
      vc->kind = VertexKind::transparent;
    else if (s == "dirichlet")
      vc->kind = VertexKind::dirichlet;
    else if (s == "neumann")
      vc->kind = VertexKind::neumann;
    else
      schema_fail("vertex: unknown kind '" + s + "'");
    return;
  }
  if (j.is_object() && j.contains("robin")) {
    vc->kind = VertexKind::robin;
    vc->robin = parse_matrix(j.at("robin"), "vertex robin");
    return;
  }
  schema_fail("vertex must be a string or {robin: matrix}");
}

Potential parse_potential(const json& j, const std::filesystem::path& base_dir) {
  Potential pot;
  if (!j.is_object() || !j.contains("type")) schema_fail("model V needs a type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "zero") {
    pot.kind = Potential::Kind::zero;
  } else if (type == "scalar") {
    pot.kind = Potential::Kind::scalar;
    pot.scalar_value = need_finite(j.at("value"), "V scalar value");
  } else if (type == "constant") {
    pot.kind = Potential::Kind::constant;
    pot.constant = parse_matrix(j.at("matrix"), "V");
  } else if (type == "piecewise") {
    pot.kind = Potential::Kind::piecewise;
    for (const auto& e : j.at("pieces"))
      pot.pieces.emplace_back(need_finite(e.at("until"), "piece breakpoint"),
                              parse_matrix(e.at("matrix"), "piece"));
  } else if (type == "samples") {
    pot.kind = Potential::Kind::samples;
    const std::filesystem::path file = base_dir / j.at("file").get<std::string>();
    std::ifstream in(file);
    if (!in) schema_fail("cannot open potential sample file " + file.string());
    const int dim = j.at("dim").get<int>();
    pot = potential_from_csv(in, dim);
  } else {
    schema_fail("unknown potential type '" + type + "'");
  }
  return pot;
}

void parse_numerics(const json& j, Numerics* num, MsParams* ms) {
  if (j.contains("hMax")) num->h_max = need_nonneg(j.at("hMax"), "hMax");
  if (j.contains("contour")) {
    const json& c = j.at("contour");
    if (c.contains("rho")) num->contour_rho = need_nonneg(c.at("rho"), "contour rho");
    if (c.contains("M")) {
      num->contour_points = c.at("M").get<int>();
      if (num->contour_points < 8) schema_fail("contour M must be at least 8");
    }
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    auto grab = [&](const char* key, double* slot) {
      if (t.contains(key)) *slot = need_nonneg(t.at(key), std::string("tolerances.") + key);
    };
    grab("odeTol", &num->ode_tol);
    grab("rankTol", &num->rank_tol_factor);
    grab("sigmaFloor", &num->sigma_floor);
    grab("msPoleGuard", &num->ms_pole_guard);
    grab("atPoleRel", &num->at_pole_rel);
    grab("condThreshold", &num->cond_threshold);
    grab("poleMargin", &num->pole_margin);
    grab("blockTol", &num->block_tol);
    if (t.contains("msTol")) ms->tol = need_nonneg(t.at("msTol"), "tolerances.msTol");
  }
}

std::vector<double> parse_list(const json& j, const std::string& what) {
  std::vector<double> out;
  if (!j.is_array()) schema_fail(what + " must be an array");
  for (const auto& v : j) out.push_back(need_finite(v, what));
  return out;
}

void parse_grid(const std::string& text, double* a, double* b, int* n) {
  std::stringstream ss(text);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3) schema_fail("grid must be 'a:b:n'");
  try {
    *a = std::stod(parts[0]);
    *b = std::stod(parts[1]);
    *n = std::stoi(parts[2]);
  } catch (const std::exception&) {
    schema_fail("grid must be numeric 'a:b:n'");
  }
  if (*n < 1) schema_fail("grid point count must be positive");
}

}  // namespace

ScenarioFile load_scenario_text(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    schema_fail(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_fail("document must be an object");
  ScenarioFile sf;
  BundleData bundle = parse_bundle(doc.at("bundle"));
  CompactModel model;
  const json& m = doc.at("model");
  model.L = need_finite(m.at("L"), "model L");
  if (!(model.L > 0.0)) schema_fail("model L must be positive");
  if (m.contains("V")) model.V = parse_potential(m.at("V"), base_dir);
  if (m.contains("leftBC")) parse_bc(m.at("leftBC"), &model.left, "leftBC");
  if (m.contains("vertex")) parse_vertex(m.at("vertex"), &model.vertex);
  const int p = doc.at("degree").get<int>();
  const json& inc = doc.at("incoming");
  const int k = inc.at("k").get<int>();
  const bool normal = inc.contains("normal") && inc.at("normal").get<bool>();
  Numerics num;
  if (doc.contains("numerics")) parse_numerics(doc.at("numerics"), &num, &sf.ms);
  const std::string name = doc.contains("name") ? doc.at("name").get<std::string>() : "scenario";
  sf.scn = make_scenario(name, std::move(bundle), std::move(model), p, k, normal, num);
  if (doc.contains("stages")) {
    for (const auto& s : doc.at("stages")) {
      const std::string st = s.get<std::string>();
      if (st != "sweep" && st != "scan" && st != "residues" && st != "ms" && st != "classify")
        schema_fail("unknown stage '" + st + "'");
      sf.stages.push_back(st);
    }
  }
  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    if (s.contains("sGrid"))
      parse_grid(s.at("sGrid").get<std::string>(), &sf.sweep.re0, &sf.sweep.re1, &sf.sweep.n_re);
    if (s.contains("imGrid"))
      parse_grid(s.at("imGrid").get<std::string>(), &sf.sweep.im0, &sf.sweep.im1, &sf.sweep.n_im);
  }
  if (doc.contains("scan")) {
    const json& s = doc.at("scan");
    if (s.contains("gridPoints")) sf.scan.grid_points = s.at("gridPoints").get<int>();
    if (sf.scan.grid_points < 8) schema_fail("scan gridPoints must be at least 8");
    if (s.contains("rectIm"))
      parse_grid(s.at("rectIm").get<std::string>(), &sf.scan.rect_im0, &sf.scan.rect_im1,
                 &sf.scan.rect_n);
  }
  if (doc.contains("ms")) {
    const json& s = doc.at("ms");
    if (s.contains("tau")) sf.ms.taus = parse_list(s.at("tau"), "ms tau");
    if (s.contains("r")) sf.ms.rs = parse_list(s.at("r"), "ms r");
  }
  if (doc.contains("classify")) {
    const json& s = doc.at("classify");
    if (s.contains("fromMatrices")) sf.classify.from_matrices = s.at("fromMatrices").get<std::string>();
  }
  sf.canonical = doc.dump();
  sf.hash = fnv1a(sf.canonical);
  return sf;
}

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("scenario: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str(), path.parent_path());
}

double tune_well_constant(double d, double L, double s0) {
  const double lambda0 = s0 * (2.0 * d - s0);
  const double target = d - s0;
  if (!(target < 0.0)) throw NumericError("tune_well_constant: need s0 > d");
  double lo = M_PI / (2.0 * L) * (1.0 + 1e-9);
  double hi = M_PI / L * (1.0 - 1e-9);
  auto g = [&](double q) { return q * std::cos(q * L) / std::sin(q * L) - target; };
  double glo = g(lo);
  if (!(glo > 0.0)) throw NumericError("tune_well_constant: bracket failure");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double q = 0.5 * (lo + hi);
  return q * q + d * d - lambda0;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* kBundleCuspS1 = R"({"f":1,"b":0,"h":[[1,1]]})";
const char* kBundleCone = R"({"f":2,"b":1,"h":[[1,2,1],[1,2,1]]})";
const char* kBundleT2xS1 = R"({"f":1,"b":2,"h":[[1,1],[2,2],[1,1]]})";

// frozen Hermitian 4x4 coupling used by the norm-identity scenarios
const char* kHermitian4 =
    R"([[[0.40,0],[0.12,-0.08],[-0.15,0.05],[0.02,0.10]],
        [[0.12,0.08],[-0.30,0],[0.07,-0.11],[-0.09,0.04]],
        [[-0.15,-0.05],[0.07,0.11],[0.25,0],[0.13,-0.06]],
        [[0.02,-0.10],[-0.09,-0.04],[0.13,0.06],[-0.20,0]]])";

std::string well_json(double c) {
  return std::string(R"({"type":"scalar","value":)") + fmt(-c) + "}";
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"closedform-single", "tuned-well", "tuned-well-2d", "ms-random-4ch", "ms-middle",
          "dirichlet-cusp-s1", "neumann-cusp-s1", "dirichlet-cone", "neumann-cone",
          "signature-t2xs1"};
}

std::string builtin_scenario_text(const std::string& name) {
  std::ostringstream os;
  if (name == "closedform-single") {
    os << R"({"name":"closedform-single","bundle":)" << kBundleCuspS1
       << R"(,"model":{"L":1.0,"V":{"type":"zero"},"leftBC":"dirichlet","vertex":"transparent"},)"
       << R"("degree":0,"incoming":{"k":0},"stages":["sweep","scan","ms"],)"
       << R"("sweep":{"sGrid":"0.5:1.2:20","imGrid":"-0.3:0.3:10"},"ms":{"tau":[0.03,0.09],"r":[2,5]}})";
  } else if (name == "tuned-well") {
    const double c = tune_well_constant(0.5, 1.0, 0.8);
    os << R"({"name":"tuned-well","bundle":)" << kBundleCuspS1 << R"(,"model":{"L":1.0,"V":)"
       << well_json(c)
       << R"(,"leftBC":"dirichlet","vertex":"transparent"},"degree":0,"incoming":{"k":0},)"
       << R"("stages":["scan","residues"]})";
  } else if (name == "tuned-well-2d") {
    const double c = tune_well_constant(0.5, 1.0, 1.0);
    os << R"({"name":"tuned-well-2d","bundle":)" << kBundleCuspS1 << R"(,"model":{"L":1.0,"V":)"
       << well_json(c)
       << R"(,"leftBC":"dirichlet","vertex":"transparent"},"degree":0,"incoming":{"k":0},)"
       << R"("stages":["scan","residues","classify"]})";
  } else if (name == "ms-random-4ch") {
    os << R"({"name":"ms-random-4ch","bundle":)" << kBundleCone
       << R"(,"model":{"L":1.0,"V":{"type":"constant","matrix":)" << kHermitian4
       << R"(},"leftBC":"dirichlet","vertex":"transparent"},"degree":1,"incoming":{"k":0},)"
       << R"("stages":["scan","ms"],"ms":{"tau":[0.03,0.09],"r":[2,5,10]}})";
  } else if (name == "ms-middle") {
    os << R"({"name":"ms-middle","bundle":)" << kBundleCone
       << R"(,"model":{"L":1.0,"V":{"type":"constant","matrix":)" << kHermitian4
       << R"(},"leftBC":"dirichlet","vertex":"transparent"},"degree":1,"incoming":{"k":1},)"
       << R"("stages":["ms"],"ms":{"tau":[0.03,0.09],"r":[2,5,10]}})";
  } else if (name == "dirichlet-cusp-s1" || name == "neumann-cusp-s1") {
    const bool diri = name[0] == 'd';
    os << R"({"name":")" << name << R"(","bundle":)" << kBundleCuspS1
       << R"(,"model":{"L":1.0,"V":{"type":"zero"},"leftBC":"dirichlet","vertex":")"
       << (diri ? "dirichlet" : "neumann")
       << R"("},"degree":1,"incoming":{"k":1},"stages":["classify"]})";
  } else if (name == "dirichlet-cone" || name == "neumann-cone") {
    const bool diri = name[0] == 'd';
    os << R"({"name":")" << name << R"(","bundle":)" << kBundleCone
       << R"(,"model":{"L":1.0,"V":{"type":"zero"},"leftBC":"dirichlet","vertex":")"
       << (diri ? "dirichlet" : "neumann")
       << R"("},"degree":2,"incoming":{"k":2},"stages":["classify"]})";
  } else if (name == "signature-t2xs1") {
    const double c = tune_well_constant(0.5, 1.0, 1.0);
    os << R"({"name":"signature-t2xs1","bundle":)" << kBundleT2xS1
       << R"(,"model":{"L":1.0,"V":)" << well_json(c)
       << R"(,"leftBC":"dirichlet","vertex":"transparent"},"degree":2,"incoming":{"k":0},)"
       << R"("stages":["scan","residues","classify"]})";
  } else {
    throw SchemaError("unknown built-in scenario '" + name + "'");
  }
  return os.str();
}

ScenarioFile builtin_scenario(const std::string& name) {
  return load_scenario_text(builtin_scenario_text(name));
}

ClassifierData load_classifier_matrices(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("classifier: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("classifier: malformed JSON: ") + e.what());
  }
  ClassifierData data;
  data.bundle = parse_bundle(doc.at("bundle"));
  data.provenance = "user";
  if (doc.contains("cres"))
    for (const auto& e : doc.at("cres"))
      data.cres[{e.at("p").get<int>(), e.at("k").get<int>()}] =
          parse_matrix(e.at("matrix"), "cres");
  if (doc.contains("t0"))
    for (const auto& e : doc.at("t0"))
      data.t0[e.at("p").get<int>()] = parse_matrix(e.at("matrix"), "t0");
  data.validate();
  return data;
}

}  // namespace cuspidal
