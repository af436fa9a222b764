#pragma once

// Scenario files: a single JSON document describing the bundle, the cavity,
// the incoming block, numeric tolerances and the stage list.  Built-in
// scenario families used by the verification suites live here too.

#include <filesystem>
#include <string>
#include <vector>

#include "cuspidal/hodge.hpp"
#include "cuspidal/msrel.hpp"

namespace cuspidal {

struct SweepParams {
  double re0 = 0.5, re1 = 1.2;
  int n_re = 20;
  double im0 = 0.0, im1 = 0.0;
  int n_im = 1;
};

struct ScanParams {
  int grid_points = 400;
  double rect_im0 = 1e-2, rect_im1 = 0.3;
  double rect_re_extent = 0.3;  // rectangle [d_k + margin, 2 d_k + extent]
  int rect_n = 24;
};

struct MsParams {
  std::vector<double> taus{0.03, 0.09};
  std::vector<double> rs{2.0, 5.0, 10.0};
  double tol = 1e-6;
};

struct ClassifyParams {
  std::string from_matrices;  // optional JSON file with user matrices
};

struct ScenarioFile {
  Scenario scn;
  std::vector<std::string> stages;
  SweepParams sweep;
  ScanParams scan;
  MsParams ms;
  ClassifyParams classify;
  std::string canonical;  // canonical dump used for cache hashing
  std::uint64_t hash = 0;
};

// Parse / validate a scenario document.  Throws SchemaError on malformed
// input (including non-finite or negative tolerances).
ScenarioFile load_scenario_text(const std::string& text,
                                const std::filesystem::path& base_dir = ".");
ScenarioFile load_scenario_file(const std::filesystem::path& path);

// Built-in scenario families (returned as JSON text so they can be dumped,
// edited and re-loaded).  Known names:
//   closedform-single   single channel, V = 0 cavity, d = 1/2
//   tuned-well          constant-well cavity with a pole inside (d, 2d)
//   tuned-well-2d       well tuned so the pole sits at the harmonic point
//   ms-random-4ch       4-channel Hermitian-V scenario for the norm identity
//   ms-middle           middle-degree variant of the same bundle
//   dirichlet-cusp-s1   comparison vertex family over (B = pt, F = S^1)
//   neumann-cusp-s1
//   dirichlet-cone      comparison vertex family over (B = S^1, F = T^2)
//   neumann-cone
//   signature-t2xs1     4-dimensional family with a rank-1 residue block
std::string builtin_scenario_text(const std::string& name);
std::vector<std::string> builtin_scenario_names();
ScenarioFile builtin_scenario(const std::string& name);

// Constant c such that the single-well DtN q cot(q L), q = sqrt(c + lambda
// - theta), satisfies the pole condition d - s0 = N(lambda0) at
// lambda0 = s0 (2 d - s0).  Used to tune wells.
double tune_well_constant(double d, double L, double s0);

// User-supplied classifier matrices: {"bundle":..., "cres":[{"p","k","matrix"}],
// "t0":[{"p","matrix"}]}.
ClassifierData load_classifier_matrices(const std::filesystem::path& path);

std::uint64_t fnv1a(const std::string& s);

}  // namespace cuspidal
