#pragma once

// Shared fixtures for the verification suites: small scenario builders and
// the independent closed-form oracles they are checked against.

#include <cuspidal/scenario.hpp>

#include <cmath>
#include <random>

namespace testutil {

using namespace cuspidal;

// Closed form for the single-channel V = 0 cavity with a Dirichlet left
// boundary:  T(s) = (N - (s - d)) / ((d - s) - N),  N = kappa coth(kappa L),
// kappa = sqrt(d^2 - lambda) (branch-free: N is even in kappa).
inline cplx oracle_dtn(cplx lambda, double theta, double L) {
  const cplx kap2 = theta - lambda;
  const cplx kap = std::sqrt(kap2);
  if (std::abs(kap * L) < 1e-6) return 1.0 / L + kap2 * L / 3.0;
  return kap / std::tanh(kap * L);
}

inline cplx oracle_single_T(cplx s, double d, double L) {
  const cplx lambda = s * (2.0 * d - s);
  const cplx N = oracle_dtn(lambda, d * d, L);
  return (N - (s - d)) / ((d - s) - N);
}

// Constant-well DtN: q cot(q L), q = sqrt(c + lambda - theta).
inline cplx oracle_well_dtn(cplx lambda, double theta, double c, double L) {
  const cplx q2 = c + lambda - theta;
  const cplx q = std::sqrt(q2);
  if (std::abs(q * L) < 1e-6) return 1.0 / L - q2 * L / 3.0;
  return q * std::cos(q * L) / std::sin(q * L);
}

inline cplx oracle_single_T_well(cplx s, double c, double d = 0.5, double L = 1.0) {
  const cplx lambda = s * (2.0 * d - s);
  const cplx N = oracle_well_dtn(lambda, d * d, c, L);
  return (N - (s - d)) / ((d - s) - N);
}

// Root of (d - s) - N(lambda(s)) on (d, 2d) for the constant well, by
// bisection: the independent pole-location oracle.
inline double oracle_well_pole(double d, double L, double c, double lo, double hi) {
  auto g = [&](double s) {
    const double lambda = s * (2.0 * d - s);
    return (d - s) - oracle_well_dtn(lambda, d * d, c, L).real();
  };
  double a = lo, b = hi, ga = g(a);
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    if ((g(m) > 0) == (ga > 0))
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

inline ScenarioFile scenario_from_text(const std::string& text) {
  return load_scenario_text(text);
}

// Single channel over (B = pt, F = S^1) with a configurable vertex.
inline Scenario single_channel(const std::string& vertex, const std::string& V = "{\"type\":\"zero\"}") {
  std::string text = R"({"name":"single","bundle":{"f":1,"b":0,"h":[[1,1]]},
    "model":{"L":1.0,"V":)" + V + R"(,"leftBC":"dirichlet","vertex":")" + vertex + R"("},
    "degree":0,"incoming":{"k":0}})";
  return load_scenario_text(text).scn;
}

// 4-channel torus-over-circle scenario at degree 1 with incoming fiber
// degree k (k = 0 gives d = 1 with an open middle block, k = 1 the middle).
inline Scenario cone_scenario(int k, const std::string& V, const std::string& vertex = "transparent") {
  std::string text = R"({"name":"cone","bundle":{"f":2,"b":1,"h":[[1,2,1],[1,2,1]]},
    "model":{"L":1.0,"V":)" + V + R"(,"leftBC":"dirichlet","vertex":")" + vertex + R"("},
    "degree":1,"incoming":{"k":)" + std::to_string(k) + R"(}})";
  return load_scenario_text(text).scn;
}

inline const char* hermitian4_json() {
  return R"({"type":"constant","matrix":[[[0.40,0],[0.12,-0.08],[-0.15,0.05],[0.02,0.10]],
    [[0.12,0.08],[-0.30,0],[0.07,-0.11],[-0.09,0.04]],
    [[-0.15,-0.05],[0.07,0.11],[0.25,0],[0.13,-0.06]],
    [[0.02,-0.10],[-0.09,-0.04],[0.13,0.06],[-0.20,0]]]})";
}

// Hermitian 4x4 that respects the tangential/normal split of the degree-1
// torus-over-circle inventory (components: [t(0,1) x2, t(1,0)], [n(0,0)]).
inline const char* dual_consistent_v4_json() {
  return R"({"type":"constant","matrix":[[[0.30,0],[0.10,-0.07],[-0.12,0.04],[0,0]],
    [[0.10,0.07],[-0.25,0],[0.08,-0.05],[0,0]],
    [[-0.12,-0.04],[0.08,0.05],[0.20,0],[0,0]],
    [[0,0],[0,0],[0,0],[-0.35,0]]]})";
}

inline VectorXcd unit(int dim, int i = 0) {
  VectorXcd v = VectorXcd::Zero(dim);
  v[i] = 1.0;
  return v;
}

inline std::mt19937& rng() {
  static std::mt19937 gen(20240811u);
  return gen;
}

inline cplx random_cplx(double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return {d(rng()), d(rng())};
}

}  // namespace testutil
