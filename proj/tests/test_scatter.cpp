#include <doctest.h>

#include "helpers.hpp"

using namespace cuspidal;
using namespace testutil;

TEST_CASE("dirichlet vertex: T = -I, everything else zero") {
  Scenario scn = cone_scenario(0, R"({"type":"zero"})", "dirichlet");
  for (cplx s : {cplx(1.3, 0.1), cplx(1.9, -0.2), cplx(1.7, 0.0)}) {
    auto sd = assemble(scn, scn.germ_point(s));
    MatrixXcd want = MatrixXcd::Zero(scn.dim(), scn.in_mult);
    want.middleRows(scn.in_offset, scn.in_mult) = -MatrixXcd::Identity(scn.in_mult, scn.in_mult);
    CHECK((sd.t_full - want).norm() < 1e-14);
  }
}

TEST_CASE("neumann vertex: T = +1 on a single channel") {
  Scenario scn = single_channel("neumann");
  for (cplx s : {cplx(0.8, 0.0), cplx(0.6, 0.25), cplx(1.1, -0.1)}) {
    auto sd = assemble(scn, scn.point(s));
    CHECK(std::abs(sd.t_full(0, 0) - 1.0) < 1e-14);
  }
}

TEST_CASE("transparent vertex matches the closed-form cavity oracle") {
  Scenario scn = single_channel("transparent");
  for (cplx s : {cplx(0.8, 0.0), cplx(0.55, 0.2), cplx(1.15, -0.28), cplx(0.95, 0.07)}) {
    auto sd = assemble(scn, scn.germ_point(s));
    const cplx want = oracle_single_T(s, 0.5, 1.0);
    CHECK(std::abs(sd.t_full(0, 0) - want) < 1e-8 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("uniqueness regression: independent grids agree") {
  Scenario a = single_channel("transparent");
  Scenario b = a;
  b.num.h_max = 1.0 / 3173.0;
  b.model.h_max = b.num.h_max;
  const cplx s(0.9, 0.12);
  const MatrixXcd t1 = assemble(a, a.germ_point(s)).t_full;
  const MatrixXcd t2 = assemble(b, b.germ_point(s)).t_full;
  CHECK((t1 - t2).norm() < 1e-8);
}

TEST_CASE("physical sheet: outgoing part of the eigenform is square-integrable") {
  Scenario scn = cone_scenario(0, hermitian4_json());
  const SpectralPoint pt = scn.point(cplx(1.4, -0.2));  // Im lambda > 0
  CHECK(pt.lambda().imag() > 0.0);
  auto sd = assemble(scn, pt);
  auto field = eigenform(scn, sd, unit(scn.in_mult));
  for (std::size_t i = 0; i < field.cusp.size(); ++i) {
    // strip the incoming term: every remaining rate decays
    for (const auto& term : field.cusp[i].terms)
      if (term.rate != pt.s - pt.dk) CHECK(term.rate.real() < 0.0);
  }
}

TEST_CASE("eigenform_residual: exact cusp, second-order interior") {
  Scenario scn = single_channel("transparent", R"({"type":"scalar","value":-0.8})");
  const SpectralPoint pt = scn.germ_point(cplx(0.85, 0.1));
  auto sd = assemble(scn, pt);
  auto field = eigenform(scn, sd, unit(1));
  auto rep = eigenform_residual(scn, pt, field);
  CHECK(rep.cusp < 1e-12);

  Scenario fine = scn;
  fine.model.h_max = scn.model.L / 4000.0;
  auto repf = eigenform_residual(fine, pt, eigenform(fine, assemble(fine, pt), unit(1)));
  const double ratio = rep.interior / repf.interior;
  CHECK(ratio > 3.0);  // second-order convergence of the FD residual
  CHECK(ratio < 5.0);
}

TEST_CASE("closed-form V=0 interior residual at a fine grid") {
  Scenario scn = single_channel("transparent");
  scn.model.h_max = scn.model.L / 20000.0;
  const SpectralPoint pt = scn.germ_point(cplx(0.9, 0.05));
  auto rep = eigenform_residual(scn, pt, eigenform(scn, assemble(scn, pt), unit(1)));
  CHECK(rep.cusp < 1e-12);
  CHECK(rep.interior < 1e-10);
}

TEST_CASE("selfadjoint_check") {
  SUBCASE("closed-form single channel at real s") {
    Scenario scn = single_channel("transparent");
    CHECK(selfadjoint_check(scn, cplx(0.8, 0.0), unit(1), unit(1)) < 1e-10);
  }
  SUBCASE("4-channel Hermitian model at complex s") {
    Scenario scn = cone_scenario(0, hermitian4_json());
    VectorXcd phi = unit(scn.in_mult);
    CHECK(selfadjoint_check(scn, cplx(1.6, 0.21), phi, phi) < 1e-8);
    CHECK(selfadjoint_check(scn, cplx(1.95, 0.0), phi, phi) < 1e-8);  // open middle channel
  }
  SUBCASE("dirichlet vertex is exact") {
    Scenario scn = single_channel("dirichlet");
    CHECK(selfadjoint_check(scn, cplx(0.7, 0.1), unit(1), unit(1)) == 0.0);
  }
}

TEST_CASE("deck equation") {
  SUBCASE("dirichlet vertex closed form") {
    Scenario scn = single_channel("dirichlet");
    auto pt = scn.point(cplx(0.9, 0.02));
    CHECK(deck_equation_check(scn, pt, unit(1)) < 1e-12);
  }
  SUBCASE("closed-form cavity") {
    Scenario scn = single_channel("transparent");
    auto pt = scn.point(cplx(0.93, 0.05));
    CHECK(deck_equation_check(scn, pt, unit(1)) < 1e-8);
  }
  SUBCASE("coupled channels at the same threshold") {
    // two nu = 0 channels plus closed nu-channels; guard holds
    std::string text = R"({"name":"deck","bundle":{"f":1,"b":0,"h":[[1,1]],
      "nuLists":[{"r":0,"s":0,"nu":0.9,"mult":1}]},
      "model":{"L":1.0,"V":{"type":"constant","matrix":[[[ -0.4,0],[0.1,0.05]],[[0.1,-0.05],[0.2,0]]]},
      "leftBC":"dirichlet","vertex":"transparent"},"degree":0,"incoming":{"k":0}})";
    Scenario scn = load_scenario_text(text).scn;
    auto pt = scn.point(cplx(0.88, 0.03));
    CHECK(deck_equation_check(scn, pt, unit(1)) < 1e-8);
  }
  SUBCASE("branch point is rejected") {
    Scenario scn = single_channel("transparent");
    CHECK_THROWS_AS(deck_equation_check(scn, scn.point(cplx(0.5, 0.0)), unit(1)),
                    InvariantViolation);
  }
  SUBCASE("guard violation is rejected") {
    Scenario scn = cone_scenario(0, hermitian4_json());  // middle channels below d_k^2
    CHECK_THROWS_AS(deck_equation_check(scn, scn.point(cplx(1.95, 0.01)), unit(1)),
                    InvariantViolation);
  }
}

TEST_CASE("deck composition: T(2d - s) T(s) = 1 on the reference block") {
  Scenario scn = single_channel("transparent", R"({"type":"scalar","value":-0.6})");
  for (cplx s : {cplx(0.9, 0.04), cplx(0.8, -0.1)}) {
    const cplx t1 = assemble(scn, scn.point(s)).ref_rows()(0, 0);
    const cplx t2 = assemble(scn, scn.point(1.0 - s)).ref_rows()(0, 0);
    CHECK(std::abs(t1 * t2 - 1.0) < 1e-7);
  }
}

TEST_CASE("middle-degree reality diagnostic: open block is unitary") {
  Scenario scn = cone_scenario(1, R"({"type":"scalar","value":-0.5})");
  const double tau = 0.07;
  auto pt = scn.point(cplx(0, -std::sqrt(tau)));
  const MatrixXcd t = assemble(scn, pt).ref_rows();
  CHECK((t * t.adjoint() - MatrixXcd::Identity(t.rows(), t.rows())).norm() < 1e-8);
}

TEST_CASE("dualize") {
  SUBCASE("consistency violations are reported") {
    Scenario scn = cone_scenario(0, hermitian4_json());  // couples tangential/normal
    std::string why;
    CHECK(!dualize_consistent(scn, &why));
    CHECK(why.find("tangential") != std::string::npos);
    CHECK_THROWS_AS(dualize(scn), InvariantViolation);
  }
  SUBCASE("double dual reproduces the primal data") {
    Scenario scn = cone_scenario(0, dual_consistent_v4_json());
    Scenario dd = dualize(dualize(scn));
    const cplx s(1.45, 0.17);
    const MatrixXcd t0 = assemble(scn, scn.point(s)).t_full;
    const MatrixXcd t2 = assemble(dd, dd.point(s)).t_full;
    CHECK((t0 - t2).norm() < 1e-9 * (1.0 + t0.norm()));
  }
}

TEST_CASE("star duality (functional equation for the star switch)") {
  SUBCASE("dirichlet pair, closed form") {
    Scenario scn = single_channel("dirichlet");
    auto d = star_duality_check(scn, cplx(0.8, 0.05), unit(1));
    REQUIRE(d.has_value());
    CHECK(*d < 1e-12);
  }
  SUBCASE("constant Hermitian V pair") {
    Scenario scn = cone_scenario(0, dual_consistent_v4_json());
    for (cplx s : {cplx(1.3, 0.2), cplx(1.85, -0.05), cplx(1.97, 0.0)}) {
      auto d = star_duality_check(scn, s, VectorXcd::Ones(scn.in_mult));
      REQUIRE(d.has_value());
      CHECK(*d < 1e-8);
    }
  }
  SUBCASE("not applicable on inconsistent scenarios") {
    Scenario scn = cone_scenario(0, hermitian4_json());
    CHECK(!star_duality_check(scn, cplx(1.5, 0.1), unit(scn.in_mult)).has_value());
  }
}

TEST_CASE("derived normal blocks (fftmat)") {
  SUBCASE("middle block gets the factor -1") {
    Scenario scn = cone_scenario(1, R"({"type":"scalar","value":-0.5})");
    auto pt = scn.point(cplx(0.2, -0.35));
    auto sd = assemble(scn, pt);
    auto derived = normal_block_from_tangential(scn, sd);
    const MatrixXcd t = sd.block_by(1, 0.0, false);
    CHECK((derived.at(1) + t).norm() < 1e-12);
  }
  SUBCASE("reference block vanishes at the harmonic point for k < f/2") {
    Scenario scn = single_channel("transparent", R"({"type":"scalar","value":-0.6})");
    auto pt = scn.germ_point(cplx(1.0, 0.0));  // s = 2 d_k
    auto derived = normal_block_from_tangential(scn, assemble(scn, pt));
    CHECK(derived.at(0).norm() < 1e-12);
  }
  SUBCASE("identity against an assembled normal-incoming run") {
    Scenario scn = cone_scenario(0, dual_consistent_v4_json());
    for (cplx s : {cplx(1.5, 0.12), cplx(1.9, -0.07)})
      CHECK(normal_block_identity_check(scn, scn.point(s)) < 1e-8);
  }
  SUBCASE("division guard at s = d_k - a_k") {
    // k > f/2 scenario: a_k - d_k + s vanishes at s = 2 d_k
    std::string text = R"({"name":"upper","bundle":{"f":1,"b":0,"h":[[1,1]]},
      "model":{"L":1.0,"V":{"type":"zero"},"leftBC":"dirichlet","vertex":"transparent"},
      "degree":1,"incoming":{"k":1}})";
    Scenario scn = load_scenario_text(text).scn;
    auto pt = scn.germ_point(cplx(1.0, 0.0));
    CHECK_THROWS_AS(normal_block_from_tangential(scn, assemble(scn, pt)), NumericError);
  }
}

TEST_CASE("t_derivative") {
  SUBCASE("constant T has zero derivative") {
    Scenario scn = single_channel("dirichlet");
    auto pt = scn.point(cplx(0.85, 0.0));
    CHECK(t_derivative(scn, pt, 1).norm() < 1e-12);
  }
  SUBCASE("matches the complex-step derivative of the oracle") {
    Scenario scn = single_channel("transparent");
    const cplx s(0.87, 0.0);
    auto pt = scn.germ_point(s);
    const MatrixXcd ds = t_derivative(scn, pt, 1);
    const double h = 1e-20;  // complex step on the analytic oracle
    const cplx want = oracle_single_T(s + cplx(0, h), 0.5, 1.0).imag() / h;
    CHECK(std::abs(ds(0, 0) - want) < 1e-8 * (1.0 + std::abs(want)));
  }
  SUBCASE("radius halving changes the result below 1e-9") {
    Scenario scn = single_channel("transparent");
    auto pt = scn.germ_point(cplx(0.9, 0.0));
    const MatrixXcd d1 = t_derivative(scn, pt, 1, 0.04);
    const MatrixXcd d2 = t_derivative(scn, pt, 1, 0.02);
    CHECK((d1 - d2).norm() < 1e-9);
  }
  SUBCASE("order-0 probe flags a pole inside the contour") {
    Scenario scn = load_scenario_text(builtin_scenario_text("tuned-well")).scn;
    auto pt = scn.germ_point(cplx(0.803, 0.0));  // pole at 0.8 inside rho = 0.01
    CHECK_THROWS_AS(t_derivative(scn, pt, 0, 0.01), NumericError);
  }
}

TEST_CASE("at-pole reporting carries the singular direction") {
  Scenario scn = load_scenario_text(builtin_scenario_text("tuned-well")).scn;
  bool caught = false;
  try {
    assemble(scn, scn.germ_point(cplx(0.8, 0.0)));
  } catch (const AtPole& p) {
    caught = true;
    CHECK(p.direction.size() == scn.dim());
    CHECK(p.sigma_min < 1e-11);
  } catch (const NumericError&) {
    // the scan-refined location is accurate enough that assemble may
    // resolve instead; force the exact pole then
  }
  if (!caught) {
    const double s0 = oracle_well_pole(0.5, 1.0, tune_well_constant(0.5, 1.0, 0.8), 0.6, 0.99);
    CHECK_THROWS_AS(assemble(scn, scn.germ_point(cplx(s0, 0.0))), AtPole);
  }
}
