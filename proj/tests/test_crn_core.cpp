#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ncrn/crn.hpp"
#include "ncrn/solver.hpp"

using namespace ncrn;

namespace {

// X1 + X2 ->{k} Z + X1 + X2
Crn catalytic_product(double k) {
  Crn crn;
  SpeciesId x1 = crn.species.add("X1");
  SpeciesId x2 = crn.species.add("X2");
  SpeciesId z = crn.species.add("Z");
  crn.reactions.push_back(make_reaction({{x1, 1}, {x2, 1}}, {{z, 1}, {x1, 1}, {x2, 1}}, k));
  return crn;
}

Crn annihilation_pair(double rate) {
  Crn crn;
  SpeciesId p = crn.species.add("X_p", Rail::plus);
  SpeciesId m = crn.species.add("X_m", Rail::minus);
  crn.species.link_partners(p, m);
  crn.reactions.push_back(make_reaction({{p, 1}, {m, 1}}, {}, rate, Speed::fast));
  return crn;
}

}  // namespace

TEST_CASE("mass action: catalytic product term") {
  auto sys = derive_mass_action(catalytic_product(2.5));
  VarId z = sys.require("z");
  const auto* rhs = sys.equation(z);
  REQUIRE(rhs != nullptr);
  REQUIRE(rhs->size() == 1);
  CHECK(rhs->front().coeff == 2.5);
  CHECK(rhs->front().powers.size() == 2);
  // catalysts keep zero net stoichiometry: no equations for X1/X2
  CHECK(sys.equation(sys.require("x1")) == nullptr);
  CHECK(sys.equation(sys.require("x2")) == nullptr);
}

TEST_CASE("mass action: autocatalysis and decay templates") {
  Crn up;
  SpeciesId z = up.species.add("Z");
  up.reactions.push_back(make_reaction({{z, 2}}, {{z, 3}}, 1.0));
  auto sys = derive_mass_action(up);
  const auto* rhs = sys.equation(sys.require("z"));
  REQUIRE(rhs);
  CHECK(rhs->size() == 1);
  CHECK(rhs->front().coeff == 1.0);
  CHECK(rhs->front().exponent_of(sys.require("z")) == 2);

  Crn down;
  SpeciesId w = down.species.add("Z");
  down.reactions.push_back(make_reaction({{w, 1}}, {}, 1.0));
  auto sys2 = derive_mass_action(down);
  const auto* rhs2 = sys2.equation(sys2.require("z"));
  REQUIRE(rhs2);
  CHECK(rhs2->front().coeff == -1.0);
  CHECK(rhs2->front().exponent_of(sys2.require("z")) == 1);
}

TEST_CASE("simulate: constant fluxes integrate linearly") {
  // N1 of the two-input linear regressor: dz_i/dt = theta_i*x_i + beta
  Crn crn;
  SpeciesId x1 = crn.species.add("X1"), x2 = crn.species.add("X2");
  SpeciesId p1 = crn.species.add("P1"), p2 = crn.species.add("P2");
  SpeciesId z1 = crn.species.add("Z1"), z2 = crn.species.add("Z2");
  SpeciesId b = crn.species.add("B");
  crn.reactions.push_back(make_reaction({{x1, 1}, {p1, 1}}, {{z1, 1}, {x1, 1}, {p1, 1}}, 1.0));
  crn.reactions.push_back(make_reaction({{x2, 1}, {p2, 1}}, {{z2, 1}, {x2, 1}, {p2, 1}}, 1.0));
  crn.reactions.push_back(make_reaction({{b, 1}}, {{b, 1}, {z1, 1}, {z2, 1}}, 1.0));

  std::vector<double> init(crn.species.size(), 0.0);
  init[static_cast<std::size_t>(x1)] = 1.0;
  init[static_cast<std::size_t>(x2)] = 1.0;
  init[static_cast<std::size_t>(p1)] = 1.0;
  init[static_cast<std::size_t>(p2)] = 2.0;
  init[static_cast<std::size_t>(b)] = 1.0;

  auto traj = simulate(crn, init, 1.0, std::nullopt);
  CHECK(traj.final_state()[static_cast<std::size_t>(z1)] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(traj.final_state()[static_cast<std::size_t>(z2)] == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("simulate: autocatalytic exponential and catalytic conservation") {
  Crn crn;
  SpeciesId p = crn.species.add("P");
  SpeciesId z = crn.species.add("Z");
  crn.reactions.push_back(make_reaction({{p, 1}, {z, 1}}, {{z, 2}, {p, 1}}, 1.0));
  std::vector<double> init = {1.0, 1.0};
  auto traj = simulate(crn, init, 1.0, std::nullopt);
  CHECK(traj.final_state()[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-8));
  // catalyst P never moves
  double drift = 0.0;
  for (const auto& row : traj.states) drift = std::max(drift, std::fabs(row[0] - 1.0));
  CHECK(drift <= 1e-9);
}

TEST_CASE("simulate: fast annihilation matches the closed-form solution") {
  auto crn = annihilation_pair(1.0);
  SolverConfig cfg;
  cfg.kappa_fast = 1e3;
  auto traj = simulate(crn, {3.0, 2.0}, 0.1, std::nullopt, cfg);
  // d = x_p - x_m = 1 is conserved; x_p solves a logistic-type equation with
  // closed form x_p(t) = d / (1 - (1 - d/x_p(0)) e^{-kappa d t})
  double d = 1.0, k = 1e3;
  double exact = d / (1.0 - (1.0 - d / 3.0) * std::exp(-k * d * 0.1));
  CHECK(std::fabs(traj.final_state()[0] - exact) <= 1e-3);
  CHECK(std::fabs(traj.final_state()[1] - (exact - d)) <= 1e-3);
}

TEST_CASE("simulate: tightening tolerances moves the endpoint negligibly") {
  Crn crn;
  SpeciesId z = crn.species.add("Z");
  crn.reactions.push_back(make_reaction({{z, 2}}, {{z, 1}}, 1.0));  // dz/dt = -z^2
  SolverConfig loose, tight;
  loose.rel_tol = 1e-8;
  tight.rel_tol = 5e-9;
  auto a = simulate_endpoint(crn, {2.0}, 1.0, std::nullopt, loose);
  auto b = simulate_endpoint(crn, {2.0}, 1.0, std::nullopt, tight);
  CHECK(std::fabs(a[0] - b[0]) / std::fabs(b[0]) <= 10.0 * loose.rel_tol);
  // and the exact solution 1/(1/z0 + t) is reproduced
  CHECK(a[0] == doctest::Approx(1.0 / (0.5 + 1.0)).epsilon(1e-7));
}

TEST_CASE("simulate: gate filtering excludes inactive reactions") {
  Crn crn;
  SpeciesId z = crn.species.add("Z");
  SpeciesId w = crn.species.add("W");
  crn.reactions.push_back(make_reaction({{z, 1}}, {{z, 1}, {w, 1}}, 1.0, Speed::slow, Gate::c1));
  crn.reactions.push_back(make_reaction({{w, 1}}, {}, 1.0, Speed::slow, Gate::c2));
  auto end = simulate_endpoint(crn, {1.0, 0.0}, 1.0, Gate::c1);
  CHECK(end[1] == doctest::Approx(1.0).epsilon(1e-8));  // decay was masked out
}

TEST_CASE("simulate: divergence raises with last good state attached") {
  Crn crn;
  SpeciesId z = crn.species.add("Z");
  crn.reactions.push_back(make_reaction({{z, 2}}, {{z, 3}}, 1.0));  // dz/dt = +z^2 blows up
  SolverConfig cfg;
  cfg.overflow_guard = 1e6;
  CHECK_THROWS_AS(simulate(crn, {2.0}, 1.0, std::nullopt, cfg), SolverError);
}

TEST_CASE("discrete map: adjoint creation transfers stoichiometrically") {
  // Z_i -> Zb_i + A1+ + A2+ + Yhat ; Y -> A1- + A2-
  Crn crn;
  SpeciesId z1 = crn.species.add("Z1"), z2 = crn.species.add("Z2");
  SpeciesId y = crn.species.add("Y");
  SpeciesId zb1 = crn.species.add("Zb1"), zb2 = crn.species.add("Zb2");
  SpeciesId a1p = crn.species.add("A1_p", Rail::plus), a1m = crn.species.add("A1_m", Rail::minus);
  SpeciesId a2p = crn.species.add("A2_p", Rail::plus), a2m = crn.species.add("A2_m", Rail::minus);
  crn.species.link_partners(a1p, a1m);
  crn.species.link_partners(a2p, a2m);
  SpeciesId yh = crn.species.add("Yhat");
  crn.reactions.push_back(make_reaction({{z1, 1}}, {{zb1, 1}, {a1p, 1}, {a2p, 1}, {yh, 1}}, 1.0,
                                        Speed::fast, Gate::c2));
  crn.reactions.push_back(make_reaction({{z2, 1}}, {{zb2, 1}, {a1p, 1}, {a2p, 1}, {yh, 1}}, 1.0,
                                        Speed::fast, Gate::c2));
  crn.reactions.push_back(
      make_reaction({{y, 1}}, {{a1m, 1}, {a2m, 1}}, 1.0, Speed::fast, Gate::c2));

  std::vector<double> state(crn.species.size(), 0.0);
  state[static_cast<std::size_t>(z1)] = 2.0;
  state[static_cast<std::size_t>(z2)] = 3.0;
  state[static_cast<std::size_t>(y)] = 3.0;
  auto out = apply_discrete_map(crn, state);
  CHECK(out[static_cast<std::size_t>(zb1)] == 2.0);
  CHECK(out[static_cast<std::size_t>(zb2)] == 3.0);
  CHECK(out[static_cast<std::size_t>(a1p)] == 5.0);
  CHECK(out[static_cast<std::size_t>(a1m)] == 3.0);
  CHECK(out[static_cast<std::size_t>(a2p)] == 5.0);
  CHECK(out[static_cast<std::size_t>(a2m)] == 3.0);
  CHECK(out[static_cast<std::size_t>(yh)] == 5.0);
  CHECK(out[static_cast<std::size_t>(z1)] == 0.0);
  CHECK(out[static_cast<std::size_t>(y)] == 0.0);

  SUBCASE("full kinetics over the discrete window agrees within 1%") {
    SolverConfig cfg;
    cfg.kappa_fast = 1e3;
    auto kin = simulate_endpoint(crn, state, 0.01, Gate::c2, cfg);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i] > 0.0) CHECK(std::fabs(kin[i] - out[i]) / out[i] <= 0.01);
      else CHECK(kin[i] <= 0.01 * 5.0);
    }
  }
}

TEST_CASE("discrete map: unit-rate update pair saturates at zero") {
  Crn crn;
  SpeciesId gp = crn.species.add("G1_p", Rail::plus);
  SpeciesId gm = crn.species.add("G1_m", Rail::minus);
  crn.species.link_partners(gp, gm);
  SpeciesId p = crn.species.add("P1");
  crn.reactions.push_back(make_reaction({{gm, 1}}, {{p, 1}}, 1.0, Speed::fast, Gate::c1));
  crn.reactions.push_back(make_reaction({{gp, 1}, {p, 1}}, {}, 1.0, Speed::fast, Gate::c1));

  auto out = apply_discrete_map(crn, {0.5, 0.0, 2.0});
  CHECK(out[2] == 1.5);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);

  // saturation: an update larger than the parameter clamps at zero
  auto sat = apply_discrete_map(crn, {3.0, 0.0, 2.0});
  CHECK(sat[2] == 0.0);
}

TEST_CASE("discrete map: flush clears the named coordinates") {
  Crn crn;
  SpeciesId z = crn.species.add("Z"), a = crn.species.add("A"), x = crn.species.add("X");
  crn.species.add("P");
  crn.reactions.push_back(make_reaction({{z, 1}}, {}, 1.0, Speed::fast, Gate::c1));
  crn.reactions.push_back(make_reaction({{a, 1}}, {}, 1.0, Speed::fast, Gate::c1));
  crn.reactions.push_back(make_reaction({{x, 1}}, {}, 1.0, Speed::fast, Gate::c1));
  auto out = apply_discrete_map(crn, {0.4, 1.2, 7.0, 2.5});
  CHECK(out == std::vector<double>{0.0, 0.0, 0.0, 2.5});
}

TEST_CASE("discrete map: slow bimolecular chemistry violates the contract") {
  auto crn = catalytic_product(1.0);
  std::vector<double> st(crn.species.size(), 1.0);
  CHECK_THROWS_AS(apply_discrete_map(crn, st), ContractViolation);
}

TEST_CASE("reaction text round-trips exactly") {
  Crn crn;
  SpeciesId a = crn.species.add("A");
  SpeciesId b = crn.species.add("B");
  SpeciesId c = crn.species.add("C");
  SpeciesId gp = crn.species.add("G1_p", Rail::plus);
  SpeciesId gm = crn.species.add("G1_m", Rail::minus);
  crn.species.link_partners(gp, gm);
  crn.reactions.push_back(
      make_reaction({{a, 1}, {b, 2}}, {{c, 1}, {a, 1}, {b, 2}}, 1.5, Speed::fast, Gate::c1));
  crn.reactions.push_back(make_reaction({{gp, 1}, {gm, 1}}, {}, 1.0, Speed::fast));
  crn.reactions.push_back(make_reaction({{c, 1}}, {{a, 1}}, 0.125, Speed::slow, Gate::c2));

  auto text = to_text(crn);
  CHECK(text.find("A + 2B ->{1.5,fast,C1} C + A + 2B") != std::string::npos);
  auto parsed = parse_crn(text);
  CHECK(to_text(parsed) == text);
  CHECK(parsed.reactions.size() == 3);
  CHECK(parsed.species.at(parsed.species.require("G1_p")).partner ==
        parsed.species.require("G1_m"));
}

TEST_CASE("trajectory csv has one row per accepted step") {
  Crn crn;
  SpeciesId z = crn.species.add("Z");
  crn.reactions.push_back(make_reaction({{z, 1}}, {}, 1.0));
  auto traj = simulate(crn, {1.0}, 0.5, std::nullopt);
  auto csv = trajectory_to_csv(crn, traj);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,Z");
  std::size_t rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == traj.rows());
}
