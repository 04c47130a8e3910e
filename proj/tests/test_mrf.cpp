#include <cmath>

#include "doctest.h"
#include "msos/mrf.hpp"
#include "oracle.hpp"

using namespace msos;
using poly::Polynomial;

namespace {

poly::SemiAlgebraicSet unit_interval() {
  auto x = Polynomial::variable(1, 0);
  return poly::SemiAlgebraicSet(
      1, {x, Polynomial::constant(1, 1.0) - x});
}

poly::Box unit_box(int n) {
  poly::Box b;
  b.lo.assign(static_cast<size_t>(n), 0.0);
  b.hi.assign(static_cast<size_t>(n), 1.0);
  return b;
}

}  // namespace

TEST_SUITE_BEGIN("mrf");

TEST_CASE("interval bounds") {
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  SUBCASE("identity branch") {
    mrf::MrfProblem prob(unit_interval(), poly::RationalFunction(Polynomial(1)),
                         {poly::RationalFunction(x)}, unit_box(1));
    auto b = mrf::compute_bounds(prob, mrf::BoundMode::Interval);
    CHECK(b.M1 == doctest::Approx(1.0));
    CHECK(b.M2 == doctest::Approx(0.0));
  }
  SUBCASE("constant branch") {
    mrf::MrfProblem prob(
        unit_interval(), poly::RationalFunction(Polynomial(1)),
        {poly::RationalFunction(Polynomial::constant(1, -2.0))}, unit_box(1));
    auto b = mrf::compute_bounds(prob, mrf::BoundMode::Interval);
    CHECK(b.M1 == doctest::Approx(2.0));
    CHECK(b.M2 == doctest::Approx(-2.0));
  }
  SUBCASE("rational branch") {
    mrf::MrfProblem prob(unit_interval(), poly::RationalFunction(Polynomial(1)),
                         {poly::RationalFunction(x * x, one + x)}, unit_box(1));
    auto b = mrf::compute_bounds(prob, mrf::BoundMode::Interval);
    CHECK(b.M1 == doctest::Approx(1.0));
    CHECK(b.M2 == doctest::Approx(0.0));
  }
  SUBCASE("missing box") {
    mrf::MrfProblem prob(unit_interval(), poly::RationalFunction(Polynomial(1)),
                         {poly::RationalFunction(x)});
    CHECK_THROWS_AS(mrf::compute_bounds(prob, mrf::BoundMode::Interval),
                    mrf::Error);
  }
}

TEST_CASE("relaxation-certified bounds") {
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  mrf::MrfProblem prob(unit_interval(), poly::RationalFunction(Polynomial(1)),
                       {poly::RationalFunction(x * x, one + x)}, unit_box(1));
  auto b = mrf::compute_bounds(prob, mrf::BoundMode::Relaxation);
  // Valid enclosures of the branch range [0, 1/2].
  CHECK(b.M1 >= 0.5 - 1e-6);
  CHECK(b.M2 <= 1e-6);
  CHECK(b.M1 <= 1.5);
  CHECK(b.M2 >= -1.5);
}

TEST_CASE("lift shapes") {
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  SUBCASE("two affine branches") {
    mrf::MrfProblem prob(
        unit_interval(), poly::RationalFunction(Polynomial(1)),
        {poly::RationalFunction(x), poly::RationalFunction(one - x)},
        unit_box(1));
    auto L = mrf::lift(prob, {1.0, 0.0});
    CHECK(L.has_z);
    CHECK(L.nvars() == 2);
    REQUIRE(L.khat.constraints().size() == 4);
    // z q - p branch rows.
    auto z = Polynomial::variable(2, 1);
    auto xe = Polynomial::variable(2, 0);
    CHECK(L.khat.constraints()[2].same_as(z - xe, 1e-14));
    CHECK(L.khat.constraints()[3].same_as(
        z - Polynomial::constant(2, 1.0) + xe, 1e-14));
    CHECK(L.all_affine);
    auto bc = L.bound_constraints();
    REQUIRE(bc.size() == 2);  // affine pair preserves the linear fast path
    CHECK(bc[0].is_affine());
    CHECK(L.r0 == 1);
  }
  SUBCASE("quadratic branch keeps the quadratic bound row") {
    mrf::MrfProblem prob(unit_interval(),
                         poly::RationalFunction(Polynomial(1)),
                         {poly::RationalFunction(x * x)}, unit_box(1));
    auto L = mrf::lift(prob, {1.0, 0.0});
    CHECK_FALSE(L.all_affine);
    auto bc = L.bound_constraints();
    REQUIRE(bc.size() == 1);
    CHECK(bc[0].degree() == 2);
  }
  SUBCASE("no branches means no lift variable") {
    mrf::MrfProblem prob(unit_interval(),
                         poly::RationalFunction(x, one + x), {}, unit_box(1));
    auto L = mrf::lift(prob, {0.0, 0.0});
    CHECK_FALSE(L.has_z);
    CHECK(L.nvars() == 1);
    CHECK(L.bound_constraints().empty());
    CHECK(L.h0.same_as(x));
    CHECK(L.q0.same_as(one + x));
  }
}

TEST_CASE("order too small") {
  auto x = Polynomial::variable(1, 0);
  mrf::MrfProblem prob(unit_interval(), poly::RationalFunction(Polynomial(1)),
                       {poly::RationalFunction(x * x)}, unit_box(1));
  auto L = mrf::lift(prob, mrf::compute_bounds(prob, mrf::BoundMode::Interval));
  CHECK_THROWS_AS(mrf::build_relaxation(L, 0), mrf::Error);
}

TEST_CASE("min of max(x, 1-x) on [0,1]") {
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  mrf::MrfProblem prob(
      unit_interval(), poly::RationalFunction(Polynomial(1)),
      {poly::RationalFunction(x), poly::RationalFunction(one - x)},
      unit_box(1));
  auto H = mrf::solve_hierarchy(prob);
  REQUIRE(H.any_solved());
  CHECK(H.value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(H.orders.front().lp_path);
  REQUIRE(H.minimizers.has_value());
  REQUIRE(H.minimizers->atoms.size() == 1);
  CHECK(H.minimizers->atoms[0][0] == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("rational branch crossing") {
  // min max{x/(x+1), (1-x)/(2-x)} on [0,1] = 1/3 at x = 1/2.
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  auto two = Polynomial::constant(1, 2.0);
  mrf::MrfProblem prob(unit_interval(), poly::RationalFunction(Polynomial(1)),
                       {poly::RationalFunction(x, x + one),
                        poly::RationalFunction(one - x, two - x)},
                       unit_box(1));
  double rho_grid = oracle::grid_min(
      [](const std::vector<double>& p) {
        return std::max(p[0] / (p[0] + 1), (1 - p[0]) / (2 - p[0]));
      },
      {0.0}, {1.0}, 100001);
  CHECK(rho_grid == doctest::Approx(1.0 / 3).epsilon(1e-8));
  mrf::SolveOptions opts;
  opts.r_max = 5;
  auto H = mrf::solve_hierarchy(prob, opts);
  REQUIRE(H.any_solved());
  CHECK(H.value == doctest::Approx(1.0 / 3).epsilon(1e-5));
  CHECK(H.value <= rho_grid + 1e-6);
  // Monotone in the order.
  for (size_t i = 1; i < H.orders.size(); ++i)
    if (H.orders[i].usable && H.orders[i - 1].usable)
      CHECK(H.orders[i].value >= H.orders[i - 1].value - 2e-8);
  // Unique minimizer: recovered by extraction or by first-order moments.
  double xstar = H.minimizers.has_value() ? H.minimizers->atoms[0][0]
                                          : H.first_order_point.at(0);
  CHECK(xstar == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("single rational objective") {
  // m = 0: minimize (x^2 + 1) / (2 - x) on [0,1].
  auto x = Polynomial::variable(1, 0);
  auto num = x * x + Polynomial::constant(1, 1.0);
  auto den = Polynomial::constant(1, 2.0) - x;
  mrf::MrfProblem prob(unit_interval(), poly::RationalFunction(num, den), {},
                       unit_box(1));
  double rho_grid = oracle::grid_min(
      [](const std::vector<double>& p) {
        return (p[0] * p[0] + 1) / (2 - p[0]);
      },
      {0.0}, {1.0}, 100001);
  auto H = mrf::solve_hierarchy(prob);
  REQUIRE(H.any_solved());
  CHECK(H.value == doctest::Approx(rho_grid).epsilon(1e-4));
}

TEST_CASE("reference two-by-two game as a direct min-max instance") {
  // Both players mix over two actions; x1, x2 are the first-action
  // probabilities and each interval is the quadratic row x(1-x) >= 0.
  double a = 0.05, b = 0.82, c = 0.56, d = 0.76;
  auto x1 = Polynomial::variable(2, 0), x2 = Polynomial::variable(2, 1);
  auto one = Polynomial::constant(2, 1.0);
  poly::SemiAlgebraicSet K(2, {x1 * (one - x1), x2 * (one - x2)});
  auto g1p = a * (x1 * x2) + b * ((one - x1) * (one - x2));
  auto g2p = c * (x1 * x2) + d * ((one - x1) * (one - x2));
  std::vector<poly::RationalFunction> branches{
      poly::RationalFunction(a * x2 - g1p),
      poly::RationalFunction(b * (one - x2) - g1p),
      poly::RationalFunction(c * x1 - g2p),
      poly::RationalFunction(d * (one - x1) - g2p)};
  mrf::MrfProblem prob(K, poly::RationalFunction(Polynomial(2)), branches,
                       poly::Box{{0, 0}, {1, 1}});

  auto bounds = mrf::compute_bounds(prob, mrf::BoundMode::Interval);
  auto L = mrf::lift(prob, bounds);
  CHECK(L.nvars() == 3);  // (x1, x2, z)
  CHECK(L.khat.constraints().size() == 6);  // 2 interval rows + 4 branches
  CHECK(L.r0 == 1);

  // The first relaxation minimizes the first moment of z with the
  // normalization y_0 = 1 and one scalar row per lifted constraint.
  auto R1 = mrf::build_relaxation(L, 1);
  REQUIRE(R1.problem.objective_terms().size() == 1);
  poly::Monomial zmono(std::vector<int>{0, 0, 1});
  CHECK(R1.problem.objective_terms()[0].first ==
        R1.y[static_cast<size_t>(R1.ybasis.index_of(zmono))]);
  int one_by_one = 0;
  for (const auto& p : R1.problem.pencils())
    if (p.dim == 1) ++one_by_one;
  CHECK(one_by_one == 7);  // 6 constraint rows + the quadratic z bound

  mrf::SolveOptions opts;
  opts.r_start = 3;
  opts.r_max = 3;
  auto H = mrf::solve_hierarchy(prob, opts);
  REQUIRE(H.any_solved());
  CHECK(std::abs(H.value) <= 1e-6);
  REQUIRE(H.certified);
  REQUIRE(H.minimizers.has_value());
  REQUIRE(H.minimizers->atoms.size() == 3);
  std::vector<std::pair<double, double>> want{
      {0.0, 0.0}, {1.0, 1.0}, {0.575757, 0.942529}};
  for (auto [w1, w2] : want) {
    bool found = false;
    for (const auto& at : H.minimizers->atoms)
      if (std::abs(at[0] - w1) <= 1e-3 && std::abs(at[1] - w2) <= 1e-3)
        found = true;
    CHECK(found);
  }
  // Extracted minimizers actually achieve the reported optimum on K.
  for (const auto& at : H.minimizers->atoms) {
    CHECK(prob.K().contains(at, 1e-5));
    CHECK(prob.objective_at(at) <= H.value + 1e-5);
  }
}

TEST_CASE("concurrent order solving matches the sequential result") {
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  mrf::MrfProblem prob(
      unit_interval(), poly::RationalFunction(Polynomial(1)),
      {poly::RationalFunction(x * x), poly::RationalFunction(one - x)},
      unit_box(1));
  mrf::SolveOptions seq;
  seq.r_max = 3;
  mrf::SolveOptions par = seq;
  par.concurrent_orders = true;
  auto a = mrf::solve_hierarchy(prob, seq);
  auto b = mrf::solve_hierarchy(prob, par);
  REQUIRE(a.any_solved());
  REQUIRE(b.any_solved());
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
}

TEST_CASE("perturbed objective still bounds from below") {
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  mrf::MrfProblem prob(
      unit_interval(), poly::RationalFunction(Polynomial(1)),
      {poly::RationalFunction(x * x), poly::RationalFunction(one - x)},
      unit_box(1));
  mrf::SolveOptions opts;
  opts.perturb = 1e-4;
  opts.seed = 42;
  auto H = mrf::solve_hierarchy(prob, opts);
  REQUIRE(H.any_solved());
  double rho_grid = oracle::grid_min(
      [](const std::vector<double>& p) {
        return std::max(p[0] * p[0], 1 - p[0]);
      },
      {0.0}, {1.0}, 100001);
  CHECK(H.value <= rho_grid + 1e-3);
  CHECK(H.value >= rho_grid - 1e-2);
}

TEST_SUITE_END();
