#include <random>

#include "doctest.h"
#include "msos/finite_games.hpp"
#include "oracle.hpp"

using namespace msos;
using games::FiniteGame;
using games::MixedProfile;

namespace {

FiniteGame example1(double a, double b, double c, double d) {
  // Row player payoffs (a,0;0,b), column player (c,0;0,d).
  return FiniteGame({2, 2}, {{a, 0, 0, b}, {c, 0, 0, d}});
}

FiniteGame matching_pennies() {
  return FiniteGame({2, 2}, {{1, -1, -1, 1}, {-1, 1, 1, -1}});
}

FiniteGame random_zero_sum(int m, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> g1;
  for (int i = 0; i < m * n; ++i) g1.push_back(u(rng));
  std::vector<double> g2;
  for (double v : g1) g2.push_back(-v);
  return FiniteGame({m, n}, {g1, g2});
}

MixedProfile profile_from_atom(const FiniteGame& g,
                               const std::vector<double>& x) {
  MixedProfile prof;
  size_t k = 0;
  for (int i = 0; i < g.players(); ++i) {
    std::vector<double> pi;
    double s = 0;
    for (int a = 0; a < g.actions()[static_cast<size_t>(i)]; ++a) {
      double v = std::max(0.0, x[k++]);
      pi.push_back(v);
      s += v;
    }
    for (double& v : pi) v /= s;
    prof.p.push_back(std::move(pi));
  }
  return prof;
}

}  // namespace

TEST_SUITE_BEGIN("games");

TEST_CASE("multilinear evaluation") {
  FiniteGame g = example1(0.3, 0.9, 0.2, 0.7);
  MixedProfile pure{{{1, 0}, {1, 0}}};
  CHECK(games::multilinear_eval(g, 0, pure) == doctest::Approx(0.3));
  CHECK(games::multilinear_eval(g, 1, pure) == doctest::Approx(0.2));

  FiniteGame diag({2, 2}, {{2.0, 0, 0, 5.0}, {0, 0, 0, 0}});
  MixedProfile uniform{{{0.5, 0.5}, {0.5, 0.5}}};
  CHECK(games::multilinear_eval(diag, 0, uniform) ==
        doctest::Approx((2.0 + 5.0) / 4));

  MixedProfile bad{{{0.5, 0.4}, {0.5, 0.5}}};
  CHECK_THROWS_AS(games::multilinear_eval(g, 0, bad), games::Error);
}

TEST_CASE("nash reduction on matching pennies") {
  auto prob = games::nash_mrf(matching_pennies());
  CHECK(prob.nx() == 4);
  CHECK(prob.branches().size() == 4);
  mrf::SolveOptions opts;
  opts.r_max = 3;
  auto H = mrf::solve_hierarchy(prob, opts);
  REQUIRE(H.any_solved());
  CHECK(std::abs(H.value) <= 1e-5);
  REQUIRE(H.minimizers.has_value());
  auto prof = profile_from_atom(matching_pennies(), H.minimizers->atoms[0]);
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a)
      CHECK(prof.p[static_cast<size_t>(i)][static_cast<size_t>(a)] ==
            doctest::Approx(0.5).epsilon(1e-4));
  CHECK(games::best_response_residual(matching_pennies(), prof) <= 1e-4);
}

TEST_CASE("all-zero payoffs") {
  FiniteGame z({2, 2}, {{0, 0, 0, 0}, {0, 0, 0, 0}});
  auto prob = games::nash_mrf(z);
  for (const auto& br : prob.branches()) CHECK(br.num().is_zero());
  mrf::SolveOptions opts;
  opts.r_max = 2;
  auto H = mrf::solve_hierarchy(prob, opts);
  REQUIRE(H.any_solved());
  CHECK(std::abs(H.value) <= 1e-6);
}

TEST_CASE("example 1 nash equilibria") {
  FiniteGame g = example1(0.05, 0.82, 0.56, 0.76);
  auto prob = games::nash_mrf(g);
  mrf::SolveOptions opts;
  opts.r_max = 3;
  auto H = mrf::solve_hierarchy(prob, opts);
  REQUIRE(H.any_solved());
  CHECK(std::abs(H.value) <= 1e-6);
  REQUIRE(H.certified);
  REQUIRE(H.minimizers.has_value());
  REQUIRE(H.minimizers->atoms.size() == 3);
  // Projections to (prob of first action per player).
  std::vector<std::pair<double, double>> want{
      {0.0, 0.0}, {1.0, 1.0}, {0.575757, 0.942529}};
  for (auto [x1, x2] : want) {
    bool found = false;
    for (const auto& at : H.minimizers->atoms)
      if (std::abs(at[0] - x1) <= 1e-3 && std::abs(at[2] - x2) <= 1e-3)
        found = true;
    CHECK(found);
  }
  for (const auto& at : H.minimizers->atoms) {
    auto prof = profile_from_atom(g, at);
    CHECK(games::best_response_residual(g, prof) <= 1e-4);
  }
}

TEST_CASE("two-player minmax is a linear program") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 5; ++rep) {
    FiniteGame g = random_zero_sum(3, 3, rng);
    auto red = games::minmax_mrf(g, 0);
    mrf::SolveOptions opts;
    opts.r_max = 1;
    auto H = mrf::solve_hierarchy(red.problem, opts);
    REQUIRE(H.any_solved());
    CHECK(H.orders.front().lp_path);
    double v = red.recover(H.value);
    Eigen::MatrixXd A(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) A(i, j) = g.entry(0, {i, j});
    // Punishment level of the row player equals the matrix-game value.
    double v_lp = oracle::matrix_game_value(A);
    CHECK(v == doctest::Approx(v_lp).epsilon(1e-6));
    // And the two punishment levels are opposite for zero-sum games.
    auto red2 = games::minmax_mrf(g, 1);
    auto H2 = mrf::solve_hierarchy(red2.problem, opts);
    REQUIRE(H2.any_solved());
    CHECK(red2.recover(H2.value) == doctest::Approx(-v).epsilon(1e-6));
  }
}

TEST_CASE("constant payoff minmax") {
  FiniteGame g({2, 2}, {{3.25, 3.25, 3.25, 3.25}, {0, 0, 0, 0}});
  auto red = games::minmax_mrf(g, 0);
  mrf::SolveOptions opts;
  opts.r_max = 1;
  auto H = mrf::solve_hierarchy(red.problem, opts);
  REQUIRE(H.any_solved());
  CHECK(red.recover(H.value) == doctest::Approx(3.25).epsilon(1e-8));
}

TEST_CASE("three-player minmax against a grid") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> g1;
  for (int i = 0; i < 8; ++i) g1.push_back(u(rng));
  FiniteGame g({2, 2, 2},
               {g1, std::vector<double>(8, 0.0), std::vector<double>(8, 0.0)});
  auto red = games::minmax_mrf(g, 0);
  mrf::SolveOptions opts;
  opts.r_max = 3;
  auto H = mrf::solve_hierarchy(red.problem, opts);
  REQUIRE(H.any_solved());
  double v = red.recover(H.value);
  // Brute force over the two opponents' mixed strategies.
  auto payoff = [&](int a, double q2, double q3) {
    double acc = 0;
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        acc += (b == 0 ? q2 : 1 - q2) * (c == 0 ? q3 : 1 - q3) *
               g.entry(0, {a, b, c});
    return acc;
  };
  double vgrid = oracle::grid_min(
      [&](const std::vector<double>& q) {
        return std::max(payoff(0, q[0], q[1]), payoff(1, q[0], q[1]));
      },
      {0, 0}, {1, 1}, 201);
  CHECK(v == doctest::Approx(vgrid).epsilon(2e-3));
  CHECK(v <= vgrid + 1e-6);
}

TEST_CASE("loomis with unit denominators reproduces the nash reduction") {
  FiniteGame g = example1(0.4, 0.6, 0.3, 0.9);
  FiniteGame ones({2, 2}, {{1, 1, 1, 1}, {1, 1, 1, 1}});
  games::LoomisGame L(g, ones);
  auto pn = games::nash_mrf(g);
  auto pl = games::loomis_mrf(L);
  REQUIRE(pn.branches().size() == pl.branches().size());
  for (size_t i = 0; i < pn.branches().size(); ++i) {
    CHECK(pl.branches()[i].den().is_constant());
    CHECK(pn.branches()[i].num().same_as(pl.branches()[i].num(), 1e-12));
  }
}

TEST_CASE("loomis equilibrium check") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ug(-1.0, 1.0), uf(0.5, 1.5);
  std::vector<double> g1, g2, f1, f2;
  for (int i = 0; i < 4; ++i) {
    g1.push_back(ug(rng));
    g2.push_back(ug(rng));
    f1.push_back(uf(rng));
    f2.push_back(uf(rng));
  }
  FiniteGame G({2, 2}, {g1, g2});
  FiniteGame F({2, 2}, {f1, f2});
  games::LoomisGame L(G, F);
  auto prob = games::loomis_mrf(L);
  mrf::SolveOptions opts;
  opts.r_max = 3;
  auto H = mrf::solve_hierarchy(prob, opts);
  REQUIRE(H.any_solved());
  CHECK(std::abs(H.value) <= 1e-5);
  REQUIRE(H.minimizers.has_value());
  // Verify the ratio-payoff equilibrium inequalities over pure deviations.
  auto prof = profile_from_atom(G, H.minimizers->atoms[0]);
  for (int i = 0; i < 2; ++i) {
    double base = games::multilinear_eval(G, i, prof) /
                  games::multilinear_eval(F, i, prof);
    for (int a = 0; a < 2; ++a) {
      MixedProfile dev = prof;
      dev.p[static_cast<size_t>(i)] = {a == 0 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0};
      double h = games::multilinear_eval(G, i, dev) /
                 games::multilinear_eval(F, i, dev);
      CHECK(h <= base + 1e-4);
    }
  }
}

TEST_CASE("tiny loomis game") {
  FiniteGame G({1, 1}, {{2.0}, {3.0}});
  FiniteGame F({1, 1}, {{1.0}, {1.0}});
  games::LoomisGame L(G, F);
  auto prob = games::loomis_mrf(L);
  mrf::SolveOptions opts;
  opts.r_max = 2;
  auto H = mrf::solve_hierarchy(prob, opts);
  REQUIRE(H.any_solved());
  CHECK(std::abs(H.value) <= 1e-7);
}

TEST_CASE("absorbing to loomis") {
  SUBCASE("never absorb") {
    FiniteGame g({1, 1}, {{2.0}, {0.0}});
    FiniteGame f({1, 1}, {{7.0}, {0.0}});
    games::FiniteAbsorbingGame A(g, f, {1.0}, 0.5);
    auto L = games::absorbing_to_loomis(A);
    CHECK(L.g.payoff(0)[0] == doctest::Approx(0.5 * 2.0));
    CHECK(L.f.payoff(0)[0] == doctest::Approx(0.5));
  }
  SUBCASE("absorb immediately") {
    FiniteGame g({1, 1}, {{2.0}, {0.0}});
    FiniteGame f({1, 1}, {{4.0}, {0.0}});
    games::FiniteAbsorbingGame A(g, f, {0.0}, 0.5);
    auto L = games::absorbing_to_loomis(A);
    CHECK(L.g.payoff(0)[0] == doctest::Approx(0.5 * 4.0));
    CHECK(L.f.payoff(0)[0] == doctest::Approx(1.0));
  }
  SUBCASE("mixed") {
    FiniteGame g({1, 1}, {{2.0}, {0.0}});
    FiniteGame f({1, 1}, {{4.0}, {0.0}});
    games::FiniteAbsorbingGame A(g, f, {0.5}, 0.5);
    auto L = games::absorbing_to_loomis(A);
    CHECK(L.g.payoff(0)[0] == doctest::Approx(1.5));
    CHECK(L.f.payoff(0)[0] == doctest::Approx(0.75));
    CHECK(L.g.payoff(0)[0] / L.f.payoff(0)[0] == doctest::Approx(2.0));
  }
  SUBCASE("bad q rejected") {
    FiniteGame g({1, 1}, {{2.0}, {0.0}});
    CHECK_THROWS_AS(games::FiniteAbsorbingGame(g, g, {1.5}, 0.5), games::Error);
    CHECK_THROWS_AS(games::FiniteAbsorbingGame(g, g, {0.5}, 1.0), games::Error);
  }
}

TEST_CASE("random nash instances have zero optimum") {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<double> g1, g2;
    for (int i = 0; i < 6; ++i) {
      g1.push_back(u(rng));
      g2.push_back(u(rng));
    }
    FiniteGame g({2, 3}, {g1, g2});
    auto prob = games::nash_mrf(g);
    mrf::SolveOptions opts;
    opts.r_max = 3;
    auto H = mrf::solve_hierarchy(prob, opts);
    REQUIRE(H.any_solved());
    CHECK(std::abs(H.value) <= 1e-5);
    if (H.minimizers)
      for (const auto& at : H.minimizers->atoms)
        CHECK(games::best_response_residual(g, profile_from_atom(g, at)) <=
              1e-4);
  }
}

TEST_SUITE_END();
