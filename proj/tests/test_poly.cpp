#include <random>

#include "doctest.h"
#include "msos/poly.hpp"

using namespace msos;
using poly::Polynomial;

namespace {

Polynomial random_poly(int nvars, int deg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-10.0, 10.0);
  std::uniform_int_distribution<int> e(0, deg);
  Polynomial p(nvars);
  for (int t = 0; t < 6; ++t) {
    std::vector<int> exps(static_cast<size_t>(nvars));
    int budget = deg;
    for (int i = 0; i < nvars; ++i) {
      exps[static_cast<size_t>(i)] = std::min(budget, e(rng));
      budget -= exps[static_cast<size_t>(i)];
    }
    p.add_term(poly::Monomial(exps), coef(rng));
  }
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("poly");

TEST_CASE("product identity") {
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  auto prod = (x + one) * (x - one);
  auto expect = x * x - one;
  CHECK(prod.same_as(expect));
}

TEST_CASE("zero plus p") {
  auto p = Polynomial::variable(2, 0) * Polynomial::variable(2, 1);
  CHECK((Polynomial(2) + p).same_as(p));
}

TEST_CASE("exponent addition") {
  auto x1x2 = Polynomial::variable(2, 0) * Polynomial::variable(2, 1);
  auto sq = x1x2 * x1x2;
  REQUIRE(sq.term_count() == 1);
  CHECK(sq.terms().begin()->first.exps() == std::vector<int>{2, 2});
  CHECK(sq.degree() == 4);
}

TEST_CASE("eval") {
  CHECK(Polynomial::constant(3, 5.0).eval(std::vector<double>{9, 9, 9}) == 5.0);
  // x1^2 x2 + 2 x2 at (2, 3)
  auto x1 = Polynomial::variable(2, 0), x2 = Polynomial::variable(2, 1);
  auto p = x1 * x1 * x2 + x2.scaled(2.0);
  CHECK(p.eval(std::vector<double>{2, 3}) == 18.0);
  // z*1 - x^2 at (x, z) = (2, 5)
  auto x = Polynomial::variable(2, 0), z = Polynomial::variable(2, 1);
  auto h = z - x * x;
  CHECK(h.eval(std::vector<double>{2, 5}) == 1.0);
  CHECK_THROWS_AS(p.eval(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("set contains") {
  auto x = Polynomial::variable(1, 0);
  poly::SemiAlgebraicSet K(1, {x, Polynomial::constant(1, 1.0) - x});
  CHECK(K.contains(std::vector<double>{0.5}, 0.0));
  CHECK_FALSE(K.contains(std::vector<double>{1.001}, 1e-6));
  CHECK(K.contains(std::vector<double>{1.0000005}, 1e-6));
}

TEST_CASE("ring axioms on random inputs") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 25; ++rep) {
    auto a = random_poly(2, 3, rng), b = random_poly(2, 3, rng),
         c = random_poly(2, 3, rng);
    CHECK(((a + b) + c).same_as(a + (b + c), 1e-12));
    CHECK((a * (b + c)).same_as(a * b + a * c, 1e-9));
  }
}

TEST_CASE("eval commutes with arithmetic") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pt(-1.5, 1.5);
  for (int rep = 0; rep < 25; ++rep) {
    auto a = random_poly(3, 2, rng), b = random_poly(3, 2, rng);
    std::vector<double> x{pt(rng), pt(rng), pt(rng)};
    double lhs = (a * b).eval(x);
    double rhs = a.eval(x) * b.eval(x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("canonical form is idempotent") {
  std::mt19937_64 rng(3);
  auto a = random_poly(2, 4, rng);
  Polynomial re(a.nvars());
  for (const auto& [m, c] : a.terms()) re.add_term(m, c);
  CHECK(re.same_as(a));
  for (const auto& [m, c] : re.terms()) CHECK(c != 0.0);
}

TEST_CASE("interval range") {
  auto x = Polynomial::variable(1, 0);
  poly::Box box{{0.0}, {1.0}};
  auto [lo, hi] = poly::interval_range(x * x - x, box);
  CHECK(lo <= -0.25);
  CHECK(hi >= 0.0);
  auto [clo, chi] = poly::interval_range(Polynomial::constant(1, 3.5), box);
  CHECK(clo == 3.5);
  CHECK(chi == 3.5);
}

TEST_CASE("positivity sampling on a simplex face") {
  // q = p1 + p2 is 1 on the simplex {p >= 0, p1 + p2 = 1}.
  auto p1 = Polynomial::variable(2, 0), p2 = Polynomial::variable(2, 1);
  auto one = Polynomial::constant(2, 1.0);
  poly::SemiAlgebraicSet simplex(
      2, {p1, p2, one - p1 - p2, p1 + p2 - one});
  poly::Box box{{0, 0}, {1, 1}};
  auto rep = poly::verify_positive_samples(p1 + p2, simplex, box, 200);
  CHECK(rep.positive);
  CHECK(rep.min_value == doctest::Approx(1.0).epsilon(1e-6));
  auto bad = poly::verify_positive_samples(p1 - p2, simplex, box, 200);
  CHECK_FALSE(bad.positive);
}

TEST_CASE("embedding") {
  auto x = Polynomial::variable(1, 0);
  auto q = (x * x).embedded(3, 1);
  CHECK(q.nvars() == 3);
  CHECK(q.eval(std::vector<double>{9.0, 2.0, 9.0}) == 4.0);
}

TEST_SUITE_END();
