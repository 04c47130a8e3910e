#include <Eigen/Eigenvalues>
#include <random>

#include "doctest.h"
#include "msos/atoms.hpp"
#include "msos/moment.hpp"

using namespace msos;
using poly::Polynomial;

TEST_SUITE_BEGIN("moment");

TEST_CASE("basis order and size") {
  moment::MonomialBasis b(3, 1);
  REQUIRE(b.size() == 4);
  CHECK(b.at(0).degree() == 0);
  CHECK(b.at(1).exps() == std::vector<int>{1, 0, 0});
  CHECK(b.at(2).exps() == std::vector<int>{0, 1, 0});
  CHECK(b.at(3).exps() == std::vector<int>{0, 0, 1});
  CHECK(moment::basis_size(2, 3) == 10);
  moment::MonomialBasis big(2, 3);
  CHECK(big.size() == 10);
}

TEST_CASE("riesz") {
  moment::MomentVector y =
      moment::MomentVector::of_atoms({{3.0}}, {1.0}, 1, 4);
  CHECK(y.riesz(Polynomial::constant(1, 1.0)) == 1.0);
  auto x = Polynomial::variable(1, 0);
  CHECK(y.riesz(x * x) == doctest::Approx(9.0));
  moment::MomentVector y2(1, 2);
  y2.values() << 1.0, 0.5, 0.0;
  CHECK(y2.riesz(x.scaled(2.0) + Polynomial::constant(1, 3.0)) ==
        doctest::Approx(4.0));
  auto deg5 = x * x * x * x * x;
  CHECK_THROWS_AS(y2.riesz(deg5), std::invalid_argument);
}

TEST_CASE("moment matrix of a dirac") {
  auto y = moment::MomentVector::of_atoms({{2.0}}, {1.0}, 1, 2);
  Eigen::MatrixXd M = moment::moment_matrix(y, 1);
  CHECK(M(0, 0) == 1.0);
  CHECK(M(0, 1) == 2.0);
  CHECK(M(1, 0) == 2.0);
  CHECK(M(1, 1) == 4.0);
  CHECK(atoms::numeric_rank(M, 1e-8) == 1);
}

TEST_CASE("moment matrix of a two-atom mix") {
  auto y = moment::MomentVector::of_atoms({{0.0}, {1.0}}, {0.5, 0.5}, 1, 2);
  Eigen::MatrixXd M = moment::moment_matrix(y, 1);
  CHECK(M(0, 1) == doctest::Approx(0.5));
  CHECK(M(1, 1) == doctest::Approx(0.5));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("order-one layout in three variables") {
  // Rows ordered (1, x1, x2, z); entry (i, j) = y_{b_i + b_j}.
  moment::MomentVector y(3, 2);
  moment::MonomialBasis b(3, 2);
  for (int i = 0; i < b.size(); ++i) y.values()(i) = 100 + i;
  Eigen::MatrixXd M = moment::moment_matrix(y, 1);
  REQUIRE(M.rows() == 4);
  CHECK(M(0, 0) == y[poly::Monomial(std::vector<int>{0, 0, 0})]);
  CHECK(M(1, 2) == y[poly::Monomial(std::vector<int>{1, 1, 0})]);
  CHECK(M(1, 3) == y[poly::Monomial(std::vector<int>{1, 0, 1})]);
  CHECK(M(2, 3) == y[poly::Monomial(std::vector<int>{0, 1, 1})]);
  CHECK(M(3, 3) == y[poly::Monomial(std::vector<int>{0, 0, 2})]);
  CHECK(M == M.transpose());
}

TEST_CASE("localizing specializations") {
  auto x = Polynomial::variable(1, 0);
  auto one = Polynomial::constant(1, 1.0);
  auto yh = moment::MomentVector::of_atoms({{0.5}}, {1.0}, 1, 2);
  Eigen::MatrixXd L = moment::localizing_matrix(one - x * x, yh, 0);
  CHECK(L(0, 0) == doctest::Approx(0.75));
  auto y2 = moment::MomentVector::of_atoms({{2.0}}, {1.0}, 1, 1);
  Eigen::MatrixXd L2 = moment::localizing_matrix(x - one, y2, 0);
  CHECK(L2(0, 0) == doctest::Approx(1.0));
  // theta = 1 reduces to the moment matrix, bitwise.
  auto yr = moment::MomentVector::of_atoms({{0.3}, {0.9}}, {0.25, 0.75}, 1, 4);
  CHECK(moment::localizing_matrix(one, yr, 2) == moment::moment_matrix(yr, 2));
}

TEST_CASE("basis matrices for n=1 d=1") {
  auto B = moment::basis_matrices(Polynomial::constant(1, 1.0), 1);
  REQUIRE(B->alpha_basis().size() == 3);
  Eigen::MatrixXd B0 = B->dense(0), B1 = B->dense(1), B2 = B->dense(2);
  CHECK(B0(0, 0) == 1.0);
  CHECK(B0(1, 1) == 0.0);
  CHECK(B1(0, 1) == 1.0);
  CHECK(B1(1, 0) == 1.0);
  CHECK(B2(1, 1) == 1.0);
}

TEST_CASE("reconstruction identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto x0 = Polynomial::variable(2, 0), x1 = Polynomial::variable(2, 1);
  auto theta = x0 * x0 - x1.scaled(2.0) + Polynomial::constant(2, 0.5);
  int d = 2;
  auto B = moment::basis_matrices(theta, d);
  moment::MonomialBasis alphas(2, 2 * d + theta.degree());
  REQUIRE(B->alpha_basis().size() == alphas.size());
  for (int rep = 0; rep < 100; ++rep) {
    moment::MomentVector y(2, 2 * d + theta.degree());
    for (int i = 0; i < alphas.size(); ++i) y.values()(i) = u(rng);
    Eigen::MatrixXd direct = moment::localizing_matrix(theta, y, d);
    Eigen::MatrixXd assembled = B->assemble(y.values());
    CHECK((direct - assembled).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(B->nonzero_matrix_count() <= alphas.size());
}

TEST_CASE("psd for atomic measures and rank equals support size") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 1; n <= 2; ++n) {
    for (int s = 1; s <= 3; ++s) {
      std::vector<std::vector<double>> atoms;
      std::vector<double> w;
      for (int k = 0; k < s; ++k) {
        std::vector<double> a(static_cast<size_t>(n));
        for (auto& v : a) v = u(rng);
        atoms.push_back(a);
        w.push_back(1.0);
      }
      for (auto& v : w) v /= s;
      int d = 2;
      auto y = moment::MomentVector::of_atoms(atoms, w, n, 2 * d + 2);
      Eigen::MatrixXd M = moment::moment_matrix(y, d);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                        Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9);
      CHECK(atoms::numeric_rank(M, 1e-8) == s);
      // Localizing matrices for constraints satisfied on the support.
      auto xv = Polynomial::variable(n, 0);
      auto g = xv * (Polynomial::constant(n, 1.0) - xv);  // x(1-x) >= 0
      Eigen::MatrixXd L = moment::localizing_matrix(g, y, d);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(L,
                                                         Eigen::EigenvaluesOnly);
      CHECK(es2.eigenvalues().minCoeff() >= -1e-9);
    }
  }
}

TEST_SUITE_END();
