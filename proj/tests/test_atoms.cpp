#include <random>

#include "doctest.h"
#include "msos/atoms.hpp"

using namespace msos;

TEST_SUITE_BEGIN("atoms");

TEST_CASE("numeric rank") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = 1e-12;
  CHECK(atoms::numeric_rank(D, 1e-8) == 1);
  CHECK(atoms::numeric_rank(Eigen::MatrixXd::Identity(3, 3), 1e-8) == 3);
  auto y = moment::MomentVector::of_atoms({{0.0}, {1.0}}, {0.5, 0.5}, 1, 4);
  CHECK(atoms::numeric_rank(moment::moment_matrix(y, 2), 1e-8) == 2);
  Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(atoms::numeric_rank(bad, 1e-8), std::invalid_argument);
}

TEST_CASE("flat test") {
  auto dirac = moment::MomentVector::of_atoms({{0.3}}, {1.0}, 1, 4);
  auto t = atoms::flat_test(dirac, 2, 1, 1e-8);
  REQUIRE(t.has_value());
  CHECK(*t == 1);

  auto mix = moment::MomentVector::of_atoms({{0.0}, {1.0}}, {0.5, 0.5}, 1, 4);
  auto t2 = atoms::flat_test(mix, 2, 1, 1e-8);
  REQUIRE(t2.has_value());
  CHECK(*t2 == 2);

  // Lebesgue moments on [0,1] truncated at order 2: ranks 1 vs 2.
  moment::MomentVector leb(1, 2);
  leb.values() << 1.0, 0.5, 1.0 / 3.0;
  CHECK_FALSE(atoms::flat_test(leb, 1, 1, 1e-8).has_value());
}

TEST_CASE("extract a planar dirac") {
  auto y = moment::MomentVector::of_atoms({{0.3, 0.7}}, {1.0}, 2, 2);
  auto m = atoms::extract_atoms(y, 1, 1, 1e-6);
  REQUIRE(m.atoms.size() == 1);
  CHECK(m.atoms[0][0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(m.atoms[0][1] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(m.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("extract a two-point mix") {
  auto y = moment::MomentVector::of_atoms({{0.0}, {1.0}}, {0.5, 0.5}, 1, 4);
  auto m = atoms::extract_atoms(y, 2, 2, 1e-6);
  REQUIRE(m.atoms.size() == 2);
  double lo = std::min(m.atoms[0][0], m.atoms[1][0]);
  double hi = std::max(m.atoms[0][0], m.atoms[1][0]);
  CHECK(lo == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m.weights[0] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("round trip on random atomic measures") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  int cases = 0;
  for (int n = 1; n <= 3; ++n) {
    for (int s = 1; s <= 3; ++s) {
      for (int rep = 0; rep < 6; ++rep) {
        std::vector<std::vector<double>> pts;
        std::vector<double> w;
        for (int k = 0; k < s; ++k) {
          std::vector<double> a(static_cast<size_t>(n));
          bool ok = true;
          do {
            ok = true;
            for (auto& v : a) v = u(rng);
            for (const auto& p : pts) {
              double d = 0;
              for (int i = 0; i < n; ++i)
                d = std::max(d, std::abs(p[static_cast<size_t>(i)] -
                                         a[static_cast<size_t>(i)]));
              if (d < 0.15) ok = false;
            }
          } while (!ok);
          pts.push_back(a);
          w.push_back(u(rng));
        }
        double sw = 0;
        for (double v : w) sw += v;
        for (double& v : w) v /= sw;
        // d - 1 must index at least s independent columns.
        int d = 2;
        while (moment::basis_size(n, d - 1) < s) ++d;
        auto y = moment::MomentVector::of_atoms(pts, w, n, 2 * d);
        auto t = atoms::flat_test(y, d, 1, 1e-6);
        REQUIRE(t.has_value());
        REQUIRE(*t == s);
        auto m = atoms::extract_atoms(y, d, s, 1e-6, 0);
        // Match extracted atoms to the originals.
        double hausdorff = 0, werr = 0;
        for (int k = 0; k < s; ++k) {
          double best = 1e18;
          int arg = -1;
          for (int j = 0; j < s; ++j) {
            double dd = 0;
            for (int i = 0; i < n; ++i)
              dd = std::max(dd, std::abs(pts[static_cast<size_t>(k)][static_cast<size_t>(i)] -
                                         m.atoms[static_cast<size_t>(j)][static_cast<size_t>(i)]));
            if (dd < best) {
              best = dd;
              arg = j;
            }
          }
          hausdorff = std::max(hausdorff, best);
          werr = std::max(werr, std::abs(w[static_cast<size_t>(k)] -
                                         m.weights[static_cast<size_t>(arg)]));
        }
        CHECK(hausdorff <= 1e-6);
        CHECK(werr <= 1e-6);
        ++cases;
      }
    }
  }
  CHECK(cases == 54);
}

TEST_CASE("failure on non-flat input") {
  // Lebesgue-type moments have full rank; a rank-1 extraction must refuse.
  moment::MomentVector leb(1, 4);
  leb.values() << 1.0, 0.5, 1.0 / 3, 0.25, 0.2;
  CHECK_THROWS_AS(atoms::extract_atoms(leb, 2, 1, 1e-6),
                  atoms::ExtractionError);
}

TEST_SUITE_END();
