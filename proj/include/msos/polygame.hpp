// Zero-sum polynomial games on compact basic semi-algebraic strategy sets:
// the mixed moment/sum-of-squares program pair at each order, the double
// rank test for finite convergence, and extraction of atomic optimal
// strategies.
#pragma once

#include <map>
#include <optional>

#include "msos/atoms.hpp"
#include "msos/moment.hpp"
#include "msos/poly.hpp"
#include "msos/sdp.hpp"

namespace msos::polygame {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Orientation { MinMax, MaxMin };  // player 1 minimizes / maximizes

class PolynomialGame {
 public:
  // Payoff over n1 + n2 variables, player 1's block first. When a box is
  // supplied and a set is described by affine rows only, a redundant ball
  // row is appended so the moment relaxations stay bounded.
  PolynomialGame(poly::SemiAlgebraicSet K1, poly::SemiAlgebraicSet K2,
                 poly::Polynomial payoff,
                 std::optional<poly::Box> box1 = std::nullopt,
                 std::optional<poly::Box> box2 = std::nullopt,
                 Orientation orientation = Orientation::MinMax);

  const poly::SemiAlgebraicSet& K1() const { return K1_; }
  const poly::SemiAlgebraicSet& K2() const { return K2_; }
  const poly::Polynomial& payoff() const { return payoff_; }
  const std::optional<poly::Box>& box1() const { return box1_; }
  const std::optional<poly::Box>& box2() const { return box2_; }
  Orientation orientation() const { return orientation_; }
  int n1() const { return K1_.nvars(); }
  int n2() const { return K2_.nvars(); }
  int degree_x() const { return dx_; }
  int degree_z() const { return dz_; }

 private:
  poly::SemiAlgebraicSet K1_, K2_;
  poly::Polynomial payoff_;
  std::optional<poly::Box> box1_, box2_;
  Orientation orientation_;
  int dx_ = 0, dz_ = 0;
};

// Payoff split by opposite-block exponents: by_z maps a z-monomial to its
// x-coefficient polynomial, by_x the mirror image.
struct CoefficientSplit {
  int n1 = 0, n2 = 0;
  std::map<poly::Monomial, poly::Polynomial, poly::GrlexLess> by_z;
  std::map<poly::Monomial, poly::Polynomial, poly::GrlexLess> by_x;

  poly::Polynomial reconstruct() const;
};

CoefficientSplit split_payoff(const poly::Polynomial& p, int n1, int n2);

enum class Side { ZSide, XSide };

// p_y(z) = sum_alpha L_y(p_alpha) z^alpha for a moment vector on the x
// block (ZSide), and the mirrored form for the z block (XSide).
poly::Polynomial induced_polynomial(const CoefficientSplit& split,
                                    const moment::MomentVector& y, Side side);

// Smallest order with every block of the program pair well-formed.
int starting_order(const PolynomialGame& g);

struct BuiltSdp {
  sdp::Problem problem;
  moment::MonomialBasis ybasis;
  std::vector<int> y;
  int objective_scalar = -1;  // lambda or gamma
  int moment_block = -1;
  int d = 0;
};

BuiltSdp build_primal(const PolynomialGame& g, int d);
BuiltSdp build_dual(const PolynomialGame& g, int d);

struct GameOptions {
  int d_max = 0;  // 0 selects d0 + 2
  double tol = 1e-8;
  double rank_tol = 1e-6;
  std::uint64_t seed = 0;
  int max_iter = 200;
  bool verbose = false;
  bool concurrent = false;  // primal and dual of one order in parallel
};

struct OrderRecord {
  int d = 0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  sdp::Status primal_status = sdp::Status::NumericalFailure;
  sdp::Status dual_status = sdp::Status::NumericalFailure;
  double primal_gap = 0, dual_gap = 0;
  int s1 = -1, s2 = -1;
  bool primal_flat = false, dual_flat = false;
  bool primal_usable = false, dual_usable = false;
  bool certified = false;
};

struct GameSolveReport {
  std::vector<OrderRecord> orders;
  double value = std::numeric_limits<double>::quiet_NaN();  // in the game's orientation
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
  std::optional<atoms::AtomicMeasure> mu;  // player 1 strategy on K1
  std::optional<atoms::AtomicMeasure> nu;  // player 2 strategy on K2
  std::optional<moment::MomentVector> y1, y2;
  // Induced polynomials of the final iterates, for soundness audits; both
  // refer to the internally solved min-max payoff.
  std::optional<poly::Polynomial> p_y;    // in z
  std::optional<poly::Polynomial> p_hat;  // in x
  poly::Polynomial solved_payoff;
  int d0 = 0;
  int d_used = 0;
  std::string message;

  bool any_solved() const;
};

GameSolveReport solve_game(const PolynomialGame& g, const GameOptions& opts = {});

}  // namespace msos::polygame
