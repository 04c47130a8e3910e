// Zero-sum polynomial absorbing games with discounting: the auxiliary
// one-shot payoff P - tQ, its game value s(t), and the value search on the
// unique root of s.
#pragma once

#include <optional>

#include "msos/polygame.hpp"

namespace msos::absorbing {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class PolynomialAbsorbingGame {
 public:
  // g: stage payoff, f: absorption payoff, q: continuation probability
  // (range [0, 1] on K1 x K2, checked on samples when boxes are given),
  // lambda: discount in (0, 1). Player 1 maximizes.
  PolynomialAbsorbingGame(poly::SemiAlgebraicSet K1, poly::SemiAlgebraicSet K2,
                          poly::Polynomial g, poly::Polynomial f,
                          poly::Polynomial q, double lambda,
                          std::optional<poly::Box> box1 = std::nullopt,
                          std::optional<poly::Box> box2 = std::nullopt);

  const poly::SemiAlgebraicSet& K1() const { return K1_; }
  const poly::SemiAlgebraicSet& K2() const { return K2_; }
  const poly::Polynomial& g() const { return g_; }
  const poly::Polynomial& f() const { return f_; }
  const poly::Polynomial& q() const { return q_; }
  double lambda() const { return lambda_; }
  const std::optional<poly::Box>& box1() const { return box1_; }
  const std::optional<poly::Box>& box2() const { return box2_; }

  // P = lambda g q + (1 - lambda) f (1 - q), Q = lambda q + (1 - q).
  poly::Polynomial weighted_payoff() const;
  poly::Polynomial weight() const;

 private:
  poly::SemiAlgebraicSet K1_, K2_;
  poly::Polynomial g_, f_, q_;
  double lambda_;
  std::optional<poly::Box> box1_, box2_;
};

// One-shot zero-sum game with payoff P - t Q; player 1 maximizes.
polygame::PolynomialGame auxiliary_game(const PolynomialAbsorbingGame& A,
                                        double t);

struct SearchOptions {
  std::optional<double> t_lo, t_hi;  // default bracket from box samples
  double s_tol = 1e-5;
  int max_bisect = 60;
  polygame::GameOptions game;
};

// Value of the auxiliary game at t.
double s_of_t(const PolynomialAbsorbingGame& A, double t,
              const polygame::GameOptions& opts = {},
              polygame::GameSolveReport* report = nullptr);

struct ValueSearchTrace {
  struct Eval {
    double t = 0.0;
    double s = 0.0;
    polygame::GameSolveReport report;
  };
  std::vector<Eval> evals;
  double t_lo = 0.0, t_hi = 0.0;
  double value = 0.0;  // discounted value estimate
  bool converged = false;
  int bisections = 0;
  std::string message;
};

// Bisection on the strictly decreasing s; requires s(t_lo) >= 0 >= s(t_hi).
ValueSearchTrace value_search(const PolynomialAbsorbingGame& A,
                              const SearchOptions& opts = {});

}  // namespace msos::absorbing
