// Finite N-player games and their reductions to rational min-max problems:
// Nash equilibria, min-max punishment levels, Loomis ratio games, and
// discounted absorbing games through the Loomis form.
#pragma once

#include <vector>

#include "msos/mrf.hpp"
#include "msos/poly.hpp"

namespace msos::games {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Payoff tensors stored flat, row-major by action order: the last player's
// action index varies fastest.
class FiniteGame {
 public:
  FiniteGame() = default;
  FiniteGame(std::vector<int> actions,
             std::vector<std::vector<double>> payoffs);

  int players() const { return static_cast<int>(actions_.size()); }
  const std::vector<int>& actions() const { return actions_; }
  const std::vector<double>& payoff(int player) const {
    return payoffs_.at(static_cast<size_t>(player));
  }
  int profile_count() const;
  int flat_index(const std::vector<int>& s) const;
  double entry(int player, const std::vector<int>& s) const;

 private:
  std::vector<int> actions_;
  std::vector<std::vector<double>> payoffs_;
};

struct MixedProfile {
  std::vector<std::vector<double>> p;  // one distribution per player
};

void validate_profile(const FiniteGame& g, const MixedProfile& prof,
                      double tol = 1e-9);

// Expected payoff of `player` under the product distribution.
double multilinear_eval(const FiniteGame& g, int player,
                        const MixedProfile& prof);

// Strategy-variable layout shared by all reductions: the probabilities of
// every player concatenated, player by player.
struct VarLayout {
  std::vector<int> offset;  // per player
  int total = 0;
  int var(int player, int action) const {
    return offset.at(static_cast<size_t>(player)) + action;
  }
};
VarLayout strategy_layout(const FiniteGame& g);

// Multilinear extension of g^player as a polynomial over the layout
// variables, optionally with one player's action fixed.
poly::Polynomial extension_polynomial(const FiniteGame& g, int player,
                                      const VarLayout& layout,
                                      int fixed_player = -1,
                                      int fixed_action = -1);

// Nash equilibria as the zero set of min over the simplex product of
// max_(i, a) [g^i(a, p^-i) - g^i(p)]. Payoffs are rescaled per player so
// every branch has unit coefficient scale; the optimal value stays zero and
// the equilibrium set is unchanged.
mrf::MrfProblem nash_mrf(const FiniteGame& g);

// Min-max punishment level of one player. The reported problem is affinely
// normalized; recover() maps its value back to the original payoff scale.
struct MinmaxReduction {
  mrf::MrfProblem problem;
  int player = 0;
  double scale = 1.0, shift = 0.0;
  double recover(double normalized_value) const {
    return scale * normalized_value + shift;
  }
};
MinmaxReduction minmax_mrf(const FiniteGame& g, int player);

// Ratio game: payoffs g^i / f^i with f^i > 0 entrywise.
struct LoomisGame {
  FiniteGame g;
  FiniteGame f;

  LoomisGame(FiniteGame g_in, FiniteGame f_in);
};

mrf::MrfProblem loomis_mrf(const LoomisGame& L);

// Discounted absorbing game: with probability 1 - q(s) play stops and f is
// paid forever.
struct FiniteAbsorbingGame {
  FiniteGame g;
  FiniteGame f;
  std::vector<double> q;  // absorption complement per profile, in [0, 1]
  double lambda = 0.5;    // discount in (0, 1)

  FiniteAbsorbingGame(FiniteGame g_in, FiniteGame f_in, std::vector<double> q_in,
                      double lambda_in);
};

// Stationary equilibria of the absorbing game are the Nash equilibria of
// this ratio game.
LoomisGame absorbing_to_loomis(const FiniteAbsorbingGame& A);

// Equilibrium audit: largest pure-deviation gain over all players.
double best_response_residual(const FiniteGame& g, const MixedProfile& prof);

}  // namespace msos::games
