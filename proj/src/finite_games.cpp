#include "msos/finite_games.hpp"

#include <cmath>
#include <numeric>

namespace msos::games {

FiniteGame::FiniteGame(std::vector<int> actions,
                       std::vector<std::vector<double>> payoffs)
    : actions_(std::move(actions)), payoffs_(std::move(payoffs)) {
  if (actions_.empty()) throw Error("FiniteGame: no players");
  for (int a : actions_)
    if (a <= 0) throw Error("FiniteGame: nonpositive action count");
  if (static_cast<int>(payoffs_.size()) != players())
    throw Error("FiniteGame: one payoff tensor per player required");
  for (const auto& t : payoffs_)
    if (static_cast<int>(t.size()) != profile_count())
      throw Error("FiniteGame: payoff tensor size mismatch");
}

int FiniteGame::profile_count() const {
  int n = 1;
  for (int a : actions_) n *= a;
  return n;
}

int FiniteGame::flat_index(const std::vector<int>& s) const {
  if (static_cast<int>(s.size()) != players())
    throw Error("FiniteGame: profile length mismatch");
  int idx = 0;
  for (int i = 0; i < players(); ++i) {
    if (s[static_cast<size_t>(i)] < 0 ||
        s[static_cast<size_t>(i)] >= actions_[static_cast<size_t>(i)])
      throw Error("FiniteGame: action out of range");
    idx = idx * actions_[static_cast<size_t>(i)] + s[static_cast<size_t>(i)];
  }
  return idx;
}

double FiniteGame::entry(int player, const std::vector<int>& s) const {
  return payoffs_.at(static_cast<size_t>(player))[static_cast<size_t>(flat_index(s))];
}

void validate_profile(const FiniteGame& g, const MixedProfile& prof,
                      double tol) {
  if (static_cast<int>(prof.p.size()) != g.players())
    throw Error("profile: player count mismatch");
  for (int i = 0; i < g.players(); ++i) {
    const auto& pi = prof.p[static_cast<size_t>(i)];
    if (static_cast<int>(pi.size()) != g.actions()[static_cast<size_t>(i)])
      throw Error("profile: action count mismatch");
    double s = 0;
    for (double v : pi) {
      if (v < -tol) throw Error("profile: negative probability");
      s += v;
    }
    if (std::abs(s - 1.0) > tol)
      throw Error("invariant-violation: probabilities sum to " +
                  std::to_string(s));
  }
}

double multilinear_eval(const FiniteGame& g, int player,
                        const MixedProfile& prof) {
  validate_profile(g, prof);
  const int N = g.players();
  std::vector<int> s(static_cast<size_t>(N), 0);
  double acc = 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < N; ++i)
      w *= prof.p[static_cast<size_t>(i)][static_cast<size_t>(s[static_cast<size_t>(i)])];
    if (w != 0.0) acc += w * g.entry(player, s);
    int k = N - 1;
    while (k >= 0 && ++s[static_cast<size_t>(k)] == g.actions()[static_cast<size_t>(k)])
      s[static_cast<size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return acc;
}

VarLayout strategy_layout(const FiniteGame& g) {
  VarLayout L;
  for (int i = 0; i < g.players(); ++i) {
    L.offset.push_back(L.total);
    L.total += g.actions()[static_cast<size_t>(i)];
  }
  return L;
}

poly::Polynomial extension_polynomial(const FiniteGame& g, int player,
                                      const VarLayout& layout,
                                      int fixed_player, int fixed_action) {
  poly::Polynomial out(layout.total);
  const int N = g.players();
  std::vector<int> s(static_cast<size_t>(N), 0);
  while (true) {
    bool keep = fixed_player < 0 ||
                s[static_cast<size_t>(fixed_player)] == fixed_action;
    if (keep) {
      double coef = g.entry(player, s);
      if (coef != 0.0) {
        std::vector<int> exps(static_cast<size_t>(layout.total), 0);
        for (int i = 0; i < N; ++i) {
          if (i == fixed_player) continue;
          exps[static_cast<size_t>(layout.var(i, s[static_cast<size_t>(i)]))] += 1;
        }
        out.add_term(poly::Monomial(std::move(exps)), coef);
      }
    }
    int k = N - 1;
    while (k >= 0 && ++s[static_cast<size_t>(k)] == g.actions()[static_cast<size_t>(k)])
      s[static_cast<size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return out;
}

namespace {

// Simplex product: nonnegativity plus a sum-to-one inequality pair per
// player. The pair is detected downstream and folded into exact moment
// substitutions.
poly::SemiAlgebraicSet simplex_product(const FiniteGame& g,
                                       const VarLayout& layout) {
  std::vector<poly::Polynomial> cons;
  for (int v = 0; v < layout.total; ++v)
    cons.push_back(poly::Polynomial::variable(layout.total, v));
  for (int i = 0; i < g.players(); ++i) {
    poly::Polynomial sum(layout.total);
    for (int a = 0; a < g.actions()[static_cast<size_t>(i)]; ++a)
      sum = sum + poly::Polynomial::variable(layout.total, layout.var(i, a));
    poly::Polynomial one = poly::Polynomial::constant(layout.total, 1.0);
    cons.push_back(one - sum);
    cons.push_back(sum - one);
  }
  return poly::SemiAlgebraicSet(layout.total, std::move(cons));
}

poly::Box unit_box(int n) {
  poly::Box b;
  b.lo.assign(static_cast<size_t>(n), 0.0);
  b.hi.assign(static_cast<size_t>(n), 1.0);
  return b;
}

double payoff_scale(const FiniteGame& g, int player) {
  double m = 0.0;
  for (double v : g.payoff(player)) m = std::max(m, std::abs(v));
  return std::max(m, 1e-12);
}

}  // namespace

mrf::MrfProblem nash_mrf(const FiniteGame& g) {
  VarLayout layout = strategy_layout(g);
  std::vector<poly::RationalFunction> branches;
  double range = 0.0;
  for (int i = 0; i < g.players(); ++i) {
    double s = payoff_scale(g, i);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : g.payoff(i)) {
      lo = std::min(lo, v / s);
      hi = std::max(hi, v / s);
    }
    range = std::max(range, hi - lo);
    poly::Polynomial gi = extension_polynomial(g, i, layout);
    for (int a = 0; a < g.actions()[static_cast<size_t>(i)]; ++a) {
      poly::Polynomial dev = extension_polynomial(g, i, layout, i, a);
      branches.emplace_back((dev - gi).scaled(1.0 / s));
    }
  }
  // Branch values live within the per-player payoff range over pure
  // profiles (multilinear extensions attain extremes at vertices).
  return mrf::MrfProblem(simplex_product(g, layout),
                         poly::RationalFunction(poly::Polynomial(layout.total)),
                         std::move(branches), unit_box(layout.total),
                         mrf::Bounds{range, -range});
}

MinmaxReduction minmax_mrf(const FiniteGame& g, int player) {
  if (g.players() < 2) throw Error("minmax_mrf: at least two players required");
  // Opponents' strategies only; player i's action becomes the branch index.
  std::vector<int> opp_actions;
  std::vector<int> opp_of;  // opponent slot per original player (-1 for i)
  for (int i = 0; i < g.players(); ++i) {
    if (i == player) {
      opp_of.push_back(-1);
      continue;
    }
    opp_of.push_back(static_cast<int>(opp_actions.size()));
    opp_actions.push_back(g.actions()[static_cast<size_t>(i)]);
  }
  VarLayout layout;
  for (int a : opp_actions) {
    layout.offset.push_back(layout.total);
    layout.total += a;
  }

  double mx = -std::numeric_limits<double>::infinity();
  double mn = std::numeric_limits<double>::infinity();
  for (double v : g.payoff(player)) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  double shift = 0.5 * (mx + mn);
  double scale = std::max(0.5 * (mx - mn), 1e-12);

  std::vector<poly::RationalFunction> branches;
  for (int a = 0; a < g.actions()[static_cast<size_t>(player)]; ++a) {
    poly::Polynomial br(layout.total);
    std::vector<int> s(static_cast<size_t>(g.players()), 0);
    s[static_cast<size_t>(player)] = a;
    // Enumerate opponents' pure profiles.
    std::vector<int> t(opp_actions.size(), 0);
    bool done = false;
    while (!done) {
      for (int i = 0; i < g.players(); ++i)
        if (i != player)
          s[static_cast<size_t>(i)] = t[static_cast<size_t>(opp_of[static_cast<size_t>(i)])];
      double coef = (g.entry(player, s) - shift) / scale;
      if (coef != 0.0) {
        std::vector<int> exps(static_cast<size_t>(layout.total), 0);
        for (size_t j = 0; j < t.size(); ++j)
          exps[static_cast<size_t>(layout.offset[j] + t[j])] += 1;
        br.add_term(poly::Monomial(std::move(exps)), coef);
      }
      size_t k = t.size();
      while (k > 0 && ++t[k - 1] == opp_actions[k - 1]) t[--k] = 0;
      if (k == 0) done = true;
    }
    branches.emplace_back(std::move(br));
  }

  // Simplex product over the opponents.
  std::vector<poly::Polynomial> cons;
  for (int v = 0; v < layout.total; ++v)
    cons.push_back(poly::Polynomial::variable(layout.total, v));
  for (size_t j = 0; j < opp_actions.size(); ++j) {
    poly::Polynomial sum(layout.total);
    for (int a = 0; a < opp_actions[j]; ++a)
      sum = sum + poly::Polynomial::variable(
                      layout.total, layout.offset[j] + a);
    poly::Polynomial one = poly::Polynomial::constant(layout.total, 1.0);
    cons.push_back(one - sum);
    cons.push_back(sum - one);
  }

  MinmaxReduction red{
      mrf::MrfProblem(poly::SemiAlgebraicSet(layout.total, std::move(cons)),
                      poly::RationalFunction(poly::Polynomial(layout.total)),
                      std::move(branches), unit_box(layout.total),
                      mrf::Bounds{1.0, -1.0}),
      player, scale, shift};
  return red;
}

LoomisGame::LoomisGame(FiniteGame g_in, FiniteGame f_in)
    : g(std::move(g_in)), f(std::move(f_in)) {
  if (g.actions() != f.actions())
    throw Error("LoomisGame: g and f shapes differ");
  for (int i = 0; i < f.players(); ++i)
    for (double v : f.payoff(i))
      if (v <= 0) throw Error("invariant-violation: Loomis f must be positive");
}

mrf::MrfProblem loomis_mrf(const LoomisGame& L) {
  const FiniteGame& G = L.g;
  VarLayout layout = strategy_layout(G);
  std::vector<poly::RationalFunction> branches;
  double range = 0.0;
  for (int i = 0; i < G.players(); ++i) {
    // The ratio payoff attains its extremes at pure profiles, which bounds
    // every deviation branch.
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (size_t s = 0; s < G.payoff(i).size(); ++s) {
      double h = G.payoff(i)[s] / L.f.payoff(i)[s];
      lo = std::min(lo, h);
      hi = std::max(hi, h);
    }
    double kappa = L.f.payoff(i)[0];
    bool const_f = true;
    for (double v : L.f.payoff(i))
      if (v != kappa) const_f = false;
    if (const_f) {
      // Constant denominator: the game is the Nash reduction of g / kappa.
      double s = payoff_scale(G, i);
      range = std::max(range, (hi - lo) * kappa / s);
      poly::Polynomial gi = extension_polynomial(G, i, layout);
      for (int a = 0; a < G.actions()[static_cast<size_t>(i)]; ++a) {
        poly::Polynomial dev = extension_polynomial(G, i, layout, i, a);
        branches.emplace_back((dev - gi).scaled(1.0 / s));
      }
      continue;
    }
    double sg = payoff_scale(G, i);
    double sf = payoff_scale(L.f, i);
    range = std::max(range, (hi - lo) * sf / sg);
    poly::Polynomial gi = extension_polynomial(G, i, layout).scaled(1.0 / sg);
    poly::Polynomial fi = extension_polynomial(L.f, i, layout).scaled(1.0 / sf);
    for (int a = 0; a < G.actions()[static_cast<size_t>(i)]; ++a) {
      poly::Polynomial gdev =
          extension_polynomial(G, i, layout, i, a).scaled(1.0 / sg);
      poly::Polynomial fdev =
          extension_polynomial(L.f, i, layout, i, a).scaled(1.0 / sf);
      // h(a, p^-i) - h(p) over the common positive denominator. The scale
      // factor sg/sf of the ratio cancels in the branch sign structure.
      branches.emplace_back(gdev * fi - gi * fdev, fdev * fi);
    }
  }
  return mrf::MrfProblem(simplex_product(G, layout),
                         poly::RationalFunction(poly::Polynomial(layout.total)),
                         std::move(branches), unit_box(layout.total),
                         mrf::Bounds{range, -range});
}

FiniteAbsorbingGame::FiniteAbsorbingGame(FiniteGame g_in, FiniteGame f_in,
                                         std::vector<double> q_in,
                                         double lambda_in)
    : g(std::move(g_in)), f(std::move(f_in)), q(std::move(q_in)),
      lambda(lambda_in) {
  if (g.actions() != f.actions())
    throw Error("FiniteAbsorbingGame: g and f shapes differ");
  if (static_cast<int>(q.size()) != g.profile_count())
    throw Error("FiniteAbsorbingGame: q size mismatch");
  for (double v : q)
    if (v < 0.0 || v > 1.0)
      throw Error("invariant-violation: q must lie in [0, 1]");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw Error("invariant-violation: lambda must lie in (0, 1)");
}

LoomisGame absorbing_to_loomis(const FiniteAbsorbingGame& A) {
  const int N = A.g.players();
  std::vector<std::vector<double>> num(static_cast<size_t>(N));
  std::vector<std::vector<double>> den(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    const auto& gi = A.g.payoff(i);
    const auto& fi = A.f.payoff(i);
    for (size_t s = 0; s < A.q.size(); ++s) {
      double gt = gi[s] * A.q[s];
      double ft = fi[s] * (1.0 - A.q[s]);
      num[static_cast<size_t>(i)].push_back(A.lambda * gt +
                                            (1.0 - A.lambda) * ft);
      den[static_cast<size_t>(i)].push_back(A.lambda * A.q[s] +
                                            (1.0 - A.q[s]));
    }
  }
  return LoomisGame(FiniteGame(A.g.actions(), std::move(num)),
                    FiniteGame(A.g.actions(), std::move(den)));
}

double best_response_residual(const FiniteGame& g, const MixedProfile& prof) {
  double worst = 0.0;
  for (int i = 0; i < g.players(); ++i) {
    double base = multilinear_eval(g, i, prof);
    for (int a = 0; a < g.actions()[static_cast<size_t>(i)]; ++a) {
      MixedProfile dev = prof;
      std::fill(dev.p[static_cast<size_t>(i)].begin(),
                dev.p[static_cast<size_t>(i)].end(), 0.0);
      dev.p[static_cast<size_t>(i)][static_cast<size_t>(a)] = 1.0;
      worst = std::max(worst, multilinear_eval(g, i, dev) - base);
    }
  }
  return worst;
}

}  // namespace msos::games
