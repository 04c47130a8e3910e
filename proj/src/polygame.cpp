#include "msos/polygame.hpp"

#include <cmath>
#include <future>
#include <sstream>

#include "relaxation.hpp"

namespace msos::polygame {

namespace {

poly::SemiAlgebraicSet maybe_add_ball(poly::SemiAlgebraicSet K,
                                      const std::optional<poly::Box>& box) {
  if (!box || K.ball_radius()) return K;
  for (const auto& g : K.constraints())
    if (!g.is_affine()) return K;
  double M = 0.0;
  for (int i = 0; i < K.nvars(); ++i)
    M += std::max(box->lo[static_cast<size_t>(i)] * box->lo[static_cast<size_t>(i)],
                  box->hi[static_cast<size_t>(i)] * box->hi[static_cast<size_t>(i)]);
  return poly::SemiAlgebraicSet(K.nvars(), K.constraints(), M);
}

int block_degree(const poly::Polynomial& p, int from, int count) {
  int d = 0;
  for (const auto& [m, c] : p.terms()) {
    int t = 0;
    for (int i = 0; i < count; ++i) t += m.exp(from + i);
    d = std::max(d, t);
  }
  return d;
}

}  // namespace

PolynomialGame::PolynomialGame(poly::SemiAlgebraicSet K1,
                               poly::SemiAlgebraicSet K2,
                               poly::Polynomial payoff,
                               std::optional<poly::Box> box1,
                               std::optional<poly::Box> box2,
                               Orientation orientation)
    : K1_(maybe_add_ball(std::move(K1), box1)),
      K2_(maybe_add_ball(std::move(K2), box2)),
      payoff_(std::move(payoff)),
      box1_(std::move(box1)),
      box2_(std::move(box2)),
      orientation_(orientation) {
  if (payoff_.nvars() != K1_.nvars() + K2_.nvars())
    throw Error("PolynomialGame: payoff must span both variable blocks");
  dx_ = block_degree(payoff_, 0, n1());
  dz_ = block_degree(payoff_, n1(), n2());
}

poly::Polynomial CoefficientSplit::reconstruct() const {
  poly::Polynomial p(n1 + n2);
  for (const auto& [alpha, pa] : by_z) {
    for (const auto& [beta, c] : pa.terms()) {
      std::vector<int> e(static_cast<size_t>(n1 + n2), 0);
      for (int i = 0; i < n1; ++i) e[static_cast<size_t>(i)] = beta.exp(i);
      for (int i = 0; i < n2; ++i) e[static_cast<size_t>(n1 + i)] = alpha.exp(i);
      p.add_term(poly::Monomial(std::move(e)), c);
    }
  }
  return p;
}

CoefficientSplit split_payoff(const poly::Polynomial& p, int n1, int n2) {
  if (p.nvars() != n1 + n2)
    throw Error("split_payoff: variable count mismatch");
  CoefficientSplit S;
  S.n1 = n1;
  S.n2 = n2;
  for (const auto& [m, c] : p.terms()) {
    std::vector<int> xb(static_cast<size_t>(n1)), zb(static_cast<size_t>(n2));
    for (int i = 0; i < n1; ++i) xb[static_cast<size_t>(i)] = m.exp(i);
    for (int i = 0; i < n2; ++i) zb[static_cast<size_t>(i)] = m.exp(n1 + i);
    poly::Monomial alpha(zb), beta(xb);
    auto [itz, createdz] = S.by_z.try_emplace(alpha, poly::Polynomial(n1));
    itz->second.add_term(beta, c);
    auto [itx, createdx] = S.by_x.try_emplace(beta, poly::Polynomial(n2));
    itx->second.add_term(alpha, c);
  }
  return S;
}

poly::Polynomial induced_polynomial(const CoefficientSplit& split,
                                    const moment::MomentVector& y, Side side) {
  if (side == Side::ZSide) {
    if (y.nvars() != split.n1)
      throw Error("induced_polynomial: moment vector must live on the x block");
    poly::Polynomial out(split.n2);
    for (const auto& [alpha, pa] : split.by_z) out.add_term(alpha, y.riesz(pa));
    return out;
  }
  if (y.nvars() != split.n2)
    throw Error("induced_polynomial: moment vector must live on the z block");
  poly::Polynomial out(split.n1);
  for (const auto& [beta, pz] : split.by_x) out.add_term(beta, y.riesz(pz));
  return out;
}

int starting_order(const PolynomialGame& g) {
  int d = 1;
  d = std::max(d, (g.degree_x() + 1) / 2);
  d = std::max(d, (g.degree_z() + 1) / 2);
  for (const auto& gj : g.K1().effective_constraints())
    d = std::max(d, (gj.degree() + 1) / 2);
  for (const auto& hk : g.K2().effective_constraints())
    d = std::max(d, (hk.degree() + 1) / 2);
  return d;
}

namespace {

// One side of the program pair: moments on Km at order d, an objective
// scalar, and Gram blocks certifying bound - induced polynomial on Kg.
BuiltSdp build_side(const poly::SemiAlgebraicSet& Km,
                    const poly::SemiAlgebraicSet& Kg,
                    const std::map<poly::Monomial, poly::Polynomial,
                                   poly::GrlexLess>& coef,
                    int d, bool minimize) {
  BuiltSdp B;
  B.d = d;
  const int nm = Km.nvars();
  const int ng = Kg.nvars();

  auto side = detail::build_moment_side(B.problem, nm,
                                        Km.effective_constraints(), d);
  B.ybasis = std::move(side.ybasis);
  B.y = std::move(side.y);
  B.moment_block = side.moment_block;
  int eq0 = B.problem.add_equality(1.0);
  B.problem.equality_add_term(
      eq0, B.y[static_cast<size_t>(B.ybasis.index_of(poly::Monomial(nm)))],
      1.0);

  B.objective_scalar = B.problem.add_scalar();

  // Gram blocks: sigma_0 over the degree-d basis plus one block per
  // constraint of the certificate set, degree-capped.
  std::vector<poly::Polynomial> hs = Kg.effective_constraints();
  std::vector<int> grams;
  std::vector<std::shared_ptr<const moment::BasisMatrixSet>> gsets;
  {
    auto B0 = moment::basis_matrices(poly::Polynomial::constant(ng, 1.0), d);
    grams.push_back(B.problem.add_free_psd_block(B0->row_basis().size()));
    gsets.push_back(B0);
  }
  for (const auto& h : hs) {
    int l = (h.degree() + 1) / 2;
    if (d - l < 0) throw Error("order-too-small: certificate block empty");
    auto Bh = moment::basis_matrices(h, d - l);
    grams.push_back(B.problem.add_free_psd_block(Bh->row_basis().size()));
    gsets.push_back(Bh);
  }

  // Coefficient matching over every monomial of the certificate block:
  //   bound*[alpha=0] - L_y(p_alpha) = <Z0, B_alpha> + sum_k <Zk, B^h_alpha>
  // rearranged to zero. `sign` carries min (lambda, upper bound) versus max
  // (gamma, lower bound) orientation.
  moment::MonomialBasis alphas(ng, 2 * d);
  double sign = minimize ? 1.0 : -1.0;
  for (int a = 0; a < alphas.size(); ++a) {
    const auto& alpha = alphas.at(a);
    int eq = B.problem.add_equality(0.0);
    if (alpha.degree() == 0)
      B.problem.equality_add_term(eq, B.objective_scalar, sign);
    auto itc = coef.find(alpha);
    if (itc != coef.end())
      for (const auto& [beta, c] : itc->second.terms())
        B.problem.equality_add_term(
            eq, B.y[static_cast<size_t>(B.ybasis.index_of(beta))], -sign * c);
    for (size_t k = 0; k < grams.size(); ++k) {
      auto idx = gsets[k]->alpha_basis().find(alpha);
      if (!idx) continue;
      const auto& mat = gsets[k]->matrix(*idx);
      if (mat.empty()) continue;
      B.problem.equality_add_block_term(eq, static_cast<int>(k),
                                        -gsets[k]->dense(*idx));
    }
  }
  B.problem.set_objective(minimize ? sdp::Sense::Min : sdp::Sense::Max,
                          {{B.objective_scalar, 1.0}});
  return B;
}

}  // namespace

BuiltSdp build_primal(const PolynomialGame& g, int d) {
  if (d < starting_order(g))
    throw Error("order-too-small: d below the starting order");
  auto split = split_payoff(g.payoff(), g.n1(), g.n2());
  return build_side(g.K1(), g.K2(), split.by_z, d, /*minimize=*/true);
}

BuiltSdp build_dual(const PolynomialGame& g, int d) {
  if (d < starting_order(g))
    throw Error("order-too-small: d below the starting order");
  auto split = split_payoff(g.payoff(), g.n1(), g.n2());
  return build_side(g.K2(), g.K1(), split.by_x, d, /*minimize=*/false);
}

bool GameSolveReport::any_solved() const {
  for (const auto& o : orders)
    if (o.primal_usable && o.dual_usable) return true;
  return false;
}

GameSolveReport solve_game(const PolynomialGame& g, const GameOptions& opts) {
  const bool flip = g.orientation() == Orientation::MaxMin;
  PolynomialGame inner =
      flip ? PolynomialGame(g.K1(), g.K2(), -g.payoff(), g.box1(), g.box2(),
                            Orientation::MinMax)
           : g;

  GameSolveReport rep;
  rep.solved_payoff = inner.payoff();
  rep.d0 = starting_order(inner);
  const int d_max = opts.d_max > 0 ? opts.d_max : rep.d0 + 2;
  if (d_max < rep.d0) throw Error("order-too-small: d_max below d0");

  auto split = split_payoff(inner.payoff(), inner.n1(), inner.n2());

  int r1 = 1, r2 = 1;
  for (const auto& gj : inner.K1().effective_constraints())
    r1 = std::max(r1, (gj.degree() + 1) / 2);
  for (const auto& hk : inner.K2().effective_constraints())
    r2 = std::max(r2, (hk.degree() + 1) / 2);

  sdp::Options so;
  so.tol = opts.tol;
  so.max_iter = opts.max_iter;
  so.verbose = opts.verbose;

  for (int d = rep.d0; d <= d_max; ++d) {
    OrderRecord rec;
    rec.d = d;

    BuiltSdp P = build_primal(inner, d);
    BuiltSdp D = build_dual(inner, d);
    sdp::Report rp, rd;
    if (opts.concurrent) {
      auto fut = std::async(std::launch::async,
                            [&] { return sdp::solve(P.problem, so); });
      rd = sdp::solve(D.problem, so);
      rp = fut.get();
    } else {
      rp = sdp::solve(P.problem, so);
      rd = sdp::solve(D.problem, so);
    }
    auto usable = [](const sdp::Report& r) {
      return r.status == sdp::Status::Optimal ||
             (r.status == sdp::Status::MaxIterations && r.gap <= 1e-5 &&
              r.primal_residual <= 1e-5);
    };
    rec.primal_status = rp.status;
    rec.dual_status = rd.status;
    rec.primal_gap = rp.gap;
    rec.dual_gap = rd.gap;
    rec.primal_usable = usable(rp);
    rec.dual_usable = usable(rd);
    if (rec.primal_usable) rec.lambda = rp.value;
    if (rec.dual_usable) rec.gamma = rd.value;

    moment::MomentVector y1, y2;
    if (rec.primal_usable) {
      y1 = moment::MomentVector(inner.n1(), 2 * d);
      for (int i = 0; i < P.ybasis.size(); ++i)
        y1.values()(i) = rp.scalars(P.y[static_cast<size_t>(i)]);
      rep.y1 = y1;
      rep.p_y = induced_polynomial(split, y1, Side::ZSide);
      rep.lambda = rec.lambda;
      try {
        auto t = atoms::flat_test(y1, d, r1, opts.rank_tol);
        if (t) {
          rec.primal_flat = true;
          rec.s1 = *t;
        }
      } catch (const std::invalid_argument&) {
      }
    }
    if (rec.dual_usable) {
      y2 = moment::MomentVector(inner.n2(), 2 * d);
      for (int i = 0; i < D.ybasis.size(); ++i)
        y2.values()(i) = rd.scalars(D.y[static_cast<size_t>(i)]);
      rep.y2 = y2;
      rep.p_hat = induced_polynomial(split, y2, Side::XSide);
      rep.gamma = rec.gamma;
      try {
        auto t = atoms::flat_test(y2, d, r2, opts.rank_tol);
        if (t) {
          rec.dual_flat = true;
          rec.s2 = *t;
        }
      } catch (const std::invalid_argument&) {
      }
    }
    rep.d_used = d;

    if (rec.primal_usable && rec.dual_usable) {
      double band =
          std::max(1e-6, 10 * std::max(rec.primal_gap, rec.dual_gap) *
                             std::max(1.0, std::abs(rec.lambda)));
      if (std::abs(rec.lambda - rec.gamma) <= band && rec.primal_flat &&
          rec.dual_flat) {
        try {
          auto mu = atoms::extract_atoms(y1, d, rec.s1, opts.rank_tol,
                                         opts.seed);
          auto nu = atoms::extract_atoms(y2, d, rec.s2, opts.rank_tol,
                                         opts.seed + 1);
          bool inside = true;
          for (const auto& at : mu.atoms)
            if (!inner.K1().contains(at, 1e-5)) inside = false;
          for (const auto& at : nu.atoms)
            if (!inner.K2().contains(at, 1e-5)) inside = false;
          if (inside) {
            rec.certified = true;
            rep.certified = true;
            rep.mu = std::move(mu);
            rep.nu = std::move(nu);
          } else {
            rep.message += "extracted strategy left its set; ";
          }
        } catch (const atoms::ExtractionError& e) {
          rep.message += std::string(e.what()) + "; ";
        }
      }
    } else {
      rep.message += "order " + std::to_string(d) + ": primal " +
                     sdp::status_name(rp.status) + ", dual " +
                     sdp::status_name(rd.status) + "; ";
    }
    rep.orders.push_back(rec);
    if (rep.certified) break;
  }

  if (!std::isnan(rep.lambda) && !std::isnan(rep.gamma)) {
    double inner_value = 0.5 * (rep.lambda + rep.gamma);
    rep.value = flip ? -inner_value : inner_value;
  } else if (!std::isnan(rep.lambda)) {
    rep.value = flip ? -rep.lambda : rep.lambda;
  } else if (!std::isnan(rep.gamma)) {
    rep.value = flip ? -rep.gamma : rep.gamma;
  }
  return rep;
}

}  // namespace msos::polygame
