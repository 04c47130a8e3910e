#include "msos/mrf.hpp"

#include <cmath>
#include <future>
#include <random>
#include <sstream>

#include "relaxation.hpp"

namespace msos::mrf {

namespace {

poly::Box default_box(const MrfProblem& prob) {
  if (prob.box()) return *prob.box();
  if (prob.K().ball_radius()) {
    double r = std::sqrt(*prob.K().ball_radius());
    poly::Box b;
    b.lo.assign(static_cast<size_t>(prob.nx()), -r);
    b.hi.assign(static_cast<size_t>(prob.nx()), r);
    return b;
  }
  throw Error("unbounded-box: a bounding box is required for this operation");
}

}  // namespace

MrfProblem::MrfProblem(poly::SemiAlgebraicSet K, poly::RationalFunction f0,
                       std::vector<poly::RationalFunction> branches,
                       std::optional<poly::Box> box,
                       std::optional<Bounds> bounds)
    : K_(std::move(K)),
      f0_(std::move(f0)),
      branches_(std::move(branches)),
      box_(std::move(box)),
      bounds_(bounds) {
  if (f0_.nvars() != K_.nvars())
    throw std::invalid_argument("MrfProblem: f0 nvars mismatch");
  for (const auto& b : branches_)
    if (b.nvars() != K_.nvars())
      throw std::invalid_argument("MrfProblem: branch nvars mismatch");
  if (box_ && box_->nvars() != K_.nvars())
    throw std::invalid_argument("MrfProblem: box dimension mismatch");

  auto check_den = [&](const poly::Polynomial& q, const char* what) {
    if (q.is_constant()) {
      if (q.constant_term() <= 0)
        throw Error(std::string("nonpositive-denominator: ") + what);
      return;
    }
    poly::Box b = default_box(*this);
    auto rep = poly::verify_positive_samples(q, K_, b);
    if (!rep.positive) {
      std::ostringstream os;
      os << "nonpositive-denominator: " << what << " reaches " << rep.min_value
         << " on a sampled point of K";
      throw Error(os.str());
    }
  };
  check_den(f0_.den(), "denominator of f0");
  for (size_t i = 0; i < branches_.size(); ++i) {
    std::ostringstream os;
    os << "denominator of branch " << i + 1;
    check_den(branches_[i].den(), os.str().c_str());
  }
}

double MrfProblem::objective_at(std::span<const double> x) const {
  double v = f0_.eval(x);
  if (branches_.empty()) return v;
  double mx = branches_.front().eval(x);
  for (size_t i = 1; i < branches_.size(); ++i)
    mx = std::max(mx, branches_[i].eval(x));
  return v + mx;
}

Bounds compute_bounds(const MrfProblem& prob, BoundMode mode,
                      std::optional<Bounds> user) {
  if (prob.branches().empty())
    throw std::invalid_argument("compute_bounds: problem has no branches");
  if (mode == BoundMode::Auto) {
    if (user || prob.user_bounds()) mode = BoundMode::User;
    else if (prob.box()) mode = BoundMode::Interval;
    else mode = BoundMode::Relaxation;
  }
  if (mode == BoundMode::User) {
    if (user) return *user;
    if (prob.user_bounds()) return *prob.user_bounds();
    throw Error("user bound mode selected but no bounds supplied");
  }

  double M1 = -std::numeric_limits<double>::infinity();
  double M2 = std::numeric_limits<double>::infinity();
  if (mode == BoundMode::Interval) {
    poly::Box box = default_box(prob);
    for (const auto& f : prob.branches()) {
      auto [plo, phi] = poly::interval_range(f.num(), box);
      auto [qlo, qhi] = poly::interval_range(f.den(), box);
      if (qlo <= 0)
        throw Error(
            "nonpositive-denominator: interval enclosure of a branch "
            "denominator is not positive; use relaxation or user bounds");
      M1 = std::max(M1, std::max(std::abs(plo), std::abs(phi)) / qlo);
      M2 = std::min(M2, plo >= 0 ? plo / qhi : plo / qlo);
    }
    return {M1, M2};
  }

  // Relaxation mode: certify the four per-branch range bounds.
  for (const auto& f : prob.branches()) {
    int r0 = 1;
    for (const auto& g : prob.K().effective_constraints())
      r0 = std::max(r0, (g.degree() + 1) / 2);
    r0 = std::max(r0, (f.num().degree() + 1) / 2);
    r0 = std::max(r0, (f.den().degree() + 1) / 2);
    auto lb_minp = certified_lower_bound(f.num(), prob.K(), r0);
    auto lb_minq = certified_lower_bound(f.den(), prob.K(), r0);
    auto lb_min_negp = certified_lower_bound(-f.num(), prob.K(), r0);
    auto lb_min_negq = certified_lower_bound(-f.den(), prob.K(), r0);
    if (!lb_minp || !lb_minq || !lb_min_negp || !lb_min_negq)
      throw Error("bound relaxation solve failed");
    double qlo = *lb_minq, qhi = -*lb_min_negq;
    double plo = *lb_minp, phi = -*lb_min_negp;
    if (qlo <= 0)
      throw Error(
          "nonpositive-denominator: relaxation bound on a branch denominator "
          "is not positive");
    M1 = std::max(M1, std::max(std::abs(plo), std::abs(phi)) / qlo);
    M2 = std::min(M2, plo >= 0 ? plo / qhi : plo / qlo);
  }
  return {M1, M2};
}

std::vector<poly::Polynomial> LiftedMrf::bound_constraints() const {
  if (!has_z) return {};
  int nv = nvars();
  poly::Polynomial z = poly::Polynomial::variable(nv, nv - 1);
  poly::Polynomial up = poly::Polynomial::constant(nv, bounds.M1) - z;
  poly::Polynomial lo = z - poly::Polynomial::constant(nv, bounds.M2);
  if (all_affine) return {up, lo};
  return {up * lo};
}

LiftedMrf lift(const MrfProblem& prob, Bounds bounds) {
  LiftedMrf L;
  L.nx = prob.nx();
  L.has_z = !prob.branches().empty();
  L.bounds = bounds;
  if (L.has_z && L.bounds.M1 < L.bounds.M2 + 1e-9) {
    // Degenerate range (constant branches); widen to keep an interior.
    L.bounds.M1 += 0.5;
    L.bounds.M2 -= 0.5;
  }
  const int nv = L.nx + (L.has_z ? 1 : 0);

  std::vector<poly::Polynomial> hs;
  for (const auto& g : prob.K().effective_constraints())
    hs.push_back(g.embedded(nv, 0));
  L.all_affine = true;
  for (const auto& g : prob.K().effective_constraints())
    if (!g.is_affine()) L.all_affine = false;
  if (!prob.f0().num().is_affine() || !prob.f0().den().is_constant())
    L.all_affine = false;
  if (L.has_z) {
    poly::Polynomial z = poly::Polynomial::variable(nv, nv - 1);
    for (const auto& f : prob.branches()) {
      hs.push_back(z * f.den().embedded(nv, 0) - f.num().embedded(nv, 0));
      if (!f.num().is_affine() || !f.den().is_constant())
        L.all_affine = false;
    }
    L.q0 = prob.f0().den().embedded(nv, 0);
    L.h0 = prob.f0().num().embedded(nv, 0) + z * L.q0;
  } else {
    L.q0 = prob.f0().den();
    L.h0 = prob.f0().num();
  }
  // A pure polytope description leaves the top even moments of the
  // relaxation unpinned and rank certificates out of reach; a redundant
  // ball row from the box restores them. Skipped in the all-affine case to
  // keep the linear fast path.
  bool polytope = !prob.K().ball_radius();
  for (const auto& g : prob.K().effective_constraints())
    if (!g.is_affine()) polytope = false;
  if (polytope && !L.all_affine && prob.box()) {
    double M = 0.0;
    for (int i = 0; i < L.nx; ++i)
      M += std::max(prob.box()->lo[static_cast<size_t>(i)] *
                        prob.box()->lo[static_cast<size_t>(i)],
                    prob.box()->hi[static_cast<size_t>(i)] *
                        prob.box()->hi[static_cast<size_t>(i)]);
    poly::Polynomial ball = poly::Polynomial::constant(nv, M);
    for (int i = 0; i < L.nx; ++i) {
      poly::Polynomial xi = poly::Polynomial::variable(nv, i);
      ball = ball - xi * xi;
    }
    hs.push_back(std::move(ball));
  }
  L.khat = poly::SemiAlgebraicSet(nv, std::move(hs));

  L.r0 = std::max(1, (L.h0.degree() + 1) / 2);
  for (const auto& h : L.khat.constraints())
    L.r0 = std::max(L.r0, (h.degree() + 1) / 2);
  for (const auto& b : L.bound_constraints())
    L.r0 = std::max(L.r0, (b.degree() + 1) / 2);
  return L;
}

Relaxation build_relaxation(const LiftedMrf& lifted, int r) {
  if (r < lifted.r0)
    throw Error("order-too-small: r must be at least the lift order");
  Relaxation R;
  R.r = r;
  R.nvars = lifted.nvars();
  std::vector<poly::Polynomial> constraints = lifted.khat.constraints();
  for (auto& b : lifted.bound_constraints()) constraints.push_back(b);

  auto side = detail::build_moment_side(R.problem, R.nvars, constraints, r);
  R.ybasis = std::move(side.ybasis);
  R.y = std::move(side.y);
  R.moment_block = side.moment_block;

  int eq = R.problem.add_equality(1.0);
  for (const auto& [m, c] : lifted.q0.terms())
    R.problem.equality_add_term(
        eq, R.y[static_cast<size_t>(R.ybasis.index_of(m))], c);

  std::vector<std::pair<int, double>> obj;
  for (const auto& [m, c] : lifted.h0.terms())
    obj.emplace_back(R.y[static_cast<size_t>(R.ybasis.index_of(m))], c);
  R.problem.set_objective(sdp::Sense::Min, std::move(obj));
  return R;
}

bool HierarchyReport::any_solved() const {
  for (const auto& o : orders)
    if (o.usable) return true;
  return false;
}

namespace {

OrderReport solve_order(const LiftedMrf& L, int r, const SolveOptions& opts,
                        moment::MomentVector* y_out) {
  OrderReport rec;
  rec.r = r;
  Relaxation R = build_relaxation(L, r);
  sdp::Options so;
  so.tol = opts.tol;
  so.max_iter = opts.max_iter;
  so.verbose = opts.verbose;
  sdp::Report rep = sdp::solve(R.problem, so);
  rec.status = rep.status;
  rec.lp_path = rep.lp_fastpath;
  rec.gap = rep.gap;
  rec.primal_residual = rep.primal_residual;
  rec.dual_residual = rep.dual_residual;
  rec.iterations = rep.iterations;
  rec.message = rep.message;
  rec.usable = rep.status == sdp::Status::Optimal ||
               (rep.status == sdp::Status::MaxIterations && rep.gap <= 1e-5 &&
                rep.primal_residual <= 1e-5);
  if (!rec.usable) return rec;
  rec.value = rep.value;

  moment::MomentVector y(R.nvars, 2 * r);
  for (int i = 0; i < R.ybasis.size(); ++i)
    y.values()(i) = rep.scalars(R.y[static_cast<size_t>(i)]);
  try {
    rec.rank_high = atoms::numeric_rank(moment::moment_matrix(y, r),
                                        opts.rank_tol);
    rec.rank_low = atoms::numeric_rank(moment::moment_matrix(y, r - L.r0),
                                       opts.rank_tol);
    rec.flat = rec.rank_high == rec.rank_low;
  } catch (const std::invalid_argument&) {
    // Returned moments too indefinite for a rank call; no certificate.
  }
  if (y_out) *y_out = std::move(y);
  return rec;
}

}  // namespace

HierarchyReport solve_hierarchy(const MrfProblem& prob,
                                const SolveOptions& opts) {
  HierarchyReport H;
  Bounds bounds{0, 0};
  if (!prob.branches().empty())
    bounds = compute_bounds(prob, opts.bound_mode, opts.bounds);
  LiftedMrf L = lift(prob, bounds);
  H.bounds_used = L.bounds;

  if (opts.perturb) {
    // Seeded dense perturbation of the objective over the x variables;
    // generically forces a unique minimizer.
    std::mt19937_64 rng(opts.seed ^ 0x5bf03635ULL);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    moment::MonomialBasis pb(L.nx, 2 * L.r0);
    poly::Polynomial psi(L.nvars());
    for (int i = 0; i < pb.size(); ++i)
      psi.add_term(pb.at(i).nvars() == L.nvars()
                       ? pb.at(i)
                       : poly::Monomial([&] {
                           std::vector<int> e = pb.at(i).exps();
                           e.resize(static_cast<size_t>(L.nvars()), 0);
                           return e;
                         }()),
                   *opts.perturb * unif(rng));
    L.h0 = L.h0 + psi;
  }

  const int r_start = std::max(L.r0, opts.r_start);
  if (opts.r_max > 0 && opts.r_max < L.r0)
    throw Error("order-too-small: requested maximum order " +
                std::to_string(opts.r_max) + " is below the lift order " +
                std::to_string(L.r0));
  const int r_max = opts.r_max > 0 ? std::max(opts.r_max, r_start)
                                   : r_start + 3;
  H.r0 = L.r0;

  moment::MomentVector y_final;
  bool have_y = false;

  auto handle = [&](OrderReport rec, moment::MomentVector y) -> bool {
    bool stop = false;
    if (rec.usable) {
      H.value = rec.value;
      y_final = std::move(y);
      have_y = true;
      if (rec.flat) {
        try {
          auto atoms = atoms::extract_atoms(y_final, rec.r, rec.rank_high,
                                            opts.rank_tol, opts.seed);
          atoms::AtomicMeasure projected;
          projected.weights = atoms.weights;
          bool inside = true;
          for (const auto& a : atoms.atoms) {
            std::vector<double> x(a.begin(), a.begin() + prob.nx());
            if (!prob.K().contains(x, 1e-5)) inside = false;
            projected.atoms.push_back(std::move(x));
          }
          if (inside) {
            H.lifted_atoms = std::move(atoms);
            H.minimizers = std::move(projected);
            H.certified = true;
            stop = true;
          } else {
            H.message += "extracted point left K; certificate rejected; ";
          }
        } catch (const atoms::ExtractionError& e) {
          H.message += std::string(e.what()) + "; ";
        }
      }
      // Two consecutive usable orders agreeing is a practical stop.
      if (!stop && H.orders.size() >= 1) {
        const auto& prev = H.orders.back();
        if (prev.usable &&
            std::abs(prev.value - rec.value) <=
                10 * opts.tol * std::max(1.0, std::abs(rec.value))) {
          H.value_converged = true;
          stop = true;
        }
      }
    } else {
      H.message += "order " + std::to_string(rec.r) + ": " +
                   sdp::status_name(rec.status) +
                   (rec.message.empty() ? "" : " (" + rec.message + ")") + "; ";
    }
    H.orders.push_back(std::move(rec));
    return stop;
  };

  if (opts.concurrent_orders) {
    std::vector<std::future<std::pair<OrderReport, moment::MomentVector>>> futs;
    for (int r = r_start; r <= r_max; ++r)
      futs.push_back(std::async(std::launch::async, [&L, &opts, r] {
        moment::MomentVector y;
        OrderReport rec = solve_order(L, r, opts, &y);
        return std::make_pair(std::move(rec), std::move(y));
      }));
    for (auto& fu : futs) {
      auto [rec, y] = fu.get();
      if (handle(std::move(rec), std::move(y))) break;
    }
  } else {
    for (int r = r_start; r <= r_max; ++r) {
      moment::MomentVector y;
      OrderReport rec = solve_order(L, r, opts, &y);
      if (handle(std::move(rec), std::move(y))) break;
    }
  }

  if (have_y) {
    H.moments = y_final;
    for (int i = 0; i < prob.nx(); ++i)
      H.first_order_point.push_back(
          y_final[poly::Monomial([&] {
            std::vector<int> e(static_cast<size_t>(L.nvars()), 0);
            e[static_cast<size_t>(i)] = 1;
            return e;
          }())]);
  }
  return H;
}

std::optional<double> certified_lower_bound(const poly::Polynomial& q,
                                            const poly::SemiAlgebraicSet& K,
                                            int order, double tol) {
  LiftedMrf L;
  L.nx = K.nvars();
  L.has_z = false;
  L.khat = poly::SemiAlgebraicSet(K.nvars(), K.effective_constraints());
  L.h0 = q;
  L.q0 = poly::Polynomial::constant(K.nvars(), 1.0);
  L.r0 = std::max(1, (q.degree() + 1) / 2);
  for (const auto& g : L.khat.constraints())
    L.r0 = std::max(L.r0, (g.degree() + 1) / 2);
  L.all_affine = false;
  // Low orders of a polytope description can leave top moments unbounded;
  // raise the order until the solve settles.
  for (int r = std::max(order, L.r0); r <= std::max(order, L.r0) + 2; ++r) {
    Relaxation R = build_relaxation(L, r);
    sdp::Options so;
    so.tol = tol;
    sdp::Report rep = sdp::solve(R.problem, so);
    if (rep.status == sdp::Status::Optimal ||
        (rep.status == sdp::Status::MaxIterations && rep.gap <= 1e-6))
      return rep.value;
  }
  return std::nullopt;
}

}  // namespace msos::mrf
