#include "msos/absorbing.hpp"

#include <cmath>
#include <future>
#include <sstream>

namespace msos::absorbing {

namespace {

std::vector<std::vector<double>> joint_samples(
    const PolynomialAbsorbingGame& A, int count) {
  if (!A.box1() || !A.box2()) return {};
  auto s1 = poly::sample_set(A.K1(), *A.box1(), count);
  auto s2 = poly::sample_set(A.K2(), *A.box2(), count);
  std::vector<std::vector<double>> joint;
  for (size_t i = 0; i < std::min(s1.size(), s2.size()); ++i) {
    std::vector<double> p = s1[i];
    p.insert(p.end(), s2[i].begin(), s2[i].end());
    joint.push_back(std::move(p));
  }
  return joint;
}

}  // namespace

PolynomialAbsorbingGame::PolynomialAbsorbingGame(
    poly::SemiAlgebraicSet K1, poly::SemiAlgebraicSet K2, poly::Polynomial g,
    poly::Polynomial f, poly::Polynomial q, double lambda,
    std::optional<poly::Box> box1, std::optional<poly::Box> box2)
    : K1_(std::move(K1)),
      K2_(std::move(K2)),
      g_(std::move(g)),
      f_(std::move(f)),
      q_(std::move(q)),
      lambda_(lambda),
      box1_(std::move(box1)),
      box2_(std::move(box2)) {
  const int nv = K1_.nvars() + K2_.nvars();
  if (g_.nvars() != nv || f_.nvars() != nv || q_.nvars() != nv)
    throw Error("absorbing game: payoffs must span both variable blocks");
  if (!(lambda_ > 0.0 && lambda_ < 1.0))
    throw Error("invariant-violation: lambda must lie in (0, 1)");
  for (const auto& p : joint_samples(*this, 400)) {
    double qv = q_.eval(p);
    if (qv < -1e-6 || qv > 1.0 + 1e-6) {
      std::ostringstream os;
      os << "invariant-violation: q = " << qv << " outside [0, 1] at a sample";
      throw Error(os.str());
    }
  }
}

poly::Polynomial PolynomialAbsorbingGame::weighted_payoff() const {
  poly::Polynomial one = poly::Polynomial::constant(g_.nvars(), 1.0);
  return (g_ * q_).scaled(lambda_) + (f_ * (one - q_)).scaled(1.0 - lambda_);
}

poly::Polynomial PolynomialAbsorbingGame::weight() const {
  poly::Polynomial one = poly::Polynomial::constant(g_.nvars(), 1.0);
  return q_.scaled(lambda_) + (one - q_);
}

polygame::PolynomialGame auxiliary_game(const PolynomialAbsorbingGame& A,
                                        double t) {
  poly::Polynomial payoff = A.weighted_payoff() - A.weight().scaled(t);
  return polygame::PolynomialGame(A.K1(), A.K2(), std::move(payoff), A.box1(),
                                  A.box2(), polygame::Orientation::MaxMin);
}

double s_of_t(const PolynomialAbsorbingGame& A, double t,
              const polygame::GameOptions& opts,
              polygame::GameSolveReport* report) {
  auto rep = polygame::solve_game(auxiliary_game(A, t), opts);
  if (!rep.any_solved())
    throw Error("s(t) evaluation failed: " + rep.message);
  double v = rep.value;
  if (report) *report = std::move(rep);
  return v;
}

ValueSearchTrace value_search(const PolynomialAbsorbingGame& A,
                              const SearchOptions& opts) {
  ValueSearchTrace trace;
  double lo, hi;
  if (opts.t_lo && opts.t_hi) {
    lo = *opts.t_lo;
    hi = *opts.t_hi;
  } else {
    // Payoff-range bracket from box samples of min/max of g and f.
    auto pts = joint_samples(A, 400);
    if (pts.empty())
      throw Error("value_search: need either a bracket or boxes to sample");
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (const auto& p : pts) {
      mn = std::min({mn, A.g().eval(p), A.f().eval(p)});
      mx = std::max({mx, A.g().eval(p), A.f().eval(p)});
    }
    lo = opts.t_lo.value_or(mn - 1.0);
    hi = opts.t_hi.value_or(mx + 1.0);
  }

  polygame::GameOptions gopts = opts.game;
  auto eval = [&](double t) {
    ValueSearchTrace::Eval e;
    e.t = t;
    e.s = s_of_t(A, t, gopts, &e.report);
    // Later evaluations reuse the settled order unless certification fails.
    if (e.report.certified && e.report.d_used > 0) {
      gopts.d_max = e.report.d_used;
    } else {
      gopts.d_max = opts.game.d_max;
    }
    trace.evals.push_back(e);
    return e.s;
  };

  // The two endpoint checks are independent solves.
  double s_lo, s_hi;
  {
    auto fut = std::async(std::launch::async, [&] {
      polygame::GameSolveReport rep;
      double s = s_of_t(A, lo, opts.game, &rep);
      return std::make_pair(s, std::move(rep));
    });
    polygame::GameSolveReport rhi_rep;
    s_hi = s_of_t(A, hi, opts.game, &rhi_rep);
    auto [s, rep] = fut.get();
    s_lo = s;
    trace.evals.push_back({lo, s_lo, std::move(rep)});
    trace.evals.push_back({hi, s_hi, std::move(rhi_rep)});
  }
  if (!(s_lo >= 0.0 && 0.0 >= s_hi)) {
    std::ostringstream os;
    os << "invalid-bracket: s(" << lo << ") = " << s_lo << ", s(" << hi
       << ") = " << s_hi << " do not enclose zero";
    throw Error(os.str());
  }

  double t = 0.5 * (lo + hi), s = 0.0;
  for (int it = 0; it < opts.max_bisect; ++it) {
    t = 0.5 * (lo + hi);
    s = eval(t);
    ++trace.bisections;
    if (std::abs(s) <= opts.s_tol || hi - lo <= 1e-8) {
      trace.converged = true;
      break;
    }
    (s > 0 ? lo : hi) = t;
  }
  if (!trace.converged) trace.message = "bisection budget exhausted";
  trace.t_lo = lo;
  trace.t_hi = hi;
  trace.value = t;
  return trace;
}

}  // namespace msos::absorbing
