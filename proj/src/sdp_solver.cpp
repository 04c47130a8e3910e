// Embedded dense interior-point kernel: infeasible-start primal-dual
// path-following with Nesterov-Todd scaling and a Mehrotra corrector,
// assembled in the scaled space where the Schur complement is an exact Gram
// matrix. Linear equalities and builder-supplied substitutions are
// eliminated up front so the kernel only sees affine PSD pencils over free
// variables.
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "msos/sdp.hpp"

namespace msos::sdp {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

int svec_len(int d) { return d * (d + 1) / 2; }

void svec_into(const Eigen::MatrixXd& A, Eigen::Ref<Eigen::VectorXd> out) {
  int d = static_cast<int>(A.rows());
  int k = 0;
  for (int c = 0; c < d; ++c) {
    out(k++) = A(c, c);
    for (int r = c + 1; r < d; ++r) out(k++) = kSqrt2 * A(r, c);
  }
}

Eigen::MatrixXd unsvec(const Eigen::Ref<const Eigen::VectorXd>& v, int d) {
  Eigen::MatrixXd A(d, d);
  int k = 0;
  for (int c = 0; c < d; ++c) {
    A(c, c) = v(k++);
    for (int r = c + 1; r < d; ++r) {
      double x = v(k++) / kSqrt2;
      A(r, c) = x;
      A(c, r) = x;
    }
  }
  return A;
}

struct Block {
  int dim = 0;
  Eigen::MatrixXd SA;  // svec_len(dim) x f, columns svec(A_j)
  Eigen::VectorXd sc;  // svec of the constant part
};

struct KernelResult {
  Status status = Status::NumericalFailure;
  Eigen::VectorXd w;
  double pobj = 0.0;
  double relgap = 1.0, pres = 1.0, dres = 1.0;
  int iterations = 0;
  std::string message;
};

// Largest step alpha in (0, 1] keeping diag(sig) + alpha*Dhat positive
// definite, shortened by tau.
double max_step_scaled(const Eigen::VectorXd& sig, const Eigen::MatrixXd& Dhat,
                       double tau) {
  Eigen::VectorXd si = sig.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd M = si.asDiagonal() * Dhat * si.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return 1.0;
  return std::min(1.0, -tau / lmin);
}

KernelResult run_kernel(std::vector<Block>& blocks, const Eigen::VectorXd& c,
                        const Options& opts) {
  KernelResult res;
  const int f = static_cast<int>(c.size());
  const int nb = static_cast<int>(blocks.size());
  double total_dim = 0.0;
  for (const auto& b : blocks) total_dim += b.dim;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(f);
  std::vector<Eigen::MatrixXd> X(nb), Y(nb);
  for (int b = 0; b < nb; ++b) {
    double xi = std::max(10.0, blocks[b].sc.norm());
    X[b] = xi * Eigen::MatrixXd::Identity(blocks[b].dim, blocks[b].dim);
    Y[b] = xi * Eigen::MatrixXd::Identity(blocks[b].dim, blocks[b].dim);
  }

  double cnorm = 1.0 + c.norm();
  double scnorm = 1.0;
  for (const auto& b : blocks) scnorm += b.sc.squaredNorm();
  scnorm = std::sqrt(scnorm);

  struct Best {
    double score = std::numeric_limits<double>::infinity();
    Eigen::VectorXd w;
    double pobj = 0, relgap = 1, pres = 1, dres = 1;
  } best;

  std::vector<Eigen::LLT<Eigen::MatrixXd>> lltX(nb), lltY(nb);
  std::vector<Eigen::MatrixXd> G(nb), Ginv(nb), Rp(nb), That(nb);
  std::vector<Eigen::VectorXd> sigma(nb), rphat(nb);
  std::vector<Eigen::MatrixXd> dXa(nb), dYa(nb), dX(nb), dY(nb);
  std::vector<Eigen::MatrixXd> dXha(nb), dYha(nb);
  int stall = 0, since_best = 0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // Residuals and complementarity.
    double mu = 0.0, pres_num = 0.0;
    Eigen::VectorXd rd = c;
    for (int b = 0; b < nb; ++b) {
      const auto& blk = blocks[b];
      Eigen::VectorXd pencil = blk.sc;
      pencil.noalias() += blk.SA * w;
      Rp[b] = unsvec(pencil, blk.dim) - X[b];
      pres_num += Rp[b].squaredNorm();
      Eigen::VectorXd sy(svec_len(blk.dim));
      svec_into(Y[b], sy);
      rd.noalias() -= blk.SA.transpose() * sy;
      mu += X[b].cwiseProduct(Y[b]).sum();
    }
    mu /= std::max(1.0, total_dim);
    double pres = std::sqrt(pres_num) / scnorm;
    double dres = rd.norm() / cnorm;
    double pobj = c.dot(w);
    double dobj = 0.0;
    for (int b = 0; b < nb; ++b) {
      Eigen::VectorXd sy(svec_len(blocks[b].dim));
      svec_into(Y[b], sy);
      dobj -= blocks[b].sc.dot(sy);
    }
    double relgap = std::abs(pobj - dobj) /
                    (1.0 + std::max(std::abs(pobj), std::abs(dobj)));

    if (opts.verbose) {
      std::cerr << "  ipm " << iter << " pobj=" << pobj << " dobj=" << dobj
                << " gap=" << relgap << " pres=" << pres << " dres=" << dres
                << " mu=" << mu << "\n";
    }

    double score = std::max({relgap, pres, dres});
    if (score < 0.9 * best.score) since_best = 0;
    if (score < best.score) {
      best = {score, w, pobj, relgap, pres, dres};
    }

    auto finish = [&](Status st, const std::string& msg) {
      res.status = st;
      res.w = best.w;
      res.pobj = best.pobj;
      res.relgap = best.relgap;
      res.pres = best.pres;
      res.dres = best.dres;
      res.iterations = iter;
      res.message = msg;
    };

    if (relgap <= opts.tol && pres <= opts.tol && dres <= opts.tol) {
      finish(Status::Optimal, "");
      return res;
    }
    // Divergence heuristics on the scaled problem.
    if (dobj > 1e12 && dres <= 1e-6) {
      finish(Status::Infeasible, "dual objective diverging; primal infeasible");
      return res;
    }
    if (pobj < -1e12 && pres <= 1e-6) {
      finish(Status::Unbounded, "primal objective diverging; unbounded below");
      return res;
    }
    if (iter == opts.max_iter - 1) {
      finish(Status::MaxIterations, "iteration limit reached");
      return res;
    }
    if (++since_best > 25) {
      finish(Status::MaxIterations, "progress stagnated");
      return res;
    }

    // Nesterov-Todd scaling per block. Near the boundary the Cholesky can
    // fail by roundoff; retry with an escalating jitter before giving up.
    auto safe_llt = [](Eigen::MatrixXd& A, Eigen::LLT<Eigen::MatrixXd>& fac) {
      fac.compute(A);
      if (fac.info() == Eigen::Success) return true;
      double tr = std::max(1.0, A.trace() / A.rows());
      for (double jit = 1e-14; jit <= 1e-8; jit *= 100) {
        Eigen::MatrixXd R = A;
        R.diagonal().array() += jit * tr;
        fac.compute(R);
        if (fac.info() == Eigen::Success) {
          A = R;
          return true;
        }
      }
      return false;
    };
    bool scale_ok = true;
    for (int b = 0; b < nb; ++b) {
      if (!safe_llt(X[b], lltX[b]) || !safe_llt(Y[b], lltY[b])) {
        scale_ok = false;
        break;
      }
      Eigen::MatrixXd Lx = lltX[b].matrixL();
      Eigen::MatrixXd Ly = lltY[b].matrixL();
      Eigen::MatrixXd M = Ly.transpose() * Lx;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(
          M, Eigen::ComputeFullU | Eigen::ComputeFullV);
      sigma[b] = svd.singularValues();
      if (sigma[b].minCoeff() <= 0) {
        scale_ok = false;
        break;
      }
      Eigen::VectorXd shalf = sigma[b].cwiseSqrt();
      // W = G G', W Y W = X; scaled iterates Xhat = Yhat = diag(sigma).
      G[b] = Lx * svd.matrixV() * shalf.cwiseInverse().asDiagonal();
      Eigen::MatrixXd Lxinv = Lx.triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(blocks[b].dim, blocks[b].dim));
      Ginv[b] = shalf.asDiagonal() * svd.matrixV().transpose() * Lxinv;
    }
    if (!scale_ok) {
      finish(best.score <= 1e3 * opts.tol ? Status::MaxIterations
                                          : Status::NumericalFailure,
             "lost positive definiteness in scaling");
      return res;
    }

    // Scaled pencil stacks That_j = svec(Ginv A_j Ginv') and the Schur
    // complement as their Gram matrix.
    Eigen::MatrixXd Schur = Eigen::MatrixXd::Zero(f, f);
    for (int b = 0; b < nb; ++b) {
      const auto& blk = blocks[b];
      const int sl = svec_len(blk.dim);
      That[b].resize(sl, f);
      for (int j = 0; j < f; ++j) {
        Eigen::MatrixXd A = unsvec(blk.SA.col(j), blk.dim);
        Eigen::MatrixXd Ah = Ginv[b] * A * Ginv[b].transpose();
        svec_into(Ah, That[b].col(j));
      }
      Schur.selfadjointView<Eigen::Lower>().rankUpdate(That[b].transpose(),
                                                       1.0);
      Eigen::MatrixXd Rph = Ginv[b] * Rp[b] * Ginv[b].transpose();
      rphat[b].resize(sl);
      svec_into(Rph, rphat[b]);
    }
    Schur.triangularView<Eigen::StrictlyUpper>() =
        Schur.transpose().triangularView<Eigen::StrictlyUpper>();

    Eigen::LLT<Eigen::MatrixXd> sf;
    double ridge = 0.0;
    double tr = Schur.trace() / std::max(1, f);
    for (int attempt = 0; attempt < 9; ++attempt) {
      Eigen::MatrixXd Sreg = Schur;
      if (ridge > 0) Sreg.diagonal().array() += ridge;
      sf.compute(Sreg);
      if (sf.info() == Eigen::Success) break;
      ridge = (ridge == 0.0) ? 1e-14 * std::max(1.0, tr) : ridge * 100;
    }
    if (sf.info() != Eigen::Success) {
      finish(Status::NumericalFailure, "Schur factorization failed");
      return res;
    }
    auto schur_solve = [&](const Eigen::VectorXd& q) {
      Eigen::VectorXd d = sf.solve(q);
      Eigen::VectorXd r = q - Schur * d;
      d += sf.solve(r);
      r = q - Schur * d;
      d += sf.solve(r);
      return d;
    };

    // Directions from the scaled central-path equation
    //   dXhat + dYhat = Rchat,   dX = A(dw) + Rp,   <A_i, dY> = rd_i.
    auto assemble_dir = [&](const std::vector<Eigen::VectorXd>& rchat,
                            std::vector<Eigen::MatrixXd>& dXo,
                            std::vector<Eigen::MatrixXd>& dYo,
                            std::vector<Eigen::MatrixXd>& dXho,
                            std::vector<Eigen::MatrixXd>& dYho,
                            Eigen::VectorXd& dw) {
      Eigen::VectorXd q = -rd;
      for (int b = 0; b < nb; ++b)
        q.noalias() += That[b].transpose() * (rchat[b] - rphat[b]);
      dw = schur_solve(q);
      for (int b = 0; b < nb; ++b) {
        Eigen::VectorXd ph = That[b] * dw;
        Eigen::VectorXd dyh = rchat[b] - rphat[b] - ph;
        dXo[b] = unsvec(blocks[b].SA * dw, blocks[b].dim) + Rp[b];
        dXho[b] = unsvec(ph + rphat[b], blocks[b].dim);
        dYho[b] = unsvec(dyh, blocks[b].dim);
        dYo[b].noalias() =
            Ginv[b].transpose() * dYho[b] * Ginv[b];
      }
    };

    double tau = iter < 2 ? 0.95 : (mu < 1e-7 ? 0.995 : 0.99);

    // Predictor: Rchat = -Xhat = -diag(sigma).
    std::vector<Eigen::VectorXd> rchat(nb);
    for (int b = 0; b < nb; ++b) {
      rchat[b] = Eigen::VectorXd::Zero(svec_len(blocks[b].dim));
      int k = 0;
      for (int cc = 0; cc < blocks[b].dim; ++cc) {
        rchat[b](k) = -sigma[b](cc);
        k += blocks[b].dim - cc;
      }
    }
    Eigen::VectorXd dwa;
    assemble_dir(rchat, dXa, dYa, dXha, dYha, dwa);
    double apa = 1.0, ada = 1.0;
    for (int b = 0; b < nb; ++b) {
      apa = std::min(apa, max_step_scaled(sigma[b], dXha[b], tau));
      ada = std::min(ada, max_step_scaled(sigma[b], dYha[b], tau));
    }
    double mu_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      mu_aff += (X[b] + apa * dXa[b]).cwiseProduct(Y[b] + ada * dYa[b]).sum();
    mu_aff = std::max(0.0, mu_aff / std::max(1.0, total_dim));
    double sig = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
    sig = std::clamp(sig, 1e-8, 1.0);
    // Collapsed affine steps call for recentering.
    if (std::min(apa, ada) < 0.01) sig = std::max(sig, 0.5);

    // Corrector: Rchat = sig*mu*Vinv - V - S with the Mehrotra term S from
    // the Lyapunov solve sym(S V) = sym(dXhat_aff dYhat_aff).
    for (int b = 0; b < nb; ++b) {
      Eigen::MatrixXd N = dXha[b] * dYha[b];
      N = 0.5 * (N + N.transpose()).eval();
      for (int i = 0; i < blocks[b].dim; ++i)
        for (int j = 0; j < blocks[b].dim; ++j)
          N(i, j) = 2.0 * N(i, j) / (sigma[b](i) + sigma[b](j));
      for (int i = 0; i < blocks[b].dim; ++i)
        N(i, i) += sigma[b](i) - sig * mu / sigma[b](i);
      svec_into(-N, rchat[b]);
    }
    Eigen::VectorXd dw;
    assemble_dir(rchat, dX, dY, dXha, dYha, dw);
    double ap = 1.0, ad = 1.0;
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step_scaled(sigma[b], dXha[b], tau));
      ad = std::min(ad, max_step_scaled(sigma[b], dYha[b], tau));
    }
    // Fall back to the affine direction if the corrector went bad.
    if (!std::isfinite(ap) || !std::isfinite(ad) || ap <= 1e-12 ||
        ad <= 1e-12) {
      dw = dwa;
      dX = dXa;
      dY = dYa;
      ap = apa;
      ad = ada;
    }

    // Apply the step, backing off if roundoff pushed an iterate across the
    // cone boundary.
    auto pd_after = [&](double sp, double sd) {
      Eigen::LLT<Eigen::MatrixXd> probe;
      for (int b = 0; b < nb; ++b) {
        probe.compute(X[b] + sp * dX[b]);
        if (probe.info() != Eigen::Success) return false;
        probe.compute(Y[b] + sd * dY[b]);
        if (probe.info() != Eigen::Success) return false;
      }
      return true;
    };
    for (int back = 0; back < 6 && !pd_after(ap, ad); ++back) {
      ap *= 0.5;
      ad *= 0.5;
    }
    w += ap * dw;
    for (int b = 0; b < nb; ++b) {
      X[b] += ap * dX[b];
      Y[b] += ad * dY[b];
      X[b] = 0.5 * (X[b] + X[b].transpose()).eval();
      Y[b] = 0.5 * (Y[b] + Y[b].transpose()).eval();
    }

    if (ap < 1e-7 && ad < 1e-7) {
      if (++stall >= 4) {
        Status st = best.score <= 1e3 * opts.tol ? Status::MaxIterations
                                                 : Status::NumericalFailure;
        finish(st, "step sizes collapsed");
        return res;
      }
    } else {
      stall = 0;
    }
  }
  res.message = "iteration limit reached";
  res.status = Status::MaxIterations;
  res.w = best.w;
  res.pobj = best.pobj;
  res.relgap = best.relgap;
  res.pres = best.pres;
  res.dres = best.dres;
  res.iterations = opts.max_iter;
  return res;
}

}  // namespace

namespace {

struct AffineMap {
  // x = x0 + N w over all problem scalars.
  Eigen::VectorXd x0;
  Eigen::MatrixXd N;
  bool feasible = true;
  std::string message;
};

// Eliminates substitutions (exact triangular expansion) and equality rows
// (rank-revealing QR null space).
AffineMap eliminate(const std::vector<Problem::Subst>& subs,
                    const std::vector<Problem::EqRow>& eqs, int n) {
  AffineMap map;
  std::vector<int> fidx(static_cast<size_t>(n), -1);
  std::vector<int> tidx(static_cast<size_t>(n), -1);
  for (const auto& s : subs) {
    if (tidx[static_cast<size_t>(s.target)] != -1)
      throw std::invalid_argument("duplicate substitution target");
    tidx[static_cast<size_t>(s.target)] = 0;
  }
  int nf1 = 0;
  for (int i = 0; i < n; ++i)
    if (tidx[static_cast<size_t>(i)] == -1) fidx[static_cast<size_t>(i)] = nf1++;
  // Expanded rows for targets, over the nf1 untargeted scalars.
  Eigen::MatrixXd S(static_cast<int>(subs.size()), nf1);
  Eigen::VectorXd Sc(static_cast<int>(subs.size()));
  S.setZero();
  Sc.setZero();
  for (size_t k = 0; k < subs.size(); ++k) {
    tidx[static_cast<size_t>(subs[k].target)] = static_cast<int>(k);
    Sc(static_cast<int>(k)) = subs[k].constant;
    for (const auto& [r, c] : subs[k].terms) {
      if (fidx[static_cast<size_t>(r)] >= 0) {
        S(static_cast<int>(k), fidx[static_cast<size_t>(r)]) += c;
      } else {
        int kr = tidx[static_cast<size_t>(r)];
        if (kr < 0 || kr >= static_cast<int>(k))
          throw std::invalid_argument(
              "substitution references a later substitution target");
        S.row(static_cast<int>(k)) += c * S.row(kr);
        Sc(static_cast<int>(k)) += c * Sc(kr);
      }
    }
  }

  // Remaining equality rows over the untargeted scalars, row-normalized.
  int me = static_cast<int>(eqs.size());
  Eigen::MatrixXd E(me, nf1);
  Eigen::VectorXd rhs(me);
  E.setZero();
  int mrows = 0;
  for (const auto& row : eqs) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nf1);
    double r = row.rhs;
    for (const auto& [s, c] : row.terms) {
      if (fidx[static_cast<size_t>(s)] >= 0) {
        e(fidx[static_cast<size_t>(s)]) += c;
      } else {
        int k = tidx[static_cast<size_t>(s)];
        e += c * S.row(k).transpose();
        r -= c * Sc(k);
      }
    }
    double scale = e.lpNorm<Eigen::Infinity>();
    if (scale <= 1e-300) {
      if (std::abs(r) > 1e-9) {
        map.feasible = false;
        map.message = "inconsistent equality constraints";
        return map;
      }
      continue;
    }
    E.row(mrows) = e / scale;
    rhs(mrows) = r / scale;
    ++mrows;
  }
  E.conservativeResize(mrows, nf1);
  rhs.conservativeResize(mrows);

  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(nf1);
  Eigen::MatrixXd N2;
  int f = nf1;
  if (mrows > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(E.transpose());
    qr.setThreshold(1e-11);
    int rank = static_cast<int>(qr.rank());
    f = nf1 - rank;
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(nf1, f);
    sel.bottomRows(f).setIdentity();
    N2 = qr.householderQ() * sel;
    // Particular solution via R' z = P' rhs on the leading rank block.
    Eigen::VectorXd prhs = qr.colsPermutation().transpose() * rhs;
    Eigen::MatrixXd R = qr.matrixR()
                            .topLeftCorner(rank, rank)
                            .template triangularView<Eigen::Upper>();
    Eigen::VectorXd z =
        R.transpose().triangularView<Eigen::Lower>().solve(prhs.head(rank));
    Eigen::VectorXd zpad = Eigen::VectorXd::Zero(nf1);
    zpad.head(rank) = z;
    u0 = qr.householderQ() * zpad;
    double incons = (E * u0 - rhs).lpNorm<Eigen::Infinity>();
    if (incons > 1e-7 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
      map.feasible = false;
      map.message = "inconsistent equality constraints";
      return map;
    }
  } else {
    N2 = Eigen::MatrixXd::Identity(nf1, nf1);
  }

  map.x0 = Eigen::VectorXd::Zero(n);
  map.N = Eigen::MatrixXd::Zero(n, f);
  for (int i = 0; i < n; ++i) {
    if (fidx[static_cast<size_t>(i)] >= 0) {
      int j = fidx[static_cast<size_t>(i)];
      map.x0(i) = u0(j);
      map.N.row(i) = N2.row(j);
    } else {
      int k = tidx[static_cast<size_t>(i)];
      map.x0(i) = S.row(k).dot(u0) + Sc(k);
      map.N.row(i) = S.row(k) * N2;
    }
  }
  return map;
}

Report finish_report(const Problem& prob, const Eigen::VectorXd& x,
                     Status status) {
  Report rep;
  rep.status = status;
  rep.scalars = x;
  rep.value = prob.objective_at(x);
  for (const auto& p : prob.pencils())
    rep.pencil_values.push_back(prob.pencil_value(p, x));
  for (int fb = 0; fb < prob.free_block_count(); ++fb) {
    int d = prob.free_block_dim(fb);
    Eigen::MatrixXd Z(d, d);
    for (int cc = 0; cc < d; ++cc)
      for (int rr = cc; rr < d; ++rr)
        Z(rr, cc) = Z(cc, rr) = x(prob.free_block_scalar(fb, rr, cc));
    rep.free_block_values.push_back(std::move(Z));
  }
  return rep;
}

Report solve_general(const Problem& prob, const Options& opts, bool lp_flag) {
  const int n = prob.scalar_count();
  AffineMap map;
  try {
    map = eliminate(prob.substitutions(), prob.equalities(), n);
  } catch (const std::invalid_argument& e) {
    Report rep;
    rep.status = Status::NumericalFailure;
    rep.message = e.what();
    rep.scalars = Eigen::VectorXd::Zero(n);
    return rep;
  }
  if (!map.feasible) {
    Report rep = finish_report(prob, Eigen::VectorXd::Zero(n),
                               Status::Infeasible);
    rep.message = map.message;
    return rep;
  }
  const int f = static_cast<int>(map.N.cols());

  // Objective in minimization form.
  double sgn = prob.sense() == Sense::Min ? 1.0 : -1.0;
  Eigen::VectorXd cfull = Eigen::VectorXd::Zero(n);
  for (const auto& [s, c] : prob.objective_terms()) cfull(s) += sgn * c;
  Eigen::VectorXd cred = map.N.transpose() * cfull;
  double sobj = cred.lpNorm<Eigen::Infinity>();
  if (sobj <= 1e-300) sobj = 1.0;

  // Reduced svec pencil stacks, fused with any facial-reduction bases.
  std::vector<Block> blocks;
  for (const auto& p : prob.pencils()) {
    const bool has_q = p.reduction.size() > 0;
    const int rdim = has_q ? static_cast<int>(p.reduction.cols()) : p.dim;
    if (rdim == 0) continue;
    Block blk;
    blk.dim = rdim;
    blk.sc.resize(svec_len(rdim));
    blk.SA.resize(svec_len(rdim), f);
    Eigen::MatrixXd acc(p.dim, p.dim);
    auto emit = [&](Eigen::Ref<Eigen::VectorXd> out) {
      if (has_q) {
        Eigen::MatrixXd red = p.reduction.transpose() * acc * p.reduction;
        svec_into(red, out);
      } else {
        svec_into(acc, out);
      }
    };
    // Constant part at x0.
    acc.setZero();
    for (const auto& t : p.constant) {
      acc(t.row, t.col) += t.value;
      if (t.row != t.col) acc(t.col, t.row) += t.value;
    }
    for (const auto& [s, ts] : p.terms) {
      double v0 = map.x0(s);
      if (v0 == 0.0) continue;
      for (const auto& t : ts) {
        acc(t.row, t.col) += v0 * t.value;
        if (t.row != t.col) acc(t.col, t.row) += v0 * t.value;
      }
    }
    emit(blk.sc);
    for (int j = 0; j < f; ++j) {
      acc.setZero();
      for (const auto& [s, ts] : p.terms) {
        double nv = map.N(s, j);
        if (nv == 0.0) continue;
        for (const auto& t : ts) {
          acc(t.row, t.col) += nv * t.value;
          if (t.row != t.col) acc(t.col, t.row) += nv * t.value;
        }
      }
      emit(blk.SA.col(j));
    }
    double bscale = std::max(blk.SA.lpNorm<Eigen::Infinity>(),
                             blk.sc.lpNorm<Eigen::Infinity>());
    if (blk.SA.lpNorm<Eigen::Infinity>() <= 1e-300) {
      // Constant block: feasibility check only.
      Eigen::MatrixXd C = unsvec(blk.sc, rdim);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C,
                                                        Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, bscale)) {
        Report rep = finish_report(prob, map.x0, Status::Infeasible);
        rep.message = "constant block not positive semidefinite";
        return rep;
      }
      continue;
    }
    blk.SA /= bscale;
    blk.sc /= bscale;
    blocks.push_back(std::move(blk));
  }

  if (f == 0 || blocks.empty()) {
    // Fully determined or unconstrained in the reduced space.
    Eigen::VectorXd x = map.x0;
    if (f > 0 && cred.lpNorm<Eigen::Infinity>() > 1e-12) {
      Report rep = finish_report(prob, x, Status::Unbounded);
      rep.message = "free direction with nonzero objective";
      return rep;
    }
    double resid = prob.constraint_residual(x);
    Report rep = finish_report(
        prob, x, resid <= 1e-7 ? Status::Optimal : Status::Infeasible);
    rep.lp_fastpath = lp_flag;
    return rep;
  }

  Eigen::VectorXd ck = cred / sobj;
  KernelResult kr = run_kernel(blocks, ck, opts);

  Eigen::VectorXd x = map.x0 + map.N * kr.w;
  Report rep = finish_report(prob, x, kr.status);
  rep.value = prob.objective_at(x);
  rep.gap = kr.relgap;
  rep.primal_residual = kr.pres;
  rep.dual_residual = kr.dres;
  rep.iterations = kr.iterations;
  rep.message = kr.message;
  rep.lp_fastpath = lp_flag;
  return rep;
}

// Drops marked moment blocks and their interior entries, solves the
// remaining linear program, then completes the interiors as border products
// (a rank-one PSD completion).
Report solve_lp_fastpath(const Problem& prob, const Options& opts) {
  const int n = prob.scalar_count();
  std::vector<bool> interior(static_cast<size_t>(n), false);
  for (const auto& p : prob.pencils()) {
    if (p.moment_entries.size() == 0) continue;
    for (int i = 1; i < p.dim; ++i)
      for (int j = 1; j <= i; ++j)
        interior[static_cast<size_t>(p.moment_entries(i, j))] = true;
  }
  Problem lp;
  std::vector<int> remap(static_cast<size_t>(n), -1);
  for (int i = 0; i < n; ++i)
    if (!interior[static_cast<size_t>(i)]) remap[static_cast<size_t>(i)] = lp.add_scalar();
  for (const auto& p : prob.pencils()) {
    if (p.moment_entries.size() > 0) continue;
    int blk = lp.add_pencil_block(p.dim);
    for (const auto& t : p.constant) lp.pencil_add_constant(blk, t.row, t.col, t.value);
    for (const auto& [s, ts] : p.terms)
      for (const auto& t : ts)
        lp.pencil_add_term(blk, remap[static_cast<size_t>(s)], t.row, t.col, t.value);
  }
  for (const auto& row : prob.equalities()) {
    int eq = lp.add_equality(row.rhs);
    for (const auto& [s, c] : row.terms)
      lp.equality_add_term(eq, remap[static_cast<size_t>(s)], c);
  }
  for (const auto& sub : prob.substitutions()) {
    std::vector<std::pair<int, double>> terms;
    for (const auto& [s, c] : sub.terms)
      terms.emplace_back(remap[static_cast<size_t>(s)], c);
    lp.add_substitution(remap[static_cast<size_t>(sub.target)], std::move(terms),
                        sub.constant);
  }
  std::vector<std::pair<int, double>> obj;
  for (const auto& [s, c] : prob.objective_terms())
    obj.emplace_back(remap[static_cast<size_t>(s)], c);
  lp.set_objective(prob.sense(), std::move(obj));

  Report sub = solve_general(lp, opts, true);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if (remap[static_cast<size_t>(i)] >= 0) x(i) = sub.scalars(remap[static_cast<size_t>(i)]);
  for (const auto& p : prob.pencils()) {
    if (p.moment_entries.size() == 0) continue;
    const auto& E = p.moment_entries;
    double corner = x(E(0, 0));
    if (std::abs(corner) < 1e-300) corner = 1.0;
    for (int i = 1; i < p.dim; ++i)
      for (int j = 1; j <= i; ++j)
        x(E(i, j)) = x(E(i, 0)) * x(E(j, 0)) / corner;
  }
  Report rep = finish_report(prob, x, sub.status);
  rep.value = prob.objective_at(x);
  rep.gap = sub.gap;
  rep.primal_residual = sub.primal_residual;
  rep.dual_residual = sub.dual_residual;
  rep.iterations = sub.iterations;
  rep.message = sub.message;
  rep.lp_fastpath = true;
  return rep;
}

}  // namespace

Report solve(const Problem& prob, const Options& opts) {
  bool linear = detect_linear(prob);
  if (linear && opts.allow_lp_fastpath) {
    bool any_marked = false;
    for (const auto& p : prob.pencils())
      if (p.moment_entries.size() > 0) any_marked = true;
    if (any_marked) return solve_lp_fastpath(prob, opts);
  }
  return solve_general(prob, opts, linear);
}

}  // namespace msos::sdp
