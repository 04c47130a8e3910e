#include "msos/atoms.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <sstream>

namespace msos::atoms {

int numeric_rank(const Eigen::MatrixXd& M, double rank_tol) {
  if (M.rows() != M.cols())
    throw std::invalid_argument("numeric_rank: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  double emax = ev.maxCoeff();
  if (ev.minCoeff() < -1e-6 * std::max(1.0, emax))
    throw std::invalid_argument("numeric_rank: matrix is not numerically PSD");
  double cut = rank_tol * std::max(emax, 1.0);
  int r = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > cut) ++r;
  return r;
}

std::optional<int> flat_test(const moment::MomentVector& y, int d, int r0,
                             double rank_tol) {
  if (r0 < 0 || r0 > d) throw std::invalid_argument("flat_test: bad r0");
  int rhi = numeric_rank(moment::moment_matrix(y, d), rank_tol);
  int rlo = numeric_rank(moment::moment_matrix(y, d - r0), rank_tol);
  if (rhi == rlo) return rhi;
  return std::nullopt;
}

AtomicMeasure extract_atoms(const moment::MomentVector& y, int d, int t,
                            double rank_tol, std::uint64_t seed) {
  (void)rank_tol;
  const int n = y.nvars();
  moment::MonomialBasis rows(n, d);
  Eigen::MatrixXd M = moment::moment_matrix(y, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (t <= 0 || t > rows.size())
    throw std::invalid_argument("extract_atoms: bad rank");

  // Rank-t factor V with M ~ V V'.
  Eigen::MatrixXd V(rows.size(), t);
  for (int k = 0; k < t; ++k) {
    int idx = rows.size() - 1 - k;  // eigenvalues ascending
    double ev = es.eigenvalues()(idx);
    if (ev <= 0)
      throw ExtractionError("extract_atoms: nonpositive leading eigenvalue");
    V.col(k) = es.eigenvectors().col(idx) * std::sqrt(ev);
  }

  // Column echelon form of V' over monomial columns in graded-lex order.
  Eigen::MatrixXd W = V.transpose();  // t x basis
  std::vector<int> pivots;
  double wmax = W.cwiseAbs().maxCoeff();
  int r = 0;
  for (int c = 0; c < rows.size() && r < t; ++c) {
    int imax = r;
    for (int i = r; i < t; ++i)
      if (std::abs(W(i, c)) > std::abs(W(imax, c))) imax = i;
    if (std::abs(W(imax, c)) <= 1e-7 * std::max(1.0, wmax)) continue;
    W.row(r).swap(W.row(imax));
    W.row(r) /= W(r, c);
    for (int i = 0; i < t; ++i) {
      if (i == r) continue;
      W.row(i) -= W(i, c) * W.row(r);
    }
    pivots.push_back(c);
    ++r;
  }
  if (r < t)
    throw ExtractionError("extract_atoms: echelon rank below requested rank");
  for (int k = 0; k < t; ++k)
    if (rows.at(pivots[static_cast<size_t>(k)]).degree() + 1 > d)
      throw ExtractionError("extract_atoms: pivot degree too high");

  // Multiplication operators N_v on the pivot basis.
  std::vector<Eigen::MatrixXd> N(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) {
    N[static_cast<size_t>(v)].resize(t, t);
    for (int k = 0; k < t; ++k) {
      std::vector<int> e = rows.at(pivots[static_cast<size_t>(k)]).exps();
      e[static_cast<size_t>(v)] += 1;
      int col = rows.index_of(poly::Monomial(e));
      N[static_cast<size_t>(v)].col(k) = W.col(col);
    }
  }

  // Simultaneous diagonalization through a seeded random combination.
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Eigen::VectorXd c(n);
  for (int v = 0; v < n; ++v) c(v) = unif(rng);
  c /= c.sum();
  Eigen::MatrixXd Nc = Eigen::MatrixXd::Zero(t, t);
  for (int v = 0; v < n; ++v) Nc += c(v) * N[static_cast<size_t>(v)];
  Eigen::RealSchur<Eigen::MatrixXd> schur(Nc);
  const Eigen::MatrixXd& T = schur.matrixT();
  const Eigen::MatrixXd& Q = schur.matrixU();
  double tscale = std::max(1.0, T.cwiseAbs().maxCoeff());
  for (int i = 0; i + 1 < t; ++i)
    if (std::abs(T(i + 1, i)) > 1e-5 * tscale)
      throw ExtractionError(
          "extract_atoms: complex cluster in simultaneous diagonalization");

  AtomicMeasure out;
  out.atoms.assign(static_cast<size_t>(t),
                   std::vector<double>(static_cast<size_t>(n)));
  for (int k = 0; k < t; ++k)
    for (int v = 0; v < n; ++v)
      out.atoms[static_cast<size_t>(k)][static_cast<size_t>(v)] =
          Q.col(k).dot(N[static_cast<size_t>(v)] * Q.col(k));

  for (int a = 0; a < t; ++a)
    for (int b = a + 1; b < t; ++b) {
      double dist = 0;
      for (int v = 0; v < n; ++v)
        dist = std::max(
            dist,
            std::abs(out.atoms[static_cast<size_t>(a)][static_cast<size_t>(v)] -
                     out.atoms[static_cast<size_t>(b)][static_cast<size_t>(v)]));
      if (dist < 1e-9)
        throw ExtractionError("extract_atoms: coincident atoms");
    }

  // Weights by least squares over monomials of degree <= d-1, then a
  // residual audit over degree <= 2(d-1).
  auto atom_pow = [&](int k, const poly::Monomial& m) {
    double val = 1.0;
    for (int v = 0; v < n; ++v)
      for (int e = 0; e < m.exp(v); ++e)
        val *= out.atoms[static_cast<size_t>(k)][static_cast<size_t>(v)];
    return val;
  };
  moment::MonomialBasis wrows(n, d - 1);
  Eigen::MatrixXd A(wrows.size(), t);
  Eigen::VectorXd b(wrows.size());
  for (int i = 0; i < wrows.size(); ++i) {
    for (int k = 0; k < t; ++k) A(i, k) = atom_pow(k, wrows.at(i));
    b(i) = y[wrows.at(i)];
  }
  Eigen::VectorXd w = A.colPivHouseholderQr().solve(b);

  double yscale = std::max(1.0, b.cwiseAbs().maxCoeff());
  moment::MonomialBasis audit(n, 2 * (d - 1));
  double resid = 0.0;
  for (int i = 0; i < audit.size(); ++i) {
    const auto& m = audit.at(i);
    double val = -y[m];
    for (int k = 0; k < t; ++k) val += w(k) * atom_pow(k, m);
    resid = std::max(resid, std::abs(val));
  }
  if (resid > 1e-4 * yscale) {
    std::ostringstream os;
    os << "extract_atoms: moment residual " << resid
       << " signals rank misdetection";
    throw ExtractionError(os.str());
  }
  double wsum = w.sum();
  if (wsum <= 0 || w.minCoeff() < -1e-4 * std::abs(wsum))
    throw ExtractionError("extract_atoms: weight solve produced negative mass");
  double clipped = 0.0;
  for (int k = 0; k < t; ++k) clipped += std::max(w(k), 0.0);
  for (int k = 0; k < t; ++k)
    out.weights.push_back(std::max(w(k), 0.0) / clipped);
  return out;
}

}  // namespace msos::atoms
