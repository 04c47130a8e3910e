#include "relaxation.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace msos::detail {

namespace {

// Graded-lex leading term.
std::pair<poly::Monomial, double> leading_term(const poly::Polynomial& p) {
  auto it = p.terms().rbegin();
  return {it->first, it->second};
}

bool divides(const poly::Monomial& a, const poly::Monomial& b) {
  for (int i = 0; i < a.nvars(); ++i)
    if (a.exp(i) > b.exp(i)) return false;
  return true;
}

bool share_variable(const poly::Monomial& a, const poly::Monomial& b) {
  for (int i = 0; i < a.nvars(); ++i)
    if (a.exp(i) > 0 && b.exp(i) > 0) return true;
  return false;
}

void fill_pencil(sdp::Problem& P, int blk, const moment::BasisMatrixSet& B,
                 const moment::MonomialBasis& ybasis,
                 const std::vector<int>& y) {
  for (int a = 0; a < B.alpha_basis().size(); ++a) {
    const auto& mat = B.matrix(a);
    if (mat.empty()) continue;
    int ys = y[static_cast<size_t>(ybasis.index_of(B.alpha_basis().at(a)))];
    for (const auto& e : mat) P.pencil_add_term(blk, ys, e.row, e.col, e.value);
  }
}

}  // namespace

MomentSide build_moment_side(sdp::Problem& P, int nvars,
                             const std::vector<poly::Polynomial>& constraints,
                             int r) {
  MomentSide S;
  S.ybasis = moment::MonomialBasis(nvars, 2 * r);
  int y0 = P.add_scalars(S.ybasis.size());
  S.y.resize(static_cast<size_t>(S.ybasis.size()));
  for (int i = 0; i < S.ybasis.size(); ++i) S.y[static_cast<size_t>(i)] = y0 + i;

  // Opposing pairs g, -g mean equality on the support; fold them.
  const size_t m = constraints.size();
  std::vector<char> folded(m, 0), zero(m, 0);
  for (size_t j = 0; j < m; ++j) zero[j] = constraints[j].is_zero();
  for (size_t i = 0; i < m; ++i) {
    if (folded[i] || zero[i]) continue;
    for (size_t j = i + 1; j < m; ++j) {
      if (folded[j] || zero[j]) continue;
      double scale = std::max(1.0, constraints[i].coeff_inf_norm());
      if ((constraints[i] + constraints[j]).coeff_inf_norm() <= 1e-12 * scale) {
        folded[i] = folded[j] = 1;
        bool dup = false;
        for (const auto& e : S.fold_polys)
          if (e.same_as(constraints[i], 1e-12 * scale) ||
              e.same_as(-constraints[i], 1e-12 * scale))
            dup = true;
        if (!dup) S.fold_polys.push_back(constraints[i]);
        break;
      }
    }
  }

  bool full_fold = r >= 2;
  bool coprime = !S.fold_polys.empty();
  for (size_t a = 0; a < S.fold_polys.size() && coprime; ++a)
    for (size_t b = a + 1; b < S.fold_polys.size() && coprime; ++b)
      if (share_variable(leading_term(S.fold_polys[a]).first,
                         leading_term(S.fold_polys[b]).first))
        coprime = false;

  if (!S.fold_polys.empty()) {
    if (coprime) {
      // Exact triangular substitutions: every monomial divisible by a
      // leading monomial rewrites into graded-lex smaller ones. With
      // pairwise coprime leads this enforces the full truncated ideal.
      for (int mi = 0; mi < S.ybasis.size(); ++mi) {
        const auto& mono = S.ybasis.at(mi);
        for (const auto& e : S.fold_polys) {
          auto [lead, clead] = leading_term(e);
          if (!divides(lead, mono)) continue;
          if (!full_fold && mono.degree() != lead.degree()) continue;
          std::vector<int> delta(static_cast<size_t>(nvars));
          for (int v = 0; v < nvars; ++v)
            delta[static_cast<size_t>(v)] = mono.exp(v) - lead.exp(v);
          poly::Monomial dm(delta);
          std::vector<std::pair<int, double>> terms;
          for (const auto& [g, c] : e.terms()) {
            if (g == lead) continue;
            terms.emplace_back(
                S.y[static_cast<size_t>(S.ybasis.index_of(g.times(dm)))],
                -c / clead);
          }
          P.add_substitution(S.y[static_cast<size_t>(mi)], std::move(terms),
                             0.0);
          break;
        }
      }
    } else {
      for (const auto& e : S.fold_polys) {
        int cap = full_fold ? 2 * r - e.degree() : 0;
        if (cap < 0) continue;
        moment::MonomialBasis mults(nvars, cap);
        for (int k = 0; k < mults.size(); ++k) {
          int eq = P.add_equality(0.0);
          for (const auto& [g, c] : e.terms())
            P.equality_add_term(
                eq,
                S.y[static_cast<size_t>(
                    S.ybasis.index_of(g.times(mults.at(k))))],
                c);
        }
      }
    }
  }

  // Moment pencil M_r(y).
  auto B1 = moment::basis_matrices(poly::Polynomial::constant(nvars, 1.0), r);
  int mdim = B1->row_basis().size();
  S.moment_block = P.add_pencil_block(mdim);
  fill_pencil(P, S.moment_block, *B1, S.ybasis, S.y);
  Eigen::MatrixXi entries(mdim, mdim);
  for (int i = 0; i < mdim; ++i)
    for (int j = 0; j < mdim; ++j)
      entries(i, j) = S.y[static_cast<size_t>(S.ybasis.index_of(
          B1->row_basis().at(i).times(B1->row_basis().at(j))))];
  P.pencil_mark_moment(S.moment_block, std::move(entries));

  // Localizing pencils for the unfolded constraints.
  S.localizing_blocks.assign(m, -1);
  S.vdeg.assign(m, 0);
  for (size_t j = 0; j < m; ++j) {
    int v = (constraints[j].degree() + 1) / 2;
    S.vdeg[j] = v;
    if (folded[j] || zero[j]) continue;
    if (r - v < 0)
      throw std::invalid_argument(
          "order-too-small: relaxation order below constraint degree");
    auto Bg = moment::basis_matrices(constraints[j], r - v);
    int blk = P.add_pencil_block(Bg->row_basis().size());
    fill_pencil(P, blk, *Bg, S.ybasis, S.y);
    S.localizing_blocks[j] = blk;
  }

  // Invariant subspace of each pencil coming from the folded equalities:
  // multiples e * x^delta inside the row basis are structural kernel
  // vectors once the full truncated ideal is enforced.
  if (!S.fold_polys.empty() && full_fold) {
    auto reduce_block = [&](int blk, int rb) {
      if (blk < 0 || rb < 1) return;
      moment::MonomialBasis rows(nvars, rb);
      std::vector<Eigen::VectorXd> cols;
      for (const auto& e : S.fold_polys) {
        int dmax = rb - e.degree();
        if (dmax < 0) continue;
        moment::MonomialBasis mults(nvars, dmax);
        for (int k = 0; k < mults.size(); ++k) {
          Eigen::VectorXd v = Eigen::VectorXd::Zero(rows.size());
          for (const auto& [g, c] : e.terms())
            v(rows.index_of(g.times(mults.at(k)))) = c;
          cols.push_back(std::move(v));
        }
      }
      if (cols.empty()) return;
      Eigen::MatrixXd K(rows.size(), static_cast<int>(cols.size()));
      for (size_t k = 0; k < cols.size(); ++k)
        K.col(static_cast<int>(k)) = cols[k];
      Eigen::BDCSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullU);
      double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      int rank = 0;
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-9 * std::max(1.0, smax)) ++rank;
      if (rank == 0) return;
      P.pencil_set_reduction(blk, svd.matrixU().rightCols(rows.size() - rank));
    };
    reduce_block(S.moment_block, r);
    for (size_t j = 0; j < m; ++j)
      reduce_block(S.localizing_blocks[j], r - S.vdeg[j]);
  }
  return S;
}

}  // namespace msos::detail
