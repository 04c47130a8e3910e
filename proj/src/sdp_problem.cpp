#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "msos/sdp.hpp"

namespace msos::sdp {

const char* status_name(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::MaxIterations: return "max-iterations";
    case Status::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

int Problem::add_scalar() { return nscalars_++; }

int Problem::add_scalars(int count) {
  int first = nscalars_;
  nscalars_ += count;
  return first;
}

int Problem::add_pencil_block(int dim) {
  if (dim <= 0) throw std::invalid_argument("pencil dim must be positive");
  Pencil p;
  p.dim = dim;
  pencils_.push_back(std::move(p));
  return static_cast<int>(pencils_.size()) - 1;
}

std::vector<Problem::Term>& Problem::Pencil::terms_for(int scalar) {
  for (auto& [s, t] : terms)
    if (s == scalar) return t;
  terms.emplace_back(scalar, std::vector<Term>{});
  return terms.back().second;
}

namespace {
void add_triplet(std::vector<Problem::Term>& ts, int row, int col, double v) {
  if (v == 0.0) return;
  if (row < col) std::swap(row, col);
  for (auto& t : ts) {
    if (t.row == row && t.col == col) {
      t.value += v;
      return;
    }
  }
  ts.push_back({row, col, v});
}
}  // namespace

void Problem::pencil_add_constant(int blk, int row, int col, double v) {
  auto& p = pencils_.at(blk);
  if (row >= p.dim || col >= p.dim || row < 0 || col < 0)
    throw std::invalid_argument("pencil_add_constant: index out of range");
  add_triplet(p.constant, row, col, v);
}

void Problem::pencil_add_term(int blk, int scalar, int row, int col, double v) {
  auto& p = pencils_.at(blk);
  if (scalar < 0 || scalar >= nscalars_)
    throw std::invalid_argument("pencil_add_term: undeclared scalar");
  if (row >= p.dim || col >= p.dim || row < 0 || col < 0)
    throw std::invalid_argument("pencil_add_term: index out of range");
  add_triplet(p.terms_for(scalar), row, col, v);
}

void Problem::pencil_set_reduction(int blk, Eigen::MatrixXd Q) {
  auto& p = pencils_.at(blk);
  if (Q.rows() != p.dim)
    throw std::invalid_argument("pencil_set_reduction: row count mismatch");
  p.reduction = std::move(Q);
}

void Problem::pencil_mark_moment(int blk, Eigen::MatrixXi entries) {
  auto& p = pencils_.at(blk);
  if (entries.rows() != p.dim || entries.cols() != p.dim)
    throw std::invalid_argument("pencil_mark_moment: shape mismatch");
  p.moment_entries = std::move(entries);
}

int Problem::add_free_psd_block(int dim) {
  if (dim <= 0) throw std::invalid_argument("free block dim must be positive");
  FreeBlock fb;
  fb.dim = dim;
  fb.scalar0 = add_scalars(dim * (dim + 1) / 2);
  fb.pencil = add_pencil_block(dim);
  auto& p = pencils_.back();
  p.is_free_block = true;
  int k = fb.scalar0;
  for (int c = 0; c < dim; ++c)
    for (int r = c; r < dim; ++r) add_triplet(p.terms_for(k++), r, c, 1.0);
  free_blocks_.push_back(fb);
  return static_cast<int>(free_blocks_.size()) - 1;
}

int Problem::free_block_scalar(int fb, int row, int col) const {
  const auto& b = free_blocks_.at(fb);
  if (row < col) std::swap(row, col);
  if (row >= b.dim || col < 0)
    throw std::invalid_argument("free_block_scalar: index out of range");
  // Column-major lower triangle offset.
  int off = col * b.dim - col * (col - 1) / 2 + (row - col);
  return b.scalar0 + off;
}

int Problem::add_equality(double rhs) {
  equalities_.push_back({rhs, {}});
  return static_cast<int>(equalities_.size()) - 1;
}

void Problem::equality_add_term(int eq, int scalar, double coef) {
  if (scalar < 0 || scalar >= nscalars_)
    throw std::invalid_argument("equality_add_term: undeclared scalar");
  if (coef == 0.0) return;
  auto& row = equalities_.at(eq);
  for (auto& [s, c] : row.terms) {
    if (s == scalar) {
      c += coef;
      return;
    }
  }
  row.terms.emplace_back(scalar, coef);
}

void Problem::equality_add_block_term(int eq, int fb, const Eigen::MatrixXd& F) {
  const auto& b = free_blocks_.at(fb);
  if (F.rows() != b.dim || F.cols() != b.dim)
    throw std::invalid_argument("equality_add_block_term: shape mismatch");
  for (int c = 0; c < b.dim; ++c) {
    equality_add_term(eq, free_block_scalar(fb, c, c), F(c, c));
    for (int r = c + 1; r < b.dim; ++r)
      equality_add_term(eq, free_block_scalar(fb, r, c), F(r, c) + F(c, r));
  }
}

void Problem::add_substitution(int scalar,
                               std::vector<std::pair<int, double>> terms,
                               double constant) {
  if (scalar < 0 || scalar >= nscalars_)
    throw std::invalid_argument("add_substitution: undeclared scalar");
  for (auto& [s, c] : terms)
    if (s < 0 || s >= nscalars_)
      throw std::invalid_argument("add_substitution: undeclared reference");
  substitutions_.push_back({scalar, std::move(terms), constant});
}

void Problem::set_objective(Sense sense,
                            std::vector<std::pair<int, double>> terms) {
  for (auto& [s, c] : terms)
    if (s < 0 || s >= nscalars_)
      throw std::invalid_argument("set_objective: undeclared scalar");
  sense_ = sense;
  objective_ = std::move(terms);
}

Eigen::MatrixXd Problem::pencil_value(const Pencil& p,
                                      const Eigen::VectorXd& scalars) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p.dim, p.dim);
  auto put = [&M](const Term& t, double mult) {
    M(t.row, t.col) += mult * t.value;
    if (t.row != t.col) M(t.col, t.row) += mult * t.value;
  };
  for (const auto& t : p.constant) put(t, 1.0);
  for (const auto& [s, ts] : p.terms)
    for (const auto& t : ts) put(t, scalars(s));
  return M;
}

double Problem::constraint_residual(const Eigen::VectorXd& scalars) const {
  if (scalars.size() != nscalars_)
    throw std::invalid_argument("constraint_residual: scalar count mismatch");
  double res = 0.0;
  for (const auto& row : equalities_) {
    double v = -row.rhs;
    for (const auto& [s, c] : row.terms) v += c * scalars(s);
    res = std::max(res, std::abs(v));
  }
  for (const auto& sub : substitutions_) {
    double v = sub.constant - scalars(sub.target);
    for (const auto& [s, c] : sub.terms) v += c * scalars(s);
    res = std::max(res, std::abs(v));
  }
  for (const auto& p : pencils_) {
    Eigen::MatrixXd M = pencil_value(p, scalars);
    if (p.dim == 1) {
      res = std::max(res, -M(0, 0));
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                        Eigen::EigenvaluesOnly);
      res = std::max(res, -es.eigenvalues().minCoeff());
    }
  }
  return res;
}

double Problem::objective_at(const Eigen::VectorXd& scalars) const {
  double v = 0.0;
  for (const auto& [s, c] : objective_) v += c * scalars(s);
  return v;
}

bool detect_linear(const Problem& p) {
  // Usage counts of each scalar outside marked moment-block interiors.
  std::vector<int> outside(static_cast<size_t>(p.scalar_count()), 0);
  for (const auto& row : p.equalities())
    for (const auto& [s, c] : row.terms) outside[static_cast<size_t>(s)]++;
  for (const auto& sub : p.substitutions()) {
    outside[static_cast<size_t>(sub.target)]++;
    for (const auto& [s, c] : sub.terms) outside[static_cast<size_t>(s)]++;
  }
  for (const auto& [s, c] : p.objective_terms()) outside[static_cast<size_t>(s)]++;
  bool any_marked = false;
  for (const auto& pen : p.pencils()) {
    bool marked = pen.moment_entries.size() > 0;
    if (marked) {
      any_marked = true;
      continue;
    }
    if (pen.dim > 1) return false;  // includes free blocks of dim >= 2
    for (const auto& [s, ts] : pen.terms) outside[static_cast<size_t>(s)]++;
  }
  for (const auto& pen : p.pencils()) {
    if (pen.moment_entries.size() == 0) continue;
    const auto& E = pen.moment_entries;
    // Interior entries must appear nowhere else; the corner scalar must be
    // pinned by a singleton equality to a positive value.
    for (int i = 1; i < pen.dim; ++i)
      for (int j = 1; j <= i; ++j)
        if (outside[static_cast<size_t>(E(i, j))] > 0) return false;
    bool pinned = false;
    for (const auto& row : p.equalities()) {
      if (row.terms.size() == 1 && row.terms[0].first == E(0, 0) &&
          row.rhs / row.terms[0].second > 0)
        pinned = true;
    }
    if (!pinned) return false;
  }
  (void)any_marked;
  return true;
}

void Problem::export_sdpa(std::ostream& os) const {
  // Sparse SDPA-like dump of the problem as stated: one block per pencil
  // (free blocks included; their entries are ordinary scalar variables) and
  // a final diagonal block holding each equality as an opposing pair.
  os << "* msos SDP export\n";
  os << "* sense: " << (sense_ == Sense::Min ? "min" : "max")
     << " (coefficients below are for the minimization form)\n";
  os << nscalars_ << " = mdim\n";
  size_t neq = equalities_.size() + substitutions_.size();
  int nblocks = static_cast<int>(pencils_.size()) + (neq == 0 ? 0 : 1);
  os << nblocks << " = nblocks\n";
  for (size_t b = 0; b < pencils_.size(); ++b)
    os << (pencils_[b].dim == 1 ? -1 : pencils_[b].dim)
       << (b + 1 < pencils_.size() || neq != 0 ? " " : "");
  if (neq != 0) os << -2 * static_cast<int>(neq);
  os << "\n";
  double sgn = sense_ == Sense::Min ? 1.0 : -1.0;
  std::vector<double> c(static_cast<size_t>(nscalars_), 0.0);
  for (const auto& [s, v] : objective_) c[static_cast<size_t>(s)] = sgn * v;
  for (int i = 0; i < nscalars_; ++i)
    os << c[static_cast<size_t>(i)] << (i + 1 < nscalars_ ? " " : "");
  os << "\n";
  // Entries: "matno blockno i j value", matno 0 is F0 = -constant.
  for (size_t b = 0; b < pencils_.size(); ++b) {
    for (const auto& t : pencils_[b].constant)
      os << 0 << " " << b + 1 << " " << t.col + 1 << " " << t.row + 1 << " "
         << -t.value << "\n";
    for (const auto& [s, ts] : pencils_[b].terms)
      for (const auto& t : ts)
        os << s + 1 << " " << b + 1 << " " << t.col + 1 << " " << t.row + 1
           << " " << t.value << "\n";
  }
  if (neq != 0) {
    int blk = nblocks;
    auto emit_row = [&](size_t e, double rhs,
                        const std::vector<std::pair<int, double>>& terms) {
      int d1 = static_cast<int>(2 * e) + 1, d2 = d1 + 1;
      if (rhs != 0.0) {
        os << 0 << " " << blk << " " << d1 << " " << d1 << " " << rhs << "\n";
        os << 0 << " " << blk << " " << d2 << " " << d2 << " " << -rhs << "\n";
      }
      for (const auto& [s, v] : terms) {
        os << s + 1 << " " << blk << " " << d1 << " " << d1 << " " << v << "\n";
        os << s + 1 << " " << blk << " " << d2 << " " << d2 << " " << -v
           << "\n";
      }
    };
    size_t e = 0;
    for (const auto& row : equalities_) emit_row(e++, row.rhs, row.terms);
    for (const auto& sub : substitutions_) {
      auto terms = sub.terms;
      terms.emplace_back(sub.target, -1.0);
      emit_row(e++, -sub.constant, terms);
    }
  }
}

}  // namespace msos::sdp
