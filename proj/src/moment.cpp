#include "msos/moment.hpp"

#include <mutex>
#include <sstream>
#include <unordered_map>

namespace msos::moment {

namespace {

void enumerate_monomials(int nvars, int maxdeg,
                         std::vector<poly::Monomial>& out) {
  // Generate degree by degree so the graded-lex order comes out directly.
  std::vector<int> e(static_cast<size_t>(nvars), 0);
  for (int d = 0; d <= maxdeg; ++d) {
    // First exponent vector of degree d in descending-lex order: (d,0,...,0).
    std::fill(e.begin(), e.end(), 0);
    if (nvars == 0) {
      if (d == 0) out.emplace_back(e);
      continue;
    }
    e[0] = d;
    while (true) {
      out.emplace_back(e);
      // Next vector of the same total degree, lexicographically smaller.
      int k = nvars - 2;
      while (k >= 0 && e[static_cast<size_t>(k)] == 0) --k;
      if (k < 0) break;
      int tail = e[static_cast<size_t>(nvars - 1)];
      e[static_cast<size_t>(k)] -= 1;
      e[static_cast<size_t>(k + 1)] = tail + 1;
      if (k + 1 != nvars - 1) e[static_cast<size_t>(nvars - 1)] = 0;
    }
  }
}

}  // namespace

int basis_size(int nvars, int maxdeg) {
  // C(nvars + maxdeg, maxdeg) without overflow at desk scale.
  long long r = 1;
  for (int i = 1; i <= nvars; ++i) r = r * (maxdeg + i) / i;
  return static_cast<int>(r);
}

MonomialBasis::MonomialBasis(int nvars, int maxdeg)
    : nvars_(nvars), maxdeg_(maxdeg) {
  if (nvars < 0 || maxdeg < 0)
    throw std::invalid_argument("MonomialBasis: bad arguments");
  enumerate_monomials(nvars, maxdeg, monos_);
  for (int i = 0; i < static_cast<int>(monos_.size()); ++i)
    index_.emplace(monos_[static_cast<size_t>(i)], i);
}

int MonomialBasis::index_of(const poly::Monomial& m) const {
  auto it = index_.find(m);
  if (it == index_.end())
    throw std::out_of_range("MonomialBasis: monomial outside basis: " +
                            m.str());
  return it->second;
}

std::optional<int> MonomialBasis::find(const poly::Monomial& m) const {
  auto it = index_.find(m);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

MomentVector::MomentVector(int nvars, int order)
    : basis_(nvars, order), values_(Eigen::VectorXd::Zero(basis_.size())) {}

double MomentVector::riesz(const poly::Polynomial& f) const {
  if (f.nvars() != nvars())
    throw std::invalid_argument("riesz: nvars mismatch");
  if (f.degree() > order())
    throw std::invalid_argument("riesz: degree exceeds moment order");
  double acc = 0.0;
  for (const auto& [m, c] : f.terms()) acc += c * values_(basis_.index_of(m));
  return acc;
}

MomentVector MomentVector::of_atoms(
    const std::vector<std::vector<double>>& atoms,
    const std::vector<double>& weights, int nvars, int order) {
  if (atoms.size() != weights.size())
    throw std::invalid_argument("of_atoms: atom/weight count mismatch");
  MomentVector y(nvars, order);
  for (int i = 0; i < y.basis().size(); ++i) {
    const auto& m = y.basis().at(i);
    double v = 0.0;
    for (size_t k = 0; k < atoms.size(); ++k) {
      double t = weights[k];
      for (int j = 0; j < nvars; ++j)
        for (int e = 0; e < m.exp(j); ++e) t *= atoms[k][static_cast<size_t>(j)];
      v += t;
    }
    y.values()(i) = v;
  }
  return y;
}

Eigen::MatrixXd moment_matrix(const MomentVector& y, int d) {
  return localizing_matrix(poly::Polynomial::constant(y.nvars(), 1.0), y, d);
}

Eigen::MatrixXd localizing_matrix(const poly::Polynomial& theta,
                                  const MomentVector& y, int d) {
  if (theta.nvars() != y.nvars())
    throw std::invalid_argument("localizing_matrix: nvars mismatch");
  if (2 * d + theta.degree() > y.order())
    throw std::invalid_argument("localizing_matrix: insufficient moment order");
  MonomialBasis rows(y.nvars(), d);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows.size(), rows.size());
  for (int i = 0; i < rows.size(); ++i) {
    for (int j = 0; j <= i; ++j) {
      poly::Monomial mij = rows.at(i).times(rows.at(j));
      double v = 0.0;
      for (const auto& [g, c] : theta.terms()) v += c * y[mij.times(g)];
      M(i, j) = v;
      M(j, i) = v;
    }
  }
  return M;
}

int BasisMatrixSet::nonzero_matrix_count() const {
  int n = 0;
  for (const auto& m : mats_)
    if (!m.empty()) ++n;
  return n;
}

Eigen::MatrixXd BasisMatrixSet::dense(int alpha_index) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows_.size(), rows_.size());
  for (const auto& e : matrix(alpha_index)) {
    M(e.row, e.col) = e.value;
    M(e.col, e.row) = e.value;
  }
  return M;
}

Eigen::MatrixXd BasisMatrixSet::assemble(const Eigen::VectorXd& y) const {
  if (y.size() != alphas_.size())
    throw std::invalid_argument("BasisMatrixSet::assemble: y size mismatch");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows_.size(), rows_.size());
  for (int a = 0; a < alphas_.size(); ++a) {
    double ya = y(a);
    if (ya == 0.0) continue;
    for (const auto& e : mats_[static_cast<size_t>(a)]) {
      M(e.row, e.col) += ya * e.value;
      if (e.row != e.col) M(e.col, e.row) += ya * e.value;
    }
  }
  return M;
}

std::shared_ptr<const BasisMatrixSet> basis_matrices(
    const poly::Polynomial& theta, int d) {
  static std::mutex mu;
  static std::unordered_map<std::string, std::shared_ptr<const BasisMatrixSet>>
      cache;
  std::ostringstream key;
  key << theta.nvars() << "|" << d << "|";
  for (const auto& [m, c] : theta.terms()) {
    for (int i = 0; i < theta.nvars(); ++i) key << m.exp(i) << ",";
    key << ":" << c << ";";
  }
  {
    std::scoped_lock lock(mu);
    auto it = cache.find(key.str());
    if (it != cache.end()) return it->second;
  }

  auto set = std::make_shared<BasisMatrixSet>();
  set->rows_ = MonomialBasis(theta.nvars(), d);
  set->alphas_ = MonomialBasis(theta.nvars(), 2 * d + theta.degree());
  set->mats_.assign(static_cast<size_t>(set->alphas_.size()), {});
  const auto& rows = set->rows_;
  for (int i = 0; i < rows.size(); ++i) {
    for (int j = 0; j <= i; ++j) {
      poly::Monomial mij = rows.at(i).times(rows.at(j));
      for (const auto& [g, c] : theta.terms()) {
        int a = set->alphas_.index_of(mij.times(g));
        auto& mat = set->mats_[static_cast<size_t>(a)];
        bool found = false;
        for (auto& e : mat) {
          if (e.row == i && e.col == j) {
            e.value += c;
            found = true;
            break;
          }
        }
        if (!found) mat.push_back({i, j, c});
      }
    }
  }
  // Drop exact cancellations.
  for (auto& mat : set->mats_) {
    std::erase_if(mat, [](const BasisMatrixSet::Entry& e) {
      return e.value == 0.0;
    });
  }
  std::scoped_lock lock(mu);
  auto [it, _] = cache.emplace(key.str(), std::move(set));
  return it->second;
}

}  // namespace msos::moment
