// Monomial bases, pseudo-moment vectors, moment and localizing matrices,
// and the symmetric basis matrices that express those matrices as linear
// functions of the moment vector.
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "msos/poly.hpp"

namespace msos::moment {

// All monomials of degree <= maxdeg in graded-lex order. Position 0 is the
// constant monomial; size is C(nvars + maxdeg, maxdeg).
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(int nvars, int maxdeg);

  int nvars() const { return nvars_; }
  int maxdeg() const { return maxdeg_; }
  int size() const { return static_cast<int>(monos_.size()); }
  const poly::Monomial& at(int i) const {
    return monos_.at(static_cast<size_t>(i));
  }
  // Throws on a monomial outside the basis.
  int index_of(const poly::Monomial& m) const;
  std::optional<int> find(const poly::Monomial& m) const;

 private:
  int nvars_ = 0, maxdeg_ = 0;
  std::vector<poly::Monomial> monos_;
  std::map<poly::Monomial, int, poly::GrlexLess> index_;
};

int basis_size(int nvars, int maxdeg);

// Truncated pseudo-moment sequence y_alpha for |alpha| <= order.
class MomentVector {
 public:
  MomentVector() = default;
  MomentVector(int nvars, int order);

  int nvars() const { return basis_.nvars(); }
  int order() const { return basis_.maxdeg(); }
  const MonomialBasis& basis() const { return basis_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  double operator[](const poly::Monomial& m) const {
    return values_(basis_.index_of(m));
  }
  void set(const poly::Monomial& m, double v) {
    values_(basis_.index_of(m)) = v;
  }

  // L_y(f) = sum f_alpha y_alpha; throws if deg f exceeds the order.
  double riesz(const poly::Polynomial& f) const;

  // Moments of the measure sum_k w_k * delta_{atoms[k]}.
  static MomentVector of_atoms(const std::vector<std::vector<double>>& atoms,
                               const std::vector<double>& weights, int nvars,
                               int order);

 private:
  MonomialBasis basis_;
  Eigen::VectorXd values_;
};

// Entry (i, j) is y_{b_i + b_j} over the degree-d basis. Requires moments
// up to 2d.
Eigen::MatrixXd moment_matrix(const MomentVector& y, int d);

// Entry (i, j) is sum_g theta_g y_{g + b_i + b_j}. Requires moments up to
// 2d + deg(theta).
Eigen::MatrixXd localizing_matrix(const poly::Polynomial& theta,
                                  const MomentVector& y, int d);

// The finitely many symmetric matrices B^theta_alpha with
// M_d(theta, y) = sum_alpha y_alpha B^theta_alpha for every y.
class BasisMatrixSet {
 public:
  struct Entry {
    int row, col;  // row >= col
    double value;
  };

  const MonomialBasis& row_basis() const { return rows_; }
  const MonomialBasis& alpha_basis() const { return alphas_; }
  // Triplet form of B_alpha (lower triangle); empty if B_alpha = 0.
  const std::vector<Entry>& matrix(int alpha_index) const {
    return mats_.at(static_cast<size_t>(alpha_index));
  }
  int nonzero_matrix_count() const;

  Eigen::MatrixXd dense(int alpha_index) const;
  // sum_alpha y(alpha) * B_alpha for y indexed by alpha_basis.
  Eigen::MatrixXd assemble(const Eigen::VectorXd& y) const;

 private:
  friend std::shared_ptr<const BasisMatrixSet> basis_matrices(
      const poly::Polynomial&, int);
  MonomialBasis rows_, alphas_;
  std::vector<std::vector<Entry>> mats_;
};

// Cached per (theta, d); the result is immutable and shared.
std::shared_ptr<const BasisMatrixSet> basis_matrices(
    const poly::Polynomial& theta, int d);

}  // namespace msos::moment
