// Conic solver gateway: linear objective over scalar variables subject to
// affine linear-matrix-inequality blocks, free PSD blocks and linear
// equalities, solved by an embedded dense primal-dual interior-point kernel
// with Nesterov-Todd scaling. The all-linear case is detected and solved as
// a linear program. Problems can be exported in a sparse SDPA-like text
// format for cross-checking against external solvers.
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace msos::sdp {

enum class Sense { Min, Max };

enum class Status {
  Optimal,
  Infeasible,
  Unbounded,
  MaxIterations,
  NumericalFailure,
};

const char* status_name(Status s);

struct Options {
  double tol = 1e-8;
  int max_iter = 150;
  bool verbose = false;
  bool allow_lp_fastpath = true;
};

struct Report {
  Status status = Status::NumericalFailure;
  double value = 0.0;
  Eigen::VectorXd scalars;  // every declared scalar, incl. free-block entries
  std::vector<Eigen::MatrixXd> pencil_values;
  std::vector<Eigen::MatrixXd> free_block_values;
  // Attained relative tolerances.
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool lp_fastpath = false;
  std::string message;

  bool ok() const { return status == Status::Optimal; }
};

// Block-structured conic program over scalar variables x:
//   min/max  c'x
//   s.t.     C_b + sum_i x_i A_{b,i}  PSD   (pencil blocks)
//            Z_k PSD                        (free blocks; entries are scalars)
//            E x = e
class Problem {
 public:
  struct Term {
    int row, col;  // row >= col
    double value;
  };
  struct Pencil {
    int dim = 0;
    std::vector<Term> constant;
    std::vector<std::pair<int, std::vector<Term>>> terms;  // scalar -> triplets
    Eigen::MatrixXd reduction;  // empty when unused
    bool is_free_block = false;
    Eigen::MatrixXi moment_entries;  // nonempty when marked as moment pencil
    std::vector<Term>& terms_for(int scalar);
  };
  struct FreeBlock {
    int dim = 0;
    int scalar0 = 0;  // svec layout: column-major lower triangle
    int pencil = 0;
  };
  struct EqRow {
    double rhs = 0.0;
    std::vector<std::pair<int, double>> terms;
  };
  struct Subst {
    int target = 0;
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;
  };

  int add_scalar();
  int add_scalars(int count);
  int scalar_count() const { return nscalars_; }

  int add_pencil_block(int dim);
  int pencil_count() const { return static_cast<int>(pencils_.size()); }
  int pencil_dim(int blk) const { return pencils_.at(blk).dim; }
  void pencil_add_constant(int blk, int row, int col, double v);
  void pencil_add_term(int blk, int scalar, int row, int col, double v);
  // Known invariant subspace: the block is solved as Q' (.) Q with Q having
  // orthonormal columns.
  void pencil_set_reduction(int blk, Eigen::MatrixXd Q);
  // Marks an order-1 moment pencil whose entries are exactly the given
  // scalars (entries(i,j) = scalar id); enables the linear-program fast
  // path when its interior is otherwise unreferenced.
  void pencil_mark_moment(int blk, Eigen::MatrixXi entries);

  // Free PSD block; creates dim*(dim+1)/2 dedicated scalars.
  int add_free_psd_block(int dim);
  int free_block_count() const { return static_cast<int>(free_blocks_.size()); }
  int free_block_dim(int fb) const { return free_blocks_.at(fb).dim; }
  int free_block_scalar(int fb, int row, int col) const;

  int add_equality(double rhs);
  int equality_count() const { return static_cast<int>(equalities_.size()); }
  void equality_add_term(int eq, int scalar, double coef);
  // <F, Z_fb> contribution expanded onto the block's entry scalars.
  void equality_add_block_term(int eq, int fb, const Eigen::MatrixXd& F);

  // Exact triangular substitution scalar = sum coef*ref + constant. Every
  // referenced scalar must be free or the target of an earlier substitution;
  // eliminated exactly before the solve. Cheaper than an equality row when
  // the builder knows the triangular structure.
  void add_substitution(int scalar, std::vector<std::pair<int, double>> terms,
                        double constant);
  int substitution_count() const { return static_cast<int>(substitutions_.size()); }

  void set_objective(Sense sense, std::vector<std::pair<int, double>> terms);
  Sense sense() const { return sense_; }

  // Max violation of all constraints at a full scalar assignment:
  // max(equality residual, most negative pencil/free-block eigenvalue).
  double constraint_residual(const Eigen::VectorXd& scalars) const;

  double objective_at(const Eigen::VectorXd& scalars) const;

  void export_sdpa(std::ostream& os) const;

  const std::vector<Pencil>& pencils() const { return pencils_; }
  const std::vector<FreeBlock>& free_blocks() const { return free_blocks_; }
  const std::vector<EqRow>& equalities() const { return equalities_; }
  const std::vector<Subst>& substitutions() const { return substitutions_; }
  const std::vector<std::pair<int, double>>& objective_terms() const {
    return objective_;
  }
  Eigen::MatrixXd pencil_value(const Pencil& p,
                               const Eigen::VectorXd& scalars) const;

 private:
  int nscalars_ = 0;
  std::vector<Pencil> pencils_;
  std::vector<FreeBlock> free_blocks_;
  std::vector<EqRow> equalities_;
  std::vector<Subst> substitutions_;
  Sense sense_ = Sense::Min;
  std::vector<std::pair<int, double>> objective_;
};

// True when every pencil is 1x1 or an eliminable marked moment block, there
// are no free blocks of dimension >= 2, and nothing else references a
// marked block's interior entries.
bool detect_linear(const Problem& p);

Report solve(const Problem& p, const Options& opts = {});

}  // namespace msos::sdp
