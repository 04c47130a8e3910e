// Numeric rank tests and recovery of atomic representing measures from
// truncated moment matrices.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>

#include "msos/moment.hpp"

namespace msos::atoms {

struct AtomicMeasure {
  std::vector<std::vector<double>> atoms;
  std::vector<double> weights;  // nonnegative, normalized to sum 1
};

struct ExtractionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Count of eigenvalues above rank_tol * max(sigma_max, 1). The matrix must
// be numerically PSD (eigenvalue floor -1e-6 relative).
int numeric_rank(const Eigen::MatrixXd& M, double rank_tol);

// Returns t when rank M_d(y) = rank M_{d-r0}(y) = t.
std::optional<int> flat_test(const moment::MomentVector& y, int d, int r0,
                             double rank_tol);

// Flat-extension extraction: rank-revealing factorization of M_d(y),
// column-echelon monomial basis, per-variable multiplication operators,
// simultaneous diagonalization through a seeded random combination, then a
// least-squares weight solve. Throws ExtractionError when the eigen
// structure or the weight residual signals a rank misdetection.
AtomicMeasure extract_atoms(const moment::MomentVector& y, int d, int t,
                            double rank_tol, std::uint64_t seed = 0);

}  // namespace msos::atoms
