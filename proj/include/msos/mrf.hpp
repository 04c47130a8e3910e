// Minimization of f0 + max_i f_i over a compact basic semi-algebraic set,
// for rational f_i with denominators positive on the set: lifting with an
// extra variable, valid branch bounds, the moment relaxation hierarchy, a
// flatness certificate and minimizer extraction.
#pragma once

#include <optional>

#include "msos/atoms.hpp"
#include "msos/moment.hpp"
#include "msos/poly.hpp"
#include "msos/sdp.hpp"

namespace msos::mrf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Bounds {
  double M1 = 0.0;  // upper bound on every branch value over the set
  double M2 = 0.0;  // lower bound
};

enum class BoundMode { Auto, Interval, Relaxation, User };

class MrfProblem {
 public:
  // Verifies at construction that every non-constant denominator is
  // positive on K (sampled; certified bounds are available separately).
  MrfProblem(poly::SemiAlgebraicSet K, poly::RationalFunction f0,
             std::vector<poly::RationalFunction> branches,
             std::optional<poly::Box> box = std::nullopt,
             std::optional<Bounds> bounds = std::nullopt);

  const poly::SemiAlgebraicSet& K() const { return K_; }
  const poly::RationalFunction& f0() const { return f0_; }
  const std::vector<poly::RationalFunction>& branches() const {
    return branches_;
  }
  const std::optional<poly::Box>& box() const { return box_; }
  const std::optional<Bounds>& user_bounds() const { return bounds_; }
  int nx() const { return K_.nvars(); }

  double objective_at(std::span<const double> x) const;

 private:
  poly::SemiAlgebraicSet K_;
  poly::RationalFunction f0_;
  std::vector<poly::RationalFunction> branches_;
  std::optional<poly::Box> box_;
  std::optional<Bounds> bounds_;
};

// Valid over/under-estimates of the branch range over K. Interval mode uses
// term-wise enclosures over the problem box; relaxation mode certifies the
// four per-branch bounds with low-order moment relaxations.
Bounds compute_bounds(const MrfProblem& prob, BoundMode mode,
                      std::optional<Bounds> user = std::nullopt);

struct LiftedMrf {
  poly::SemiAlgebraicSet khat;  // without the branch-bound constraint
  bool has_z = false;
  int nx = 0;
  poly::Polynomial h0;  // p0 + z q0 over the lifted variables
  poly::Polynomial q0;  // normalization weight
  Bounds bounds;
  bool all_affine = false;  // affine data and unit denominators
  int r0 = 1;

  int nvars() const { return nx + (has_z ? 1 : 0); }
  // The z-range constraint, as the single quadratic or the affine pair.
  std::vector<poly::Polynomial> bound_constraints() const;
};

LiftedMrf lift(const MrfProblem& prob, Bounds bounds);

struct Relaxation {
  sdp::Problem problem;
  moment::MonomialBasis ybasis;
  std::vector<int> y;
  int moment_block = -1;
  int r = 0;
  int nvars = 0;
};

Relaxation build_relaxation(const LiftedMrf& lifted, int r);

struct OrderReport {
  int r = 0;
  sdp::Status status = sdp::Status::NumericalFailure;
  double value = std::numeric_limits<double>::quiet_NaN();
  int rank_high = -1, rank_low = -1;
  bool flat = false;
  bool lp_path = false;
  double gap = 0.0, primal_residual = 0.0, dual_residual = 0.0;
  int iterations = 0;
  bool usable = false;
  std::string message;
};

struct HierarchyReport {
  std::vector<OrderReport> orders;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;        // flat test passed and atoms extracted
  bool value_converged = false;  // consecutive orders agree, no certificate
  std::optional<atoms::AtomicMeasure> minimizers;    // projected to x
  std::optional<atoms::AtomicMeasure> lifted_atoms;  // over (x, z)
  std::vector<double> first_order_point;
  std::optional<moment::MomentVector> moments;
  Bounds bounds_used;
  int r0 = 0;
  std::string message;

  bool any_solved() const;
};

struct SolveOptions {
  int r_start = 0;  // 0 starts at the lift order r0
  int r_max = 0;    // 0 selects max(r_start, r0) + 3
  double tol = 1e-8;
  double rank_tol = 1e-6;
  std::optional<double> perturb;
  std::uint64_t seed = 0;
  BoundMode bound_mode = BoundMode::Auto;
  std::optional<Bounds> bounds;
  int max_iter = 150;
  bool verbose = false;
  bool concurrent_orders = false;
};

HierarchyReport solve_hierarchy(const MrfProblem& prob,
                                const SolveOptions& opts = {});

// Certified lower bound of min q over K from the order-r moment relaxation;
// nullopt when the solve fails.
std::optional<double> certified_lower_bound(const poly::Polynomial& q,
                                            const poly::SemiAlgebraicSet& K,
                                            int order, double tol = 1e-8);

}  // namespace msos::mrf
