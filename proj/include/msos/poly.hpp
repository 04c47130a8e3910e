// Sparse multivariate polynomials, rational functions and basic
// semi-algebraic sets. Values are immutable after construction and safe to
// share between threads.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msos::poly {

// Exponent vector of a monomial. Length equals the ambient variable count.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(int nvars) : exps_(static_cast<size_t>(nvars), 0) {}
  explicit Monomial(std::vector<int> exps) : exps_(std::move(exps)) {
    for (int e : exps_)
      if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
  }

  int nvars() const { return static_cast<int>(exps_.size()); }
  int degree() const {
    int d = 0;
    for (int e : exps_) d += e;
    return d;
  }
  int exp(int i) const { return exps_.at(static_cast<size_t>(i)); }
  const std::vector<int>& exps() const { return exps_; }

  // Exponent-wise sum (monomial product).
  Monomial times(const Monomial& o) const;

  bool operator==(const Monomial& o) const { return exps_ == o.exps_; }
  bool operator!=(const Monomial& o) const { return !(*this == o); }

  std::string str() const;

 private:
  std::vector<int> exps_;
};

// Graded lexicographic order: lower total degree first; ties broken so that
// earlier variables come first (1, x1, x2, ..., x1^2, x1 x2, ...).
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return a.exps() > b.exps();
  }
};

// Sparse polynomial in canonical form: no duplicate monomials, no stored
// zero coefficients, terms ordered graded-lex.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GrlexLess>;

  Polynomial() : nvars_(0) {}
  explicit Polynomial(int nvars) : nvars_(nvars) {
    if (nvars < 0) throw std::invalid_argument("Polynomial: nvars < 0");
  }

  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int i);
  static Polynomial monomial(Monomial m, double c);

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  // Total degree; the zero polynomial reports 0.
  int degree() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
  }
  bool is_constant() const { return degree() == 0; }
  bool is_affine() const { return degree() <= 1; }
  double constant_term() const;
  const TermMap& terms() const { return terms_; }
  size_t term_count() const { return terms_.size(); }

  // Accumulates c * m and drops the entry if it cancels to zero.
  void add_term(const Monomial& m, double c);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const { return scaled(-1.0); }
  Polynomial scaled(double s) const;

  double eval(std::span<const double> point) const;

  // Same polynomial over a larger variable space; variable i maps to
  // offset + i.
  Polynomial embedded(int new_nvars, int offset) const;

  // Max absolute coefficient (0 for the zero polynomial).
  double coeff_inf_norm() const;

  bool same_as(const Polynomial& o, double tol = 0.0) const;

  std::string str() const;

 private:
  int nvars_;
  TermMap terms_;
};

Polynomial operator*(double s, const Polynomial& p);

// Numerator/denominator pair. Positivity of the denominator on the ambient
// set is the caller's obligation (see verify_positive_samples); problem
// constructors run that check before use.
class RationalFunction {
 public:
  RationalFunction() = default;
  RationalFunction(Polynomial num, Polynomial den);
  explicit RationalFunction(Polynomial num);  // denominator 1

  const Polynomial& num() const { return num_; }
  const Polynomial& den() const { return den_; }
  int nvars() const { return num_.nvars(); }
  bool has_unit_denominator() const;

  double eval(std::span<const double> point) const;

  RationalFunction embedded(int new_nvars, int offset) const;

 private:
  Polynomial num_, den_;
};

// K = {x : g_j(x) >= 0}. An optional ball bound appends M - |x|^2 >= 0.
class SemiAlgebraicSet {
 public:
  SemiAlgebraicSet() : nvars_(0) {}
  explicit SemiAlgebraicSet(int nvars) : nvars_(nvars) {}
  SemiAlgebraicSet(int nvars, std::vector<Polynomial> constraints,
                   std::optional<double> ball_radius = std::nullopt);

  int nvars() const { return nvars_; }
  const std::vector<Polynomial>& constraints() const { return constraints_; }
  std::optional<double> ball_radius() const { return ball_radius_; }

  void add_constraint(Polynomial g);

  // Constraint list with the ball bound (if any) appended.
  std::vector<Polynomial> effective_constraints() const;

  bool contains(std::span<const double> point, double tol) const;

 private:
  int nvars_;
  std::vector<Polynomial> constraints_;
  std::optional<double> ball_radius_;
};

// Axis-aligned box used for sampling and interval bounds.
struct Box {
  std::vector<double> lo, hi;
  int nvars() const { return static_cast<int>(lo.size()); }
};

// Deterministic Halton points in the box (skips an initial burn-in).
std::vector<std::vector<double>> halton_box(const Box& box, int count,
                                            int skip = 16);

// Quasi-random points of K obtained by projecting box samples onto any
// detected affine equality pairs (g and -g both constraints) and filtering
// by membership. May return fewer than `count` points.
std::vector<std::vector<double>> sample_set(const SemiAlgebraicSet& K,
                                            const Box& box, int count,
                                            double tol = 1e-9);

struct PositivityReport {
  bool positive = false;   // all samples strictly positive
  double min_value = 0.0;  // smallest sampled value
  int samples = 0;
};

// Sample-based check that q > 0 on K: Halton points of the box projected
// into K plus bisected constraint-boundary points.
PositivityReport verify_positive_samples(const Polynomial& q,
                                         const SemiAlgebraicSet& K,
                                         const Box& box, int count = 1000);

// Interval-arithmetic range of p over the box (term-wise enclosure).
std::pair<double, double> interval_range(const Polynomial& p, const Box& box);

}  // namespace msos::poly
