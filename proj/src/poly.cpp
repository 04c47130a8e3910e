#include "msos/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msos::poly {

Monomial Monomial::times(const Monomial& o) const {
  if (nvars() != o.nvars())
    throw std::invalid_argument("Monomial::times: nvars mismatch");
  std::vector<int> e(exps_);
  for (size_t i = 0; i < e.size(); ++i) e[i] += o.exps_[i];
  return Monomial(std::move(e));
}

std::string Monomial::str() const {
  std::ostringstream os;
  bool any = false;
  for (size_t i = 0; i < exps_.size(); ++i) {
    if (exps_[i] == 0) continue;
    if (any) os << "*";
    os << "x" << (i + 1);
    if (exps_[i] > 1) os << "^" << exps_[i];
    any = true;
  }
  return any ? os.str() : "1";
}

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  p.add_term(Monomial(nvars), c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
  if (i < 0 || i >= nvars) throw std::invalid_argument("variable index");
  Polynomial p(nvars);
  std::vector<int> e(static_cast<size_t>(nvars), 0);
  e[static_cast<size_t>(i)] = 1;
  p.add_term(Monomial(std::move(e)), 1.0);
  return p;
}

Polynomial Polynomial::monomial(Monomial m, double c) {
  Polynomial p(m.nvars());
  p.add_term(m, c);
  return p;
}

double Polynomial::constant_term() const {
  auto it = terms_.find(Monomial(nvars_));
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (m.nvars() != nvars_)
    throw std::invalid_argument("Polynomial::add_term: nvars mismatch");
  if (c == 0.0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (nvars_ != o.nvars_)
    throw std::invalid_argument("poly add: nvars mismatch");
  Polynomial r(*this);
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  if (nvars_ != o.nvars_)
    throw std::invalid_argument("poly sub: nvars mismatch");
  Polynomial r(*this);
  for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (nvars_ != o.nvars_)
    throw std::invalid_argument("poly mul: nvars mismatch");
  Polynomial r(nvars_);
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : o.terms_) r.add_term(ma.times(mb), ca * cb);
  return r;
}

Polynomial Polynomial::scaled(double s) const {
  Polynomial r(nvars_);
  if (s == 0.0) return r;
  for (const auto& [m, c] : terms_) r.add_term(m, c * s);
  return r;
}

double Polynomial::eval(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != nvars_)
    throw std::invalid_argument("poly eval: dimension mismatch");
  double acc = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (int i = 0; i < nvars_; ++i) {
      double xi = point[static_cast<size_t>(i)];
      for (int k = 0; k < m.exp(i); ++k) t *= xi;
    }
    acc += t;
  }
  return acc;
}

Polynomial Polynomial::embedded(int new_nvars, int offset) const {
  if (offset < 0 || offset + nvars_ > new_nvars)
    throw std::invalid_argument("poly embed: variable range out of bounds");
  Polynomial r(new_nvars);
  for (const auto& [m, c] : terms_) {
    std::vector<int> e(static_cast<size_t>(new_nvars), 0);
    for (int i = 0; i < nvars_; ++i) e[static_cast<size_t>(offset + i)] = m.exp(i);
    r.add_term(Monomial(std::move(e)), c);
  }
  return r;
}

double Polynomial::coeff_inf_norm() const {
  double m = 0.0;
  for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

bool Polynomial::same_as(const Polynomial& o, double tol) const {
  if (nvars_ != o.nvars_) return false;
  Polynomial d = *this - o;
  return d.coeff_inf_norm() <= tol;
}

std::string Polynomial::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) os << (c >= 0 ? " + " : " - ");
    else if (c < 0) os << "-";
    double a = std::abs(c);
    if (m.degree() == 0 || a != 1.0) os << a;
    if (m.degree() > 0) {
      if (a != 1.0) os << "*";
      os << m.str();
    }
    first = false;
  }
  return os.str();
}

Polynomial operator*(double s, const Polynomial& p) { return p.scaled(s); }

RationalFunction::RationalFunction(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
  if (num_.nvars() != den_.nvars())
    throw std::invalid_argument("RationalFunction: nvars mismatch");
  if (den_.is_zero())
    throw std::invalid_argument("RationalFunction: zero denominator");
}

RationalFunction::RationalFunction(Polynomial num)
    : num_(std::move(num)), den_(Polynomial::constant(num_.nvars(), 1.0)) {}

bool RationalFunction::has_unit_denominator() const {
  return den_.is_constant() && den_.constant_term() == 1.0;
}

double RationalFunction::eval(std::span<const double> point) const {
  return num_.eval(point) / den_.eval(point);
}

RationalFunction RationalFunction::embedded(int new_nvars, int offset) const {
  return RationalFunction(num_.embedded(new_nvars, offset),
                          den_.embedded(new_nvars, offset));
}

SemiAlgebraicSet::SemiAlgebraicSet(int nvars,
                                   std::vector<Polynomial> constraints,
                                   std::optional<double> ball_radius)
    : nvars_(nvars),
      constraints_(std::move(constraints)),
      ball_radius_(ball_radius) {
  for (const auto& g : constraints_)
    if (g.nvars() != nvars_)
      throw std::invalid_argument("SemiAlgebraicSet: constraint nvars mismatch");
}

void SemiAlgebraicSet::add_constraint(Polynomial g) {
  if (g.nvars() != nvars_)
    throw std::invalid_argument("SemiAlgebraicSet: constraint nvars mismatch");
  constraints_.push_back(std::move(g));
}

std::vector<Polynomial> SemiAlgebraicSet::effective_constraints() const {
  std::vector<Polynomial> gs = constraints_;
  if (ball_radius_) {
    Polynomial ball = Polynomial::constant(nvars_, *ball_radius_);
    for (int i = 0; i < nvars_; ++i) {
      Polynomial xi = Polynomial::variable(nvars_, i);
      ball = ball - xi * xi;
    }
    gs.push_back(std::move(ball));
  }
  return gs;
}

bool SemiAlgebraicSet::contains(std::span<const double> point,
                                double tol) const {
  if (static_cast<int>(point.size()) != nvars_)
    throw std::invalid_argument("set contains: dimension mismatch");
  if (tol < 0) throw std::invalid_argument("set contains: tol < 0");
  for (const auto& g : effective_constraints())
    if (g.eval(point) < -tol) return false;
  return true;
}

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                           43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

}  // namespace

std::vector<std::vector<double>> halton_box(const Box& box, int count,
                                            int skip) {
  const int n = box.nvars();
  if (n > static_cast<int>(std::size(kPrimes)))
    throw std::invalid_argument("halton_box: too many dimensions");
  std::vector<std::vector<double>> pts;
  pts.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    std::vector<double> p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double u = halton(skip + k + 1, kPrimes[i]);
      p[static_cast<size_t>(i)] = box.lo[static_cast<size_t>(i)] +
                                  u * (box.hi[static_cast<size_t>(i)] -
                                       box.lo[static_cast<size_t>(i)]);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

namespace {

// Affine equality pairs g >= 0, -g >= 0 define a flat the sampler must land
// on exactly; returns rows (a, b) meaning a.x = b.
std::vector<std::pair<std::vector<double>, double>> affine_equalities(
    const SemiAlgebraicSet& K) {
  std::vector<std::pair<std::vector<double>, double>> rows;
  const auto& gs = K.constraints();
  for (size_t i = 0; i < gs.size(); ++i) {
    if (!gs[i].is_affine() || gs[i].is_zero()) continue;
    for (size_t j = i + 1; j < gs.size(); ++j) {
      if (!gs[j].is_affine()) continue;
      if ((gs[i] + gs[j]).coeff_inf_norm() <= 1e-14 * (1 + gs[i].coeff_inf_norm())) {
        std::vector<double> a(static_cast<size_t>(K.nvars()), 0.0);
        double b = 0.0;
        for (const auto& [m, c] : gs[i].terms()) {
          if (m.degree() == 0) {
            b = -c;
          } else {
            for (int v = 0; v < K.nvars(); ++v)
              if (m.exp(v) == 1) a[static_cast<size_t>(v)] = c;
          }
        }
        rows.emplace_back(std::move(a), b);
        break;
      }
    }
  }
  return rows;
}

void project_affine(
    std::vector<double>& p,
    const std::vector<std::pair<std::vector<double>, double>>& rows) {
  // Cyclic projection; affine rows at this scale converge in a few sweeps.
  for (int sweep = 0; sweep < 8; ++sweep) {
    for (const auto& [a, b] : rows) {
      double aa = 0.0, ax = 0.0;
      for (size_t i = 0; i < a.size(); ++i) {
        aa += a[i] * a[i];
        ax += a[i] * p[i];
      }
      if (aa <= 0) continue;
      double s = (ax - b) / aa;
      for (size_t i = 0; i < a.size(); ++i) p[i] -= s * a[i];
    }
  }
}

}  // namespace

std::vector<std::vector<double>> sample_set(const SemiAlgebraicSet& K,
                                            const Box& box, int count,
                                            double tol) {
  if (box.nvars() != K.nvars())
    throw std::invalid_argument("sample_set: box dimension mismatch");
  auto eqs = affine_equalities(K);
  auto raw = halton_box(box, count * 4);
  std::vector<std::vector<double>> kept;
  for (auto& p : raw) {
    if (!eqs.empty()) project_affine(p, eqs);
    if (K.contains(p, std::max(tol, 1e-9))) kept.push_back(std::move(p));
    if (static_cast<int>(kept.size()) >= count) break;
  }
  return kept;
}

PositivityReport verify_positive_samples(const Polynomial& q,
                                         const SemiAlgebraicSet& K,
                                         const Box& box, int count) {
  PositivityReport rep;
  auto pts = sample_set(K, box, count);
  // Boundary points: bisect between an inside sample and an outside box
  // sample crossing each constraint.
  auto outside = halton_box(box, 64, 4096);
  std::vector<std::vector<double>> boundary;
  for (const auto& g : K.effective_constraints()) {
    for (const auto& pin : pts) {
      if (boundary.size() > 8 * K.effective_constraints().size()) break;
      for (const auto& pout : outside) {
        if (g.eval(pout) >= 0) continue;
        std::vector<double> a = pin, b = pout;
        for (int it = 0; it < 40; ++it) {
          std::vector<double> mid(a.size());
          for (size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
          (g.eval(mid) >= 0 ? a : b) = mid;
        }
        if (K.contains(a, 1e-7)) boundary.push_back(a);
        break;
      }
      break;
    }
  }
  pts.insert(pts.end(), boundary.begin(), boundary.end());
  if (pts.empty()) return rep;
  double mn = q.eval(pts.front());
  for (const auto& p : pts) mn = std::min(mn, q.eval(p));
  rep.min_value = mn;
  rep.samples = static_cast<int>(pts.size());
  rep.positive = mn > 0.0;
  return rep;
}

std::pair<double, double> interval_range(const Polynomial& p, const Box& box) {
  if (box.nvars() != p.nvars())
    throw std::invalid_argument("interval_range: box dimension mismatch");
  double lo = 0.0, hi = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double tlo = 1.0, thi = 1.0;
    for (int i = 0; i < p.nvars(); ++i) {
      int e = m.exp(i);
      if (e == 0) continue;
      double a = box.lo[static_cast<size_t>(i)], b = box.hi[static_cast<size_t>(i)];
      // Range of x^e over [a, b].
      double pa = std::pow(a, e), pb = std::pow(b, e);
      double mlo = std::min(pa, pb), mhi = std::max(pa, pb);
      if (e % 2 == 0 && a < 0 && b > 0) mlo = 0.0;
      // Interval product accumulate.
      double cands[4] = {tlo * mlo, tlo * mhi, thi * mlo, thi * mhi};
      tlo = *std::min_element(cands, cands + 4);
      thi = *std::max_element(cands, cands + 4);
    }
    lo += std::min(c * tlo, c * thi);
    hi += std::max(c * tlo, c * thi);
  }
  return {lo, hi};
}

}  // namespace msos::poly
