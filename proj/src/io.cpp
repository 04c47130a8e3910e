#include "msos/io.hpp"

#include <fstream>
#include <sstream>

namespace msos::io {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw ParseError("parse-error: " + what);
}

double number_field(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      size_t pos = 0;
      double v = std::stod(j.get<std::string>(), &pos);
      if (pos == j.get<std::string>().size()) return v;
    } catch (const std::exception&) {
    }
  }
  fail(std::string(what) + " is not a number");
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid JSON in '") + path + "': " + e.what());
  }
  return j;
}

poly::Polynomial parse_polynomial(const json& j, int nvars) {
  if (!j.is_array()) fail("polynomial must be an array of terms");
  poly::Polynomial p(nvars);
  int term_no = 0;
  for (const auto& t : j) {
    ++term_no;
    if (!t.is_object()) fail("polynomial term must be an object");
    double coef = number_field(field(t, "coef"), "term coef");
    const json& ex = field(t, "exp");
    if (!ex.is_array() || static_cast<int>(ex.size()) != nvars) {
      std::ostringstream os;
      os << "term " << term_no << ": exponent vector must have length "
         << nvars;
      fail(os.str());
    }
    std::vector<int> e;
    for (const auto& v : ex) {
      if (!v.is_number_integer() || v.get<int>() < 0)
        fail("exponents must be nonnegative integers");
      e.push_back(v.get<int>());
    }
    p.add_term(poly::Monomial(std::move(e)), coef);
  }
  return p;
}

json polynomial_to_json(const poly::Polynomial& p) {
  json out = json::array();
  for (const auto& [m, c] : p.terms()) {
    json t;
    t["coef"] = c;
    t["exp"] = m.exps();
    out.push_back(std::move(t));
  }
  return out;
}

poly::Box parse_box(const json& j) {
  if (!j.is_array()) fail("box must be an array of [lo, hi] pairs");
  poly::Box b;
  for (const auto& r : j) {
    if (!r.is_array() || r.size() != 2) fail("box entry must be [lo, hi]");
    b.lo.push_back(number_field(r[0], "box lo"));
    b.hi.push_back(number_field(r[1], "box hi"));
  }
  return b;
}

namespace {

poly::RationalFunction parse_rational(const json& j, int nvars) {
  if (j.is_array()) return poly::RationalFunction(parse_polynomial(j, nvars));
  poly::Polynomial num = parse_polynomial(field(j, "p"), nvars);
  if (j.contains("q"))
    return poly::RationalFunction(std::move(num),
                                  parse_polynomial(j.at("q"), nvars));
  return poly::RationalFunction(std::move(num));
}

}  // namespace

mrf::MrfProblem parse_mrf(const json& j) {
  if (!j.contains("nvars")) fail("missing field 'nvars'");
  int n = field(j, "nvars").get<int>();
  if (n <= 0) fail("nvars must be positive");
  std::vector<poly::Polynomial> gs;
  for (const auto& g : field(j, "set")) gs.push_back(parse_polynomial(g, n));
  std::optional<double> ball;
  if (j.contains("ball")) ball = number_field(j.at("ball"), "ball");
  poly::SemiAlgebraicSet K(n, std::move(gs), ball);
  poly::RationalFunction f0 =
      j.contains("f0") ? parse_rational(j.at("f0"), n)
                       : poly::RationalFunction(poly::Polynomial(n));
  std::vector<poly::RationalFunction> branches;
  if (j.contains("branches"))
    for (const auto& b : j.at("branches"))
      branches.push_back(parse_rational(b, n));
  std::optional<poly::Box> box;
  if (j.contains("box")) {
    box = parse_box(j.at("box"));
    if (box->nvars() != n) fail("box dimension mismatch");
  }
  std::optional<mrf::Bounds> bounds;
  if (j.contains("bounds")) {
    bounds = mrf::Bounds{number_field(field(j.at("bounds"), "M1"), "M1"),
                         number_field(field(j.at("bounds"), "M2"), "M2")};
  }
  try {
    return mrf::MrfProblem(std::move(K), std::move(f0), std::move(branches),
                           std::move(box), bounds);
  } catch (const mrf::Error& e) {
    throw ParseError(std::string("invariant-violation: ") + e.what());
  }
}

games::FiniteGame parse_finite_game(const json& j) {
  int N = field(j, "players").get<int>();
  std::vector<int> actions;
  for (const auto& a : field(j, "actions")) actions.push_back(a.get<int>());
  if (static_cast<int>(actions.size()) != N)
    fail("actions must list one entry per player");
  const json& payoffs = field(j, "payoffs");
  std::vector<std::vector<double>> tensors;
  for (int i = 1; i <= N; ++i) {
    std::string key = std::to_string(i);
    if (!payoffs.contains(key)) fail("missing payoff tensor for player " + key);
    std::vector<double> t;
    for (const auto& v : payoffs.at(key))
      t.push_back(number_field(v, "payoff entry"));
    tensors.push_back(std::move(t));
  }
  try {
    return games::FiniteGame(std::move(actions), std::move(tensors));
  } catch (const games::Error& e) {
    throw ParseError(std::string("parse-error: ") + e.what());
  }
}

games::LoomisGame parse_loomis(const json& j) {
  games::FiniteGame g = parse_finite_game(j);
  if (!j.contains("f")) fail("Loomis game needs an 'f' tensor map");
  json jf = j;
  jf["payoffs"] = j.at("f");
  games::FiniteGame f = parse_finite_game(jf);
  try {
    return games::LoomisGame(std::move(g), std::move(f));
  } catch (const games::Error& e) {
    throw ParseError(e.what());
  }
}

games::FiniteAbsorbingGame parse_finite_absorbing(const json& j) {
  games::FiniteGame g = parse_finite_game(j);
  if (!j.contains("f") || !j.contains("q") || !j.contains("lambda"))
    fail("absorbing game needs 'f', 'q' and 'lambda'");
  json jf = j;
  jf["payoffs"] = j.at("f");
  games::FiniteGame f = parse_finite_game(jf);
  std::vector<double> q;
  for (const auto& v : j.at("q")) q.push_back(number_field(v, "q entry"));
  double lambda = number_field(j.at("lambda"), "lambda");
  try {
    return games::FiniteAbsorbingGame(std::move(g), std::move(f), std::move(q),
                                      lambda);
  } catch (const games::Error& e) {
    throw ParseError(e.what());
  }
}

namespace {

poly::SemiAlgebraicSet parse_set_block(const json& j, const char* key, int n,
                                       const char* ballkey) {
  std::vector<poly::Polynomial> gs;
  for (const auto& g : field(j, key)) gs.push_back(parse_polynomial(g, n));
  std::optional<double> ball;
  if (j.contains(ballkey)) ball = number_field(j.at(ballkey), ballkey);
  return poly::SemiAlgebraicSet(n, std::move(gs), ball);
}

}  // namespace

polygame::PolynomialGame parse_polygame(const json& j) {
  int n1 = field(j, "n1").get<int>();
  int n2 = field(j, "n2").get<int>();
  if (n1 <= 0 || n2 <= 0) fail("n1 and n2 must be positive");
  poly::SemiAlgebraicSet K1 = parse_set_block(j, "k1", n1, "ball1");
  poly::SemiAlgebraicSet K2 = parse_set_block(j, "k2", n2, "ball2");
  poly::Polynomial payoff = parse_polynomial(field(j, "payoff"), n1 + n2);
  std::optional<poly::Box> box1, box2;
  if (j.contains("box1")) box1 = parse_box(j.at("box1"));
  if (j.contains("box2")) box2 = parse_box(j.at("box2"));
  try {
    return polygame::PolynomialGame(std::move(K1), std::move(K2),
                                    std::move(payoff), std::move(box1),
                                    std::move(box2));
  } catch (const polygame::Error& e) {
    throw ParseError(e.what());
  }
}

absorbing::PolynomialAbsorbingGame parse_poly_absorbing(const json& j) {
  int n1 = field(j, "n1").get<int>();
  int n2 = field(j, "n2").get<int>();
  poly::SemiAlgebraicSet K1 = parse_set_block(j, "k1", n1, "ball1");
  poly::SemiAlgebraicSet K2 = parse_set_block(j, "k2", n2, "ball2");
  poly::Polynomial g = parse_polynomial(field(j, "payoff"), n1 + n2);
  poly::Polynomial f = parse_polynomial(field(j, "f"), n1 + n2);
  poly::Polynomial q = parse_polynomial(field(j, "q"), n1 + n2);
  double lambda = number_field(field(j, "lambda"), "lambda");
  std::optional<poly::Box> box1, box2;
  if (j.contains("box1")) box1 = parse_box(j.at("box1"));
  if (j.contains("box2")) box2 = parse_box(j.at("box2"));
  try {
    return absorbing::PolynomialAbsorbingGame(
        std::move(K1), std::move(K2), std::move(g), std::move(f), std::move(q),
        lambda, std::move(box1), std::move(box2));
  } catch (const absorbing::Error& e) {
    throw ParseError(e.what());
  }
}

}  // namespace msos::io
