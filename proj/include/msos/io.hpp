// JSON problem-file parsing shared by the command line tool and the tests.
// Polynomials are term lists {"coef": <number or decimal string>, "exp":
// [e1, ..., en]}; sets are arrays of polynomials meaning g >= 0.
#pragma once

#include <string>

#include "json.hpp"
#include "msos/absorbing.hpp"
#include "msos/finite_games.hpp"
#include "msos/mrf.hpp"
#include "msos/polygame.hpp"

namespace msos::io {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using json = nlohmann::ordered_json;

json load_file(const std::string& path);

poly::Polynomial parse_polynomial(const json& j, int nvars);
json polynomial_to_json(const poly::Polynomial& p);

poly::Box parse_box(const json& j);

// {"nvars": n, "set": [...], "f0": {"p":..., "q":...}, "branches":
//  [{"p":..., "q":...}], "bounds": {"M1":, "M2":}?, "box": [[lo,hi]...]?,
//  "ball": M?}
mrf::MrfProblem parse_mrf(const json& j);

// {"players": N, "actions": [...], "payoffs": {"1": [...], ...},
//  "f": {...}?, "q": [...]?, "lambda": x?}
games::FiniteGame parse_finite_game(const json& j);
games::LoomisGame parse_loomis(const json& j);
games::FiniteAbsorbingGame parse_finite_absorbing(const json& j);

// {"n1":, "n2":, "k1": [...], "k2": [...], "payoff": ...,
//  "box1"?: , "box2"?:, "ball1"?:, "ball2"?:}
polygame::PolynomialGame parse_polygame(const json& j);

// Polynomial-game file extended with "f", "q", "lambda"; "payoff" doubles
// as the running payoff g.
absorbing::PolynomialAbsorbingGame parse_poly_absorbing(const json& j);

}  // namespace msos::io
