#include "msos/cli.hpp"

#include <fstream>
#include <sstream>

#include "msos/io.hpp"

namespace msos::cli {

namespace {

using json = nlohmann::ordered_json;

json options_json(const RunConfig& cfg) {
  json o;
  o["order"] = cfg.order;
  o["max_order"] = cfg.max_order;
  o["tol"] = cfg.tol;
  o["rank_tol"] = cfg.rank_tol;
  if (cfg.perturb != 0.0)
    o["perturb"] = cfg.perturb;
  else
    o["perturb"] = nullptr;
  o["seed"] = cfg.seed;
  if (cfg.command == "solve-minmax") o["player"] = cfg.player;
  return o;
}

json atoms_json(const atoms::AtomicMeasure& m) {
  json out = json::array();
  for (size_t k = 0; k < m.atoms.size(); ++k) {
    json a;
    a["point"] = m.atoms[k];
    a["weight"] = m.weights[k];
    out.push_back(std::move(a));
  }
  return out;
}

json orders_json(const mrf::HierarchyReport& H) {
  json out = json::array();
  for (const auto& o : H.orders) {
    json r;
    r["r"] = o.r;
    r["status"] = sdp::status_name(o.status);
    if (o.usable) r["value"] = o.value;
    r["rank_high"] = o.rank_high;
    r["rank_low"] = o.rank_low;
    r["flat"] = o.flat;
    r["lp_path"] = o.lp_path;
    r["gap"] = o.gap;
    r["iterations"] = o.iterations;
    out.push_back(std::move(r));
  }
  return out;
}

void export_relaxation(const RunConfig& cfg, const sdp::Problem& p) {
  if (cfg.export_sdp.empty()) return;
  std::ofstream out(cfg.export_sdp);
  if (!out) throw io::ParseError("cannot write '" + cfg.export_sdp + "'");
  p.export_sdpa(out);
}

mrf::SolveOptions hierarchy_options(const RunConfig& cfg) {
  mrf::SolveOptions opts;
  opts.r_start = cfg.order;
  opts.r_max = cfg.max_order > 0 ? cfg.max_order
                                 : (cfg.order > 0 ? cfg.order : 0);
  opts.tol = cfg.tol;
  opts.rank_tol = cfg.rank_tol;
  if (cfg.perturb != 0.0) opts.perturb = cfg.perturb;
  opts.seed = cfg.seed;
  return opts;
}

// Shared tail for the hierarchy-based commands.
RunResult finish_hierarchy(const RunConfig& cfg, const mrf::MrfProblem& prob,
                           const mrf::HierarchyReport& H, json rep,
                           std::ostringstream& text,
                           double value_scale = 1.0, double value_shift = 0.0) {
  RunResult res;
  double value = value_scale * H.value + value_shift;
  rep["value"] = H.any_solved() ? json(value) : json(nullptr);
  rep["certified"] = H.certified;
  rep["value_converged"] = H.value_converged;
  rep["bounds"] = {{"M1", H.bounds_used.M1}, {"M2", H.bounds_used.M2}};
  rep["orders"] = orders_json(H);
  if (H.minimizers) {
    json sols = json::array();
    for (size_t k = 0; k < H.minimizers->atoms.size(); ++k) {
      const auto& at = H.minimizers->atoms[k];
      json s;
      s["point"] = at;
      s["weight"] = H.minimizers->weights[k];
      s["objective"] = prob.objective_at(at);
      s["in_set"] = prob.K().contains(at, 1e-5);
      sols.push_back(std::move(s));
    }
    rep["solutions"] = std::move(sols);
  } else {
    rep["solutions"] = json::array();
  }
  rep["first_order_point"] = H.first_order_point;
  if (H.moments) {
    rep["moments"] = std::vector<double>(
        H.moments->values().data(),
        H.moments->values().data() + H.moments->values().size());
  }
  if (!H.message.empty()) rep["message"] = H.message;

  if (!H.any_solved()) {
    res.exit_code = 3;
    text << "no relaxation order solved: " << H.message << "\n";
  } else {
    res.exit_code = H.certified ? 0 : 2;
    text << "value " << value << (H.certified ? " (certified)" : "")
         << (H.value_converged && !H.certified
                 ? " (value converged, no certificate)"
                 : "")
         << "\n";
    for (const auto& o : H.orders)
      text << "  order " << o.r << ": " << sdp::status_name(o.status)
           << (o.usable ? " value " + std::to_string(o.value) : "")
           << (o.flat ? " flat" : "") << (o.lp_path ? " [lp]" : "") << "\n";
    if (H.minimizers) {
      text << "solutions:\n";
      for (const auto& at : H.minimizers->atoms) {
        text << "  (";
        for (size_t i = 0; i < at.size(); ++i)
          text << (i ? ", " : "") << at[i];
        text << ")\n";
      }
    }
  }
  rep["exit_code"] = res.exit_code;
  res.machine = std::move(rep);
  res.text = text.str();
  return res;
}

RunResult run_mrf_like(const RunConfig& cfg) {
  json j = io::load_file(cfg.input_path);
  json rep;
  rep["command"] = cfg.command;
  rep["input"] = cfg.input_path;
  rep["options"] = options_json(cfg);
  std::ostringstream text;

  if (cfg.command == "solve-mrf") {
    mrf::MrfProblem prob = io::parse_mrf(j);
    auto opts = hierarchy_options(cfg);
    if (!cfg.export_sdp.empty()) {
      auto bounds = prob.branches().empty()
                        ? mrf::Bounds{0, 0}
                        : mrf::compute_bounds(prob, mrf::BoundMode::Auto);
      auto L = mrf::lift(prob, bounds);
      export_relaxation(cfg,
                        mrf::build_relaxation(L, std::max(opts.r_start, L.r0))
                            .problem);
    }
    auto H = mrf::solve_hierarchy(prob, opts);
    text << "minimize f0 + max of " << prob.branches().size()
         << " rational branches over " << prob.nx() << " variables\n";
    return finish_hierarchy(cfg, prob, H, std::move(rep), text);
  }
  if (cfg.command == "solve-nash" || cfg.command == "solve-loomis" ||
      cfg.command == "solve-absorbing-finite") {
    games::FiniteGame g = io::parse_finite_game(j);
    mrf::MrfProblem prob = [&] {
      if (cfg.command == "solve-nash") return games::nash_mrf(g);
      if (cfg.command == "solve-loomis")
        return games::loomis_mrf(io::parse_loomis(j));
      return games::loomis_mrf(
          games::absorbing_to_loomis(io::parse_finite_absorbing(j)));
    }();
    auto opts = hierarchy_options(cfg);
    if (!cfg.export_sdp.empty()) {
      auto bounds = mrf::compute_bounds(prob, mrf::BoundMode::Auto);
      auto L = mrf::lift(prob, bounds);
      export_relaxation(cfg,
                        mrf::build_relaxation(L, std::max(opts.r_start, L.r0))
                            .problem);
    }
    auto H = mrf::solve_hierarchy(prob, opts);
    text << cfg.command << " on a " << g.players() << "-player game\n";
    RunResult res = finish_hierarchy(cfg, prob, H, std::move(rep), text);
    // Equilibrium profiles with a best-response audit.
    if (H.minimizers && res.machine.contains("solutions")) {
      auto& sols = res.machine["solutions"];
      for (size_t k = 0; k < H.minimizers->atoms.size(); ++k) {
        const auto& at = H.minimizers->atoms[k];
        games::MixedProfile prof;
        size_t off = 0;
        json jp = json::array();
        for (int i = 0; i < g.players(); ++i) {
          std::vector<double> pi;
          double s = 0;
          for (int a = 0; a < g.actions()[static_cast<size_t>(i)]; ++a) {
            double v = std::max(0.0, at[off++]);
            pi.push_back(v);
            s += v;
          }
          for (double& v : pi) v /= std::max(s, 1e-300);
          jp.push_back(pi);
          prof.p.push_back(std::move(pi));
        }
        sols[k]["profile"] = std::move(jp);
        if (cfg.command == "solve-nash")
          sols[k]["best_response_residual"] =
              games::best_response_residual(g, prof);
      }
    }
    return res;
  }
  if (cfg.command == "solve-minmax") {
    games::FiniteGame g = io::parse_finite_game(j);
    if (cfg.player < 1 || cfg.player > g.players())
      throw io::ParseError("player index out of range");
    auto red = games::minmax_mrf(g, cfg.player - 1);
    auto opts = hierarchy_options(cfg);
    if (!cfg.export_sdp.empty()) {
      auto bounds = mrf::compute_bounds(red.problem, mrf::BoundMode::Auto);
      auto L = mrf::lift(red.problem, bounds);
      export_relaxation(cfg,
                        mrf::build_relaxation(L, std::max(opts.r_start, L.r0))
                            .problem);
    }
    auto H = mrf::solve_hierarchy(red.problem, opts);
    text << "min-max payoff of player " << cfg.player << "\n";
    rep["player"] = cfg.player;
    rep["normalization"] = {{"scale", red.scale}, {"shift", red.shift}};
    return finish_hierarchy(cfg, red.problem, H, std::move(rep), text,
                            red.scale, red.shift);
  }
  throw io::ParseError("unknown command '" + cfg.command + "'");
}

RunResult run_polygame(const RunConfig& cfg) {
  json j = io::load_file(cfg.input_path);
  json rep;
  rep["command"] = cfg.command;
  rep["input"] = cfg.input_path;
  rep["options"] = options_json(cfg);
  std::ostringstream text;
  RunResult res;

  polygame::GameOptions gopts;
  gopts.tol = cfg.tol;
  gopts.rank_tol = cfg.rank_tol;
  gopts.seed = cfg.seed;
  if (cfg.max_order > 0) gopts.d_max = cfg.max_order;
  else if (cfg.order > 0) gopts.d_max = cfg.order;

  if (cfg.command == "solve-zerosum-poly") {
    polygame::PolynomialGame g = io::parse_polygame(j);
    if (!cfg.export_sdp.empty())
      export_relaxation(
          cfg, polygame::build_primal(
                   g, std::max(cfg.order, polygame::starting_order(g)))
                   .problem);
    auto R = polygame::solve_game(g, gopts);
    rep["d0"] = R.d0;
    rep["value"] = R.any_solved() ? json(R.value) : json(nullptr);
    rep["lambda"] = std::isnan(R.lambda) ? json(nullptr) : json(R.lambda);
    rep["gamma"] = std::isnan(R.gamma) ? json(nullptr) : json(R.gamma);
    rep["certified"] = R.certified;
    json ords = json::array();
    for (const auto& o : R.orders) {
      json r;
      r["d"] = o.d;
      r["primal_status"] = sdp::status_name(o.primal_status);
      r["dual_status"] = sdp::status_name(o.dual_status);
      if (o.primal_usable) r["lambda"] = o.lambda;
      if (o.dual_usable) r["gamma"] = o.gamma;
      r["s1"] = o.s1;
      r["s2"] = o.s2;
      r["primal_flat"] = o.primal_flat;
      r["dual_flat"] = o.dual_flat;
      r["certified"] = o.certified;
      ords.push_back(std::move(r));
    }
    rep["orders"] = std::move(ords);
    if (R.mu) rep["mu"] = atoms_json(*R.mu);
    if (R.nu) rep["nu"] = atoms_json(*R.nu);
    if (R.y1) {
      rep["moments"] = std::vector<double>(
          R.y1->values().data(),
          R.y1->values().data() + R.y1->values().size());
    }
    if (!R.message.empty()) rep["message"] = R.message;
    if (!R.any_solved()) {
      res.exit_code = 3;
      text << "no order solved: " << R.message << "\n";
    } else {
      res.exit_code = R.certified ? 0 : 2;
      text << "value " << R.value << (R.certified ? " (certified)" : "")
           << "  [lambda " << R.lambda << ", gamma " << R.gamma << "]\n";
      if (R.mu) {
        text << "player 1 strategy:";
        for (size_t k = 0; k < R.mu->atoms.size(); ++k)
          text << "  " << R.mu->atoms[k][0] << " (w " << R.mu->weights[k]
               << ")";
        text << "\n";
      }
    }
    rep["exit_code"] = res.exit_code;
    res.machine = std::move(rep);
    res.text = text.str();
    return res;
  }

  // solve-absorbing-poly
  absorbing::PolynomialAbsorbingGame A = io::parse_poly_absorbing(j);
  absorbing::SearchOptions sopts;
  sopts.game = gopts;
  sopts.s_tol = std::max(cfg.tol, 1e-7) * 100;  // default 1e-5 at tol 1e-8
  if (!cfg.export_sdp.empty())
    export_relaxation(
        cfg, polygame::build_primal(
                 auxiliary_game(A, 0.0),
                 std::max(cfg.order,
                          polygame::starting_order(auxiliary_game(A, 0.0))))
                 .problem);
  try {
    auto trace = absorbing::value_search(A, sopts);
    rep["value"] = trace.value;
    rep["converged"] = trace.converged;
    rep["bisections"] = trace.bisections;
    rep["bracket"] = {trace.t_lo, trace.t_hi};
    json evals = json::array();
    for (const auto& e : trace.evals)
      evals.push_back({{"t", e.t}, {"s", e.s}});
    rep["evaluations"] = std::move(evals);
    if (!trace.message.empty()) rep["message"] = trace.message;
    res.exit_code = trace.converged ? 0 : 2;
    text << "discounted value " << trace.value << " after "
         << trace.bisections << " bisections\n";
  } catch (const absorbing::Error& e) {
    rep["error"] = e.what();
    res.exit_code = 3;
    text << "solver failure: " << e.what() << "\n";
  }
  rep["exit_code"] = res.exit_code;
  res.machine = std::move(rep);
  res.text = text.str();
  return res;
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  try {
    if (cfg.command == "solve-zerosum-poly" ||
        cfg.command == "solve-absorbing-poly")
      return run_polygame(cfg);
    return run_mrf_like(cfg);
  } catch (const io::ParseError& e) {
    RunResult res;
    res.exit_code = 4;
    res.machine = {{"command", cfg.command},
                   {"input", cfg.input_path},
                   {"error", e.what()},
                   {"exit_code", 4}};
    res.text = std::string(e.what()) + "\n";
    return res;
  } catch (const mrf::Error& e) {
    RunResult res;
    res.exit_code = 4;
    res.machine = {{"command", cfg.command},
                   {"input", cfg.input_path},
                   {"error", e.what()},
                   {"exit_code", 4}};
    res.text = std::string(e.what()) + "\n";
    return res;
  } catch (const std::exception& e) {
    RunResult res;
    res.exit_code = 3;
    res.machine = {{"command", cfg.command},
                   {"input", cfg.input_path},
                   {"error", e.what()},
                   {"exit_code", 3}};
    res.text = std::string(e.what()) + "\n";
    return res;
  }
}

}  // namespace msos::cli
