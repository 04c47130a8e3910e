#include <iostream>

#include "CLI11.hpp"
#include "msos/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "msos - moment relaxation solvers for rational min-max problems, "
      "finite games and zero-sum polynomial games"};
  app.require_subcommand(1);

  msos::cli::RunConfig cfg;
  const std::vector<std::string> commands = {
      "solve-mrf",           "solve-nash",         "solve-minmax",
      "solve-loomis",        "solve-absorbing-finite",
      "solve-zerosum-poly",  "solve-absorbing-poly"};
  const std::map<std::string, std::string> help = {
      {"solve-mrf", "minimize f0 + max of rational branches over a set"},
      {"solve-nash", "Nash equilibria of a finite game"},
      {"solve-minmax", "min-max punishment level of one player"},
      {"solve-loomis", "equilibria of a ratio (Loomis) game"},
      {"solve-absorbing-finite",
       "stationary equilibria of a discounted finite absorbing game"},
      {"solve-zerosum-poly", "value of a zero-sum polynomial game"},
      {"solve-absorbing-poly",
       "discounted value of a zero-sum polynomial absorbing game"}};

  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("input", cfg.input_path, "problem file (JSON)")
        ->required();
    sub->add_option("--order", cfg.order,
                    "starting relaxation order (default: smallest valid)");
    sub->add_option("--max-order", cfg.max_order,
                    "last relaxation order (default: start + 3)");
    sub->add_option("--tol", cfg.tol, "solver tolerance")
        ->default_val(1e-8);
    sub->add_option("--rank-tol", cfg.rank_tol,
                    "relative rank tolerance for the flatness test")
        ->default_val(1e-6);
    sub->add_option("--perturb", cfg.perturb,
                    "objective perturbation magnitude (0 = off)");
    sub->add_option("--format", cfg.format, "text | machine")
        ->check(CLI::IsMember({"text", "machine"}))
        ->default_val("text");
    sub->add_option("--seed", cfg.seed, "seed for all randomized pieces")
        ->default_val(0);
    sub->add_option("--export-sdp", cfg.export_sdp,
                    "write the first relaxation in sparse SDPA-like form");
    if (name == "solve-minmax")
      sub->add_option("--player", cfg.player, "player to punish (1-based)")
          ->default_val(1);
    sub->callback([&cfg, name] { cfg.command = name; });
  }

  CLI11_PARSE(app, argc, argv);

  msos::cli::RunResult res = msos::cli::run(cfg);
  if (cfg.format == "machine")
    std::cout << res.machine.dump(2) << "\n";
  else
    std::cout << res.text;
  return res.exit_code;
}
