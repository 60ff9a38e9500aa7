#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "jir/cli.hpp"
#include "jir/common.hpp"

// Exit codes: 0 ok, 2 bad config or schema, 3 infeasible target, 4 budget
// exceeded, 5 I/O failure.

namespace {

int run_tool(int argc, char** argv) {
  CLI::App app{
      "Finite-blocklength bounds for single-shot joint compression and inference: "
      "rate-distortion solves, achievability and converse curves over the codebook "
      "size, exhaustive small-instance oracles and Monte Carlo spot checks."};
  app.name("jir");
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path, instance_path, out_path, m_spec, gamma_list, eps_list;
  std::string bound, scheme, output_dist;
  double eps_prime = 0.0, gamma = 0.0, budget = 1e8;
  std::uint64_t trials = 0, seed = 0;
  bool exact_lp = false;
  std::uint64_t ex_m = 0, ex_n = 0;
  double ex_p = 0.0, ex_d1 = 0.0, ex_d2 = 0.0;

  auto* o_config = app.add_option("--config", config_path,
                                  "run configuration JSON; explicit flags override its fields");
  auto* o_instance = app.add_option("--instance", instance_path, "problem instance JSON path");
  auto* o_out = app.add_option("--out", out_path,
                               "CSV output path; the summary JSON lands at <out>.summary.json");
  auto* o_m = app.add_option("--m-codewords", m_spec, "codebook sizes, A..B or a comma list");
  auto* o_gamma_grid =
      app.add_option("--gamma-grid", gamma_list, "comma list of slack candidates (default: auto)");
  auto* o_eps_grid = app.add_option("--eps-prime-grid", eps_list,
                                    "comma list of eps_prime candidates (default: auto scan)");
  auto* o_eps = app.add_option("--eps-prime", eps_prime,
                               "threshold / binning failure level for simulate");
  auto* o_gamma = app.add_option("--gamma", gamma, "binning slack for simulate");
  auto* o_trials = app.add_option("--trials", trials, "Monte Carlo trials");
  auto* o_seed = app.add_option("--seed", seed, "Monte Carlo seed (required to simulate)");
  auto* o_budget = app.add_option("--budget", budget, "oracle enumeration budget");
  auto* o_lp = app.add_flag("--exact-lp", exact_lp,
                            "tighten converses with the exact LP over the slack grid");
  auto* o_bound =
      app.add_option("--bound", bound, "bound selector: r1|r2|joint|indirect|logloss|all");
  auto* o_scheme =
      app.add_option("--scheme", scheme, "simulation scheme: joint|indirect|logloss");
  auto* o_odist =
      app.add_option("--output-dist", output_dist, "codeword distribution: uniform|optimized");
  auto* o_ex_m = app.add_option("--m", ex_m, "example family: class count");
  auto* o_ex_n = app.add_option("--n", ex_n, "example family: within-class spread");
  auto* o_ex_p = app.add_option("--p", ex_p, "example family: within-class bias");
  auto* o_ex_d1 = app.add_option("--d1", ex_d1, "example family: direct distortion level");
  auto* o_ex_d2 = app.add_option("--d2", ex_d2, "example family: inference distortion level");

  app.add_subcommand("rd", "solve the rate-distortion problems at the instance targets");
  app.add_subcommand("ach", "achievability curves over the codebook size");
  app.add_subcommand("conv", "converse curves over the codebook size");
  app.add_subcommand("oracle", "exhaustive exact optimum on a small instance");
  app.add_subcommand("simulate", "Monte Carlo estimate of a random-coding scheme");
  app.add_subcommand("example", "built-in uniform-class family curves");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  jir::cli::RunConfig cfg;
  if (o_config->count() > 0) {
    std::string text = jir::cli::read_text_file(config_path);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw jir::ConfigError("config JSON does not parse: " + std::string(e.what()));
    }
    cfg = jir::cli::config_from_json(j);
  }
  if (!app.get_subcommands().empty()) cfg.command = app.get_subcommands().front()->get_name();
  if (o_instance->count() > 0) {
    cfg.instance_path = instance_path;
    cfg.instance = nullptr;  // the file wins over any inline instance
  }
  if (o_out->count() > 0) cfg.out = out_path;
  if (o_m->count() > 0) cfg.m_list = jir::cli::parse_m_spec(m_spec);
  if (o_gamma_grid->count() > 0)
    cfg.gamma_grid = jir::cli::parse_double_list(gamma_list, "gamma grid");
  if (o_eps_grid->count() > 0)
    cfg.eps_prime_grid = jir::cli::parse_double_list(eps_list, "eps_prime grid");
  if (o_eps->count() > 0) cfg.eps_prime = eps_prime;
  if (o_gamma->count() > 0) cfg.gamma = gamma;
  if (o_trials->count() > 0) cfg.trials = trials;
  if (o_seed->count() > 0) {
    cfg.seed = seed;
    cfg.has_seed = true;
  }
  if (o_budget->count() > 0) cfg.budget = budget;
  if (o_lp->count() > 0) cfg.exact_lp = exact_lp;
  if (o_bound->count() > 0) cfg.bound = bound;
  if (o_scheme->count() > 0) cfg.scheme = scheme;
  if (o_odist->count() > 0) cfg.output_dist = output_dist;
  if (o_ex_m->count() > 0) cfg.example_m = ex_m;
  if (o_ex_n->count() > 0) cfg.example_n = ex_n;
  if (o_ex_p->count() > 0) cfg.example_p = ex_p;
  if (o_ex_d1->count() > 0) cfg.example_d1 = ex_d1;
  if (o_ex_d2->count() > 0) cfg.example_d2 = ex_d2;

  nlohmann::ordered_json summary = jir::cli::run(cfg);
  std::string text = summary.dump(2) + "\n";
  std::fwrite(text.data(), 1, text.size(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_tool(argc, argv);
  } catch (const jir::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const jir::InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const jir::BudgetError& e) {
    std::fprintf(stderr, "budget exceeded: %s\n", e.what());
    return 4;
  } catch (const jir::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 5;
  } catch (const jir::SolverError& e) {
    std::fprintf(stderr, "solver failed: %s\n", e.what());
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "bad JSON: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
