// Command line front end: train / summarize / traces / oracle / curves.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "frugal/harness.hpp"
#include "frugal/oracle.hpp"

namespace {

int parse_chain_length(const std::string& env) {
  if (env.rfind("chain:", 0) != 0)
    throw CLI::ValidationError("--env", "the oracle only solves chain:N instances");
  return std::stoi(env.substr(6));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-aware RL toolkit: measurement-frugal DQN agents (DMSOA, OSMBOA)"};
  app.require_subcommand(1);

  // --- train ---------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Run a multi-seed training experiment");
  std::string config_path, train_out, seeds_arg;
  train->add_option("--config", config_path, "flat key = value config file")->required();
  train->add_option("--out", train_out, "output directory (overrides config)");
  train->add_option("--seeds", seeds_arg, "comma list or lo:hi range (overrides config)");

  // --- summarize -----------------------------------------------------------
  auto* summ = app.add_subcommand("summarize", "Converged-window statistics for a run dir");
  std::string summ_dir;
  summ->add_option("dir", summ_dir, "run directory containing episodes.csv")->required();

  // --- traces --------------------------------------------------------------
  auto* traces = app.add_subcommand("traces", "Greedy measurement traces from a checkpoint");
  std::string ckpt_path, traces_env, traces_out = "traces_out";
  int traces_episodes = 5;
  traces->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  traces->add_option("--env", traces_env, "environment name (must match the checkpoint)")
      ->required();
  traces->add_option("--episodes", traces_episodes, "number of greedy episodes");
  traces->add_option("--out", traces_out, "output directory");

  // --- oracle --------------------------------------------------------------
  auto* oracle = app.add_subcommand("oracle", "Exact optimum for a chain instance");
  std::string oracle_env = "chain:5", oracle_agent = "dmsoa";
  double oracle_c = -0.85, oracle_gamma = 1.0;
  int oracle_K = 3, oracle_horizon = 200;
  std::vector<double> sweep_c;
  oracle->add_option("--env", oracle_env, "chain:N instance");
  oracle->add_option("--agent", oracle_agent, "dmsoa or osmboa")
      ->check(CLI::IsMember({"dmsoa", "osmboa"}));
  oracle->add_option("--c", oracle_c, "intrinsic bonus on skipped steps");
  oracle->add_option("--gamma", oracle_gamma, "discount factor");
  oracle->add_option("--K", oracle_K, "max repeat count (dmsoa)");
  oracle->add_option("--horizon", oracle_horizon, "episode step limit");
  oracle->add_option("--sweep-c", sweep_c, "solve for each listed c instead")->delimiter(',');

  // --- curves --------------------------------------------------------------
  auto* curves = app.add_subcommand("curves", "Bucketed training curves for a run dir");
  std::string curves_dir;
  int curve_buckets = 100;
  curves->add_option("dir", curves_dir, "run directory containing episodes.csv")->required();
  curves->add_option("--buckets", curve_buckets, "number of episode buckets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      std::ifstream f(config_path);
      if (!f) throw std::runtime_error("cannot open config file " + config_path);
      std::stringstream ss;
      ss << f.rdbuf();
      std::string text = ss.str();
      // command line overrides are just extra config lines
      if (!seeds_arg.empty()) text += "\nseeds = " + seeds_arg + "\n";
      if (!train_out.empty()) text += "\nout = " + train_out + "\n";
      frugal::RunConfig cfg = frugal::parse_config_text(text);
      const auto result = frugal::run_experiment(cfg);
      std::printf("run complete: %zu seeds -> %s\n", result.per_seed_episodes.size(),
                  result.out_dir.c_str());
      for (const auto& row : frugal::summarize(result.out_dir))
        if (row.scope == "pooled")
          std::printf("pooled converged: mean costed %.3f, mean length %.2f, ratio 1:%.2f\n",
                      row.mean_costed, row.mean_length, row.ratio);
    } else if (*summ) {
      for (const auto& row : frugal::summarize(summ_dir))
        std::printf("%s: episodes=%d mean_costed=%.4f std=%.4f mean_length=%.2f ratio=1:%.2f\n",
                    row.scope.c_str(), row.episodes, row.mean_costed, row.std_costed,
                    row.mean_length, row.ratio);
      std::printf("wrote %s/summary.csv\n", summ_dir.c_str());
    } else if (*traces) {
      frugal::export_traces(ckpt_path, traces_env, traces_episodes, traces_out);
      std::printf("wrote %d trace files to %s\n", traces_episodes, traces_out.c_str());
    } else if (*oracle) {
      frugal::ChainParams chain;
      chain.n = parse_chain_length(oracle_env);
      std::vector<double> cs = sweep_c.empty() ? std::vector<double>{oracle_c} : sweep_c;
      std::printf("instance,c,gamma,K,optimal_return,ratio\n");
      for (double c : cs) {
        frugal::OracleSolution sol;
        int k_col = oracle_K;
        if (oracle_agent == "dmsoa") {
          sol = frugal::solve_dmsoa(chain, c, oracle_gamma, oracle_K, oracle_horizon);
        } else {
          sol = frugal::solve_osmboa(chain, c, oracle_gamma, oracle_horizon);
          k_col = 1;
        }
        std::printf("%s,%.17g,%.17g,%d,%.17g,%.17g\n", oracle_env.c_str(), c, oracle_gamma,
                    k_col, sol.optimal_return, sol.ratio);
      }
    } else if (*curves) {
      const auto rows = frugal::emit_curves(curves_dir, curve_buckets);
      std::printf("wrote %zu buckets to %s/curves.csv\n", rows.size(), curves_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
