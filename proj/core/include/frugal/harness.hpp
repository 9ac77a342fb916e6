#ifndef FRUGAL_HARNESS_HPP
#define FRUGAL_HARNESS_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "frugal/agents.hpp"
#include "frugal/env_factory.hpp"

namespace frugal {

/// Everything one training run needs. Defaults depend on the env/agent pair;
/// see default_config.
struct RunConfig {
  std::string env = "cartpole";
  std::string agent = "dmsoa";
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "run_out";

  int env_max_steps = 0;  // 0 keeps the environment default
  WrapperConfig wrapper;
  AgentConfig agent_cfg;
  TrainSchedule schedule;

  std::size_t replay_capacity = 65536;
  double replay_alpha = 0.6;
  double replay_beta0 = 0.4;
  double replay_eps_prio = 1e-3;
  int n_step = 1;  // OSMBOA n-step return assembly; must stay 1 for DMSOA

  int eval_period = 25;    // training episodes between greedy evaluations
  int eval_episodes = 20;  // greedy episodes per evaluation
};

/// Tuned defaults for a given env/agent pair ("cartpole", "acrobot",
/// "chain:N" x "dmsoa", "osmboa").
RunConfig default_config(const std::string& env, const std::string& agent);

/// Parse a flat "key = value" config file ('#' starts a comment). env/agent
/// select the defaults; every other key overrides one field. Unknown keys and
/// malformed values are reported by name in the thrown exception.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Resolved key=value view of a config (used for config.txt and checkpoint
/// metadata).
std::map<std::string, std::string> config_to_map(const RunConfig& cfg);

/// Throws std::invalid_argument on inconsistent settings.
void validate_config(const RunConfig& cfg);

std::unique_ptr<Agent> make_agent(const RunConfig& cfg, const EnvDescriptor& desc,
                                  std::uint64_t seed);

struct EvalRow {
  std::uint64_t seed = 0;
  int after_episode = 0;
  long long decisions = 0;
  double mean_costed_return = 0.0;
  double mean_extrinsic_return = 0.0;
  double mean_base_steps = 0.0;
  long long measured_steps = 0;
  long long unmeasured_steps = 0;
  double ratio = 0.0;
};

struct ExperimentResult {
  std::string out_dir;
  std::vector<std::vector<EpisodeLog>> per_seed_episodes;  // indexed like cfg.seeds
  std::vector<EvalRow> eval_rows;
  std::vector<double> best_eval_per_seed;
};

/// Train every seed (in parallel workers bounded by FRUGAL_RL_THREADS),
/// then write episodes.csv, eval.csv, per-seed best checkpoints
/// (best_<seed>.ckpt), summary.csv and config.txt under cfg.out_dir.
/// Output bytes depend only on the config.
ExperimentResult run_experiment(const RunConfig& cfg);

struct SummaryRow {
  std::string scope;  // "seed:<n>" or "pooled"
  int episodes = 0;
  double mean_costed = 0.0;
  double std_costed = 0.0;
  double mean_length = 0.0;
  double std_length = 0.0;
  long long measured_steps = 0;
  long long unmeasured_steps = 0;
  double ratio = 0.0;
};

/// Converged-window statistics (final 10% of each seed's training episodes):
/// per-seed rows plus a pooled row. The file variant reads
/// <run_dir>/episodes.csv and writes <run_dir>/summary.csv.
std::vector<SummaryRow> summarize_episodes(
    const std::vector<std::vector<EpisodeLog>>& per_seed);
std::vector<SummaryRow> summarize(const std::string& run_dir);

struct CurveRow {
  int bucket = 0;
  int episode_lo = 0;
  int episode_hi = 0;  // inclusive
  int n = 0;
  double mean_costed = 0.0;
  double std_costed = 0.0;
  double mean_length = 0.0;
  double std_length = 0.0;
};

/// Bucketed mean/std across seeds by training-episode index; writes
/// <run_dir>/curves.csv.
std::vector<CurveRow> emit_curves(const std::string& run_dir, int buckets = 100);

/// Greedy rollouts from a saved checkpoint; writes one CSV per episode
/// (trace_ep<i>.csv: decision,step,k_or_am,measured) under out_dir.
/// The env name must match the checkpoint metadata.
void export_traces(const std::string& checkpoint_path, const std::string& env_name,
                   int episodes, const std::string& out_dir);

/// episodes.csv reader (used by summarize/emit_curves and tests).
std::vector<std::vector<EpisodeLog>> read_episode_csv(const std::string& path);

}  // namespace frugal

#endif  // FRUGAL_HARNESS_HPP
