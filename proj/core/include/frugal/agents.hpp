#ifndef FRUGAL_AGENTS_HPP
#define FRUGAL_AGENTS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "frugal/acnomdp.hpp"
#include "frugal/neural.hpp"
#include "frugal/replay.hpp"

namespace frugal {

enum class ActionEncoding { scalar, onehot };
enum class PrioritySource { control, combined };

/// Network and optimizer knobs shared by both agents.
struct AgentConfig {
  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::relu;
  LossConfig loss = {};
  AdamConfig adam = {};
  bool use_sgd = false;
  ActionEncoding encoding = ActionEncoding::scalar;
  PrioritySource priority_source = PrioritySource::control;
  std::vector<double> obs_scale;  // optional per-dimension input scaling
};

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double decay_frac = 0.6;  // fraction of total decisions over which to decay

  double value(long long decisions, long long total_decisions) const;
};

struct TrainSchedule {
  long long total_decisions = 50000;
  long long warmup_decisions = 1000;
  int batch_size = 64;
  int train_every = 1;
  int target_sync = 500;  // tau, in decisions
  EpsilonSchedule eps_c;
  EpsilonSchedule eps_m;
};

struct TrainMetrics {
  bool trained = false;
  double loss_control = 0.0;
  double loss_measurement = 0.0;
};

/// Per-episode summary row.
struct EpisodeLog {
  std::uint64_t seed = 0;
  int episode = 0;
  int base_steps = 0;
  int decisions = 0;
  int measured_steps = 0;
  int unmeasured_steps = 0;
  double costed_return = 0.0;     // sum of delivered rewards (c or r_ext)
  double extrinsic_return = 0.0;  // true r_ext over every base step
  bool terminal = false;          // false means the horizon truncated the episode
};

/// Common surface of the two learners. One instance per training run; not
/// thread safe.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual const char* name() const = 0;

  /// Reset per-episode state (n-step window).
  virtual void begin_episode() {}

  /// Choose one decision from the wrapper's current observation, execute it,
  /// and return the wrapper transition. When replay_out is non-null, records
  /// ready for the buffer (n-step assembled where configured) are appended.
  virtual CostedTransition play(AcnomdpEnv& env, double eps_c, double eps_m, Rng& rng,
                                std::vector<CostedTransition>* replay_out) = 0;

  /// One learning update from a prioritized sample. No-op while the buffer
  /// holds fewer than batch_size records.
  virtual TrainMetrics train_step(ReplayBuffer& buffer, int batch_size, double beta,
                                  Rng& rng) = 0;

  virtual void sync_targets() = 0;

  virtual std::vector<NamedParams> named_params() const = 0;
  virtual void load_params(const std::vector<NamedParams>& nets) = 0;
};

/// DMSOA: control net Q_c over observations, measurement net Q_m over
/// observation-action pairs selecting the repeat count k, and the
/// action-observation scheduler provided by AcnomdpEnv::dmsoa_schedule.
class DmsoaAgent final : public Agent {
 public:
  DmsoaAgent(const EnvDescriptor& env, const WrapperConfig& wcfg, const AgentConfig& cfg,
             std::uint64_t init_seed);

  const char* name() const override { return "dmsoa"; }

  /// eps_c-greedy control action, then eps_m-greedy repeat count from the
  /// measurement net fed with the encoded control action. Requires a fresh
  /// observation. Ties break to the lowest index.
  SkipDecision act(const ObservationPacket& obs, double eps_c, double eps_m, Rng& rng) const;

  struct Targets {
    std::vector<double> control;
    std::vector<double> measurement;
  };

  /// Double-DQN targets: the bootstrap action maximizes the online net and is
  /// evaluated by the target net; the measurement target pairs o' with that
  /// same online-argmax control action. Terminal transitions yield R exactly;
  /// the bootstrap discount is gamma^base_steps.
  Targets targets(const SampleBatch& batch) const;

  CostedTransition play(AcnomdpEnv& env, double eps_c, double eps_m, Rng& rng,
                        std::vector<CostedTransition>* replay_out) override;
  TrainMetrics train_step(ReplayBuffer& buffer, int batch_size, double beta, Rng& rng) override;
  void sync_targets() override;
  std::vector<NamedParams> named_params() const override;
  void load_params(const std::vector<NamedParams>& nets) override;

  const ParamSet& qc_online() const { return qc_online_; }
  const ParamSet& qm_online() const { return qm_online_; }
  ParamSet& qc_online() { return qc_online_; }
  ParamSet& qm_online() { return qm_online_; }
  ParamSet& qc_target() { return qc_target_; }
  ParamSet& qm_target() { return qm_target_; }
  int K() const { return K_; }

  std::vector<double> control_input(const ObservationPacket& obs) const;
  std::vector<double> measurement_input(const ObservationPacket& obs, int a_c) const;

 private:
  int obs_dim_;
  int n_actions_;
  int K_;
  double gamma_;
  AgentConfig cfg_;
  ParamSet qc_online_, qc_target_;
  ParamSet qm_online_, qm_target_;
  AdamState qc_adam_, qm_adam_;
};

/// OSMBOA: a single net over the flagged memory observation scoring every
/// (control, measure) tuple; tuple index = a_c * 2 + a_m.
class OsmboaAgent final : public Agent {
 public:
  OsmboaAgent(const EnvDescriptor& env, const WrapperConfig& wcfg, const AgentConfig& cfg,
              int n_step, std::uint64_t init_seed);

  const char* name() const override { return "osmboa"; }

  ActionTuple act(std::span<const double> input, double eps, Rng& rng) const;

  std::vector<double> targets(const SampleBatch& batch) const;

  void begin_episode() override;
  CostedTransition play(AcnomdpEnv& env, double eps_c, double eps_m, Rng& rng,
                        std::vector<CostedTransition>* replay_out) override;
  TrainMetrics train_step(ReplayBuffer& buffer, int batch_size, double beta, Rng& rng) override;
  void sync_targets() override;
  std::vector<NamedParams> named_params() const override;
  void load_params(const std::vector<NamedParams>& nets) override;

  const ParamSet& q_online() const { return q_online_; }
  ParamSet& q_online() { return q_online_; }
  ParamSet& q_target() { return q_target_; }

  std::vector<double> net_input(const ObservationPacket& obs) const;

 private:
  int obs_dim_;
  int n_actions_;
  int window_;
  double gamma_;
  AgentConfig cfg_;
  ParamSet q_online_, q_target_;
  AdamState adam_;
  NStepAssembler nstep_;
};

// --- interaction loop -------------------------------------------------------

struct TrainContext {
  ReplayBuffer* buffer = nullptr;
  TrainSchedule schedule;
  long long* decisions = nullptr;  // global training-decision counter
  Rng* rng = nullptr;
  double beta0 = 0.4;  // importance-weight exponent, annealed linearly to 1
  bool learn = false;
};

/// Run one full episode. With learn=true, transitions are pushed at the
/// buffer's max-seen priority, training runs every train_every decisions past
/// warmup, and targets sync every target_sync decisions. With learn=false the
/// policy is greedy and nothing is stored. Fills every EpisodeLog field
/// except seed and episode.
EpisodeLog run_episode(Agent& agent, AcnomdpEnv& env, std::uint64_t env_seed, TrainContext& ctx,
                       MeasurementTrace* trace = nullptr);

}  // namespace frugal

#endif  // FRUGAL_AGENTS_HPP
