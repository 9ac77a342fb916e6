#ifndef FRUGAL_ACNOMDP_HPP
#define FRUGAL_ACNOMDP_HPP

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "frugal/env.hpp"

namespace frugal {

/// What the agent actually sees. `payload` is the resolved observation:
/// with stale_mode=memory it holds the memory_window most recent measured
/// states, newest first (length W*m; with the default W=1, exactly the last
/// measured state); with stale_mode=zeros it is empty (EMPTY marker) when the
/// current state was not measured. fresh=true iff the leading state is the
/// true current state of the base environment.
struct ObservationPacket {
  std::optional<StateVector> payload;
  bool fresh = false;
  int source_step = 0;  // base-step index at which the payload was measured
};

/// OSMBOA action: a control action plus a measure-next-state bit.
struct ActionTuple {
  int a_c = 0;
  int a_m = 0;  // 1 = measure, 0 = skip
};

/// DMSOA decision: apply a_c for k steps, measuring only on the k-th.
struct SkipDecision {
  int a_c = 0;
  int k = 1;  // in {1..K}
};

struct RewardSpec {
  double c = 0.0;      // intrinsic bonus delivered on skipped steps
  double gamma = 1.0;  // in (0, 1]
};

enum class StaleMode { memory, zeros };

struct WrapperConfig {
  double c = 0.0;
  double gamma = 1.0;
  int K = 3;
  int memory_window = 1;
  StaleMode stale_mode = StaleMode::memory;
};

/// Replay record for one agent decision.
struct CostedTransition {
  ObservationPacket obs;
  int a_c = 0;
  int a_m_or_k = 0;   // the chosen a_m (OSMBOA) or k (DMSOA)
  double reward = 0.0;  // aggregated over the decision span, discounted within it
  ObservationPacket next_obs;
  bool terminal = false;
  bool truncated = false;
  int base_steps = 1;     // env steps consumed; also the bootstrap discount exponent
  int measured_count = 0; // measured base steps within the span
};

/// Per-decision measurement record; spans tile the episode exactly.
struct DecisionRecord {
  int decision_index = 0;
  int span = 1;
  int k_or_am = 0;
  std::vector<std::uint8_t> measured;  // one flag per base step in the span
};

struct MeasurementTrace {
  std::vector<DecisionRecord> decisions;
  int measured_steps() const;
  int unmeasured_steps() const;
};

/// Append one wrapper transition to a trace as a decision record.
void append_decision(MeasurementTrace& trace, const CostedTransition& t);

/// (#unmeasured base steps) / (#measured base steps).
/// Throws std::domain_error when the trace has no measured step.
double measurement_ratio(const MeasurementTrace& trace);

/// Per-episode accounting kept by the wrapper.
struct EpisodeAccounting {
  int base_steps = 0;
  int measured_steps = 0;
  int unmeasured_steps = 0;
  double costed_sum = 0.0;      // undiscounted sum of delivered rewards (c or r_ext)
  double extrinsic_sum = 0.0;   // true r_ext of every base step, measured or not
  double discounted_costed = 0.0;  // sum over base steps of gamma^t * delivered reward
};

/// Wraps a fully observable base environment into an AC-NOMDP: the agent pays
/// for measurements via reward routing (r_ext on measured steps, the bonus c
/// on skipped ones) and sees a stale or empty observation when it skips.
///
/// Episode end forces a final measurement: the terminal or truncating base
/// step always delivers its extrinsic reward and a fresh observation.
/// Truncated transitions are not terminal; the learner still bootstraps.
class AcnomdpEnv {
 public:
  AcnomdpEnv(std::unique_ptr<Env> base, WrapperConfig cfg);

  ObservationPacket reset(std::uint64_t seed);

  /// One base step under the (a_c, a_m) tuple interface.
  CostedTransition osmboa_step(ActionTuple a);

  /// Memory window plus freshness flag, the OSMBOA network input (W*m + 1).
  std::vector<double> osmboa_observe() const;

  /// Apply d.a_c for up to d.k base steps, measuring on the last executed
  /// step. Steps 1..j-1 deliver c, step j delivers its r_ext; the aggregated
  /// reward discounts within the span and base_steps records j.
  CostedTransition dmsoa_schedule(SkipDecision d);

  bool episode_active() const { return active_; }
  const ObservationPacket& current_observation() const { return packet_; }
  const EpisodeAccounting& accounting() const { return accounting_; }
  const EnvDescriptor& base_descriptor() const { return descriptor_; }
  const WrapperConfig& config() const { return cfg_; }

  /// Payload resolved to a flat vector (zeros when EMPTY) with the freshness
  /// flag appended; payload_dim is the expected payload length.
  static std::vector<double> flagged_input(const ObservationPacket& p, int payload_dim);

 private:
  void require_active() const;
  ObservationPacket make_packet(const StepOutcome& out, bool measured);
  void account_step(double r_ext, bool measured);

  std::unique_ptr<Env> base_;
  WrapperConfig cfg_;
  EnvDescriptor descriptor_;
  std::deque<StateVector> memory_;  // newest first, size = memory_window
  ObservationPacket packet_;
  EpisodeAccounting accounting_;
  double episode_discount_ = 1.0;
  int base_step_index_ = 0;
  bool active_ = false;
};

}  // namespace frugal

#endif  // FRUGAL_ACNOMDP_HPP
