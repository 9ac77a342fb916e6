#ifndef FRUGAL_CHAIN_HPP
#define FRUGAL_CHAIN_HPP

#include "frugal/env.hpp"

namespace frugal {

struct ChainParams {
  int n = 5;                 // number of states, indices 0 .. n-1
  double step_reward = -1.0; // extrinsic reward per step, including the goal-reaching step
  int max_episode_steps = 200;
};

/// Deterministic corridor: start at index 0, goal at index n-1.
/// Action 0 moves left (clamped at 0), action 1 moves right. The observation
/// is the single-element vector {index}.
class ChainWorld final : public Env {
 public:
  explicit ChainWorld(ChainParams params = {});

  EnvDescriptor descriptor() const override;
  int index() const { return index_; }
  const ChainParams& params() const { return params_; }

 protected:
  StateVector do_reset(Rng& rng) override;
  StepOutcome do_step(int action) override;

 private:
  ChainParams params_;
  int index_ = 0;
};

}  // namespace frugal

#endif  // FRUGAL_CHAIN_HPP
