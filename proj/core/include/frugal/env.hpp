#ifndef FRUGAL_ENV_HPP
#define FRUGAL_ENV_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "frugal/rng.hpp"

namespace frugal {

using StateVector = std::vector<double>;

struct EnvDescriptor {
  int obs_dim = 0;
  int n_actions = 0;
  int max_episode_steps = 0;
  double r_ext_min = 0.0;
  double r_ext_max = 0.0;
};

struct StepOutcome {
  StateVector next_state;
  double r_ext = 0.0;
  bool terminal = false;   // task-defined end
  bool truncated = false;  // horizon reached
};

/// Fully observable base environment. Deterministic given the reset seed and
/// the action sequence. A single instance is not thread safe; run one
/// instance per worker.
class Env {
 public:
  virtual ~Env() = default;

  /// Start a new episode. Identical seed => identical initial state.
  StateVector reset(std::uint64_t seed) {
    rng_.seed(seed);
    steps_ = 0;
    active_ = true;
    return do_reset(rng_);
  }

  /// Advance the dynamics exactly one base time step.
  StepOutcome step(int action) {
    if (!active_) throw std::logic_error("Env::step called on a finished episode");
    const EnvDescriptor d = descriptor();
    if (action < 0 || action >= d.n_actions)
      throw std::invalid_argument("Env::step: action out of range");
    StepOutcome out = do_step(action);
    ++steps_;
    if (steps_ >= d.max_episode_steps) out.truncated = true;
    if (out.terminal || out.truncated) active_ = false;
    return out;
  }

  virtual EnvDescriptor descriptor() const = 0;

  bool active() const { return active_; }
  int steps() const { return steps_; }

 protected:
  virtual StateVector do_reset(Rng& rng) = 0;
  virtual StepOutcome do_step(int action) = 0;

 private:
  Rng rng_;
  int steps_ = 0;
  bool active_ = false;
};

}  // namespace frugal

#endif  // FRUGAL_ENV_HPP
