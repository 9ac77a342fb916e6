#include "frugal/chain.hpp"

#include <stdexcept>

namespace frugal {

ChainWorld::ChainWorld(ChainParams params) : params_(params) {
  if (params_.n < 2) throw std::invalid_argument("ChainWorld: n must be >= 2");
}

EnvDescriptor ChainWorld::descriptor() const {
  return {1, 2, params_.max_episode_steps, params_.step_reward, params_.step_reward};
}

StateVector ChainWorld::do_reset(Rng&) {
  index_ = 0;
  return {0.0};
}

StepOutcome ChainWorld::do_step(int action) {
  index_ = (action == 1) ? index_ + 1 : (index_ > 0 ? index_ - 1 : 0);
  StepOutcome out;
  out.next_state = {static_cast<double>(index_)};
  out.r_ext = params_.step_reward;
  out.terminal = index_ == params_.n - 1;
  return out;
}

}  // namespace frugal
