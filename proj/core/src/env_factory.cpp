#include "frugal/env_factory.hpp"

#include <stdexcept>

#include "frugal/chain.hpp"
#include "frugal/classic_control.hpp"

namespace frugal {

std::unique_ptr<Env> make_env(const std::string& name, int max_episode_steps) {
  if (name == "cartpole") {
    CartPoleParams p;
    if (max_episode_steps > 0) p.max_episode_steps = max_episode_steps;
    return std::make_unique<CartPole>(p);
  }
  if (name == "acrobot") {
    AcrobotParams p;
    if (max_episode_steps > 0) p.max_episode_steps = max_episode_steps;
    return std::make_unique<Acrobot>(p);
  }
  if (name.rfind("chain:", 0) == 0) {
    ChainParams p;
    try {
      p.n = std::stoi(name.substr(6));
    } catch (const std::exception&) {
      throw std::invalid_argument("make_env: bad chain length in \"" + name + "\"");
    }
    if (max_episode_steps > 0) p.max_episode_steps = max_episode_steps;
    return std::make_unique<ChainWorld>(p);
  }
  throw std::invalid_argument("make_env: unknown environment \"" + name + "\"");
}

}  // namespace frugal
