#ifndef FRUGAL_ENV_FACTORY_HPP
#define FRUGAL_ENV_FACTORY_HPP

#include <memory>
#include <string>

#include "frugal/env.hpp"

namespace frugal {

/// Build an environment from its config name: "cartpole", "acrobot", or
/// "chain:N" (e.g. "chain:5"). Throws std::invalid_argument on unknown names.
/// max_episode_steps overrides the environment default when > 0.
std::unique_ptr<Env> make_env(const std::string& name, int max_episode_steps = 0);

}  // namespace frugal

#endif  // FRUGAL_ENV_FACTORY_HPP
