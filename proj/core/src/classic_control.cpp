#include "frugal/classic_control.hpp"

#include <array>
#include <cmath>

namespace frugal {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Wrap an angle into (-pi, pi].
double wrap_pi(double x) {
  double y = std::fmod(x + kPi, 2.0 * kPi);
  if (y <= 0.0) y += 2.0 * kPi;
  return y - kPi;
}

double clip(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

}  // namespace

// ---------------------------------------------------------------------------
// CartPole
// ---------------------------------------------------------------------------

CartPole::CartPole(CartPoleParams params)
    : params_(params), state_(4, 0.0),
      theta_limit_rad_(params.theta_limit_deg * 2.0 * kPi / 360.0) {}

EnvDescriptor CartPole::descriptor() const {
  return {4, 2, params_.max_episode_steps, 1.0, 1.0};
}

StateVector CartPole::do_reset(Rng& rng) {
  for (auto& v : state_) v = rng.uniform(-0.05, 0.05);
  return state_;
}

void CartPole::set_state(const StateVector& s) {
  if (s.size() != 4) throw std::invalid_argument("CartPole::set_state: need 4 components");
  state_ = s;
}

StepOutcome CartPole::do_step(int action) {
  const double force = (action == 1) ? params_.force_mag : -params_.force_mag;
  const double total_mass = params_.cart_mass + params_.pole_mass;
  const double polemass_length = params_.pole_mass * params_.half_pole_length;

  double x = state_[0], x_dot = state_[1], theta = state_[2], theta_dot = state_[3];
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);

  const double temp = (force + polemass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (params_.gravity * sin_t - cos_t * temp) /
      (params_.half_pole_length * (4.0 / 3.0 - params_.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  x += params_.dt * x_dot;
  x_dot += params_.dt * x_acc;
  theta += params_.dt * theta_dot;
  theta_dot += params_.dt * theta_acc;
  state_ = {x, x_dot, theta, theta_dot};

  StepOutcome out;
  out.next_state = state_;
  out.r_ext = 1.0;
  out.terminal = x < -params_.x_limit || x > params_.x_limit ||
                 theta < -theta_limit_rad_ || theta > theta_limit_rad_;
  return out;
}

// ---------------------------------------------------------------------------
// Acrobot
// ---------------------------------------------------------------------------

Acrobot::Acrobot(AcrobotParams params) : params_(params), state_(4, 0.0) {}

EnvDescriptor Acrobot::descriptor() const {
  return {params_.trig_observation ? 6 : 4, 3, params_.max_episode_steps, -1.0, 0.0};
}

StateVector Acrobot::do_reset(Rng& rng) {
  for (auto& v : state_) v = rng.uniform(-0.1, 0.1);
  return observe();
}

void Acrobot::set_state(const StateVector& s) {
  if (s.size() != 4) throw std::invalid_argument("Acrobot::set_state: need 4 components");
  state_ = s;
}

StateVector Acrobot::observe() const {
  if (!params_.trig_observation) return state_;
  return {std::cos(state_[0]), std::sin(state_[0]),
          std::cos(state_[1]), std::sin(state_[1]),
          state_[2], state_[3]};
}

StepOutcome Acrobot::do_step(int action) {
  const double torque = static_cast<double>(action - 1);  // {-1, 0, +1}
  const auto& p = params_;

  auto derivs = [&p, torque](const std::array<double, 4>& s) {
    const double t1 = s[0], t2 = s[1], w1 = s[2], w2 = s[3];
    const double m1 = p.link_mass_1, m2 = p.link_mass_2;
    const double l1 = p.link_length_1;
    const double lc1 = p.link_com_1, lc2 = p.link_com_2;
    const double i1 = p.link_inertia_1, i2 = p.link_inertia_2;
    const double g = p.gravity;

    const double d1 =
        m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(t2)) + i1 + i2;
    const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(t2)) + i2;
    const double phi2 = m2 * lc2 * g * std::cos(t1 + t2 - kPi / 2.0);
    const double phi1 = -m2 * l1 * lc2 * w2 * w2 * std::sin(t2) -
                        2.0 * m2 * l1 * lc2 * w2 * w1 * std::sin(t2) +
                        (m1 * lc1 + m2 * l1) * g * std::cos(t1 - kPi / 2.0) + phi2;
    const double dd2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * w1 * w1 * std::sin(t2) - phi2) /
                       (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    const double dd1 = -(d2 * dd2 + phi1) / d1;
    return std::array<double, 4>{w1, w2, dd1, dd2};
  };

  // One classical RK4 step of size dt with the torque held constant.
  std::array<double, 4> y{state_[0], state_[1], state_[2], state_[3]};
  const double h = p.dt;
  const auto k1 = derivs(y);
  std::array<double, 4> tmp;
  for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  const auto k2 = derivs(tmp);
  for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  const auto k3 = derivs(tmp);
  for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * k3[i];
  const auto k4 = derivs(tmp);
  for (int i = 0; i < 4; ++i)
    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  state_[0] = wrap_pi(y[0]);
  state_[1] = wrap_pi(y[1]);
  state_[2] = clip(y[2], -p.max_vel_1, p.max_vel_1);
  state_[3] = clip(y[3], -p.max_vel_2, p.max_vel_2);

  StepOutcome out;
  out.next_state = observe();
  out.terminal = -std::cos(state_[0]) - std::cos(state_[0] + state_[1]) > 1.0;
  out.r_ext = out.terminal ? 0.0 : -1.0;
  return out;
}

}  // namespace frugal
