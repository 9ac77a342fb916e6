#ifndef FRUGAL_CLASSIC_CONTROL_HPP
#define FRUGAL_CLASSIC_CONTROL_HPP

#include "frugal/env.hpp"

namespace frugal {

struct CartPoleParams {
  double gravity = 9.8;          // m/s^2
  double cart_mass = 1.0;        // kg
  double pole_mass = 0.1;        // kg
  double half_pole_length = 0.5; // m
  double force_mag = 10.0;       // N, applied as +/- force_mag
  double dt = 0.02;              // s, Euler step
  double x_limit = 2.4;          // m
  double theta_limit_deg = 12.0; // degrees
  int max_episode_steps = 200;
};

/// Cart with a hinged pole; actions push the cart left (0) or right (1).
/// State is (x, x_dot, theta, theta_dot), plain Euler integration.
/// Reward is +1 on every step; the episode ends when the cart leaves
/// [-x_limit, x_limit] or the pole passes +/- theta_limit.
class CartPole final : public Env {
 public:
  explicit CartPole(CartPoleParams params = {});

  EnvDescriptor descriptor() const override;
  const StateVector& state() const { return state_; }
  const CartPoleParams& params() const { return params_; }

  /// Overwrite (x, x_dot, theta, theta_dot); does not touch the step counter.
  void set_state(const StateVector& s);

 protected:
  StateVector do_reset(Rng& rng) override;
  StepOutcome do_step(int action) override;

 private:
  CartPoleParams params_;
  StateVector state_;
  double theta_limit_rad_;
};

struct AcrobotParams {
  double gravity = 9.8;
  double link_mass_1 = 1.0;
  double link_mass_2 = 1.0;
  double link_length_1 = 1.0;
  double link_length_2 = 1.0;
  double link_com_1 = 0.5;  // centre of mass position along link 1
  double link_com_2 = 0.5;
  double link_inertia_1 = 1.0;
  double link_inertia_2 = 1.0;
  double dt = 0.2;              // s, one RK4 step per env step
  double max_vel_1 = 4.0 * 3.14159265358979323846;
  double max_vel_2 = 9.0 * 3.14159265358979323846;
  int max_episode_steps = 200;
  bool trig_observation = false;  // emit (cos t1, sin t1, cos t2, sin t2, w1, w2)
};

/// Two-link underactuated arm; torque {-1, 0, +1} on the second joint
/// (actions 0, 1, 2). theta1 = 0 is the first link hanging down. The goal is
/// to swing the free end above the bar: -cos(t1) - cos(t1 + t2) > 1.
/// Observation is (theta1, theta2, omega1, omega2) with angles wrapped to
/// (-pi, pi]; a trig encoding is available behind params.
class Acrobot final : public Env {
 public:
  explicit Acrobot(AcrobotParams params = {});

  EnvDescriptor descriptor() const override;
  const StateVector& internal_state() const { return state_; }
  const AcrobotParams& params() const { return params_; }

  /// Overwrite (theta1, theta2, omega1, omega2); does not touch the step counter.
  void set_state(const StateVector& s);

 protected:
  StateVector do_reset(Rng& rng) override;
  StepOutcome do_step(int action) override;

 private:
  StateVector observe() const;

  AcrobotParams params_;
  StateVector state_;  // (theta1, theta2, omega1, omega2)
};

}  // namespace frugal

#endif  // FRUGAL_CLASSIC_CONTROL_HPP
