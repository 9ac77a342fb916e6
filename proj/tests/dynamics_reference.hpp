// Test-only reference integrators, written straight from the equations of
// motion as an independent code path for validating the production dynamics.
#ifndef FRUGAL_TESTS_DYNAMICS_REFERENCE_HPP
#define FRUGAL_TESTS_DYNAMICS_REFERENCE_HPP

#include <array>
#include <cmath>
#include <functional>

namespace dynref {

using Vec4 = std::array<double, 4>;

constexpr double PI = 3.14159265358979323846;

// One explicit Euler step of the cart-pole equations.
// State (x, v, theta, omega); force = +F for action 1, -F for action 0.
inline Vec4 cartpole_euler(const Vec4& s, int action) {
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, F = 10.0, dt = 0.02;
  const double M = mc + mp;
  const double f = action == 1 ? F : -F;

  const double x = s[0], v = s[1], th = s[2], om = s[3];
  const double sth = std::sin(th), cth = std::cos(th);

  const double tmp = (f + mp * l * om * om * sth) / M;
  const double alpha = (g * sth - cth * tmp) / (l * (4.0 / 3.0 - mp * cth * cth / M));
  const double a = tmp - mp * l * alpha * cth / M;

  return {x + dt * v, v + dt * a, th + dt * om, om + dt * alpha};
}

// Acrobot equations of motion (two-link pendulum, torque on the middle
// joint), followed by one classical RK4 step of size dt and the standard
// wrapping/clipping. theta1 = 0 hangs down.
inline Vec4 acrobot_derivs(const Vec4& s, double torque) {
  const double m1 = 1.0, m2 = 1.0, l1 = 1.0, lc1 = 0.5, lc2 = 0.5;
  const double I1 = 1.0, I2 = 1.0, g = 9.8;
  const double t1 = s[0], t2 = s[1], w1 = s[2], w2 = s[3];

  const double d1 = m1 * lc1 * lc1 +
                    m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(t2)) + I1 + I2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(t2)) + I2;
  const double phi2 = m2 * lc2 * g * std::cos(t1 + t2 - PI / 2.0);
  const double phi1 = -m2 * l1 * lc2 * w2 * w2 * std::sin(t2) -
                      2.0 * m2 * l1 * lc2 * w2 * w1 * std::sin(t2) +
                      (m1 * lc1 + m2 * l1) * g * std::cos(t1 - PI / 2.0) + phi2;
  const double ddt2 =
      (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * w1 * w1 * std::sin(t2) - phi2) /
      (m2 * lc2 * lc2 + I2 - d2 * d2 / d1);
  const double ddt1 = -(d2 * ddt2 + phi1) / d1;
  return {w1, w2, ddt1, ddt2};
}

inline double wrap_angle(double x) {
  double y = std::fmod(x + PI, 2.0 * PI);
  if (y <= 0.0) y += 2.0 * PI;
  return y - PI;
}

inline Vec4 acrobot_rk4(const Vec4& s, int action) {
  const double dt = 0.2;
  const double torque = action - 1.0;
  const auto f = [&](const Vec4& y) { return acrobot_derivs(y, torque); };

  const Vec4 k1 = f(s);
  Vec4 y2, y3, y4, out;
  for (int i = 0; i < 4; ++i) y2[i] = s[i] + dt / 2.0 * k1[i];
  const Vec4 k2 = f(y2);
  for (int i = 0; i < 4; ++i) y3[i] = s[i] + dt / 2.0 * k2[i];
  const Vec4 k3 = f(y3);
  for (int i = 0; i < 4; ++i) y4[i] = s[i] + dt * k3[i];
  const Vec4 k4 = f(y4);
  for (int i = 0; i < 4; ++i)
    out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  out[0] = wrap_angle(out[0]);
  out[1] = wrap_angle(out[1]);
  const double v1 = 4.0 * PI, v2 = 9.0 * PI;
  out[2] = std::min(std::max(out[2], -v1), v1);
  out[3] = std::min(std::max(out[3], -v2), v2);
  return out;
}

}  // namespace dynref

#endif
