#pragma once

#include "insider_sim/linalg.hpp"

namespace insider_sim {

// Classic fixed-step fourth-order Runge-Kutta.
template <typename F>
Vector rk4_step(F&& f, double t, const Vector& y, double h) {
  const Vector k1 = f(t, y);
  const Vector k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const Vector k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const Vector k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace insider_sim
