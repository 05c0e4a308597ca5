#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace agrisim {

struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <std::size_t N>
using StateVector = std::array<double, N>;

namespace detail {

template <std::size_t N>
StateVector<N> axpy(const StateVector<N>& y, double h, const StateVector<N>& k)
{
  StateVector<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h * k[i];
  return out;
}

template <std::size_t N>
void check_finite(const StateVector<N>& k)
{
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(k[i])) {
      throw NonFiniteState("non-finite derivative in component " + std::to_string(i));
    }
  }
}

}  // namespace detail

/// One classical fourth-order Runge-Kutta step of dy/dt = f(t, y).
/// `f` must be callable as f(double t, const StateVector<N>&) -> StateVector<N>.
template <std::size_t N, typename Deriv>
StateVector<N> rk4_step(const StateVector<N>& y, double t, double dt, Deriv&& f)
{
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  const StateVector<N> k1 = f(t, y);
  detail::check_finite(k1);
  const StateVector<N> k2 = f(t + 0.5 * dt, detail::axpy(y, 0.5 * dt, k1));
  detail::check_finite(k2);
  const StateVector<N> k3 = f(t + 0.5 * dt, detail::axpy(y, 0.5 * dt, k2));
  detail::check_finite(k3);
  const StateVector<N> k4 = f(t + dt, detail::axpy(y, dt, k3));
  detail::check_finite(k4);

  StateVector<N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace agrisim
