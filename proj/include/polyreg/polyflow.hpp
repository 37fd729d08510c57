#pragma once

#include "polyreg/geometry.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace polyreg {

/// Initial conditions of an order-k Riemannian polynomial: the base point and
/// k tangent vectors (velocity, acceleration, jerk, ...), all based at gamma.
struct PolynomialState {
  Vec gamma;
  std::vector<Vec> vels;

  int order() const { return static_cast<int>(vels.size()); }
};

/// Polynomial states on a uniform time grid 0 = t_0 < ... < t_N = horizon.
struct Trajectory {
  double horizon = 0.0;
  double dt = 0.0;
  std::vector<PolynomialState> states;

  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
  double time(std::size_t node) const { return static_cast<double>(node) * dt; }
  const PolynomialState& back() const { return states.back(); }

  /// Nearest grid node to t; exact midpoints go to the earlier node.
  /// Throws std::out_of_range for t outside [0, horizon].
  std::size_t node_for_time(double t) const;
};

/// Raised when a manifold operation fails inside a time-stepping loop.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t node)
      : std::runtime_error(what), node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

/// Covariant Euler integration of an order-k polynomial. Each step increments
/// v_i by dt * v_{i+1}, transports all vectors along the geodesic step
/// dt * v_1, then moves the base point with the exponential map.
Trajectory integrate_polynomial(const Manifold& manifold, const PolynomialState& initial,
                                double horizon, int steps);

/// Curve points at the nearest grid node of each requested time.
std::vector<Vec> sample_curve(const Trajectory& trajectory, std::span<const double> times);

/// min_i |<v_i, v_1>| / (|v_i| |v_1|) over i >= 2, skipping zero-length v_i.
/// Equals 1 when the initial conditions are collinear, i.e. the polynomial
/// only reparametrizes the image of a geodesic.
double collinearity_diagnostic(const Manifold& manifold, const PolynomialState& state);

/// Same state with the vector list padded with zeros (or truncated) to order k.
PolynomialState with_order(const Manifold& manifold, const PolynomialState& state, int order);

}  // namespace polyreg
