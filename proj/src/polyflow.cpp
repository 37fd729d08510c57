#include "polyreg/polyflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polyreg {

std::size_t Trajectory::node_for_time(double t) const {
  constexpr double kSlack = 1e-12;
  if (!(t >= -kSlack * std::max(1.0, horizon) && t <= horizon * (1.0 + kSlack) + kSlack)) {
    throw std::out_of_range("time " + std::to_string(t) + " outside [0, " +
                            std::to_string(horizon) + "]");
  }
  if (dt <= 0.0) return 0;
  const double x = t / dt;
  // round half down: ties go to the earlier node
  long node = static_cast<long>(std::ceil(x - 0.5));
  node = std::clamp(node, 0L, static_cast<long>(steps()));
  return static_cast<std::size_t>(node);
}

Trajectory integrate_polynomial(const Manifold& manifold, const PolynomialState& initial,
                                double horizon, int steps) {
  if (steps < 1) throw std::invalid_argument("integrate_polynomial: steps must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("integrate_polynomial: horizon must be > 0");
  if (initial.gamma.size() != manifold.point_size()) {
    throw std::invalid_argument("integrate_polynomial: base point has wrong dimension");
  }
  for (const auto& v : initial.vels) {
    if (v.size() != manifold.tangent_size()) {
      throw std::invalid_argument("integrate_polynomial: vector has wrong dimension");
    }
  }

  Trajectory traj;
  traj.horizon = horizon;
  traj.dt = horizon / steps;
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.push_back(initial);

  const double dt = traj.dt;
  const int k = initial.order();
  for (int n = 0; n < steps; ++n) {
    const PolynomialState& cur = traj.states.back();
    PolynomialState next;
    try {
      if (k == 0) {
        next.gamma = cur.gamma;
      } else {
        const Vec step = dt * cur.vels[0];
        next.vels.resize(static_cast<std::size_t>(k));
        for (int i = 0; i + 1 < k; ++i) {
          next.vels[i] = manifold.transport(cur.gamma, step, cur.vels[i] + dt * cur.vels[i + 1]);
        }
        next.vels[k - 1] = manifold.transport(cur.gamma, step, cur.vels[k - 1]);
        next.gamma = manifold.project_point(manifold.exp(cur.gamma, step));
        for (auto& v : next.vels) v = manifold.project_tangent(next.gamma, v);
      }
    } catch (const std::exception& e) {
      throw IntegrationError(std::string("integrate_polynomial: step ") + std::to_string(n) +
                                 ": " + e.what(),
                             static_cast<std::size_t>(n));
    }
    traj.states.push_back(std::move(next));
  }
  return traj;
}

std::vector<Vec> sample_curve(const Trajectory& trajectory, std::span<const double> times) {
  std::vector<Vec> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(trajectory.states[trajectory.node_for_time(t)].gamma);
  return out;
}

double collinearity_diagnostic(const Manifold& manifold, const PolynomialState& state) {
  if (state.order() < 2) {
    throw std::invalid_argument("collinearity_diagnostic: need order >= 2");
  }
  const Vec& v1 = state.vels[0];
  const double n1 = manifold.norm(state.gamma, v1);
  if (n1 == 0.0) throw std::invalid_argument("collinearity_diagnostic: v_1 is zero");
  double score = 1.0;
  for (std::size_t i = 1; i < state.vels.size(); ++i) {
    const double ni = manifold.norm(state.gamma, state.vels[i]);
    if (ni == 0.0) continue;
    const double c = std::abs(manifold.inner(state.gamma, state.vels[i], v1)) / (ni * n1);
    score = std::min(score, std::min(c, 1.0));
  }
  return score;
}

PolynomialState with_order(const Manifold& manifold, const PolynomialState& state, int order) {
  if (order < 0) throw std::invalid_argument("with_order: negative order");
  PolynomialState out = state;
  out.vels.resize(static_cast<std::size_t>(order), manifold.zero_tangent());
  return out;
}

}  // namespace polyreg
