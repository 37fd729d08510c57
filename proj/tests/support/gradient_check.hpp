#pragma once

#include "polyreg/polyflow.hpp"
#include "polyreg/regress.hpp"

#include <cmath>
#include <vector>

namespace polyreg::testing {

struct GradientComparison {
  Eigen::VectorXd adjoint;
  Eigen::VectorXd finite_difference;

  double relative_error() const {
    return (adjoint - finite_difference).norm() / finite_difference.norm();
  }
};

inline double energy_of(const Manifold& manifold, const PolynomialState& state,
                        const TimedDataset& data, int steps) {
  const Trajectory traj = integrate_polynomial(manifold, state, data.horizon(), steps);
  return objective_sse(manifold, traj, data);
}

/// Central differences of the objective along an orthonormal basis of every
/// parameter block. Base-point perturbations move gamma(0) along a geodesic and
/// carry the vectors along by parallel transport.
inline GradientComparison compare_gradient(const Manifold& manifold, const PolynomialState& state,
                                           const TimedDataset& data, int steps,
                                           double eps = 1e-5) {
  const Trajectory traj = integrate_polynomial(manifold, state, data.horizon(), steps);
  const Gradient g = integrate_adjoint(manifold, traj, data);
  const std::vector<Vec> basis = manifold.tangent_basis(state.gamma);
  const std::size_t blocks = 1 + state.vels.size();

  std::vector<double> adj;
  std::vector<double> fd;
  for (std::size_t b = 0; b < blocks; ++b) {
    for (const Vec& e : basis) {
      const auto shifted = [&](double h) {
        PolynomialState s = state;
        if (b == 0) {
          s.gamma = manifold.project_point(manifold.exp(state.gamma, h * e));
          for (auto& v : s.vels) v = manifold.transport(state.gamma, h * e, v);
        } else {
          s.vels[b - 1] += h * e;
        }
        return energy_of(manifold, s, data, steps);
      };
      fd.push_back((shifted(eps) - shifted(-eps)) / (2.0 * eps));
      const Vec& grad = b == 0 ? g.base : g.vels[b - 1];
      adj.push_back(manifold.inner(state.gamma, grad, e));
    }
  }
  GradientComparison out;
  out.adjoint = Eigen::Map<Eigen::VectorXd>(adj.data(), static_cast<Eigen::Index>(adj.size()));
  out.finite_difference =
      Eigen::Map<Eigen::VectorXd>(fd.data(), static_cast<Eigen::Index>(fd.size()));
  return out;
}

}  // namespace polyreg::testing
