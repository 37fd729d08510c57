#pragma once

#include "polyreg/geometry.hpp"
#include "polyreg/polyflow.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace polyreg {

struct Observation {
  double time = 0.0;
  Vec point;
  /// Position in the caller's original ordering, assigned by TimedDataset.
  std::size_t index = 0;
};

/// Observations sorted by time, all inside [0, horizon].
class TimedDataset {
 public:
  TimedDataset() = default;
  /// Records each observation's position as its index, then stable-sorts by time.
  TimedDataset(std::vector<Observation> observations, double horizon);

  const std::vector<Observation>& observations() const { return observations_; }
  double horizon() const { return horizon_; }
  std::size_t size() const { return observations_.size(); }
  std::vector<Vec> points() const;

 private:
  std::vector<Observation> observations_;
  double horizon_ = 0.0;
};

/// Affine map between original time units and the internal unit interval:
/// internal = (original - origin) / scale.
struct TimeMap {
  double origin = 0.0;
  double scale = 1.0;

  double to_internal(double t) const { return (t - origin) / scale; }
  double to_original(double u) const { return origin + scale * u; }
  static TimeMap unit_interval(std::span<const double> times);
};

struct Gradient {
  Vec base;
  std::vector<Vec> vels;

  /// Product-metric norm of all k + 1 components at p.
  double norm(const Manifold& manifold, const Vec& p) const;
};

enum class Optimizer { SteepestDescent, ConjugateGradient };

std::string to_string(Optimizer optimizer);
Optimizer optimizer_from_string(const std::string& name);

struct FitConfig {
  int order = 1;
  /// Conjugate gradient reuses the previous direction after transporting it
  /// to the new base point (Polak-Ribiere+ with restarts).
  Optimizer optimizer = Optimizer::ConjugateGradient;
  int steps_per_unit = 100;
  int max_iters = 2000;
  double step_size = 1.0;
  double tol = 1e-6;
  double shrink = 0.5;
  double grow = 1.2;
  double min_step = 1e-14;
  /// Hard failure when the base point drifts this far from the manifold.
  double drift_tolerance = 1e-6;
  /// When the line search fails, the fit still counts as converged if the
  /// objective changed by at most this fraction over the last 5 steps, or if
  /// the gradient norm is below dt times its initial value.
  double stationary_rtol = 1e-12;

  void validate() const;
};

struct FitResult {
  int order = 0;
  PolynomialState params;            // internal time units, t in [0, 1]
  PolynomialState params_original;   // velocities rescaled to original time units
  TimeMap time_map;
  Trajectory trajectory;
  double sse = 0.0;
  double frechet_variance = 0.0;
  std::optional<double> r_squared;   // empty when the data variance is zero
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> trace;         // objective after each accepted step, starting value first
  std::optional<double> collinearity;
  std::string termination;
  std::vector<std::string> warnings;
};

/// E0 = (1/N) sum_i d(gamma(t_i), y_i)^2 with observation times snapped to
/// the nearest grid node.
double objective_sse(const Manifold& manifold, const Trajectory& trajectory,
                     const TimedDataset& data);

/// Backward integration of the adjoint system. Returns the gradient of E0
/// with respect to gamma(0) and each v_i(0), i.e. -lambda_i(0).
Gradient integrate_adjoint(const Manifold& manifold, const Trajectory& trajectory,
                           const TimedDataset& data);

/// Gradient-based estimation of the polynomial parameters. Times are mapped
/// affinely onto [0, 1] internally. Without an explicit initial state the
/// search starts at the Frechet mean with all vectors zero.
FitResult fit_polynomial(const Manifold& manifold, const TimedDataset& data,
                         const FitConfig& config,
                         const std::optional<PolynomialState>& initial = std::nullopt);

struct FrechetOptions {
  double tol = 1e-12;
  int max_iters = 1000;
};

/// Karcher-mean iteration gamma <- Exp(gamma, mean of Log_gamma y_i).
Vec frechet_mean(const Manifold& manifold, std::span<const Vec> points,
                 const FrechetOptions& options = {});

/// (1/N) sum_i d(mean, y_i)^2.
double frechet_variance(const Manifold& manifold, std::span<const Vec> points,
                        const Vec& mean);

/// 1 - sse / variance. Throws std::domain_error when variance is not positive.
double r_squared(double sse, double variance);

}  // namespace polyreg
