#include "polyreg/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace polyreg {

namespace {
constexpr double kEpsilon = std::numeric_limits<double>::epsilon();
}  // namespace

TimedDataset::TimedDataset(std::vector<Observation> observations, double horizon)
    : observations_(std::move(observations)), horizon_(horizon) {
  if (observations_.empty()) throw std::invalid_argument("TimedDataset: need N >= 1");
  if (!(horizon_ >= 0.0)) throw std::invalid_argument("TimedDataset: negative horizon");
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const double t = observations_[i].time;
    if (!std::isfinite(t) || t < 0.0 || t > horizon_ * (1.0 + 1e-12) + 1e-12) {
      throw std::invalid_argument("TimedDataset: observation " + std::to_string(i) +
                                  " has time outside [0, horizon]");
    }
    observations_[i].index = i;
  }
  std::stable_sort(observations_.begin(), observations_.end(),
                   [](const Observation& a, const Observation& b) { return a.time < b.time; });
}

std::vector<Vec> TimedDataset::points() const {
  std::vector<Vec> out;
  out.reserve(observations_.size());
  for (const auto& o : observations_) out.push_back(o.point);
  return out;
}

TimeMap TimeMap::unit_interval(std::span<const double> times) {
  if (times.empty()) throw std::invalid_argument("TimeMap: no times");
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  TimeMap map;
  map.origin = *lo;
  map.scale = *hi > *lo ? *hi - *lo : 1.0;
  return map;
}

double Gradient::norm(const Manifold& manifold, const Vec& p) const {
  double sq = manifold.inner(p, base, base);
  for (const auto& v : vels) sq += manifold.inner(p, v, v);
  return std::sqrt(std::max(0.0, sq));
}

void FitConfig::validate() const {
  if (order < 0 || order > 6) throw std::invalid_argument("FitConfig: order must be in [0, 6]");
  if (steps_per_unit < 1) throw std::invalid_argument("FitConfig: steps_per_unit must be >= 1");
  if (max_iters < 0) throw std::invalid_argument("FitConfig: max_iters must be >= 0");
  if (!(step_size > 0.0) || !(tol > 0.0) || !(min_step > 0.0) || !(drift_tolerance > 0.0)) {
    throw std::invalid_argument("FitConfig: step_size, tol, min_step, drift_tolerance must be > 0");
  }
  if (!(stationary_rtol >= 0.0)) throw std::invalid_argument("FitConfig: stationary_rtol must be >= 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("FitConfig: shrink must be in (0, 1)");
  if (!(grow >= 1.0)) throw std::invalid_argument("FitConfig: grow must be >= 1");
}

namespace {

void check_horizon(const Trajectory& trajectory, const TimedDataset& data) {
  if (trajectory.states.empty()) throw std::invalid_argument("empty trajectory");
  if (std::abs(trajectory.horizon - data.horizon()) >
      1e-12 * std::max(1.0, trajectory.horizon)) {
    throw std::invalid_argument("trajectory horizon " + std::to_string(trajectory.horizon) +
                                " does not match data horizon " +
                                std::to_string(data.horizon()));
  }
}

std::vector<std::vector<std::size_t>> bucket_by_node(const Trajectory& trajectory,
                                                     const TimedDataset& data) {
  std::vector<std::vector<std::size_t>> buckets(trajectory.states.size());
  const auto& obs = data.observations();
  for (std::size_t j = 0; j < obs.size(); ++j) {
    buckets[trajectory.node_for_time(obs[j].time)].push_back(j);
  }
  return buckets;
}

}  // namespace

double objective_sse(const Manifold& manifold, const Trajectory& trajectory,
                     const TimedDataset& data) {
  check_horizon(trajectory, data);
  const auto& obs = data.observations();
  double total = 0.0;
  for (std::size_t j = 0; j < obs.size(); ++j) {
    const Vec& gamma = trajectory.states[trajectory.node_for_time(obs[j].time)].gamma;
    try {
      const double d = manifold.dist(gamma, obs[j].point);
      total += d * d;
    } catch (const GeometryError& e) {
      throw GeometryError("objective_sse: observation " + std::to_string(obs[j].index) +
                          ": " + e.what());
    }
  }
  return total / static_cast<double>(obs.size());
}

Gradient integrate_adjoint(const Manifold& manifold, const Trajectory& trajectory,
                           const TimedDataset& data) {
  check_horizon(trajectory, data);
  const auto buckets = bucket_by_node(trajectory, data);
  const auto& obs = data.observations();
  const double jump_weight = 2.0 / static_cast<double>(obs.size());
  const int k = trajectory.states.front().order();
  const double dt = trajectory.dt;

  std::vector<Vec> lambda(static_cast<std::size_t>(k) + 1, manifold.zero_tangent());

  const auto apply_jumps = [&](std::size_t node) {
    const Vec& gamma = trajectory.states[node].gamma;
    for (std::size_t j : buckets[node]) {
      try {
        lambda[0] += jump_weight * manifold.log(gamma, obs[j].point);
      } catch (const GeometryError& e) {
        throw IntegrationError("integrate_adjoint: observation " +
                                   std::to_string(obs[j].index) + ": " + e.what(),
                               node);
      }
    }
  };

  for (std::size_t n = trajectory.steps(); n >= 1; --n) {
    const PolynomialState& state = trajectory.states[n];
    try {
      if (k >= 1) {
        const Vec& w = state.vels[0];
        Vec curvature_sum = manifold.zero_tangent();
        for (int i = 1; i <= k; ++i) {
          curvature_sum += manifold.curvature(state.gamma, state.vels[i - 1], lambda[i], w);
        }
        lambda[0] += dt * curvature_sum;
      }
    } catch (const std::exception& e) {
      throw IntegrationError(std::string("integrate_adjoint: curvature: ") + e.what(), n);
    }
    apply_jumps(n);
    if (k >= 1) {
      try {
        const Vec back = -dt * state.vels[0];
        for (int i = k; i >= 1; --i) {
          lambda[i] = manifold.transport(state.gamma, back, lambda[i] + dt * lambda[i - 1]);
        }
        lambda[0] = manifold.transport(state.gamma, back, lambda[0]);
        const Vec& previous = trajectory.states[n - 1].gamma;
        for (auto& l : lambda) l = manifold.project_tangent(previous, l);
      } catch (const std::exception& e) {
        throw IntegrationError(std::string("integrate_adjoint: transport: ") + e.what(), n);
      }
    }
  }
  apply_jumps(0);

  Gradient g;
  g.base = -lambda[0];
  for (int i = 1; i <= k; ++i) g.vels.push_back(-lambda[i]);
  return g;
}

Vec frechet_mean(const Manifold& manifold, std::span<const Vec> points,
                 const FrechetOptions& options) {
  if (points.empty()) throw std::invalid_argument("frechet_mean: no points");
  const double n = static_cast<double>(points.size());
  const auto mean_log = [&](const Vec& p) {
    Vec g = manifold.zero_tangent();
    for (const auto& y : points) g += manifold.log(p, y);
    return Vec(g / n);
  };

  Vec mean = points.front();
  double variance = frechet_variance(manifold, points, mean);
  Vec direction = mean_log(mean);
  for (int iter = 0; iter < options.max_iters; ++iter) {
    const double gnorm = manifold.norm(mean, direction);
    if (gnorm < options.tol) return mean;
    double step = 1.0;
    bool accepted = false;
    while (step > 1e-10) {
      const Vec trial = manifold.project_point(manifold.exp(mean, step * direction));
      const double trial_variance = frechet_variance(manifold, points, trial);
      // Near the minimum the decrease is below round-off; a full Karcher step
      // that does not measurably increase the variance is still taken.
      const double slack = step == 1.0 ? 8.0 * kEpsilon * variance : 0.0;
      if (trial_variance < variance || trial_variance <= variance + slack) {
        mean = trial;
        variance = std::min(variance, trial_variance);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (gnorm < 1e-9) return mean;
      throw NonConvergenceError("frechet_mean: line search stalled", gnorm);
    }
    direction = mean_log(mean);
  }
  const double gnorm = manifold.norm(mean, direction);
  if (gnorm < 1e-9) return mean;
  throw NonConvergenceError("frechet_mean: iteration limit reached", gnorm);
}

double frechet_variance(const Manifold& manifold, std::span<const Vec> points,
                        const Vec& mean) {
  double total = 0.0;
  for (const auto& y : points) {
    const double d = manifold.dist(mean, y);
    total += d * d;
  }
  return total / static_cast<double>(points.size());
}

double r_squared(double sse, double variance) {
  if (!(variance > 0.0)) {
    throw std::domain_error("r_squared: data variance is zero, R^2 is undefined");
  }
  return 1.0 - sse / variance;
}

namespace {

double block_inner(const Manifold& manifold, const Vec& p, const Gradient& a, const Gradient& b) {
  double total = manifold.inner(p, a.base, b.base);
  for (std::size_t i = 0; i < a.vels.size(); ++i) total += manifold.inner(p, a.vels[i], b.vels[i]);
  return total;
}

Gradient scaled(const Gradient& a, double s) {
  Gradient out{s * a.base, {}};
  for (const auto& v : a.vels) out.vels.push_back(s * v);
  return out;
}

Gradient combine(const Gradient& a, double s, const Gradient& b) {
  Gradient out{a.base + s * b.base, {}};
  for (std::size_t i = 0; i < a.vels.size(); ++i) out.vels.push_back(a.vels[i] + s * b.vels[i]);
  return out;
}

/// Moves every block of g from p to Exp_p(move) by parallel transport.
Gradient transport_blocks(const Manifold& manifold, const Vec& p, const Vec& move,
                          const Vec& target, const Gradient& g) {
  const auto carry = [&](const Vec& x) {
    return manifold.project_tangent(target, manifold.transport(p, move, x));
  };
  Gradient out{carry(g.base), {}};
  for (const auto& v : g.vels) out.vels.push_back(carry(v));
  return out;
}

/// Parameters after a step of length alpha along direction d: the base point
/// follows the geodesic alpha * d.base and each updated vector is carried along.
PolynomialState advance(const Manifold& manifold, const PolynomialState& state,
                        const Gradient& d, double alpha) {
  PolynomialState out;
  const Vec move = alpha * d.base;
  out.gamma = manifold.project_point(manifold.exp(state.gamma, move));
  out.vels.reserve(state.vels.size());
  for (std::size_t i = 0; i < state.vels.size(); ++i) {
    const Vec updated = state.vels[i] + alpha * d.vels[i];
    out.vels.push_back(
        manifold.project_tangent(out.gamma, manifold.transport(state.gamma, move, updated)));
  }
  return out;
}

struct Candidate {
  double alpha = 0.0;
  PolynomialState state;
  Trajectory trajectory;
  double energy = std::numeric_limits<double>::infinity();
};

}  // namespace

std::string to_string(Optimizer optimizer) {
  return optimizer == Optimizer::SteepestDescent ? "steepest-descent" : "conjugate-gradient";
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "steepest-descent" || name == "sd") return Optimizer::SteepestDescent;
  if (name == "conjugate-gradient" || name == "cg") return Optimizer::ConjugateGradient;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

FitResult fit_polynomial(const Manifold& manifold, const TimedDataset& data,
                         const FitConfig& config,
                         const std::optional<PolynomialState>& initial) {
  config.validate();
  FitResult result;
  result.order = config.order;

  std::vector<double> times;
  times.reserve(data.size());
  for (const auto& o : data.observations()) times.push_back(o.time);
  result.time_map = TimeMap::unit_interval(times);

  std::vector<Observation> internal_obs = data.observations();
  for (auto& o : internal_obs) o.time = std::clamp(result.time_map.to_internal(o.time), 0.0, 1.0);
  const TimedDataset internal(std::move(internal_obs), 1.0);

  if (static_cast<int>(data.size()) < config.order + 1) {
    result.warnings.push_back("underdetermined: N = " + std::to_string(data.size()) +
                              " observations for order " + std::to_string(config.order));
  }

  const std::vector<Vec> points = internal.points();
  const Vec mean = frechet_mean(manifold, points);
  result.frechet_variance = frechet_variance(manifold, points, mean);

  PolynomialState state;
  if (initial) {
    state = with_order(manifold, *initial, config.order);
  } else {
    state.gamma = mean;
    state.vels.assign(static_cast<std::size_t>(config.order), manifold.zero_tangent());
  }

  const int steps = config.steps_per_unit;
  const bool conjugate = config.optimizer == Optimizer::ConjugateGradient;
  const std::size_t restart_every =
      static_cast<std::size_t>(manifold.tangent_size()) * (1 + state.vels.size());

  const auto evaluate = [&](Candidate& c) {
    try {
      c.trajectory = integrate_polynomial(manifold, c.state, 1.0, steps);
      c.energy = objective_sse(manifold, c.trajectory, internal);
    } catch (const std::exception&) {
      // A trial that leaves the domain of log or exp counts as rejected.
      c.energy = std::numeric_limits<double>::infinity();
    }
    return c.energy;
  };

  Trajectory traj = integrate_polynomial(manifold, state, 1.0, steps);
  double energy = objective_sse(manifold, traj, internal);
  result.trace.push_back(energy);

  Gradient g = integrate_adjoint(manifold, traj, internal);
  Gradient direction = scaled(g, -1.0);
  const double initial_gradient_norm = g.norm(manifold, state.gamma);
  std::size_t since_restart = 0;
  double step = config.step_size;
  result.termination = "iteration limit";

  for (int iter = 0; iter < config.max_iters; ++iter) {
    result.gradient_norm = g.norm(manifold, state.gamma);
    if (result.gradient_norm < config.tol) {
      result.converged = true;
      result.termination = "gradient tolerance";
      break;
    }
    double slope = block_inner(manifold, state.gamma, g, direction);
    if (!conjugate || !(slope < 0.0) || since_restart >= restart_every) {
      direction = scaled(g, -1.0);
      slope = -result.gradient_norm * result.gradient_norm;
      since_restart = 0;
    }

    constexpr double kArmijo = 1e-4;
    std::optional<Candidate> best;
    double alpha = step;
    while (alpha >= config.min_step) {
      Candidate trial{alpha, advance(manifold, state, direction, alpha), {}, 0.0};
      const double e = evaluate(trial);
      if (e <= energy + kArmijo * alpha * slope && e < energy) {
        best = std::move(trial);
        break;
      }
      if (conjugate && std::isfinite(e)) {
        // Minimizer of the quadratic through E(0), E'(0) and E(alpha).
        const double curvature = e - energy - slope * alpha;
        double next = curvature > 0.0 ? -slope * alpha * alpha / (2.0 * curvature) : 0.0;
        next = std::clamp(next, 0.1 * alpha, config.shrink * alpha);
        alpha = next;
      } else {
        alpha *= config.shrink;
      }
    }
    if (best && conjugate) {
      // Refine the accepted step by quadratic interpolation through E(0),
      // E'(0) and the best trial so far.
      for (int refine = 0; refine < 4; ++refine) {
        const double a = best->alpha;
        const double curvature = best->energy - energy - slope * a;
        if (!(curvature > 0.0)) break;
        const double a_q = std::clamp(-slope * a * a / (2.0 * curvature), 0.1 * a, 100.0 * a);
        if (std::abs(a_q - a) <= 1e-3 * a) break;
        Candidate refined{a_q, advance(manifold, state, direction, a_q), {}, 0.0};
        if (!(evaluate(refined) < best->energy)) break;
        best = std::move(refined);
      }
    }
    if (!best) {
      if (conjugate && since_restart > 0) {
        // Retry once along the negative gradient before giving up.
        direction = scaled(g, -1.0);
        since_restart = restart_every;
        step = config.step_size;
        continue;
      }
      // The adjoint gradient is only O(dt)-consistent with the discrete
      // objective, so near the optimum its bias can exceed tol while the
      // objective itself no longer changes.
      constexpr std::size_t kWindow = 5;
      const std::size_t n = result.trace.size();
      const bool stationary =
          n > kWindow && result.trace[n - 1 - kWindow] - energy <= config.stationary_rtol * energy;
      const double dt = 1.0 / steps;
      const bool at_floor = result.gradient_norm <= dt * initial_gradient_norm;
      if (stationary || at_floor) {
        std::ostringstream msg;
        msg << "line search failed with gradient norm " << result.gradient_norm
            << " above tol; accepted as "
            << (stationary ? "a stationary objective" : "the discretization floor dt * |g_0|");
        result.converged = true;
        result.termination = stationary ? "objective stationary" : "discretization floor";
        result.warnings.push_back(msg.str());
        break;
      }
      std::ostringstream msg;
      msg << "line search failed (step below " << config.min_step << ")";
      result.termination = msg.str();
      break;
    }

    const Vec move = best->alpha * direction.base;
    const Vec previous_gamma = state.gamma;
    state = std::move(best->state);
    traj = std::move(best->trajectory);
    energy = best->energy;
    step = std::max(best->alpha * config.grow, config.min_step);
    ++result.iterations;
    result.trace.push_back(energy);

    const PointDiagnostics diag = manifold.validate_point(state.gamma);
    if (diag.max_residual() > config.drift_tolerance) {
      throw GeometryError("fit_polynomial: base point drifted off the manifold (residual " +
                          std::to_string(diag.max_residual()) + ")");
    }

    Gradient g_new = integrate_adjoint(manifold, traj, internal);
    if (conjugate) {
      const Gradient g_old = transport_blocks(manifold, previous_gamma, move, state.gamma, g);
      const Gradient d_old =
          transport_blocks(manifold, previous_gamma, move, state.gamma, direction);
      const double denom = block_inner(manifold, previous_gamma, g, g);
      const double beta = std::max(
          0.0, block_inner(manifold, state.gamma, g_new, combine(g_new, -1.0, g_old)) / denom);
      direction = combine(scaled(g_new, -1.0), beta, d_old);
      ++since_restart;
    }
    g = std::move(g_new);
  }
  if (!result.converged) {
    result.gradient_norm = g.norm(manifold, state.gamma);
    if (result.gradient_norm < config.tol) {
      result.converged = true;
      result.termination = "gradient tolerance";
    }
  }

  result.params = state;
  result.params_original = state;
  for (std::size_t i = 0; i < state.vels.size(); ++i) {
    result.params_original.vels[i] =
        state.vels[i] / std::pow(result.time_map.scale, static_cast<double>(i + 1));
  }
  result.trajectory = std::move(traj);
  result.sse = energy;
  if (result.frechet_variance > 0.0) {
    result.r_squared = r_squared(result.sse, result.frechet_variance);
  } else {
    result.warnings.push_back("data variance is zero; R^2 undefined");
  }
  if (config.order >= 2 && manifold.norm(state.gamma, state.vels[0]) > 0.0) {
    result.collinearity = collinearity_diagnostic(manifold, state);
  }
  return result;
}

}  // namespace polyreg
