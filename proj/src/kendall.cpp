#include "polyreg/kendall.hpp"

#include "polyreg/sphere.hpp"

#include <algorithm>
#include <cmath>

namespace polyreg {
namespace kendall {

namespace {
constexpr double kBasisDropThreshold = 1e-10;
}

Vec flatten(const LandmarkMatrix& x) {
  Vec flat(x.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), x.rows(), x.cols()) = x;
  return flat;
}

LandmarkMatrix unflatten(const Vec& flat, Eigen::Index landmarks, Eigen::Index dim) {
  if (flat.size() != landmarks * dim) {
    throw GeometryError("kendall: flat vector has wrong size");
  }
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(flat.data(), landmarks, dim);
}

Preshape to_preshape(const LandmarkMatrix& raw) {
  if (raw.rows() * raw.cols() < 3 || raw.cols() < 1) {
    throw GeometryError("to_preshape: need m * d >= 3");
  }
  if (!raw.allFinite()) throw GeometryError("to_preshape: non-finite coordinates");
  Preshape out;
  out.landmarks = raw.rows();
  out.dim = raw.cols();
  out.centroid = raw.colwise().mean();
  const LandmarkMatrix centered = raw.rowwise() - out.centroid;
  out.scale = centered.norm();
  if (!(out.scale > 0.0)) {
    throw GeometryError("to_preshape: degenerate configuration (all points identical)");
  }
  out.coords = flatten(centered / out.scale);
  return out;
}

}  // namespace kendall

using kendall::LandmarkMatrix;

KendallShapeSpace::KendallShapeSpace(Eigen::Index landmarks, Eigen::Index dim)
    : KendallShapeSpace(landmarks, dim, Options()) {}

KendallShapeSpace::KendallShapeSpace(Eigen::Index landmarks, Eigen::Index dim,
                                     Options options)
    : m_(landmarks), d_(dim), options_(options) {
  if (landmarks < 1 || dim < 1 || landmarks * dim < 3) {
    throw std::invalid_argument("KendallShapeSpace: need m * d >= 3");
  }
}

std::string KendallShapeSpace::name() const {
  return "Sigma_" + std::to_string(d_) + "^" + std::to_string(m_);
}

kendall::Preshape KendallShapeSpace::to_preshape(const LandmarkMatrix& raw) const {
  if (raw.rows() != m_ || raw.cols() != d_) {
    throw GeometryError("to_preshape: configuration is not " + std::to_string(m_) +
                        " x " + std::to_string(d_));
  }
  return kendall::to_preshape(raw);
}

Vec KendallShapeSpace::times_transpose(const Vec& x, const Eigen::MatrixXd& w) const {
  return kendall::flatten(kendall::unflatten(x, m_, d_) * w.transpose());
}

kendall::VerticalBasis KendallShapeSpace::vertical_basis(const Vec& p) const {
  kendall::VerticalBasis basis;
  for (Eigen::Index a = 0; a < d_; ++a) {
    for (Eigen::Index b = a + 1; b < d_; ++b) {
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d_, d_);
      w(a, b) = 1.0;
      w(b, a) = -1.0;
      Vec e = times_transpose(p, w);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < basis.vectors.size(); ++k) {
          const double c = basis.vectors[k].dot(e);
          e -= c * basis.vectors[k];
          w -= c * basis.generators[k];
        }
      }
      const double len = e.norm();
      if (len < kendall::kBasisDropThreshold) continue;
      basis.vectors.push_back(e / len);
      basis.generators.push_back(w / len);
    }
  }
  return basis;
}

Vec KendallShapeSpace::horizontal_project(const Vec& p, const Vec& x) const {
  return horizontal_project(p, x, vertical_basis(p));
}

Vec KendallShapeSpace::horizontal_project(const Vec& p, const Vec& x,
                                          const kendall::VerticalBasis& basis) const {
  LandmarkMatrix xm = kendall::unflatten(x, m_, d_);
  xm.rowwise() -= xm.colwise().mean();
  Vec h = kendall::flatten(xm);
  h -= p.dot(h) * p;
  for (const auto& e : basis.vectors) h -= e.dot(h) * e;
  return h;
}

double KendallShapeSpace::vertical_residual(const Vec& p, const Vec& x) const {
  double r = 0.0;
  for (const auto& e : vertical_basis(p).vectors) r = std::max(r, std::abs(e.dot(x)));
  return r;
}

kendall::Alignment KendallShapeSpace::procrustes_align(const Vec& target,
                                                       const Vec& base) const {
  check_point_size(target, "procrustes_align");
  check_point_size(base, "procrustes_align");
  const LandmarkMatrix t = kendall::unflatten(target, m_, d_);
  const LandmarkMatrix b = kendall::unflatten(base, m_, d_);
  const Eigen::MatrixXd cross = t.transpose() * b;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd u = svd.matrixU();
  Eigen::MatrixXd v = svd.matrixV();
  if ((v * u.transpose()).determinant() < 0.0) v.col(d_ - 1) *= -1.0;
  kendall::Alignment out;
  out.rotation = v * u.transpose();
  out.aligned = kendall::flatten(t * out.rotation.transpose());
  return out;
}

Vec KendallShapeSpace::exp(const Vec& p, const Vec& v) const {
  check_point_size(p, "kendall_exp");
  check_tangent_size(v, "kendall_exp");
  if (v.isZero(0.0)) return p;
  return project_point(sphere::exp(p, horizontal_project(p, v)));
}

Vec KendallShapeSpace::exp_stepped(const Vec& p, const Vec& v, double horizon,
                                   double dt) const {
  check_point_size(p, "kendall_exp");
  check_tangent_size(v, "kendall_exp");
  if (dt <= 0.0 || horizon < 0.0) {
    throw std::invalid_argument("kendall_exp: need dt > 0 and horizon >= 0");
  }
  if (v.isZero(0.0)) return p;
  const long steps = std::lround(horizon / dt);
  Vec gamma = p;
  Vec velocity = horizontal_project(p, v);
  for (long i = 0; i < steps; ++i) {
    const Vec step = dt * velocity;
    const Vec next = project_point(sphere::exp(gamma, step));
    velocity = horizontal_project(next, sphere::transport(gamma, step, velocity));
    gamma = next;
  }
  return gamma;
}

Vec KendallShapeSpace::integrability_tensor(const Vec& /*p*/,
                                            const kendall::VerticalBasis& basis,
                                            const Vec& x, const Vec& y) const {
  Vec out = Vec::Zero(x.size());
  for (std::size_t k = 0; k < basis.vectors.size(); ++k) {
    out -= y.dot(times_transpose(x, basis.generators[k])) * basis.vectors[k];
  }
  return out;
}

Vec KendallShapeSpace::transport_rhs(const Vec& gamma, const Vec& velocity,
                                     const Vec& x) const {
  const kendall::VerticalBasis basis = vertical_basis(gamma);
  return integrability_tensor(gamma, basis, velocity, x) - x.dot(velocity) * gamma;
}

Vec KendallShapeSpace::transport(const Vec& p, const Vec& v, const Vec& x) const {
  check_point_size(p, "kendall_transport");
  check_tangent_size(v, "kendall_transport");
  check_tangent_size(x, "kendall_transport");
  const kendall::VerticalBasis basis_p = vertical_basis(p);
  const Vec vh = horizontal_project(p, v, basis_p);
  Vec y = horizontal_project(p, x, basis_p);
  const double theta = vh.norm();
  if (theta == 0.0) return y;
  const Vec dir = vh / theta;
  const auto point_at = [&](double s) -> Vec {
    return std::cos(s * theta) * p + std::sin(s * theta) * dir;
  };
  const auto velocity_at = [&](double s) -> Vec {
    return theta * (-std::sin(s * theta) * p + std::cos(s * theta) * dir);
  };

  const int n = std::max(1, static_cast<int>(std::ceil(theta / options_.max_substep)));
  const double h = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const double s = i * h;
    const Vec g_mid = point_at(s + 0.5 * h);
    const Vec u_mid = velocity_at(s + 0.5 * h);
    const Vec k1 = transport_rhs(point_at(s), velocity_at(s), y);
    const Vec k2 = transport_rhs(g_mid, u_mid, y + 0.5 * h * k1);
    const Vec k3 = transport_rhs(g_mid, u_mid, y + 0.5 * h * k2);
    const Vec k4 = transport_rhs(point_at(s + h), velocity_at(s + h), y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const Vec q = project_point(sphere::exp(p, vh));
  return horizontal_project(q, y);
}

Vec KendallShapeSpace::curvature(const Vec& p, const Vec& x, const Vec& y,
                                 const Vec& z) const {
  check_point_size(p, "kendall_curvature");
  const kendall::VerticalBasis basis = vertical_basis(p);
  const Vec xh = horizontal_project(p, x, basis);
  const Vec yh = horizontal_project(p, y, basis);
  const Vec zh = horizontal_project(p, z, basis);

  // <A_e h, V> = <h, adjoint(e, V)> for horizontal e, h and vertical V.
  const auto adjoint = [&](const Vec& e, const Vec& vertical) -> Vec {
    Vec out = Vec::Zero(e.size());
    for (std::size_t k = 0; k < basis.vectors.size(); ++k) {
      out -= vertical.dot(basis.vectors[k]) * times_transpose(e, basis.generators[k]);
    }
    return horizontal_project(p, out, basis);
  };

  const Vec a_xy = integrability_tensor(p, basis, xh, yh);
  const Vec a_yz = integrability_tensor(p, basis, yh, zh);
  const Vec a_zx = integrability_tensor(p, basis, zh, xh);
  const Vec base = sphere::curvature(xh, yh, zh);
  return horizontal_project(p, base, basis) - 2.0 * adjoint(zh, a_xy) +
         adjoint(xh, a_yz) + adjoint(yh, a_zx);
}

double KendallShapeSpace::inner(const Vec& /*p*/, const Vec& x, const Vec& y) const {
  return x.dot(y);
}

kendall::LogResult KendallShapeSpace::log_shooting(
    const Vec& p, const Vec& q, const kendall::LogOptions& options) const {
  check_point_size(p, "kendall_log");
  check_point_size(q, "kendall_log");
  kendall::LogResult result;
  result.vector = zero_tangent();
  if (p == q) return result;

  // Residual: horizontal log from the shot endpoint to the target, after
  // aligning the target to that endpoint.
  const auto residual_at = [&](const Vec& end) -> Vec {
    const Vec aligned = procrustes_align(q, end).aligned;
    return horizontal_project(end, sphere::log(end, aligned));
  };

  if (options.warm_start) {
    const Vec aligned = procrustes_align(q, p).aligned;
    result.vector = horizontal_project(p, sphere::log(p, aligned));
  }

  Vec end = exp(p, result.vector);
  Vec residual = residual_at(end);
  result.residual = residual.norm();
  double step = options.step;
  while (result.residual > options.tolerance) {
    if (result.iterations >= options.max_iterations) {
      throw NonConvergenceError("kendall_log: shooting did not converge", result.residual);
    }
    ++result.iterations;
    // Bring the endpoint discrepancy back to p along the reversed geodesic.
    const Vec arrival = transport(p, result.vector, result.vector);
    const Vec correction = transport(end, -arrival, residual);
    while (true) {
      const Vec trial = result.vector + step * correction;
      const Vec trial_end = exp(p, trial);
      const Vec trial_residual = residual_at(trial_end);
      if (trial_residual.norm() < result.residual) {
        result.vector = trial;
        end = trial_end;
        residual = trial_residual;
        result.residual = trial_residual.norm();
        break;
      }
      step *= 0.5;
      if (step < 1e-12) {
        throw NonConvergenceError("kendall_log: step size underflow", result.residual);
      }
    }
  }
  return result;
}

Vec KendallShapeSpace::log(const Vec& p, const Vec& q) const {
  return log_shooting(p, q, options_.log).vector;
}

double KendallShapeSpace::shape_distance(const Vec& p, const Vec& q) const {
  return log(p, q).norm();
}

Vec KendallShapeSpace::project_point(const Vec& p) const {
  LandmarkMatrix x = kendall::unflatten(p, m_, d_);
  x.rowwise() -= x.colwise().mean();
  return kendall::flatten(x / x.norm());
}

Vec KendallShapeSpace::project_tangent(const Vec& p, const Vec& x) const {
  return horizontal_project(p, x);
}

PointDiagnostics KendallShapeSpace::validate_point(const Vec& p) const {
  PointDiagnostics d;
  if (p.size() != point_size()) {
    d.checks.push_back({"dimension", 1.0, 0.0});
    return d;
  }
  const LandmarkMatrix x = kendall::unflatten(p, m_, d_);
  d.checks.push_back({"centering", x.colwise().mean().cwiseAbs().maxCoeff(),
                      tolerance::kKendallCentering});
  d.checks.push_back({"unit norm", std::abs(p.norm() - 1.0), tolerance::kSphere});
  return d;
}

Vec KendallShapeSpace::random_point(std::mt19937_64& rng) const {
  const Vec raw = gaussian_vector(m_ * d_, rng);
  return to_preshape(kendall::unflatten(raw, m_, d_)).coords;
}

}  // namespace polyreg
