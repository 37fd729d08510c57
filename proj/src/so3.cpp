#include "polyreg/so3.hpp"

#include <algorithm>
#include <cmath>

namespace polyreg {
namespace so3 {

MetricSpec::MetricSpec() : MetricSpec(Matrix3::Identity()) {}

MetricSpec::MetricSpec(const Matrix3& a) : a_(a) {
  if (!a.allFinite()) throw std::invalid_argument("MetricSpec: A must be finite");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("MetricSpec: A must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(a);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("MetricSpec: A must be positive definite");
  }
  a_inv_ = a.inverse();
  bi_invariant_ = (a - Matrix3::Identity()).cwiseAbs().maxCoeff() == 0.0;
}

Matrix3 hat(const Vector3& x) {
  Matrix3 w;
  w << 0.0, -x.z(), x.y(),
       x.z(), 0.0, -x.x(),
      -x.y(), x.x(), 0.0;
  return w;
}

Vector3 vee(const Matrix3& w) {
  if ((w + w.transpose()).norm() > 1e-9) {
    throw GeometryError("so3_vee: matrix is not skew-symmetric");
  }
  return {w(2, 1), w(0, 2), w(1, 0)};
}

Matrix3 expm(const Vector3& x) {
  const double theta = x.norm();
  const Matrix3 k = hat(x);
  if (theta < 1e-8) return Matrix3::Identity() + k + 0.5 * k * k;
  return Matrix3::Identity() + (std::sin(theta) / theta) * k +
         ((1.0 - std::cos(theta)) / (theta * theta)) * k * k;
}

Vector3 logm(const Matrix3& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const Vector3 axis{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  const double s = 0.5 * axis.norm();
  const double theta = std::atan2(s, c);
  if (theta > M_PI - 1e-6) {
    throw CutLocusError("so3_logm: rotation angle is at the cut locus");
  }
  if (s < 1e-8) return 0.5 * (1.0 + s * s / 6.0) * axis;
  return (theta / (2.0 * s)) * axis;
}

Matrix3 project_to_rotation(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 u = svd.matrixU();
  const Matrix3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

Vector3 ad_dagger(const Vector3& x, const Vector3& y, const MetricSpec& metric) {
  return -metric.a_inverse() * x.cross(metric.a() * y);
}

Vector3 geodesic_rhs(const Vector3& omega, const MetricSpec& metric) {
  return ad_dagger(omega, omega, metric);
}

Vector3 transport_rhs(const Vector3& x, const Vector3& omega,
                      const MetricSpec& metric) {
  const Matrix3& a = metric.a();
  return 0.5 * (metric.a_inverse() * (-x.cross(a * omega) - omega.cross(a * x)) -
                omega.cross(x));
}

Vector3 connection(const Vector3& x, const Vector3& y, const MetricSpec& metric) {
  return 0.5 * (x.cross(y) - ad_dagger(x, y, metric) - ad_dagger(y, x, metric));
}

Vector3 curvature(const Vector3& x, const Vector3& y, const Vector3& z,
                  const MetricSpec& metric) {
  return connection(x, connection(y, z, metric), metric) -
         connection(y, connection(x, z, metric), metric) -
         connection(x.cross(y), z, metric);
}

std::vector<Vector3> integrate_euler_poincare(const Vector3& omega, double horizon, double dt,
                                              const MetricSpec& metric) {
  if (dt <= 0.0 || horizon < 0.0) {
    throw std::invalid_argument("so3_exp: need dt > 0 and horizon >= 0");
  }
  const long steps = std::lround(horizon / dt);
  std::vector<Vector3> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  Vector3 w = omega;
  out.push_back(w);
  for (long i = 0; i < steps; ++i) {
    const Vector3 k1 = geodesic_rhs(w, metric);
    const Vector3 k2 = geodesic_rhs(w + 0.5 * dt * k1, metric);
    const Vector3 k3 = geodesic_rhs(w + 0.5 * dt * k2, metric);
    const Vector3 k4 = geodesic_rhs(w + dt * k3, metric);
    w += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(w);
  }
  return out;
}

Matrix3 integrate_geodesic(const Matrix3& r, const Vector3& omega, double horizon,
                           double dt, const MetricSpec& metric) {
  Matrix3 rot = r;
  if (omega.isZero(0.0)) return rot;
  const std::vector<Vector3> w = integrate_euler_poincare(omega, horizon, dt, metric);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    rot = project_to_rotation(rot * expm(dt * w[i]));
  }
  return rot;
}

Matrix3 to_matrix(const Vec& flat) {
  if (flat.size() != 9) throw GeometryError("so3: point must have 9 coordinates");
  return Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(flat.data());
}

Vec to_flat(const Matrix3& r) {
  Vec flat(9);
  Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(flat.data()) = r;
  return flat;
}

}  // namespace so3

using so3::Matrix3;
using so3::Vector3;

SO3::SO3() : SO3(so3::MetricSpec()) {}

SO3::SO3(so3::MetricSpec metric) : SO3(std::move(metric), Options()) {}

SO3::SO3(so3::MetricSpec metric, Options options)
    : metric_(std::move(metric)), options_(options) {}

int SO3::substeps(const Vector3& v) const {
  return std::max(1, static_cast<int>(std::ceil(v.norm() / options_.max_substep)));
}

Vec SO3::exp(const Vec& p, const Vec& v) const {
  check_point_size(p, "so3_exp");
  check_tangent_size(v, "so3_exp");
  const Vector3 w0 = v;
  if (w0.isZero(0.0)) return p;
  const Matrix3 r0 = so3::to_matrix(p);
  if (metric_.bi_invariant()) return so3::to_flat(r0 * so3::expm(w0));

  const int n = substeps(w0);
  const double h = 1.0 / n;
  Matrix3 r = r0;
  Vector3 w = w0;
  for (int i = 0; i < n; ++i) {
    const Matrix3 kr1 = r * so3::hat(w);
    const Vector3 kw1 = so3::geodesic_rhs(w, metric_);
    const Matrix3 r2 = r + 0.5 * h * kr1;
    const Vector3 w2 = w + 0.5 * h * kw1;
    const Matrix3 kr2 = r2 * so3::hat(w2);
    const Vector3 kw2 = so3::geodesic_rhs(w2, metric_);
    const Matrix3 r3 = r + 0.5 * h * kr2;
    const Vector3 w3 = w + 0.5 * h * kw2;
    const Matrix3 kr3 = r3 * so3::hat(w3);
    const Vector3 kw3 = so3::geodesic_rhs(w3, metric_);
    const Matrix3 r4 = r + h * kr3;
    const Vector3 w4 = w + h * kw3;
    const Matrix3 kr4 = r4 * so3::hat(w4);
    const Vector3 kw4 = so3::geodesic_rhs(w4, metric_);
    r = so3::project_to_rotation(r + (h / 6.0) * (kr1 + 2.0 * kr2 + 2.0 * kr3 + kr4));
    w += (h / 6.0) * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4);
  }
  return so3::to_flat(r);
}

Vec SO3::log(const Vec& p, const Vec& q) const {
  check_point_size(p, "so3_log");
  check_point_size(q, "so3_log");
  const Matrix3 r = so3::to_matrix(p);
  const Matrix3 target = so3::to_matrix(q);
  Vector3 w = so3::logm(r.transpose() * target);
  if (metric_.bi_invariant()) return w;

  const auto residual = [&](const Vector3& omega) -> Vector3 {
    return so3::logm(so3::to_matrix(exp(p, omega)).transpose() * target);
  };

  Vector3 res = residual(w);
  for (int iter = 0; iter < options_.log_max_iterations; ++iter) {
    if (res.norm() < options_.log_tolerance) return w;
    Matrix3 jac;
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      const Vector3 e = h * Vector3::Unit(j);
      jac.col(j) = (residual(w + e) - residual(w - e)) / (2.0 * h);
    }
    const Vector3 step = jac.partialPivLu().solve(res);
    double scale = 1.0;
    bool improved = false;
    for (int halvings = 0; halvings < 30; ++halvings) {
      const Vector3 trial = w - scale * step;
      const Vector3 trial_res = residual(trial);
      if (trial_res.norm() < res.norm()) {
        w = trial;
        res = trial_res;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;
  }
  if (res.norm() < 1e-9) return w;
  throw NonConvergenceError("so3_log: shooting did not converge", res.norm());
}

Vec SO3::transport(const Vec& p, const Vec& v, const Vec& x) const {
  check_point_size(p, "so3_transport");
  check_tangent_size(v, "so3_transport");
  check_tangent_size(x, "so3_transport");
  const Vector3 w0 = v;
  const Vector3 x0 = x;
  if (w0.isZero(0.0)) return x;
  if (metric_.bi_invariant()) return so3::expm(-0.5 * w0) * x0;

  const int n = substeps(w0);
  const double h = 1.0 / n;
  Vector3 w = w0;
  Vector3 y = x0;
  for (int i = 0; i < n; ++i) {
    const Vector3 kw1 = so3::geodesic_rhs(w, metric_);
    const Vector3 ky1 = so3::transport_rhs(y, w, metric_);
    const Vector3 w2 = w + 0.5 * h * kw1;
    const Vector3 y2 = y + 0.5 * h * ky1;
    const Vector3 kw2 = so3::geodesic_rhs(w2, metric_);
    const Vector3 ky2 = so3::transport_rhs(y2, w2, metric_);
    const Vector3 w3 = w + 0.5 * h * kw2;
    const Vector3 y3 = y + 0.5 * h * ky2;
    const Vector3 kw3 = so3::geodesic_rhs(w3, metric_);
    const Vector3 ky3 = so3::transport_rhs(y3, w3, metric_);
    const Vector3 w4 = w + h * kw3;
    const Vector3 y4 = y + h * ky3;
    const Vector3 kw4 = so3::geodesic_rhs(w4, metric_);
    const Vector3 ky4 = so3::transport_rhs(y4, w4, metric_);
    w += (h / 6.0) * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4);
    y += (h / 6.0) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4);
  }
  return y;
}

Vec SO3::curvature(const Vec& /*p*/, const Vec& x, const Vec& y,
                   const Vec& z) const {
  check_tangent_size(x, "so3_curvature");
  check_tangent_size(y, "so3_curvature");
  check_tangent_size(z, "so3_curvature");
  return so3::curvature(x, y, z, metric_);
}

double SO3::inner(const Vec& /*p*/, const Vec& x, const Vec& y) const {
  return metric_.inner(x, y);
}

Vec SO3::project_point(const Vec& p) const {
  return so3::to_flat(so3::project_to_rotation(so3::to_matrix(p)));
}

PointDiagnostics SO3::validate_point(const Vec& p) const {
  PointDiagnostics d;
  if (p.size() != 9) {
    d.checks.push_back({"dimension", 1.0, 0.0});
    return d;
  }
  const Matrix3 r = so3::to_matrix(p);
  d.checks.push_back({"orthogonality",
                      (r.transpose() * r - Matrix3::Identity()).cwiseAbs().maxCoeff(),
                      tolerance::kSO3});
  d.checks.push_back({"determinant", std::abs(r.determinant() - 1.0), tolerance::kSO3});
  return d;
}

Vec SO3::random_point(std::mt19937_64& rng) const {
  return so3::to_flat(so3::expm(gaussian_vector(3, rng)));
}

}  // namespace polyreg
