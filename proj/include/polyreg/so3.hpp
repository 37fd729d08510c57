#pragma once

#include "polyreg/geometry.hpp"

#include <vector>

namespace polyreg {
namespace so3 {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Left-invariant metric <x, y> = x^T A y on so(3) ~ R^3.
/// A = I gives the bi-invariant metric.
class MetricSpec {
 public:
  MetricSpec();
  explicit MetricSpec(const Matrix3& a);

  const Matrix3& a() const { return a_; }
  const Matrix3& a_inverse() const { return a_inv_; }
  bool bi_invariant() const { return bi_invariant_; }

  double inner(const Vector3& x, const Vector3& y) const { return x.dot(a_ * y); }

 private:
  Matrix3 a_;
  Matrix3 a_inv_;
  bool bi_invariant_;
};

Matrix3 hat(const Vector3& x);
/// Throws GeometryError unless W is skew within 1e-9.
Vector3 vee(const Matrix3& w);

/// Rodrigues formula for expm(hat(x)).
Matrix3 expm(const Vector3& x);
/// Principal matrix logarithm of a rotation, as an axis-angle vector.
/// Throws CutLocusError for rotation angles within 1e-6 of pi.
Vector3 logm(const Matrix3& r);

/// Nearest rotation in Frobenius norm.
Matrix3 project_to_rotation(const Matrix3& m);

/// ad-dagger_x y = -A^{-1}(x cross A y).
Vector3 ad_dagger(const Vector3& x, const Vector3& y, const MetricSpec& metric);

/// Euler-Poincare right-hand side: d(omega)/dt = -A^{-1}(omega cross A omega).
Vector3 geodesic_rhs(const Vector3& omega, const MetricSpec& metric);

/// Time derivative of a left-trivialized vector parallel-transported along a
/// curve with body velocity omega.
Vector3 transport_rhs(const Vector3& x, const Vector3& omega,
                      const MetricSpec& metric);

/// Levi-Civita connection on left-invariant fields,
/// nabla_x y = 1/2 ([x, y] - ad-dagger_x y - ad-dagger_y x).
Vector3 connection(const Vector3& x, const Vector3& y, const MetricSpec& metric);

/// R(x, y)z = nabla_x nabla_y z - nabla_y nabla_x z - nabla_[x,y] z.
Vector3 curvature(const Vector3& x, const Vector3& y, const Vector3& z,
                  const MetricSpec& metric);

/// Body velocities at t = 0, dt, ..., horizon from RK4 steps of the
/// Euler-Poincare equation.
std::vector<Vector3> integrate_euler_poincare(const Vector3& omega, double horizon, double dt,
                                              const MetricSpec& metric);

/// Lie-Euler integration of a geodesic: each step right-multiplies the
/// rotation by the Rodrigues exponential of dt * hat(omega_n), then
/// re-orthonormalizes.
Matrix3 integrate_geodesic(const Matrix3& r, const Vector3& omega, double horizon,
                           double dt, const MetricSpec& metric);

Matrix3 to_matrix(const Vec& flat);
Vec to_flat(const Matrix3& r);

}  // namespace so3

/// SO(3) with a left-invariant metric. Points are row-major flattened 3x3
/// rotations; tangent vectors are left-trivialized body velocities in R^3.
class SO3 final : public Manifold {
 public:
  struct Options {
    /// Maximum norm of the algebra increment per internal integration step.
    double max_substep = 0.02;
    double log_tolerance = 1e-12;
    int log_max_iterations = 50;
  };

  SO3();
  explicit SO3(so3::MetricSpec metric);
  SO3(so3::MetricSpec metric, Options options);

  const so3::MetricSpec& metric() const { return metric_; }

  ManifoldKind kind() const override { return ManifoldKind::SO3; }
  std::string name() const override { return "SO(3)"; }
  Eigen::Index point_size() const override { return 9; }
  Eigen::Index tangent_size() const override { return 3; }

  /// Geodesic of the left-invariant metric at unit time. The bi-invariant case
  /// is closed form; otherwise the Euler-Poincare system is integrated with
  /// classical RK4 sub-steps.
  Vec exp(const Vec& p, const Vec& v) const override;
  /// Newton shooting on exp, started from the bi-invariant logarithm.
  Vec log(const Vec& p, const Vec& q) const override;
  Vec transport(const Vec& p, const Vec& v, const Vec& x) const override;
  Vec curvature(const Vec& p, const Vec& x, const Vec& y,
                const Vec& z) const override;
  double inner(const Vec& p, const Vec& x, const Vec& y) const override;

  Vec project_point(const Vec& p) const override;
  PointDiagnostics validate_point(const Vec& p) const override;
  Vec random_point(std::mt19937_64& rng) const override;

 private:
  int substeps(const so3::Vector3& v) const;

  so3::MetricSpec metric_;
  Options options_;
};

}  // namespace polyreg
