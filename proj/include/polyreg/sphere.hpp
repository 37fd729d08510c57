#pragma once

#include "polyreg/geometry.hpp"

namespace polyreg {

/// The unit sphere S^n embedded in R^{n+1}.
///
/// Closed-form exponential, log and parallel transport along great circles.
/// Curvature uses the same sign convention as the rest of the library,
/// R(X,Y)Z = <Y,Z>X - <X,Z>Y, so sectional curvature is +1.
class Sphere final : public Manifold {
 public:
  explicit Sphere(Eigen::Index n);

  Eigen::Index intrinsic_dim() const { return n_; }

  ManifoldKind kind() const override { return ManifoldKind::Sphere; }
  std::string name() const override;
  Eigen::Index point_size() const override { return n_ + 1; }
  Eigen::Index tangent_size() const override { return n_ + 1; }

  Vec exp(const Vec& p, const Vec& v) const override;
  Vec log(const Vec& p, const Vec& q) const override;
  Vec transport(const Vec& p, const Vec& v, const Vec& x) const override;
  Vec curvature(const Vec& p, const Vec& x, const Vec& y,
                const Vec& z) const override;
  double inner(const Vec& p, const Vec& x, const Vec& y) const override;

  Vec project_point(const Vec& p) const override;
  Vec project_tangent(const Vec& p, const Vec& x) const override;
  PointDiagnostics validate_point(const Vec& p) const override;
  Vec random_point(std::mt19937_64& rng) const override;

 private:
  Eigen::Index n_;
};

namespace sphere {

/// Below this angle the closed forms switch to Taylor expansions.
inline constexpr double kSmallAngle = 1e-8;
/// Log rejects pairs with p.q <= -1 + kAntipodalMargin.
inline constexpr double kAntipodalMargin = 1e-9;
/// Non-tangent input residual that is treated as a caller error.
inline constexpr double kTangencyTolerance = 1e-6;

// Dimension-agnostic kernels, shared with the Kendall preshape sphere.
Vec exp(const Vec& p, const Vec& v);
Vec log(const Vec& p, const Vec& q);
Vec transport(const Vec& p, const Vec& v, const Vec& x);
Vec curvature(const Vec& x, const Vec& y, const Vec& z);

}  // namespace sphere

}  // namespace polyreg
